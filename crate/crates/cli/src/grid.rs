//! CSV export of ĥ, u and K on a regular grid.

use std::fmt::Write;

use eshape_core::Synthesis;
use rayon::prelude::*;

pub struct Table {
    pub csv: String,
    pub rows: usize,
    pub failed: usize,
}

/// Points of [−r, r]^n with `steps` values per axis, first coordinate
/// varying slowest.
pub fn points(n: usize, half_width: f64, steps: usize) -> Vec<Vec<f64>> {
    let axis: Vec<f64> = if steps == 1 {
        vec![0.0]
    } else {
        (0..steps)
            .map(|i| half_width * (2 * i as i64 + 1 - steps as i64) as f64 / (steps - 1) as f64)
            .collect()
    };
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    out
}

/// Shortest round-trip form, in exponent notation for very small or large
/// magnitudes.
fn number(x: f64) -> String {
    let a = x.abs();
    if x.is_finite() && a != 0.0 && !(1e-4..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

fn header(n: usize, d: usize) -> String {
    let mut cols: Vec<String> = (1..=n).map(|i| format!("q{i}")).collect();
    cols.push("hhat".into());
    cols.extend((1..=d).map(|i| format!("u{i}")));
    if d == 1 {
        cols.push("K".into());
    } else {
        for i in 1..=d {
            cols.extend((i..=d).map(|j| format!("K{i}{j}")));
        }
    }
    cols.join(",")
}

/// ĥ, u and the upper triangle of K at `q`, or `None` if any fails.
fn values(s: &Synthesis, q: &[f64]) -> Option<Vec<f64>> {
    let mut row = vec![s.hhat.eval(q).ok()?];
    row.extend(s.hhat.u_at(q).ok()?);
    let k = s.kinetic.matrix_at(q).ok()?;
    let d = k.rows();
    for i in 0..d {
        row.extend((i..d).map(|j| k[(i, j)]));
    }
    row.iter().all(|v| v.is_finite()).then_some(row)
}

pub fn export(s: &Synthesis, half_width: f64, steps: usize) -> Table {
    let n = s.spec.n();
    let d = s.spec.dou();
    let width = 1 + d + d * (d + 1) / 2;
    let pts = points(n, half_width, steps);
    let evaluated: Vec<Option<Vec<f64>>> = pts.par_iter().map(|q| values(s, q)).collect();

    let mut csv = header(n, d);
    csv.push('\n');
    let mut failed = 0;
    for (q, vals) in pts.iter().zip(&evaluated) {
        let fields: Vec<String> = match vals {
            Some(v) => q.iter().chain(v).map(|&x| number(x)).collect(),
            None => {
                failed += 1;
                q.iter()
                    .map(|&x| number(x))
                    .chain(std::iter::repeat_n("nan".to_string(), width))
                    .collect()
            }
        };
        writeln!(csv, "{}", fields.join(",")).unwrap();
    }
    Table {
        csv,
        rows: pts.len(),
        failed,
    }
}
