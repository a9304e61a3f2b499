use std::collections::HashMap;

use serde::Serialize;

use super::{ModelError, ModelSpec};
use crate::expr::{BinOp, Expr};
use crate::numerics::Mat;

/// New coordinates `q' = T (q − c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineChart {
    pub t: Mat,
    pub offset: Vec<f64>,
    /// Names of the new coordinates; the old names are reused when absent.
    pub coords: Option<Vec<String>>,
}

impl AffineChart {
    pub fn new(t: Mat, offset: Vec<f64>) -> AffineChart {
        AffineChart {
            t,
            offset,
            coords: None,
        }
    }

    pub fn identity(n: usize) -> AffineChart {
        AffineChart::new(Mat::identity(n), vec![0.0; n])
    }

    /// Pure translation putting `center` at the origin.
    pub fn centered_at(center: &[f64]) -> AffineChart {
        AffineChart::new(Mat::identity(center.len()), center.to_vec())
    }

    pub fn with_coords(mut self, coords: Vec<String>) -> AffineChart {
        self.coords = Some(coords);
        self
    }

    fn check(&self) -> Result<Mat, ModelError> {
        let n = self.offset.len();
        if self.t.rows() != n || self.t.cols() != n {
            return Err(ModelError::Format(format!(
                "chart T is {}x{} but offset has {n} entries",
                self.t.rows(),
                self.t.cols()
            )));
        }
        let det = self.t.det()?;
        if det == 0.0 || !det.is_finite() {
            return Err(ModelError::SingularChart(format!("det T = {det}")));
        }
        self.t
            .inverse()
            .map_err(|e| ModelError::SingularChart(e.to_string()))
    }

    /// q' = T (q − c)
    pub fn forward(&self, q: &[f64]) -> Vec<f64> {
        let shifted: Vec<f64> = q.iter().zip(&self.offset).map(|(a, c)| a - c).collect();
        self.t.mul_vec(&shifted)
    }

    /// q = T⁻¹ q' + c
    pub fn backward(&self, q_new: &[f64]) -> Result<Vec<f64>, ModelError> {
        let t_inv = self.check()?;
        Ok(t_inv
            .mul_vec(q_new)
            .iter()
            .zip(&self.offset)
            .map(|(a, c)| a + c)
            .collect())
    }
}

/// Σ coef·expr (+ constant), dropping zero terms.
fn lincomb(terms: impl IntoIterator<Item = (f64, Expr)>, constant: f64) -> Expr {
    let mut acc: Option<Expr> = None;
    for (coef, e) in terms {
        if coef == 0.0 {
            continue;
        }
        let term = if coef == 1.0 {
            e
        } else {
            Expr::Binary(BinOp::Mul, Box::new(Expr::Num(coef)), Box::new(e))
        };
        acc = Some(match acc {
            None => term,
            Some(prev) => Expr::Binary(BinOp::Add, Box::new(prev), Box::new(term)),
        });
    }
    match (acc, constant) {
        (None, c) => Expr::Num(c),
        (Some(e), c) if c == 0.0 => e,
        (Some(e), c) => Expr::Binary(BinOp::Add, Box::new(e), Box::new(Expr::Num(c))),
    }
}

/// Re-expresses `spec` in the coordinates of `chart`: the inverse mass
/// matrix is pushed forward (T ℍ Tᵗ), h is composed with the inverse map and
/// the actuation rows are pulled back (ϑ T⁻¹).
pub fn apply_affine(spec: &ModelSpec, chart: &AffineChart) -> Result<ModelSpec, ModelError> {
    let n = spec.n();
    if chart.offset.len() != n {
        return Err(ModelError::Format(format!(
            "chart has dimension {}, model has {n}",
            chart.offset.len()
        )));
    }
    let t_inv = chart.check()?;
    let t = &chart.t;
    let new_coords = chart
        .coords
        .clone()
        .unwrap_or_else(|| spec.coords().to_vec());
    if new_coords.len() != n {
        return Err(ModelError::Format(format!(
            "chart names {} coordinates, model has {n}",
            new_coords.len()
        )));
    }

    let sub: HashMap<String, Expr> = spec
        .coords()
        .iter()
        .enumerate()
        .map(|(i, old)| {
            let e = lincomb(
                (0..n).map(|j| (t_inv[(i, j)], Expr::Var(new_coords[j].clone()))),
                chart.offset[i],
            );
            (old.clone(), e)
        })
        .collect();

    let h_old: Vec<Vec<Expr>> = spec
        .mass_inverse()
        .iter()
        .map(|row| row.iter().map(|e| e.substitute(&sub)).collect())
        .collect();
    let mass_inverse: Vec<Vec<Expr>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    lincomb(
                        (0..n).flat_map(|k| {
                            let h_old = &h_old;
                            (0..n).map(move |l| (t[(i, k)] * t[(j, l)], h_old[k][l].clone()))
                        }),
                        0.0,
                    )
                })
                .collect()
        })
        .collect();

    let actuation: Vec<Vec<Expr>> = spec
        .actuation()
        .iter()
        .map(|row| {
            let row_sub: Vec<Expr> = row.iter().map(|e| e.substitute(&sub)).collect();
            (0..n)
                .map(|j| lincomb((0..n).map(|i| (t_inv[(i, j)], row_sub[i].clone())), 0.0))
                .collect()
        })
        .collect();

    ModelSpec::new(
        new_coords,
        spec.constants().clone(),
        mass_inverse,
        spec.potential().substitute(&sub),
        actuation,
        chart.forward(spec.equilibrium()),
    )
}

/// Coordinate reordering under which the first n − m coordinate directions
/// span a complement of the actuated directions at the equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChartAdaptation {
    /// New coordinate `i` is old coordinate `permutation[i]`.
    pub permutation: Vec<usize>,
    /// Determinant of the stacked matrix `[ℍ_{μ·}(q₀); ϑ(q₀)]` after reordering.
    pub determinant: f64,
    /// Product of the stacked rows' ∞-norms; admissible iff |det| > 1e-10·scale.
    pub scale: f64,
}

impl ChartAdaptation {
    pub fn is_identity(&self) -> bool {
        self.permutation.iter().enumerate().all(|(i, &p)| i == p)
    }
}

const COMPLEMENT_TOL: f64 = 1e-10;

/// Determinant and scale of the stacked complementarity matrix for `perm`:
/// the first n − m rows are rows `perm[0..n−m]` of ℍ_{ij}(q₀) (columns in
/// `perm` order), the last m rows the actuation coefficients.
pub fn complementarity(spec: &ModelSpec, perm: &[usize]) -> Result<(f64, f64), ModelError> {
    let q0 = spec.equilibrium();
    let h_lower = spec.mass_inverse_at(q0)?.inverse()?;
    let theta = spec.actuation_at(q0)?;
    Ok(stacked_det(&h_lower, &theta, perm)?)
}

fn stacked_det(
    h_lower: &Mat,
    theta: &Mat,
    perm: &[usize],
) -> Result<(f64, f64), crate::numerics::NumericsError> {
    let n = h_lower.rows();
    let d = n - theta.rows();
    let stacked = Mat::from_fn(n, n, |r, c| {
        if r < d {
            h_lower[(perm[r], perm[c])]
        } else {
            theta[(r - d, perm[c])]
        }
    });
    let scale: f64 = (0..n)
        .map(|r| stacked.row(r).iter().map(|v| v.abs()).fold(0.0, f64::max))
        .product();
    Ok((stacked.det()?, scale))
}

fn next_combination(comb: &mut [usize], n: usize) -> bool {
    let k = comb.len();
    for i in (0..k).rev() {
        if comb[i] < n - k + i {
            comb[i] += 1;
            for j in i + 1..k {
                comb[j] = comb[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Finds the lexicographically first admissible coordinate permutation
/// (the identity whenever it is admissible).
///
/// Admissibility only depends on which coordinates come first, so the
/// search walks (n − m)-subsets in lexicographic order, each completed to
/// `sorted(subset) ++ sorted(rest)`.
pub fn adapt_chart(spec: &ModelSpec) -> Result<ChartAdaptation, ModelError> {
    let n = spec.n();
    let d = spec.dou();
    let q0 = spec.equilibrium();
    let h_lower = spec.mass_inverse_at(q0)?.inverse()?;
    let theta = spec.actuation_at(q0)?;

    let mut comb: Vec<usize> = (0..d).collect();
    loop {
        let mut perm = comb.clone();
        perm.extend((0..n).filter(|i| !comb.contains(i)));
        let (det, scale) = stacked_det(&h_lower, &theta, &perm)?;
        if det.abs() > COMPLEMENT_TOL * scale {
            return Ok(ChartAdaptation {
                permutation: perm,
                determinant: det,
                scale,
            });
        }
        if !next_combination(&mut comb, n) {
            return Err(ModelError::NoAdmissiblePermutation);
        }
    }
}
