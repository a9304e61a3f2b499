mod common;

use std::collections::HashMap;

use common::*;
use eshape_core::expr::{BinOp, Func};
use eshape_core::numerics::{
    fd_grad, min_eigen_sym, quad_plain, solve_linear, Mat, QuadSpec, DEFAULT_FD_STEP,
};
use eshape_core::{apply_affine, parse, synthesize, AffineChart, Env, Expr, PipelineOptions};
use proptest::prelude::*;

const NAMES: [&str; 3] = ["x", "y", "z"];

/// Random trees that stay finite and differentiable on [−1, 1]³.
fn smooth_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-3.0..3.0f64).prop_map(|v| Expr::Num((v * 100.0).round() / 100.0)),
        (0..3usize).prop_map(|i| Expr::var(NAMES[i])),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| bin(BinOp::Add, a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| bin(BinOp::Sub, a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| bin(BinOp::Mul, a, b)),
            // 1/(2 + sin) keeps the denominator away from zero
            (inner.clone(), inner.clone()).prop_map(|(a, b)| bin(
                BinOp::Div,
                a,
                bin(
                    BinOp::Add,
                    Expr::Num(2.0),
                    Expr::Call(Func::Sin, Box::new(b))
                )
            )),
            (inner.clone(), 0..4u32).prop_map(|(a, k)| bin(BinOp::Pow, a, Expr::Num(k as f64))),
            inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
            inner
                .clone()
                .prop_map(|a| Expr::Call(Func::Sin, Box::new(a))),
            inner
                .clone()
                .prop_map(|a| Expr::Call(Func::Cos, Box::new(a))),
            inner.prop_map(|a| Expr::Call(Func::Exp, Box::new(Expr::Call(Func::Sin, Box::new(a))))),
        ]
    })
}

fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
    Expr::Binary(op, Box::new(a), Box::new(b))
}

fn env_at(p: &[f64]) -> Env {
    NAMES.iter().zip(p).map(|(n, v)| (*n, *v)).collect()
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, 3)
}

/// Five-point central difference with one Richardson step; accurate enough
/// to serve as an oracle on strongly oscillating random trees.
fn central(e: &Expr, p: &[f64], i: usize) -> Option<f64> {
    let five_point = |h: f64| -> Option<f64> {
        let mut x = p.to_vec();
        let mut at = |s: f64| {
            x[i] = p[i] + s * h;
            e.eval(&env_at(&x)).ok()
        };
        let (p2, p1, m1, m2) = (at(2.0)?, at(1.0)?, at(-1.0)?, at(-2.0)?);
        Some((-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * h))
    };
    let h = 1e-3 * (1.0 + p[i].abs());
    let coarse = five_point(h)?;
    let fine = five_point(h / 2.0)?;
    Some((16.0 * fine - coarse) / 15.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn symbolic_derivative_agrees_with_central_difference(e in smooth_expr(), p in point()) {
        for (i, name) in NAMES.iter().enumerate() {
            let Some(fd) = central(&e, &p, i) else { continue };
            let Ok(exact) = e.diff(name).eval(&env_at(&p)) else { continue };
            prop_assert!((exact - fd).abs() / (1.0 + fd.abs()) <= 1e-6, "{e} d/d{name} at {p:?}: {exact} vs {fd}");
        }
    }

    #[test]
    fn printing_and_parsing_round_trips(e in smooth_expr(), points in prop::collection::vec(point(), 5)) {
        let printed = e.to_string();
        let reparsed = parse(&printed).unwrap();
        prop_assert_eq!(parse(&reparsed.to_string()).unwrap(), reparsed.clone());
        for p in points {
            if let (Ok(a), Ok(b)) = (e.eval(&env_at(&p)), reparsed.eval(&env_at(&p))) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{printed}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn quadrature_is_additive(
        a in -2.0..0.0f64, c in 0.0..1.0f64, b in 1.0..3.0f64,
        amp in -2.0..2.0f64, freq in 0.5..6.0f64, quadr in -1.0..1.0f64, rate in -1.0..1.0f64,
    ) {
        let f = |t: f64| amp * (freq * t).sin() + quadr * t * t + (rate * t).exp();
        let spec = QuadSpec::default();
        let whole = quad_plain(f, a, b, &spec).unwrap();
        let parts = quad_plain(f, a, c, &spec).unwrap() + quad_plain(f, c, b, &spec).unwrap();
        let tol = 10.0 * (spec.abs_tol + spec.rel_tol * whole.abs());
        prop_assert!((whole - parts).abs() <= tol, "{whole} vs {parts}");
    }

    #[test]
    fn eigenvalues_survive_givens_rotations(
        diag in prop::collection::vec(-5.0..5.0f64, 4),
        rotations in prop::collection::vec((0..4usize, 0..4usize, -3.2..3.2f64), 1..12),
    ) {
        let n = diag.len();
        let mut q = Mat::identity(n);
        for (i, j, theta) in rotations {
            if i == j {
                continue;
            }
            let g = Mat::from_fn(n, n, |r, c| match (r, c) {
                _ if r == i && c == i || r == j && c == j => theta.cos(),
                _ if r == i && c == j => -theta.sin(),
                _ if r == j && c == i => theta.sin(),
                _ if r == c => 1.0,
                _ => 0.0,
            });
            q = g.matmul(&q);
        }
        let d = Mat::from_fn(n, n, |r, c| if r == c { diag[r] } else { 0.0 });
        let m = q.transpose().matmul(&d).matmul(&q);
        let expected = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert!((min_eigen_sym(&m).unwrap() - expected).abs() <= 1e-9);
    }

    #[test]
    fn chart_round_trip_and_positivity(
        t in prop::collection::vec(-1.0..1.0f64, 4),
        c in prop::collection::vec(-0.5..0.5f64, 2),
        q in prop::collection::vec(-1.0..1.0f64, 2),
    ) {
        let t = Mat::from_fn(2, 2, |i, j| t[i * 2 + j] + if i == j { 2.5 } else { 0.0 });
        let chart = AffineChart::new(t, c.clone());
        let back = chart.backward(&chart.forward(&q)).unwrap();
        prop_assert!((back[0] - q[0]).abs() <= 1e-12 && (back[1] - q[1]).abs() <= 1e-12);

        let spec = flat2();
        let moved = apply_affine(&spec, &AffineChart::new(chart.t.clone(), vec![0.0, 0.0])).unwrap();
        let h = moved.mass_inverse_at(moved.equilibrium()).unwrap();
        prop_assert!(min_eigen_sym(&h).unwrap() > 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn solve_passes_backward_check(
        entries in prop::collection::vec(-1.0..1.0f64, 16),
        b in prop::collection::vec(-10.0..10.0f64, 4),
    ) {
        let a = Mat::from_fn(4, 4, |i, j| entries[i * 4 + j] + if i == j { 5.0 } else { 0.0 });
        let x = solve_linear(&a, &b).unwrap();
        let r = a.mul_vec(&x);
        let xn = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let bn = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..4 {
            prop_assert!((r[i] - b[i]).abs() <= 1e-12 * (a.norm_inf() * xn + bn));
        }
    }
}

fn model_expressions() -> Vec<(Vec<String>, Env, Expr)> {
    let mut out = Vec::new();
    for spec in [
        pendulum(3.0),
        flat2(),
        flat3(),
        coupled_quadratic(),
        curved3(),
        curved3_m1(),
    ] {
        let mut exprs: Vec<Expr> = spec.mass_inverse().iter().flatten().cloned().collect();
        exprs.push(spec.potential().clone());
        exprs.extend(spec.actuation().iter().flatten().cloned());
        for e in exprs {
            out.push((spec.coords().to_vec(), spec.constants().clone(), e));
        }
    }
    out
}

#[test]
fn model_expression_derivatives_agree_with_central_differences() {
    let mut r = rng(21);
    let exprs = model_expressions();
    for k in 0..1000 {
        let (coords, consts, e) = &exprs[k % exprs.len()];
        let p = random_point(&mut r, coords.len(), 0.3);
        let env_at = |x: &[f64]| {
            let mut env = consts.clone();
            for (n, v) in coords.iter().zip(x) {
                env.set(n.clone(), *v);
            }
            env
        };
        for (i, name) in coords.iter().enumerate() {
            let exact = e.diff(name).eval(&env_at(&p)).unwrap();
            let h = DEFAULT_FD_STEP * (1.0 + p[i].abs());
            let mut x = p.clone();
            x[i] += h;
            let fp = e.eval(&env_at(&x)).unwrap();
            x[i] -= 2.0 * h;
            let fm = e.eval(&env_at(&x)).unwrap();
            let fd = (fp - fm) / (2.0 * h);
            assert!(
                (exact - fd).abs() / (1.0 + fd.abs()) <= 1e-6,
                "{e} d/d{name}"
            );
        }
    }
}

#[test]
fn evaluation_is_deterministic_and_substitution_composes() {
    let e = parse("A*cos((1+g)*x - y)^2 / (1 + x^2)").unwrap();
    let env = Env::new()
        .with("A", 2.0)
        .with("g", 3.0)
        .with("x", 0.3)
        .with("y", -0.1);
    assert_eq!(
        e.eval(&env).unwrap().to_bits(),
        e.eval(&env).unwrap().to_bits()
    );
    let sub: HashMap<String, Expr> = [("x".to_string(), parse("2*t").unwrap())].into();
    let env_t = Env::new()
        .with("A", 2.0)
        .with("g", 3.0)
        .with("t", 0.15)
        .with("y", -0.1);
    assert!((e.substitute(&sub).eval(&env_t).unwrap() - e.eval(&env).unwrap()).abs() < 1e-15);
}

#[test]
fn hhat_gradient_matches_u_on_gradient_consistent_models() {
    let s = synthesize(&coupled_quadratic(), &PipelineOptions::default()).unwrap();
    let mut r = rng(22);
    for _ in 0..50 {
        let q = random_point(&mut r, 2, 0.5);
        let grad = fd_grad(|x| s.hhat.eval(x), &q, DEFAULT_FD_STEP).unwrap();
        let u = s.hhat.u_at(&q).unwrap();
        assert!((grad[0] - u[0]).abs() <= 1e-6);
    }
}
