#![allow(dead_code)]

use std::sync::Arc;

use eshape_core::builtin;
use eshape_core::model::ModelFile;
use eshape_core::{parse, Env, Expr, ModelSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const A: f64 = 2.0;
pub const B: f64 = 1.0;
pub const C: f64 = 1.0;
pub const D1: f64 = 1.0;

pub fn e(s: &str) -> Expr {
    parse(s).unwrap()
}

/// Built-in double pendulum in the (x, y) chart with chart parameter `gamma`.
pub fn pendulum(gamma: f64) -> Arc<ModelSpec> {
    let text = builtin::model_text("double-pendulum").unwrap();
    Arc::new(
        ModelFile::parse(&text)
            .unwrap()
            .build(&[("g".to_string(), gamma)])
            .unwrap(),
    )
}

pub fn b(x: f64, y: f64, gamma: f64) -> f64 {
    B * ((1.0 + gamma) * x - y).cos()
}

/// K(x, y) = |A − bγ|^{p} / |A − b(0, y)γ|^{p} with ξ ≡ 1, from the
/// antiderivative ∫G dt = −p ln|A − bγ|.
pub fn k_closed(x: f64, y: f64, gamma: f64, p: f64) -> f64 {
    (A - b(x, y, gamma) * gamma).abs().powf(p) / (A - b(0.0, y, gamma) * gamma).abs().powf(p)
}

/// Box |x|, |y| ≤ 0.15, where |4x − y| ≤ 0.75 stays clear of the singular
/// set 2 − 3cos(4x − y) = 0 of the γ = 3 pendulum.
pub const IN_DOMAIN: f64 = 0.15;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_point(rng: &mut ChaCha8Rng, n: usize, half_width: f64) -> Vec<f64> {
    (0..n)
        .map(|_| rng.gen_range(-half_width..=half_width))
        .collect()
}

fn spec(
    coords: &[&str],
    constants: Env,
    mass_inverse: &[&[&str]],
    h: &str,
    actuation: &[&[&str]],
) -> Arc<ModelSpec> {
    let n = coords.len();
    Arc::new(
        ModelSpec::new(
            coords.iter().map(|s| s.to_string()).collect(),
            constants,
            mass_inverse
                .iter()
                .map(|r| r.iter().map(|s| e(s)).collect())
                .collect(),
            e(h),
            actuation
                .iter()
                .map(|r| r.iter().map(|s| e(s)).collect())
                .collect(),
            vec![0.0; n],
        )
        .unwrap(),
    )
}

/// Constant metric, constant actuation, n = 2.
pub fn flat2() -> Arc<ModelSpec> {
    spec(
        &["x", "y"],
        Env::new(),
        &[&["2", "0.5"], &["0.5", "1"]],
        "1 - cos(x) + y^2",
        &[&["0", "1"]],
    )
}

/// Constant metric, n = 3, m = 1, h quadratic (so u is exactly a gradient).
pub fn flat3() -> Arc<ModelSpec> {
    spec(
        &["q1", "q2", "q3"],
        Env::new(),
        &[&["1", "0", "0"], &["0", "1", "0"], &["0", "0", "1"]],
        "q1^2 + q1*q2 + 2*q2^2 + q3^2",
        &[&["0", "0", "1"]],
    )
}

/// ℍ = I, ϑ = (0.5, 1), h = (x² + 0.8xy + y²)/2: u = (0.8x − 0.1y)ξ.
pub fn coupled_quadratic() -> Arc<ModelSpec> {
    spec(
        &["x", "y"],
        Env::new(),
        &[&["1", "0"], &["0", "1"]],
        "(x^2 + 0.8*x*y + y^2)/2",
        &[&["0.5", "1"]],
    )
}

/// Configuration-dependent metric and actuation, n = 3, m = 2.
pub fn curved3() -> Arc<ModelSpec> {
    spec(
        &["a", "b", "c"],
        Env::new().with("k", 0.3),
        &[
            &["2 + k*cos(b)", "k*sin(a)", "0.1"],
            &["k*sin(a)", "1.5 + k*c^2", "0.2*cos(a + c)"],
            &["0.1", "0.2*cos(a + c)", "1 + k*sin(b)^2"],
        ],
        "1 - cos(a) + b^2 + c^2",
        &[&["0.2*sin(a)", "1", "0"], &["0", "0.1*b", "1"]],
    )
}

/// Configuration-dependent metric, n = 3, m = 1.
pub fn curved3_m1() -> Arc<ModelSpec> {
    spec(
        &["u", "v", "w"],
        Env::new(),
        &[
            &["1 + 0.2*cos(v)", "0.1*sin(u)", "0"],
            &["0.1*sin(u)", "1", "0.1*w"],
            &["0", "0.1*w", "2"],
        ],
        "u^2 + v^2 + w^2",
        &[&["0.1", "0.3*cos(v)", "1"]],
    )
}
