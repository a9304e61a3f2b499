//! The kinetic equation in adapted coordinates.
//!
//! For one degree of underactuation it reduces to the linear ODE
//! `∂K/∂x + G K = 0` along the first coordinate, solved here by the
//! integrating factor `K(x, y) = ξ(y) exp(−∫₀ˣ G(t, y) dt)`. For more
//! unactuated directions only residual checking of a supplied 𝕂 is offered.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expr::{parse, CompiledExpr, Expr, ExprError};
use crate::frame::{g_scalar, g_tensor, FrameError};
use crate::model::ModelSpec;
use crate::numerics::{quad, Mat, NumericsError, QuadSpec, DEFAULT_FD_STEP};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KineticError {
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("expression `{context}`: {source}")]
    Expr {
        context: String,
        #[source]
        source: ExprError,
    },
    #[error("{0}")]
    Unsupported(String),
    #[error("xi must be positive, got {value} at q = {q:?}")]
    NonPositiveXi { q: Vec<f64>, value: f64 },
    #[error("integration segment to q = {q:?} crosses a singular point of the frame: {reason}")]
    SingularSegment { q: Vec<f64>, reason: String },
    #[error("kinetic field: {0}")]
    Format(String),
}

/// A field of symmetric (n−m)×(n−m) matrices 𝕂_{μν}(q).
pub trait KineticField: Send + Sync {
    fn dim(&self) -> usize;
    fn matrix_at(&self, q: &[f64]) -> Result<Mat, KineticError>;
}

/// Determinant of the stacked system `[ℍ_{τ·}; ϑ]` at q. Its sign flips
/// exactly where the frame becomes singular.
pub fn complement_determinant(spec: &ModelSpec, q: &[f64]) -> Result<f64, KineticError> {
    let d = spec.dou();
    let n = spec.n();
    let h_lower = spec
        .mass_inverse_at(q)
        .map_err(FrameError::from)?
        .inverse()?;
    let thetas = spec.actuation_at(q).map_err(FrameError::from)?;
    let stacked = Mat::from_fn(n, n, |r, c| {
        if r < d {
            h_lower[(r, c)]
        } else {
            thetas[(r - d, c)]
        }
    });
    Ok(stacked.det()?)
}

/// Closed-form solution of the kinetic equation for m = n − 1.
#[derive(Debug, Clone)]
pub struct KineticSolution {
    spec: Arc<ModelSpec>,
    xi: Expr,
    xi_compiled: CompiledExpr,
    quad: QuadSpec,
    validity_note: String,
}

const XI_SAMPLES: usize = 50;
const SCAN_SAMPLES: usize = 200;
const SCAN_HALF_WIDTH: f64 = 0.2;

/// Builds K(x, y) = ξ(y)·exp(−∫₀ˣ G(t, y) dt) for a model with one degree
/// of underactuation. `xi` may depend on constants and on every coordinate
/// except the first.
pub fn solve_kinetic_1dou(spec: Arc<ModelSpec>, xi: Expr) -> Result<KineticSolution, KineticError> {
    solve_kinetic_1dou_with(spec, xi, QuadSpec::default())
}

pub fn solve_kinetic_1dou_with(
    spec: Arc<ModelSpec>,
    xi: Expr,
    quad_spec: QuadSpec,
) -> Result<KineticSolution, KineticError> {
    if spec.dou() != 1 {
        return Err(KineticError::Unsupported(format!(
            "closed-form kinetic solution needs m = n - 1 (n = {}, m = {})",
            spec.n(),
            spec.m()
        )));
    }
    let x_name = &spec.coords()[0];
    if xi.depends_on(x_name) {
        return Err(KineticError::Format(format!(
            "xi must not depend on the first coordinate `{x_name}`"
        )));
    }
    let xi_compiled =
        xi.compile(spec.coords(), spec.constants())
            .map_err(|e| KineticError::Expr {
                context: "xi".into(),
                source: e,
            })?;

    let q0 = spec.equilibrium().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6b69);
    let check = |q: &[f64]| -> Result<(), KineticError> {
        let value = xi_compiled.eval(q).map_err(|e| KineticError::Expr {
            context: format!("xi at {q:?}"),
            source: e,
        })?;
        if !(value > 0.0) {
            return Err(KineticError::NonPositiveXi {
                q: q.to_vec(),
                value,
            });
        }
        Ok(())
    };
    check(&q0)?;
    for _ in 0..XI_SAMPLES {
        let q: Vec<f64> = q0
            .iter()
            .map(|c| c + rng.gen_range(-SCAN_HALF_WIDTH..SCAN_HALF_WIDTH))
            .collect();
        check(&q)?;
    }

    let validity_note = scan_validity(&spec)?;
    Ok(KineticSolution {
        spec,
        xi,
        xi_compiled,
        quad: quad_spec,
        validity_note,
    })
}

fn scan_validity(spec: &ModelSpec) -> Result<String, KineticError> {
    let q0 = spec.equilibrium();
    let det0 = complement_determinant(spec, q0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x7363);
    let mut flipped = 0;
    let mut example = None;
    for _ in 0..SCAN_SAMPLES {
        let q: Vec<f64> = q0
            .iter()
            .map(|c| c + rng.gen_range(-SCAN_HALF_WIDTH..=SCAN_HALF_WIDTH))
            .collect();
        let same_side = complement_determinant(spec, &q).is_ok_and(|d| d * det0 > 0.0);
        if !same_side {
            flipped += 1;
            example.get_or_insert(q);
        }
    }
    Ok(match example {
        None => format!(
            "no singular points detected in {SCAN_SAMPLES} samples of the box |q - q0|_inf <= {SCAN_HALF_WIDTH}"
        ),
        Some(q) => format!(
            "{flipped} of {SCAN_SAMPLES} samples of the box |q - q0|_inf <= {SCAN_HALF_WIDTH} lie beyond a singular point of the frame (e.g. q = {q:?})"
        ),
    })
}

impl KineticSolution {
    pub fn spec(&self) -> &Arc<ModelSpec> {
        &self.spec
    }

    pub fn xi(&self) -> &Expr {
        &self.xi
    }

    pub fn validity_note(&self) -> &str {
        &self.validity_note
    }

    /// Same construction with ξ replaced.
    pub fn with_xi(&self, xi: Expr) -> Result<KineticSolution, KineticError> {
        solve_kinetic_1dou_with(self.spec.clone(), xi, self.quad)
    }

    /// Scalar K at q.
    pub fn k_at(&self, q: &[f64]) -> Result<f64, KineticError> {
        let xi = self.xi_compiled.eval(q).map_err(|e| KineticError::Expr {
            context: format!("xi at {q:?}"),
            source: e,
        })?;
        let x = q[0];
        if x == 0.0 {
            return Ok(xi);
        }
        let mut start = q.to_vec();
        start[0] = 0.0;
        let d_start = complement_determinant(&self.spec, &start);
        let d_end = complement_determinant(&self.spec, q);
        match (d_start, d_end) {
            (Ok(a), Ok(b)) if a * b > 0.0 => {}
            (Ok(a), Ok(b)) => {
                return Err(KineticError::SingularSegment {
                    q: q.to_vec(),
                    reason: format!("complementarity determinant changes from {a:e} to {b:e}"),
                })
            }
            (Err(e), _) | (_, Err(e)) => {
                return Err(KineticError::SingularSegment {
                    q: q.to_vec(),
                    reason: e.to_string(),
                })
            }
        }
        let mut point = q.to_vec();
        let integral = quad(
            |t| {
                point[0] = t;
                g_scalar(&self.spec, &point).map_err(|e| match e {
                    FrameError::OutsideDomain { reason, .. } => KineticError::SingularSegment {
                        q: q.to_vec(),
                        reason,
                    },
                    other => other.into(),
                })
            },
            0.0,
            x,
            &self.quad,
        )?;
        let k = xi * (-integral).exp();
        if !(k.is_finite() && k > 0.0) {
            return Err(KineticError::SingularSegment {
                q: q.to_vec(),
                reason: format!("K = {k}"),
            });
        }
        Ok(k)
    }
}

impl KineticField for KineticSolution {
    fn dim(&self) -> usize {
        1
    }

    fn matrix_at(&self, q: &[f64]) -> Result<Mat, KineticError> {
        Ok(Mat::from_rows(&[vec![self.k_at(q)?]]))
    }
}

/// User-supplied 𝕂 given by expressions (symmetric, upper triangle).
#[derive(Debug, Clone)]
pub struct ExprKinetic {
    entries: Vec<Vec<Expr>>,
    compiled: Vec<Vec<CompiledExpr>>,
}

impl ExprKinetic {
    /// `upper[μ][ν - μ]` holds 𝕂_{μν} for ν ≥ μ.
    pub fn new(spec: &ModelSpec, entries: Vec<Vec<Expr>>) -> Result<ExprKinetic, KineticError> {
        let d = spec.dou();
        if entries.len() != d || entries.iter().any(|r| r.len() != d) {
            return Err(KineticError::Format(format!("K must be {d}x{d}")));
        }
        let compiled = entries
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, e)| {
                        e.compile(spec.coords(), spec.constants()).map_err(|err| {
                            KineticError::Expr {
                                context: format!("K{}{}", i + 1, j + 1),
                                source: err,
                            }
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ExprKinetic { entries, compiled })
    }

    /// Parses `[kinetic] K11 = "...", K12 = "...", ...` (upper triangle).
    pub fn parse(spec: &ModelSpec, text: &str) -> Result<ExprKinetic, KineticError> {
        let root: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| KineticError::Format(e.to_string()))?;
        let table = root
            .get("kinetic")
            .and_then(|v| v.as_table())
            .ok_or_else(|| KineticError::Format("missing [kinetic] section".into()))?;
        let d = spec.dou();
        let mut entries = vec![vec![Expr::Num(0.0); d]; d];
        let mut seen = vec![vec![false; d]; d];
        for (key, value) in table {
            let idx = key.strip_prefix('K').and_then(|rest| {
                if let Some((a, b)) = rest.split_once('_') {
                    Some((a.parse::<usize>().ok()?, b.parse::<usize>().ok()?))
                } else if d < 10 && rest.len() == 2 {
                    let b = rest.as_bytes();
                    Some((
                        (b[0] as char).to_digit(10)? as usize,
                        (b[1] as char).to_digit(10)? as usize,
                    ))
                } else {
                    None
                }
            });
            let (i, j) = match idx {
                Some((i, j)) if (1..=d).contains(&i) && (i..=d).contains(&j) => (i - 1, j - 1),
                _ => {
                    return Err(KineticError::Format(format!(
                        "bad key `{key}` for a {d}x{d} K"
                    )))
                }
            };
            let e = match value {
                toml::Value::String(s) => parse(s).map_err(|err| KineticError::Expr {
                    context: key.clone(),
                    source: err,
                })?,
                toml::Value::Float(f) => Expr::Num(*f),
                toml::Value::Integer(v) => Expr::Num(*v as f64),
                _ => {
                    return Err(KineticError::Format(format!(
                        "`{key}` must be an expression"
                    )))
                }
            };
            entries[i][j] = e.clone();
            entries[j][i] = e;
            seen[i][j] = true;
        }
        for i in 0..d {
            for j in i..d {
                if !seen[i][j] {
                    return Err(KineticError::Format(format!("missing K{}{}", i + 1, j + 1)));
                }
            }
        }
        ExprKinetic::new(spec, entries)
    }

    pub fn entries(&self) -> &[Vec<Expr>] {
        &self.entries
    }
}

impl KineticField for ExprKinetic {
    fn dim(&self) -> usize {
        self.entries.len()
    }

    fn matrix_at(&self, q: &[f64]) -> Result<Mat, KineticError> {
        let d = self.dim();
        let mut k = Mat::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                k[(i, j)] = self.compiled[i][j]
                    .eval(q)
                    .map_err(|e| KineticError::Expr {
                        context: format!("K{}{} at {q:?}", i + 1, j + 1),
                        source: e,
                    })?;
            }
        }
        Ok(k)
    }
}

/// Whether `k` is symmetric positive-definite (Cholesky test).
pub fn is_positive_definite(k: &Mat) -> bool {
    if !k.is_symmetric(1e-12) {
        return false;
    }
    let n = k.rows();
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let s: f64 = (0..j).map(|p| l[(j, p)] * l[(j, p)]).sum();
        let diag = k[(j, j)] - s;
        if !(diag > 0.0) {
            return false;
        }
        l[(j, j)] = diag.sqrt();
        for i in j + 1..n {
            let s: f64 = (0..j).map(|p| l[(i, p)] * l[(j, p)]).sum();
            l[(i, j)] = (k[(i, j)] - s) / l[(j, j)];
        }
    }
    true
}

fn k_derivatives(field: &dyn KineticField, q: &[f64], d: usize) -> Result<Vec<Mat>, KineticError> {
    // Five-point central stencil: K is steep near the singular set and the
    // three-point truncation error alone can reach 1e-6 there.
    (0..d)
        .map(|t1| {
            let h = DEFAULT_FD_STEP * (1.0 + q[t1].abs());
            let mut x = q.to_vec();
            let mut at = |s: f64| {
                x[t1] = q[t1] + s * h;
                field.matrix_at(&x)
            };
            let (p2, p1, m1, m2) = (at(2.0)?, at(1.0)?, at(-1.0)?, at(-2.0)?);
            Ok(Mat::from_fn(d, d, |i, j| {
                (-p2[(i, j)] + 8.0 * p1[(i, j)] - 8.0 * m1[(i, j)] + m2[(i, j)]) / (12.0 * h)
            }))
        })
        .collect()
}

/// `(∂𝕂_{τ₂τ₃}/∂q^{τ₁} + G^{μν}_{τ₁τ₂τ₃} 𝕂_{μν}) a^{τ₁} a^{τ₂} a^{τ₃}`, with
/// ∂𝕂 by five-point central differences.
pub fn kinetic_residual(
    spec: &ModelSpec,
    field: &dyn KineticField,
    q: &[f64],
    a: &[f64],
) -> Result<f64, KineticError> {
    let d = spec.dou();
    if field.dim() != d || a.len() != d {
        return Err(KineticError::Format(format!(
            "K has dimension {}, direction has {} entries, model needs {d}",
            field.dim(),
            a.len()
        )));
    }
    let k = field.matrix_at(q)?;
    let dk = k_derivatives(field, q, d)?;
    let g = g_tensor(spec, q)?;
    let mut r = 0.0;
    for t1 in 0..d {
        for t2 in 0..d {
            for t3 in 0..d {
                let mut c = dk[t1][(t2, t3)];
                for mu in 0..d {
                    for nu in 0..d {
                        c += g.get(mu, nu, t1, t2, t3) * k[(mu, nu)];
                    }
                }
                r += c * a[t1] * a[t2] * a[t3];
            }
        }
    }
    Ok(r)
}

/// `∂K/∂x + G·K` for one degree of underactuation.
pub fn kinetic_residual_scalar(
    spec: &ModelSpec,
    field: &dyn KineticField,
    q: &[f64],
) -> Result<f64, KineticError> {
    if spec.dou() != 1 || field.dim() != 1 {
        return Err(KineticError::Unsupported(
            "scalar residual needs one degree of underactuation".into(),
        ));
    }
    let k = field.matrix_at(q)?[(0, 0)];
    let dk = k_derivatives(field, q, 1)?[0][(0, 0)];
    Ok(dk + g_scalar(spec, q)? * k)
}
