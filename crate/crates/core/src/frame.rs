//! Pointwise geometric data in an adapted chart: the inverse mass matrix and
//! its inverse, the projection matrix P̂ onto the complement along the
//! actuated directions, and the coefficients G of the kinetic equation.

use crate::model::{ModelError, ModelSpec};
use crate::numerics::{Lu, Mat, NumericsError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FrameError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("outside the validity domain at q = {q:?}: {reason}")]
    OutsideDomain { q: Vec<f64>, reason: String },
    #[error("{0}")]
    Unsupported(String),
}

/// Step of the central differences of P̂.
pub const PROJECTION_FD_STEP: f64 = 1e-5;

/// Five-point central stencil: offsets in units of the step and weights.
const STENCIL: [(f64, f64); 4] = [(2.0, -1.0), (1.0, 8.0), (-1.0, -8.0), (-2.0, 1.0)];

/// Derivative from values `f(k)` sampled at the offsets of [`STENCIL`].
fn central(f: impl Fn(usize) -> f64) -> f64 {
    STENCIL
        .iter()
        .enumerate()
        .map(|(k, &(_, w))| w * f(k))
        .sum::<f64>()
        / (12.0 * PROJECTION_FD_STEP)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FramePoint {
    pub q: Vec<f64>,
    /// ℍ^{ij}
    pub h_upper: Mat,
    /// ℍ_{ij}, the inverse of `h_upper`.
    pub h_lower: Mat,
    /// P̂^{kμ}, n × (n − m).
    pub p_hat: Mat,
    /// ϑ_{ai}, m × n.
    pub thetas: Mat,
}

impl FramePoint {
    pub fn dou(&self) -> usize {
        self.p_hat.cols()
    }

    /// Largest deviation from ℍ^{ij}ℍ_{jk} = δ.
    pub fn inverse_defect(&self) -> f64 {
        let n = self.h_upper.rows();
        self.h_upper
            .matmul(&self.h_lower)
            .max_abs_diff(&Mat::identity(n))
    }

    /// Largest deviation from ℍ_{τk}P̂^{kμ} = δ and ϑ_{ai}P̂^{iμ} = 0.
    pub fn projection_defects(&self) -> (f64, f64) {
        let d = self.dou();
        let mut phd: f64 = 0.0;
        for tau in 0..d {
            for mu in 0..d {
                let v: f64 = (0..self.p_hat.rows())
                    .map(|k| self.h_lower[(tau, k)] * self.p_hat[(k, mu)])
                    .sum();
                phd = phd.max((v - if tau == mu { 1.0 } else { 0.0 }).abs());
            }
        }
        let wp0 = self
            .thetas
            .matmul(&self.p_hat)
            .max_abs_diff(&Mat::zeros(self.thetas.rows(), d));
        (phd, wp0)
    }
}

fn outside(q: &[f64], reason: impl Into<String>) -> FrameError {
    FrameError::OutsideDomain {
        q: q.to_vec(),
        reason: reason.into(),
    }
}

/// Evaluates the frame at `q`. Each column of P̂ solves the stacked system
/// `[ℍ_{τ·}; ϑ] P̂^{·μ} = (δ_τ^μ; 0)`.
pub fn frame_at(spec: &ModelSpec, q: &[f64]) -> Result<FramePoint, FrameError> {
    let n = spec.n();
    let d = spec.dou();
    if q.len() != n {
        return Err(FrameError::Unsupported(format!(
            "point has {} coordinates, model has {n}",
            q.len()
        )));
    }
    let h_upper = spec.mass_inverse_at(q)?;
    let h_lower = h_upper.inverse().map_err(|e| match e {
        NumericsError::Singular { .. } => outside(q, "inverse mass matrix is singular"),
        other => FrameError::Model(other.into()),
    })?;
    let thetas = spec.actuation_at(q)?;
    let stacked = Mat::from_fn(n, n, |r, c| {
        if r < d {
            h_lower[(r, c)]
        } else {
            thetas[(r - d, c)]
        }
    });
    let lu = Lu::factor(&stacked).map_err(|e| match e {
        NumericsError::Singular { .. } => outside(
            q,
            "complement and actuated directions are not complementary",
        ),
        other => FrameError::Model(other.into()),
    })?;
    let mut p_hat = Mat::zeros(n, d);
    let mut rhs = vec![0.0; n];
    for mu in 0..d {
        rhs.iter_mut().for_each(|v| *v = 0.0);
        rhs[mu] = 1.0;
        for (k, v) in lu.solve(&rhs).into_iter().enumerate() {
            p_hat[(k, mu)] = v;
        }
    }
    Ok(FramePoint {
        q: q.to_vec(),
        h_upper,
        h_lower,
        p_hat,
        thetas,
    })
}

/// ∂ℍ_{ij}/∂q^k = −ℍ ∂ℍ^{..}/∂q^k ℍ, one matrix per k.
fn lower_derivs(spec: &ModelSpec, frame: &FramePoint) -> Result<Vec<Mat>, FrameError> {
    Ok(spec
        .mass_inverse_derivs_at(&frame.q)?
        .iter()
        .map(|du| frame.h_lower.matmul(du).matmul(&frame.h_lower).scale(-1.0))
        .collect())
}

fn shifted(q: &[f64], i: usize, h: f64) -> Vec<f64> {
    let mut x = q.to_vec();
    x[i] += h;
    x
}

fn stencil_frame(spec: &ModelSpec, q: &[f64]) -> Result<FramePoint, FrameError> {
    frame_at(spec, q).map_err(|e| match e {
        FrameError::OutsideDomain { reason, .. } => outside(
            q,
            format!("finite-difference stencil left the domain: {reason}"),
        ),
        other => other,
    })
}

/// Coefficients G^{μν}_{τ₁τ₂τ₃} of the kinetic equation, all indices in
/// `0..n−m`.
#[derive(Debug, Clone, PartialEq)]
pub struct GTensor {
    d: usize,
    data: Vec<f64>,
}

impl GTensor {
    fn zeros(d: usize) -> GTensor {
        GTensor {
            d,
            data: vec![0.0; d.pow(5)],
        }
    }

    fn offset(&self, mu: usize, nu: usize, t1: usize, t2: usize, t3: usize) -> usize {
        let d = self.d;
        (((mu * d + nu) * d + t1) * d + t2) * d + t3
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn get(&self, mu: usize, nu: usize, t1: usize, t2: usize, t3: usize) -> f64 {
        self.data[self.offset(mu, nu, t1, t2, t3)]
    }

    fn add(&mut self, mu: usize, nu: usize, t1: usize, t2: usize, t3: usize, v: f64) {
        let o = self.offset(mu, nu, t1, t2, t3);
        self.data[o] += v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// G^{μν}_{τ₁τ₂τ₃} = P̂^{kμ} δ^ν_{τ₁} ∂ℍ_{τ₂τ₃}/∂q^k
///                 + ∂(P̂^{iμ}P̂^{jν})/∂q^{τ₁} ℍ_{τ₂i} ℍ_{τ₃j}.
///
/// Derivatives of ℍ come from the symbolic model; those of P̂ are five-point
/// central differences of [`frame_at`] with step [`PROJECTION_FD_STEP`].
pub fn g_tensor(spec: &ModelSpec, q: &[f64]) -> Result<GTensor, FrameError> {
    let frame = frame_at(spec, q)?;
    let n = spec.n();
    let d = spec.dou();
    let dh = lower_derivs(spec, &frame)?;
    let mut g = GTensor::zeros(d);

    for mu in 0..d {
        for t1 in 0..d {
            for t2 in 0..d {
                for t3 in 0..d {
                    let v: f64 = (0..n).map(|k| frame.p_hat[(k, mu)] * dh[k][(t2, t3)]).sum();
                    g.add(mu, t1, t1, t2, t3, v);
                }
            }
        }
    }

    // R[τ][μ] = ℍ_{τi}(q) P̂^{iμ}(q + s h e_τ₁), s ∈ {±1, ±2}
    let contract = |p: &Mat| {
        Mat::from_fn(d, d, |tau, mu| {
            (0..n).map(|i| frame.h_lower[(tau, i)] * p[(i, mu)]).sum()
        })
    };
    for t1 in 0..d {
        let r: Vec<Mat> = STENCIL
            .iter()
            .map(|&(s, _)| {
                Ok(contract(
                    &stencil_frame(spec, &shifted(q, t1, s * PROJECTION_FD_STEP))?.p_hat,
                ))
            })
            .collect::<Result<_, FrameError>>()?;
        for mu in 0..d {
            for nu in 0..d {
                for t2 in 0..d {
                    for t3 in 0..d {
                        let v = central(|k| r[k][(t2, mu)] * r[k][(t3, nu)]);
                        g.add(mu, nu, t1, t2, t3, v);
                    }
                }
            }
        }
    }
    Ok(g)
}

/// Scalar G for one degree of underactuation:
/// G = ∂ℍ₁₁/∂q^k P̂^k + ∂(P̂^i P̂^j)/∂x ℍ_{1i} ℍ_{1j}.
pub fn g_scalar(spec: &ModelSpec, q: &[f64]) -> Result<f64, FrameError> {
    if spec.dou() != 1 {
        return Err(FrameError::Unsupported(format!(
            "scalar G needs one degree of underactuation, model has {}",
            spec.dou()
        )));
    }
    let frame = frame_at(spec, q)?;
    let n = spec.n();
    let du = spec.mass_inverse_derivs_at(q)?;
    let row0 = frame.h_lower.row(0);
    let mut g = 0.0;
    for k in 0..n {
        // ∂ℍ₁₁/∂q^k = −ℍ_{1a} ∂ℍ^{ab}/∂q^k ℍ_{b1}
        let mut dh11 = 0.0;
        for a in 0..n {
            for b in 0..n {
                dh11 -= row0[a] * du[k][(a, b)] * row0[b];
            }
        }
        g += dh11 * frame.p_hat[(k, 0)];
    }
    let s: Vec<f64> = STENCIL
        .iter()
        .map(|&(sh, _)| {
            let p = stencil_frame(spec, &shifted(q, 0, sh * PROJECTION_FD_STEP))?.p_hat;
            Ok((0..n).map(|i| row0[i] * p[(i, 0)]).sum())
        })
        .collect::<Result<_, FrameError>>()?;
    g += central(|k| s[k] * s[k]);
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, Env, Expr};

    fn e(s: &str) -> Expr {
        parse(s).unwrap()
    }

    fn flat2() -> ModelSpec {
        ModelSpec::new(
            vec!["q1".into(), "q2".into()],
            Env::new(),
            vec![vec![e("1"), e("0")], vec![e("0"), e("1")]],
            e("q1^2 + q2^2"),
            vec![vec![e("0"), e("1")]],
            vec![0.0, 0.0],
        )
        .unwrap()
    }

    #[test]
    fn identity_metric_projection() {
        let f = frame_at(&flat2(), &[0.3, -0.2]).unwrap();
        assert_eq!(f.p_hat, Mat::from_rows(&[vec![1.0], vec![0.0]]));
        assert_eq!(f.projection_defects(), (0.0, 0.0));
    }

    #[test]
    fn flat_model_has_vanishing_g() {
        let spec = flat2();
        assert_eq!(g_scalar(&spec, &[0.1, 0.2]).unwrap(), 0.0);
        assert_eq!(g_tensor(&spec, &[0.1, 0.2]).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn wrong_point_dimension() {
        assert!(matches!(
            frame_at(&flat2(), &[0.0]),
            Err(FrameError::Unsupported(_))
        ));
    }
}
