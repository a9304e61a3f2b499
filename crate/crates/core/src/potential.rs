//! The potential matching equation: u_μ fields, their integrability, the
//! line-integral construction of ĥ and the positivity certificate of its
//! Hessian at the equilibrium.

use std::sync::Arc;

use serde::Serialize;

use crate::frame::{frame_at, FrameError};
use crate::kinetic::{KineticError, KineticField};
use crate::model::ModelSpec;
use crate::numerics::{min_eigen_sym, quad, Mat, NumericsError, QuadSpec, DEFAULT_FD_STEP};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PotentialError {
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Kinetic(#[from] KineticError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("integrability residual {residual:e} exceeds tolerance {tol:e}")]
    NotIntegrable { residual: f64, tol: f64 },
    #[error("the equilibrium must sit at the origin of the chart, got {0:?}")]
    NotCentered(Vec<f64>),
    #[error("{0}")]
    Dimension(String),
}

impl From<crate::model::ModelError> for PotentialError {
    fn from(e: crate::model::ModelError) -> Self {
        PotentialError::Frame(e.into())
    }
}

/// u_μ(q) = ∂h/∂q^k P̂^{kτ} 𝕂_{τμ}.
pub fn u_fields(
    spec: &ModelSpec,
    kinetic: &dyn KineticField,
    q: &[f64],
) -> Result<Vec<f64>, PotentialError> {
    let d = spec.dou();
    if kinetic.dim() != d {
        return Err(PotentialError::Dimension(format!(
            "K has dimension {}, model needs {d}",
            kinetic.dim()
        )));
    }
    let frame = frame_at(spec, q)?;
    let grad = spec.potential_grad_at(q)?;
    let k = kinetic.matrix_at(q)?;
    let hp: Vec<f64> = (0..d)
        .map(|tau| (0..spec.n()).map(|i| grad[i] * frame.p_hat[(i, tau)]).sum())
        .collect();
    Ok((0..d)
        .map(|mu| (0..d).map(|tau| hp[tau] * k[(tau, mu)]).sum())
        .collect())
}

/// Points on which integrability and residuals are checked.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationGrid {
    pub half_width: f64,
    pub per_axis: usize,
    pub points: Vec<Vec<f64>>,
}

impl VerificationGrid {
    pub const DEFAULT_HALF_WIDTH: f64 = 0.1;
    pub const DEFAULT_PER_AXIS: usize = 9;

    /// Regular grid varying the first n − m coordinates around q₀ in a box of
    /// the given half-width; the actuated coordinates stay at q₀.
    pub fn around(spec: &ModelSpec, half_width: f64, per_axis: usize) -> VerificationGrid {
        let d = spec.dou();
        let q0 = spec.equilibrium();
        let per_axis = per_axis.max(1);
        let offset = |i: usize| {
            if per_axis == 1 {
                0.0
            } else {
                -half_width + 2.0 * half_width * i as f64 / (per_axis - 1) as f64
            }
        };
        let total = per_axis.pow(d as u32);
        let points = (0..total)
            .map(|mut idx| {
                let mut q = q0.to_vec();
                for axis in (0..d).rev() {
                    q[axis] += offset(idx % per_axis);
                    idx /= per_axis;
                }
                q
            })
            .collect();
        VerificationGrid {
            half_width,
            per_axis,
            points,
        }
    }

    pub fn default_for(spec: &ModelSpec) -> VerificationGrid {
        VerificationGrid::around(spec, Self::DEFAULT_HALF_WIDTH, Self::DEFAULT_PER_AXIS)
    }
}

/// max over points and μ < ν of |∂u_ν/∂q^μ − ∂u_μ/∂q^ν| for an arbitrary
/// field `u` with `d` components depending on the first `d` coordinates.
pub fn integrability_residual_of<E: From<NumericsError>>(
    mut u: impl FnMut(&[f64]) -> Result<Vec<f64>, E>,
    d: usize,
    points: &[Vec<f64>],
) -> Result<f64, E> {
    let mut worst: f64 = 0.0;
    if d < 2 {
        return Ok(worst);
    }
    for q in points {
        let mut jac = Mat::zeros(d, d);
        let mut x = q.clone();
        for mu in 0..d {
            let h = DEFAULT_FD_STEP * (1.0 + q[mu].abs());
            x[mu] = q[mu] + h;
            let up = u(&x)?;
            x[mu] = q[mu] - h;
            let um = u(&x)?;
            x[mu] = q[mu];
            for nu in 0..d {
                // jac[(mu, nu)] = ∂u_ν/∂q^μ
                jac[(mu, nu)] = (up[nu] - um[nu]) / (2.0 * h);
            }
        }
        for mu in 0..d {
            for nu in mu + 1..d {
                let r = (jac[(mu, nu)] - jac[(nu, mu)]).abs();
                if !r.is_finite() {
                    return Err(NumericsError::NonFinite {
                        value: r,
                        at: format!("integrability residual at {q:?}"),
                    }
                    .into());
                }
                worst = worst.max(r);
            }
        }
    }
    Ok(worst)
}

pub fn integrability_residual(
    spec: &ModelSpec,
    kinetic: &dyn KineticField,
    points: &[Vec<f64>],
) -> Result<f64, PotentialError> {
    integrability_residual_of(|q| u_fields(spec, kinetic, q), spec.dou(), points)
}

/// Default integrability tolerance.
pub const INTEGRABILITY_TOL: f64 = 1e-6;

/// ĥ(q) = Σ_μ ∫₀^{q^μ} u_μ(0,…,0,t,q^{μ+1},…,q^n) dt + (ϖ/2) Σ_a (q^{n−m+a})².
#[derive(Clone)]
pub struct ShapedPotential {
    spec: Arc<ModelSpec>,
    kinetic: Arc<dyn KineticField>,
    varpi: f64,
    quad: QuadSpec,
}

impl std::fmt::Debug for ShapedPotential {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ShapedPotential")
            .field("n", &self.spec.n())
            .field("varpi", &self.varpi)
            .finish()
    }
}

fn require_centered(spec: &ModelSpec) -> Result<(), PotentialError> {
    if spec.equilibrium().iter().any(|&v| v != 0.0) {
        return Err(PotentialError::NotCentered(spec.equilibrium().to_vec()));
    }
    Ok(())
}

/// Builds ĥ after checking integrability on the default verification grid.
pub fn build_hhat(
    spec: Arc<ModelSpec>,
    kinetic: Arc<dyn KineticField>,
    varpi: f64,
) -> Result<ShapedPotential, PotentialError> {
    let grid = VerificationGrid::default_for(&spec);
    build_hhat_with(spec, kinetic, varpi, &grid.points, INTEGRABILITY_TOL)
}

pub fn build_hhat_with(
    spec: Arc<ModelSpec>,
    kinetic: Arc<dyn KineticField>,
    varpi: f64,
    grid: &[Vec<f64>],
    tol: f64,
) -> Result<ShapedPotential, PotentialError> {
    require_centered(&spec)?;
    if !varpi.is_finite() {
        return Err(PotentialError::Dimension(format!(
            "varpi must be finite, got {varpi}"
        )));
    }
    let residual = integrability_residual(&spec, kinetic.as_ref(), grid)?;
    if !(residual <= tol) {
        return Err(PotentialError::NotIntegrable { residual, tol });
    }
    Ok(ShapedPotential {
        spec,
        kinetic,
        varpi,
        quad: QuadSpec::default(),
    })
}

impl ShapedPotential {
    pub fn spec(&self) -> &Arc<ModelSpec> {
        &self.spec
    }

    pub fn kinetic(&self) -> &Arc<dyn KineticField> {
        &self.kinetic
    }

    pub fn varpi(&self) -> f64 {
        self.varpi
    }

    pub fn u_at(&self, q: &[f64]) -> Result<Vec<f64>, PotentialError> {
        u_fields(&self.spec, self.kinetic.as_ref(), q)
    }

    pub fn eval(&self, q: &[f64]) -> Result<f64, PotentialError> {
        let n = self.spec.n();
        let d = self.spec.dou();
        if q.len() != n {
            return Err(PotentialError::Dimension(format!(
                "point has {} coordinates, model has {n}",
                q.len()
            )));
        }
        let mut total = 0.0;
        let mut path = q.to_vec();
        for mu in 0..d {
            for v in &mut path[..mu] {
                *v = 0.0;
            }
            let mut x = path.clone();
            total += quad(
                |t| {
                    x[mu] = t;
                    Ok::<f64, PotentialError>(self.u_at(&x)?[mu])
                },
                0.0,
                q[mu],
                &self.quad,
            )?;
        }
        let s: f64 = q[d..].iter().map(|v| v * v).sum();
        Ok(total + 0.5 * self.varpi * s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PositivityCertificate {
    /// M_{μν} = ∂u_ν/∂q^μ at the origin.
    pub m: Mat,
    /// A_{μa} = ∂u_μ/∂q^{n−m+a} at the origin.
    pub a: Mat,
    pub lambda_min: f64,
    pub norm_a_sq: f64,
    /// ‖A‖²/λ_min, absent when M is not positive-definite.
    pub varpi_min: Option<f64>,
    pub varpi: f64,
    pub verdict: Verdict,
    pub reason: Option<String>,
    /// [[M, A], [Aᵗ, ϖI]]
    pub hess0: Mat,
}

pub const NOT_POSITIVE_DEFINITE: &str = "M not positive-definite";

/// M and A by central differences of u at the origin, λ_min(M), the bound
/// ‖A‖²_F/λ_min and the verdict for `varpi` (default 2·max(bound, 1)).
pub fn certificate(
    spec: &ModelSpec,
    kinetic: &dyn KineticField,
    varpi: Option<f64>,
) -> Result<PositivityCertificate, PotentialError> {
    require_centered(spec)?;
    let n = spec.n();
    let d = spec.dou();
    let m_act = spec.m();
    let origin = vec![0.0; n];
    let h = DEFAULT_FD_STEP;
    let mut du = Vec::with_capacity(n);
    let mut x = origin.clone();
    for k in 0..n {
        x[k] = h;
        let up = u_fields(spec, kinetic, &x)?;
        x[k] = -h;
        let um = u_fields(spec, kinetic, &x)?;
        x[k] = 0.0;
        du.push(
            (0..d)
                .map(|mu| (up[mu] - um[mu]) / (2.0 * h))
                .collect::<Vec<_>>(),
        );
    }
    let m = Mat::from_fn(d, d, |mu, nu| du[mu][nu]);
    let a = Mat::from_fn(d, m_act, |mu, s| du[d + s][mu]);
    let lambda_min = min_eigen_sym(&m)?;
    let norm_a_sq = a.frobenius_sq();
    let varpi_min = (lambda_min > 0.0).then(|| norm_a_sq / lambda_min);
    let varpi = varpi.unwrap_or(2.0 * varpi_min.unwrap_or(0.0).max(1.0));
    let (verdict, reason) = match varpi_min {
        None => (Verdict::Fail, Some(NOT_POSITIVE_DEFINITE.to_string())),
        Some(bound) if varpi > bound => (Verdict::Pass, None),
        Some(bound) => (
            Verdict::Fail,
            Some(format!(
                "varpi = {varpi} does not exceed varpiMin = {bound}"
            )),
        ),
    };
    let hess0 = Mat::from_fn(n, n, |i, j| match (i < d, j < d) {
        (true, true) => m[(i, j)],
        (true, false) => a[(i, j - d)],
        (false, true) => a[(j, i - d)],
        (false, false) => {
            if i == j {
                varpi
            } else {
                0.0
            }
        }
    });
    Ok(PositivityCertificate {
        m,
        a,
        lambda_min,
        norm_a_sq,
        varpi_min,
        varpi,
        verdict,
        reason,
        hess0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, Env, Expr};
    use crate::kinetic::ExprKinetic;

    fn e(s: &str) -> Expr {
        parse(s).unwrap()
    }

    fn flat3(h: &str) -> Arc<ModelSpec> {
        Arc::new(
            ModelSpec::new(
                vec!["q1".into(), "q2".into(), "q3".into()],
                Env::new(),
                vec![
                    vec![e("1"), e("0"), e("0")],
                    vec![e("0"), e("1"), e("0")],
                    vec![e("0"), e("0"), e("1")],
                ],
                e(h),
                vec![vec![e("0"), e("0"), e("1")]],
                vec![0.0, 0.0, 0.0],
            )
            .unwrap(),
        )
    }

    fn unit_k(spec: &ModelSpec) -> Arc<dyn KineticField> {
        Arc::new(ExprKinetic::new(spec, vec![vec![e("1"), e("0")], vec![e("0"), e("1")]]).unwrap())
    }

    #[test]
    fn critical_point_has_zero_u() {
        let spec = flat3("q1^2 + 2*q2^2 + 3*q3^2");
        let u = u_fields(&spec, unit_k(&spec).as_ref(), &[0.0; 3]).unwrap();
        assert_eq!(u, vec![0.0, 0.0]);
    }

    #[test]
    fn grid_shape() {
        let spec = flat3("q1^2 + q2^2 + q3^2");
        let g = VerificationGrid::default_for(&spec);
        assert_eq!(g.points.len(), 81);
        assert_eq!(g.points[0], vec![-0.1, -0.1, 0.0]);
        assert_eq!(g.points[1][1], -0.1 + 0.2 / 8.0);
        assert!(g.points.iter().all(|p| p[2] == 0.0));
    }

    #[test]
    fn rotation_field_has_curl_two() {
        let pts = vec![vec![0.1, -0.2, 0.0], vec![0.0, 0.0, 0.3]];
        let r = integrability_residual_of(|q| Ok::<_, NumericsError>(vec![-q[1], q[0]]), 2, &pts)
            .unwrap();
        assert!((r - 2.0).abs() < 1e-9, "{r}");
    }

    #[test]
    fn hhat_on_flat_model() {
        let spec = flat3("q1^2 + q1*q2 + q2^2 + q3^2");
        let k = unit_k(&spec);
        let hh = build_hhat(spec, k, 3.0).unwrap();
        let q = [0.1, -0.2, 0.3];
        let expected = 0.01 - 0.02 + 0.04 + 1.5 * 0.09;
        assert!((hh.eval(&q).unwrap() - expected).abs() < 1e-13);
        assert_eq!(hh.eval(&[0.0, 0.0, 0.7]).unwrap(), 0.5 * 3.0 * (0.7 * 0.7));
    }

    #[test]
    fn uncentered_model_is_rejected() {
        let spec = Arc::new(
            ModelSpec::new(
                vec!["q1".into(), "q2".into()],
                Env::new(),
                vec![vec![e("1"), e("0")], vec![e("0"), e("1")]],
                e("(q1 - 1)^2 + q2^2"),
                vec![vec![e("0"), e("1")]],
                vec![1.0, 0.0],
            )
            .unwrap(),
        );
        let k: Arc<dyn KineticField> =
            Arc::new(ExprKinetic::new(&spec, vec![vec![e("1")]]).unwrap());
        assert!(matches!(
            certificate(&spec, k.as_ref(), None),
            Err(PotentialError::NotCentered(_))
        ));
        assert!(matches!(
            build_hhat(spec, k, 1.0),
            Err(PotentialError::NotCentered(_))
        ));
    }

    #[test]
    fn maximum_along_unactuated_direction_fails() {
        let spec = flat3("-q1^2 + q2^2 + q3^2");
        let c = certificate(&spec, unit_k(&spec).as_ref(), None).unwrap();
        assert_eq!(c.verdict, Verdict::Fail);
        assert_eq!(c.reason.as_deref(), Some(NOT_POSITIVE_DEFINITE));
        assert!(c.varpi_min.is_none());
    }

    #[test]
    fn coupled_flat_model_certificate() {
        let spec = flat3("q1^2 + q2^2 + q1*q3 + q3^2");
        let c = certificate(&spec, unit_k(&spec).as_ref(), None).unwrap();
        assert!((c.m[(0, 0)] - 2.0).abs() < 1e-8 && c.m[(0, 1)].abs() < 1e-8);
        assert!((c.a[(0, 0)] - 1.0).abs() < 1e-8 && c.a[(1, 0)].abs() < 1e-8);
        assert!((c.varpi_min.unwrap() - 0.5).abs() < 1e-7);
        assert_eq!(c.varpi, 2.0);
        assert_eq!(c.verdict, Verdict::Pass);
        let low = certificate(&spec, unit_k(&spec).as_ref(), Some(0.4)).unwrap();
        assert_eq!(low.verdict, Verdict::Fail);
    }
}
