//! The whole synthesis: center the chart at the equilibrium, reorder the
//! coordinates so the first n − m complement the actuated directions, solve
//! (or accept) the kinetic field, check integrability, build ĥ and certify
//! its Hessian at the origin.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;
use std::time::Instant;

use crate::expr::{BinOp, Expr};
use crate::kinetic::{
    kinetic_residual, kinetic_residual_scalar, solve_kinetic_1dou, ExprKinetic, KineticError,
    KineticField,
};
use crate::model::{
    adapt_chart, apply_affine, AffineChart, ChartAdaptation, ModelError, ModelSpec,
};
use crate::numerics::{fd_grad, DEFAULT_FD_STEP};
use crate::potential::{
    build_hhat_with, certificate, integrability_residual, PositivityCertificate, PotentialError,
    ShapedPotential, VerificationGrid, INTEGRABILITY_TOL,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error("chart: {0}")]
    Chart(ModelError),
    #[error("kinetic: {0}")]
    Kinetic(KineticError),
    #[error("integrability: {0}")]
    Integrability(PotentialError),
    #[error("potential: {0}")]
    Potential(PotentialError),
    #[error("certificate: {0}")]
    Certificate(PotentialError),
    #[error("diagnostics: {0}")]
    Diagnostics(PotentialError),
}

impl PipelineError {
    pub fn stage(&self) -> &'static str {
        match self {
            PipelineError::Chart(_) => "chart",
            PipelineError::Kinetic(_) => "kinetic",
            PipelineError::Integrability(_) => "integrability",
            PipelineError::Potential(_) => "potential",
            PipelineError::Certificate(_) => "certificate",
            PipelineError::Diagnostics(_) => "diagnostics",
        }
    }
}

/// Where 𝕂 comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum KineticSource {
    /// Integrating-factor solution with the given ξ (m = n − 1 only).
    Solve { xi: Expr },
    /// User-supplied `[kinetic]` TOML. Indices refer to the reordered chart;
    /// expressions use the coordinate names of the model.
    Supplied { text: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOptions {
    pub kinetic: KineticSource,
    pub varpi: Option<f64>,
    pub integrability_tol: f64,
    pub grid_half_width: f64,
    pub grid_per_axis: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            kinetic: KineticSource::Solve { xi: Expr::Num(1.0) },
            varpi: None,
            integrability_tol: INTEGRABILITY_TOL,
            grid_half_width: VerificationGrid::DEFAULT_HALF_WIDTH,
            grid_per_axis: VerificationGrid::DEFAULT_PER_AXIS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    /// max |kinetic residual| on the verification grid.
    pub kinetic_residual: f64,
    /// max |∂ĥ/∂q^μ − u_μ| on the verification grid.
    pub potential_residual: f64,
}

pub struct Synthesis {
    /// Model in the centered, reordered chart.
    pub spec: Arc<ModelSpec>,
    /// Equilibrium in the chart the model was given in.
    pub original_equilibrium: Vec<f64>,
    pub adaptation: ChartAdaptation,
    pub kinetic: Arc<dyn KineticField>,
    pub kinetic_solved: bool,
    pub validity_note: Option<String>,
    pub grid: VerificationGrid,
    pub integrability_residual: f64,
    pub hhat: ShapedPotential,
    pub certificate: PositivityCertificate,
    pub diagnostics: Diagnostics,
    /// Seconds spent per stage.
    pub timings: BTreeMap<&'static str, f64>,
}

struct Timer(Instant);

impl Timer {
    fn lap(&mut self, timings: &mut BTreeMap<&'static str, f64>, stage: &'static str) {
        let now = Instant::now();
        timings.insert(stage, (now - self.0).as_secs_f64());
        self.0 = now;
    }
}

fn center(spec: &ModelSpec) -> Result<ModelSpec, ModelError> {
    if spec.equilibrium().iter().all(|&v| v == 0.0) {
        return Ok(spec.clone());
    }
    apply_affine(spec, &AffineChart::centered_at(spec.equilibrium()))
}

/// Supplied 𝕂 expressions refer to the original coordinates; shifts them to
/// the centered chart.
fn shift_supplied(entries: &[Vec<Expr>], coords: &[String], q0: &[f64]) -> Vec<Vec<Expr>> {
    let sub: HashMap<String, Expr> = coords
        .iter()
        .zip(q0)
        .filter(|(_, &c)| c != 0.0)
        .map(|(name, &c)| {
            let shifted = Expr::Binary(
                BinOp::Add,
                Box::new(Expr::Var(name.clone())),
                Box::new(Expr::Num(c)),
            );
            (name.clone(), shifted)
        })
        .collect();
    entries
        .iter()
        .map(|row| row.iter().map(|e| e.substitute(&sub)).collect())
        .collect()
}

pub fn synthesize(spec: &ModelSpec, opts: &PipelineOptions) -> Result<Synthesis, PipelineError> {
    let mut timings = BTreeMap::new();
    let mut timer = Timer(Instant::now());
    let original_equilibrium = spec.equilibrium().to_vec();

    let centered = center(spec).map_err(PipelineError::Chart)?;
    let coords = centered.coords().to_vec();
    let adaptation = adapt_chart(&centered).map_err(PipelineError::Chart)?;
    let adapted = if adaptation.is_identity() {
        centered
    } else {
        centered
            .permuted(&adaptation.permutation)
            .map_err(PipelineError::Chart)?
    };
    let spec = Arc::new(adapted);
    timer.lap(&mut timings, "chart");

    let (kinetic, kinetic_solved, validity_note): (Arc<dyn KineticField>, bool, Option<String>) =
        match &opts.kinetic {
            KineticSource::Solve { xi } => {
                let sol =
                    solve_kinetic_1dou(spec.clone(), xi.clone()).map_err(PipelineError::Kinetic)?;
                let note = sol.validity_note().to_string();
                (Arc::new(sol), true, Some(note))
            }
            KineticSource::Supplied { text } => {
                let parsed = ExprKinetic::parse(&spec, text).map_err(PipelineError::Kinetic)?;
                let entries = shift_supplied(parsed.entries(), &coords, &original_equilibrium);
                let k = ExprKinetic::new(&spec, entries).map_err(PipelineError::Kinetic)?;
                (Arc::new(k), false, None)
            }
        };
    timer.lap(&mut timings, "kinetic");

    let grid = VerificationGrid::around(&spec, opts.grid_half_width, opts.grid_per_axis);
    let integrability = integrability_residual(&spec, kinetic.as_ref(), &grid.points)
        .map_err(PipelineError::Integrability)?;
    if !(integrability <= opts.integrability_tol) {
        return Err(PipelineError::Integrability(
            PotentialError::NotIntegrable {
                residual: integrability,
                tol: opts.integrability_tol,
            },
        ));
    }
    timer.lap(&mut timings, "integrability");

    let certificate =
        certificate(&spec, kinetic.as_ref(), opts.varpi).map_err(PipelineError::Certificate)?;
    timer.lap(&mut timings, "certificate");

    let hhat = build_hhat_with(
        spec.clone(),
        kinetic.clone(),
        certificate.varpi,
        &grid.points,
        opts.integrability_tol,
    )
    .map_err(PipelineError::Potential)?;
    timer.lap(&mut timings, "potential");

    let diagnostics =
        diagnose(&spec, kinetic.as_ref(), &hhat, &grid).map_err(PipelineError::Diagnostics)?;
    timer.lap(&mut timings, "diagnostics");

    Ok(Synthesis {
        spec,
        original_equilibrium,
        adaptation,
        kinetic,
        kinetic_solved,
        validity_note,
        grid,
        integrability_residual: integrability,
        hhat,
        certificate,
        diagnostics,
        timings,
    })
}

fn diagnose(
    spec: &ModelSpec,
    kinetic: &dyn KineticField,
    hhat: &ShapedPotential,
    grid: &VerificationGrid,
) -> Result<Diagnostics, PotentialError> {
    let d = spec.dou();
    let mut kin: f64 = 0.0;
    let mut pot: f64 = 0.0;
    let directions: Vec<Vec<f64>> = if d == 1 {
        Vec::new()
    } else {
        let mut dirs: Vec<Vec<f64>> = (0..d)
            .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        dirs.push(vec![1.0 / (d as f64).sqrt(); d]);
        dirs
    };
    for q in &grid.points {
        if d == 1 {
            kin = kin.max(kinetic_residual_scalar(spec, kinetic, q)?.abs());
        } else {
            for a in &directions {
                kin = kin.max(kinetic_residual(spec, kinetic, q, a)?.abs());
            }
        }
        let grad = fd_grad(|x| hhat.eval(x), q, DEFAULT_FD_STEP)?;
        let u = hhat.u_at(q)?;
        for mu in 0..d {
            pot = pot.max((grad[mu] - u[mu]).abs());
        }
    }
    Ok(Diagnostics {
        kinetic_residual: kin,
        potential_residual: pot,
    })
}
