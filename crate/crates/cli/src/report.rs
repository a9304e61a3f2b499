//! JSON report of a synthesis run.

use std::collections::BTreeMap;

use eshape_core::{
    ChartAdaptation, KineticSource, ModelSpec, PipelineOptions, PositivityCertificate, Synthesis,
    Verdict,
};
use serde::Serialize;

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Report<'a> {
    pub schema: u32,
    pub model: ModelSummary,
    pub adaptation: &'a ChartAdaptation,
    pub kinetic: KineticSummary,
    pub integrability: Integrability,
    pub certificate: &'a PositivityCertificate,
    pub verdict: Verdict,
    pub diagnostics: Diagnostics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_check: Option<GammaCheck>,
    pub timings: &'a BTreeMap<&'static str, f64>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ModelSummary {
    pub n: usize,
    pub m: usize,
    pub coords: Vec<String>,
    /// Coordinates after centering and reordering; ĥ and the grid use these.
    pub adapted_coords: Vec<String>,
    pub equilibrium: Vec<f64>,
    pub constants: BTreeMap<String, f64>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct KineticSummary {
    /// "solved" (integrating factor) or "supplied" (residual-checked only).
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validity_note: Option<String>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Integrability {
    pub residual: f64,
    pub tolerance: f64,
    pub grid_half_width: f64,
    pub grid_per_axis: usize,
    pub grid_points: usize,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Diagnostics {
    pub max_kinetic_residual: f64,
    pub max_potential_residual: f64,
}

/// For the double pendulum: the chart parameter g against A/B and the
/// complement determinant A − gB at the equilibrium.
#[derive(Serialize)]
#[serde(untagged, rename_all_fields = "camelCase")]
pub enum GammaCheck {
    Applicable {
        gamma: f64,
        a_over_b: f64,
        determinant: f64,
        gamma_exceeds_ratio: bool,
    },
    NotApplicable {
        note: String,
    },
}

impl GammaCheck {
    pub fn from_spec(spec: &ModelSpec) -> GammaCheck {
        let c = spec.constants();
        match (c.get("A"), c.get("B"), c.get("g")) {
            (Some(a), Some(b), Some(gamma)) => GammaCheck::Applicable {
                gamma,
                a_over_b: a / b,
                determinant: a - gamma * b,
                gamma_exceeds_ratio: gamma > a / b,
            },
            _ => GammaCheck::NotApplicable {
                note: "not applicable: the model has no constants A, B and g".into(),
            },
        }
    }
}

impl<'a> Report<'a> {
    pub fn new(
        spec: &ModelSpec,
        s: &'a Synthesis,
        opts: &PipelineOptions,
        gamma_check: Option<GammaCheck>,
    ) -> Report<'a> {
        let (status, xi) = match &opts.kinetic {
            KineticSource::Solve { xi } => ("solved", Some(xi.to_string())),
            KineticSource::Supplied { .. } => ("supplied", None),
        };
        Report {
            schema: 1,
            model: ModelSummary {
                n: spec.n(),
                m: spec.m(),
                coords: spec.coords().to_vec(),
                adapted_coords: s.spec.coords().to_vec(),
                equilibrium: s.original_equilibrium.clone(),
                constants: spec
                    .constants()
                    .iter()
                    .map(|(k, v)| (k.to_string(), v))
                    .collect(),
            },
            adaptation: &s.adaptation,
            kinetic: KineticSummary {
                status,
                xi,
                validity_note: s.validity_note.clone(),
            },
            integrability: Integrability {
                residual: s.integrability_residual,
                tolerance: opts.integrability_tol,
                grid_half_width: s.grid.half_width,
                grid_per_axis: s.grid.per_axis,
                grid_points: s.grid.points.len(),
            },
            certificate: &s.certificate,
            verdict: s.certificate.verdict,
            diagnostics: Diagnostics {
                max_kinetic_residual: s.diagnostics.kinetic_residual,
                max_potential_residual: s.diagnostics.potential_residual,
            },
            gamma_check,
            timings: &s.timings,
        }
    }
}
