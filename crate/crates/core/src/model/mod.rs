//! The model triple (inverse mass matrix, potential, actuation
//! codistribution), its file format, affine charts and the coordinate
//! reordering that makes the unactuated directions complement the actuated
//! ones at the equilibrium.

mod chart;
mod file;
mod spec;

pub use chart::{adapt_chart, apply_affine, complementarity, AffineChart, ChartAdaptation};
pub use file::{load_model, load_model_with, ModelFile};
pub use spec::ModelSpec;

use crate::expr::ExprError;
use crate::numerics::NumericsError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("cannot read model file: {0}")]
    Io(String),
    #[error("model file: {0}")]
    Format(String),
    #[error("expression `{context}`: {source}")]
    Expr {
        context: String,
        #[source]
        source: ExprError,
    },
    #[error("invariant violated ({name}): {detail}")]
    Invariant { name: &'static str, detail: String },
    #[error("singular chart transform: {0}")]
    SingularChart(String),
    #[error("no coordinate ordering makes the complement admissible at the equilibrium")]
    NoAdmissiblePermutation,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

impl ModelError {
    pub(crate) fn expr(context: impl Into<String>, source: ExprError) -> Self {
        ModelError::Expr {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn invariant(name: &'static str, detail: impl Into<String>) -> Self {
        ModelError::Invariant {
            name,
            detail: detail.into(),
        }
    }
}
