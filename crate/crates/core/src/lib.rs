//! Potential energy shaping for simple underactuated Hamiltonian systems
//! with one degree of underactuation.
//!
//! A model (inverse mass matrix, potential, actuation codistribution) is put
//! in an adapted chart, the kinetic matching equation is solved by an
//! integrating factor, the potential matching equation by line integrals,
//! and the Hessian of the shaped potential at the equilibrium is certified
//! positive-definite.

pub mod builtin;
pub mod expr;
pub mod frame;
pub mod kinetic;
pub mod model;
pub mod numerics;
pub mod pipeline;
pub mod potential;

pub use expr::{parse, CompiledExpr, Env, Expr, ExprError};
pub use frame::{frame_at, g_scalar, g_tensor, FrameError, FramePoint, GTensor};
pub use kinetic::{
    kinetic_residual, kinetic_residual_scalar, solve_kinetic_1dou, ExprKinetic, KineticError,
    KineticField, KineticSolution,
};
pub use model::{
    adapt_chart, apply_affine, load_model, AffineChart, ChartAdaptation, ModelError, ModelSpec,
};
pub use numerics::{Mat, NumericsError, QuadSpec};
pub use pipeline::{synthesize, KineticSource, PipelineError, PipelineOptions, Synthesis};
pub use potential::{
    build_hhat, certificate, integrability_residual, u_fields, PositivityCertificate,
    PotentialError, ShapedPotential, Verdict, VerificationGrid,
};
