//! Small dense linear algebra, adaptive quadrature, central finite
//! differences and a Jacobi symmetric eigensolver.

mod eigen;
mod fd;
mod mat;
mod quad;

pub use eigen::{eigenvalues_sym, min_eigen_sym};
pub use fd::{fd_grad, fd_hess, DEFAULT_FD_STEP};
pub use mat::{solve_linear, Lu, Mat};
pub use quad::{quad, quad_plain, QuadSpec};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumericsError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("singular matrix (pivot {pivot:e} below threshold {threshold:e})")]
    Singular { pivot: f64, threshold: f64 },
    #[error("quadrature did not converge on [{a}, {b}] after {subdivisions} subdivisions (error estimate {error:e})")]
    QuadNonConvergence {
        a: f64,
        b: f64,
        subdivisions: usize,
        error: f64,
    },
    #[error("non-finite value {value} at {at}")]
    NonFinite { value: f64, at: String },
    #[error("invalid quadrature tolerances: {0}")]
    BadTolerance(String),
}
