//! Sparse linear algebra: fill-reducing ordering, Cholesky for the SPD
//! Laplacians, static-pivot LU for Newton Jacobians and least-squares angle recovery.

mod cholesky;
mod lu;
mod ordering;
mod recovery;
mod sparse;

pub use cholesky::{SpdOperator, SOLVE_RESIDUAL_TOL};
pub use lu::SparseLu;
pub use ordering::Symbolic;
pub use recovery::{recover_angles, AngleRecovery};
pub use sparse::{norm_inf, CscMatrix};
