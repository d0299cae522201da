//! A small primal-dual conic interior-point solver.
//!
//! Solves problems of the form
//!
//! ```text
//! minimize    c' x
//! subject to  A x = b
//!             x[slice]  in  K    for each declared cone slice
//! ```
//!
//! where each `K` is a nonnegative orthant, a second-order cone, or a cone of
//! positive semidefinite matrices in packed symmetric storage, and variables
//! outside every slice are free. The algorithm is an infeasible-start
//! path-following method with Nesterov–Todd scaling and a Mehrotra
//! predictor-corrector step; the Newton systems are solved by a sparse
//! quasi-definite LDL^T factorization with static regularization and
//! iterative refinement. All steps are deterministic.
//!
//! Equality multipliers are reported with the convention that `y[i]` is the
//! sensitivity of the optimal objective to the right-hand side `b[i]`.

pub mod cones;
pub mod ipm;
pub mod problem;
pub mod sparse;

pub use cones::{smat, svec, svec_index, ConeSpec};
pub use ipm::solve;
pub use problem::{
    kkt_residuals, ConeSlice, ConicProblem, Residuals, SolverConfig, SolverError, SolverSolution,
    SolverStatus,
};
pub use sparse::CscMatrix;
