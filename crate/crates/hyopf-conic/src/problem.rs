//! Problem statement, solver options, and solution types.

use crate::cones::ConeSpec;
use crate::sparse::CscMatrix;

/// A conic program in standard form:
///
/// ```text
/// minimize    c' x  (+ offset)
/// subject to  A x = b
///             x[slice_k]  in  K_k   for every cone slice k
/// ```
///
/// Variables not covered by any cone slice are free. Cone slices must be
/// disjoint; they need not be contiguous in the variable order.
#[derive(Debug, Clone)]
pub struct ConicProblem {
    pub num_vars: usize,
    /// Objective coefficients, length `num_vars`.
    pub objective: Vec<f64>,
    /// Constant added to the reported objective values.
    pub obj_offset: f64,
    /// Equality constraint matrix A (rows x num_vars).
    pub eq: CscMatrix,
    /// Right-hand side b.
    pub rhs: Vec<f64>,
    /// Cone slices over the variable vector.
    pub cones: Vec<ConeSlice>,
}

/// A cone applied to `x[start .. start + spec.dim()]`.
#[derive(Debug, Clone, Copy)]
pub struct ConeSlice {
    pub start: usize,
    pub spec: ConeSpec,
}

impl ConicProblem {
    /// Structural validation: dimension agreement and disjoint, in-range cone
    /// slices.
    pub fn validate(&self) -> Result<(), SolverError> {
        if self.objective.len() != self.num_vars {
            return Err(SolverError::InvalidProblem(format!(
                "objective has {} coefficients for {} variables",
                self.objective.len(),
                self.num_vars
            )));
        }
        if self.eq.ncols() != self.num_vars {
            return Err(SolverError::InvalidProblem(format!(
                "constraint matrix has {} columns for {} variables",
                self.eq.ncols(),
                self.num_vars
            )));
        }
        if self.rhs.len() != self.eq.nrows() {
            return Err(SolverError::InvalidProblem(format!(
                "right-hand side has {} entries for {} rows",
                self.rhs.len(),
                self.eq.nrows()
            )));
        }
        let mut spans: Vec<(usize, usize)> = Vec::new();
        for slice in &self.cones {
            let dim = slice.spec.dim();
            if dim == 0 {
                return Err(SolverError::InvalidProblem("zero-dimensional cone".into()));
            }
            if let ConeSpec::Soc { dim } = slice.spec {
                if dim < 2 {
                    return Err(SolverError::InvalidProblem(
                        "second-order cone needs dimension >= 2".into(),
                    ));
                }
            }
            if slice.start + dim > self.num_vars {
                return Err(SolverError::InvalidProblem(format!(
                    "cone slice {}..{} exceeds variable count {}",
                    slice.start,
                    slice.start + dim,
                    self.num_vars
                )));
            }
            spans.push((slice.start, slice.start + dim));
        }
        spans.sort_unstable();
        for pair in spans.windows(2) {
            if pair[0].1 > pair[1].0 {
                return Err(SolverError::InvalidProblem(
                    "overlapping cone slices".into(),
                ));
            }
        }
        Ok(())
    }

    /// Total barrier degree of all cones.
    pub fn degree(&self) -> usize {
        self.cones.iter().map(|s| s.spec.degree()).sum()
    }

    /// Indices not covered by any cone slice.
    pub fn free_slots(&self) -> Vec<usize> {
        let mut covered = vec![false; self.num_vars];
        for slice in &self.cones {
            for i in slice.start..slice.start + slice.spec.dim() {
                covered[i] = true;
            }
        }
        (0..self.num_vars).filter(|&i| !covered[i]).collect()
    }
}

/// Solver options. The defaults target desk-scale problems solved to high
/// accuracy.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Relative primal and dual feasibility tolerance.
    pub feas_tol: f64,
    /// Relative duality-gap tolerance.
    pub gap_tol: f64,
    /// Iteration limit.
    pub max_iter: usize,
    /// Fraction of the distance to the cone boundary taken per step.
    pub step_fraction: f64,
    /// Static regularization added to the quasi-definite KKT diagonal.
    pub static_reg: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            feas_tol: 1e-8,
            gap_tol: 1e-8,
            max_iter: 100,
            step_fraction: 0.99,
            static_reg: 1e-9,
        }
    }
}

/// Termination status of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverStatus {
    /// Converged to the requested tolerances.
    Optimal,
    /// A certificate of primal infeasibility was found; `y`, `z` hold the
    /// normalized certificate.
    PrimalInfeasible,
    /// A certificate of dual infeasibility (primal unboundedness) was found;
    /// `x` holds the normalized unbounded ray.
    DualInfeasible,
    /// Iteration limit reached without meeting the tolerances.
    IterationLimit,
}

/// Scaled KKT residuals of a primal-dual point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Residuals {
    /// ||A x - b|| / (1 + ||b||)
    pub primal: f64,
    /// ||c - A' y - z|| / (1 + ||c||)
    pub dual: f64,
    /// |c' x - b' y| / (1 + max(|c' x|, |b' y|))
    pub gap: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.gap)
    }
}

/// Result of a solve: the final primal-dual point with its status and the
/// residuals at termination.
#[derive(Debug, Clone)]
pub struct SolverSolution {
    pub status: SolverStatus,
    /// Primal point (or unbounded ray for `DualInfeasible`).
    pub x: Vec<f64>,
    /// Equality multipliers: the objective changes by `y[i]` per unit increase
    /// of `rhs[i]` at the optimum.
    pub y: Vec<f64>,
    /// Cone multipliers (zero on free slots).
    pub z: Vec<f64>,
    /// c' x + offset.
    pub obj_primal: f64,
    /// b' y + offset.
    pub obj_dual: f64,
    pub iterations: usize,
    pub residuals: Residuals,
}

/// Recomputes the scaled KKT residuals of a candidate point from scratch.
/// This is the same quantity the solver's termination test uses, so a
/// solution reported optimal satisfies `kkt_residuals(..).max() <= tol`.
pub fn kkt_residuals(problem: &ConicProblem, x: &[f64], y: &[f64], z: &[f64]) -> Residuals {
    let ax = problem.eq.matvec(x);
    let mut primal_sq = 0.0;
    for (axi, bi) in ax.iter().zip(&problem.rhs) {
        primal_sq += (axi - bi) * (axi - bi);
    }
    let aty = problem.eq.matvec_t(y);
    let mut dual_sq = 0.0;
    for i in 0..problem.num_vars {
        let r = problem.objective[i] - aty[i] - z[i];
        dual_sq += r * r;
    }
    let norm_b = problem.rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    let norm_c = problem.objective.iter().map(|v| v * v).sum::<f64>().sqrt();
    let cx: f64 = problem.objective.iter().zip(x).map(|(a, b)| a * b).sum();
    let by: f64 = problem.rhs.iter().zip(y).map(|(a, b)| a * b).sum();
    Residuals {
        primal: primal_sq.sqrt() / (1.0 + norm_b),
        dual: dual_sq.sqrt() / (1.0 + norm_c),
        gap: (cx - by).abs() / (1.0 + cx.abs().max(by.abs())),
    }
}

/// Solver failure: the problem statement is malformed or the iteration broke
/// down numerically. Infeasibility is not an error; it is reported through
/// [`SolverStatus`].
#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}
