//! Physical state recovery from relaxation solutions: graph-traversal
//! voltage completion, least-squares phase refinement, restoration of real
//! DC voltages, and the accompanying diagnostics — reconstruction error,
//! per-bus balance errors, converter loss errors with mode fixing, and
//! locational marginal prices.

use std::collections::VecDeque;

use num_complex::Complex64;
use thiserror::Error;

use crate::builder::QcqpProblem;
use crate::grid::{BusKind, Grid, Side};
use crate::relax::PartialMatrix;
use hyopf_conic::{SolverSolution, SolverStatus};

/// Reconstruction-error threshold below which the relaxation is treated as
/// exact and LMPs are emitted.
pub const LMP_EXACTNESS_GATE: f64 = 1e-8;

/// Converter loss error above which the mode-fix remediation triggers
/// (per unit).
pub const MODE_FIX_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum RecoverError {
    #[error("bus {bus} has negative squared voltage magnitude {value:.3e}")]
    NegativeDiagonal { bus: usize, value: f64 },
    #[error(
        "DC branch {branch} carries artificial reactive circulation {value:.3e}; \
         the relaxation solution is inexact"
    )]
    ArtificialCirculation { branch: usize, value: f64 },
}

/// Locational marginal prices per bus (currency per p.u.·h).
#[derive(Clone, Debug, PartialEq)]
pub struct Lmps {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

/// Recovered physical state and its quality measures.
#[derive(Clone, Debug)]
pub struct RecoveredState {
    /// Rank-1 voltage approximation of the relaxation solution.
    pub v_hat: Vec<Complex64>,
    /// Same state with DC entries restored to real nonnegative values.
    pub v_bar: Vec<Complex64>,
    pub kappa_hat: f64,
    /// Set when the grid has no branches and the reconstruction error fell
    /// back to the diagonal-only formula.
    pub kappa_fallback: bool,
    /// Per-bus complex power balance errors.
    pub epsilon: Vec<Complex64>,
    /// Per-converter loss errors.
    pub theta: Vec<f64>,
    /// Present only when the solve was optimal and exactness held.
    pub lmps: Option<Lmps>,
}

/// Completes bus voltages from the Gram entries: magnitudes from the
/// diagonal, angles by spanning-tree traversal per subgrid with the
/// lowest-index bus as the zero-angle reference. Crossing a branch between
/// `i` and `j` sets `θ_j = θ_i − arg(V_ij)`.
pub fn traversal_completion(
    grid: &Grid,
    partial: &PartialMatrix,
) -> Result<Vec<Complex64>, RecoverError> {
    let n = grid.num_buses();
    let mut magnitude = vec![0.0; n];
    for (i, &d) in partial.diag.iter().enumerate() {
        if d < -1e-9 {
            return Err(RecoverError::NegativeDiagonal { bus: i, value: d });
        }
        magnitude[i] = d.max(0.0).sqrt();
    }

    let mut adjacency = vec![Vec::new(); n];
    for br in &grid.branches {
        let (s, d) = (br.src.index(), br.dst.index());
        adjacency[s].push(d);
        adjacency[d].push(s);
    }

    let mut angle = vec![0.0; n];
    let mut seen = vec![false; n];
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        angle[root] = 0.0;
        let mut queue = VecDeque::from([root]);
        while let Some(i) = queue.pop_front() {
            for &j in &adjacency[i] {
                if !seen[j] {
                    seen[j] = true;
                    let v_ij = partial.get(i, j).unwrap_or_default();
                    angle[j] = angle[i] - v_ij.arg();
                    queue.push_back(j);
                }
            }
        }
    }

    Ok((0..n)
        .map(|i| Complex64::from_polar(magnitude[i], angle[i]))
        .collect())
}

/// Squared Frobenius deviation on the sparsity pattern,
/// `‖P_J(vvᴴ − V)‖_F²`, counting ordered pairs.
fn pattern_deviation(partial: &PartialMatrix, v: &[Complex64]) -> f64 {
    let mut total = 0.0;
    for &i in &partial.diag_members {
        total += (v[i].norm_sqr() - partial.diag[i]).powi(2);
    }
    for (&(i, j), &target) in &partial.entries {
        total += 2.0 * (v[i] * v[j].conj() - target).norm_sqr();
    }
    total
}

/// Wirtinger gradient `g = 2·P_J(vvᴴ − V)·v` of the pattern deviation.
fn pattern_gradient(partial: &PartialMatrix, v: &[Complex64]) -> Vec<Complex64> {
    let mut g = vec![Complex64::default(); v.len()];
    for &i in &partial.diag_members {
        g[i] += 2.0 * (v[i].norm_sqr() - partial.diag[i]) * v[i];
    }
    for (&(i, j), &target) in &partial.entries {
        let r = v[i] * v[j].conj() - target;
        g[i] += 2.0 * r * v[j];
        g[j] += 2.0 * r.conj() * v[i];
    }
    g
}

/// Refines a traversal-completed voltage vector by gradient descent on
/// `‖P_J(vvᴴ − V)‖_F²` with Armijo backtracking. Returns the best iterate;
/// stops on gradient norm ≤ 1e−8, relative decrease ≤ 1e−12, or 500
/// iterations.
pub fn least_squares_refine(partial: &PartialMatrix, v0: &[Complex64]) -> Vec<Complex64> {
    const MAX_ITER: usize = 500;
    const GRAD_TOL: f64 = 1e-8;
    const REL_DECREASE: f64 = 1e-12;
    const SUFFICIENT: f64 = 1e-4;

    let mut v = v0.to_vec();
    let mut value = pattern_deviation(partial, &v);
    let mut best = (v.clone(), value);

    for _ in 0..MAX_ITER {
        let g = pattern_gradient(partial, &v);
        let g_norm_sq: f64 = g.iter().map(Complex64::norm_sqr).sum();
        if g_norm_sq.sqrt() <= GRAD_TOL {
            break;
        }
        // Directional derivative along −g is −2‖g‖².
        let mut alpha = 1.0;
        let mut accepted = None;
        while alpha > 1e-18 {
            let candidate: Vec<Complex64> =
                v.iter().zip(&g).map(|(vi, gi)| vi - alpha * gi).collect();
            let cand_value = pattern_deviation(partial, &candidate);
            if cand_value <= value - SUFFICIENT * alpha * 2.0 * g_norm_sq {
                accepted = Some((candidate, cand_value));
                break;
            }
            alpha *= 0.5;
        }
        let Some((next, next_value)) = accepted else { break };
        let decrease = value - next_value;
        v = next;
        value = next_value;
        if value < best.1 {
            best = (v.clone(), value);
        }
        if decrease <= REL_DECREASE * value.max(f64::MIN_POSITIVE) {
            break;
        }
    }
    best.0
}

/// Reconstruction error `κ̂ = ‖P_J(v̂v̂ᴴ − V)‖_F² / |J|` over the ordered
/// pairs of the sparsity pattern. A branchless grid has an empty pattern;
/// the error then falls back to the diagonal deviations with denominator 1
/// and the flag set.
pub fn reconstruction_error(partial: &PartialMatrix, v: &[Complex64]) -> (f64, bool) {
    if partial.entries.is_empty() && partial.diag_members.is_empty() {
        let total: f64 = partial
            .diag
            .iter()
            .enumerate()
            .map(|(i, &d)| (v[i].norm_sqr() - d).powi(2))
            .sum();
        return (total, true);
    }
    let count = partial.diag_members.len() + 2 * partial.entries.len();
    (pattern_deviation(partial, v) / count as f64, false)
}

/// Per-bus complex power balance error
/// `ε_n = v̂ᴴ(P_n + iQ_n)v̂ + (p_n + iq_n)ᵀf − Σ_j wᵀs_j − c_n`, where the
/// constant `c_n` collects the folded fixed injections. Zero at every
/// feasible point of the unified problem.
pub fn power_balance_error(
    problem: &QcqpProblem,
    v: &[Complex64],
    f: &[f64],
    s: &[f64],
) -> Vec<Complex64> {
    problem.balance_residual(v, f, s)
}

/// The artificial reactive circulation `Im(conj(V_src)·V_dst)` of every DC
/// branch at a voltage profile; all must vanish at a balanced solution.
pub fn dc_circulation(grid: &Grid, v: &[Complex64]) -> Vec<(usize, f64)> {
    grid.branches
        .iter()
        .enumerate()
        .filter(|(_, br)| grid.bus(br.src).kind == BusKind::Dc)
        .map(|(k, br)| {
            let circ = (v[br.src.index()].conj() * v[br.dst.index()]).im;
            (k, circ)
        })
        .collect()
}

/// Restores real nonnegative DC voltages: AC entries are kept, DC entries
/// replaced by their magnitudes. Every constraint function is invariant
/// under this restoration as long as no DC branch carries artificial
/// reactive circulation; a circulation above 1e−6 is reported as a
/// diagnostic error instead.
pub fn restore_dc_state(grid: &Grid, v_hat: &[Complex64]) -> Result<Vec<Complex64>, RecoverError> {
    for (k, circ) in dc_circulation(grid, v_hat) {
        if circ.abs() > 1e-6 {
            return Err(RecoverError::ArtificialCirculation { branch: k, value: circ });
        }
    }
    Ok(grid
        .buses
        .iter()
        .zip(v_hat)
        .map(|(bus, &v)| match bus.kind {
            BusKind::Ac => v,
            BusKind::Dc => Complex64::new(v.norm(), 0.0),
        })
        .collect())
}

/// Largest change of any constraint function value (balance, inequality,
/// and loss) between two voltage profiles at fixed `(f, s)`. Used to verify
/// that DC restoration preserves the model exactly.
pub fn constraint_value_drift(
    problem: &QcqpProblem,
    v_a: &[Complex64],
    v_b: &[Complex64],
    f: &[f64],
    s: &[f64],
) -> f64 {
    let mut drift: f64 = 0.0;
    for (a, b) in problem
        .balance_residual(v_a, f, s)
        .iter()
        .zip(problem.balance_residual(v_b, f, s))
    {
        drift = drift.max((a - b).norm());
    }
    for (a, b) in problem
        .inequality_values(v_a, f, s)
        .iter()
        .zip(problem.inequality_values(v_b, f, s))
    {
        drift = drift.max((a - b).abs());
    }
    drift.max((problem.f_loss(v_a, f) - problem.f_loss(v_b, f)).abs())
}

/// Converter loss errors
/// `ϑ_l = eta_fwd·(p_src − [Re S_src]₊) + eta_bwd·(p_dst − [Re S_dst]₊)`;
/// zero exactly when the converter respects mode complementarity.
pub fn converter_loss_error(grid: &Grid, f: &[f64]) -> Vec<f64> {
    grid.converters
        .iter()
        .enumerate()
        .map(|(l, cv)| {
            let p_src = f[4 * l];
            let p_dst = f[4 * l + 1];
            let s_src = p_src - (1.0 - cv.eta_bwd) * p_dst;
            let s_dst = p_dst - (1.0 - cv.eta_fwd) * p_src;
            cv.eta_fwd * (p_src - s_src.max(0.0)) + cv.eta_bwd * (p_dst - s_dst.max(0.0))
        })
        .collect()
}

/// Mode fixes for converters whose loss error exceeds `tol`: positive net
/// source-to-destination flow pins the destination draw to zero, otherwise
/// the source draw.
pub fn mode_pins(grid: &Grid, f: &[f64], tol: f64) -> Vec<(usize, Side)> {
    let theta = converter_loss_error(grid, f);
    grid.converters
        .iter()
        .enumerate()
        .filter(|&(l, _)| theta[l] > tol)
        .map(|(l, cv)| {
            let net = f[4 * l] - (1.0 - cv.eta_bwd) * f[4 * l + 1];
            (l, if net > 0.0 { Side::Dst } else { Side::Src })
        })
        .collect()
}

/// LMPs from the balance-row duals, gated on solver optimality and
/// relaxation exactness: the price of bus `n` is the marginal objective
/// increase per unit of additional load, `−y` of its balance rows.
pub fn extract_lmps(
    solution: &SolverSolution,
    num_buses: usize,
    kappa_hat: f64,
    threshold: f64,
) -> Option<Lmps> {
    if solution.status != SolverStatus::Optimal || !(kappa_hat <= threshold) {
        return None;
    }
    Some(Lmps {
        p: (0..num_buses).map(|k| -solution.y[2 * k]).collect(),
        q: (0..num_buses).map(|k| -solution.y[2 * k + 1]).collect(),
    })
}
