//! End-to-end solve pipeline: validation, modeling, relaxation, conic
//! solve, state recovery, diagnostics, and price extraction in one call.
//!
//! [`run`] is the programmatic equivalent of the command-line `solve`
//! subcommand. It takes a [`Grid`] and a [`PipelineConfig`] and produces a
//! [`PipelineOutcome`] holding the serializable [`RunReport`] next to the
//! full numerical artifacts (recovered voltages, converter flows, solver
//! iterate) for callers that want to post-process them.

use crate::builder::{assemble_pinned, BuildError, QcqpProblem};
use crate::grid::{Grid, ValidationReport};
use crate::recover::{
    converter_loss_error, extract_lmps, least_squares_refine, mode_pins, power_balance_error,
    reconstruction_error, restore_dc_state, traversal_completion, Lmps, RecoverError,
};
use crate::relax::{
    build_socr, build_sdr, extract_f, extract_partial, extract_s, RelaxError, RelaxationKind,
};
use hyopf_conic::{
    solve, ConicProblem, SolverConfig, SolverError, SolverSolution, SolverStatus,
};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Everything a pipeline run needs besides the grid itself.
#[derive(Clone, Debug)]
pub struct PipelineConfig {
    /// Which relaxation to solve.
    pub relaxation: RelaxationKind,
    /// Loss price τ in currency per p.u.·h; zero prices pure dispatch cost.
    pub tau: f64,
    /// Interior-point settings for the conic solve.
    pub solver: SolverConfig,
    /// Converter loss errors above this trigger the one-shot mode fix.
    pub mode_fix_tol: f64,
    /// LMPs are reported only while the reconstruction error stays below
    /// this gate.
    pub lmp_gate: f64,
    /// Reference objective for the optimality-gap line, if one is known.
    pub reference: Option<f64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            relaxation: RelaxationKind::Socr,
            tau: 0.0,
            solver: SolverConfig {
                feas_tol: 1e-10,
                gap_tol: 1e-10,
                ..SolverConfig::default()
            },
            mode_fix_tol: 1e-6,
            lmp_gate: 1e-8,
            reference: None,
        }
    }
}

/// Wall-clock seconds spent in each pipeline stage.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub verification: f64,
    pub modeling: f64,
    pub solve: f64,
    pub recovery: f64,
}

/// Serializable summary of one pipeline run. Diagnostic fields are `None`
/// whenever the stage that produces them did not run (a non-optimal solve
/// skips recovery entirely).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// Relaxation identifier, `"socr"` or `"sdr"`.
    pub relaxation: String,
    /// Solver termination, e.g. `"optimal"` or `"iteration-limit"`.
    pub status: String,
    /// Relaxation objective in currency per hour.
    pub objective: f64,
    pub iterations: usize,
    /// Normalized reconstruction error κ̂ of the Gram completion.
    pub kappa_hat: Option<f64>,
    /// Largest power-balance residual magnitude max_n |ε_n|.
    pub max_eps: Option<f64>,
    /// Largest converter loss error max_l ϑ_l.
    pub max_theta: Option<f64>,
    pub dc_radial: bool,
    pub hybrid_architecture: bool,
    /// True when a converter was pinned and the problem re-solved once.
    pub mode_fix_applied: bool,
    /// Optimality gap in percent against the configured reference.
    pub gap: Option<f64>,
    pub timings: Timings,
    /// Locational marginal prices for active power, per bus.
    pub lmp_p: Option<Vec<f64>>,
    /// Locational marginal prices for reactive power, per bus.
    pub lmp_q: Option<Vec<f64>>,
    /// Recovered voltage magnitudes, per bus.
    pub v_mag: Option<Vec<f64>>,
}

/// Full result of [`run`]: the report plus the numerical state behind it.
#[derive(Clone, Debug)]
pub struct PipelineOutcome {
    pub report: RunReport,
    /// Recovered bus voltages after DC restoration; `None` without recovery.
    pub voltages: Option<Vec<Complex64>>,
    /// Converter flow variables in source-major order.
    pub f: Option<Vec<f64>>,
    /// Injector polygon coordinates.
    pub s: Option<Vec<f64>>,
    pub lmps: Option<Lmps>,
    pub solution: SolverSolution,
    pub problem: QcqpProblem,
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("grid validation failed:{}", format_violations(.0))]
    Invalid(ValidationReport),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Relax(#[from] RelaxError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Recover(#[from] RecoverError),
    #[error("optimality gap is undefined for a zero reference objective")]
    ZeroReference,
}

fn format_violations(report: &ValidationReport) -> String {
    report
        .violations
        .iter()
        .map(|v| format!("\n  [{}] {}: {}", v.rule, v.entity, v.message))
        .collect()
}

/// Optimality gap in percent, `100·(1 − p_relax/p_ref)`.
pub fn optimality_gap(p_ref: f64, p_relax: f64) -> Result<f64, PipelineError> {
    if p_ref == 0.0 {
        return Err(PipelineError::ZeroReference);
    }
    Ok(100.0 * (1.0 - p_relax / p_ref))
}

fn status_label(status: SolverStatus) -> &'static str {
    match status {
        SolverStatus::Optimal => "optimal",
        SolverStatus::PrimalInfeasible => "primal-infeasible",
        SolverStatus::DualInfeasible => "dual-infeasible",
        SolverStatus::IterationLimit => "iteration-limit",
    }
}

fn build_relaxation(
    problem: &QcqpProblem,
    kind: RelaxationKind,
) -> Result<(ConicProblem, crate::relax::VariableMap), PipelineError> {
    Ok(match kind {
        RelaxationKind::Socr => build_socr(problem),
        RelaxationKind::Sdr => build_sdr(problem)?,
    })
}

struct Recovered {
    voltages: Vec<Complex64>,
    f: Vec<f64>,
    s: Vec<f64>,
    kappa_hat: f64,
    max_eps: f64,
    theta: Vec<f64>,
}

fn recover_state(
    grid: &Grid,
    problem: &QcqpProblem,
    map: &crate::relax::VariableMap,
    solution: &SolverSolution,
) -> Result<Recovered, PipelineError> {
    let partial = extract_partial(&solution.x, map);
    let f = extract_f(&solution.x, map, problem.num_f());
    let s = extract_s(&solution.x, map, problem.num_s());
    let v0 = traversal_completion(grid, &partial)?;
    let v_hat = least_squares_refine(&partial, &v0);
    let voltages = restore_dc_state(grid, &v_hat)?;
    let (kappa_hat, _diag_only) = reconstruction_error(&partial, &voltages);
    let max_eps = power_balance_error(problem, &voltages, &f, &s)
        .iter()
        .map(|e| e.norm())
        .fold(0.0, f64::max);
    let theta = converter_loss_error(grid, &f);
    Ok(Recovered { voltages, f, s, kappa_hat, max_eps, theta })
}

/// Runs the whole pipeline on a grid: validate, assemble, relax, solve,
/// recover, and price. A converter loss error above `mode_fix_tol` triggers
/// exactly one pinned re-solve; everything else is a single pass.
pub fn run(grid: &Grid, config: &PipelineConfig) -> Result<PipelineOutcome, PipelineError> {
    let clock = Instant::now();
    let validation = grid.validate();
    if !validation.is_valid() {
        return Err(PipelineError::Invalid(validation));
    }
    let verification = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let mut problem = assemble_pinned(grid, config.tau, &[])?;
    let (conic, mut map) = build_relaxation(&problem, config.relaxation)?;
    let modeling = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let mut solution = solve(&conic, &config.solver)?;
    let mut solve_time = clock.elapsed().as_secs_f64();

    let mut report = RunReport {
        relaxation: config.relaxation.to_string(),
        status: status_label(solution.status).to_string(),
        objective: solution.obj_primal,
        iterations: solution.iterations,
        kappa_hat: None,
        max_eps: None,
        max_theta: None,
        dc_radial: validation.dc_radial,
        hybrid_architecture: validation.hybrid_architecture,
        mode_fix_applied: false,
        gap: None,
        timings: Timings { verification, modeling, solve: solve_time, recovery: 0.0 },
        lmp_p: None,
        lmp_q: None,
        v_mag: None,
    };

    if solution.status != SolverStatus::Optimal {
        return Ok(PipelineOutcome {
            report,
            voltages: None,
            f: None,
            s: None,
            lmps: None,
            solution,
            problem,
        });
    }

    let clock = Instant::now();
    let mut recovered = recover_state(grid, &problem, &map, &solution)?;
    let mut recovery = clock.elapsed().as_secs_f64();

    let max_theta = recovered.theta.iter().copied().fold(0.0, f64::max);
    if max_theta > config.mode_fix_tol {
        let pins = mode_pins(grid, &recovered.f, config.mode_fix_tol);
        if !pins.is_empty() {
            let clock = Instant::now();
            problem = assemble_pinned(grid, config.tau, &pins)?;
            let (conic, fixed_map) = build_relaxation(&problem, config.relaxation)?;
            map = fixed_map;
            report.timings.modeling += clock.elapsed().as_secs_f64();

            let clock = Instant::now();
            solution = solve(&conic, &config.solver)?;
            solve_time += clock.elapsed().as_secs_f64();
            report.status = status_label(solution.status).to_string();
            report.objective = solution.obj_primal;
            report.iterations += solution.iterations;
            report.mode_fix_applied = true;
            report.timings.solve = solve_time;

            if solution.status != SolverStatus::Optimal {
                return Ok(PipelineOutcome {
                    report,
                    voltages: None,
                    f: None,
                    s: None,
                    lmps: None,
                    solution,
                    problem,
                });
            }

            let clock = Instant::now();
            recovered = recover_state(grid, &problem, &map, &solution)?;
            recovery += clock.elapsed().as_secs_f64();
        }
    }

    report.timings.recovery = recovery;
    report.kappa_hat = Some(recovered.kappa_hat);
    report.max_eps = Some(recovered.max_eps);
    report.max_theta = Some(recovered.theta.iter().copied().fold(0.0, f64::max));
    report.v_mag = Some(recovered.voltages.iter().map(|z| z.norm()).collect());

    let lmps = extract_lmps(&solution, grid.num_buses(), recovered.kappa_hat, config.lmp_gate);
    if let Some(ref lmps) = lmps {
        report.lmp_p = Some(lmps.p.clone());
        report.lmp_q = Some(lmps.q.clone());
    }

    if let Some(reference) = config.reference {
        report.gap = Some(optimality_gap(reference, solution.obj_primal)?);
    }

    Ok(PipelineOutcome {
        report,
        voltages: Some(recovered.voltages),
        f: Some(recovered.f),
        s: Some(recovered.s),
        lmps,
        solution,
        problem,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases;

    #[test]
    fn gap_formula_matches_worked_examples() {
        assert_eq!(optimality_gap(100.0, 99.0).unwrap(), 1.0);
        assert_eq!(optimality_gap(100.0, 100.0).unwrap(), 0.0);
        assert_eq!(optimality_gap(100.0, 100.5).unwrap(), -0.5);
        assert!(matches!(
            optimality_gap(0.0, 1.0),
            Err(PipelineError::ZeroReference)
        ));
    }

    #[test]
    fn socr_run_on_a_two_bus_case_reports_clean_diagnostics() {
        let grid = cases::case2_ac();
        let outcome = run(&grid, &PipelineConfig::default()).unwrap();
        let report = &outcome.report;
        assert_eq!(report.status, "optimal");
        assert_eq!(report.relaxation, "socr");
        assert!(report.kappa_hat.unwrap() <= 1e-8, "κ̂ = {:?}", report.kappa_hat);
        assert!(report.max_eps.unwrap() <= 1e-6, "ε = {:?}", report.max_eps);
        assert!(!report.mode_fix_applied);
        assert!(report.gap.is_none());
        let lmp_p = report.lmp_p.as_ref().expect("prices gated in");
        assert_eq!(lmp_p.len(), 2);
        assert!((lmp_p[0] - 10.0).abs() < 1e-4, "lmp_p[0] = {}", lmp_p[0]);
        assert!(outcome.voltages.as_ref().unwrap().len() == 2);
    }

    #[test]
    fn repeated_runs_are_deterministic_outside_the_timings() {
        let grid = cases::case3_ac();
        let a = run(&grid, &PipelineConfig::default()).unwrap().report;
        let b = run(&grid, &PipelineConfig::default()).unwrap().report;
        let strip = |mut r: RunReport| {
            r.timings = Timings::default();
            r
        };
        assert_eq!(strip(a), strip(b));
    }

    #[test]
    fn converter_mode_cheat_is_repaired_by_one_pinned_resolve() {
        let grid = cases::case_adv();
        let outcome = run(&grid, &PipelineConfig::default()).unwrap();
        let report = &outcome.report;
        assert_eq!(report.status, "optimal");
        assert!(report.mode_fix_applied, "the cheat must trigger the mode fix");
        assert!(
            report.max_theta.unwrap() <= 1e-8,
            "residual loss error {:?}",
            report.max_theta
        );
        assert!(report.kappa_hat.unwrap() <= 1e-8);
    }

    #[test]
    fn reference_objective_turns_into_a_gap_line() {
        let grid = cases::case2_ac();
        let base = run(&grid, &PipelineConfig::default()).unwrap();
        let config = PipelineConfig {
            reference: Some(base.report.objective),
            ..PipelineConfig::default()
        };
        let gap = run(&grid, &config).unwrap().report.gap.unwrap();
        assert!(gap.abs() < 1e-9, "gap against own objective = {gap}");
    }

    #[test]
    fn invalid_grids_are_rejected_before_any_modeling() {
        let mut grid = cases::case2_ac();
        grid.branches[0].nu_lb = None;
        grid.branches[0].nu_ub = None;
        let err = run(&grid, &PipelineConfig::default()).unwrap_err();
        match err {
            PipelineError::Invalid(report) => {
                assert!(report.violations.iter().any(|v| v.rule == "branch_drop_bounds"));
            }
            other => panic!("expected a validation failure, got {other}"),
        }
    }

    #[test]
    fn run_reports_round_trip_through_json() {
        let grid = cases::case2_dc();
        let report = run(&grid, &PipelineConfig::default()).unwrap().report;
        let text = serde_json::to_string_pretty(&report).unwrap();
        let back: RunReport = serde_json::from_str(&text).unwrap();
        assert_eq!(report, back);
    }
}
