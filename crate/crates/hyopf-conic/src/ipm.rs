//! Infeasible-start primal-dual path-following iteration with Nesterov–Todd
//! scaling and a Mehrotra predictor-corrector step.
//!
//! Each iteration eliminates the cone multipliers from the Newton system and
//! solves the symmetric quasi-definite KKT system
//!
//! ```text
//! [ -(H + delta I)   A' ] [ dx ]   [ r_d - W^{-1} v ]
//! [      A      delta I ] [ dy ] = [      -r_p      ]
//! ```
//!
//! by a static-order LDL^T factorization with iterative refinement against
//! the unregularized matrix. `H = W^{-1} W^{-T}` is the NT scaling block and
//! `v` the target in scaled complementarity space. The same factorization
//! serves the predictor and corrector solves of one iteration.

use crate::cones::{lambda_solve, ConeSpec, HBlock, Scaling};
use crate::problem::{
    kkt_residuals, ConicProblem, Residuals, SolverConfig, SolverError, SolverSolution,
    SolverStatus,
};
use crate::sparse::{CscMatrix, LdlSymbolic};

/// Solves a conic program. Infeasibility is reported through the solution
/// status; `Err` is reserved for malformed problems and numerical breakdown.
/// The iteration is deterministic: repeated calls on the same problem produce
/// bit-identical results.
pub fn solve(problem: &ConicProblem, config: &SolverConfig) -> Result<SolverSolution, SolverError> {
    problem.validate()?;

    // Presolve: empty constraint rows are either trivially infeasible or
    // redundant; reduced-problem multipliers map back by reinserting zeros.
    let row_used = {
        let mut used = vec![false; problem.eq.nrows()];
        for (r, _, v) in problem.eq.to_triplets() {
            if v != 0.0 {
                used[r] = true;
            }
        }
        used
    };
    if row_used.iter().all(|&u| u) {
        return Ipm::new(problem, config).run();
    }
    for (i, used) in row_used.iter().enumerate() {
        if !used && problem.rhs[i] != 0.0 {
            // 0 = b_i with b_i != 0: +/- e_i certifies infeasibility.
            let mut y = vec![0.0; problem.eq.nrows()];
            y[i] = problem.rhs[i].signum();
            let x = vec![0.0; problem.num_vars];
            let z = vec![0.0; problem.num_vars];
            let residuals = kkt_residuals(problem, &x, &y, &z);
            return Ok(SolverSolution {
                status: SolverStatus::PrimalInfeasible,
                obj_primal: problem.obj_offset,
                obj_dual: problem.rhs[i].abs() + problem.obj_offset,
                x,
                y,
                z,
                iterations: 0,
                residuals,
            });
        }
    }
    let kept: Vec<usize> = (0..problem.eq.nrows()).filter(|&i| row_used[i]).collect();
    let mut row_map = vec![usize::MAX; problem.eq.nrows()];
    for (new, &old) in kept.iter().enumerate() {
        row_map[old] = new;
    }
    let triplets: Vec<(usize, usize, f64)> = problem
        .eq
        .to_triplets()
        .into_iter()
        .filter(|&(_, _, v)| v != 0.0)
        .map(|(r, c, v)| (row_map[r], c, v))
        .collect();
    let reduced = ConicProblem {
        num_vars: problem.num_vars,
        objective: problem.objective.clone(),
        obj_offset: problem.obj_offset,
        eq: CscMatrix::from_triplets(kept.len(), problem.num_vars, &triplets),
        rhs: kept.iter().map(|&i| problem.rhs[i]).collect(),
        cones: problem.cones.clone(),
    };
    let mut solution = Ipm::new(&reduced, config).run()?;
    let mut y_full = vec![0.0; problem.eq.nrows()];
    for (new, &old) in kept.iter().enumerate() {
        y_full[old] = solution.y[new];
    }
    solution.y = y_full;
    solution.residuals = kkt_residuals(problem, &solution.x, &solution.y, &solution.z);
    Ok(solution)
}

struct Ipm<'a> {
    problem: &'a ConicProblem,
    config: &'a SolverConfig,
    n: usize,
    p: usize,
    a_rows: Vec<Vec<(usize, f64)>>,
    cones: Vec<(usize, ConeSpec)>,
    degree: usize,
}

struct Direction {
    dx: Vec<f64>,
    dy: Vec<f64>,
    dz: Vec<f64>,
}

/// Shape of the factored KKT system for one iteration's scalings.
struct KktLayout {
    /// Base of the auxiliary column pair per cone; `None` where the cone's
    /// scaling block enters the matrix directly.
    extra: Vec<Option<usize>>,
    /// Total system dimension including auxiliary columns.
    dim: usize,
}

impl<'a> Ipm<'a> {
    fn new(problem: &'a ConicProblem, config: &'a SolverConfig) -> Self {
        let cones: Vec<(usize, ConeSpec)> =
            problem.cones.iter().map(|s| (s.start, s.spec)).collect();
        Ipm {
            problem,
            config,
            n: problem.num_vars,
            p: problem.eq.nrows(),
            a_rows: problem.eq.to_row_major(),
            degree: problem.degree(),
            cones,
        }
    }

    fn run(mut self) -> Result<SolverSolution, SolverError> {
        let (mut x, mut y, mut z) = self.initialize()?;
        if self.degree == 0 {
            // No cones: the initialization already solved the two least-squares
            // systems that characterize an optimum of an equality-constrained
            // linear objective.
            let residuals = kkt_residuals(self.problem, &x, &y, &z);
            let tol = self.config.feas_tol.max(self.config.gap_tol);
            let status = if residuals.max() <= tol {
                SolverStatus::Optimal
            } else {
                SolverStatus::IterationLimit
            };
            return Ok(self.finish(status, x, y, z, 0, residuals));
        }

        for iter in 0..=self.config.max_iter {
            let residuals = kkt_residuals(self.problem, &x, &y, &z);
            if residuals.primal <= self.config.feas_tol
                && residuals.dual <= self.config.feas_tol
                && residuals.gap <= self.config.gap_tol
            {
                return Ok(self.finish(SolverStatus::Optimal, x, y, z, iter, residuals));
            }
            if let Some(status) = self.certificate(&x, &y, &z) {
                match status {
                    SolverStatus::PrimalInfeasible => {
                        let by: f64 = dot(&self.problem.rhs, &y);
                        scale(&mut y, 1.0 / by);
                        scale(&mut z, 1.0 / by);
                    }
                    SolverStatus::DualInfeasible => {
                        let cx: f64 = dot(&self.problem.objective, &x);
                        scale(&mut x, -1.0 / cx);
                    }
                    _ => unreachable!(),
                }
                let residuals = kkt_residuals(self.problem, &x, &y, &z);
                return Ok(self.finish(status, x, y, z, iter, residuals));
            }
            if iter == self.config.max_iter {
                return Ok(self.finish(SolverStatus::IterationLimit, x, y, z, iter, residuals));
            }

            // Scaled complementarity state.
            let mut scalings = Vec::with_capacity(self.cones.len());
            let mut lambdas = Vec::with_capacity(self.cones.len());
            for &(start, spec) in &self.cones {
                let (s, l) = Scaling::compute(&spec, block(&x, start, &spec), block(&z, start, &spec))
                    .map_err(|e| SolverError::NumericalFailure(e.to_string()))?;
                scalings.push(s);
                lambdas.push(l);
            }
            let mu = self.cone_dot(&x, &z) / self.degree as f64;
            let h_blocks: Vec<HBlock> = scalings
                .iter()
                .zip(&self.cones)
                .map(|(s, (_, spec))| s.h_block(spec))
                .collect();

            let layout = self.kkt_layout(&h_blocks);
            let factors = self.factor_kkt(&h_blocks, &layout)?;

            let rp: Vec<f64> = {
                let ax = self.problem.eq.matvec(&x);
                ax.iter().zip(&self.problem.rhs).map(|(a, b)| a - b).collect()
            };
            let rd: Vec<f64> = {
                let aty = self.problem.eq.matvec_t(&y);
                (0..self.n)
                    .map(|i| self.problem.objective[i] - aty[i] - z[i])
                    .collect()
            };

            // Predictor: target v = -lambda aims at exact complementarity.
            let v_aff: Vec<Vec<f64>> = lambdas
                .iter()
                .map(|l| l.iter().map(|t| -t).collect())
                .collect();
            let aff = self.newton(&factors, &h_blocks, &layout, &scalings, &rp, &rd, &v_aff)?;
            let alpha_aff = self
                .max_step_pair(&x, &aff.dx, &z, &aff.dz)
                .min(1.0);
            let mut mu_aff = 0.0;
            for &(start, spec) in &self.cones {
                let d = spec.dim();
                for k in start..start + d {
                    mu_aff += (x[k] + alpha_aff * aff.dx[k]) * (z[k] + alpha_aff * aff.dz[k]);
                }
            }
            mu_aff = (mu_aff / self.degree as f64).max(0.0);
            let sigma = ((mu_aff / mu).powi(3)).clamp(0.0, 1.0);

            // Corrector: v = -lambda + lambda^{-1} o (sigma mu e - eta o theta)
            // with eta, theta the scaled predictor displacements.
            let mut v_cmb = Vec::with_capacity(self.cones.len());
            for (ci, &(start, spec)) in self.cones.iter().enumerate() {
                let eta = scalings[ci].apply_w_inv_t(block(&aff.dx, start, &spec));
                let theta = scalings[ci].apply_w(block(&aff.dz, start, &spec));
                let cross = spec.jordan_product(&eta, &theta);
                let mut target = spec.unit();
                for (k, t) in target.iter_mut().enumerate() {
                    *t = sigma * mu * *t - cross[k];
                }
                let correction = lambda_solve(&spec, &lambdas[ci], &target);
                let v: Vec<f64> = lambdas[ci]
                    .iter()
                    .zip(&correction)
                    .map(|(l, c)| -l + c)
                    .collect();
                v_cmb.push(v);
            }
            let dir = self.newton(&factors, &h_blocks, &layout, &scalings, &rp, &rd, &v_cmb)?;
            let mut alpha = (self.config.step_fraction * self.max_step_pair(&x, &dir.dx, &z, &dir.dz))
                .min(1.0);
            if alpha < 1e-8 {
                return Err(SolverError::NumericalFailure(format!(
                    "step length collapsed at iteration {iter}"
                )));
            }
            // The boundary step is the root of a quadratic solved in floating
            // point; near a tangency the fraction-to-boundary step can still
            // overshoot. Accept the step only where the next scaling is
            // well-defined, halving on rejection.
            let mut accepted = false;
            for _ in 0..10 {
                let xt = stepped(&x, alpha, &dir.dx);
                let zt = stepped(&z, alpha, &dir.dz);
                if self.strictly_interior(&xt) && self.strictly_interior(&zt) {
                    x = xt;
                    z = zt;
                    axpy(&mut y, alpha, &dir.dy);
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                return Err(SolverError::NumericalFailure(format!(
                    "no interior step at iteration {iter}"
                )));
            }
        }
        unreachable!("loop returns at the iteration limit");
    }

    /// Initial point: least-norm primal and least-squares dual estimates from
    /// the identity-scaled KKT system, shifted into the cone interiors.
    fn initialize(&mut self) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>), SolverError> {
        let delta = self.config.static_reg;
        let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
        for i in 0..self.n {
            triplets.push((i, i, -1.0 - delta));
        }
        self.push_eq_triplets(&mut triplets, delta);
        let kkt = CscMatrix::from_triplets(self.n + self.p, self.n + self.p, &triplets);
        let symbolic = LdlSymbolic::analyze(&kkt);
        let factors = symbolic
            .factor(&kkt)
            .map_err(|e| SolverError::NumericalFailure(e.to_string()))?;

        let refine_target = |v: &[f64]| -> Vec<f64> {
            // Unregularized [[-I, A'], [A, 0]] product.
            let (vx, vy) = v.split_at(self.n);
            let aty = self.problem.eq.matvec_t(vy);
            let ax = self.problem.eq.matvec(vx);
            let mut out = vec![0.0; self.n + self.p];
            for i in 0..self.n {
                out[i] = -vx[i] + aty[i];
            }
            out[self.n..].copy_from_slice(&ax);
            out
        };

        let mut rhs_p = vec![0.0; self.n + self.p];
        rhs_p[self.n..].copy_from_slice(&self.problem.rhs);
        let sol_p = refined_solve(&factors, &rhs_p, &refine_target);
        let mut x = sol_p[..self.n].to_vec();

        let mut rhs_d = vec![0.0; self.n + self.p];
        rhs_d[..self.n].copy_from_slice(&self.problem.objective);
        let sol_d = refined_solve(&factors, &rhs_d, &refine_target);
        let y = sol_d[self.n..].to_vec();
        let aty = self.problem.eq.matvec_t(&y);
        let mut z = vec![0.0; self.n];
        for &(start, spec) in &self.cones {
            for k in start..start + spec.dim() {
                z[k] = self.problem.objective[k] - aty[k];
            }
        }

        for &(start, spec) in &self.cones {
            shift_interior(&spec, block_mut(&mut x, start, &spec));
            shift_interior(&spec, block_mut(&mut z, start, &spec));
        }
        Ok((x, y, z))
    }

    /// Column layout of the factored KKT system: the `n` primal and `p` dual
    /// columns, followed by two auxiliary columns per product-form
    /// second-order block carrying its rank-one terms.
    fn kkt_layout(&self, h_blocks: &[HBlock]) -> KktLayout {
        let mut extra = Vec::with_capacity(h_blocks.len());
        let mut next = self.n + self.p;
        for hb in h_blocks {
            if matches!(hb, HBlock::SocLowRank { .. }) {
                extra.push(Some(next));
                next += 2;
            } else {
                extra.push(None);
            }
        }
        KktLayout { extra, dim: next }
    }

    /// Assembles and factors the scaled KKT matrix. Pivots are dynamically
    /// regularized toward the expected sign pattern (negative over the primal
    /// block, positive over the equality block, +/- over each second-order
    /// expansion pair); the retry loop only handles non-finite breakdowns by
    /// raising the static regularization.
    fn factor_kkt(
        &self,
        h_blocks: &[HBlock],
        layout: &KktLayout,
    ) -> Result<crate::sparse::LdlFactors, SolverError> {
        let mut signs = vec![-1i8; self.n];
        signs.extend(std::iter::repeat_n(1i8, self.p));
        for base in layout.extra.iter().flatten() {
            debug_assert_eq!(*base, self.n + self.p + (signs.len() - self.n - self.p));
            signs.extend_from_slice(&[1, -1]);
        }
        let mut attempt_delta = self.config.static_reg;
        for _ in 0..3 {
            let csc = self.build_kkt(h_blocks, layout, attempt_delta);
            let symbolic = LdlSymbolic::analyze(&csc);
            match symbolic.factor_signed(&csc, &signs, attempt_delta) {
                Ok(f) => return Ok(f),
                Err(_) => attempt_delta *= 100.0,
            }
        }
        Err(SolverError::NumericalFailure(
            "KKT factorization failed after regularization retries".into(),
        ))
    }

    fn build_kkt(&self, h_blocks: &[HBlock], layout: &KktLayout, delta: f64) -> CscMatrix {
        let mut t: Vec<(usize, usize, f64)> = Vec::new();
        for i in 0..self.n {
            t.push((i, i, -delta));
        }
        for (ci, (hb, &(start, spec))) in h_blocks.iter().zip(&self.cones).enumerate() {
            match hb {
                HBlock::Diag(d) => {
                    for (k, dk) in d.iter().enumerate() {
                        t.push((start + k, start + k, -dk));
                    }
                }
                HBlock::Dense(m) => {
                    let d = spec.dim();
                    for jl in 0..d {
                        for il in 0..=jl {
                            t.push((start + il, start + jl, -m[(il, jl)]));
                        }
                    }
                }
                HBlock::SocLowRank { diag, u, v0 } => {
                    let base = layout.extra[ci].expect("expansion column allocated");
                    for (k, uk) in u.iter().enumerate() {
                        t.push((start + k, start + k, -diag));
                        t.push((start + k, base, *uk));
                    }
                    t.push((start, base + 1, *v0));
                    t.push((base, base, 1.0 + delta));
                    t.push((base + 1, base + 1, -(1.0 + delta)));
                }
            }
        }
        self.push_eq_triplets(&mut t, delta);
        CscMatrix::from_triplets(layout.dim, layout.dim, &t)
    }

    fn push_eq_triplets(&self, t: &mut Vec<(usize, usize, f64)>, delta: f64) {
        for (i, row) in self.a_rows.iter().enumerate() {
            for &(j, v) in row {
                t.push((j, self.n + i, v));
            }
            t.push((self.n + i, self.n + i, delta));
        }
    }

    /// One Newton solve for the given scaled complementarity targets.
    fn newton(
        &self,
        factors: &crate::sparse::LdlFactors,
        h_blocks: &[HBlock],
        layout: &KktLayout,
        scalings: &[Scaling],
        rp: &[f64],
        rd: &[f64],
        v: &[Vec<f64>],
    ) -> Result<Direction, SolverError> {
        let mut rhs = vec![0.0; layout.dim];
        rhs[..self.n].copy_from_slice(rd);
        for (ci, &(start, _)) in self.cones.iter().enumerate() {
            let wv = scalings[ci].apply_w_inv(&v[ci]);
            for (k, val) in wv.iter().enumerate() {
                rhs[start + k] -= *val;
            }
        }
        for i in 0..self.p {
            rhs[self.n + i] = -rp[i];
        }

        // Unregularized product of the expanded KKT matrix; the auxiliary
        // rows tie each expansion pair to its rank-one terms exactly, so the
        // refinement corrects both the static regularization and any pivots
        // the factorization had to clamp.
        let refine_target = |u: &[f64]| -> Vec<f64> {
            let ux = &u[..self.n];
            let uy = &u[self.n..self.n + self.p];
            let aty = self.problem.eq.matvec_t(uy);
            let ax = self.problem.eq.matvec(ux);
            let mut out = vec![0.0; layout.dim];
            out[..self.n].copy_from_slice(&aty);
            for (ci, (hb, &(start, spec))) in h_blocks.iter().zip(&self.cones).enumerate() {
                match hb {
                    HBlock::Diag(d) => {
                        for (k, dk) in d.iter().enumerate() {
                            out[start + k] -= dk * ux[start + k];
                        }
                    }
                    HBlock::Dense(m) => {
                        let d = spec.dim();
                        for il in 0..d {
                            let mut acc = 0.0;
                            for jl in 0..d {
                                acc += m[(il, jl)] * ux[start + jl];
                            }
                            out[start + il] -= acc;
                        }
                    }
                    HBlock::SocLowRank { diag, u: uvec, v0 } => {
                        let base = layout.extra[ci].expect("expansion column allocated");
                        let (wu, wv) = (u[base], u[base + 1]);
                        let mut cx = 0.0;
                        for (k, uk) in uvec.iter().enumerate() {
                            out[start + k] += -diag * ux[start + k] + uk * wu;
                            cx += uk * ux[start + k];
                        }
                        out[start] += v0 * wv;
                        out[base] = cx + wu;
                        out[base + 1] = v0 * ux[start] - wv;
                    }
                }
            }
            out[self.n..self.n + self.p].copy_from_slice(&ax);
            out
        };
        let sol = refined_solve(factors, &rhs, &refine_target);
        if sol.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::NumericalFailure(
                "non-finite Newton direction".into(),
            ));
        }
        let dx = sol[..self.n].to_vec();
        let dy = sol[self.n..self.n + self.p].to_vec();
        // dz on cone slots comes from the dual equation, dz = r_d - A' dy,
        // which by the first Newton block equals W^{-1}(v - W^{-T} dx) exactly
        // but avoids the 1/sqrt(mu) amplification of the scaled form; free
        // slots carry no multiplier.
        let aty = self.problem.eq.matvec_t(&dy);
        let mut dz = vec![0.0; self.n];
        for &(start, spec) in &self.cones {
            for k in start..start + spec.dim() {
                dz[k] = rd[k] - aty[k];
            }
        }
        Ok(Direction { dx, dy, dz })
    }

    fn max_step_pair(&self, x: &[f64], dx: &[f64], z: &[f64], dz: &[f64]) -> f64 {
        let mut t = f64::INFINITY;
        for &(start, spec) in &self.cones {
            t = t.min(spec.max_step(block(x, start, &spec), block(dx, start, &spec)));
            t = t.min(spec.max_step(block(z, start, &spec), block(dz, start, &spec)));
        }
        t
    }

    fn strictly_interior(&self, u: &[f64]) -> bool {
        self.cones
            .iter()
            .all(|&(start, spec)| spec.strict_interior(block(u, start, &spec)))
    }

    fn cone_dot(&self, x: &[f64], z: &[f64]) -> f64 {
        let mut acc = 0.0;
        for &(start, spec) in &self.cones {
            for k in start..start + spec.dim() {
                acc += x[k] * z[k];
            }
        }
        acc
    }

    /// Farkas-type infeasibility tests. For a primal-feasible problem with a
    /// bounded feasible point x*, any (y, z) has ||A'y + z|| >= b'y / ||x*||,
    /// so the certificate threshold cannot misfire unless the feasible region
    /// only contains points of norm 1/tol and beyond.
    fn certificate(&self, x: &[f64], y: &[f64], z: &[f64]) -> Option<SolverStatus> {
        let tol = self.config.feas_tol;
        let by = dot(&self.problem.rhs, y);
        if by > 0.0 {
            let aty = self.problem.eq.matvec_t(y);
            let mut norm_sq = 0.0;
            for i in 0..self.n {
                let r = aty[i] + z[i];
                norm_sq += r * r;
            }
            if norm_sq.sqrt() <= tol * by {
                return Some(SolverStatus::PrimalInfeasible);
            }
        }
        let cx = dot(&self.problem.objective, x);
        if cx < 0.0 {
            let ax = self.problem.eq.matvec(x);
            let norm: f64 = ax.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm <= tol * (-cx) {
                return Some(SolverStatus::DualInfeasible);
            }
        }
        None
    }

    fn finish(
        &self,
        status: SolverStatus,
        x: Vec<f64>,
        y: Vec<f64>,
        z: Vec<f64>,
        iterations: usize,
        residuals: Residuals,
    ) -> SolverSolution {
        let obj_primal = dot(&self.problem.objective, &x) + self.problem.obj_offset;
        let obj_dual = dot(&self.problem.rhs, &y) + self.problem.obj_offset;
        SolverSolution {
            status,
            x,
            y,
            z,
            obj_primal,
            obj_dual,
            iterations,
            residuals,
        }
    }
}

/// Solves with the factored matrix and refines against the caller-provided
/// exact operator, keeping the iterate with the smallest measured residual.
/// Refinement stops when the residual is small enough, stops improving, or
/// goes non-finite; a divergent correction is never returned.
fn refined_solve(
    factors: &crate::sparse::LdlFactors,
    rhs: &[f64],
    exact: &dyn Fn(&[f64]) -> Vec<f64>,
) -> Vec<f64> {
    let mut sol = rhs.to_vec();
    factors.solve_in_place(&mut sol);
    if sol.iter().any(|v| !v.is_finite()) {
        return sol;
    }
    let rhs_norm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut best = sol.clone();
    let mut best_res = f64::INFINITY;
    for _ in 0..4 {
        let ks = exact(&sol);
        let mut res: Vec<f64> = rhs.iter().zip(&ks).map(|(b, k)| b - k).collect();
        let res_norm = res.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !res_norm.is_finite() || res_norm >= best_res {
            break;
        }
        best_res = res_norm;
        best.copy_from_slice(&sol);
        if res_norm <= 1e-13 * (1.0 + rhs_norm) {
            break;
        }
        factors.solve_in_place(&mut res);
        if res.iter().any(|v| !v.is_finite()) {
            break;
        }
        for (s, r) in sol.iter_mut().zip(&res) {
            *s += r;
        }
    }
    best
}

/// Moves a point onto the unit-margin interior of the cone if it is outside
/// or too close to the boundary.
fn shift_interior(spec: &ConeSpec, u: &mut [f64]) {
    let margin = spec.interior_margin(u);
    let scale = 1.0 + u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if margin <= 1e-8 * scale {
        let shift = 1.0 - margin.min(0.0);
        for (ui, ei) in u.iter_mut().zip(spec.unit()) {
            *ui += shift * ei;
        }
    }
}

fn block<'b>(v: &'b [f64], start: usize, spec: &ConeSpec) -> &'b [f64] {
    &v[start..start + spec.dim()]
}

fn block_mut<'b>(v: &'b mut [f64], start: usize, spec: &ConeSpec) -> &'b mut [f64] {
    &mut v[start..start + spec.dim()]
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn scale(v: &mut [f64], s: f64) {
    for vi in v.iter_mut() {
        *vi *= s;
    }
}

fn stepped(v: &[f64], a: f64, d: &[f64]) -> Vec<f64> {
    v.iter().zip(d).map(|(vi, di)| vi + a * di).collect()
}

fn axpy(v: &mut [f64], a: f64, d: &[f64]) {
    for (vi, di) in v.iter_mut().zip(d) {
        *vi += a * di;
    }
}
