//! Assembly of the unified OPF problem: per-bus balance equalities, the full
//! inequality list (capability, voltage, ampacity, drop, angle), injector
//! cost epigraphs, and the loss-priced objective.
//!
//! Conventions fixed here: injector power flows into the bus; converter
//! terminal powers `S_src`, `S_dst` flow from the bus into the converter with
//! `S_src = p_src − (1 − eta_bwd)·p_dst − i·q_src` (and symmetrically for the
//! destination); capability polygons are stated in the terminal injection
//! frame `(P, Q) = (−Re S, −Im S)`. Fixed bus loads and converter static
//! losses fold into balance constants, and constant costs fold into the
//! objective offset.

use num_complex::Complex64;
use thiserror::Error;

use crate::grid::{BusKind, CostCurve, CostSegment, Grid, Side, ValidationReport};
use crate::matrices::{self, HermitianForm, MatrixError, Sense, SparsityPattern};

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("grid failed validation with {} violation(s)", report.violations.len())]
    Invalid { report: ValidationReport },
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error("loss price must be finite and nonnegative, got {0}")]
    LossPrice(f64),
}

/// Problem size record. `m` always satisfies
/// `m = f + 2n + 3·e + 4·e_ac`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dimensions {
    /// Buses.
    pub n: usize,
    /// Branches, and the AC subset.
    pub e: usize,
    pub e_ac: usize,
    /// Converters and injectors.
    pub c: usize,
    pub i: usize,
    /// Capability rows (converters and injectors together).
    pub f: usize,
    /// Total inequality rows.
    pub m: usize,
}

impl Dimensions {
    pub fn expected_m(&self) -> usize {
        self.f + 2 * self.n + 3 * self.e + 4 * self.e_ac
    }
}

/// Converter coupling vectors per bus: `p_n`, `q_n` over the converter state
/// `f` (slots `4l..4l+4` per converter hold `p_src, p_dst, q_src, q_dst`).
#[derive(Clone, Debug, PartialEq)]
pub struct ConverterCoupling {
    pub p: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
}

/// Per-bus balance block: `vᴴP_n v + p_nᵀf − Σ_j wᵀs_j = rhs` with
/// `w = [1, i]ᵀ` and the right-hand side collecting folded constants.
#[derive(Clone, Debug, PartialEq)]
pub struct BusBalance {
    pub p_form: HermitianForm,
    pub q_form: HermitianForm,
    pub p_conv: Vec<f64>,
    pub q_conv: Vec<f64>,
    /// Injectors attached to this bus (zero-based positions).
    pub injectors: Vec<usize>,
    /// Folded constant injection (fixed load and static converter losses,
    /// sign: injection into the bus).
    pub constant: Complex64,
}

/// Classification of one inequality row, for diagnostics and counting.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowKind {
    ConverterNonNeg { converter: usize, side: Side },
    ConverterCap { converter: usize, side: Side, rule: usize },
    ConverterDcPin { converter: usize, side: Side, negated: bool },
    /// Mode fix after a converter loss error: pins one terminal flow to zero
    /// with an opposed inequality pair.
    ConverterModePin { converter: usize, side: Side, negated: bool },
    InjectorCap { injector: usize, rule: usize },
    VoltageLb { bus: usize },
    VoltageUb { bus: usize },
    AmpacitySrc { branch: usize },
    AmpacityDst { branch: usize },
    AngleReal { branch: usize },
    DropLb { branch: usize },
    DropUb { branch: usize },
    AngleLb { branch: usize },
    AngleUb { branch: usize },
}

impl RowKind {
    pub fn is_capability(self) -> bool {
        matches!(
            self,
            RowKind::ConverterNonNeg { .. }
                | RowKind::ConverterCap { .. }
                | RowKind::ConverterDcPin { .. }
                | RowKind::ConverterModePin { .. }
                | RowKind::InjectorCap { .. }
        )
    }
}

/// One inequality `vᴴ(form)v + form.convᵀf + s_linᵀs ≤ form.offset`.
#[derive(Clone, Debug, PartialEq)]
pub struct Inequality {
    pub kind: RowKind,
    pub form: HermitianForm,
    /// Sparse coefficients over the flattened injections `s` (slots `2j`,
    /// `2j+1` hold `P_j`, `Q_j`).
    pub s_lin: Vec<(usize, f64)>,
}

impl Inequality {
    /// Constraint value `lhs − rhs`; feasible iff ≤ 0.
    pub fn violation(&self, v: &[Complex64], f: &[f64], s: &[f64]) -> f64 {
        let s_part: f64 = self.s_lin.iter().map(|&(k, a)| a * s[k]).sum();
        self.form.value(v, f) + s_part - self.form.offset
    }
}

/// Epigraph shape of one piecewise-linear convex cost.
#[derive(Clone, Debug, PartialEq)]
pub enum Epigraph {
    /// No cost at all.
    Zero,
    /// Constant value: the epigraph variable is pinned by a pair of opposite
    /// inequalities `t ≥ c`, `−t ≥ −c`; the assembler folds it into the
    /// objective offset instead.
    Constant(f64),
    /// `t ≥ slope·x + intercept` per segment.
    Segments(Vec<CostSegment>),
}

/// Epigraph shape of a breakpoint cost curve. Minimizing the epigraph
/// variable subject to the segment rows recovers the curve value exactly.
pub fn cost_epigraph(curve: &CostCurve) -> Epigraph {
    if curve.is_zero() {
        Epigraph::Zero
    } else if curve.is_constant() {
        Epigraph::Constant(curve.points[0].1)
    } else {
        Epigraph::Segments(curve.segments())
    }
}

/// Which separable cost an epigraph belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CostKind {
    Active,
    Reactive,
}

/// One epigraph variable: injector, cost kind, and its segment rows.
#[derive(Clone, Debug, PartialEq)]
pub struct EpigraphCost {
    pub injector: usize,
    pub kind: CostKind,
    pub segments: Vec<CostSegment>,
}

/// The unified OPF problem over `(v, f, s)` with a loss-priced objective
/// `Σ C_j(s_j) + tau·f_loss`. Immutable once assembled.
#[derive(Clone, Debug)]
pub struct QcqpProblem {
    /// Snapshot of the validated grid the problem was assembled from.
    pub grid: Grid,
    pub dims: Dimensions,
    pub pattern: SparsityPattern,
    pub balance: Vec<BusBalance>,
    /// The `M` inequality rows in canonical order; the first `dims.f` rows
    /// are the capability rows `H·[f; s] ≤ h`.
    pub inequalities: Vec<Inequality>,
    pub epigraphs: Vec<EpigraphCost>,
    /// Loss coefficients: `f_loss(v, f) = vᴴ(loss_form)v + loss_vecᵀf`.
    pub loss_form: HermitianForm,
    pub loss_vec: Vec<f64>,
    pub tau: f64,
    /// Constant objective part (folded constant costs, shift corrections).
    pub obj_offset: f64,
}

impl QcqpProblem {
    pub fn num_f(&self) -> usize {
        4 * self.dims.c
    }

    pub fn num_s(&self) -> usize {
        2 * self.dims.i
    }

    /// Total electrical losses at a state.
    pub fn f_loss(&self, v: &[Complex64], f: &[f64]) -> f64 {
        self.loss_form.quad(v) + dot(&self.loss_vec, f)
    }

    /// Per-bus complex balance residual
    /// `vᴴ(P_n + iQ_n)v + (p_n + iq_n)ᵀf − Σ_j wᵀs_j − constant`;
    /// zero at every feasible point.
    pub fn balance_residual(&self, v: &[Complex64], f: &[f64], s: &[f64]) -> Vec<Complex64> {
        self.balance
            .iter()
            .map(|bal| {
                let mut acc = Complex64::new(bal.p_form.quad(v), bal.q_form.quad(v));
                acc += Complex64::new(dot(&bal.p_conv, f), dot(&bal.q_conv, f));
                for &j in &bal.injectors {
                    acc -= Complex64::new(s[2 * j], s[2 * j + 1]);
                }
                acc - bal.constant
            })
            .collect()
    }

    /// Objective `Σ C_j(s_j) + tau·f_loss + offset` evaluated directly from
    /// the cost curves (not the epigraph encoding).
    pub fn objective(&self, v: &[Complex64], f: &[f64], s: &[f64]) -> f64 {
        let mut total = self.obj_offset + self.tau * self.f_loss(v, f);
        for eg in &self.epigraphs {
            let x = match eg.kind {
                CostKind::Active => s[2 * eg.injector],
                CostKind::Reactive => s[2 * eg.injector + 1],
            };
            total += eg
                .segments
                .iter()
                .map(|seg| seg.slope * x + seg.intercept)
                .fold(f64::NEG_INFINITY, f64::max);
        }
        total
    }

    /// All inequality values `lhs − rhs` at a state (feasible iff all ≤ 0).
    pub fn inequality_values(&self, v: &[Complex64], f: &[f64], s: &[f64]) -> Vec<f64> {
        self.inequalities
            .iter()
            .map(|row| row.violation(v, f, s))
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Converter coupling vectors of every bus, from the two displayed balance
/// sums: an outgoing converter `l` contributes `e_{4l} − (1−eta_bwd)e_{4l+1}`
/// to `p_n` and `−e_{4l+2}` to `q_n`; an incoming one contributes
/// `e_{4l+1} − (1−eta_fwd)e_{4l}` and `−e_{4l+3}`.
pub fn converter_vectors(grid: &Grid) -> ConverterCoupling {
    let n = grid.num_buses();
    let dim = 4 * grid.converters.len();
    let mut p = vec![vec![0.0; dim]; n];
    let mut q = vec![vec![0.0; dim]; n];
    for (l, cv) in grid.converters.iter().enumerate() {
        let (s, d) = (cv.src.index(), cv.dst.index());
        p[s][4 * l] += 1.0;
        p[s][4 * l + 1] -= 1.0 - cv.eta_bwd;
        q[s][4 * l + 2] -= 1.0;
        p[d][4 * l + 1] += 1.0;
        p[d][4 * l] -= 1.0 - cv.eta_fwd;
        q[d][4 * l + 3] -= 1.0;
    }
    ConverterCoupling { p, q }
}

/// Capability rows of converter `l` over `f`: the two nonnegativity rows,
/// each polygon half-space `a_p·P + a_q·Q ≤ b` rewritten through the
/// terminal flow relation (`P = −Re S`, `Q = −Im S`), and a Q-pin pair for
/// each DC terminal.
pub fn capability_rows(grid: &Grid, l: usize) -> Vec<Inequality> {
    let cv = &grid.converters[l];
    let dim = 4 * grid.converters.len();
    let n = grid.num_buses();
    let mut rows = Vec::new();
    let mut push = |kind: RowKind, coeffs: Vec<(usize, f64)>, rhs: f64| {
        let mut form = HermitianForm::empty(n, Sense::Le);
        form.conv = vec![0.0; dim];
        for (slot, a) in coeffs {
            form.conv[slot] = a;
        }
        form.offset = rhs;
        rows.push(Inequality { kind, form, s_lin: Vec::new() });
    };

    push(
        RowKind::ConverterNonNeg { converter: l, side: Side::Src },
        vec![(4 * l, -1.0)],
        0.0,
    );
    push(
        RowKind::ConverterNonNeg { converter: l, side: Side::Dst },
        vec![(4 * l + 1, -1.0)],
        0.0,
    );

    for (side, cap) in [(Side::Src, &cv.cap_src), (Side::Dst, &cv.cap_dst)] {
        // Injection frame at this terminal in terms of f:
        //   src: P = −p_src + (1−eta_bwd)·p_dst,  Q = q_src
        //   dst: P = −p_dst + (1−eta_fwd)·p_src,  Q = q_dst
        let (own, other, eta_other, q_slot) = match side {
            Side::Src => (4 * l, 4 * l + 1, cv.eta_bwd, 4 * l + 2),
            Side::Dst => (4 * l + 1, 4 * l, cv.eta_fwd, 4 * l + 3),
        };
        for (rule, h) in cap.halfspaces.iter().enumerate() {
            push(
                RowKind::ConverterCap { converter: l, side, rule },
                vec![
                    (own, -h.a_p),
                    (other, h.a_p * (1.0 - eta_other)),
                    (q_slot, h.a_q),
                ],
                h.b,
            );
        }
        if grid.converter_side_kind(cv, side) == BusKind::Dc {
            for negated in [false, true] {
                let sign = if negated { -1.0 } else { 1.0 };
                push(
                    RowKind::ConverterDcPin { converter: l, side, negated },
                    vec![(q_slot, sign)],
                    0.0,
                );
            }
        }
    }
    rows
}

/// Capability rows of injector `j` over its `(P_j, Q_j)` slots.
pub fn injector_capability_rows(grid: &Grid, j: usize) -> Vec<Inequality> {
    let n = grid.num_buses();
    grid.injectors[j]
        .capability
        .halfspaces
        .iter()
        .enumerate()
        .map(|(rule, h)| {
            let mut form = HermitianForm::empty(n, Sense::Le);
            form.offset = h.b;
            Inequality {
                kind: RowKind::InjectorCap { injector: j, rule },
                form,
                s_lin: vec![(2 * j, h.a_p), (2 * j + 1, h.a_q)],
            }
        })
        .collect()
}

/// Assemble the unified OPF for a validated grid at loss price `tau`.
pub fn assemble(grid: &Grid, tau: f64) -> Result<QcqpProblem, BuildError> {
    assemble_pinned(grid, tau, &[])
}

/// Like [`assemble`], with the listed converter terminals pinned to zero
/// flow (the mode-fix remediation for converter loss errors): each pin adds
/// an opposed inequality pair to that converter's capability rows.
pub fn assemble_pinned(
    grid: &Grid,
    tau: f64,
    pins: &[(usize, Side)],
) -> Result<QcqpProblem, BuildError> {
    let report = grid.validate();
    if !report.is_valid() {
        return Err(BuildError::Invalid { report });
    }
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(BuildError::LossPrice(tau));
    }

    let adm = matrices::bus_admittance(grid)?;
    let pattern = matrices::sparsity_pattern(grid);
    let coupling = converter_vectors(grid);
    let incidence = grid.incidence();

    let mut balance = Vec::with_capacity(grid.num_buses());
    for (idx, bus) in grid.buses.iter().enumerate() {
        let (p_form, q_form) = matrices::balance_matrices(&adm, idx)?;
        balance.push(BusBalance {
            p_form,
            q_form,
            p_conv: coupling.p[idx].clone(),
            q_conv: coupling.q[idx].clone(),
            injectors: incidence.injectors[idx].clone(),
            constant: -bus.load,
        });
    }
    for cv in &grid.converters {
        let side_bus = match cv.loss_side {
            Side::Src => cv.src,
            Side::Dst => cv.dst,
        };
        balance[side_bus.index()].constant -= Complex64::new(cv.static_loss_mw / grid.base_mva, 0.0);
    }

    let mut inequalities = Vec::new();
    for l in 0..grid.converters.len() {
        inequalities.extend(capability_rows(grid, l));
        for &(pinned, side) in pins.iter().filter(|&&(p, _)| p == l) {
            let slot = match side {
                Side::Src => 4 * l,
                Side::Dst => 4 * l + 1,
            };
            for negated in [false, true] {
                let mut form = HermitianForm::empty(grid.num_buses(), Sense::Le);
                form.conv = vec![0.0; 4 * grid.converters.len()];
                form.conv[slot] = if negated { -1.0 } else { 1.0 };
                inequalities.push(Inequality {
                    kind: RowKind::ConverterModePin { converter: pinned, side, negated },
                    form,
                    s_lin: Vec::new(),
                });
            }
        }
    }
    for j in 0..grid.injectors.len() {
        inequalities.extend(injector_capability_rows(grid, j));
    }
    let f = inequalities.len();

    let n = grid.num_buses();
    for (idx, bus) in grid.buses.iter().enumerate() {
        let mut lb = HermitianForm::empty(n, Sense::Le);
        lb.diag.push((idx, -1.0));
        lb.offset = -bus.v_lb * bus.v_lb;
        inequalities.push(Inequality { kind: RowKind::VoltageLb { bus: idx }, form: lb, s_lin: Vec::new() });
        let mut ub = HermitianForm::empty(n, Sense::Le);
        ub.diag.push((idx, 1.0));
        ub.offset = bus.v_ub * bus.v_ub;
        inequalities.push(Inequality { kind: RowKind::VoltageUb { bus: idx }, form: ub, s_lin: Vec::new() });
    }

    let mut e_ac = 0;
    let mut ac_rows = Vec::new();
    for (k, br) in grid.branches.iter().enumerate() {
        let (amp_src, amp_dst) = matrices::ampacity_matrices(&adm, k, br.i_src_ub, br.i_dst_ub)?;
        inequalities.push(Inequality { kind: RowKind::AmpacitySrc { branch: k }, form: amp_src, s_lin: Vec::new() });
        inequalities.push(Inequality { kind: RowKind::AmpacityDst { branch: k }, form: amp_dst, s_lin: Vec::new() });
        let is_ac = grid.bus(br.src).kind == BusKind::Ac;
        let bounds = if is_ac {
            Some((br.delta_lb.unwrap(), br.delta_ub.unwrap()))
        } else {
            None
        };
        let (a_k, tan_bounds) = matrices::angle_matrices(br, bounds)?;
        inequalities.push(Inequality { kind: RowKind::AngleReal { branch: k }, form: a_k, s_lin: Vec::new() });
        if is_ac {
            e_ac += 1;
            let (drop_lb, drop_ub) = matrices::drop_matrices(br, br.nu_lb.unwrap(), br.nu_ub.unwrap())?;
            let (angle_lb, angle_ub) = tan_bounds.expect("AC branch has tangent bounds");
            ac_rows.push(Inequality { kind: RowKind::DropLb { branch: k }, form: drop_lb, s_lin: Vec::new() });
            ac_rows.push(Inequality { kind: RowKind::DropUb { branch: k }, form: drop_ub, s_lin: Vec::new() });
            ac_rows.push(Inequality { kind: RowKind::AngleLb { branch: k }, form: angle_lb, s_lin: Vec::new() });
            ac_rows.push(Inequality { kind: RowKind::AngleUb { branch: k }, form: angle_ub, s_lin: Vec::new() });
        }
    }
    inequalities.extend(ac_rows);

    let mut obj_offset = 0.0;
    let mut epigraphs = Vec::new();
    for (j, inj) in grid.injectors.iter().enumerate() {
        for (kind, curve) in [(CostKind::Active, &inj.cost_p), (CostKind::Reactive, &inj.cost_q)] {
            match cost_epigraph(curve) {
                Epigraph::Zero => {}
                Epigraph::Constant(c) => obj_offset += c,
                Epigraph::Segments(segments) => {
                    epigraphs.push(EpigraphCost { injector: j, kind, segments })
                }
            }
        }
    }

    let (loss_form, loss_vec) = matrices::loss_coefficients(grid, &adm);
    let dims = Dimensions {
        n,
        e: grid.branches.len(),
        e_ac,
        c: grid.converters.len(),
        i: grid.injectors.len(),
        f,
        m: inequalities.len(),
    };
    debug_assert_eq!(dims.m, dims.expected_m());

    Ok(QcqpProblem {
        grid: grid.clone(),
        dims,
        pattern,
        balance,
        inequalities,
        epigraphs,
        loss_form,
        loss_vec,
        tau,
        obj_offset,
    })
}

/// Equivalent reformulation with the loss price folded into the costs: every
/// injector's active-power marginal cost rises by `tau`, the objective gains
/// the constant `tau·Σ(folded constant injections)`, and the returned
/// problem has `tau = 0`. Optimal value and optimizer set are unchanged.
pub fn shift_marginal_cost(problem: &QcqpProblem, tau: f64) -> QcqpProblem {
    let mut shifted = problem.clone();
    if tau == 0.0 {
        return shifted;
    }
    shifted.tau = problem.tau - tau;
    shifted.obj_offset += tau
        * problem
            .balance
            .iter()
            .map(|bal| bal.constant.re)
            .sum::<f64>();
    let mut has_active: Vec<bool> = vec![false; problem.dims.i];
    for eg in &mut shifted.epigraphs {
        if eg.kind == CostKind::Active {
            has_active[eg.injector] = true;
            for seg in &mut eg.segments {
                seg.slope += tau;
            }
        }
    }
    for j in 0..problem.dims.i {
        if !has_active[j] {
            shifted.epigraphs.push(EpigraphCost {
                injector: j,
                kind: CostKind::Active,
                segments: vec![CostSegment { slope: tau, intercept: 0.0 }],
            });
        }
    }
    shifted
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Branch, Bus, BusId, Converter, Halfspace, Injector, Polygon};
    use num_complex::Complex64 as C;

    fn bus(id: usize, kind: BusKind) -> Bus {
        Bus { id: BusId(id), kind, ..Bus::default() }
    }

    fn converter(id: usize, src: usize, dst: usize, eta_fwd: f64, eta_bwd: f64) -> Converter {
        Converter {
            id,
            src: BusId(src),
            dst: BusId(dst),
            eta_fwd,
            eta_bwd,
            static_loss_mw: 0.0,
            loss_side: Side::Src,
            cap_src: Polygon::boxed(-1.0, 1.0, -1.0, 1.0),
            cap_dst: Polygon::boxed(-1.0, 1.0, -1.0, 1.0),
            name: None,
            description: None,
            extra: Default::default(),
        }
    }

    #[test]
    fn coupling_vectors_match_displayed_sums() {
        let grid = Grid {
            base_mva: 100.0,
            buses: vec![bus(1, BusKind::Ac), bus(2, BusKind::Ac)],
            converters: vec![converter(1, 1, 2, 0.05, 0.04)],
            ..Grid::default()
        };
        let cc = converter_vectors(&grid);
        assert_eq!(cc.p[0], vec![1.0, -0.96, 0.0, 0.0]);
        assert_eq!(cc.p[1], vec![-0.95, 1.0, 0.0, 0.0]);
        assert_eq!(cc.q[0], vec![0.0, 0.0, -1.0, 0.0]);
        assert_eq!(cc.q[1], vec![0.0, 0.0, 0.0, -1.0]);
    }

    #[test]
    fn coupling_vectors_vanish_without_converters() {
        let grid = Grid {
            base_mva: 100.0,
            buses: vec![bus(1, BusKind::Ac)],
            ..Grid::default()
        };
        let cc = converter_vectors(&grid);
        assert!(cc.p[0].is_empty() && cc.q[0].is_empty());
    }

    #[test]
    fn coupling_vectors_superpose() {
        let grid = Grid {
            base_mva: 100.0,
            buses: vec![bus(1, BusKind::Ac), bus(2, BusKind::Ac), bus(3, BusKind::Ac)],
            converters: vec![converter(1, 1, 2, 0.1, 0.1), converter(2, 2, 3, 0.2, 0.2)],
            ..Grid::default()
        };
        let cc = converter_vectors(&grid);
        // Bus 2 is the destination of converter 1 and the source of converter 2.
        assert_eq!(cc.p[1], vec![-0.9, 1.0, 0.0, 0.0, 1.0, -0.8, 0.0, 0.0]);
        assert_eq!(cc.q[1], vec![0.0, 0.0, 0.0, -1.0, 0.0, 0.0, -1.0, 0.0]);
    }

    #[test]
    fn capability_rows_substitute_the_flow_relation() {
        // |Re S_src| ≤ 1 in the injection frame: ±P ≤ 1 with P = −Re S_src.
        let mut grid = Grid {
            base_mva: 100.0,
            buses: vec![bus(1, BusKind::Ac), bus(2, BusKind::Ac)],
            converters: vec![converter(1, 1, 2, 0.05, 0.04)],
            ..Grid::default()
        };
        grid.converters[0].cap_src = Polygon {
            halfspaces: vec![
                Halfspace { a_p: -1.0, a_q: 0.0, b: 1.0 },
                Halfspace { a_p: 1.0, a_q: 0.0, b: 1.0 },
            ],
        };
        grid.converters[0].cap_dst = Polygon { halfspaces: vec![] };
        let rows = capability_rows(&grid, 0);
        // 2 nonnegativity + 2 src polygon rows, no DC side.
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].form.conv, vec![-1.0, 0.0, 0.0, 0.0]);
        assert_eq!(rows[1].form.conv, vec![0.0, -1.0, 0.0, 0.0]);
        // −P ≤ 1 becomes p_src − 0.96·p_dst ≤ 1.
        assert_eq!(rows[2].form.conv, vec![1.0, -0.96, 0.0, 0.0]);
        assert_eq!(rows[2].form.offset, 1.0);
        // P ≤ 1 becomes −p_src + 0.96·p_dst ≤ 1.
        assert_eq!(rows[3].form.conv, vec![-1.0, 0.96, 0.0, 0.0]);
        assert_eq!(rows[3].form.offset, 1.0);
    }

    #[test]
    fn bare_polygons_leave_only_nonnegativity_rows() {
        let mut grid = Grid {
            base_mva: 100.0,
            buses: vec![bus(1, BusKind::Ac), bus(2, BusKind::Ac)],
            converters: vec![converter(1, 1, 2, 0.0, 0.0)],
            ..Grid::default()
        };
        grid.converters[0].cap_src = Polygon { halfspaces: vec![] };
        grid.converters[0].cap_dst = Polygon { halfspaces: vec![] };
        let rows = capability_rows(&grid, 0);
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| matches!(r.kind, RowKind::ConverterNonNeg { .. })));
    }

    #[test]
    fn dc_terminal_gets_a_q_pin_pair() {
        let mut grid = Grid {
            base_mva: 100.0,
            buses: vec![bus(1, BusKind::Ac), bus(2, BusKind::Dc)],
            converters: vec![converter(1, 1, 2, 0.0, 0.0)],
            ..Grid::default()
        };
        grid.converters[0].cap_src = Polygon { halfspaces: vec![] };
        grid.converters[0].cap_dst = Polygon { halfspaces: vec![] };
        let rows = capability_rows(&grid, 0);
        assert_eq!(rows.len(), 4);
        // q_dst ≤ 0 and −q_dst ≤ 0.
        assert_eq!(rows[2].form.conv, vec![0.0, 0.0, 0.0, 1.0]);
        assert_eq!(rows[3].form.conv, vec![0.0, 0.0, 0.0, -1.0]);
        assert_eq!((rows[2].form.offset, rows[3].form.offset), (0.0, 0.0));
    }

    #[test]
    fn epigraph_shapes() {
        let two_piece = CostCurve { points: vec![(0.0, 0.0), (1.0, 1.0), (2.0, 3.0)] };
        match cost_epigraph(&two_piece) {
            Epigraph::Segments(segs) => {
                assert_eq!(segs.len(), 2);
                let t = segs
                    .iter()
                    .map(|s| s.slope * 1.5 + s.intercept)
                    .fold(f64::NEG_INFINITY, f64::max);
                assert_eq!(t, 2.0); // max(P, 2P−1) at P = 1.5
            }
            other => panic!("expected segments, got {other:?}"),
        }
        assert_eq!(cost_epigraph(&CostCurve::constant(4.5)), Epigraph::Constant(4.5));
        match cost_epigraph(&CostCurve::linear(10.0)) {
            Epigraph::Segments(segs) => {
                assert_eq!(segs.len(), 1);
                assert_eq!(segs[0].slope * 3.0 + segs[0].intercept, 30.0);
            }
            other => panic!("expected segments, got {other:?}"),
        }
    }

    fn two_bus_case() -> Grid {
        let mut grid = Grid {
            base_mva: 100.0,
            buses: vec![bus(1, BusKind::Ac), bus(2, BusKind::Ac)],
            branches: vec![Branch {
                id: 1,
                src: BusId(1),
                dst: BusId(2),
                ybar: C::new(1.0, -5.0),
                ..Branch::default()
            }],
            injectors: vec![Injector {
                id: 1,
                bus: BusId(1),
                capability: Polygon::boxed(0.0, 2.0, -1.0, 1.0),
                cost_p: CostCurve::linear(10.0),
                cost_q: CostCurve::default(),
                name: None,
                description: None,
                extra: Default::default(),
            }],
            ..Grid::default()
        };
        grid.buses[1].load = C::new(0.6, 0.1);
        grid
    }

    #[test]
    fn assemble_counts_match_the_formula() {
        let problem = assemble(&two_bus_case(), 0.0).unwrap();
        let d = problem.dims;
        assert_eq!((d.n, d.e, d.e_ac, d.c, d.i), (2, 1, 1, 0, 1));
        assert_eq!(d.f, 4);
        assert_eq!(d.m, 15); // 4 + 2·2 + 3·1 + 4·1
        assert_eq!(d.m, d.expected_m());
        assert_eq!(problem.inequalities.len(), 15);
        assert!(problem.inequalities[..4].iter().all(|r| r.kind.is_capability()));
        assert_eq!(problem.num_f(), 0);
        // The fixed load folds into the balance constant of bus 2.
        assert_eq!(problem.balance[1].constant, C::new(-0.6, -0.1));
    }

    #[test]
    fn sketch_counts_for_a_dc_chain() {
        // Three DC buses in a chain with a converter whose polygons carry no
        // rules: 2 nonnegativity + 2 Q-pin pairs = 6 capability rows, and
        // M = 6 + 2·3 + 3·2 + 0 = 18.
        let mut grid = Grid {
            base_mva: 100.0,
            buses: vec![bus(1, BusKind::Dc), bus(2, BusKind::Dc), bus(3, BusKind::Dc)],
            branches: (1..=2)
                .map(|k| Branch {
                    id: k,
                    src: BusId(k),
                    dst: BusId(k + 1),
                    ybar: C::new(10.0, 0.0),
                    nu_lb: None,
                    nu_ub: None,
                    delta_lb: None,
                    delta_ub: None,
                    ..Branch::default()
                })
                .collect(),
            converters: vec![converter(1, 1, 3, 0.0, 0.0)],
            ..Grid::default()
        };
        grid.converters[0].cap_src = Polygon { halfspaces: vec![] };
        grid.converters[0].cap_dst = Polygon { halfspaces: vec![] };
        let f = capability_rows(&grid, 0).len();
        assert_eq!(f, 6);
        let dims = Dimensions { n: 3, e: 2, e_ac: 0, c: 1, i: 0, f, m: 0 };
        assert_eq!(dims.expected_m(), 18);
    }

    #[test]
    fn assemble_refuses_invalid_grids() {
        let mut grid = two_bus_case();
        grid.buses[0].v_lb = 1.2; // above v_ub
        match assemble(&grid, 0.0) {
            Err(BuildError::Invalid { report }) => {
                assert!(report.violations.iter().any(|v| v.rule == "voltage_bounds"))
            }
            other => panic!("expected validation failure, got {:?}", other.map(|_| ())),
        }
        assert!(matches!(assemble(&two_bus_case(), -1.0), Err(BuildError::LossPrice(_))));
    }

    #[test]
    fn global_balance_sums_to_losses() {
        let mut grid = two_bus_case();
        grid.converters.push(converter(1, 1, 2, 0.05, 0.04));
        let problem = assemble(&grid, 0.0).unwrap();
        let v = [C::new(1.01, 0.02), C::new(0.97, -0.04)];
        let f = [0.3, 0.1, 0.05, -0.02];
        // Σ_n (vᴴP_n v + p_nᵀf) = f_loss at every state.
        let lhs: f64 = problem
            .balance
            .iter()
            .map(|bal| bal.p_form.quad(&v) + dot(&bal.p_conv, &f))
            .sum();
        assert!((lhs - problem.f_loss(&v, &f)).abs() < 1e-12);
    }

    #[test]
    fn static_loss_folds_at_the_declared_side() {
        let mut grid = two_bus_case();
        let mut cv = converter(1, 1, 2, 0.02, 0.02);
        cv.static_loss_mw = 2.0;
        cv.loss_side = Side::Dst;
        grid.converters.push(cv);
        let problem = assemble(&grid, 0.0).unwrap();
        // 2 MW on a 100 MVA base lands as −0.02 p.u. at bus 2.
        assert_eq!(problem.balance[1].constant, C::new(-0.6 - 0.02, -0.1));
    }

    #[test]
    fn shift_is_identity_at_zero() {
        let problem = assemble(&two_bus_case(), 0.5).unwrap();
        let shifted = shift_marginal_cost(&problem, 0.0);
        assert_eq!(shifted.tau, problem.tau);
        assert_eq!(shifted.obj_offset, problem.obj_offset);
        assert_eq!(shifted.epigraphs, problem.epigraphs);
    }

    #[test]
    fn shift_raises_active_slopes_and_offsets_constants() {
        let problem = assemble(&two_bus_case(), 2.0).unwrap();
        let shifted = shift_marginal_cost(&problem, 2.0);
        assert_eq!(shifted.tau, 0.0);
        assert_eq!(shifted.epigraphs[0].segments[0].slope, 12.0);
        // Folded constants: the bus-2 load −0.6; objective shifts by 2·(−0.6).
        assert!((shifted.obj_offset - (-1.2)).abs() < 1e-15);
    }
}
