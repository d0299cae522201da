//! Conic relaxations of the assembled OPF: the second-order-cone relaxation
//! ties every distinct off-diagonal voltage pair to a four-dimensional SOC
//! block (the 2×2 principal-minor condition), and the semidefinite
//! relaxation carries one PSD block holding the real embedding of the full
//! voltage Gram matrix.
//!
//! Row order is fixed so that dual multipliers are attributable: the first
//! `2n` equality rows are the per-bus balance rows (active at `2k`, reactive
//! at `2k+1`), followed by the `m` inequality rows (one nonnegative slack
//! each), the epigraph segment rows, and — for the SOC form — the pair tie
//! rows.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::builder::{CostKind, QcqpProblem};
use crate::matrices::HermitianForm;
use hyopf_conic::{svec_index, ConeSlice, ConeSpec, ConicProblem, CscMatrix};

/// Largest bus count accepted by the semidefinite relaxation; its PSD block
/// has side `2n`, so the factorization cost grows with the sixth power of
/// the bus count.
pub const SDR_BUS_LIMIT: usize = 120;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RelaxError {
    #[error("semidefinite relaxation is limited to {limit} buses, grid has {n}")]
    TooLarge { n: usize, limit: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RelaxationKind {
    Socr,
    Sdr,
}

impl std::fmt::Display for RelaxationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RelaxationKind::Socr => write!(f, "socr"),
            RelaxationKind::Sdr => write!(f, "sdr"),
        }
    }
}

/// Where each model quantity lives inside the conic variable vector.
#[derive(Clone, Debug)]
pub struct VariableMap {
    pub kind: RelaxationKind,
    pub n: usize,
    /// Distinct coupled bus pairs `(i, j)` with `i < j`, in slot order.
    pub pairs: Vec<(usize, usize)>,
    pair_slot: BTreeMap<(usize, usize), usize>,
    /// Start of the converter flow block `f`.
    pub base_f: usize,
    /// Start of the injection block `s` (slots `2j`, `2j+1` per injector).
    pub base_s: usize,
    /// Start of the epigraph block `t` (one slot per separable cost).
    pub base_t: usize,
    pub num_epigraphs: usize,
    /// Start and length of the slack block (inequality rows, then epigraph
    /// segment rows).
    pub base_slack: usize,
    pub num_slack: usize,
    /// Start of the cone-structured voltage block: SOC quadruples per pair,
    /// or the single packed PSD block of side `2n`.
    pub base_cone: usize,
    pub num_vars: usize,
    pub num_eq: usize,
}

impl VariableMap {
    /// Conic slot of the diagonal entry `V_ii` (SOC form only).
    pub fn diag_slot(&self, i: usize) -> usize {
        debug_assert_eq!(self.kind, RelaxationKind::Socr);
        i
    }

    /// Conic slots of `(Re V_ij, Im V_ij)` for a coupled pair (SOC form only).
    pub fn off_slots(&self, i: usize, j: usize) -> Option<(usize, usize)> {
        let &t = self.pair_slot.get(&(i.min(j), i.max(j)))?;
        Some((self.n + 2 * t, self.n + 2 * t + 1))
    }

    /// Equality row holding the active (`which = 0`) or reactive
    /// (`which = 1`) balance of bus `k`.
    pub fn balance_row(&self, k: usize, which: usize) -> usize {
        debug_assert!(which < 2);
        2 * k + which
    }
}

/// The 2×2 principal-minor condition as a second-order cone element:
/// `[[a, re − i·im], [re + i·im, d]] ⪰ 0` exactly when
/// `(a + d, 2re, 2im, a − d)` lies in the four-dimensional SOC.
pub fn psd2x2_to_soc(a: f64, d: f64, re: f64, im: f64) -> [f64; 4] {
    [a + d, 2.0 * re, 2.0 * im, a - d]
}

/// Real symmetric embedding of a Hermitian matrix `M = R + iI`:
/// `[[R, −I], [I, R]]`, positive semidefinite exactly when `M` is.
pub fn hermitian_embed(m: &DMatrix<Complex64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let e = m[(i, j)];
            out[(i, j)] = e.re;
            out[(n + i, n + j)] = e.re;
            out[(i, n + j)] = -e.im;
            out[(n + i, j)] = e.im;
        }
    }
    out
}

/// Sparse coefficients of `trace(M V)` over the voltage representation:
/// per-slot weights on the diagonal and off-diagonal free slots (SOC form)
/// or on the packed PSD block, where the row vector is `½·svec(embed(M))`.
fn form_v_coeffs(map: &VariableMap, form: &HermitianForm) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    match map.kind {
        RelaxationKind::Socr => {
            for &(i, d) in &form.diag {
                out.push((map.diag_slot(i), d));
            }
            for &(i, j, m) in &form.upper {
                let (re_slot, im_slot) = map
                    .off_slots(i, j)
                    .expect("constraint touches a pair outside the sparsity pattern");
                if m.re != 0.0 {
                    out.push((re_slot, 2.0 * m.re));
                }
                if m.im != 0.0 {
                    out.push((im_slot, 2.0 * m.im));
                }
            }
        }
        RelaxationKind::Sdr => {
            let side = 2 * map.n;
            let sqrt2 = std::f64::consts::SQRT_2;
            for &(i, d) in &form.diag {
                out.push((map.base_cone + svec_index(side, i, i), 0.5 * d));
                out.push((map.base_cone + svec_index(side, map.n + i, map.n + i), 0.5 * d));
            }
            for &(i, j, m) in &form.upper {
                let (a, b) = (m.re, m.im);
                if a != 0.0 {
                    let w = 0.5 * sqrt2 * a;
                    out.push((map.base_cone + svec_index(side, j, i), w));
                    out.push((map.base_cone + svec_index(side, map.n + j, map.n + i), w));
                }
                if b != 0.0 {
                    let w = 0.5 * sqrt2 * b;
                    out.push((map.base_cone + svec_index(side, map.n + i, j), w));
                    out.push((map.base_cone + svec_index(side, map.n + j, i), -w));
                }
            }
        }
    }
    out
}

fn layout(problem: &QcqpProblem, kind: RelaxationKind) -> VariableMap {
    let n = problem.dims.n;
    let pairs = problem.pattern.upper_pairs();
    let pair_slot: BTreeMap<(usize, usize), usize> =
        pairs.iter().enumerate().map(|(t, &p)| (p, t)).collect();
    let num_segments: usize = problem.epigraphs.iter().map(|e| e.segments.len()).sum();
    let (base_f, cone_len) = match kind {
        RelaxationKind::Socr => (n + 2 * pairs.len(), 4 * pairs.len()),
        RelaxationKind::Sdr => (0, n * (2 * n + 1)),
    };
    let base_s = base_f + problem.num_f();
    let base_t = base_s + problem.num_s();
    let num_epigraphs = problem.epigraphs.len();
    let base_slack = base_t + num_epigraphs;
    let num_slack = problem.dims.m + num_segments;
    let base_cone = base_slack + num_slack;
    let num_eq = 2 * n
        + problem.dims.m
        + num_segments
        + if kind == RelaxationKind::Socr { 4 * pairs.len() } else { 0 };
    VariableMap {
        kind,
        n,
        pairs,
        pair_slot,
        base_f,
        base_s,
        base_t,
        num_epigraphs,
        base_slack,
        num_slack,
        base_cone,
        num_vars: base_cone + cone_len,
        num_eq,
    }
}

fn build(problem: &QcqpProblem, kind: RelaxationKind) -> (ConicProblem, VariableMap) {
    let map = layout(problem, kind);
    let n = map.n;
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut rhs = vec![0.0; map.num_eq];

    // Balance rows: trace((P_k + iQ_k)V) + (p_k + iq_k)ᵀf − Σ_j wᵀs_j = const.
    for (k, bal) in problem.balance.iter().enumerate() {
        for (which, form, conv, target) in [
            (0usize, &bal.p_form, &bal.p_conv, bal.constant.re),
            (1, &bal.q_form, &bal.q_conv, bal.constant.im),
        ] {
            let row = map.balance_row(k, which);
            for (slot, w) in form_v_coeffs(&map, form) {
                triplets.push((row, slot, w));
            }
            for (idx, &w) in conv.iter().enumerate() {
                if w != 0.0 {
                    triplets.push((row, map.base_f + idx, w));
                }
            }
            for &j in &bal.injectors {
                triplets.push((row, map.base_s + 2 * j + which, -1.0));
            }
            rhs[row] = target;
        }
    }

    // Inequality rows: lhs + slack = rhs, slack ≥ 0.
    let ineq_base = 2 * n;
    for (r, ineq) in problem.inequalities.iter().enumerate() {
        let row = ineq_base + r;
        for (slot, w) in form_v_coeffs(&map, &ineq.form) {
            triplets.push((row, slot, w));
        }
        for (idx, &w) in ineq.form.conv.iter().enumerate() {
            if w != 0.0 {
                triplets.push((row, map.base_f + idx, w));
            }
        }
        for &(idx, w) in &ineq.s_lin {
            triplets.push((row, map.base_s + idx, w));
        }
        triplets.push((row, map.base_slack + r, 1.0));
        rhs[row] = ineq.form.offset;
    }

    // Epigraph segment rows: slope·x − t + slack = −intercept.
    let mut row = ineq_base + problem.dims.m;
    let mut slack = map.base_slack + problem.dims.m;
    for (e, eg) in problem.epigraphs.iter().enumerate() {
        let x_slot = map.base_s
            + 2 * eg.injector
            + if eg.kind == CostKind::Active { 0 } else { 1 };
        for seg in &eg.segments {
            triplets.push((row, x_slot, seg.slope));
            triplets.push((row, map.base_t + e, -1.0));
            triplets.push((row, slack, 1.0));
            rhs[row] = -seg.intercept;
            row += 1;
            slack += 1;
        }
    }

    // Pair tie rows (SOC form): bind each quadruple to the free voltage slots.
    if kind == RelaxationKind::Socr {
        for (t, &(i, j)) in map.pairs.iter().enumerate() {
            let q = map.base_cone + 4 * t;
            let (re_slot, im_slot) = map.off_slots(i, j).unwrap();
            triplets.push((row, q, 1.0));
            triplets.push((row, i, -1.0));
            triplets.push((row, j, -1.0));
            row += 1;
            triplets.push((row, q + 1, 1.0));
            triplets.push((row, re_slot, -2.0));
            row += 1;
            triplets.push((row, q + 2, 1.0));
            triplets.push((row, im_slot, -2.0));
            row += 1;
            triplets.push((row, q + 3, 1.0));
            triplets.push((row, i, -1.0));
            triplets.push((row, j, 1.0));
            row += 1;
        }
    }
    debug_assert_eq!(row, map.num_eq);

    // Objective: Σ t + tau·(trace(L V) + lᵀf) + offset.
    let mut objective = vec![0.0; map.num_vars];
    for e in 0..map.num_epigraphs {
        objective[map.base_t + e] = 1.0;
    }
    if problem.tau != 0.0 {
        for (slot, w) in form_v_coeffs(&map, &problem.loss_form) {
            objective[slot] += problem.tau * w;
        }
        for (idx, &w) in problem.loss_vec.iter().enumerate() {
            objective[map.base_f + idx] += problem.tau * w;
        }
    }

    let mut cones = vec![ConeSlice {
        start: map.base_slack,
        spec: ConeSpec::NonNeg { dim: map.num_slack },
    }];
    match kind {
        RelaxationKind::Socr => {
            for t in 0..map.pairs.len() {
                cones.push(ConeSlice {
                    start: map.base_cone + 4 * t,
                    spec: ConeSpec::Soc { dim: 4 },
                });
            }
        }
        RelaxationKind::Sdr => {
            cones.push(ConeSlice {
                start: map.base_cone,
                spec: ConeSpec::Psd { side: 2 * n },
            });
        }
    }

    let conic = ConicProblem {
        num_vars: map.num_vars,
        objective,
        obj_offset: problem.obj_offset,
        eq: CscMatrix::from_triplets(map.num_eq, map.num_vars, &triplets),
        rhs,
        cones,
    };
    (conic, map)
}

/// Second-order-cone relaxation of the assembled OPF.
pub fn build_socr(problem: &QcqpProblem) -> (ConicProblem, VariableMap) {
    build(problem, RelaxationKind::Socr)
}

/// Semidefinite relaxation of the assembled OPF. Refuses grids beyond
/// [`SDR_BUS_LIMIT`] buses.
pub fn build_sdr(problem: &QcqpProblem) -> Result<(ConicProblem, VariableMap), RelaxError> {
    if problem.dims.n > SDR_BUS_LIMIT {
        return Err(RelaxError::TooLarge { n: problem.dims.n, limit: SDR_BUS_LIMIT });
    }
    Ok(build(problem, RelaxationKind::Sdr))
}

/// The voltage Gram entries a relaxation determines: all diagonals plus the
/// off-diagonal entries of coupled pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialMatrix {
    pub n: usize,
    pub diag: Vec<f64>,
    /// Entries `V_ij` for coupled pairs with `i < j`.
    pub entries: BTreeMap<(usize, usize), Complex64>,
    /// Buses whose diagonal belongs to the sparsity pattern (endpoints of at
    /// least one branch), ascending.
    pub diag_members: Vec<usize>,
}

impl PartialMatrix {
    /// Entry `(i, j)` if determined: diagonal, a coupled pair, or its
    /// conjugate mirror.
    pub fn get(&self, i: usize, j: usize) -> Option<Complex64> {
        if i == j {
            return Some(Complex64::new(self.diag[i], 0.0));
        }
        if i < j {
            self.entries.get(&(i, j)).copied()
        } else {
            self.entries.get(&(j, i)).map(|v| v.conj())
        }
    }
}

/// Reads the voltage Gram entries out of a conic primal point.
pub fn extract_partial(x: &[f64], map: &VariableMap) -> PartialMatrix {
    let diag_members: Vec<usize> = {
        let mut set: Vec<usize> = map.pairs.iter().flat_map(|&(i, j)| [i, j]).collect();
        set.sort_unstable();
        set.dedup();
        set
    };
    match map.kind {
        RelaxationKind::Socr => {
            let diag = x[..map.n].to_vec();
            let entries = map
                .pairs
                .iter()
                .map(|&(i, j)| {
                    let (re_slot, im_slot) = map.off_slots(i, j).unwrap();
                    ((i, j), Complex64::new(x[re_slot], x[im_slot]))
                })
                .collect();
            PartialMatrix { n: map.n, diag, entries, diag_members }
        }
        RelaxationKind::Sdr => {
            let side = 2 * map.n;
            let xm = hyopf_conic::smat(&x[map.base_cone..map.base_cone + side * (side + 1) / 2], side);
            // Symmetrize the two real blocks: any PSD solution of the
            // embedded problem yields the Hermitian matrix
            // R = (X₁₁ + X₂₂)/2, I = (X₂₁ − X₁₂)/2 with identical
            // constraint values.
            let entry = |i: usize, j: usize| {
                Complex64::new(
                    0.5 * (xm[(i, j)] + xm[(map.n + i, map.n + j)]),
                    0.5 * (xm[(map.n + i, j)] - xm[(i, map.n + j)]),
                )
            };
            let diag = (0..map.n).map(|i| entry(i, i).re).collect();
            let entries = map
                .pairs
                .iter()
                .map(|&(i, j)| ((i, j), entry(i, j)))
                .collect();
            PartialMatrix { n: map.n, diag, entries, diag_members }
        }
    }
}

/// Converter flows at a conic primal point.
pub fn extract_f(x: &[f64], map: &VariableMap, num_f: usize) -> Vec<f64> {
    x[map.base_f..map.base_f + num_f].to_vec()
}

/// Injections at a conic primal point.
pub fn extract_s(x: &[f64], map: &VariableMap, num_s: usize) -> Vec<f64> {
    x[map.base_s..map.base_s + num_s].to_vec()
}

/// Lifts a feasible model state `(v, f, s)` into a feasible conic point:
/// the Gram entries of `v·vᴴ`, tight epigraph values, and the implied
/// slacks. Every slack is nonnegative and every cone constraint holds
/// exactly when the state is feasible.
pub fn embed_state(
    problem: &QcqpProblem,
    map: &VariableMap,
    v: &[Complex64],
    f: &[f64],
    s: &[f64],
) -> Vec<f64> {
    let mut x = vec![0.0; map.num_vars];
    let gram = |i: usize, j: usize| v[i] * v[j].conj();

    match map.kind {
        RelaxationKind::Socr => {
            for i in 0..map.n {
                x[i] = v[i].norm_sqr();
            }
            for &(i, j) in &map.pairs {
                let (re_slot, im_slot) = map.off_slots(i, j).unwrap();
                let g = gram(i, j);
                x[re_slot] = g.re;
                x[im_slot] = g.im;
            }
            for (t, &(i, j)) in map.pairs.iter().enumerate() {
                let g = gram(i, j);
                let q = psd2x2_to_soc(v[i].norm_sqr(), v[j].norm_sqr(), g.re, g.im);
                x[map.base_cone + 4 * t..map.base_cone + 4 * t + 4].copy_from_slice(&q);
            }
        }
        RelaxationKind::Sdr => {
            let vm = DMatrix::from_fn(map.n, map.n, |i, j| gram(i, j));
            let packed = hyopf_conic::svec(&hermitian_embed(&vm));
            x[map.base_cone..map.base_cone + packed.len()].copy_from_slice(&packed);
        }
    }

    x[map.base_f..map.base_f + f.len()].copy_from_slice(f);
    x[map.base_s..map.base_s + s.len()].copy_from_slice(s);

    for (e, eg) in problem.epigraphs.iter().enumerate() {
        let val = match eg.kind {
            CostKind::Active => s[2 * eg.injector],
            CostKind::Reactive => s[2 * eg.injector + 1],
        };
        x[map.base_t + e] = eg
            .segments
            .iter()
            .map(|seg| seg.slope * val + seg.intercept)
            .fold(f64::NEG_INFINITY, f64::max);
    }

    for (r, ineq) in problem.inequalities.iter().enumerate() {
        x[map.base_slack + r] = -ineq.violation(v, f, s);
    }
    let mut slack = map.base_slack + problem.dims.m;
    for (e, eg) in problem.epigraphs.iter().enumerate() {
        let val = match eg.kind {
            CostKind::Active => s[2 * eg.injector],
            CostKind::Reactive => s[2 * eg.injector + 1],
        };
        for seg in &eg.segments {
            x[slack] = x[map.base_t + e] - (seg.slope * val + seg.intercept);
            slack += 1;
        }
    }
    x
}
