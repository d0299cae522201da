//! Matrix and vector coefficients of the unified OPF: bus admittance,
//! per-bus balance forms, constraint forms (ampacity, voltage drop, angle),
//! loss coefficients, and the off-diagonal sparsity pattern.
//!
//! Every emitted matrix is Hermitian with nonzeros confined to the pattern
//! `J ∪ diagonal`, which is what makes the partial-matrix relaxation sound.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use thiserror::Error;

use crate::grid::{Branch, Grid};

#[derive(Debug, Error, PartialEq)]
pub enum MatrixError {
    #[error("branch {branch}: voltage ratios must be nonzero")]
    ZeroRatio { branch: usize },
    #[error("branch {branch}: ampacity bound must be positive")]
    NonpositiveAmpacity { branch: usize },
    #[error("branch {branch}: invalid bound ordering")]
    InvalidBounds { branch: usize },
    #[error("bus index {bus} out of range (grid has {n} buses)")]
    BusOutOfRange { bus: usize, n: usize },
}

/// Constraint sense of a [`HermitianForm`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Eq,
    Le,
}

/// One scalar form `vᴴ M v + convᵀ f (sense) offset` with `M` Hermitian and
/// sparse: a real diagonal part plus strictly-upper entries whose mirror
/// images are implied by conjugation.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianForm {
    pub n: usize,
    /// Diagonal entries `(index, value)`; values are real by Hermiticity.
    pub diag: Vec<(usize, f64)>,
    /// Strictly-upper entries `(i, j, M_ij)` with `i < j`.
    pub upper: Vec<(usize, usize, Complex64)>,
    /// Linear coefficients over the converter state `f` (length `4|C|`, or
    /// empty when the form has no converter part).
    pub conv: Vec<f64>,
    pub offset: f64,
    pub sense: Sense,
}

impl HermitianForm {
    pub fn empty(n: usize, sense: Sense) -> Self {
        HermitianForm { n, diag: Vec::new(), upper: Vec::new(), conv: Vec::new(), offset: 0.0, sense }
    }

    /// `vᴴ M v` (exactly real by Hermitian symmetry).
    pub fn quad(&self, v: &[Complex64]) -> f64 {
        let mut acc = 0.0;
        for &(i, d) in &self.diag {
            acc += d * v[i].norm_sqr();
        }
        for &(i, j, m) in &self.upper {
            acc += 2.0 * (v[i].conj() * m * v[j]).re;
        }
        acc
    }

    /// Full form value `vᴴMv + convᵀf`.
    pub fn value(&self, v: &[Complex64], f: &[f64]) -> f64 {
        let lin: f64 = self.conv.iter().zip(f).map(|(c, x)| c * x).sum();
        self.quad(v) + lin
    }

    /// True when every off-diagonal nonzero lies in the pattern.
    pub fn respects(&self, pattern: &SparsityPattern) -> bool {
        self.upper.iter().all(|&(i, j, _)| pattern.contains(i, j))
    }

    /// Dense Hermitian matrix, for tests and small-scale inspection.
    pub fn dense(&self) -> Vec<Vec<Complex64>> {
        let mut m = vec![vec![Complex64::ZERO; self.n]; self.n];
        for &(i, d) in &self.diag {
            m[i][i] += Complex64::new(d, 0.0);
        }
        for &(i, j, val) in &self.upper {
            m[i][j] += val;
            m[j][i] += val.conj();
        }
        m
    }

    /// Frobenius inner product `trace(M · H)` with a dense Hermitian `H`
    /// given row-major; used by tests for independent re-evaluation.
    pub fn trace_with(&self, h: &[Vec<Complex64>]) -> f64 {
        let mut acc = 0.0;
        for &(i, d) in &self.diag {
            acc += d * h[i][i].re;
        }
        for &(i, j, m) in &self.upper {
            // M_ij H_ji + M_ji H_ij = 2 Re(M_ij H_ji)
            acc += 2.0 * (m * h[j][i]).re;
        }
        acc
    }
}

/// The set `J` of ordered index pairs on which the relaxation matrix may be
/// nonzero off the diagonal: all pairs drawn from each branch's endpoints,
/// including the endpoint diagonal entries.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SparsityPattern {
    pairs: BTreeSet<(usize, usize)>,
}

impl SparsityPattern {
    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.pairs.contains(&(i, j))
    }

    /// Number of ordered pairs, the `|J|` of the reconstruction-error
    /// normalization.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().copied()
    }

    /// Distinct off-diagonal pairs `(i, j)` with `i < j` — one per connected
    /// bus pair regardless of parallel branches.
    pub fn upper_pairs(&self) -> Vec<(usize, usize)> {
        self.pairs.iter().copied().filter(|&(i, j)| i < j).collect()
    }

    /// Diagonal indices covered by the pattern (branch endpoints).
    pub fn diag_members(&self) -> Vec<usize> {
        self.pairs
            .iter()
            .copied()
            .filter_map(|(i, j)| (i == j).then_some(i))
            .collect()
    }
}

/// The two-port admittance block of one branch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoPort {
    pub y_ss: Complex64,
    pub y_sd: Complex64,
    pub y_ds: Complex64,
    pub y_dd: Complex64,
}

/// Bus admittance matrix `Y` plus the branch current maps `Y_src`, `Y_dst`
/// (`i_src = Y_src v`, `i_dst = Y_dst v`). Rows of the branch maps carry
/// nonzeros only at the branch's own terminals.
#[derive(Clone, Debug, PartialEq)]
pub struct AdmittanceSet {
    pub n: usize,
    rows: Vec<BTreeMap<usize, Complex64>>,
    /// Per branch: `[(src index, coeff), (dst index, coeff)]` of the source
    /// current row.
    pub y_src: Vec<[(usize, Complex64); 2]>,
    pub y_dst: Vec<[(usize, Complex64); 2]>,
}

impl AdmittanceSet {
    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.rows[i].get(&j).copied().unwrap_or(Complex64::ZERO)
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        self.rows[i].iter().map(|(&j, &v)| (j, v))
    }

    /// `i = Y v`.
    pub fn currents(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|(&j, &y)| y * v[j]).sum())
            .collect()
    }

    /// Source-terminal current of branch `k` at state `v`.
    pub fn current_src(&self, k: usize, v: &[Complex64]) -> Complex64 {
        self.y_src[k].iter().map(|&(j, y)| y * v[j]).sum()
    }

    pub fn current_dst(&self, k: usize, v: &[Complex64]) -> Complex64 {
        self.y_dst[k].iter().map(|&(j, y)| y * v[j]).sum()
    }

    pub fn dense(&self) -> Vec<Vec<Complex64>> {
        let mut m = vec![vec![Complex64::ZERO; self.n]; self.n];
        for (i, row) in self.rows.iter().enumerate() {
            for (&j, &v) in row {
                m[i][j] = v;
            }
        }
        m
    }
}

/// Exact two-port admittance of the branch circuit: series element `ybar`
/// behind ideal transformers with complex ratios and terminal shunts,
///
/// ```text
/// I_src = |rho_src|²(ybar + y_src)·V_src − conj(rho_src)·rho_dst·ybar·V_dst
/// ```
///
/// and symmetrically for the destination. With unit ratios this reduces to
/// the textbook pi-model.
pub fn branch_two_port(branch: &Branch) -> Result<TwoPort, MatrixError> {
    if branch.rho_src.norm() == 0.0 || branch.rho_dst.norm() == 0.0 {
        return Err(MatrixError::ZeroRatio { branch: branch.id });
    }
    let rs = branch.rho_src;
    let rd = branch.rho_dst;
    Ok(TwoPort {
        y_ss: rs.norm_sqr() * (branch.ybar + branch.y_src),
        y_sd: -rs.conj() * rd * branch.ybar,
        y_ds: -rd.conj() * rs * branch.ybar,
        y_dd: rd.norm_sqr() * (branch.ybar + branch.y_dst),
    })
}

/// Accumulate all branch two-ports and bus shunts into the admittance set.
pub fn bus_admittance(grid: &Grid) -> Result<AdmittanceSet, MatrixError> {
    let n = grid.num_buses();
    let mut rows = vec![BTreeMap::new(); n];
    let mut y_src = Vec::with_capacity(grid.branches.len());
    let mut y_dst = Vec::with_capacity(grid.branches.len());
    for branch in &grid.branches {
        let tp = branch_two_port(branch)?;
        let (s, d) = (branch.src.index(), branch.dst.index());
        *rows[s].entry(s).or_insert(Complex64::ZERO) += tp.y_ss;
        *rows[s].entry(d).or_insert(Complex64::ZERO) += tp.y_sd;
        *rows[d].entry(s).or_insert(Complex64::ZERO) += tp.y_ds;
        *rows[d].entry(d).or_insert(Complex64::ZERO) += tp.y_dd;
        y_src.push([(s, tp.y_ss), (d, tp.y_sd)]);
        y_dst.push([(s, tp.y_ds), (d, tp.y_dd)]);
    }
    for (i, bus) in grid.buses.iter().enumerate() {
        if bus.y_sh != Complex64::ZERO {
            *rows[i].entry(i).or_insert(Complex64::ZERO) += bus.y_sh;
        }
    }
    Ok(AdmittanceSet { n, rows, y_src, y_dst })
}

/// Per-bus power balance forms `(P_n, Q_n)`: with `A = Yᴴ eₙ eₙᵀ`,
/// `P_n = (A + Aᴴ)/2` and `Q_n = (A − Aᴴ)/(2i)`, so that
/// `vᴴ(P_n + iQ_n)v = V_n · conj(I_n)` — the complex power flowing from bus
/// `n` into the network.
pub fn balance_matrices(adm: &AdmittanceSet, n: usize) -> Result<(HermitianForm, HermitianForm), MatrixError> {
    if n >= adm.n {
        return Err(MatrixError::BusOutOfRange { bus: n, n: adm.n });
    }
    let mut p = HermitianForm::empty(adm.n, Sense::Eq);
    let mut q = HermitianForm::empty(adm.n, Sense::Eq);
    for (j, y_nj) in adm.row(n) {
        if j == n {
            p.diag.push((n, y_nj.re));
            q.diag.push((n, -y_nj.im));
        } else {
            // Column n of A is conj(row n of Y); only that column is nonzero,
            // so the symmetrized forms have entries on (j, n) and (n, j).
            let half = y_nj.conj() / 2.0;
            let (lo, hi, val) = if j < n { (j, n, half) } else { (n, j, half.conj()) };
            p.upper.push((lo, hi, val));
            let qval = y_nj.conj() / Complex64::new(0.0, 2.0);
            let (lo, hi, qv) = if j < n { (j, n, qval) } else { (n, j, qval.conj()) };
            q.upper.push((lo, hi, qv));
        }
    }
    Ok((p, q))
}

/// Thermal flow limit forms of branch `k`: `vᴴ(form)v = |I_term,k|²` with
/// offset the squared ampacity. Each form is the rank-1 outer product of the
/// branch's two-nonzero current row, so it never densifies.
pub fn ampacity_matrices(
    adm: &AdmittanceSet,
    k: usize,
    i_src_ub: f64,
    i_dst_ub: f64,
) -> Result<(HermitianForm, HermitianForm), MatrixError> {
    if !(i_src_ub > 0.0 && i_dst_ub > 0.0) {
        return Err(MatrixError::NonpositiveAmpacity { branch: k + 1 });
    }
    let build = |row: &[(usize, Complex64); 2], limit: f64| {
        let mut form = HermitianForm::empty(adm.n, Sense::Le);
        form.offset = limit * limit;
        let [(c1, a), (c2, b)] = *row;
        form.diag.push((c1, a.norm_sqr()));
        form.diag.push((c2, b.norm_sqr()));
        let (lo, hi, val) = if c1 < c2 { (c1, c2, a.conj() * b) } else { (c2, c1, b.conj() * a) };
        form.upper.push((lo, hi, val));
        form
    };
    Ok((build(&adm.y_src[k], i_src_ub), build(&adm.y_dst[k], i_dst_ub)))
}

/// Voltage-drop forms of an AC branch: the upper form has
/// `vᴴ(·)v ≤ 0 ⇔ |V_dst| ≤ (1 + nu_ub)|V_src|`, the lower form mirrors it.
pub fn drop_matrices(
    branch: &Branch,
    nu_lb: f64,
    nu_ub: f64,
) -> Result<(HermitianForm, HermitianForm), MatrixError> {
    if !(nu_lb >= -1.0 && nu_lb < nu_ub) {
        return Err(MatrixError::InvalidBounds { branch: branch.id });
    }
    let (s, d) = (branch.src.index(), branch.dst.index());
    let n = s.max(d) + 1;
    let mut lower = HermitianForm::empty(n, Sense::Le);
    lower.diag.push((s, (1.0 + nu_lb).powi(2)));
    lower.diag.push((d, -1.0));
    let mut upper = HermitianForm::empty(n, Sense::Le);
    upper.diag.push((d, 1.0));
    upper.diag.push((s, -(1.0 + nu_ub).powi(2)));
    Ok((lower, upper))
}

/// Angle-difference forms of branch `k` with `K = e_src e_dstᵀ`:
///
/// * `A_k = −(K + Kᴴ)` restricts the voltage product to the right half-plane
///   (`vᴴA_k v = −2·Re(conj(V_src)V_dst) ≤ 0`) and is emitted for every
///   branch, DC included;
/// * the tangent bounds `A_lb, A_ub` encode `delta ∈ [lb, ub]` and exist for
///   AC branches only.
pub fn angle_matrices(
    branch: &Branch,
    bounds: Option<(f64, f64)>,
) -> Result<(HermitianForm, Option<(HermitianForm, HermitianForm)>), MatrixError> {
    let (s, d) = (branch.src.index(), branch.dst.index());
    let n = s.max(d) + 1;
    // Upper-triangle value of K + Kᴴ at the branch pair is 1 regardless of
    // orientation; of (K − Kᴴ)/(2i) it is −i/2 for s < d and +i/2 otherwise.
    let (lo, hi) = (s.min(d), s.max(d));
    let skew = if s < d { Complex64::new(0.0, -0.5) } else { Complex64::new(0.0, 0.5) };
    let mut a_k = HermitianForm::empty(n, Sense::Le);
    a_k.upper.push((lo, hi, Complex64::new(-1.0, 0.0)));
    let bounds = match bounds {
        None => None,
        Some((lb, ub)) => {
            let quarter = std::f64::consts::FRAC_PI_2;
            if !(lb > -quarter && ub < quarter && lb < ub) {
                return Err(MatrixError::InvalidBounds { branch: branch.id });
            }
            let mut a_ub = HermitianForm::empty(n, Sense::Le);
            a_ub.upper.push((lo, hi, skew - Complex64::new(ub.tan() / 2.0, 0.0)));
            let mut a_lb = HermitianForm::empty(n, Sense::Le);
            a_lb.upper.push((lo, hi, Complex64::new(lb.tan() / 2.0, 0.0) - skew));
            Some((a_lb, a_ub))
        }
    };
    Ok((a_k, bounds))
}

/// Total-loss coefficients: `L = (Y + Yᴴ)/2` over the voltage state and the
/// converter loss vector `l` carrying `eta_fwd`/`eta_bwd` on each converter's
/// two active-power slots, so that `f_loss = vᴴLv + lᵀf`.
pub fn loss_coefficients(grid: &Grid, adm: &AdmittanceSet) -> (HermitianForm, Vec<f64>) {
    let mut l_form = HermitianForm::empty(adm.n, Sense::Le);
    for i in 0..adm.n {
        let d = adm.entry(i, i).re;
        if d != 0.0 {
            l_form.diag.push((i, d));
        }
    }
    let mut seen = BTreeSet::new();
    for i in 0..adm.n {
        for (j, y_ij) in adm.row(i) {
            if i < j && seen.insert((i, j)) {
                let val = (y_ij + adm.entry(j, i).conj()) / 2.0;
                if val != Complex64::ZERO {
                    l_form.upper.push((i, j, val));
                }
            }
        }
    }
    let mut l_vec = vec![0.0; 4 * grid.converters.len()];
    for (idx, cv) in grid.converters.iter().enumerate() {
        l_vec[4 * idx] = cv.eta_fwd;
        l_vec[4 * idx + 1] = cv.eta_bwd;
    }
    (l_form, l_vec)
}

/// The pattern `J`: every ordered pair drawn from some branch's endpoint set,
/// endpoint diagonals included. Parallel branches collapse by set semantics.
pub fn sparsity_pattern(grid: &Grid) -> SparsityPattern {
    let mut pairs = BTreeSet::new();
    for branch in &grid.branches {
        let (s, d) = (branch.src.index(), branch.dst.index());
        for i in [s, d] {
            for j in [s, d] {
                pairs.insert((i, j));
            }
        }
    }
    SparsityPattern { pairs }
}
