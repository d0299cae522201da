//! Cone descriptions, Nesterov–Todd scalings, and the Jordan-algebra
//! operations used by the predictor-corrector iteration.
//!
//! All three supported cones are symmetric. For each cone K the scaling point
//! yields a linear map W with W^{-T} x = W z = lambda; the scaled variable
//! lambda drives the corrector and the proximity measure. Semidefinite blocks
//! are stored in packed `svec` form: column-major lower triangle with
//! off-diagonal entries scaled by sqrt(2), so that inner products of packed
//! vectors equal trace inner products of the matrices they represent.

use nalgebra::{DMatrix, DVector};

/// One cone in a conic program. A cone constrains a contiguous slice of the
/// variable vector; slices of distinct cones are disjoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeSpec {
    /// Componentwise nonnegative orthant of the given dimension.
    NonNeg { dim: usize },
    /// Second-order cone { (u0, u1) : u0 >= ||u1||_2 } of total dimension `dim`.
    Soc { dim: usize },
    /// Positive semidefinite cone of symmetric `side` x `side` matrices in
    /// packed svec storage (side * (side + 1) / 2 slots).
    Psd { side: usize },
}

impl ConeSpec {
    /// Number of variable slots the cone occupies.
    pub fn dim(&self) -> usize {
        match *self {
            ConeSpec::NonNeg { dim } => dim,
            ConeSpec::Soc { dim } => dim,
            ConeSpec::Psd { side } => side * (side + 1) / 2,
        }
    }

    /// Barrier degree: contribution to the normalization of the duality
    /// measure mu = <x, z> / degree.
    pub fn degree(&self) -> usize {
        match *self {
            ConeSpec::NonNeg { dim } => dim,
            ConeSpec::Soc { .. } => 1,
            ConeSpec::Psd { side } => side,
        }
    }

    /// Identity element of the cone's Jordan algebra.
    pub fn unit(&self) -> Vec<f64> {
        match *self {
            ConeSpec::NonNeg { dim } => vec![1.0; dim],
            ConeSpec::Soc { dim } => {
                let mut e = vec![0.0; dim];
                e[0] = 1.0;
                e
            }
            ConeSpec::Psd { side } => {
                let mut e = vec![0.0; self.dim()];
                for i in 0..side {
                    e[svec_index(side, i, i)] = 1.0;
                }
                e
            }
        }
    }

    /// Distance to the cone boundary along the unit element: the largest t
    /// with u - t * e in the cone. Positive iff u is interior.
    pub fn interior_margin(&self, u: &[f64]) -> f64 {
        match *self {
            ConeSpec::NonNeg { .. } => u.iter().copied().fold(f64::INFINITY, f64::min),
            ConeSpec::Soc { .. } => u[0] - norm2(&u[1..]),
            ConeSpec::Psd { side } => {
                let m = smat(u, side);
                m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Largest step t such that u + alpha * du stays in the cone for all
    /// alpha in [0, t]; `f64::INFINITY` when the ray never leaves the cone.
    /// Requires u interior.
    pub fn max_step(&self, u: &[f64], du: &[f64]) -> f64 {
        match *self {
            ConeSpec::NonNeg { .. } => {
                let mut t = f64::INFINITY;
                for (&ui, &di) in u.iter().zip(du) {
                    if di < 0.0 {
                        t = t.min(-ui / di);
                    }
                }
                t
            }
            ConeSpec::Soc { .. } => soc_max_step(u, du),
            ConeSpec::Psd { side } => {
                // u + t*du >= 0 iff I + t * U^{-1/2} dU U^{-1/2} >= 0 where the
                // congruence is evaluated through an eigendecomposition of U.
                let um = smat(u, side);
                let dm = smat(du, side);
                let eig = um.symmetric_eigen();
                let floor = 1e-14 * (1.0 + eig.eigenvalues.amax());
                let inv_sqrt: DVector<f64> =
                    eig.eigenvalues.map(|v| 1.0 / v.max(floor).sqrt());
                let q = &eig.eigenvectors;
                let g = q.transpose() * dm * q;
                let mut scaled = g;
                for i in 0..side {
                    for j in 0..side {
                        scaled[(i, j)] *= inv_sqrt[i] * inv_sqrt[j];
                    }
                }
                let min_eig = scaled
                    .symmetric_eigenvalues()
                    .iter()
                    .copied()
                    .fold(f64::INFINITY, f64::min);
                if min_eig >= 0.0 {
                    f64::INFINITY
                } else {
                    -1.0 / min_eig
                }
            }
        }
    }

    /// Whether `u` satisfies the strict-interiority conditions the scaling
    /// computation requires, tested with the same floating-point expressions
    /// so that an accepted iterate cannot fail [`Scaling::compute`].
    pub fn strict_interior(&self, u: &[f64]) -> bool {
        match *self {
            ConeSpec::NonNeg { .. } => u.iter().all(|&v| v > 0.0),
            ConeSpec::Soc { .. } => u[0] > 0.0 && u[0] * u[0] - sq_norm(&u[1..]) > 0.0,
            ConeSpec::Psd { side } => nalgebra::Cholesky::new(smat(u, side)).is_some(),
        }
    }

    /// Jordan product u o v of the cone's algebra.
    pub fn jordan_product(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        match *self {
            ConeSpec::NonNeg { .. } => u.iter().zip(v).map(|(a, b)| a * b).collect(),
            ConeSpec::Soc { dim } => {
                let mut out = vec![0.0; dim];
                out[0] = dot(u, v);
                for k in 1..dim {
                    out[k] = u[0] * v[k] + v[0] * u[k];
                }
                out
            }
            ConeSpec::Psd { side } => {
                let um = smat(u, side);
                let vm = smat(v, side);
                let prod = (&um * &vm + &vm * &um) * 0.5;
                svec(&prod)
            }
        }
    }
}

/// Nesterov–Todd scaling of one cone block, computed from an interior
/// primal-dual pair (x, z). Provides the maps W, W^{-1}, W^{-T}, the scaled
/// variable lambda = W^{-T} x = W z, and the KKT block H = W^{-1} W^{-T}.
#[derive(Debug, Clone)]
pub enum Scaling {
    NonNeg {
        /// w_i = sqrt(x_i / z_i)
        w: Vec<f64>,
    },
    Soc {
        /// Unit-hyperbolic scaling point: wbar_0^2 - ||wbar_1||^2 = 1.
        wbar: Vec<f64>,
        beta: f64,
    },
    Psd {
        r: DMatrix<f64>,
        r_inv: DMatrix<f64>,
    },
}

/// KKT contribution of one cone block.
pub enum HBlock {
    Diag(Vec<f64>),
    Dense(DMatrix<f64>),
    /// Second-order block in product form, H = diag I + u u^T - v0^2 e0 e0^T.
    ///
    /// Near the boundary the dense H has condition on the order of mu^-2 and
    /// its triangular factorization loses the small pivots to cancellation.
    /// The product form keeps the diagonal uniformly conditioned and exposes
    /// the rank-one terms to the factorization as explicit extra columns with
    /// known pivot signs (+1 for u, -1 for v).
    SocLowRank { diag: f64, u: Vec<f64>, v0: f64 },
}

#[derive(Debug, thiserror::Error)]
#[error("scaling point undefined: iterate left the cone interior")]
pub struct ScalingError;

impl Scaling {
    /// Computes the NT scaling and the scaled variable lambda for an interior
    /// pair (x, z) of the given cone.
    pub fn compute(spec: &ConeSpec, x: &[f64], z: &[f64]) -> Result<(Scaling, Vec<f64>), ScalingError> {
        match *spec {
            ConeSpec::NonNeg { dim } => {
                let mut w = vec![0.0; dim];
                let mut lambda = vec![0.0; dim];
                for i in 0..dim {
                    if x[i] <= 0.0 || z[i] <= 0.0 {
                        return Err(ScalingError);
                    }
                    w[i] = (x[i] / z[i]).sqrt();
                    lambda[i] = (x[i] * z[i]).sqrt();
                }
                Ok((Scaling::NonNeg { w }, lambda))
            }
            ConeSpec::Soc { dim } => {
                let qx2 = x[0] * x[0] - sq_norm(&x[1..]);
                let qz2 = z[0] * z[0] - sq_norm(&z[1..]);
                if qx2 <= 0.0 || qz2 <= 0.0 || x[0] <= 0.0 || z[0] <= 0.0 {
                    return Err(ScalingError);
                }
                let qx = qx2.sqrt();
                let qz = qz2.sqrt();
                let xbar: Vec<f64> = x.iter().map(|v| v / qx).collect();
                let zbar: Vec<f64> = z.iter().map(|v| v / qz).collect();
                let inner = dot(&xbar, &zbar);
                let gamma = ((1.0 + inner) / 2.0).sqrt();
                // Scaling point of the pair: s = (xbar + J zbar) / (2 gamma)
                // is unit-hyperbolic and satisfies (qx/qz) P(s) z = x, where
                // P(u) = 2uu' - det(u) J is the quadratic representation. The
                // stored wbar is the Jordan square root of s, so that
                // W = beta (2 wbar wbar' - J) = beta P(wbar) obeys W^2 z = x.
                let s0 = (xbar[0] + zbar[0]) / (2.0 * gamma);
                let w0 = ((s0 + 1.0) / 2.0).sqrt();
                let mut wbar = vec![0.0; dim];
                wbar[0] = w0;
                for k in 1..dim {
                    let sk = (xbar[k] - zbar[k]) / (2.0 * gamma);
                    wbar[k] = sk / (2.0 * w0);
                }
                let beta = (qx / qz).sqrt();
                let scaling = Scaling::Soc { wbar, beta };
                let lambda = scaling.apply_w(z);
                Ok((scaling, lambda))
            }
            ConeSpec::Psd { side } => {
                let xm = smat(x, side);
                let zm = smat(z, side);
                let lx = nalgebra::Cholesky::new(xm).ok_or(ScalingError)?.l();
                let lz = nalgebra::Cholesky::new(zm).ok_or(ScalingError)?.l();
                let svd = (lz.transpose() * &lx).svd(true, true);
                let u = svd.u.as_ref().ok_or(ScalingError)?;
                let vt = svd.v_t.as_ref().ok_or(ScalingError)?;
                let mut s_inv_sqrt = DMatrix::zeros(side, side);
                let mut lambda_vec = vec![0.0; spec.dim()];
                for i in 0..side {
                    let s = svd.singular_values[i];
                    if s <= 0.0 {
                        return Err(ScalingError);
                    }
                    s_inv_sqrt[(i, i)] = 1.0 / s.sqrt();
                    lambda_vec[svec_index(side, i, i)] = s;
                }
                let r = &lx * vt.transpose() * &s_inv_sqrt;
                let r_inv = &s_inv_sqrt * u.transpose() * lz.transpose();
                Ok((Scaling::Psd { r, r_inv }, lambda_vec))
            }
        }
    }

    /// W v
    pub fn apply_w(&self, v: &[f64]) -> Vec<f64> {
        match self {
            Scaling::NonNeg { w } => w.iter().zip(v).map(|(wi, vi)| wi * vi).collect(),
            Scaling::Soc { wbar, beta } => soc_reflect_mul(wbar, *beta, v),
            Scaling::Psd { r, .. } => congruence(v, r),
        }
    }

    /// W^{-1} v
    pub fn apply_w_inv(&self, v: &[f64]) -> Vec<f64> {
        match self {
            Scaling::NonNeg { w } => w.iter().zip(v).map(|(wi, vi)| vi / wi).collect(),
            Scaling::Soc { wbar, beta } => {
                // W^{-1} = beta^{-1} (2 (J wbar)(J wbar)^T - J) with J = diag(1, -I).
                let jw: Vec<f64> = flip(wbar);
                soc_reflect_mul(&jw, 1.0 / beta, v)
            }
            Scaling::Psd { r_inv, .. } => congruence(v, r_inv),
        }
    }

    /// W^{-T} v. Coincides with W^{-1} for the self-adjoint orthant and
    /// second-order scalings.
    pub fn apply_w_inv_t(&self, v: &[f64]) -> Vec<f64> {
        match self {
            Scaling::NonNeg { .. } | Scaling::Soc { .. } => self.apply_w_inv(v),
            Scaling::Psd { r_inv, .. } => congruence_t(v, r_inv),
        }
    }

    /// KKT block H = W^{-1} W^{-T}.
    pub fn h_block(&self, spec: &ConeSpec) -> HBlock {
        match self {
            Scaling::NonNeg { w } => HBlock::Diag(w.iter().map(|wi| 1.0 / (wi * wi)).collect()),
            Scaling::Soc { wbar, beta } => {
                // H = beta^-2 (2 w~ w~' - J)^2 with w~ = J wbar. The square of
                // the quadratic representation is the representation of the
                // Jordan square, so H = beta^-2 (2 g g' - J) for g = w~ o w~,
                // which splits as beta^-2 I + u u' - v0^2 e0 e0' with
                // u = (sqrt(2)/beta) g and v0 = sqrt(2)/beta.
                let dim = wbar.len();
                let w0 = wbar[0];
                let s = std::f64::consts::SQRT_2 / beta;
                let mut u = vec![0.0; dim];
                // g0 = w0^2 + ||w1||^2 = 2 w0^2 - 1 by the hyperbolic identity.
                u[0] = s * (2.0 * w0 * w0 - 1.0);
                for k in 1..dim {
                    u[k] = s * (-2.0 * w0 * wbar[k]);
                }
                HBlock::SocLowRank {
                    diag: 1.0 / (beta * beta),
                    u,
                    v0: s,
                }
            }
            Scaling::Psd { r_inv, .. } => {
                let side = r_inv.nrows();
                let s = r_inv.transpose() * r_inv;
                let m = spec.dim();
                let mut h = DMatrix::zeros(m, m);
                let sqrt2 = std::f64::consts::SQRT_2;
                for l in 0..side {
                    for k in l..side {
                        let col_idx = svec_index(side, k, l);
                        // S E_kl S for the symmetrized unit basis matrix E_kl.
                        let sk = s.column(k);
                        let sl = s.column(l);
                        let mut block = DMatrix::zeros(side, side);
                        if k == l {
                            for i in 0..side {
                                for j in 0..side {
                                    block[(i, j)] = sk[i] * sk[j];
                                }
                            }
                        } else {
                            for i in 0..side {
                                for j in 0..side {
                                    block[(i, j)] = (sk[i] * sl[j] + sl[i] * sk[j]) / sqrt2;
                                }
                            }
                        }
                        let col = svec(&block);
                        for (ri, val) in col.iter().enumerate() {
                            h[(ri, col_idx)] = *val;
                        }
                    }
                }
                HBlock::Dense(h)
            }
        }
    }
}

/// Solves the Jordan equation lambda o u = w for u, with lambda the scaled
/// variable produced by [`Scaling::compute`] (interior, and diagonal in the
/// semidefinite case).
pub fn lambda_solve(spec: &ConeSpec, lambda: &[f64], w: &[f64]) -> Vec<f64> {
    match *spec {
        ConeSpec::NonNeg { .. } => lambda.iter().zip(w).map(|(l, wi)| wi / l).collect(),
        ConeSpec::Soc { dim } => {
            let l0 = lambda[0];
            let l1 = &lambda[1..];
            let det = l0 * l0 - sq_norm(l1);
            let lw = dot(l1, &w[1..]);
            let u0 = (l0 * w[0] - lw) / det;
            let mut out = vec![0.0; dim];
            out[0] = u0;
            for k in 1..dim {
                out[k] = (w[k] - u0 * lambda[k]) / l0;
            }
            out
        }
        ConeSpec::Psd { side } => {
            // lambda is svec of a positive diagonal matrix sigma; the equation
            // (Sigma U + U Sigma) / 2 = W solves entrywise.
            let mut sigma = vec![0.0; side];
            for i in 0..side {
                sigma[i] = lambda[svec_index(side, i, i)];
            }
            let mut out = vec![0.0; w.len()];
            for j in 0..side {
                for i in j..side {
                    let idx = svec_index(side, i, j);
                    out[idx] = 2.0 * w[idx] / (sigma[i] + sigma[j]);
                }
            }
            out
        }
    }
}

/// Packed index of entry (i, j), i >= j, in column-major lower-triangle order.
pub fn svec_index(side: usize, i: usize, j: usize) -> usize {
    debug_assert!(i >= j && i < side);
    j * (2 * side - j + 1) / 2 + (i - j)
}

/// Packs a symmetric matrix into svec form.
pub fn svec(m: &DMatrix<f64>) -> Vec<f64> {
    let side = m.nrows();
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut out = vec![0.0; side * (side + 1) / 2];
    for j in 0..side {
        for i in j..side {
            out[svec_index(side, i, j)] = if i == j { m[(i, j)] } else { m[(i, j)] * sqrt2 };
        }
    }
    out
}

/// Expands an svec-packed vector into the symmetric matrix it represents.
pub fn smat(v: &[f64], side: usize) -> DMatrix<f64> {
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = DMatrix::zeros(side, side);
    for j in 0..side {
        for i in j..side {
            let val = v[svec_index(side, i, j)];
            if i == j {
                m[(i, j)] = val;
            } else {
                m[(i, j)] = val * inv_sqrt2;
                m[(j, i)] = val * inv_sqrt2;
            }
        }
    }
    m
}

fn congruence(v: &[f64], r: &DMatrix<f64>) -> Vec<f64> {
    // svec(R^T V R)
    let side = r.nrows();
    let vm = smat(v, side);
    svec(&(r.transpose() * vm * r))
}

fn congruence_t(v: &[f64], r: &DMatrix<f64>) -> Vec<f64> {
    // svec(R V R^T)
    let side = r.nrows();
    let vm = smat(v, side);
    svec(&(r * vm * r.transpose()))
}

/// v -> s * (2 wbar (wbar . v)_J - J v) where (u . v)_J = u0 v0 - u1 . v1,
/// i.e. multiplication by the hyperbolic Householder matrix s(2 wbar wbar^T - J).
fn soc_reflect_mul(wbar: &[f64], s: f64, v: &[f64]) -> Vec<f64> {
    let dim = v.len();
    let mut inner = wbar[0] * v[0];
    for k in 1..dim {
        inner += wbar[k] * v[k];
    }
    let mut out = vec![0.0; dim];
    out[0] = s * (2.0 * wbar[0] * inner - v[0]);
    for k in 1..dim {
        out[k] = s * (2.0 * wbar[k] * inner + v[k]);
    }
    out
}

fn flip(u: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = u.iter().map(|v| -v).collect();
    out[0] = -out[0];
    out
}

fn soc_max_step(u: &[f64], du: &[f64]) -> f64 {
    // Largest t >= 0 with (u0 + t d0)^2 - ||u1 + t d1||^2 >= 0 and u0 + t d0 >= 0.
    let a = du[0] * du[0] - sq_norm(&du[1..]);
    let b = 2.0 * (u[0] * du[0] - dot(&u[1..], &du[1..]));
    let c = u[0] * u[0] - sq_norm(&u[1..]);
    let mut t = quadratic_exit(a, b, c);
    if du[0] < 0.0 {
        t = t.min(-u[0] / du[0]);
    }
    t
}

/// First positive root of a t^2 + b t + c with c > 0, or infinity if the
/// quadratic stays positive for all t >= 0.
fn quadratic_exit(a: f64, b: f64, c: f64) -> f64 {
    if a == 0.0 {
        return if b < 0.0 { -c / b } else { f64::INFINITY };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        // With a < 0 this can only happen through rounding at a tangency;
        // report a zero step and let the caller treat it as a stall.
        return if a > 0.0 { f64::INFINITY } else { 0.0 };
    }
    let sq = disc.sqrt();
    // Numerically stable pair of roots.
    let q = -0.5 * (b + b.signum() * sq);
    let (r1, r2) = if q == 0.0 {
        (0.0, 0.0)
    } else {
        let ra = q / a;
        let rb = c / q;
        (ra.min(rb), ra.max(rb))
    };
    if a > 0.0 {
        // Positive outside [r1, r2]; positive at 0 means 0 < r1 or r2 < 0.
        if r1 > 0.0 {
            r1
        } else {
            f64::INFINITY
        }
    } else {
        // Positive inside (r1, r2) and 0 lies inside.
        r2.max(0.0)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sq_norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

fn norm2(a: &[f64]) -> f64 {
    sq_norm(a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} != {b:?}");
        }
    }

    #[test]
    fn svec_round_trip_preserves_inner_products() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.5, 1.0, 3.0, -1.0, 0.5, -1.0, 4.0]);
        let n = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 2.0, 0.0, 5.0, 1.0, 2.0, 1.0, 1.0]);
        let sm = svec(&m);
        let sn = svec(&n);
        let packed: f64 = sm.iter().zip(&sn).map(|(a, b)| a * b).sum();
        let dense = (m.clone() * n).trace();
        assert!((packed - dense).abs() < 1e-12);
        let back = smat(&sm, 3);
        assert!((back - m).abs().max() < 1e-15);
    }

    #[test]
    fn nonneg_scaling_matches_definition() {
        let spec = ConeSpec::NonNeg { dim: 3 };
        let x = [1.0, 4.0, 0.25];
        let z = [4.0, 1.0, 1.0];
        let (w, lambda) = Scaling::compute(&spec, &x, &z).unwrap();
        assert_close(&w.apply_w_inv_t(&x), &lambda, 1e-14);
        assert_close(&w.apply_w(&z), &lambda, 1e-14);
        assert_close(&lambda, &[2.0, 2.0, 0.5], 1e-14);
    }

    #[test]
    fn soc_scaling_maps_both_points_to_lambda() {
        let spec = ConeSpec::Soc { dim: 4 };
        let x = [2.0, 0.3, -0.5, 1.0];
        let z = [1.5, -0.2, 0.4, 0.9];
        let (w, lambda) = Scaling::compute(&spec, &x, &z).unwrap();
        assert_close(&w.apply_w_inv_t(&x), &lambda, 1e-12);
        assert_close(&w.apply_w(&z), &lambda, 1e-12);
        // W^{-1} really inverts W.
        let v = [0.7, -0.1, 0.2, 0.05];
        assert_close(&w.apply_w_inv(&w.apply_w(&v)), &v, 1e-12);
        // Lambda lies in the cone interior.
        assert!(spec.interior_margin(&lambda) > 0.0);
    }

    #[test]
    fn psd_scaling_maps_both_points_to_lambda() {
        let spec = ConeSpec::Psd { side: 3 };
        let xm = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 5.0]);
        let zm = DMatrix::from_row_slice(3, 3, &[2.0, -0.5, 0.2, -0.5, 1.0, 0.0, 0.2, 0.0, 3.0]);
        let x = svec(&xm);
        let z = svec(&zm);
        let (w, lambda) = Scaling::compute(&spec, &x, &z).unwrap();
        assert_close(&w.apply_w_inv_t(&x), &lambda, 1e-10);
        assert_close(&w.apply_w(&z), &lambda, 1e-10);
        // Lambda is diagonal and positive.
        let lm = smat(&lambda, 3);
        for i in 0..3 {
            assert!(lm[(i, i)] > 0.0);
            for j in 0..3 {
                if i != j {
                    assert!(lm[(i, j)].abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn h_block_matches_double_inverse_scaling() {
        // For every cone type, H v must equal W^{-1} W^{-T} v.
        let cases: Vec<(ConeSpec, Vec<f64>, Vec<f64>)> = vec![
            (ConeSpec::NonNeg { dim: 2 }, vec![1.0, 2.0], vec![3.0, 0.5]),
            (
                ConeSpec::Soc { dim: 3 },
                vec![2.0, 0.5, -0.3],
                vec![1.0, 0.1, 0.6],
            ),
            (
                ConeSpec::Psd { side: 2 },
                svec(&DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0])),
                svec(&DMatrix::from_row_slice(2, 2, &[1.0, -0.2, -0.2, 2.0])),
            ),
        ];
        for (spec, x, z) in cases {
            let (w, _) = Scaling::compute(&spec, &x, &z).unwrap();
            let v: Vec<f64> = (0..spec.dim()).map(|i| 0.3 + 0.1 * i as f64).collect();
            let expected = w.apply_w_inv(&w.apply_w_inv_t(&v));
            let h = w.h_block(&spec);
            let got = apply_h_block(&h, &v);
            assert_close(&got, &expected, 1e-10);
        }
    }

    fn apply_h_block(h: &HBlock, v: &[f64]) -> Vec<f64> {
        match h {
            HBlock::Diag(d) => d.iter().zip(v).map(|(di, vi)| di * vi).collect(),
            HBlock::Dense(m) => {
                let mv = m * DVector::from_column_slice(v);
                mv.iter().copied().collect()
            }
            HBlock::SocLowRank { diag, u, v0 } => {
                let uv = dot(u, v);
                let mut out: Vec<f64> = v.iter().zip(u).map(|(vi, ui)| diag * vi + ui * uv).collect();
                out[0] -= v0 * v0 * v[0];
                out
            }
        }
    }

    #[test]
    fn soc_product_form_stays_accurate_near_the_boundary() {
        // A nearly complementary boundary pair: x on the cone boundary plus a
        // tiny interior shift, z likewise. The scaling point components grow
        // like 1/sqrt(mu); the product-form H must still reproduce
        // W^{-1}W^{-T} v to high relative accuracy.
        let spec = ConeSpec::Soc { dim: 4 };
        let mu = 1e-9;
        let x = [1.0 + mu, 0.6, -0.8, 0.0];
        let z = [2.0 + mu, -1.2, 1.6, 0.0];
        let (w, _) = Scaling::compute(&spec, &x, &z).unwrap();
        let v = [0.4, -0.25, 0.9, 0.3];
        let expected = w.apply_w_inv(&w.apply_w_inv_t(&v));
        let h = w.h_block(&spec);
        let got = apply_h_block(&h, &v);
        let scale = expected.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        for (g, e) in got.iter().zip(&expected) {
            assert!((g - e).abs() <= 1e-9 * scale, "{got:?} vs {expected:?}");
        }
    }

    #[test]
    fn lambda_solve_inverts_jordan_product() {
        let specs = [
            ConeSpec::NonNeg { dim: 3 },
            ConeSpec::Soc { dim: 4 },
            ConeSpec::Psd { side: 3 },
        ];
        for spec in specs {
            // An interior lambda: for PSD it must be diagonal, as produced by
            // the scaling computation.
            let lambda = match spec {
                ConeSpec::Psd { side } => {
                    let mut l = vec![0.0; spec.dim()];
                    for i in 0..side {
                        l[svec_index(side, i, i)] = 1.5 + i as f64;
                    }
                    l
                }
                _ => {
                    let mut l = spec.unit();
                    l[0] = 2.0;
                    l
                }
            };
            let w: Vec<f64> = (0..spec.dim()).map(|i| 0.2 * i as f64 - 0.3).collect();
            let u = lambda_solve(&spec, &lambda, &w);
            let back = spec.jordan_product(&lambda, &u);
            for (a, b) in back.iter().zip(&w) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn max_step_hits_boundary() {
        // Orthant
        let spec = ConeSpec::NonNeg { dim: 2 };
        assert!((spec.max_step(&[1.0, 2.0], &[-1.0, -0.5]) - 1.0).abs() < 1e-14);
        // SOC: from the axis toward the boundary
        let spec = ConeSpec::Soc { dim: 3 };
        let t = spec.max_step(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]);
        assert!((t - 1.0).abs() < 1e-12);
        // Direction into the interior: unbounded
        assert_eq!(spec.max_step(&[1.0, 0.0, 0.0], &[1.0, 0.5, 0.0]), f64::INFINITY);
        // PSD: identity stepping toward diag(-1, 1)
        let spec = ConeSpec::Psd { side: 2 };
        let x = spec.unit();
        let d = svec(&DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]));
        let t = spec.max_step(&x, &d);
        assert!((t - 1.0).abs() < 1e-10);
    }

    #[test]
    fn interior_margin_signs() {
        let spec = ConeSpec::Soc { dim: 3 };
        assert!(spec.interior_margin(&[2.0, 1.0, 0.0]) > 0.0);
        assert!(spec.interior_margin(&[0.5, 1.0, 0.0]) < 0.0);
        let spec = ConeSpec::Psd { side: 2 };
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(spec.interior_margin(&svec(&m)) < 0.0);
    }
}
