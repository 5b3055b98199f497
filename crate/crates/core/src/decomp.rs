//! Complex SVD by one-sided Jacobi, the SVD-based pseudo-inverse that all
//! closed-form results are checked against, dense inverses and HPD solves,
//! and the Penrose-equation residuals.

use crate::error::{Error, Result};
use crate::matrix::{CMatrix, Tolerance, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Full singular value decomposition `A = U diag(sigma) V*` with square
/// unitary `U` (m x m) and `V` (n x n).
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    pub u: CMatrix,
    /// Nonincreasing, length `min(m, n)`.
    pub sigma: Vec<f64>,
    pub v: CMatrix,
    /// Number of singular values strictly above `rank_tol`.
    pub rank: usize,
    pub rank_tol: f64,
}

impl SvdFactors {
    /// Assembles factors from known parts. `rank_tol_override` is relative to
    /// `sigma[0]`; the default cutoff is `max(m, n) * eps * sigma_max`.
    pub fn from_parts(
        u: CMatrix,
        sigma: Vec<f64>,
        v: CMatrix,
        rank_tol_override: Option<Tolerance>,
    ) -> Result<Self> {
        if !u.is_square() {
            return Err(Error::NotSquare { op: "svd factor U", shape: u.shape() });
        }
        if !v.is_square() {
            return Err(Error::NotSquare { op: "svd factor V", shape: v.shape() });
        }
        let (m, n) = (u.rows(), v.rows());
        if sigma.len() != m.min(n) {
            return Err(Error::InvalidArgument(format!(
                "expected {} singular values for a {m}x{n} matrix, got {}",
                m.min(n),
                sigma.len()
            )));
        }
        if sigma.iter().any(|s| !s.is_finite() || *s < 0.0) || sigma.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument(
                "singular values must be finite, nonnegative and nonincreasing".into(),
            ));
        }
        let rank_tol = rank_cutoff(m, n, &sigma, rank_tol_override);
        let rank = sigma.iter().take_while(|&&s| s > rank_tol).count();
        Ok(Self { u, sigma, v, rank, rank_tol })
    }

    /// Rows of the decomposed matrix.
    pub fn rows(&self) -> usize {
        self.u.rows()
    }

    /// Columns of the decomposed matrix.
    pub fn cols(&self) -> usize {
        self.v.rows()
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma.first().copied().unwrap_or(0.0)
    }

    /// `sigma_1 / sigma_r` over the numerical rank; `1` for rank zero.
    pub fn condition(&self) -> f64 {
        if self.rank == 0 {
            1.0
        } else {
            self.sigma[0] / self.sigma[self.rank - 1]
        }
    }

    /// Leading `rank` columns of `U`, an orthonormal basis of the range.
    pub fn range_basis(&self) -> CMatrix {
        self.u.column_range(0, self.rank)
    }

    /// Leading `rank` columns of `V`, an orthonormal basis of the row space.
    pub fn corange_basis(&self) -> CMatrix {
        self.v.column_range(0, self.rank)
    }

    /// `U diag(sigma) V*`.
    pub fn reconstruct(&self) -> CMatrix {
        let m = self.rows();
        let k = self.sigma.len();
        let us = CMatrix::from_fn(m, k, |i, j| self.u[(i, j)] * self.sigma[j]);
        &us * &self.v.column_range(0, k).conj_transpose()
    }

    /// `V_r diag(1/sigma_i) U_r*`, the pseudo-inverse on the numerical rank.
    /// Singular values below the cutoff are treated as exact zeros.
    pub fn pinv(&self) -> CMatrix {
        let r = self.rank;
        let vs = CMatrix::from_fn(self.cols(), r, |i, j| self.v[(i, j)] / self.sigma[j]);
        &vs * &self.range_basis().conj_transpose()
    }

    /// Factors of the conjugate transpose: `A* = V diag(sigma) U*`.
    pub fn adjoint(&self) -> SvdFactors {
        SvdFactors {
            u: self.v.clone(),
            sigma: self.sigma.clone(),
            v: self.u.clone(),
            rank: self.rank,
            rank_tol: self.rank_tol,
        }
    }
}

fn rank_cutoff(m: usize, n: usize, sigma: &[f64], rel_override: Option<Tolerance>) -> f64 {
    let smax = sigma.first().copied().unwrap_or(0.0);
    match rel_override {
        Some(t) => t.value() * smax,
        None => m.max(n) as f64 * f64::EPSILON * smax,
    }
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    let scale = a.iter().map(|z| z.re.abs().max(z.im.abs())).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let ssq: f64 = a.iter().map(|z| (z / scale).norm_sqr()).sum();
    scale * ssq.sqrt()
}

/// Rotates columns `p` and `q` of both `w` and `v` so that the new
/// `w[p]` and `w[q]` are orthogonal. Returns false when the pair was already
/// orthogonal to within `tol`.
fn rotate_pair(w: &mut [Vec<C64>], v: &mut [Vec<C64>], p: usize, q: usize, tol: f64) -> bool {
    let alpha = w[p].iter().map(|z| z.norm_sqr()).sum::<f64>();
    let beta = w[q].iter().map(|z| z.norm_sqr()).sum::<f64>();
    let gamma = dot(&w[p], &w[q]);
    let g = gamma.norm();
    if alpha == 0.0 || beta == 0.0 || g <= tol * alpha.sqrt() * beta.sqrt() {
        return false;
    }
    // D = diag(1, e^{-i phi}) makes the 2x2 Gram matrix real; then a real
    // symmetric Jacobi rotation diagonalizes it.
    let phase = gamma / g;
    let zeta = (beta - alpha) / (2.0 * g);
    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = c * t;
    let ph = phase.conj();
    for cols in [w, v] {
        let (lo, hi) = cols.split_at_mut(q);
        let (cp, cq) = (&mut lo[p], &mut hi[0]);
        for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
            let yp = ph * *y;
            let nx = *x * c - yp * s;
            let ny = *x * s + yp * c;
            *x = nx;
            *y = ny;
        }
    }
    true
}

/// Extends orthonormal columns `basis` (each of length `dim`) to a full
/// orthonormal basis of C^dim.
fn complete_basis(basis: &mut Vec<Vec<C64>>, dim: usize) {
    let mut candidate = 0;
    while basis.len() < dim {
        // Pick the standard basis vector with the smallest projection onto
        // the current span, then orthogonalize twice.
        let mut best = (usize::MAX, f64::INFINITY);
        for k in 0..dim {
            let proj: f64 = basis.iter().map(|b| b[k].norm_sqr()).sum();
            if proj < best.1 {
                best = (k, proj);
            }
        }
        let k = if best.0 == usize::MAX { candidate % dim } else { best.0 };
        candidate += 1;
        let mut e = vec![ZERO; dim];
        e[k] = C64::new(1.0, 0.0);
        for _ in 0..2 {
            for b in basis.iter() {
                let h = dot(b, &e);
                for (ei, bi) in e.iter_mut().zip(b) {
                    *ei -= h * bi;
                }
            }
        }
        let nrm = norm(&e);
        for z in e.iter_mut() {
            *z /= nrm;
        }
        basis.push(e);
    }
}

fn columns_to_matrix(cols: &[Vec<C64>], rows: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols.len(), |i, j| cols[j][i])
}

/// SVD of a matrix with `rows >= cols` via one-sided Jacobi on its columns.
fn jacobi_tall(a: &CMatrix, rank_tol_override: Option<Tolerance>) -> Result<SvdFactors> {
    let (m, n) = a.shape();
    let mut w: Vec<Vec<C64>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<C64>> = (0..n)
        .map(|j| {
            let mut e = vec![ZERO; n];
            e[j] = C64::new(1.0, 0.0);
            e
        })
        .collect();

    let tol = (m.max(1) as f64).sqrt() * f64::EPSILON;
    let budget = (30 * n).max(30);
    let mut converged = n < 2;
    let mut sweeps = 0;
    while !converged {
        if sweeps == budget {
            return Err(Error::NoConvergence { sweeps });
        }
        sweeps += 1;
        converged = true;
        for p in 0..n - 1 {
            for q in p + 1..n {
                if rotate_pair(&mut w, &mut v, p, q, tol) {
                    converged = false;
                }
            }
        }
    }

    let norms: Vec<f64> = w.iter().map(|c| norm(c)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let v_sorted: Vec<Vec<C64>> = order.iter().map(|&j| v[j].clone()).collect();

    let mut u_cols: Vec<Vec<C64>> = Vec::with_capacity(m);
    for &j in &order {
        let s = norms[j];
        // Columns that vanished (or underflowed) carry no direction.
        if s <= f64::MIN_POSITIVE * 1e16 {
            break;
        }
        u_cols.push(w[j].iter().map(|z| z / s).collect());
    }
    complete_basis(&mut u_cols, m);

    SvdFactors::from_parts(
        columns_to_matrix(&u_cols, m),
        sigma,
        columns_to_matrix(&v_sorted, n),
        rank_tol_override,
    )
}

/// Full SVD. The rank cutoff is `max(m, n) * eps * sigma_max` unless
/// `rank_tol_override` (relative to `sigma_max`) is given.
pub fn svd(a: &CMatrix, rank_tol_override: Option<Tolerance>) -> Result<SvdFactors> {
    if !a.is_finite() {
        return Err(Error::InvalidArgument("svd input has non-finite entries".into()));
    }
    if a.rows() >= a.cols() {
        jacobi_tall(a, rank_tol_override)
    } else {
        Ok(jacobi_tall(&a.conj_transpose(), rank_tol_override)?.adjoint())
    }
}

/// Moore-Penrose inverse through the SVD. This is the reference every
/// closed-form expression is compared with.
pub fn pinv_oracle(a: &CMatrix, rank_tol_override: Option<Tolerance>) -> Result<CMatrix> {
    Ok(svd(a, rank_tol_override)?.pinv())
}

/// Relative residuals of the four Penrose equations for a candidate `z`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PenroseResiduals {
    /// `||AZA - A|| / max(1, ||A||)`
    pub r_a: f64,
    /// `||ZAZ - Z|| / max(1, ||Z||)`
    pub r_b: f64,
    /// `||AZ - (AZ)*|| / max(1, ||AZ||)`
    pub r_c: f64,
    /// `||ZA - (ZA)*|| / max(1, ||ZA||)`
    pub r_d: f64,
}

impl PenroseResiduals {
    pub fn max(&self) -> f64 {
        self.r_a.max(self.r_b).max(self.r_c).max(self.r_d)
    }

    pub fn all_within(&self, tol: f64) -> bool {
        self.max() <= tol
    }
}

pub fn penrose_residuals(a: &CMatrix, z: &CMatrix) -> Result<PenroseResiduals> {
    if z.shape() != (a.cols(), a.rows()) {
        return Err(Error::DimensionMismatch {
            op: "penrose_residuals",
            left: a.shape(),
            right: z.shape(),
        });
    }
    let rel = |num: f64, den: f64| num / den.max(1.0);
    let az = a * z;
    let za = z * a;
    let aza = &az * a;
    let zaz = &za * z;
    Ok(PenroseResiduals {
        r_a: rel((&aza - a).frobenius_norm(), a.frobenius_norm()),
        r_b: rel((&zaz - z).frobenius_norm(), z.frobenius_norm()),
        r_c: rel(az.hermitian_defect()?, az.frobenius_norm()),
        r_d: rel(za.hermitian_defect()?, za.frobenius_norm()),
    })
}

/// LU factorization with partial pivoting, stored in place.
struct Lu {
    lu: CMatrix,
    perm: Vec<usize>,
}

fn lu_factor(a: &CMatrix) -> Result<Lu> {
    if !a.is_square() {
        return Err(Error::NotSquare { op: "inverse", shape: a.shape() });
    }
    let n = a.rows();
    let threshold = n as f64 * f64::EPSILON * a.frobenius_norm();
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (piv, mag) = (k..n)
            .map(|i| (i, lu[(i, k)].norm()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .expect("nonempty pivot column");
        if mag <= threshold || mag == 0.0 {
            return Err(Error::Singular { pivot: mag, threshold });
        }
        if piv != k {
            perm.swap(piv, k);
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(piv, j)];
                lu[(piv, j)] = tmp;
            }
        }
        let d = lu[(k, k)];
        for i in k + 1..n {
            let l = lu[(i, k)] / d;
            lu[(i, k)] = l;
            if l != ZERO {
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= l * u;
                }
            }
        }
    }
    Ok(Lu { lu, perm })
}

impl Lu {
    fn solve(&self, b: &CMatrix) -> CMatrix {
        let n = self.lu.rows();
        let cols = b.cols();
        let mut x = CMatrix::from_fn(n, cols, |i, j| b[(self.perm[i], j)]);
        for c in 0..cols {
            for i in 0..n {
                let mut s = x[(i, c)];
                for k in 0..i {
                    s -= self.lu[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = s;
            }
            for i in (0..n).rev() {
                let mut s = x[(i, c)];
                for k in i + 1..n {
                    s -= self.lu[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = s / self.lu[(i, i)];
            }
        }
        x
    }
}

/// Inverse by partial-pivoting elimination. Fails with [`Error::Singular`]
/// when a pivot drops to `n * eps * ||a||_F` or below.
pub fn inverse(a: &CMatrix) -> Result<CMatrix> {
    let lu = lu_factor(a)?;
    Ok(lu.solve(&CMatrix::identity(a.rows())))
}

/// Solves `a x = b` for Hermitian positive definite `a` by Cholesky
/// factorization `a = L L*`.
pub fn solve_hpd(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if !a.is_square() {
        return Err(Error::NotSquare { op: "solve_hpd", shape: a.shape() });
    }
    let n = a.rows();
    if b.rows() != n {
        return Err(Error::DimensionMismatch {
            op: "solve_hpd",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::NotHpd { index: j, value: d });
        }
        let ljj = d.sqrt();
        l[(j, j)] = C64::new(ljj, 0.0);
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / ljj;
        }
    }
    let mut x = b.clone();
    for c in 0..b.cols() {
        for i in 0..n {
            let mut s = x[(i, c)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = x[(i, c)];
            for k in i + 1..n {
                s -= l[(k, i)].conj() * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::c64;

    fn unitary_defect(q: &CMatrix) -> f64 {
        (&(&q.conj_transpose() * q) - &CMatrix::identity(q.cols())).frobenius_norm()
    }

    fn check_factors(a: &CMatrix, f: &SvdFactors) {
        let (m, n) = a.shape();
        assert!(unitary_defect(&f.u) <= 1e-12 * m.max(1) as f64, "U not unitary");
        assert!(unitary_defect(&f.v) <= 1e-12 * n.max(1) as f64, "V not unitary");
        assert!(f.sigma.windows(2).all(|w| w[0] >= w[1]));
        let err = (&f.reconstruct() - a).frobenius_norm();
        assert!(err <= 1e-12 * a.frobenius_norm().max(1.0), "reconstruction error {err:e}");
        for (i, s) in f.sigma.iter().enumerate() {
            assert_eq!(i < f.rank, *s > f.rank_tol);
        }
    }

    #[test]
    fn svd_of_diagonal() {
        let a = CMatrix::from_real_diag(&[3.0, 2.0, 0.0]);
        let f = svd(&a, None).unwrap();
        check_factors(&a, &f);
        assert_eq!(f.rank, 2);
        for (s, e) in f.sigma.iter().zip([3.0, 2.0, 0.0]) {
            assert!((s - e).abs() < 1e-15);
        }
    }

    #[test]
    fn svd_of_zero() {
        let a = CMatrix::zeros(2, 3);
        let f = svd(&a, None).unwrap();
        check_factors(&a, &f);
        assert_eq!(f.sigma, vec![0.0, 0.0]);
        assert_eq!(f.rank, 0);
    }

    #[test]
    fn svd_of_antidiagonal() {
        // A*A = diag(1, 4) so the singular values are 2 and 1.
        let a = CMatrix::from_real_rows(&[[0.0, 2.0], [1.0, 0.0]]);
        let f = svd(&a, None).unwrap();
        check_factors(&a, &f);
        assert_eq!(f.rank, 2);
        assert!((f.sigma[0] - 2.0).abs() < 1e-15);
        assert!((f.sigma[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn svd_wide_complex() {
        let a = CMatrix::from_rows(&[
            [c64(1.0, 2.0), c64(0.0, -1.0), c64(3.0, 0.5)],
            [c64(-2.0, 0.0), c64(1.0, 1.0), c64(0.0, 0.0)],
        ]);
        let f = svd(&a, None).unwrap();
        check_factors(&a, &f);
        assert_eq!(f.rank, 2);
    }

    #[test]
    fn svd_rank_override_is_relative() {
        let a = CMatrix::from_real_diag(&[1.0, 1e-6]);
        assert_eq!(svd(&a, None).unwrap().rank, 2);
        let f = svd(&a, Some(Tolerance::new(1e-3))).unwrap();
        assert_eq!(f.rank, 1);
        assert!((f.rank_tol - 1e-3).abs() < 1e-18);
    }

    #[test]
    fn pinv_examples() {
        let i3 = CMatrix::identity(3);
        assert!(pinv_oracle(&i3, None).unwrap().approx_eq(&i3, Tolerance::new(1e-15)).unwrap());

        let d = CMatrix::from_real_diag(&[2.0, 0.0]);
        let expected = CMatrix::from_real_diag(&[0.5, 0.0]);
        assert!(pinv_oracle(&d, None).unwrap().approx_eq(&expected, Tolerance::new(1e-15)).unwrap());

        // For a = [1; 1]: z = [p, q] with a z a = a forces p + q = 1, and
        // (za)* = za holds trivially while (az)* = az forces p = q.
        let col = CMatrix::from_real_rows(&[[1.0], [1.0]]);
        let expected = CMatrix::from_real_rows(&[[0.5, 0.5]]);
        assert!(pinv_oracle(&col, None).unwrap().approx_eq(&expected, Tolerance::new(1e-15)).unwrap());
    }

    #[test]
    fn residual_examples() {
        let i = CMatrix::identity(3);
        assert_eq!(penrose_residuals(&i, &i).unwrap(), PenroseResiduals::default());

        // unit-norm A against the zero candidate
        let a = CMatrix::from_rows(&[[c64(0.6, 0.0), c64(0.0, 0.8)]]);
        let r = penrose_residuals(&a, &CMatrix::zeros(2, 1)).unwrap();
        assert!((r.r_a - 1.0).abs() < 1e-15);
        assert_eq!((r.r_b, r.r_c, r.r_d), (0.0, 0.0, 0.0));

        assert!(penrose_residuals(&a, &CMatrix::zeros(1, 2)).is_err());
    }

    #[test]
    fn inverse_examples() {
        let i = CMatrix::identity(4);
        assert_eq!(inverse(&i).unwrap(), i);
        let d = CMatrix::from_real_diag(&[2.0, 4.0]);
        assert_eq!(inverse(&d).unwrap(), CMatrix::from_real_diag(&[0.5, 0.25]));
        let t = CMatrix::from_real_rows(&[[1.0, 1.0], [0.0, 1.0]]);
        assert_eq!(inverse(&t).unwrap(), CMatrix::from_real_rows(&[[1.0, -1.0], [0.0, 1.0]]));
    }

    #[test]
    fn inverse_rejects_singular_and_rectangular() {
        let s = CMatrix::from_real_rows(&[[1.0, 2.0], [2.0, 4.0]]);
        assert!(matches!(inverse(&s), Err(Error::Singular { .. })));
        assert!(matches!(inverse(&CMatrix::zeros(2, 3)), Err(Error::NotSquare { .. })));
        assert_eq!(inverse(&CMatrix::zeros(0, 0)).unwrap().shape(), (0, 0));
    }

    #[test]
    fn solve_hpd_examples() {
        let b = CMatrix::from_rows(&[[c64(1.0, -1.0), c64(2.0, 0.0)], [c64(0.0, 3.0), c64(-1.0, 0.5)]]);
        assert_eq!(solve_hpd(&CMatrix::identity(2), &b).unwrap(), b);

        let two = CMatrix::identity(3).scale(c64(2.0, 0.0));
        let x = solve_hpd(&two, &CMatrix::identity(3)).unwrap();
        assert!(x.approx_eq(&CMatrix::identity(3).scale(c64(0.5, 0.0)), Tolerance::new(1e-15)).unwrap());

        // R from the 2x2 worked instance: R = [[0, 0], [0.5, 0]].
        let r = CMatrix::from_real_rows(&[[0.0, 0.0], [0.5, 0.0]]);
        let a = (&r.conj_transpose() * &r).plus_identity();
        let rhs = r.conj_transpose().plus_identity();
        let x = solve_hpd(&a, &rhs).unwrap();
        let reference = &inverse(&a).unwrap() * &rhs;
        assert!(x.approx_eq(&reference, Tolerance::new(1e-12)).unwrap());
    }

    #[test]
    fn solve_hpd_rejects_indefinite() {
        let a = CMatrix::from_real_rows(&[[1.0, 2.0], [2.0, 1.0]]);
        assert!(matches!(
            solve_hpd(&a, &CMatrix::identity(2)),
            Err(Error::NotHpd { index: 1, .. })
        ));
    }
}
