//! Orthogonal projectors of `N`, the correction factors `R`, `L` (and the
//! projector-fixing variants `R0`, `L0`), and block extraction of `X`, `Y`
//! in the singular bases of `N`.
//!
//! Everything here is stated relative to a caller-supplied [`SvdFactors`]:
//! when `N` has repeated singular values its singular bases are not unique,
//! so blocks are never re-derived from a fresh decomposition.

use crate::decomp::{inverse, SvdFactors};
use crate::error::{Error, Result};
use crate::matrix::{Blocks, CMatrix, Tolerance};

/// `E_N = I - N N†` and `F_N = I - N† N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorPair {
    pub e_n: CMatrix,
    pub f_n: CMatrix,
}

fn outer_projector(basis: &CMatrix) -> CMatrix {
    basis * &basis.conj_transpose()
}

/// `E_N = U diag(0_r, I) U*` and `F_N = V diag(0_r, I) V*`.
pub fn projectors(n_svd: &SvdFactors) -> ProjectorPair {
    let (m, n, r) = (n_svd.rows(), n_svd.cols(), n_svd.rank);
    ProjectorPair {
        e_n: outer_projector(&n_svd.u.column_range(r, m)),
        f_n: outer_projector(&n_svd.v.column_range(r, n)),
    }
}

/// `N N† = U_r U_r*`, the projector onto the range of `N`.
pub fn range_projector(n_svd: &SvdFactors) -> CMatrix {
    outer_projector(&n_svd.range_basis())
}

/// `N† N = V_r V_r*`, the projector onto the row space of `N`.
pub fn corange_projector(n_svd: &SvdFactors) -> CMatrix {
    outer_projector(&n_svd.corange_basis())
}

/// `(N N*)^k = U_r diag(sigma^(2k)) U_r*`.
pub fn left_gram_power(n_svd: &SvdFactors, k: u32) -> CMatrix {
    gram_power(&n_svd.range_basis(), &n_svd.sigma[..n_svd.rank], k)
}

/// `(N* N)^k = V_r diag(sigma^(2k)) V_r*`.
pub fn right_gram_power(n_svd: &SvdFactors, k: u32) -> CMatrix {
    gram_power(&n_svd.corange_basis(), &n_svd.sigma[..n_svd.rank], k)
}

fn gram_power(basis: &CMatrix, sigma: &[f64], k: u32) -> CMatrix {
    let scaled = CMatrix::from_fn(basis.rows(), basis.cols(), |i, j| {
        basis[(i, j)] * sigma[j].powi(2 * k as i32)
    });
    &scaled * &basis.conj_transpose()
}

pub(crate) fn check_square(a: &CMatrix, dim: usize, op: &'static str) -> Result<()> {
    if !a.is_square() {
        return Err(Error::NotSquare { op, shape: a.shape() });
    }
    if a.rows() != dim {
        return Err(Error::DimensionMismatch {
            op,
            left: a.shape(),
            right: (dim, dim),
        });
    }
    Ok(())
}

/// `R = X E_N X^{-1} (E_N - I)` given a precomputed `X^{-1}`.
pub(crate) fn factor_r_with(x: &CMatrix, x_inv: &CMatrix, e_n: &CMatrix) -> CMatrix {
    let e_minus_i = e_n - &CMatrix::identity(e_n.rows());
    &(&(x * e_n) * x_inv) * &e_minus_i
}

/// `L = (F_N - I) Y^{-1} F_N Y` given a precomputed `Y^{-1}`.
pub(crate) fn factor_l_with(y: &CMatrix, y_inv: &CMatrix, f_n: &CMatrix) -> CMatrix {
    let f_minus_i = f_n - &CMatrix::identity(f_n.rows());
    &(&(&f_minus_i * y_inv) * f_n) * y
}

/// `R0 = E_N (I - X^{-1})`.
pub(crate) fn factor_r0_with(x_inv: &CMatrix, e_n: &CMatrix) -> CMatrix {
    e_n * &(&CMatrix::identity(x_inv.rows()) - x_inv)
}

/// `L0 = (I - Y^{-1}) F_N`.
pub(crate) fn factor_l0_with(y_inv: &CMatrix, f_n: &CMatrix) -> CMatrix {
    &(&CMatrix::identity(y_inv.rows()) - y_inv) * f_n
}

pub fn factor_r(x: &CMatrix, n_svd: &SvdFactors) -> Result<CMatrix> {
    check_square(x, n_svd.rows(), "factor_r")?;
    let x_inv = inverse(x)?;
    Ok(factor_r_with(x, &x_inv, &projectors(n_svd).e_n))
}

pub fn factor_l(y: &CMatrix, n_svd: &SvdFactors) -> Result<CMatrix> {
    check_square(y, n_svd.cols(), "factor_l")?;
    let y_inv = inverse(y)?;
    Ok(factor_l_with(y, &y_inv, &projectors(n_svd).f_n))
}

pub fn factor_r0(x: &CMatrix, n_svd: &SvdFactors) -> Result<CMatrix> {
    check_square(x, n_svd.rows(), "factor_r0")?;
    Ok(factor_r0_with(&inverse(x)?, &projectors(n_svd).e_n))
}

pub fn factor_l0(y: &CMatrix, n_svd: &SvdFactors) -> Result<CMatrix> {
    check_square(y, n_svd.cols(), "factor_l0")?;
    Ok(factor_l0_with(&inverse(y)?, &projectors(n_svd).f_n))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    /// Left factor `X`, partitioned in the left singular basis `U`.
    X,
    /// Right factor `Y`, partitioned in the right singular basis `V`.
    Y,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::X => "X",
            Side::Y => "Y",
        }
    }
}

/// Block view of `U* X U` (or `V* Y V`) split at the rank of `N`.
///
/// For `X` the blocks are `[[X1, X3], [X2, X4]]` and the off-block is `X3`
/// (upper right). For `Y` they are `[[Y1, Y3], [*, Y4]]` and the off-block is
/// the lower-left position.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureReport {
    pub side: Side,
    pub blocks: Blocks,
    pub off_block_norm: f64,
    /// `max(1, ||X||_F)` for the source matrix.
    pub scale: f64,
    pub tol: Tolerance,
    pub satisfied: bool,
    pub(crate) fingerprint: u64,
}

impl StructureReport {
    pub fn off_block(&self) -> &CMatrix {
        match self.side {
            Side::X => &self.blocks.a12,
            Side::Y => &self.blocks.a21,
        }
    }

    /// `off_block_norm / scale`.
    pub fn relative_off_block(&self) -> f64 {
        self.off_block_norm / self.scale
    }

    /// Conjugates the blocks back: `U B U*` (or `V B V*`).
    pub fn reassemble(&self, n_svd: &SvdFactors) -> Result<CMatrix> {
        let q = match self.side {
            Side::X => &n_svd.u,
            Side::Y => &n_svd.v,
        };
        Ok(&(q * &self.blocks.assemble()?) * &q.conj_transpose())
    }
}

/// Identifies a `(matrix, factors)` pair so verdicts and reports computed
/// from different inputs can be told apart.
pub(crate) fn fingerprint(side: Side, a: &CMatrix, n_svd: &SvdFactors) -> u64 {
    use std::hash::{Hash, Hasher};
    let mut h = std::collections::hash_map::DefaultHasher::new();
    side.hash(&mut h);
    n_svd.rank.hash(&mut h);
    for z in a.as_slice().iter().chain(n_svd.u.as_slice()).chain(n_svd.v.as_slice()) {
        z.re.to_bits().hash(&mut h);
        z.im.to_bits().hash(&mut h);
    }
    h.finish()
}

fn structure_report(side: Side, a: &CMatrix, n_svd: &SvdFactors, tol: Tolerance) -> Result<StructureReport> {
    let (q, op) = match side {
        Side::X => (&n_svd.u, "structure_report_x"),
        Side::Y => (&n_svd.v, "structure_report_y"),
    };
    check_square(a, q.rows(), op)?;
    let r = n_svd.rank;
    let blocks = (&(&q.conj_transpose() * a) * q).block_split(r, r)?;
    let off_block_norm = match side {
        Side::X => blocks.a12.frobenius_norm(),
        Side::Y => blocks.a21.frobenius_norm(),
    };
    let scale = a.frobenius_norm().max(1.0);
    Ok(StructureReport {
        side,
        blocks,
        off_block_norm,
        scale,
        tol,
        satisfied: off_block_norm <= tol.value() * scale,
        fingerprint: fingerprint(side, a, n_svd),
    })
}

/// Blocks of `U* X U`; satisfied when the upper-right block vanishes.
pub fn structure_report_x(x: &CMatrix, n_svd: &SvdFactors, tol: Tolerance) -> Result<StructureReport> {
    structure_report(Side::X, x, n_svd, tol)
}

/// Blocks of `V* Y V`; satisfied when the lower-left block vanishes.
pub fn structure_report_y(y: &CMatrix, n_svd: &SvdFactors, tol: Tolerance) -> Result<StructureReport> {
    structure_report(Side::Y, y, n_svd, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::c64;

    fn diag_svd(m: usize, n: usize, sigma: &[f64]) -> SvdFactors {
        let mut s = sigma.to_vec();
        s.resize(m.min(n), 0.0);
        SvdFactors::from_parts(CMatrix::identity(m), s, CMatrix::identity(n), None).unwrap()
    }

    fn tol(v: f64) -> Tolerance {
        Tolerance::new(v)
    }

    #[test]
    fn projector_examples() {
        let full = diag_svd(3, 3, &[1.0, 1.0, 1.0]);
        let p = projectors(&full);
        assert_eq!(p.e_n, CMatrix::zeros(3, 3));
        assert_eq!(p.f_n, CMatrix::zeros(3, 3));

        let zero = diag_svd(2, 3, &[]);
        let p = projectors(&zero);
        assert_eq!(p.e_n, CMatrix::identity(2));
        assert_eq!(p.f_n, CMatrix::identity(3));

        let half = diag_svd(2, 2, &[1.0]);
        let p = projectors(&half);
        assert_eq!(p.e_n, CMatrix::from_real_diag(&[0.0, 1.0]));
        assert_eq!(p.f_n, p.e_n);
    }

    #[test]
    fn factor_r_examples() {
        let svd = diag_svd(2, 2, &[1.0]);
        assert_eq!(factor_r(&CMatrix::identity(2), &svd).unwrap(), CMatrix::zeros(2, 2));

        // block diagonal X commutes with E_N
        let x = CMatrix::from_rows(&[[c64(2.0, 1.0), c64(0.0, 0.0)], [c64(0.0, 0.0), c64(-1.0, 3.0)]]);
        assert!(factor_r(&x, &svd).unwrap().frobenius_norm() < 1e-15);

        // X E_N X^{-1} (E_N - I) by hand for X = [[2, 0], [1, 1]]:
        // X^{-1} = [[0.5, 0], [-0.5, 1]], X E_N X^{-1} = [[0, 0], [-0.5, 1]],
        // times diag(-1, 0) gives [[0, 0], [0.5, 0]] = U [[0, 0], [X2 X1^{-1}, 0]] U*.
        let x = CMatrix::from_real_rows(&[[2.0, 0.0], [1.0, 1.0]]);
        let r = factor_r(&x, &svd).unwrap();
        let expected = CMatrix::from_real_rows(&[[0.0, 0.0], [0.5, 0.0]]);
        assert!(r.approx_eq(&expected, tol(1e-15)).unwrap());
    }

    #[test]
    fn factor_l_examples() {
        let svd = diag_svd(2, 3, &[2.0]);
        assert_eq!(factor_l(&CMatrix::identity(3), &svd).unwrap(), CMatrix::zeros(3, 3));

        // block diagonal in the V basis
        let y = CMatrix::from_real_rows(&[[3.0, 0.0, 0.0], [0.0, 1.0, 2.0], [0.0, -1.0, 1.0]]);
        assert!(factor_l(&y, &svd).unwrap().frobenius_norm() < 1e-15);

        // L(Y, N) is the conjugate transpose of R(Y*, N*).
        let y = CMatrix::from_rows(&[
            [c64(1.0, 0.5), c64(0.3, 0.0), c64(0.0, -0.2)],
            [c64(0.0, 0.0), c64(2.0, 0.0), c64(0.1, 0.1)],
            [c64(0.0, 0.0), c64(-0.4, 1.0), c64(1.5, 0.0)],
        ]);
        let l = factor_l(&y, &svd).unwrap();
        let r_hat = factor_r(&y.conj_transpose(), &svd.adjoint()).unwrap();
        assert!(l.approx_eq(&r_hat.conj_transpose(), tol(1e-12)).unwrap());
    }

    #[test]
    fn baseline_factor_examples() {
        let svd = diag_svd(2, 2, &[1.0]);
        assert_eq!(factor_r0(&CMatrix::identity(2), &svd).unwrap(), CMatrix::zeros(2, 2));
        assert_eq!(factor_l0(&CMatrix::identity(2), &svd).unwrap(), CMatrix::zeros(2, 2));
        let two = CMatrix::identity(2).scale(c64(2.0, 0.0));
        assert_eq!(factor_r0(&two, &svd).unwrap(), CMatrix::from_real_diag(&[0.0, 0.5]));
        assert_eq!(factor_l0(&two, &svd).unwrap(), CMatrix::from_real_diag(&[0.0, 0.5]));
    }

    #[test]
    fn factors_reject_singular_and_misshaped() {
        let svd = diag_svd(2, 2, &[1.0]);
        let singular = CMatrix::from_real_rows(&[[1.0, 1.0], [1.0, 1.0]]);
        assert!(matches!(factor_r(&singular, &svd), Err(Error::Singular { .. })));
        assert!(matches!(factor_l0(&singular, &svd), Err(Error::Singular { .. })));
        assert!(matches!(
            factor_r(&CMatrix::identity(3), &svd),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn report_identity_and_degenerate_rank() {
        let svd = diag_svd(3, 2, &[2.0, 1.0]);
        let rep = structure_report_x(&CMatrix::identity(3), &svd, tol(1e-10)).unwrap();
        assert!(rep.satisfied);
        assert_eq!(rep.blocks.a11, CMatrix::identity(2));
        assert_eq!(rep.blocks.a22, CMatrix::identity(1));
        assert_eq!(rep.off_block_norm, 0.0);

        let zero = diag_svd(3, 2, &[]);
        let x = CMatrix::from_fn(3, 3, |i, j| c64((i + 2 * j) as f64, 1.0));
        let rep = structure_report_x(&x, &zero, tol(1e-10)).unwrap();
        assert!(rep.satisfied);
        assert_eq!(rep.blocks.a22, x);
        assert!(rep.blocks.a11.is_empty() && rep.blocks.a12.is_empty() && rep.blocks.a21.is_empty());

        let rep = structure_report_y(&CMatrix::identity(2), &zero, tol(1e-10)).unwrap();
        assert!(rep.satisfied);
    }

    #[test]
    fn report_detects_planted_off_block() {
        let svd = diag_svd(2, 2, &[1.0]);
        let x = CMatrix::from_real_rows(&[[1.0, 0.25], [0.0, 1.0]]);
        let rep = structure_report_x(&x, &svd, tol(1e-10)).unwrap();
        assert!(!rep.satisfied);
        assert!((rep.off_block_norm - 0.25).abs() < 1e-15);
        assert!(structure_report_y(&x, &svd, tol(1e-10)).unwrap().satisfied);
        assert!(!structure_report_y(&x.conj_transpose(), &svd, tol(1e-10)).unwrap().satisfied);
        assert!(rep.reassemble(&svd).unwrap().approx_eq(&x, tol(1e-15)).unwrap());
    }
}
