//! Closed-form Moore-Penrose inverses.
//!
//! * [`pinv_block`]: 2x2 block matrices `[[A, C], [B, D]]` whose off-diagonal
//!   blocks live in the row/column spaces of `A` and whose Schur complement
//!   `D - B A† C` vanishes.
//! * [`pinv_xn`], [`pinv_ny`]: one-sided products `XN`, `NY` with
//!   nonsingular `X`, `Y` in block-triangular form relative to `N`.
//! * [`pinv_xny`]: the two-sided product `XNY` under both structures, using
//!   the correction factors `R = X E_N X^{-1} (E_N - I)` and
//!   `L = (F_N - I) Y^{-1} F_N Y`.
//! * [`pinv_xny_hermitian`]: the shorter form valid when `X E_N` and
//!   `F_N Y` are Hermitian.
//! * [`pinv_xny_baseline`]: the earlier form that needs `X E_N = E_N` and
//!   `F_N Y = F_N`.
//!
//! None of these decompose the product `M`; the only SVD used is the one of
//! `N` (or `A`) supplied by the caller. `M` is formed only to report the
//! Penrose residuals of the result.

use std::fmt;
use std::str::FromStr;

use crate::decomp::{inverse, penrose_residuals, pinv_oracle, solve_hpd, svd, PenroseResiduals, SvdFactors};
use crate::error::{Error, Result};
use crate::matrix::{Blocks, CMatrix, Tolerance};
use crate::structure::{
    check_square, factor_l0_with, factor_l_with, factor_r0_with, factor_r_with, projectors, structure_report_x,
    structure_report_y,
};

/// Which expression produced a candidate pseudo-inverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// SVD of the assembled matrix.
    Oracle,
    /// 2x2 block formula.
    Block,
    /// `(XN)†`.
    LeftProduct,
    /// `(NY)†`.
    RightProduct,
    /// `(XNY)†` under both block-triangular structures.
    TwoSided,
    /// `(XNY)†` when `X E_N` and `F_N Y` are Hermitian.
    TwoSidedHermitian,
    /// `(XNY)†` when `X E_N = E_N` and `F_N Y = F_N`.
    ProjectorFixing,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Oracle,
        Method::Block,
        Method::LeftProduct,
        Method::RightProduct,
        Method::TwoSided,
        Method::TwoSidedHermitian,
        Method::ProjectorFixing,
    ];

    /// Stable short name used on the command line and in reports.
    pub fn tag(self) -> &'static str {
        match self {
            Method::Oracle => "oracle",
            Method::Block => "lemma21",
            Method::LeftProduct => "thm31-xn",
            Method::RightProduct => "thm31-ny",
            Method::TwoSided => "thm33",
            Method::TwoSidedHermitian => "cor34",
            Method::ProjectorFixing => "cgms11",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.tag() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method `{s}`")))
    }
}

/// What to do when a hypothesis check fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Return [`Error::HypothesisViolation`].
    #[default]
    Strict,
    /// Record the failure and evaluate the formula anyway.
    Permissive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinvOptions {
    pub tol: Tolerance,
    pub mode: Mode,
}

impl Default for PinvOptions {
    fn default() -> Self {
        Self {
            tol: Tolerance::new(1e-10),
            mode: Mode::Strict,
        }
    }
}

impl PinvOptions {
    pub fn permissive() -> Self {
        Self {
            mode: Mode::Permissive,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisCheck {
    pub name: String,
    pub passed: bool,
    /// Relative residual; passes when at most the configured tolerance.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PinvResult {
    pub z: CMatrix,
    pub method: Method,
    /// Recomputed from the source matrix and `z`.
    pub residuals: PenroseResiduals,
    pub hypothesis_checks: Vec<HypothesisCheck>,
}

impl PinvResult {
    pub fn hypotheses_hold(&self) -> bool {
        self.hypothesis_checks.iter().all(|c| c.passed)
    }
}

struct Checks {
    opts: PinvOptions,
    list: Vec<HypothesisCheck>,
}

impl Checks {
    fn new(opts: &PinvOptions) -> Self {
        Self { opts: *opts, list: Vec::new() }
    }

    fn record(&mut self, name: &str, residual: f64) -> Result<()> {
        let threshold = self.opts.tol.value();
        let passed = residual <= threshold;
        self.list.push(HypothesisCheck {
            name: name.to_string(),
            passed,
            residual,
        });
        if !passed && self.opts.mode == Mode::Strict {
            return Err(Error::HypothesisViolation {
                check: name.to_string(),
                residual,
                threshold,
            });
        }
        Ok(())
    }

    fn finish(self, method: Method, source: &CMatrix, z: CMatrix) -> Result<PinvResult> {
        let residuals = penrose_residuals(source, &z)?;
        Ok(PinvResult {
            z,
            method,
            residuals,
            hypothesis_checks: self.list,
        })
    }
}

fn rel(num: f64, scale: f64) -> f64 {
    num / scale.max(1.0)
}

/// Shared pieces derived from the factors of `N`.
struct Frame {
    /// `U_r`, `V_r`
    ur: CMatrix,
    vr: CMatrix,
    n_pinv: CMatrix,
    e_n: CMatrix,
    f_n: CMatrix,
}

impl Frame {
    fn new(n: &CMatrix, n_svd: &SvdFactors, checks: &mut Checks) -> Result<Self> {
        if n.shape() != (n_svd.rows(), n_svd.cols()) {
            return Err(Error::DimensionMismatch {
                op: "factors of N",
                left: n.shape(),
                right: (n_svd.rows(), n_svd.cols()),
            });
        }
        let mismatch = (&n_svd.reconstruct() - n).frobenius_norm();
        checks.record("svd_matches_n", rel(mismatch, n.frobenius_norm()))?;
        let p = projectors(n_svd);
        Ok(Self {
            ur: n_svd.range_basis(),
            vr: n_svd.corange_basis(),
            n_pinv: n_svd.pinv(),
            e_n: p.e_n,
            f_n: p.f_n,
        })
    }

    /// `N N† B = U_r (U_r* B)`.
    fn range_proj(&self, b: &CMatrix) -> CMatrix {
        &self.ur * &(&self.ur.conj_transpose() * b)
    }

    /// `N† N B = V_r (V_r* B)`.
    fn corange_proj(&self, b: &CMatrix) -> CMatrix {
        &self.vr * &(&self.vr.conj_transpose() * b)
    }
}

/// `(I + R* R)^{-1} (I + R*)`.
fn right_correction(r: &CMatrix) -> Result<CMatrix> {
    let rh = r.conj_transpose();
    solve_hpd(&(&rh * r).plus_identity(), &rh.plus_identity())
}

/// `(I + L*) (I + L L*)^{-1} = [(I + L L*)^{-1} (I + L)]*`.
fn left_correction(l: &CMatrix) -> Result<CMatrix> {
    let lh = l.conj_transpose();
    Ok(solve_hpd(&(l * &lh).plus_identity(), &l.plus_identity())?.conj_transpose())
}

fn assumption_x(x: &CMatrix, n_svd: &SvdFactors, opts: &PinvOptions, checks: &mut Checks) -> Result<()> {
    let rep = structure_report_x(x, n_svd, opts.tol)?;
    checks.record("A1 (X block lower triangular)", rep.relative_off_block())
}

fn assumption_y(y: &CMatrix, n_svd: &SvdFactors, opts: &PinvOptions, checks: &mut Checks) -> Result<()> {
    let rep = structure_report_y(y, n_svd, opts.tol)?;
    checks.record("A2 (Y block upper triangular)", rep.relative_off_block())
}

/// Pseudo-inverse of `[[A, C], [B, D]]` from `A†` alone.
///
/// Requires `R(B*) ⊆ R(A*)`, `R(C) ⊆ R(A)` and `D = B A† C`; these are checked
/// as `||B (I - A†A)||`, `||(I - AA†) C||` and `||D - B A† C||`, each relative
/// to `max(1, ||.||)` of the block involved.
pub fn pinv_block(a: &CMatrix, b: &CMatrix, c: &CMatrix, d: &CMatrix, opts: &PinvOptions) -> Result<PinvResult> {
    let m = Blocks {
        a11: a.clone(),
        a12: c.clone(),
        a21: b.clone(),
        a22: d.clone(),
    }
    .assemble()?;
    let mut checks = Checks::new(opts);

    let a_pinv = svd(a, None)?.pinv();
    let ba = b * &a_pinv; // t x p
    let ac = &a_pinv * c; // q x s

    let b_leak = b - &(&ba * a);
    checks.record("R(B*) in R(A*)", rel(b_leak.frobenius_norm(), b.frobenius_norm()))?;
    let c_leak = c - &(a * &ac);
    checks.record("R(C) in R(A)", rel(c_leak.frobenius_norm(), c.frobenius_norm()))?;
    let schur = d - &(&ba * c);
    checks.record("D = B A† C", rel(schur.frobenius_norm(), d.frobenius_norm()))?;

    // Psi A† Phi with Psi = (I + K K*)^{-1}, Phi = (I + H* H)^{-1},
    // K = A†C, H = B A†. Phi is Hermitian so core Phi = (Phi core*)*.
    let psi_a = solve_hpd(&(&ac * &ac.conj_transpose()).plus_identity(), &a_pinv)?;
    let core = solve_hpd(&(&ba.conj_transpose() * &ba).plus_identity(), &psi_a.conj_transpose())?.conj_transpose();

    let kh = ac.conj_transpose();
    let hh = ba.conj_transpose();
    let lower = &kh * &core;
    let z = Blocks {
        a12: &core * &hh,
        a22: &lower * &hh,
        a11: core,
        a21: lower,
    }
    .assemble()?;
    checks.finish(Method::Block, &m, z)
}

/// `(XN)† = N† X^{-1} N N† (I + R* R)^{-1} (I + R*)`.
pub fn pinv_xn(x: &CMatrix, n: &CMatrix, n_svd: &SvdFactors, opts: &PinvOptions) -> Result<PinvResult> {
    check_square(x, n.rows(), "pinv_xn")?;
    let mut checks = Checks::new(opts);
    let frame = Frame::new(n, n_svd, &mut checks)?;
    let x_inv = inverse(x)?;
    assumption_x(x, n_svd, opts, &mut checks)?;

    let r = factor_r_with(x, &x_inv, &frame.e_n);
    let right = right_correction(&r)?;
    let z = &frame.n_pinv * &(&x_inv * &frame.range_proj(&right));
    checks.finish(Method::LeftProduct, &(x * n), z)
}

/// `(NY)† = (I + L*) (I + L L*)^{-1} N† N Y^{-1} N†`.
pub fn pinv_ny(n: &CMatrix, y: &CMatrix, n_svd: &SvdFactors, opts: &PinvOptions) -> Result<PinvResult> {
    check_square(y, n.cols(), "pinv_ny")?;
    let mut checks = Checks::new(opts);
    let frame = Frame::new(n, n_svd, &mut checks)?;
    let y_inv = inverse(y)?;
    assumption_y(y, n_svd, opts, &mut checks)?;

    let l = factor_l_with(y, &y_inv, &frame.f_n);
    let left = left_correction(&l)?;
    let z = &left * &frame.corange_proj(&(&y_inv * &frame.n_pinv));
    checks.finish(Method::RightProduct, &(n * y), z)
}

/// Orthogonal projector onto the range of `XN`:
/// `(I + R) N N† (I + R* R)^{-1} (I + R*)`.
pub fn proj_range_m1(x: &CMatrix, n: &CMatrix, n_svd: &SvdFactors, opts: &PinvOptions) -> Result<CMatrix> {
    check_square(x, n.rows(), "proj_range_m1")?;
    let mut checks = Checks::new(opts);
    let frame = Frame::new(n, n_svd, &mut checks)?;
    let x_inv = inverse(x)?;
    assumption_x(x, n_svd, opts, &mut checks)?;

    let r = factor_r_with(x, &x_inv, &frame.e_n);
    let right = right_correction(&r)?;
    Ok(&r.plus_identity() * &frame.range_proj(&right))
}

/// Orthogonal projector onto the row space of `NY`:
/// `(I + L*) (I + L L*)^{-1} N† N (I + L)`.
pub fn proj_rowspace_m2(n: &CMatrix, y: &CMatrix, n_svd: &SvdFactors, opts: &PinvOptions) -> Result<CMatrix> {
    check_square(y, n.cols(), "proj_rowspace_m2")?;
    let mut checks = Checks::new(opts);
    let frame = Frame::new(n, n_svd, &mut checks)?;
    let y_inv = inverse(y)?;
    assumption_y(y, n_svd, opts, &mut checks)?;

    let l = factor_l_with(y, &y_inv, &frame.f_n);
    let left = left_correction(&l)?;
    Ok(&left * &frame.corange_proj(&l.plus_identity()))
}

fn check_two_sided(x: &CMatrix, n: &CMatrix, y: &CMatrix, op: &'static str) -> Result<()> {
    check_square(x, n.rows(), op)?;
    check_square(y, n.cols(), op)
}

/// `(XNY)† = (I + L*)(I + L L*)^{-1} N†N (Y^{-1} N† X^{-1}) N N† (I + R* R)^{-1} (I + R*)`.
pub fn pinv_xny(
    x: &CMatrix,
    n: &CMatrix,
    y: &CMatrix,
    n_svd: &SvdFactors,
    opts: &PinvOptions,
) -> Result<PinvResult> {
    check_two_sided(x, n, y, "pinv_xny")?;
    let mut checks = Checks::new(opts);
    let frame = Frame::new(n, n_svd, &mut checks)?;
    let x_inv = inverse(x)?;
    let y_inv = inverse(y)?;
    assumption_x(x, n_svd, opts, &mut checks)?;
    assumption_y(y, n_svd, opts, &mut checks)?;

    let r = factor_r_with(x, &x_inv, &frame.e_n);
    let l = factor_l_with(y, &y_inv, &frame.f_n);
    let right = right_correction(&r)?;
    let left = left_correction(&l)?;

    let t = &x_inv * &frame.range_proj(&right);
    let t = &y_inv * &(&frame.n_pinv * &t);
    let z = &left * &frame.corange_proj(&t);
    checks.finish(Method::TwoSided, &(&(x * n) * y), z)
}

/// `(XNY)† = (I + L*)(I + L L*)^{-1} Y^{-1} N† X^{-1} (I + R* R)^{-1} (I + R*)`
/// when `X E_N` and `F_N Y` are Hermitian.
pub fn pinv_xny_hermitian(
    x: &CMatrix,
    n: &CMatrix,
    y: &CMatrix,
    n_svd: &SvdFactors,
    opts: &PinvOptions,
) -> Result<PinvResult> {
    check_two_sided(x, n, y, "pinv_xny_hermitian")?;
    let mut checks = Checks::new(opts);
    let frame = Frame::new(n, n_svd, &mut checks)?;
    let x_inv = inverse(x)?;
    let y_inv = inverse(y)?;
    let xe = x * &frame.e_n;
    checks.record("X E_N Hermitian", rel(xe.hermitian_defect()?, x.frobenius_norm()))?;
    let fy = &frame.f_n * y;
    checks.record("F_N Y Hermitian", rel(fy.hermitian_defect()?, y.frobenius_norm()))?;

    let r = factor_r_with(x, &x_inv, &frame.e_n);
    let l = factor_l_with(y, &y_inv, &frame.f_n);
    let right = right_correction(&r)?;
    let left = left_correction(&l)?;
    let z = &left * &(&y_inv * &(&frame.n_pinv * &(&x_inv * &right)));
    checks.finish(Method::TwoSidedHermitian, &(&(x * n) * y), z)
}

/// `(XNY)† = (I + L0*)(I + L0 L0*)^{-1} Y^{-1} N† X^{-1} (I + R0* R0)^{-1} (I + R0*)`
/// with `R0 = E_N (I - X^{-1})`, `L0 = (I - Y^{-1}) F_N`, valid when
/// `X E_N = E_N` and `F_N Y = F_N`.
pub fn pinv_xny_baseline(
    x: &CMatrix,
    n: &CMatrix,
    y: &CMatrix,
    n_svd: &SvdFactors,
    opts: &PinvOptions,
) -> Result<PinvResult> {
    check_two_sided(x, n, y, "pinv_xny_baseline")?;
    let mut checks = Checks::new(opts);
    let frame = Frame::new(n, n_svd, &mut checks)?;
    let x_inv = inverse(x)?;
    let y_inv = inverse(y)?;
    let xe = &(x * &frame.e_n) - &frame.e_n;
    checks.record("X E_N = E_N", rel(xe.frobenius_norm(), x.frobenius_norm()))?;
    let fy = &(&frame.f_n * y) - &frame.f_n;
    checks.record("F_N Y = F_N", rel(fy.frobenius_norm(), y.frobenius_norm()))?;

    let r0 = factor_r0_with(&x_inv, &frame.e_n);
    let l0 = factor_l0_with(&y_inv, &frame.f_n);
    let right = right_correction(&r0)?;
    let left = left_correction(&l0)?;
    let z = &left * &(&y_inv * &(&frame.n_pinv * &(&x_inv * &right)));
    checks.finish(Method::ProjectorFixing, &(&(x * n) * y), z)
}

/// SVD pseudo-inverse of the assembled product `XNY`, wrapped like the
/// closed forms so callers can treat every method alike.
pub fn pinv_xny_oracle(x: &CMatrix, n: &CMatrix, y: &CMatrix) -> Result<PinvResult> {
    check_two_sided(x, n, y, "pinv_xny_oracle")?;
    let m = &(x * n) * y;
    let z = pinv_oracle(&m, None)?;
    Checks::new(&PinvOptions::permissive()).finish(Method::Oracle, &m, z)
}

/// True when `w` is an inner inverse of `m`: `||m w m - m|| <= tol max(1, ||m||)`.
pub fn inner_inverse_check(m: &CMatrix, w: &CMatrix, tol: Tolerance) -> Result<bool> {
    let mw = m.matmul(w)?;
    let mwm = mw.matmul(m)?;
    Ok((&mwm - m).frobenius_norm() <= tol.value() * m.frobenius_norm().max(1.0))
}
