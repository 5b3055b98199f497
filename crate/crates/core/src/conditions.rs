//! Sufficient conditions for the block-triangular structure of `X` (C1-C7)
//! and of `Y` (C1'-C7') relative to the singular bases of `N`.
//!
//! Existential conditions quantify over unbounded powers; the checker
//! searches `k = 1..=k_max` (and `l = 1..=k_max` for C3/C3') and reports the
//! smallest witness. The scalar `c` is recovered by a least-squares fit
//! `<T, P> / ||T||^2` and then residual-checked, with `|c| > tol` standing in
//! for `c != 0`.

use std::fmt;
use std::str::FromStr;

use crate::decomp::SvdFactors;
use crate::error::{Error, Result};
use crate::matrix::{CMatrix, Tolerance, C64};
use crate::structure::{
    check_square, corange_projector, fingerprint, left_gram_power, projectors, range_projector,
    right_gram_power, Side, StructureReport,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConditionId {
    C1,
    C2,
    C3,
    C4,
    C5,
    C6,
    C7,
    C1p,
    C2p,
    C3p,
    C4p,
    C5p,
    C6p,
    C7p,
}

impl ConditionId {
    pub const X_SIDE: [ConditionId; 7] = [Self::C1, Self::C2, Self::C3, Self::C4, Self::C5, Self::C6, Self::C7];
    pub const Y_SIDE: [ConditionId; 7] = [
        Self::C1p,
        Self::C2p,
        Self::C3p,
        Self::C4p,
        Self::C5p,
        Self::C6p,
        Self::C7p,
    ];

    pub fn all() -> impl Iterator<Item = ConditionId> {
        Self::X_SIDE.into_iter().chain(Self::Y_SIDE)
    }

    pub fn for_side(side: Side) -> [ConditionId; 7] {
        match side {
            Side::X => Self::X_SIDE,
            Side::Y => Self::Y_SIDE,
        }
    }

    pub fn side(self) -> Side {
        if Self::X_SIDE.contains(&self) {
            Side::X
        } else {
            Side::Y
        }
    }

    /// 1..=7 within its side.
    pub fn index(self) -> usize {
        let list = Self::for_side(self.side());
        list.iter().position(|&c| c == self).unwrap() + 1
    }

    /// True for the conditions that quantify over a power `k`.
    pub fn is_existential(self) -> bool {
        matches!(self.index(), 2 | 3 | 5 | 7)
    }
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.side() {
            Side::X => write!(f, "C{}", self.index()),
            Side::Y => write!(f, "C{}'", self.index()),
        }
    }
}

impl FromStr for ConditionId {
    type Err = Error;

    /// Accepts `C3`, `c3`, `C3'` and `C3p`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let bad = || Error::InvalidArgument(format!("unknown condition `{s}`"));
        let body = t.strip_prefix(['C', 'c']).ok_or_else(bad)?;
        let (digits, primed) = match body.strip_suffix(['\'', 'p', 'P']) {
            Some(d) => (d, true),
            None => (body, false),
        };
        let idx: usize = digits.parse().map_err(|_| bad())?;
        if !(1..=7).contains(&idx) {
            return Err(bad());
        }
        let side = if primed { Side::Y } else { Side::X };
        Ok(Self::for_side(side)[idx - 1])
    }
}

/// Search bounds for the existential conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionSearch {
    pub k_max: u32,
    pub tol: Tolerance,
}

impl Default for ConditionSearch {
    fn default() -> Self {
        Self {
            k_max: 8,
            tol: Tolerance::new(1e-10),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Witness {
    pub k: u32,
    /// Power of the Gram matrix, C3/C3' only.
    pub l: Option<u32>,
    /// Fitted scalar, C2/C3/C5 and primes only.
    pub c: Option<C64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionVerdict {
    pub id: ConditionId,
    pub holds: bool,
    pub witness: Option<Witness>,
    /// Relative residual of the defining equation: the accepted witness's
    /// when `holds`, otherwise the smallest one seen.
    pub residual: f64,
    pub(crate) fingerprint: u64,
}

struct Fit {
    residual: f64,
    c: C64,
}

/// Best scalar `c` with `p ~ c t` and the relative misfit.
fn fit_scalar(p: &CMatrix, t: &CMatrix) -> Fit {
    let tn = t.frobenius_norm();
    if tn == 0.0 {
        // p = c * 0 only when p itself vanishes; any c != 0 works then.
        return Fit {
            residual: p.frobenius_norm(),
            c: C64::new(1.0, 0.0),
        };
    }
    let c = t.inner(p).expect("same shape") / (tn * tn);
    let misfit = (p - &t.scale(c)).frobenius_norm();
    let scale = p.frobenius_norm().max(c.norm() * tn);
    let residual = if scale == 0.0 { 0.0 } else { misfit / scale };
    Fit { residual, c }
}

struct Search {
    tol: f64,
    best: f64,
}

impl Search {
    fn new(tol: Tolerance) -> Self {
        Self {
            tol: tol.value(),
            best: f64::INFINITY,
        }
    }

    fn fit_accepts(&mut self, fit: &Fit) -> bool {
        self.best = self.best.min(fit.residual);
        fit.residual <= self.tol && fit.c.norm() > self.tol
    }
}

/// Evaluates one condition on `a` (`X` for C1-C7, `Y` for C1'-C7').
pub fn check_condition(
    id: ConditionId,
    a: &CMatrix,
    n_svd: &SvdFactors,
    search: &ConditionSearch,
) -> Result<ConditionVerdict> {
    if search.k_max < 1 {
        return Err(Error::InvalidArgument("k_max must be at least 1".into()));
    }
    let side = id.side();
    let dim = match side {
        Side::X => n_svd.rows(),
        Side::Y => n_svd.cols(),
    };
    check_square(a, dim, "check_condition")?;

    let tol = search.tol;
    let k_max = search.k_max;
    let scale = a.frobenius_norm().max(1.0);
    let proj = projectors(n_svd);
    let r = n_svd.rank;
    // sigma_r, used to normalize (N N*)^k so that a small product certifies a
    // small off-block rather than a small sigma_r^(2k).
    let sigma_min = if r == 0 { 1.0 } else { n_svd.sigma[r - 1] };

    let normal = |m: CMatrix| -> Result<(bool, f64)> {
        let n2 = m.frobenius_norm().powi(2).max(1.0);
        let res = m.normality_defect()? / n2;
        Ok((res <= tol.value(), res))
    };

    let mut verdict = ConditionVerdict {
        id,
        holds: false,
        witness: None,
        residual: f64::INFINITY,
        fingerprint: fingerprint(side, a, n_svd),
    };

    match id.index() {
        1 => {
            let m = match side {
                Side::X => &left_gram_power(n_svd, 1) * a,
                Side::Y => a * &right_gram_power(n_svd, 1),
            };
            let (holds, res) = normal(m)?;
            verdict.holds = holds;
            verdict.residual = res;
        }
        4 => {
            let m = match side {
                Side::X => a * &proj.e_n,
                Side::Y => &proj.f_n * a,
            };
            let (holds, res) = normal(m)?;
            verdict.holds = holds;
            verdict.residual = res;
        }
        2 | 5 => {
            let (base, target) = match (side, id.index()) {
                (Side::X, 2) => (&left_gram_power(n_svd, 1) * a, range_projector(n_svd)),
                (Side::Y, 2) => (a * &right_gram_power(n_svd, 1), corange_projector(n_svd)),
                (Side::X, _) => (a * &proj.e_n, proj.e_n.clone()),
                (Side::Y, _) => (&proj.f_n * a, proj.f_n.clone()),
            };
            let mut s = Search::new(tol);
            let mut power = base.clone();
            for k in 1..=k_max {
                if k > 1 {
                    power = &power * &base;
                }
                let fit = fit_scalar(&power, &target);
                if s.fit_accepts(&fit) {
                    verdict.holds = true;
                    verdict.residual = fit.residual;
                    verdict.witness = Some(Witness { k, l: None, c: Some(fit.c) });
                    break;
                }
            }
            if !verdict.holds {
                verdict.residual = s.best;
            }
        }
        3 => {
            let base = match side {
                Side::X => &left_gram_power(n_svd, 1) * a,
                Side::Y => a * &right_gram_power(n_svd, 1),
            };
            let targets: Vec<CMatrix> = (1..=k_max)
                .map(|l| match side {
                    Side::X => left_gram_power(n_svd, l),
                    Side::Y => right_gram_power(n_svd, l),
                })
                .collect();
            let mut s = Search::new(tol);
            let mut power = base.clone();
            'outer: for k in 1..=k_max {
                if k > 1 {
                    power = &power * &base;
                }
                for (l, target) in (1..=k_max).zip(&targets) {
                    let fit = fit_scalar(&power, target);
                    if s.fit_accepts(&fit) {
                        verdict.holds = true;
                        verdict.residual = fit.residual;
                        verdict.witness = Some(Witness { k, l: Some(l), c: Some(fit.c) });
                        break 'outer;
                    }
                }
            }
            if !verdict.holds {
                verdict.residual = s.best;
            }
        }
        6 => {
            let m = match side {
                Side::X => &(&range_projector(n_svd) * a) * &proj.e_n,
                Side::Y => &(&proj.f_n * a) * &corange_projector(n_svd),
            };
            verdict.residual = m.frobenius_norm() / scale;
            verdict.holds = verdict.residual <= tol.value();
        }
        7 => {
            let mut best = f64::INFINITY;
            for k in 1..=k_max {
                let m = match side {
                    Side::X => &(&left_gram_power(n_svd, k) * a) * &proj.e_n,
                    Side::Y => &(&proj.f_n * a) * &right_gram_power(n_svd, k),
                };
                let res = m.frobenius_norm() / (scale * sigma_min.powi(2 * k as i32));
                best = best.min(res);
                if res <= tol.value() {
                    verdict.holds = true;
                    verdict.residual = res;
                    verdict.witness = Some(Witness { k, l: None, c: None });
                    break;
                }
            }
            if !verdict.holds {
                verdict.residual = best;
            }
        }
        _ => unreachable!("condition index is 1..=7"),
    }
    Ok(verdict)
}

/// `verdict.holds => report.satisfied`, the empirical content of the
/// structure lemmas. Both must come from the same `(matrix, factors)` pair.
pub fn implies_structure(verdict: &ConditionVerdict, report: &StructureReport) -> Result<bool> {
    if verdict.id.side() != report.side {
        return Err(Error::ProvenanceMismatch(format!(
            "condition {} concerns side {}, report is for side {}",
            verdict.id,
            verdict.id.side().name(),
            report.side.name()
        )));
    }
    if verdict.fingerprint != report.fingerprint {
        return Err(Error::ProvenanceMismatch(format!(
            "condition {} and the structure report were computed from different inputs",
            verdict.id
        )));
    }
    Ok(!verdict.holds || report.satisfied)
}
