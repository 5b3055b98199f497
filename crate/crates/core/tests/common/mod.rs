#![allow(dead_code)]

use mpx_core::{CMatrix, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    })
}

/// Product of Gaussian factors: rank `k` with probability one.
pub fn planted_rank(rows: usize, cols: usize, k: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    if k == 0 {
        return CMatrix::zeros(rows, cols);
    }
    &gaussian(rows, k, rng) * &gaussian(k, cols, rng)
}

/// `||a - b|| / max(1, ||a||, ||b||)`.
pub fn dist(a: &CMatrix, b: &CMatrix) -> f64 {
    a.rel_distance(b).unwrap()
}

pub fn unitary_defect(q: &CMatrix) -> f64 {
    (&(&q.conj_transpose() * q) - &CMatrix::identity(q.cols())).frobenius_norm()
}

use mpx_core::{Flavor, InstanceSpec};
use proptest::prelude::*;

/// Specs with `m, n` in `[1, max_dim]`, any rank, and `sigma_cond` up to `max_cond`.
pub fn specs(flavor: Flavor, max_dim: usize, max_cond: f64) -> impl Strategy<Value = InstanceSpec> {
    (1..=max_dim, 1..=max_dim, any::<u64>(), 0.0..=max_cond.log10())
        .prop_flat_map(move |(m, n, seed, e)| {
            (0..=m.min(n)).prop_map(move |r| InstanceSpec::new(m, n, r, 10f64.powf(e), flavor, seed))
        })
}

/// Like [`specs`] but with `0 < r < min(m, n)`, so both blocks are present.
pub fn proper_specs(flavor: Flavor, max_dim: usize, max_cond: f64) -> impl Strategy<Value = InstanceSpec> {
    (2..=max_dim, 2..=max_dim, any::<u64>(), 0.0..=max_cond.log10()).prop_flat_map(move |(m, n, seed, e)| {
        (1..m.min(n)).prop_map(move |r| InstanceSpec::new(m, n, r, 10f64.powf(e), flavor, seed))
    })
}

/// Pseudo-inverse of `a` truncated at a rank known from construction.
///
/// Products such as `X N Y` carry rounding noise of order
/// `eps ||X|| ||N|| ||Y||`, which can sit above the default cutoff
/// `max(m, n) eps sigma_1` and inflate the numerical rank. The cut is placed
/// at the geometric mean of `sigma_r` and `sigma_{r+1}`.
pub fn oracle_at_rank(a: &mpx_core::CMatrix, r: usize) -> mpx_core::CMatrix {
    let f = mpx_core::svd(a, None).unwrap();
    if r == 0 {
        return mpx_core::CMatrix::zeros(a.cols(), a.rows());
    }
    let hi = f.sigma[r - 1];
    let lo = f.sigma.get(r).copied().unwrap_or(0.0);
    assert!(hi > 1e3 * lo, "rank {r} is not numerically determined: {:?}", f.sigma);
    let cut = if lo > 0.0 { (hi * lo).sqrt() } else { hi / 2.0 };
    mpx_core::pinv_oracle(a, Some(mpx_core::Tolerance::new(cut / f.sigma[0]))).unwrap()
}

/// `sigma_1 / sigma_r` at a known rank `r`.
pub fn condition_at_rank(a: &mpx_core::CMatrix, r: usize) -> f64 {
    let f = mpx_core::svd(a, None).unwrap();
    if r == 0 {
        1.0
    } else {
        f.sigma[0] / f.sigma[r - 1]
    }
}
