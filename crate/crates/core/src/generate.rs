//! Seeded test instances: `N` with known singular factors, and `X`, `Y`
//! built blockwise in those factors' bases to satisfy (or violate) a chosen
//! hypothesis.
//!
//! The random source is `ChaCha8Rng::seed_from_u64(seed)` and draws happen
//! in a fixed order (U, V, spectrum, then X and Y blocks), so an identical
//! [`InstanceSpec`] yields a bit-identical [`Instance`]. Complex Gaussian
//! entries are `(a + ib) / sqrt(2)` with `a`, `b` standard normal.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::conditions::ConditionId;
use crate::decomp::{svd, SvdFactors};
use crate::error::{Error, Result};
use crate::matrix::{Blocks, CMatrix, C64};
use crate::structure::Side;

/// Instances are rejected (and redrawn) when `X` or `Y` exceeds this
/// condition number.
pub const MAX_FACTOR_CONDITION: f64 = 1e4;

const MAX_ATTEMPTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Flavor {
    /// `X` block lower triangular and `Y` block upper triangular.
    A1A2,
    /// `X E_N` and `F_N Y` Hermitian.
    HermitianFix,
    /// `X E_N = E_N` and `F_N Y = F_N`.
    ProjectorFix,
    /// The named structural condition holds for `X` (C1-C7) or `Y`
    /// (C1'-C7'); the other factor is generic block triangular.
    Condition(ConditionId),
    /// `X` carries an off-block with at least a tenth of its norm.
    ViolateA1,
    /// `Y` carries an off-block with at least a tenth of its norm.
    ViolateA2,
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Flavor::A1A2 => f.write_str("a1a2"),
            Flavor::HermitianFix => f.write_str("hermitian_fix"),
            Flavor::ProjectorFix => f.write_str("projector_fix"),
            Flavor::Condition(id) => write!(f, "condition:{id}"),
            Flavor::ViolateA1 => f.write_str("violate_a1"),
            Flavor::ViolateA2 => f.write_str("violate_a2"),
        }
    }
}

impl FromStr for Flavor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "a1a2" => Flavor::A1A2,
            "hermitian_fix" => Flavor::HermitianFix,
            "projector_fix" => Flavor::ProjectorFix,
            "violate_a1" => Flavor::ViolateA1,
            "violate_a2" => Flavor::ViolateA2,
            other => match other.strip_prefix("condition:").or_else(|| other.strip_prefix("condition=")) {
                Some(id) => Flavor::Condition(id.parse()?),
                None => return Err(Error::InvalidArgument(format!("unknown flavor `{s}`"))),
            },
        })
    }
}

impl Serialize for Flavor {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Flavor {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    /// Target `sigma_1 / sigma_r` of `N`.
    pub sigma_cond: f64,
    pub flavor: Flavor,
    pub seed: u64,
}

impl InstanceSpec {
    pub fn new(m: usize, n: usize, r: usize, sigma_cond: f64, flavor: Flavor, seed: u64) -> Self {
        Self { m, n, r, sigma_cond, flavor, seed }
    }

    fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(Error::Infeasible("dimensions must be positive".into()));
        }
        if self.r > self.m.min(self.n) {
            return Err(Error::Infeasible(format!(
                "rank {} exceeds min({}, {})",
                self.r, self.m, self.n
            )));
        }
        if !(self.sigma_cond.is_finite() && self.sigma_cond >= 1.0) {
            return Err(Error::Infeasible(format!(
                "sigma_cond must be finite and >= 1, got {}",
                self.sigma_cond
            )));
        }
        Ok(())
    }
}

/// Non-fatal notes about a generated instance.
#[derive(Debug, Clone, PartialEq)]
pub enum GenWarning {
    /// The rank makes the targeted partition degenerate (one block side is
    /// empty), so the structure holds for every matrix of that side.
    Vacuous { side: Side },
}

impl fmt::Display for GenWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GenWarning::Vacuous { side } => {
                write!(f, "rank makes the {} partition degenerate; its structure is vacuous", side.name())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub n_matrix: CMatrix,
    /// Factors `N` was built from (not recomputed).
    pub n_svd_true: SvdFactors,
    pub x: CMatrix,
    pub y: CMatrix,
    pub spec: InstanceSpec,
    /// Frobenius norm of the planted off-block for the violate flavors.
    pub planted_off_block_norm: Option<f64>,
    pub warnings: Vec<GenWarning>,
}

impl Instance {
    /// The product `X N Y`.
    pub fn product(&self) -> CMatrix {
        &(&self.x * &self.n_matrix) * &self.y
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

fn log_uniform(lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> f64 {
    let t: f64 = rng.random();
    (lo.ln() + t * (hi.ln() - lo.ln())).exp()
}

fn unit_phase(rng: &mut ChaCha8Rng) -> C64 {
    let theta: f64 = rng.random::<f64>() * 2.0 * PI;
    C64::from_polar(1.0, theta)
}

/// Haar-distributed unitary from Gram-Schmidt (applied twice) on a complex
/// Gaussian matrix. Gram-Schmidt leaves the diagonal of the triangular
/// factor real positive, which is exactly the phase normalization that
/// makes the orthonormal factor Haar distributed.
fn haar(dim: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let g = gaussian_matrix(dim, dim, rng);
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(dim);
    for j in 0..dim {
        let mut v = g.column(j);
        for _ in 0..2 {
            for q in &cols {
                let h: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= h * qi;
                }
            }
        }
        let nrm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in v.iter_mut() {
            *z /= nrm;
        }
        cols.push(v);
    }
    CMatrix::from_fn(dim, dim, |i, j| cols[j][i])
}

/// Seeded Haar unitary of order `dim`.
pub fn haar_unitary(dim: usize, seed: u64) -> CMatrix {
    haar(dim, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn diag(values: &[C64]) -> CMatrix {
    CMatrix::from_diag(values.len(), values.len(), values)
}

fn similar(q: &CMatrix, d: &CMatrix) -> CMatrix {
    &(q * d) * &q.conj_transpose()
}

/// `Q1 diag(s) Q2*` with singular values log-uniform in `[0.1, 10]`.
fn well_conditioned(dim: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let q1 = haar(dim, rng);
    let q2 = haar(dim, rng);
    let s: Vec<C64> = (0..dim).map(|_| C64::new(log_uniform(0.1, 10.0, rng), 0.0)).collect();
    &(&q1 * &diag(&s)) * &q2.conj_transpose()
}

/// Normal matrix `Q diag(lambda) Q*` with `|lambda|` in `[0.5, 2]`.
fn normal_nonsingular(dim: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let q = haar(dim, rng);
    let lambda: Vec<C64> = (0..dim)
        .map(|_| unit_phase(rng) * log_uniform(0.5, 2.0, rng))
        .collect();
    similar(&q, &diag(&lambda))
}

/// Hermitian nonsingular `Q diag(+-s) Q*` with `s` in `[0.1, 10]`.
fn hermitian_nonsingular(dim: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let q = haar(dim, rng);
    let lambda: Vec<C64> = (0..dim)
        .map(|_| {
            let s = log_uniform(0.1, 10.0, rng);
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            C64::new(sign * s, 0.0)
        })
        .collect();
    similar(&q, &diag(&lambda))
}

/// `k`-th roots of `rho e^{i theta k}` scattered over the eigenvalues of a
/// unitarily diagonalizable matrix, so that its `k`-th power is a scalar.
fn scalar_root(dim: usize, k: u32, rng: &mut ChaCha8Rng) -> CMatrix {
    let q = haar(dim, rng);
    let base = unit_phase(rng) * log_uniform(0.5, 2.0, rng);
    let lambda: Vec<C64> = (0..dim)
        .map(|_| {
            let j = rng.random_range(0..k);
            base * C64::from_polar(1.0, 2.0 * PI * j as f64 / k as f64)
        })
        .collect();
    similar(&q, &diag(&lambda))
}

/// Left-multiplies by `Sigma^{-2}`.
fn inv_gram_times(sigma: &[f64], a: &CMatrix) -> CMatrix {
    CMatrix::from_fn(a.rows(), a.cols(), |i, j| a[(i, j)] / (sigma[i] * sigma[i]))
}

#[derive(Debug, Clone, Copy)]
enum Recipe {
    Generic,
    Violate,
    Hermitian,
    ProjectorFix,
    Condition(usize),
}

/// Blocks `[[B1, B3], [B2, B4]]` of size `dim` split at `sigma.len()`, with
/// `B3 = 0` unless the recipe violates the structure. Returns the planted
/// off-block norm for [`Recipe::Violate`].
fn lower_blocks(recipe: Recipe, sigma: &[f64], dim: usize, rng: &mut ChaCha8Rng) -> (Blocks, Option<f64>) {
    let r = sigma.len();
    let k = dim - r;
    let b1 = match recipe {
        Recipe::Condition(1) => inv_gram_times(sigma, &normal_nonsingular(r, rng)),
        Recipe::Condition(2) => {
            let power = rng.random_range(1..=3);
            inv_gram_times(sigma, &scalar_root(r, power, rng))
        }
        Recipe::Condition(3) => {
            // Sigma^2 B1 = c^(1/k) Sigma^(2l/k) diag(roots of unity)
            let power = rng.random_range(1..=2u32);
            let l = rng.random_range(1..=3u32);
            let base = unit_phase(rng) * log_uniform(0.5, 2.0, rng);
            let d: Vec<C64> = sigma
                .iter()
                .map(|&s| {
                    let j = rng.random_range(0..power);
                    let root = C64::from_polar(1.0, 2.0 * PI * j as f64 / power as f64);
                    base * root * s.powf(2.0 * l as f64 / power as f64 - 2.0)
                })
                .collect();
            diag(&d)
        }
        _ => well_conditioned(r, rng),
    };
    let b2 = gaussian_matrix(k, r, rng).scale(C64::new(1.0 / (dim.max(1) as f64).sqrt(), 0.0));
    let b4 = match recipe {
        Recipe::Hermitian => hermitian_nonsingular(k, rng),
        Recipe::ProjectorFix => CMatrix::identity(k),
        Recipe::Condition(4) => normal_nonsingular(k, rng),
        Recipe::Condition(5) => {
            let power = rng.random_range(1..=3);
            scalar_root(k, power, rng)
        }
        _ => well_conditioned(k, rng),
    };
    let mut planted = None;
    let b3 = match recipe {
        Recipe::Violate => {
            let g = gaussian_matrix(r, k, rng);
            let rest = (b1.frobenius_norm().powi(2) + b2.frobenius_norm().powi(2) + b4.frobenius_norm().powi(2)).sqrt();
            let g = g.scale(C64::new(rest / g.frobenius_norm(), 0.0));
            planted = Some(g.frobenius_norm());
            g
        }
        _ => CMatrix::zeros(r, k),
    };
    (
        Blocks {
            a11: b1,
            a12: b3,
            a21: b2,
            a22: b4,
        },
        planted,
    )
}

fn factor_condition(a: &CMatrix) -> Result<f64> {
    let f = svd(a, None)?;
    let smin = f.sigma.last().copied().unwrap_or(1.0);
    Ok(if smin == 0.0 { f64::INFINITY } else { f.sigma_max() / smin })
}

fn recipes(flavor: Flavor) -> (Recipe, Recipe) {
    match flavor {
        Flavor::A1A2 => (Recipe::Generic, Recipe::Generic),
        Flavor::HermitianFix => (Recipe::Hermitian, Recipe::Hermitian),
        Flavor::ProjectorFix => (Recipe::ProjectorFix, Recipe::ProjectorFix),
        Flavor::ViolateA1 => (Recipe::Violate, Recipe::Generic),
        Flavor::ViolateA2 => (Recipe::Generic, Recipe::Violate),
        Flavor::Condition(id) => match id.side() {
            Side::X => (Recipe::Condition(id.index()), Recipe::Generic),
            Side::Y => (Recipe::Generic, Recipe::Condition(id.index())),
        },
    }
}

/// Builds an instance for `spec`. Fails with [`Error::Infeasible`] when the
/// spec cannot be realized (a violate flavor on a degenerate partition, a
/// spectrum the rank cutoff cannot resolve, or no draw with well-conditioned
/// factors within the retry budget).
pub fn generate(spec: &InstanceSpec) -> Result<Instance> {
    spec.validate()?;
    let InstanceSpec { m, n, r, sigma_cond, flavor, seed } = *spec;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let u = haar(m, &mut rng);
    let v = haar(n, &mut rng);
    // sigma_1 = 1, sigma_r = 1 / sigma_cond, log-uniform in between.
    let mut sigma: Vec<f64> = match r {
        0 => vec![],
        1 => vec![1.0],
        _ => {
            let mut s = vec![1.0, 1.0 / sigma_cond];
            s.extend((2..r).map(|_| log_uniform(1.0 / sigma_cond, 1.0, &mut rng)));
            s.sort_by(|a, b| b.total_cmp(a));
            s
        }
    };
    let sigma_r = sigma.clone();
    let n_matrix = {
        let us = CMatrix::from_fn(m, r, |i, j| u[(i, j)] * sigma[j]);
        &us * &v.column_range(0, r).conj_transpose()
    };
    sigma.resize(m.min(n), 0.0);
    let n_svd_true = SvdFactors::from_parts(u, sigma, v, None)?;
    if n_svd_true.rank != r {
        return Err(Error::Infeasible(format!(
            "sigma_cond {sigma_cond} puts sigma_r below the rank cutoff"
        )));
    }

    let (x_recipe, y_recipe) = recipes(flavor);
    let degenerate = |dim: usize| r == 0 || r == dim;
    let mut warnings = Vec::new();
    for (side, recipe, dim) in [(Side::X, x_recipe, m), (Side::Y, y_recipe, n)] {
        if degenerate(dim) {
            match recipe {
                Recipe::Violate => {
                    return Err(Error::Infeasible(format!(
                        "cannot plant an off-block in {}: rank {r} leaves it empty",
                        side.name()
                    )))
                }
                Recipe::Generic if flavor != Flavor::A1A2 => {}
                _ => warnings.push(GenWarning::Vacuous { side }),
            }
        }
    }

    for _ in 0..MAX_ATTEMPTS {
        let (bx, planted_x) = lower_blocks(x_recipe, &sigma_r, m, &mut rng);
        let (by, planted_y) = lower_blocks(y_recipe, &sigma_r, n, &mut rng);
        let x = similar(&n_svd_true.u, &bx.assemble()?);
        // Y is built as the adjoint of a lower-structured matrix in the V basis.
        let y = similar(&n_svd_true.v, &by.assemble()?.conj_transpose());
        if factor_condition(&x)? > MAX_FACTOR_CONDITION || factor_condition(&y)? > MAX_FACTOR_CONDITION {
            continue;
        }
        return Ok(Instance {
            n_matrix,
            n_svd_true,
            x,
            y,
            spec: *spec,
            planted_off_block_norm: planted_x.or(planted_y),
            warnings,
        });
    }
    Err(Error::Infeasible(format!(
        "no draw with cond(X), cond(Y) <= {MAX_FACTOR_CONDITION:e} in {MAX_ATTEMPTS} attempts"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Tolerance;
    use crate::structure::{projectors, structure_report_x, structure_report_y};

    fn tol(v: f64) -> Tolerance {
        Tolerance::new(v)
    }

    #[test]
    fn haar_examples() {
        let q = haar_unitary(1, 7);
        assert_eq!(q.shape(), (1, 1));
        assert!((q[(0, 0)].norm() - 1.0).abs() < 1e-15);

        for seed in 0..100 {
            let q = haar_unitary(8, seed);
            let defect = (&(&q.conj_transpose() * &q) - &CMatrix::identity(8)).frobenius_norm();
            assert!(defect <= 1e-12 * 8.0);
        }
        assert_eq!(haar_unitary(5, 3), haar_unitary(5, 3));
        assert_ne!(haar_unitary(5, 3), haar_unitary(5, 4));
    }

    #[test]
    fn flavor_strings_round_trip() {
        let mut all = vec![
            Flavor::A1A2,
            Flavor::HermitianFix,
            Flavor::ProjectorFix,
            Flavor::ViolateA1,
            Flavor::ViolateA2,
        ];
        all.extend(ConditionId::all().map(Flavor::Condition));
        for f in all {
            assert_eq!(f.to_string().parse::<Flavor>().unwrap(), f);
        }
        assert!("a3".parse::<Flavor>().is_err());
        assert_eq!("condition:C5p".parse::<Flavor>().unwrap(), Flavor::Condition(ConditionId::C5p));
    }

    #[test]
    fn small_a1a2_passes_both_reports() {
        let inst = generate(&InstanceSpec::new(2, 2, 1, 1.0, Flavor::A1A2, 1)).unwrap();
        assert!(structure_report_x(&inst.x, &inst.n_svd_true, tol(1e-10)).unwrap().satisfied);
        assert!(structure_report_y(&inst.y, &inst.n_svd_true, tol(1e-10)).unwrap().satisfied);
        assert!(inst.warnings.is_empty());
    }

    #[test]
    fn projector_fix_contract() {
        let inst = generate(&InstanceSpec::new(5, 4, 2, 10.0, Flavor::ProjectorFix, 9)).unwrap();
        let p = projectors(&inst.n_svd_true);
        assert!((&(&inst.x * &p.e_n) - &p.e_n).frobenius_norm() <= 1e-12);
        assert!((&(&p.f_n * &inst.y) - &p.f_n).frobenius_norm() <= 1e-12);
    }

    #[test]
    fn hermitian_fix_contract() {
        let inst = generate(&InstanceSpec::new(6, 5, 3, 10.0, Flavor::HermitianFix, 2)).unwrap();
        let p = projectors(&inst.n_svd_true);
        assert!((&inst.x * &p.e_n).hermitian_defect().unwrap() <= 1e-12 * inst.x.frobenius_norm());
        assert!((&p.f_n * &inst.y).hermitian_defect().unwrap() <= 1e-12 * inst.y.frobenius_norm());
    }

    #[test]
    fn violate_flavors_fail_targeted_report() {
        let inst = generate(&InstanceSpec::new(4, 3, 2, 10.0, Flavor::ViolateA1, 5)).unwrap();
        let rx = structure_report_x(&inst.x, &inst.n_svd_true, tol(1e-10)).unwrap();
        assert!(!rx.satisfied);
        assert!(rx.off_block_norm >= 0.1 * inst.x.frobenius_norm());
        assert!((rx.off_block_norm - inst.planted_off_block_norm.unwrap()).abs() <= 1e-12);
        assert!(structure_report_y(&inst.y, &inst.n_svd_true, tol(1e-10)).unwrap().satisfied);

        let inst = generate(&InstanceSpec::new(4, 3, 2, 10.0, Flavor::ViolateA2, 5)).unwrap();
        let ry = structure_report_y(&inst.y, &inst.n_svd_true, tol(1e-10)).unwrap();
        assert!(!ry.satisfied);
        assert!((ry.off_block_norm - inst.planted_off_block_norm.unwrap()).abs() <= 1e-12);
        assert!(structure_report_x(&inst.x, &inst.n_svd_true, tol(1e-10)).unwrap().satisfied);
    }

    #[test]
    fn infeasible_and_vacuous_specs() {
        // full rank leaves no off-block to plant
        let err = generate(&InstanceSpec::new(3, 3, 3, 2.0, Flavor::ViolateA1, 0)).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)));
        assert!(matches!(
            generate(&InstanceSpec::new(3, 3, 4, 2.0, Flavor::A1A2, 0)),
            Err(Error::Infeasible(_))
        ));
        assert!(matches!(
            generate(&InstanceSpec::new(3, 3, 2, 0.5, Flavor::A1A2, 0)),
            Err(Error::Infeasible(_))
        ));
        assert!(matches!(
            generate(&InstanceSpec::new(3, 3, 2, 1e20, Flavor::A1A2, 0)),
            Err(Error::Infeasible(_))
        ));

        let inst = generate(&InstanceSpec::new(3, 3, 3, 2.0, Flavor::A1A2, 0)).unwrap();
        assert_eq!(
            inst.warnings,
            vec![GenWarning::Vacuous { side: Side::X }, GenWarning::Vacuous { side: Side::Y }]
        );
    }

    #[test]
    fn spectrum_and_determinism() {
        let spec = InstanceSpec::new(7, 5, 4, 100.0, Flavor::A1A2, 11);
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a, b);
        let s = &a.n_svd_true.sigma;
        assert_eq!(s[0], 1.0);
        assert!((s[3] - 0.01).abs() < 1e-16);
        assert_eq!(s[4], 0.0);
        let recomputed = svd(&a.n_matrix, None).unwrap();
        for (x, y) in recomputed.sigma.iter().zip(s) {
            assert!((x - y).abs() <= 1e-12);
        }
        assert!((&a.n_svd_true.reconstruct() - &a.n_matrix).frobenius_norm() <= 1e-13);
    }
}
