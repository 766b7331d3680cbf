//! Seeded synthetic data `y_i = U Θ z_i + η_i ε_i` and its comparison variants.
//!
//! Every random stream is a separate ChaCha8 generator seeded from the dataset seed, so
//! the basis, coefficients, noise levels and noise entries do not depend on each other's
//! draw counts.

use faer::linalg::matmul::matmul;
use faer::{c64, Accum, Mat, MatRef, Par};
use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectrum::NoiseProfile;

/// Version of [`derive_seed`]; recorded next to every sweep result.
pub const SEED_SCHEME_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Field {
    #[default]
    Real,
    Complex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CoeffDist {
    #[default]
    Gaussian,
    Rademacher,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseDist {
    #[default]
    Gaussian,
}

/// How per-sample noise levels `η_i` are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Assignment {
    /// Exactly `n_ℓ` samples at level `ℓ`, in contiguous blocks.
    #[default]
    Deterministic,
    /// `η_i²` drawn iid from the levels with probabilities `p_ℓ`.
    RandomIid,
    /// Iid samples with covariance `U diag(θ² + σ̄²) Uᴴ + σ̄² (I - UUᴴ)`.
    JohnstoneSpiked,
    /// A single `η = σ̄`; each noise entry independently picks level `ℓ` with
    /// probability `p_ℓ` and has variance `σ_ℓ²/σ̄²`.
    MixtureHomoscedastic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub n: usize,
    pub d: usize,
    /// Subspace amplitudes `θ_i` (not squared).
    pub amplitudes: Vec<f64>,
    pub noise: NoiseProfile,
    #[serde(default)]
    pub field: Field,
    #[serde(default)]
    pub coeff_dist: CoeffDist,
    #[serde(default)]
    pub noise_dist: NoiseDist,
    #[serde(default)]
    pub assignment: Assignment,
    pub seed: u64,
    /// Keep the unscaled noise matrix `E` in the dataset.
    #[serde(default)]
    pub retain_noise: bool,
}

impl DatasetSpec {
    pub fn k(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 {
            return Err(Error::Validation(format!("n = {} and d = {} must be positive", self.n, self.d)));
        }
        if self.amplitudes.is_empty() {
            return Err(Error::Validation("at least one amplitude is required".into()));
        }
        if let Some(t) = self.amplitudes.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(Error::Validation(format!("amplitudes must be positive and finite, got {t}")));
        }
        if self.k() > self.n.min(self.d) {
            return Err(Error::Validation(format!(
                "rank k = {} exceeds min(n, d) = {}",
                self.k(),
                self.n.min(self.d)
            )));
        }
        if self.assignment == Assignment::JohnstoneSpiked && self.coeff_dist != CoeffDist::Gaussian {
            return Err(Error::Domain(
                "johnstone-spiked data has no separate coefficient draw; use gaussian coefficients".into(),
            ));
        }
        Ok(())
    }

    /// Noise profile whose asymptotic predictions apply to this assignment.
    ///
    /// Mixture and Johnstone data are homoscedastic at the average variance.
    pub fn prediction_noise(&self) -> NoiseProfile {
        match self.assignment {
            Assignment::Deterministic | Assignment::RandomIid => self.noise.clone(),
            Assignment::JohnstoneSpiked | Assignment::MixtureHomoscedastic => {
                NoiseProfile::homoscedastic(self.noise.mean_variance())
                    .expect("mean of valid variances is a valid variance")
            }
        }
    }
}

/// Generated data with its ground truth.
#[derive(Debug, Clone)]
pub struct Dataset<T: Scalar> {
    /// `d × n` samples as columns.
    pub y: Mat<T>,
    /// `d × k` orthonormal basis.
    pub u: Mat<T>,
    /// `n × k` coefficients; column `j` is `z⁽ʲ⁾`.
    pub z: Mat<T>,
    /// Per-sample noise standard deviations `η_i`.
    pub eta: Vec<f64>,
    /// Unscaled noise `E`, so that `Y = U Θ Zᴴ + E diag(η)`; kept only on request.
    pub noise: Option<Mat<T>>,
    pub spec: DatasetSpec,
}

/// A dataset of either field.
#[derive(Debug, Clone)]
pub enum GeneratedDataset {
    Real(Dataset<f64>),
    Complex(Dataset<c64>),
}

impl GeneratedDataset {
    pub fn spec(&self) -> &DatasetSpec {
        match self {
            GeneratedDataset::Real(ds) => &ds.spec,
            GeneratedDataset::Complex(ds) => &ds.spec,
        }
    }
}

/// SplitMix64 finalizer applied to `a` combined with `b`.
pub fn mix_seed(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `trial` at sweep point `point`.
pub fn derive_seed(master: u64, point: u64, trial: u64) -> u64 {
    mix_seed(mix_seed(mix_seed(master, SEED_SCHEME_VERSION as u64), point), trial)
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_seed(seed, id))
}

const STREAM_BASIS: u64 = 0;
const STREAM_COEFF: u64 = 1;
const STREAM_LEVELS: u64 = 2;
const STREAM_NOISE: u64 = 3;

/// Per-level sample counts `n_ℓ` by largest-remainder rounding of `p_ℓ n`.
///
/// Ties in the remainder go to the earlier level.
pub fn level_counts(n: usize, proportions: &[f64]) -> Vec<usize> {
    let exact: Vec<f64> = proportions.iter().map(|p| p * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut remaining = n.saturating_sub(assigned);
    for &i in order.iter().cycle() {
        if remaining == 0 {
            break;
        }
        counts[i] += 1;
        remaining -= 1;
    }
    counts
}

fn gram_schmidt_columns<T: Scalar>(m: &mut Mat<T>) -> Result<()> {
    let (rows, cols) = (m.nrows(), m.ncols());
    for j in 0..cols {
        // two passes keep the basis orthonormal to machine precision
        for _ in 0..2 {
            for i in 0..j {
                let mut dot = T::from_re(0.0);
                for r in 0..rows {
                    dot += m[(r, i)].conjugate() * m[(r, j)];
                }
                for r in 0..rows {
                    let v = m[(r, i)] * dot;
                    m[(r, j)] = m[(r, j)] - v;
                }
            }
        }
        let norm = (0..rows).map(|r| m[(r, j)].modulus_sq()).sum::<f64>().sqrt();
        if !(norm > 1e-300) {
            return Err(Error::Internal(format!("column {j} collapsed during orthonormalization")));
        }
        for r in 0..rows {
            m[(r, j)] = m[(r, j)].scale(1.0 / norm);
        }
    }
    Ok(())
}

/// Orthonormal `d × k` basis from Gram-Schmidt on a Gaussian matrix.
pub fn sample_subspace<T: Scalar>(d: usize, k: usize, seed: u64) -> Result<Mat<T>> {
    if k > d {
        return Err(Error::Domain(format!("rank {k} exceeds dimension {d}")));
    }
    let mut rng = stream(seed, STREAM_BASIS);
    let mut u = Mat::from_fn(d, k, |_, _| T::sample_normal(&mut rng));
    gram_schmidt_columns(&mut u)?;
    Ok(u)
}

/// Orthonormal basis for the span of the given columns.
pub(crate) fn orthonormalize<T: Scalar>(cols: MatRef<'_, T>) -> Result<Mat<T>> {
    let mut m = cols.to_owned();
    gram_schmidt_columns(&mut m)?;
    Ok(m)
}

pub fn generate(spec: &DatasetSpec) -> Result<GeneratedDataset> {
    Ok(match spec.field {
        Field::Real => GeneratedDataset::Real(generate_typed(spec)?),
        Field::Complex => GeneratedDataset::Complex(generate_typed(spec)?),
    })
}

/// Generates a dataset in the field `T`, which must match `spec.field`.
pub fn generate_typed<T: Scalar>(spec: &DatasetSpec) -> Result<Dataset<T>> {
    spec.validate()?;
    if spec.field != T::FIELD {
        return Err(Error::Validation(format!(
            "spec asks for {:?} data but {:?} was requested",
            spec.field,
            T::FIELD
        )));
    }
    let DatasetSpec { n, d, .. } = *spec;
    let k = spec.k();
    let u = sample_subspace::<T>(d, k, spec.seed)?;
    if spec.assignment == Assignment::JohnstoneSpiked {
        return generate_johnstone(spec, u);
    }

    let mut coeff_rng = stream(spec.seed, STREAM_COEFF);
    let z = Mat::from_fn(n, k, |_, _| match spec.coeff_dist {
        CoeffDist::Gaussian => T::sample_normal(&mut coeff_rng),
        CoeffDist::Rademacher => T::sample_rademacher(&mut coeff_rng),
    });

    let eta = noise_levels(spec);
    let mut noise_rng = stream(spec.seed, STREAM_NOISE);
    let mut y = Mat::<T>::zeros(d, n);
    let mut kept = spec.retain_noise.then(|| Mat::<T>::zeros(d, n));

    match spec.assignment {
        Assignment::MixtureHomoscedastic => {
            let mean = spec.noise.mean_variance();
            let picker = WeightedIndex::new(spec.noise.proportions())
                .map_err(|e| Error::Validation(e.to_string()))?;
            let sd: Vec<f64> = spec
                .noise
                .variances()
                .iter()
                .map(|v| if mean > 0.0 { (v / mean).sqrt() } else { 0.0 })
                .collect();
            for i in 0..n {
                for r in 0..d {
                    let level = picker.sample(&mut noise_rng);
                    let e = T::sample_normal(&mut noise_rng).scale(sd[level]);
                    if let Some(m) = kept.as_mut() {
                        m[(r, i)] = e;
                    }
                    y[(r, i)] = e.scale(eta[i]);
                }
            }
        }
        _ => {
            for i in 0..n {
                for r in 0..d {
                    let e = T::sample_normal(&mut noise_rng);
                    if let Some(m) = kept.as_mut() {
                        m[(r, i)] = e;
                    }
                    y[(r, i)] = e.scale(eta[i]);
                }
            }
        }
    }

    let u_theta = Mat::from_fn(d, k, |r, j| u[(r, j)].scale(spec.amplitudes[j]));
    matmul(y.as_mut(), Accum::Add, u_theta.as_ref(), z.adjoint(), T::from_re(1.0), Par::Seq);

    Ok(Dataset { y, u, z, eta, noise: kept, spec: spec.clone() })
}

fn noise_levels(spec: &DatasetSpec) -> Vec<f64> {
    let n = spec.n;
    let sd: Vec<f64> = spec.noise.variances().iter().map(|v| v.sqrt()).collect();
    match spec.assignment {
        Assignment::Deterministic => {
            let counts = level_counts(n, spec.noise.proportions());
            counts.iter().zip(&sd).flat_map(|(&c, &s)| std::iter::repeat_n(s, c)).collect()
        }
        Assignment::RandomIid => {
            let mut rng = stream(spec.seed, STREAM_LEVELS);
            let picker = WeightedIndex::new(spec.noise.proportions()).expect("proportions are positive");
            (0..n).map(|_| sd[picker.sample(&mut rng)]).collect()
        }
        Assignment::JohnstoneSpiked | Assignment::MixtureHomoscedastic => {
            vec![spec.noise.mean_variance().sqrt(); n]
        }
    }
}

/// `y_i = U diag(√(θ_j² + σ̄²)) Uᴴ w_i + σ̄ (I - UUᴴ) w_i` for iid normal `w_i`.
///
/// Ground truth `Z` holds the spike coordinates `Uᴴ w_i`, and `E` holds `(I - UUᴴ) w_i`.
fn generate_johnstone<T: Scalar>(spec: &DatasetSpec, u: Mat<T>) -> Result<Dataset<T>> {
    let DatasetSpec { n, d, .. } = *spec;
    let k = spec.k();
    let mean = spec.noise.mean_variance();
    let sigma = mean.sqrt();
    let mut rng = stream(spec.seed, STREAM_NOISE);
    let w = Mat::from_fn(d, n, |_, _| T::sample_normal(&mut rng));

    // coordinates along U: k × n
    let mut coords = Mat::<T>::zeros(k, n);
    matmul(coords.as_mut(), Accum::Replace, u.adjoint(), w.as_ref(), T::from_re(1.0), Par::Seq);

    // residual (I - UUᴴ) w
    let mut residual = w;
    matmul(residual.as_mut(), Accum::Add, u.as_ref(), coords.as_ref(), T::from_re(-1.0), Par::Seq);

    let mut y = Mat::from_fn(d, n, |r, i| residual[(r, i)].scale(sigma));
    let scaled = Mat::from_fn(d, k, |r, j| {
        u[(r, j)].scale((spec.amplitudes[j] * spec.amplitudes[j] + mean).sqrt())
    });
    matmul(y.as_mut(), Accum::Add, scaled.as_ref(), coords.as_ref(), T::from_re(1.0), Par::Seq);

    let z = coords.adjoint().to_owned();
    Ok(Dataset {
        y,
        u,
        z,
        eta: vec![sigma; n],
        noise: spec.retain_noise.then_some(residual),
        spec: spec.clone(),
    })
}
