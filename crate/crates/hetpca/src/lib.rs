//! Asymptotic performance of PCA on heteroscedastic data.
//!
//! The crate is organised bottom-up:
//!
//! - [`spectrum`]: the rational functions `A(x)`, `B_i(x)` and their largest roots.
//! - [`asymptotics`]: almost-sure limits of PCA amplitudes, subspace, coefficient and
//!   overall recovery, plus the homoscedastic bounds and consistency identities.
//! - [`datagen`]: seeded synthetic data from the heteroscedastic subspace model and its
//!   comparison variants.
//! - [`pca`] and [`metrics`]: truncated PCA and the empirical counterparts of every limit.
//! - [`harness`]: Monte Carlo sweeps that pair empirical summaries with predictions.

pub mod asymptotics;
pub mod datagen;
pub mod error;
pub mod export;
pub mod harness;
pub mod metrics;
pub mod pca;
pub mod scalar;
pub mod spectrum;

pub use asymptotics::{
    amplitude_bias_alt, average_inverse_variance, check_spectrum_identities,
    homoscedastic_bounds, predict_component, predict_homoscedastic, predict_overall,
    psi_inverse, ComponentPrediction, IdentityReport, OverallPrediction, RecoveryBounds,
};
pub use datagen::{
    generate, sample_subspace, Assignment, CoeffDist, Dataset, DatasetSpec, Field,
    GeneratedDataset, NoiseDist,
};
pub use error::{Error, Result};
pub use metrics::{ComponentMetrics, EmpiricalMetrics};
pub use pca::{pca, PcaResult};
pub use scalar::Scalar;
pub use spectrum::{
    eval_a, eval_b, eval_b_prime, solve_alpha, solve_beta, NoiseProfile, SpectrumParams,
};
