//! The secular functions `A(x)` and `B_i(x)` and their largest real roots.
//!
//! For a noise profile with variances `σ_ℓ²` in proportions `p_ℓ`, sample-to-dimension
//! ratio `c` and squared subspace amplitude `θ²`:
//!
//! ```text
//! A(x) = 1 - c Σ p_ℓ σ_ℓ⁴ / (x - σ_ℓ²)²
//! B(x) = 1 - c θ² Σ p_ℓ / (x - σ_ℓ²)
//! ```
//!
//! Both are strictly increasing on `(max σ², ∞)` and tend to `-∞` at the largest pole,
//! so each has exactly one root there. The roots `α` (of `A`) and `β` (of `B`) are found
//! by bisection on a provable bracket followed by a few safeguarded Newton steps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Residual bound every returned root must satisfy.
pub const ROOT_RESIDUAL_TOL: f64 = 1e-10;

const PROPORTION_SUM_TOL: f64 = 1e-12;
const BISECTION_REL_WIDTH: f64 = 1e-13;
const MAX_NEWTON_STEPS: usize = 5;

/// Noise variances `σ_ℓ²` and the proportion `p_ℓ` of samples carrying each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNoiseProfile")]
pub struct NoiseProfile {
    variances: Vec<f64>,
    proportions: Vec<f64>,
}

#[derive(Deserialize)]
struct RawNoiseProfile {
    variances: Vec<f64>,
    proportions: Vec<f64>,
}

impl TryFrom<RawNoiseProfile> for NoiseProfile {
    type Error = Error;

    fn try_from(raw: RawNoiseProfile) -> Result<Self> {
        NoiseProfile::new(raw.variances, raw.proportions)
    }
}

impl NoiseProfile {
    pub fn new(variances: Vec<f64>, proportions: Vec<f64>) -> Result<Self> {
        if variances.is_empty() {
            return Err(Error::Validation("noise profile needs at least one level".into()));
        }
        if variances.len() != proportions.len() {
            return Err(Error::Validation(format!(
                "{} variances but {} proportions",
                variances.len(),
                proportions.len()
            )));
        }
        if let Some(v) = variances.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Validation(format!(
                "noise variances must be finite and nonnegative, got {v}"
            )));
        }
        if let Some(p) = proportions.iter().find(|p| !p.is_finite() || **p <= 0.0) {
            return Err(Error::Validation(format!("proportions must be positive, got {p}")));
        }
        let total: f64 = proportions.iter().sum();
        if (total - 1.0).abs() > PROPORTION_SUM_TOL {
            return Err(Error::Validation(format!("proportions sum to {total}, expected 1")));
        }
        Ok(Self { variances, proportions })
    }

    pub fn homoscedastic(variance: f64) -> Result<Self> {
        Self::new(vec![variance], vec![1.0])
    }

    /// Builds a profile from `(variance, weight)` pairs, dropping zero-weight levels.
    ///
    /// Sweeps over proportions reach the endpoints `p = 0` and `p = 1`; there the
    /// profile degenerates to fewer levels.
    pub fn from_weighted(levels: &[(f64, f64)]) -> Result<Self> {
        let (variances, proportions) = levels.iter().filter(|(_, p)| *p != 0.0).copied().unzip();
        Self::new(variances, proportions)
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn proportions(&self) -> &[f64] {
        &self.proportions
    }

    pub fn len(&self) -> usize {
        self.variances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variances.is_empty()
    }

    pub fn levels(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.variances.iter().copied().zip(self.proportions.iter().copied())
    }

    pub fn max_variance(&self) -> f64 {
        self.variances.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_variance(&self) -> f64 {
        self.variances.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Average noise variance `σ̄² = Σ p_ℓ σ_ℓ²`.
    pub fn mean_variance(&self) -> f64 {
        self.levels().map(|(v, p)| p * v).sum()
    }

    /// Average inverse noise variance `Σ p_ℓ / σ_ℓ²`; undefined if any variance is zero.
    pub fn average_inverse_variance(&self) -> Result<f64> {
        if self.variances.contains(&0.0) {
            return Err(Error::Domain(
                "average inverse variance is undefined with a zero noise variance".into(),
            ));
        }
        Ok(self.levels().map(|(v, p)| p / v).sum())
    }

    pub fn is_noiseless(&self) -> bool {
        self.variances.iter().all(|&v| v == 0.0)
    }

    /// True when all variances agree to within `tol`.
    pub fn is_homoscedastic(&self, tol: f64) -> bool {
        self.max_variance() - self.min_variance() <= tol
    }

    /// Merges levels with bitwise-equal variances, summing their proportions.
    pub fn merged(&self) -> NoiseProfile {
        let mut variances: Vec<f64> = Vec::with_capacity(self.len());
        let mut proportions: Vec<f64> = Vec::with_capacity(self.len());
        for (v, p) in self.levels() {
            match variances.iter().position(|&w| w == v) {
                Some(idx) => proportions[idx] += p,
                None => {
                    variances.push(v);
                    proportions.push(p);
                }
            }
        }
        NoiseProfile { variances, proportions }
    }

    /// Every variance shifted by `delta`.
    pub fn shifted(&self, delta: f64) -> Result<NoiseProfile> {
        NoiseProfile::new(
            self.variances.iter().map(|v| v + delta).collect(),
            self.proportions.clone(),
        )
    }
}

/// Inputs that determine `B_i`: ratio `c`, squared amplitude `θ_i²` and the noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumParams {
    pub c: f64,
    pub theta_sq: f64,
    pub noise: NoiseProfile,
}

impl SpectrumParams {
    pub fn new(c: f64, theta_sq: f64, noise: NoiseProfile) -> Result<Self> {
        validate_ratio(c)?;
        if !(theta_sq.is_finite() && theta_sq > 0.0) {
            return Err(Error::Validation(format!(
                "squared amplitude must be finite and positive, got {theta_sq}"
            )));
        }
        Ok(Self { c, theta_sq, noise })
    }
}

pub(crate) fn validate_ratio(c: f64) -> Result<()> {
    if c.is_finite() && c > 0.0 {
        Ok(())
    } else {
        Err(Error::Validation(format!(
            "sample-to-dimension ratio must be finite and positive, got {c}"
        )))
    }
}

fn check_domain(x: f64, noise: &NoiseProfile) -> Result<()> {
    let pole = noise.max_variance();
    if x.is_finite() && x > pole {
        Ok(())
    } else {
        Err(Error::Domain(format!("x = {x} must exceed the largest noise variance {pole}")))
    }
}

fn a_unchecked(x: f64, c: f64, noise: &NoiseProfile) -> f64 {
    let sum: f64 = noise
        .levels()
        .map(|(v, p)| {
            let r = v / (x - v);
            p * r * r
        })
        .sum();
    1.0 - c * sum
}

fn a_prime_unchecked(x: f64, c: f64, noise: &NoiseProfile) -> f64 {
    let sum: f64 = noise
        .levels()
        .map(|(v, p)| {
            let r = v / (x - v);
            p * r * r / (x - v)
        })
        .sum();
    2.0 * c * sum
}

fn b_unchecked(x: f64, params: &SpectrumParams) -> f64 {
    let sum: f64 = params.noise.levels().map(|(v, p)| p / (x - v)).sum();
    1.0 - params.c * params.theta_sq * sum
}

fn b_prime_unchecked(x: f64, params: &SpectrumParams) -> f64 {
    let sum: f64 = params
        .noise
        .levels()
        .map(|(v, p)| {
            let g = x - v;
            p / (g * g)
        })
        .sum();
    params.c * params.theta_sq * sum
}

/// `A(x) = 1 - c Σ p_ℓ σ_ℓ⁴ / (x - σ_ℓ²)²`, defined for `x > max σ²`.
pub fn eval_a(x: f64, c: f64, noise: &NoiseProfile) -> Result<f64> {
    check_domain(x, noise)?;
    Ok(a_unchecked(x, c, noise))
}

/// Derivative `A'(x) = 2c Σ p_ℓ σ_ℓ⁴ / (x - σ_ℓ²)³`.
pub fn eval_a_prime(x: f64, c: f64, noise: &NoiseProfile) -> Result<f64> {
    check_domain(x, noise)?;
    Ok(a_prime_unchecked(x, c, noise))
}

/// `B(x) = 1 - c θ² Σ p_ℓ / (x - σ_ℓ²)`, defined for `x > max σ²`.
pub fn eval_b(x: f64, params: &SpectrumParams) -> Result<f64> {
    check_domain(x, &params.noise)?;
    Ok(b_unchecked(x, params))
}

/// `B'(x) = c θ² Σ p_ℓ / (x - σ_ℓ²)²`; strictly positive on the domain.
pub fn eval_b_prime(x: f64, params: &SpectrumParams) -> Result<f64> {
    check_domain(x, &params.noise)?;
    Ok(b_prime_unchecked(x, params))
}

/// Largest root `α` of `A`, bracketed in `(max σ², max σ² (1 + √c)]`.
///
/// A noiseless profile has `A ≡ 1`; `α = 0` is returned for it.
pub fn solve_alpha(c: f64, noise: &NoiseProfile) -> Result<f64> {
    validate_ratio(c)?;
    let noise = noise.merged();
    let pole = noise.max_variance();
    if pole == 0.0 {
        return Ok(0.0);
    }
    let upper = pole * (1.0 + c.sqrt());
    largest_root(
        |x| a_unchecked(x, c, &noise),
        |x| a_prime_unchecked(x, c, &noise),
        pole,
        upper,
        "A",
    )
}

/// Largest root `β` of `B`, bracketed in `(max σ², max σ² + c θ²]`.
pub fn solve_beta(params: &SpectrumParams) -> Result<f64> {
    let merged = SpectrumParams { noise: params.noise.merged(), ..params.clone() };
    let pole = merged.noise.max_variance();
    let upper = pole + merged.c * merged.theta_sq;
    largest_root(|x| b_unchecked(x, &merged), |x| b_prime_unchecked(x, &merged), pole, upper, "B")
}

/// Root of an increasing function on `(pole, upper]` with `f → -∞` at the pole and
/// `f(upper) ≥ 0`.
fn largest_root(
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    pole: f64,
    upper: f64,
    name: &str,
) -> Result<f64> {
    let f_hi = f(upper);
    let f_lo = f(pole.next_up());
    if !(f_hi >= -ROOT_RESIDUAL_TOL) || !(f_lo < 0.0) {
        return Err(Error::Internal(format!(
            "bracket for {name} lost its sign change: f({pole}+) = {f_lo}, f({upper}) = {f_hi}"
        )));
    }
    // the upper end is the exact root in the equal-variance case; rounding may put it
    // a few ulps below zero
    if f_hi <= 0.0 {
        return Ok(upper);
    }

    let (mut lo, mut hi) = (pole, upper);
    for _ in 0..2000 {
        if hi - lo <= BISECTION_REL_WIDTH * (1.0 + hi.abs()) {
            break;
        }
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let mut x = lo + 0.5 * (hi - lo);
    if x <= pole {
        x = hi;
    }
    let mut fx = f(x);
    for _ in 0..MAX_NEWTON_STEPS {
        if fx == 0.0 {
            break;
        }
        let slope = df(x);
        if !(slope > 0.0 && slope.is_finite()) {
            break;
        }
        let next = x - fx / slope;
        // steps that leave the bracket are rejected
        if !(next > lo && next <= hi) {
            break;
        }
        let f_next = f(next);
        if f_next.abs() >= fx.abs() {
            break;
        }
        x = next;
        fx = f_next;
    }

    if fx.abs() > ROOT_RESIDUAL_TOL {
        return Err(Error::Internal(format!(
            "root of {name} near {x} has residual {fx:e} above {ROOT_RESIDUAL_TOL:e}"
        )));
    }
    Ok(x)
}
