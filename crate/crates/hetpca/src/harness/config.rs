use serde::{Deserialize, Serialize};

use crate::datagen::{Assignment, CoeffDist, DatasetSpec, Field, NoiseDist};
use crate::error::{Error, Result};
use crate::spectrum::NoiseProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    /// Axis 1 is the fraction `p₂` of samples at the second variance.
    P2Sweep,
    /// Axis 1 is `c` (with `n = round(c d)`); axis 2, if present, replaces `θ₁`.
    CThetaGrid,
    /// Axis 1 is `σ₁²`, axis 2 is `σ₂²`.
    SigmaGrid,
    /// Axis 1 is the added ratio `c₂` of samples at the second variance.
    AddedData,
}

impl SweepKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepKind::P2Sweep => "p2-sweep",
            SweepKind::CThetaGrid => "c-theta-grid",
            SweepKind::SigmaGrid => "sigma-grid",
            SweepKind::AddedData => "added-data",
        }
    }
}

/// Evenly spaced values from `start` to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| if i + 1 == self.count { self.stop } else { self.start + step * i as f64 })
            .collect()
    }
}

fn default_trials() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub sweep_kind: SweepKind,
    /// Sample count; derived from `c` and `d` when absent.
    #[serde(default)]
    pub n: Option<usize>,
    pub d: usize,
    /// Sample-to-dimension ratio used for predictions; `n/d` when absent.
    #[serde(default)]
    pub c: Option<f64>,
    /// Subspace amplitudes `θ_i` (not squared).
    pub amplitudes: Vec<f64>,
    pub variances: Vec<f64>,
    /// Proportions for each variance; ignored by sweeps that set them from an axis.
    #[serde(default)]
    pub proportions: Option<Vec<f64>>,
    #[serde(default)]
    pub field: Field,
    #[serde(default)]
    pub coeff_dist: CoeffDist,
    #[serde(default)]
    pub noise_dist: NoiseDist,
    #[serde(default)]
    pub assignment: Assignment,
    pub axis1: Axis,
    #[serde(default)]
    pub axis2: Option<Axis>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub master_seed: u64,
}

/// One grid point: the generation recipe (without seed) and the ideal prediction inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub index: usize,
    pub axis1: f64,
    pub axis2: Option<f64>,
    pub c: f64,
    pub spec: DatasetSpec,
}

fn rounded_n(c: f64, d: usize) -> Result<usize> {
    let n = (c * d as f64).round();
    if !(n >= 1.0 && n.is_finite()) {
        return Err(Error::Validation(format!("c = {c} and d = {d} give no samples")));
    }
    Ok(n as usize)
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: SweepConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Validation("trials must be at least 1".into()));
        }
        if self.d == 0 {
            return Err(Error::Validation("d must be positive".into()));
        }
        for axis in std::iter::once(&self.axis1).chain(&self.axis2) {
            if axis.count == 0 || !axis.start.is_finite() || !axis.stop.is_finite() {
                return Err(Error::Validation(format!("invalid axis {axis:?}")));
            }
        }
        if self.n.is_none() && self.c.is_none() && self.sweep_kind != SweepKind::CThetaGrid {
            return Err(Error::Validation("either n or c is required".into()));
        }
        let two_levels = matches!(self.sweep_kind, SweepKind::P2Sweep | SweepKind::SigmaGrid | SweepKind::AddedData);
        if two_levels && self.variances.len() != 2 {
            return Err(Error::Validation(format!(
                "{} needs exactly two variances, got {}",
                self.sweep_kind.as_str(),
                self.variances.len()
            )));
        }
        if self.sweep_kind == SweepKind::SigmaGrid && self.axis2.is_none() {
            return Err(Error::Validation("sigma-grid needs axis2 for σ₂²".into()));
        }
        if matches!(self.sweep_kind, SweepKind::P2Sweep | SweepKind::AddedData) && self.axis2.is_some() {
            return Err(Error::Validation(format!("{} takes a single axis", self.sweep_kind.as_str())));
        }
        self.points().map(|_| ())
    }

    fn base_profile(&self, variances: Vec<f64>) -> Result<NoiseProfile> {
        let proportions = match &self.proportions {
            Some(p) => p.clone(),
            None => vec![1.0 / variances.len() as f64; variances.len()],
        };
        NoiseProfile::new(variances, proportions)
    }

    fn spec(&self, n: usize, amplitudes: Vec<f64>, noise: NoiseProfile) -> DatasetSpec {
        DatasetSpec {
            n,
            d: self.d,
            amplitudes,
            noise,
            field: self.field,
            coeff_dist: self.coeff_dist,
            noise_dist: self.noise_dist,
            assignment: self.assignment,
            seed: 0,
            retain_noise: false,
        }
    }

    fn base_n_c(&self) -> Result<(usize, f64)> {
        match (self.n, self.c) {
            (Some(n), Some(c)) => Ok((n, c)),
            (Some(n), None) => Ok((n, n as f64 / self.d as f64)),
            (None, Some(c)) => Ok((rounded_n(c, self.d)?, c)),
            (None, None) => Err(Error::Validation("either n or c is required".into())),
        }
    }

    /// Grid points in row-major order over `(axis1, axis2)`.
    pub fn points(&self) -> Result<Vec<SweepPoint>> {
        let a1 = self.axis1.values();
        let a2: Vec<Option<f64>> = match &self.axis2 {
            Some(axis) => axis.values().into_iter().map(Some).collect(),
            None => vec![None],
        };
        let mut points = Vec::with_capacity(a1.len() * a2.len());
        for &x in &a1 {
            for &y in &a2 {
                let index = points.len();
                let (c, spec) = self.point_spec(x, y)?;
                spec.validate()?;
                points.push(SweepPoint { index, axis1: x, axis2: y, c, spec });
            }
        }
        Ok(points)
    }

    fn point_spec(&self, x: f64, y: Option<f64>) -> Result<(f64, DatasetSpec)> {
        let v = &self.variances;
        match self.sweep_kind {
            SweepKind::P2Sweep => {
                if !(0.0..=1.0).contains(&x) {
                    return Err(Error::Validation(format!("p₂ = {x} is not a proportion")));
                }
                let (n, c) = self.base_n_c()?;
                let noise = NoiseProfile::from_weighted(&[(v[0], 1.0 - x), (v[1], x)])?;
                Ok((c, self.spec(n, self.amplitudes.clone(), noise)))
            }
            SweepKind::CThetaGrid => {
                if !(x > 0.0) {
                    return Err(Error::Validation(format!("c = {x} must be positive")));
                }
                let mut amplitudes = self.amplitudes.clone();
                if let Some(theta) = y {
                    amplitudes[0] = theta;
                }
                let noise = self.base_profile(v.clone())?;
                Ok((x, self.spec(rounded_n(x, self.d)?, amplitudes, noise)))
            }
            SweepKind::SigmaGrid => {
                let (n, c) = self.base_n_c()?;
                let noise = self.base_profile(vec![x, y.expect("validated")])?;
                Ok((c, self.spec(n, self.amplitudes.clone(), noise)))
            }
            SweepKind::AddedData => {
                if !(x >= 0.0) {
                    return Err(Error::Validation(format!("added ratio {x} must be nonnegative")));
                }
                let (_, c1) = self.base_n_c()?;
                let c = c1 + x;
                let p1 = c1 / c;
                let noise = NoiseProfile::from_weighted(&[(v[0], p1), (v[1], 1.0 - p1)])?;
                Ok((c, self.spec(rounded_n(c, self.d)?, self.amplitudes.clone(), noise)))
            }
        }
    }
}
