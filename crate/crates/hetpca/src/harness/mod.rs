//! Predictions, single simulations and Monte Carlo sweeps.
//!
//! Sweep trials run in parallel, but every trial draws from its own derived seed and
//! uses sequential linear algebra, so results do not depend on the worker count.

mod config;

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

pub use config::{Axis, SweepConfig, SweepKind, SweepPoint};

use crate::asymptotics::{
    homoscedastic_bounds, predict_component, predict_overall, ComponentPrediction, OverallPrediction,
    RecoveryBounds,
};
use crate::datagen::{derive_seed, generate, level_counts, Assignment, DatasetSpec, GeneratedDataset, SEED_SCHEME_VERSION};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, EmpiricalMetrics};
use crate::pca::pca;
use crate::spectrum::{NoiseProfile, SpectrumParams};

pub const CSV_HEADER: &str =
    "sweep_kind,point_index,axis1,axis2,component,metric,asymptotic,mean,q25,q75,trials,n,d,seed_scheme_version";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentReport {
    pub theta: f64,
    pub theta_sq: f64,
    #[serde(flatten)]
    pub prediction: ComponentPrediction,
    pub bounds: RecoveryBounds,
}

/// Everything the asymptotic theory says about one parameter set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionReport {
    pub c: f64,
    pub variances: Vec<f64>,
    pub proportions: Vec<f64>,
    pub mean_variance: f64,
    /// `None` when some variance is zero.
    pub average_inverse_variance: Option<f64>,
    pub components: Vec<ComponentReport>,
    /// `None` when some component is below its transition.
    pub overall: Option<OverallPrediction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overall_unavailable: Option<String>,
}

pub fn predict_report(c: f64, amplitudes: &[f64], noise: &NoiseProfile) -> Result<PredictionReport> {
    if amplitudes.is_empty() {
        return Err(Error::Validation("at least one amplitude is required".into()));
    }
    let mut components = Vec::with_capacity(amplitudes.len());
    for &theta in amplitudes {
        let theta_sq = theta * theta;
        let prediction = predict_component(&SpectrumParams::new(c, theta_sq, noise.clone())?)?;
        components.push(ComponentReport { theta, theta_sq, prediction, bounds: homoscedastic_bounds(c, theta_sq, noise) });
    }
    let squares: Vec<f64> = amplitudes.iter().map(|t| t * t).collect();
    let (overall, overall_unavailable) = match predict_overall(c, &squares, noise) {
        Ok(o) => (Some(o), None),
        Err(Error::Hypothesis(msg)) => (None, Some(msg)),
        Err(e) => return Err(e),
    };
    Ok(PredictionReport {
        c,
        variances: noise.variances().to_vec(),
        proportions: noise.proportions().to_vec(),
        mean_variance: noise.mean_variance(),
        average_inverse_variance: noise.average_inverse_variance().ok(),
        components,
        overall,
        overall_unavailable,
    })
}

/// Runs PCA on a generated dataset and scores it against the ground truth.
pub fn run_trial(spec: &DatasetSpec) -> Result<EmpiricalMetrics> {
    match generate(spec)? {
        GeneratedDataset::Real(ds) => evaluate(&pca(ds.y.as_ref(), spec.k())?, &ds),
        GeneratedDataset::Complex(ds) => evaluate(&pca(ds.y.as_ref(), spec.k())?, &ds),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub spec: DatasetSpec,
    /// Finite-sample ratio `n/d` used for the prediction.
    pub c: f64,
    pub metrics: EmpiricalMetrics,
    pub prediction: PredictionReport,
}

/// One trial with its matching prediction at `c = n/d` and, for deterministic
/// assignment, the realized level proportions.
pub fn simulate(spec: &DatasetSpec) -> Result<SimulationReport> {
    spec.validate()?;
    let c = spec.n as f64 / spec.d as f64;
    let noise = match spec.assignment {
        Assignment::Deterministic => {
            let counts = level_counts(spec.n, spec.noise.proportions());
            let levels: Vec<(f64, f64)> = spec
                .noise
                .variances()
                .iter()
                .zip(&counts)
                .map(|(&v, &k)| (v, k as f64 / spec.n as f64))
                .collect();
            NoiseProfile::from_weighted(&levels)?
        }
        _ => spec.prediction_noise(),
    };
    let metrics = run_trial(spec)?;
    let prediction = predict_report(c, &spec.amplitudes, &noise)?;
    Ok(SimulationReport { spec: spec.clone(), c, metrics, prediction })
}

/// Aggregate of one metric at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialSummary {
    pub sweep_kind: SweepKind,
    pub point_index: usize,
    pub axis1: f64,
    pub axis2: Option<f64>,
    /// 0 for dataset-level metrics, `i` for component `i`.
    pub component: usize,
    pub metric: &'static str,
    pub asymptotic: f64,
    pub mean: f64,
    pub q25: f64,
    pub q75: f64,
    /// Sample standard deviation over trials (0 for a single trial); not part of the CSV.
    pub std_dev: f64,
    pub trials: usize,
    pub n: usize,
    pub d: usize,
}

/// Quantile by linear interpolation between order statistics (inclusive method).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn summarize(values: &[f64]) -> (f64, f64, f64, f64) {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let len = values.len() as f64;
    let mean = values.iter().sum::<f64>() / len;
    let std_dev = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (len - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, quantile(&sorted, 0.25), quantile(&sorted, 0.75), std_dev)
}

/// Asymptotic value of each reported metric at a point, in CSV row order.
fn asymptotic_rows(report: &PredictionReport) -> Vec<(usize, &'static str, f64)> {
    let overall = report.overall.as_ref();
    let mut rows = vec![
        (0, "overall_subspace", overall.map_or(f64::NAN, |o| o.mean_subspace_recovery)),
        (0, "mse", overall.map_or(f64::NAN, |o| o.mse)),
    ];
    for (i, comp) in report.components.iter().enumerate() {
        let p = &comp.prediction;
        rows.push((i + 1, "subspace", p.subspace_recovery));
        rows.push((i + 1, "coefficient", p.coefficient_recovery));
        rows.push((i + 1, "mixed", p.mixed_recovery));
        rows.push((i + 1, "amplitude_ratio", p.amplitude_sq_ratio));
    }
    rows
}

fn empirical_value(m: &EmpiricalMetrics, component: usize, metric: &str) -> f64 {
    if component == 0 {
        return if metric == "mse" { m.mse } else { m.overall_subspace };
    }
    let c = &m.components[component - 1];
    match metric {
        "subspace" => c.subspace_sq_cos,
        "coefficient" => c.coeff_sq_cos,
        "mixed" => c.mixed_real,
        _ => c.amplitude_ratio,
    }
}

/// Prediction at a sweep point, from the ideal `(c, p)` of the configuration.
pub fn point_prediction(point: &SweepPoint) -> Result<PredictionReport> {
    predict_report(point.c, &point.spec.amplitudes, &point.spec.prediction_noise())
}

/// Runs every trial of every point on `threads` workers (0 for rayon's default).
pub fn run_sweep(config: &SweepConfig, threads: usize) -> Result<Vec<TrialSummary>> {
    config.validate()?;
    let points = config.points()?;
    let tasks: Vec<(usize, usize)> =
        (0..points.len()).flat_map(|p| (0..config.trials).map(move |t| (p, t))).collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    // indexed collect keeps (point, trial) order whatever the scheduling
    let results: Vec<EmpiricalMetrics> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(p, t)| {
                let mut spec = points[p].spec.clone();
                spec.seed = derive_seed(config.master_seed, p as u64, t as u64);
                run_trial(&spec)
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut summaries = Vec::new();
    for (p, point) in points.iter().enumerate() {
        let trials = &results[p * config.trials..(p + 1) * config.trials];
        let report = point_prediction(point)?;
        for (component, metric, asymptotic) in asymptotic_rows(&report) {
            let values: Vec<f64> = trials.iter().map(|m| empirical_value(m, component, metric)).collect();
            let (mean, q25, q75, std_dev) = summarize(&values);
            summaries.push(TrialSummary {
                sweep_kind: config.sweep_kind,
                point_index: point.index,
                axis1: point.axis1,
                axis2: point.axis2,
                component,
                metric,
                asymptotic,
                mean,
                q25,
                q75,
                std_dev,
                trials: config.trials,
                n: point.spec.n,
                d: point.spec.d,
            });
        }
    }
    Ok(summaries)
}

/// Round-trip float formatting with 17 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<W: Write>(out: &mut W, rows: &[TrialSummary]) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.sweep_kind.as_str(),
            r.point_index,
            format_float(r.axis1),
            r.axis2.map(format_float).unwrap_or_default(),
            r.component,
            r.metric,
            format_float(r.asymptotic),
            format_float(r.mean),
            format_float(r.q25),
            format_float(r.q75),
            r.trials,
            r.n,
            r.d,
            SEED_SCHEME_VERSION,
        )?;
    }
    Ok(())
}
