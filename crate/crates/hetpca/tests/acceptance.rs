//! Acceptance criteria 1–11, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the lines reach the terminal. Criteria listed in
//! `KNOWN_RED` are expected to fail for the reasons recorded next to them; the run fails
//! if any other criterion fails or if a listed one unexpectedly passes.
//! Set `HETPCA_CRITERIA=1,2,3` to run a subset.

use std::process::{Command, ExitCode};
use std::time::Instant;

use faer::c64;
use hetpca::datagen::{generate_typed, Assignment, CoeffDist, DatasetSpec, Field, NoiseDist};
use hetpca::harness::{predict_report, run_sweep, write_csv, SweepConfig, TrialSummary};
use hetpca::metrics::evaluate;
use hetpca::{
    check_spectrum_identities, eval_b_prime, pca, predict_component, predict_homoscedastic,
    solve_beta, ComponentPrediction, NoiseProfile, Scalar, SpectrumParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// 6: the B′(β) Hessian scale is 2/(cθ²)³, not 2/(cθ²)⁴.
/// 9: at p₂ = 0.8 component 1 sits just above the transition (A(β) = 0.064); the finite-size
///    mean exceeds the limit by about 0.05 for real and complex data alike.
/// 10: per-component recoveries of distinct noiseless amplitudes are 1 − O(1/n), not 1.
const KNOWN_RED: &[u8] = &[6, 9, 10];

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn random_profile(rng: &mut ChaCha8Rng, max_levels: usize) -> NoiseProfile {
    let l = rng.random_range(1..=max_levels);
    let v: Vec<f64> = (0..l).map(|_| rng.random_range(0.0..5.0)).collect();
    let w: Vec<f64> = (0..l).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    let mut p: Vec<f64> = w.iter().map(|x| x / total).collect();
    let head: f64 = p[..l - 1].iter().sum();
    p[l - 1] = 1.0 - head;
    NoiseProfile::new(v, p).unwrap()
}

fn random_params(rng: &mut ChaCha8Rng) -> SpectrumParams {
    let c = rng.random_range(0.1..50.0);
    let t = rng.random_range(0.1..10.0);
    let noise = random_profile(rng, 4);
    SpectrumParams::new(c, t, noise).unwrap()
}

fn cli_subspace(c: f64, variances: &[f64], proportions: &[f64]) -> (f64, bool) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hetpca"));
    cmd.args(["predict", "--json", "--c", &c.to_string(), "--theta", "1"]);
    for v in variances {
        cmd.args(["--sigma2", &v.to_string()]);
    }
    for p in proportions {
        cmd.args(["--p", &p.to_string()]);
    }
    let out = cmd.output().expect("run hetpca");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let comp = &json["components"][0];
    (comp["subspace_recovery"].as_f64().unwrap(), comp["above_transition"].as_bool().unwrap())
}

fn settings_table() -> Outcome {
    let round3 = |x: f64| (x * 1000.0).round() / 1000.0;
    let cases: [(&str, f64, &[f64], &[f64], f64, bool); 4] = [
        ("setting 1", 10.0, &[1.0], &[1.0], 0.818, true),
        ("setting 2", 10.0, &[1.01, 0.01], &[0.99, 0.01], 0.817, true),
        ("setting 3", 10.0, &[0.01, 99.01], &[0.99, 0.01], 0.0, false),
        ("few samples", 0.1, &[0.01], &[1.0], 0.908, true),
    ];
    let mut passed = true;
    let mut parts = Vec::new();
    for (name, c, v, p, want, above) in cases {
        let (got, got_above) = cli_subspace(c, v, p);
        passed &= round3(got) == want && got_above == above;
        parts.push(format!("{name} {got:.4}{}", if got_above { "" } else { " (below)" }));
    }
    outcome(passed, parts.join(", "))
}

fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64)).collect()
}

fn prediction_fields(p: &ComponentPrediction) -> [f64; 7] {
    [
        p.beta,
        p.a_at_beta,
        p.amplitude_sq_limit,
        p.amplitude_sq_ratio,
        p.subspace_recovery,
        p.coefficient_recovery,
        p.mixed_recovery,
    ]
}

fn closed_form_oracle() -> Outcome {
    let sigmas: Vec<f64> = (0..10).map(|i| 10.0 * i as f64 / 9.0).collect();
    let (mut worst, mut above, mut below) = (0.0f64, 0, 0);
    for &c in &log_grid(0.1, 100.0, 10) {
        for &t in &log_grid(0.1, 10.0, 10) {
            for &s in &sigmas {
                let general = predict_component(&SpectrumParams::new(c, t, NoiseProfile::homoscedastic(s).unwrap()).unwrap()).unwrap();
                let closed = predict_homoscedastic(c, t, s).unwrap();
                if closed.above_transition {
                    above += 1;
                } else {
                    below += 1;
                }
                for (g, h) in prediction_fields(&general).iter().zip(prediction_fields(&closed)) {
                    worst = worst.max((g - h).abs() / h.abs().max(1.0));
                }
            }
        }
    }
    outcome(worst <= 1e-10 && above > 0 && below > 0, format!("max relative difference {worst:.1e} ({above} above, {below} below)"))
}

fn homoscedastic_optimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut accepted, mut violations, mut not_strict) = (0, 0, 0);
    while accepted < 1000 {
        let params = random_params(&mut rng);
        let het = predict_component(&params).unwrap();
        if !het.above_transition {
            continue;
        }
        accepted += 1;
        let hom = predict_homoscedastic(params.c, params.theta_sq, params.noise.mean_variance()).unwrap();
        if het.subspace_recovery > hom.subspace_recovery + 1e-9
            || het.coefficient_recovery > hom.coefficient_recovery + 1e-9
            || het.amplitude_sq_ratio < hom.amplitude_sq_ratio - 1e-9
        {
            violations += 1;
        }
        let spread = params.noise.max_variance() - params.noise.min_variance();
        if spread > 1e-6
            && !(het.subspace_recovery < hom.subspace_recovery
                && het.coefficient_recovery < hom.coefficient_recovery
                && het.amplitude_sq_ratio > hom.amplitude_sq_ratio)
        {
            not_strict += 1;
        }
    }
    outcome(violations == 0 && not_strict == 0, format!("{violations} violations, {not_strict} non-strict of 1000"))
}

fn identity_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut failures = Vec::new();
    for _ in 0..1000 {
        let params = random_params(&mut rng);
        let report = check_spectrum_identities(&params).unwrap();
        for check in report.checks.iter().filter(|c| !c.passed) {
            failures.push(format!("{} = {:.1e}", check.name, check.value));
        }
    }
    let shown = failures.iter().take(3).cloned().collect::<Vec<_>>().join("; ");
    outcome(failures.is_empty(), format!("{} failed checks over 1000 parameter sets {shown}", failures.len()))
}

fn beta_gap_and_slope(c: f64, t: f64, noise: NoiseProfile) -> (f64, f64) {
    let mean = noise.mean_variance();
    let params = SpectrumParams::new(c, t, noise).unwrap();
    let beta = solve_beta(&params).unwrap();
    (beta - mean, eval_b_prime(beta, &params).unwrap())
}

fn translation_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let params = random_params(&mut rng);
        let (gap, slope) = beta_gap_and_slope(params.c, params.theta_sq, params.noise.clone());
        for delta in [0.1, 1.0, 10.0] {
            let (g, s) = beta_gap_and_slope(params.c, params.theta_sq, params.noise.shifted(delta).unwrap());
            worst = worst.max((g - gap).abs()).max((s - slope).abs());
        }
    }
    outcome(worst < 1e-9, format!("max change {worst:.1e}"))
}

fn hessian(f: &dyn Fn(&[f64]) -> f64, v: &[f64], h: f64) -> Vec<Vec<f64>> {
    let at = |a: usize, sa: f64, b: usize, sb: f64| {
        let mut w = v.to_vec();
        w[a] += sa * h;
        w[b] += sb * h;
        f(&w)
    };
    (0..v.len())
        .map(|a| {
            (0..v.len())
                .map(|b| (at(a, 1.0, b, 1.0) - at(a, 1.0, b, -1.0) - at(a, -1.0, b, 1.0) + at(a, -1.0, b, -1.0)) / (4.0 * h * h))
                .collect()
        })
        .collect()
}

fn hessian_structure() -> Outcome {
    let points: [(f64, f64, f64, &[f64]); 2] = [(2.0, 0.7, 1.0, &[0.2, 0.3, 0.5]), (0.5, 3.0, 0.2, &[0.25, 0.25, 0.5])];
    let (mut gap_err, mut slope_err, mut kernel) = (0.0f64, 0.0f64, 0.0f64);
    for (c, t, s, p) in points {
        let l = p.len();
        let profile = |v: &[f64]| NoiseProfile::new(v.to_vec(), p.to_vec()).unwrap();
        let gap = |v: &[f64]| beta_gap_and_slope(c, t, profile(v)).0;
        let slope = |v: &[f64]| beta_gap_and_slope(c, t, profile(v)).1;
        let v = vec![s; l];
        let ct = c * t;
        for (f, scale, err) in [(&gap as &dyn Fn(&[f64]) -> f64, 2.0 / ct, &mut gap_err), (&slope, 2.0 / ct.powi(4), &mut slope_err)] {
            let h = hessian(f, &v, 1e-4);
            let ones_quotient: f64 = h.iter().flatten().sum::<f64>() / l as f64;
            kernel = kernel.max(ones_quotient.abs());
            for a in 0..l {
                for b in 0..l {
                    let centering = if a == b { p[a] } else { 0.0 } - p[a] * p[b];
                    *err = err.max((h[a][b] - scale * centering).abs());
                }
            }
        }
    }
    outcome(
        gap_err < 1e-4 && slope_err < 1e-4 && kernel < 1e-6,
        format!("β−σ̄² error {gap_err:.1e}, B′(β) error {slope_err:.1e} against 2/(cθ²)⁴, ones-vector eigenvalue {kernel:.1e}"),
    )
}

fn p2_config(n: usize, d: usize, axis: (f64, f64, usize), trials: usize, field: &str, assignment: &str, seed: u64) -> SweepConfig {
    SweepConfig::from_json(&format!(
        r#"{{"sweep_kind": "p2-sweep", "n": {n}, "d": {d}, "amplitudes": [1.0, 0.8], "variances": [0.1, 3.25],
            "field": "{field}", "assignment": "{assignment}",
            "axis1": {{"start": {}, "stop": {}, "count": {}}}, "trials": {trials}, "master_seed": {seed}}}"#,
        axis.0, axis.1, axis.2
    ))
    .unwrap()
}

fn rows<'a>(rows: &'a [TrialSummary], component: usize, metric: &'a str) -> impl Iterator<Item = &'a TrialSummary> {
    rows.iter().filter(move |r| r.component == component && r.metric == metric)
}

fn monte_carlo_agreement() -> Outcome {
    let config = p2_config(10_000, 1_000, (0.0, 1.0, 11), 30, "real", "deterministic", 7);
    let summary = run_sweep(&config, 0).unwrap();
    let mut passed = true;
    let mut worst = (f64::NEG_INFINITY, String::new());
    for component in [1, 2] {
        for r in rows(&summary, component, "subspace") {
            let checked = if component == 1 { r.axis1 < 0.75 } else { !(r.axis1 > 0.1 && r.axis1 < 0.35) };
            if !checked {
                continue;
            }
            let dev = (r.mean - r.asymptotic).abs();
            let tol = 0.03 + 3.0 * r.std_dev / (r.trials as f64).sqrt();
            if dev > tol {
                passed = false;
            }
            if dev - tol > worst.0 {
                worst = (dev - tol, format!("component {component} at p₂={:.1}: |{:.4} − {:.4}| vs tolerance {tol:.4}", r.axis1, r.mean, r.asymptotic));
            }
        }
    }
    outcome(passed, format!("tightest {}", worst.1))
}

fn variance_shrinkage() -> Outcome {
    let iqr = |n, d| {
        let summary = run_sweep(&p2_config(n, d, (0.5, 0.5, 1), 100, "real", "deterministic", 8), 0).unwrap();
        [1, 2].map(|c| rows(&summary, c, "subspace").map(|r| r.q75 - r.q25).next().unwrap())
    };
    let small = iqr(1_000, 100);
    let large = iqr(10_000, 1_000);
    let ratios = [large[0] / small[0], large[1] / small[1]];
    outcome(
        ratios.iter().all(|&r| r <= 0.7),
        format!("IQR ratios {:.3} (component 1), {:.3} (component 2)", ratios[0], ratios[1]),
    )
}

fn field_robustness() -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for (field, assignment) in [("complex", "deterministic"), ("real", "mixture-homoscedastic")] {
        let summary = run_sweep(&p2_config(10_000, 1_000, (0.2, 0.8, 3), 30, field, assignment, 9), 0).unwrap();
        let mut worst = (0.0f64, String::new());
        let (mut over, mut checked) = (0, 0);
        for r in summary.iter().filter(|r| r.component > 0 && r.metric != "amplitude_ratio") {
            let dev = (r.mean - r.asymptotic).abs();
            checked += 1;
            if dev > 0.03 {
                passed = false;
                over += 1;
            }
            if dev >= worst.0 {
                worst = (dev, format!("component {} {} at p₂={:.1}", r.component, r.metric, r.axis1));
            }
        }
        parts.push(format!("{field}/{assignment} {over}/{checked} over, worst {:.4} ({})", worst.0, worst.1));
    }
    outcome(passed, parts.join("; "))
}

fn noiseless_case<T: Scalar>(spec: &DatasetSpec) -> (f64, f64) {
    let ds = generate_typed::<T>(spec).unwrap();
    let m = evaluate(&pca(ds.y.as_ref(), spec.k()).unwrap(), &ds).unwrap();
    let mut recovery_err = (m.overall_subspace - 1.0).abs();
    for comp in &m.components {
        for r in [comp.subspace_sq_cos, comp.coeff_sq_cos, comp.mixed_real] {
            recovery_err = recovery_err.max((r - 1.0).abs());
        }
    }
    (recovery_err, m.mse.abs())
}

fn noiseless_exactness() -> Outcome {
    let noise = NoiseProfile::homoscedastic(0.0).unwrap();
    let mut parts = Vec::new();
    let mut passed = true;

    let mut pred_err = 0.0f64;
    for (c, amplitudes) in [(0.1, vec![1.0]), (1.0, vec![2.0, 0.5]), (10.0, vec![1.0, 1.0, 0.3])] {
        let report = predict_report(c, &amplitudes, &noise).unwrap();
        for comp in &report.components {
            let p = &comp.prediction;
            for r in [p.subspace_recovery, p.coefficient_recovery, p.mixed_recovery] {
                pred_err = pred_err.max((r - 1.0).abs());
            }
        }
        let overall = report.overall.unwrap();
        pred_err = pred_err.max((overall.mean_subspace_recovery - 1.0).abs()).max(overall.mse.abs());
    }
    passed &= pred_err <= 1e-8;
    parts.push(format!("predictions {pred_err:.1e}"));

    let cases: [(&str, usize, usize, Vec<f64>, Field, CoeffDist); 5] = [
        ("single", 2, 6, vec![1.5], Field::Real, CoeffDist::Gaussian),
        ("single complex", 3, 4, vec![0.7], Field::Complex, CoeffDist::Gaussian),
        ("equal pair", 4, 5, vec![1.0, 1.0], Field::Real, CoeffDist::Rademacher),
        ("distinct pair", 4, 6, vec![2.0, 1.0], Field::Real, CoeffDist::Gaussian),
        ("distinct pair complex", 500, 20, vec![3.0, 1.0], Field::Complex, CoeffDist::Gaussian),
    ];
    for (name, n, d, amplitudes, field, coeff_dist) in cases {
        let spec = DatasetSpec {
            n,
            d,
            amplitudes,
            noise: noise.clone(),
            field,
            coeff_dist,
            noise_dist: NoiseDist::Gaussian,
            assignment: Assignment::Deterministic,
            seed: 10,
            retain_noise: false,
        };
        let (rec, mse) = match field {
            Field::Real => noiseless_case::<f64>(&spec),
            Field::Complex => noiseless_case::<c64>(&spec),
        };
        passed &= rec <= 1e-8 && mse <= 1e-8;
        parts.push(format!("{name} recovery {rec:.1e} mse {mse:.1e}"));
    }
    outcome(passed, parts.join(", "))
}

fn csv_bytes(config: &SweepConfig, threads: usize) -> Vec<u8> {
    let mut out = Vec::new();
    write_csv(&mut out, &run_sweep(config, threads).unwrap()).unwrap();
    out
}

fn reproducibility() -> Outcome {
    let configs = [
        r#"{"sweep_kind": "p2-sweep", "n": 200, "d": 40, "amplitudes": [1.0, 0.8], "variances": [0.1, 3.25],
            "axis1": {"start": 0.0, "stop": 1.0, "count": 5}, "trials": 4, "master_seed": 11}"#,
        r#"{"sweep_kind": "c-theta-grid", "d": 30, "amplitudes": [1.0], "variances": [1.0, 2.0], "field": "complex",
            "axis1": {"start": 1.0, "stop": 4.0, "count": 3}, "axis2": {"start": 0.5, "stop": 2.0, "count": 2},
            "trials": 3, "master_seed": 12}"#,
        r#"{"sweep_kind": "sigma-grid", "n": 150, "d": 30, "amplitudes": [1.5], "variances": [0.0, 0.0],
            "assignment": "random-iid", "axis1": {"start": 0.1, "stop": 2.0, "count": 2},
            "axis2": {"start": 0.5, "stop": 4.0, "count": 2}, "trials": 3, "master_seed": 13}"#,
        r#"{"sweep_kind": "added-data", "d": 20, "c": 2.0, "amplitudes": [1.2], "variances": [0.5, 2.0],
            "assignment": "mixture-homoscedastic", "coeff_dist": "rademacher",
            "axis1": {"start": 0.0, "stop": 4.0, "count": 3}, "trials": 3, "master_seed": 14}"#,
    ];
    let mut identical = 0;
    for text in configs {
        let config = SweepConfig::from_json(text).unwrap();
        let reference = csv_bytes(&config, 1);
        if [csv_bytes(&config, 1), csv_bytes(&config, 3), csv_bytes(&config, 0)].iter().all(|b| *b == reference) {
            identical += 1;
        }
    }
    outcome(identical == configs.len(), format!("{identical}/{} sweep kinds byte-identical across runs and 1/3/default workers", configs.len()))
}

fn main() -> ExitCode {
    let criteria: [(u8, &str, fn() -> Outcome); 11] = [
        (1, "settings table", settings_table),
        (2, "homoscedastic closed form", closed_form_oracle),
        (3, "homoscedastic optimality", homoscedastic_optimality),
        (4, "identity suite", identity_suite),
        (5, "translation invariance", translation_invariance),
        (6, "hessian structure", hessian_structure),
        (7, "monte carlo agreement", monte_carlo_agreement),
        (8, "variance shrinkage", variance_shrinkage),
        (9, "field and distribution robustness", field_robustness),
        (10, "noiseless exactness", noiseless_exactness),
        (11, "reproducibility", reproducibility),
    ];
    let selected: Option<Vec<u8>> = std::env::var("HETPCA_CRITERIA")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());

    let mut unexpected = Vec::new();
    for (id, name, run) in criteria {
        if selected.as_ref().is_some_and(|s| !s.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let result = run();
        let known_red = KNOWN_RED.contains(&id);
        let tag = match (result.passed, known_red) {
            (true, false) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
            (true, true) => "PASS (expected FAIL)",
        };
        println!("criterion {id:>2} {tag}: {name}: {} [{:.1}s]", result.detail, start.elapsed().as_secs_f64());
        if result.passed == known_red {
            unexpected.push(id);
        }
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected outcome for criteria {unexpected:?}");
        ExitCode::FAILURE
    }
}
