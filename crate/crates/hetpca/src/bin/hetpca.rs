use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use hetpca::datagen::{generate, Assignment, CoeffDist, DatasetSpec, Field, NoiseDist};
use hetpca::export::write_dataset;
use hetpca::harness::{predict_report, run_sweep, simulate, write_csv, PredictionReport, SimulationReport, SweepConfig};
use hetpca::{Error, NoiseProfile, Result};

#[derive(Parser)]
#[command(name = "hetpca", version, about = "Asymptotic and simulated PCA performance under heteroscedastic noise")]
struct Cli {
    /// Write output to this file instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Emit JSON instead of text (or CSV for sweeps).
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads for sweeps; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Seed for simulate, master seed for sweep.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON file with the parameters; flags given on the command line take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Asymptotic limits for a noise profile.
    Predict(PredictArgs),
    /// One simulated dataset scored against its prediction.
    Simulate(SimulateArgs),
    /// Monte Carlo sweep written as CSV.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct ProfileArgs {
    /// Subspace amplitude θ_i (repeat for each component).
    #[arg(long = "theta")]
    theta: Vec<f64>,
    /// Noise variance σ_ℓ² (repeat for each level).
    #[arg(long = "sigma2")]
    sigma2: Vec<f64>,
    /// Proportion p_ℓ for each level; equal proportions when omitted.
    #[arg(long = "p")]
    p: Vec<f64>,
}

#[derive(Args)]
struct PredictArgs {
    /// Sample-to-dimension ratio.
    #[arg(long)]
    c: Option<f64>,
    #[command(flatten)]
    profile: ProfileArgs,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[command(flatten)]
    profile: ProfileArgs,
    /// real or complex
    #[arg(long)]
    field: Option<String>,
    /// gaussian or rademacher
    #[arg(long)]
    coeff_dist: Option<String>,
    /// deterministic, random-iid, johnstone-spiked or mixture-homoscedastic
    #[arg(long)]
    assignment: Option<String>,
    /// Keep the unscaled noise matrix in the generated dataset.
    #[arg(long)]
    debug_retain: bool,
    /// Also write the dataset in binary form, with a JSON sidecar.
    #[arg(long)]
    export: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// p2-sweep, c-theta-grid, sigma-grid or added-data
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct PredictFile {
    c: Option<f64>,
    #[serde(default)]
    amplitudes: Vec<f64>,
    #[serde(default)]
    variances: Vec<f64>,
    #[serde(default)]
    proportions: Vec<f64>,
}

fn parse_name<T: DeserializeOwned>(what: &str, name: &str) -> Result<T> {
    serde_json::from_value(serde_json::Value::String(name.to_string()))
        .map_err(|_| Error::Validation(format!("unknown {what} '{name}'")))
}

fn read_config<T: DeserializeOwned>(path: &Option<PathBuf>) -> Result<Option<T>> {
    match path {
        Some(p) => Ok(Some(serde_json::from_str(&fs::read_to_string(p)?)?)),
        None => Ok(None),
    }
}

fn or_file<T: Clone>(flag: Vec<T>, file: &[T]) -> Vec<T> {
    if flag.is_empty() {
        file.to_vec()
    } else {
        flag
    }
}

fn profile(variances: Vec<f64>, proportions: Vec<f64>) -> Result<NoiseProfile> {
    if variances.is_empty() {
        return Err(Error::Validation("at least one --sigma2 is required".into()));
    }
    let proportions = if proportions.is_empty() {
        vec![1.0 / variances.len() as f64; variances.len()]
    } else {
        proportions
    };
    NoiseProfile::new(variances, proportions)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn fmt(x: f64) -> String {
    format!("{x:.6}")
}

fn prediction_text(r: &PredictionReport) -> String {
    let mut s = format!(
        "c = {}\nvariances = {:?}\nproportions = {:?}\nmean variance = {}\naverage inverse variance = {}\n\n",
        r.c,
        r.variances,
        r.proportions,
        fmt(r.mean_variance),
        r.average_inverse_variance.map_or("undefined".to_string(), fmt),
    );
    s.push_str("component  theta     alpha       beta        A(beta)     transition  amplitude_ratio  subspace  coefficient  mixed     subspace_upper  coefficient_upper  amplitude_lower\n");
    for (i, comp) in r.components.iter().enumerate() {
        let p = &comp.prediction;
        s.push_str(&format!(
            "{:<10} {:<9} {:<11} {:<11} {:<11} {:<11} {:<16} {:<9} {:<12} {:<9} {:<15} {:<18} {}\n",
            i + 1,
            comp.theta,
            fmt(p.alpha),
            fmt(p.beta),
            fmt(p.a_at_beta),
            if p.above_transition { "above" } else { "below" },
            fmt(p.amplitude_sq_ratio),
            fmt(p.subspace_recovery),
            fmt(p.coefficient_recovery),
            fmt(p.mixed_recovery),
            fmt(comp.bounds.subspace_upper),
            fmt(comp.bounds.coefficient_upper),
            fmt(comp.bounds.amplitude_sq_ratio_lower),
        ));
    }
    if r.components.iter().any(|c| !c.prediction.above_transition) {
        s.push_str("\nbelow-transition recoveries are the conjectured value 0\n");
    }
    match (&r.overall, &r.overall_unavailable) {
        (Some(o), _) => s.push_str(&format!(
            "\noverall subspace recovery = {}\nmean square error = {}\n",
            fmt(o.mean_subspace_recovery),
            fmt(o.mse)
        )),
        (None, Some(msg)) => s.push_str(&format!("\noverall recovery unavailable: {msg}\n")),
        _ => {}
    }
    s
}

fn simulation_text(r: &SimulationReport) -> String {
    let mut s = format!("n = {}, d = {}, seed = {}\n", r.spec.n, r.spec.d, r.spec.seed);
    s.push_str("component  metric           empirical   asymptotic\n");
    for (i, (m, p)) in r.metrics.components.iter().zip(&r.prediction.components).enumerate() {
        let p = &p.prediction;
        for (name, e, a) in [
            ("subspace", m.subspace_sq_cos, p.subspace_recovery),
            ("coefficient", m.coeff_sq_cos, p.coefficient_recovery),
            ("mixed", m.mixed_real, p.mixed_recovery),
            ("amplitude_ratio", m.amplitude_ratio, p.amplitude_sq_ratio),
        ] {
            s.push_str(&format!("{:<10} {:<16} {:<11} {}\n", i + 1, name, fmt(e), fmt(a)));
        }
    }
    let overall = r.prediction.overall.as_ref();
    s.push_str(&format!(
        "{:<10} {:<16} {:<11} {}\n",
        0,
        "overall_subspace",
        fmt(r.metrics.overall_subspace),
        overall.map_or("undefined".into(), |o| fmt(o.mean_subspace_recovery))
    ));
    s.push_str(&format!(
        "{:<10} {:<16} {:<11} {}\n",
        0,
        "mse",
        fmt(r.metrics.mse),
        overall.map_or("undefined".into(), |o| fmt(o.mse))
    ));
    s
}

fn run_predict(cli: &Cli, args: &PredictArgs) -> Result<String> {
    let file: PredictFile = read_config(&cli.config)?.unwrap_or_default();
    let c = args.c.or(file.c).ok_or_else(|| Error::Validation("--c is required".into()))?;
    let amplitudes = or_file(args.profile.theta.clone(), &file.amplitudes);
    let noise = profile(or_file(args.profile.sigma2.clone(), &file.variances), or_file(args.profile.p.clone(), &file.proportions))?;
    let report = predict_report(c, &amplitudes, &noise)?;
    Ok(if cli.json { serde_json::to_string_pretty(&report)? + "\n" } else { prediction_text(&report) })
}

fn run_simulate(cli: &Cli, args: &SimulateArgs) -> Result<String> {
    let file: Option<DatasetSpec> = read_config(&cli.config)?;
    let mut spec = match file {
        Some(spec) => spec,
        None => DatasetSpec {
            n: args.n.ok_or_else(|| Error::Validation("--n is required".into()))?,
            d: args.d.ok_or_else(|| Error::Validation("--d is required".into()))?,
            amplitudes: Vec::new(),
            noise: NoiseProfile::homoscedastic(0.0)?,
            field: Field::Real,
            coeff_dist: CoeffDist::Gaussian,
            noise_dist: NoiseDist::Gaussian,
            assignment: Assignment::Deterministic,
            seed: 0,
            retain_noise: false,
        },
    };
    if let Some(n) = args.n {
        spec.n = n;
    }
    if let Some(d) = args.d {
        spec.d = d;
    }
    if !args.profile.theta.is_empty() {
        spec.amplitudes = args.profile.theta.clone();
    }
    if !args.profile.sigma2.is_empty() {
        spec.noise = profile(args.profile.sigma2.clone(), args.profile.p.clone())?;
    } else if !args.profile.p.is_empty() {
        spec.noise = NoiseProfile::new(spec.noise.variances().to_vec(), args.profile.p.clone())?;
    }
    if let Some(f) = &args.field {
        spec.field = parse_name("field", f)?;
    }
    if let Some(c) = &args.coeff_dist {
        spec.coeff_dist = parse_name("coefficient distribution", c)?;
    }
    if let Some(a) = &args.assignment {
        spec.assignment = parse_name("assignment", a)?;
    }
    if let Some(seed) = cli.seed {
        spec.seed = seed;
    }
    spec.retain_noise |= args.debug_retain;
    if spec.amplitudes.is_empty() {
        return Err(Error::Validation("at least one --theta is required".into()));
    }

    if let Some(path) = &args.export {
        write_dataset(path, &generate(&spec)?)?;
    }
    let report = simulate(&spec)?;
    Ok(if cli.json { serde_json::to_string_pretty(&report)? + "\n" } else { simulation_text(&report) })
}

fn run_sweep_cmd(cli: &Cli, args: &SweepArgs) -> Result<String> {
    let path = cli.config.as_ref().ok_or_else(|| Error::Validation("sweep needs --config".into()))?;
    let mut config: SweepConfig = serde_json::from_str(&fs::read_to_string(path)?)?;
    if let Some(kind) = &args.kind {
        config.sweep_kind = parse_name("sweep kind", kind)?;
    }
    if let Some(trials) = args.trials {
        config.trials = trials;
    }
    if let Some(seed) = cli.seed {
        config.master_seed = seed;
    }
    let rows = run_sweep(&config, cli.threads)?;
    if cli.json {
        return Ok(serde_json::to_string_pretty(&rows)? + "\n");
    }
    let mut buf = Vec::new();
    write_csv(&mut buf, &rows)?;
    Ok(String::from_utf8(buf).expect("CSV is ASCII"))
}

fn run(cli: &Cli) -> Result<()> {
    let text = match &cli.command {
        Command::Predict(args) => run_predict(cli, args)?,
        Command::Simulate(args) => run_simulate(cli, args)?,
        Command::Sweep(args) => run_sweep_cmd(cli, args)?,
    };
    emit(&cli.out, &text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
