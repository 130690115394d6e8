use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use robustrisk::bounds::{bound_report, BoundInputs, DEFAULT_A_CONSTANT};
use robustrisk::complexity::{complexity_report, ComplexityConfig, ComplexityReport};
use robustrisk::datagen::{sample_contaminated, sample_oracle, ContaminationConfig, Dataset};
use robustrisk::harness::{run_experiment, ExperimentConfig};
use robustrisk::training::{empirical_risk, train_erm, BatchSize, TrainConfig, TrainedModel};
use robustrisk::{Architecture, Error, LossFunction, OracleNetwork, Result};

/// Robust-loss ERM for weight-decayed ReLU networks: data generation,
/// training, complexity estimates, risk bounds and experiment sweeps.
#[derive(Parser)]
#[command(name = "robustrisk", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a contaminated dataset (and its target network).
    Generate(GenerateArgs),
    /// Fit a network by projected subgradient descent.
    Train(TrainArgs),
    /// Estimate s_x, s_{y|x}, Rademacher complexity and envelope.
    Complexity(ComplexityArgs),
    /// Evaluate the risk bounds.
    Bound(BoundArgs),
    /// Run experiment sweeps.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    arch: Architecture,
    #[arg(long)]
    ball: f64,
    #[arg(long)]
    n: usize,
    /// Fraction of corrupted input components.
    #[arg(long = "c", default_value_t = 0.0)]
    corruption_level: f64,
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    noise_std: f64,
    /// Full contamination model as JSON; overrides the flags above.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Use this target network instead of sampling one.
    #[arg(long)]
    oracle: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Where to write the target network; defaults to `oracle.json` next to
    /// the data.
    #[arg(long)]
    oracle_out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    /// `lad`, `huber:k`, `cauchy:k`, `tukey:k` or `ls`.
    #[arg(long)]
    loss: LossFunction,
    #[arg(long)]
    arch: Architecture,
    #[arg(long)]
    ball: f64,
    #[arg(long, default_value_t = 500)]
    iters: usize,
    #[arg(long, default_value_t = 0.05)]
    step: f64,
    /// `full` or a mini-batch size.
    #[arg(long, default_value = "full")]
    batch: String,
    #[arg(long, default_value_t = 0)]
    restarts: usize,
    #[arg(long)]
    init_scale: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ComplexityArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    arch: Architecture,
    #[arg(long)]
    ball: f64,
    /// Sign draws for the Rademacher estimate.
    #[arg(long, default_value_t = 200)]
    reps: usize,
    #[arg(long, default_value_t = 64)]
    envelope_samples: usize,
    #[arg(long, default_value_t = 800)]
    ascent_budget: usize,
    /// Reference network for s_{y|x} and the envelope; the zero network
    /// when absent.
    #[arg(long)]
    oracle: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[group(required = true, multiple = false, id = "source")]
struct BoundSource {
    /// BoundInputs as a JSON file or inline JSON object.
    #[arg(long, group = "source")]
    inputs: Option<String>,
    /// Directory holding data.csv, model.json and complexity.json (and
    /// optionally oracle.json).
    #[arg(long, group = "source")]
    from_run: Option<PathBuf>,
}

#[derive(Args)]
struct BoundArgs {
    #[command(flatten)]
    source: BoundSource,
    /// Confidence level used with --from-run.
    #[arg(long, default_value_t = 0.1)]
    t: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ExperimentCommand {
    /// Run the sweep described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write per-loss (c, median clean error) series.
        #[arg(long)]
        emit_plotdata: bool,
        /// Also write per-record wall times (not reproducible).
        #[arg(long)]
        timings: bool,
    },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

/// Creates the directory an output file goes into.
fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => Ok(fs::create_dir_all(dir)?),
        _ => Ok(()),
    }
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(p) => {
            ensure_parent(p)?;
            fs::write(p, text)?
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn generate(args: GenerateArgs) -> Result<()> {
    let cfg = match &args.config {
        Some(p) => read_json::<ContaminationConfig>(p)?,
        None => ContaminationConfig::log_normal(
            args.arch.input_dim(),
            args.sigma,
            args.corruption_level,
            args.gamma,
            args.noise_std,
        ),
    };
    if cfg.d != args.arch.input_dim() {
        return Err(Error::Shape(format!("config has d = {} but architecture is {}", cfg.d, args.arch)));
    }
    let oracle = match &args.oracle {
        Some(p) => read_json::<OracleNetwork>(p)?,
        None => sample_oracle(&args.arch, args.ball, args.seed)?,
    };
    let data = sample_contaminated(&cfg, &oracle, args.n, args.seed)?;
    ensure_parent(&args.out)?;
    data.save_csv(&args.out)?;
    let oracle_out = args.oracle_out.unwrap_or_else(|| args.out.parent().unwrap_or(Path::new("")).join("oracle.json"));
    emit(&oracle, Some(&oracle_out))
}

fn train(args: TrainArgs) -> Result<()> {
    let data = Dataset::load_csv(&args.data)?;
    let batch_size = match args.batch.as_str() {
        "full" => BatchSize::Full,
        m => BatchSize::Mini(m.parse().map_err(|_| Error::Parse(format!("bad batch size `{m}`")))?),
    };
    let cfg = TrainConfig {
        step_size: args.step,
        iterations: args.iters,
        batch_size,
        init_scale: args.init_scale,
        restarts: args.restarts,
        seed: args.seed,
    };
    let result = train_erm(&data, &args.loss, &args.arch, args.ball, &cfg)?;
    let model = TrainedModel {
        loss: args.loss,
        empirical_risk: result.best_empirical_risk,
        train: cfg,
        network: result.params,
    };
    ensure_parent(&args.out)?;
    fs::write(&args.out, model.to_json()?)?;
    Ok(())
}

fn load_oracle(path: Option<&Path>, arch: &Architecture, ball: f64) -> Result<OracleNetwork> {
    let oracle = match path {
        Some(p) => read_json::<OracleNetwork>(p)?,
        None => OracleNetwork::zero(arch.clone(), ball)?,
    };
    if oracle.params().architecture() != arch {
        return Err(Error::Shape(format!(
            "oracle architecture {} does not match {arch}",
            oracle.params().architecture()
        )));
    }
    OracleNetwork::new(oracle.into_params().with_ball_radius(ball)?)
}

fn complexity(args: ComplexityArgs) -> Result<()> {
    let data = Dataset::load_csv(&args.data)?;
    let oracle = load_oracle(args.oracle.as_deref(), &args.arch, args.ball)?;
    let cfg = ComplexityConfig {
        mc_reps: args.reps,
        envelope_samples: args.envelope_samples,
        ascent_budget: args.ascent_budget,
        ..ComplexityConfig::default()
    };
    let report = complexity_report(&data, &oracle, &cfg, args.seed)?;
    emit(&report, args.out.as_deref())
}

/// Bound inputs from the files `generate`, `train` and `complexity` leave in
/// one directory. Without a fresh sampler the oracle's population risk is
/// replaced by its empirical risk.
fn inputs_from_run(dir: &Path, t: f64) -> Result<BoundInputs> {
    let data = Dataset::load_csv(dir.join("data.csv"))?;
    let model: TrainedModel = read_json(&dir.join("model.json"))?;
    let report: ComplexityReport = read_json(&dir.join("complexity.json"))?;
    let arch = model.network.architecture().clone();
    let b = model.network.ball_radius();
    let oracle_path = dir.join("oracle.json");
    let oracle = load_oracle(oracle_path.exists().then_some(oracle_path.as_path()), &arch, b)?;
    let oracle_emp = empirical_risk(oracle.params(), &data, &model.loss)?;
    Ok(BoundInputs {
        empirical_risk: model.empirical_risk,
        oracle_population_risk: oracle_emp,
        oracle_empirical_risk: oracle_emp,
        c_h: model.loss.lipschitz_constant()?,
        c_f: report.rademacher_upper,
        w_f: report.envelope_upper,
        s_x: report.s_x_hat,
        s_y_given_x: report.s_y_given_x_hat,
        n: data.len(),
        t,
        b,
        l: arch.depth(),
        a_constant: DEFAULT_A_CONSTANT,
    })
}

fn bound(args: BoundArgs) -> Result<()> {
    let inputs = match (&args.source.inputs, &args.source.from_run) {
        (Some(s), _) if s.trim_start().starts_with('{') => serde_json::from_str(s)?,
        (Some(path), _) => read_json(Path::new(path))?,
        (None, Some(dir)) => inputs_from_run(dir, args.t)?,
        (None, None) => unreachable!("clap enforces one source"),
    };
    emit(&bound_report(&inputs)?, args.out.as_deref())
}

fn experiment(cmd: ExperimentCommand) -> Result<bool> {
    let ExperimentCommand::Run { config, out, emit_plotdata, timings } = cmd;
    let cfg: ExperimentConfig = read_json(&config)?;
    let outcome = run_experiment(&cfg, &out, emit_plotdata)?;
    if timings {
        let body: String =
            outcome.records.iter().map(|r| format!("{},{},{}\n", r.cell, r.repetition, r.wall_time_ms)).collect();
        fs::write(out.join("timings.csv"), format!("cell,repetition,wall_time_ms\n{body}"))?;
    }
    let check = &outcome.invariants;
    if !check.coverage_failures.is_empty() {
        eprintln!("coverage violated in cells {:?}", check.coverage_failures);
    }
    if !check.dominance_failures.is_empty() {
        eprintln!("dominance violated in cells {:?}", check.dominance_failures);
    }
    Ok(check.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => generate(a).map(|_| true),
        Command::Train(a) => train(a).map(|_| true),
        Command::Complexity(a) => complexity(a).map(|_| true),
        Command::Bound(a) => bound(a).map(|_| true),
        Command::Experiment(c) => experiment(c),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
