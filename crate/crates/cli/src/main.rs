use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mixtest::experiments::{
    consistency_harness, ingest_csv, log_spaced_grid, pair_oracle, run_cell, run_experiment, simulate_dataset,
    write_atomically, write_dataset_csv, write_outputs, DataSource, ExperimentConfig, Schema, TestKind,
};
use mixtest::mixture::Dataset;
use mixtest::pairs::{build_pair, PairKind};
use mixtest::samplers::{chain_rng, ChainConfig};
use mixtest::survival::{run_survival_test, simulate_cohort, CohortDesign, SURVIVAL_FAMILIES};
use mixtest::{Error, Result};
use serde_json::json;

#[derive(Parser)]
#[command(name = "mixtest", version, about = "Bayesian tests by mixture estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a simulated dataset as CSV.
    Simulate(SimulateArgs),
    /// Run one test on one dataset and print its posterior summary.
    Run(RunArgs),
    /// Run every cell of an experiment configuration.
    Sweep(SweepArgs),
    /// Closed-form Bayes factor for a pair of models.
    Oracle(OracleArgs),
    /// Tabulate how fast the weight of the true model approaches its limit.
    Consistency(ConsistencyArgs),
    /// Select among the Weibull, log-logistic and log-normal families.
    Survival(SurvivalArgs),
}

#[derive(Args)]
struct ChainArgs {
    /// MCMC iterations, burn-in included.
    #[arg(long, default_value_t = 10_000)]
    iterations: usize,
    /// Burn-in; defaults to a tenth of the iterations.
    #[arg(long)]
    burn_in: Option<usize>,
}

impl ChainArgs {
    fn config(&self, seed: u64) -> ChainConfig {
        let mut c = ChainConfig::with_iterations(self.iterations, seed);
        if let Some(b) = self.burn_in {
            c.burn_in = b;
        }
        c
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// Experiment configuration whose data source is used.
    #[arg(long, conflicts_with = "pair")]
    config: Option<PathBuf>,
    /// Simulate from one component of a model pair instead.
    #[arg(long)]
    pair: Option<PairKind>,
    /// Component of the pair to simulate from.
    #[arg(long, default_value_t = 0)]
    component: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, conflicts_with = "pair")]
    config: Option<PathBuf>,
    #[arg(long)]
    pair: Option<PairKind>,
    /// CSV dataset; simulated from the configuration (or pair) when omitted.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Component of the pair to simulate from.
    #[arg(long, default_value_t = 0)]
    component: usize,
    #[arg(long)]
    a0: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    chain: ChainArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    replicas: Option<usize>,
    /// 100 replicas over 20 log-spaced sample sizes up to 10⁴.
    #[arg(long)]
    full_scale: bool,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    pair: PairKind,
    /// CSV dataset with a `y` column.
    #[arg(long, conflicts_with = "n")]
    data: Option<PathBuf>,
    /// Simulate this many observations instead.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    component: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConsistencyArgs {
    #[arg(long)]
    pair: PairKind,
    /// Component the data are simulated from.
    #[arg(long, default_value_t = 0)]
    component: usize,
    #[arg(long, default_value_t = 0.5)]
    a0: f64,
    /// Sample sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [10usize, 100, 1000])]
    n: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    replicas: usize,
    #[arg(long)]
    full_scale: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    chain: ChainArgs,
}

#[derive(Args)]
struct SurvivalArgs {
    /// CSV with `time` (or `y = -log time`) and optional `censored`.
    #[arg(long, conflicts_with = "n")]
    data: Option<PathBuf>,
    /// Simulate a cohort of this size instead.
    #[arg(long)]
    n: Option<usize>,
    /// Generating family for simulation: 0 Weibull, 1 log-logistic, 2 log-normal.
    #[arg(long, default_value_t = 0)]
    truth: usize,
    #[arg(long, default_value_t = 0.0)]
    censoring: f64,
    #[arg(long, default_value_t = 1.0)]
    a0: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    chain: ChainArgs,
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => write_atomically(path, bytes),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn emit_json(out: Option<&Path>, value: &serde_json::Value) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    emit(out, &bytes)
}

fn simulate_pair(pair: PairKind, component: usize, n: usize, seed: u64) -> Result<Dataset> {
    let spec = build_pair(pair, 0.5)?;
    let c = spec
        .components
        .get(component)
        .ok_or_else(|| Error::Configuration(format!("pair {pair} has no component {component}")))?
        .resolve(&pair.default_globals())?;
    let mut rng = chain_rng(seed);
    Ok(Dataset::iid((0..n).map(|_| c.sample_one(&mut rng)).collect()))
}

fn schema_for(test: TestKind) -> Schema {
    match test {
        TestKind::Pair { .. } => Schema::Iid,
        TestKind::LogitProbit => Schema::BinaryRegression,
        TestKind::Regression { .. } => Schema::LinearRegression,
        TestKind::Survival => Schema::Survival,
    }
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let data = match (&args.config, args.pair) {
        (Some(path), _) => simulate_dataset(&ExperimentConfig::load(path)?.data_source, args.n, args.seed)?,
        (None, Some(pair)) => simulate_pair(pair, args.component, args.n, args.seed)?,
        (None, None) => return Err(Error::Configuration("either --config or --pair is required".into())),
    };
    let mut bytes = Vec::new();
    write_dataset_csv(&data, &mut bytes)?;
    emit(args.out.as_deref(), &bytes)
}

fn run(args: RunArgs) -> Result<()> {
    let (test, a0, source, g) = match (&args.config, args.pair) {
        (Some(path), _) => {
            let c = ExperimentConfig::load(path)?;
            (c.test, args.a0.unwrap_or(c.a0_grid[0]), Some((c.data_source, c.n_grid[0])), c.g)
        }
        (None, Some(pair)) => (TestKind::Pair { pair }, args.a0.unwrap_or(0.5), None, None),
        (None, None) => return Err(Error::Configuration("either --config or --pair is required".into())),
    };
    let data = match (&args.data, source) {
        (Some(path), _) => ingest_csv(path, schema_for(test))?,
        (None, Some((source, n))) => simulate_dataset(&source, args.n.unwrap_or(n), args.seed)?,
        (None, None) => {
            let TestKind::Pair { pair } = test else { unreachable!() };
            let n = args.n.ok_or_else(|| Error::Configuration("--n or --data is required".into()))?;
            simulate_pair(pair, args.component, n, args.seed)?
        }
    };
    let outcome = run_cell(test, &data, a0, &args.chain.config(args.seed), g, true)?;
    emit_json(
        args.out.as_deref(),
        &json!({
            "test": test.name(),
            "a0": a0,
            "n": data.len(),
            "alpha_median": outcome.alpha_median(),
            "alpha_mean": outcome.alpha_mean(),
            "oracle": outcome.oracle,
            "summary": outcome.summary,
        }),
    )
}

fn sweep(args: SweepArgs) -> Result<()> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = args.out {
        config.outputs = out;
    }
    if let Some(r) = args.replicas {
        config.replicas = r;
    }
    if args.full_scale {
        config.replicas = 100;
        if !matches!(config.data_source, DataSource::File { .. }) {
            config.n_grid = log_spaced_grid(10, 10_000, 20);
        }
    }
    config.validate()?;
    let output = run_experiment(&config)?;
    write_outputs(&config.outputs, &output)?;
    let errors = output.rows.iter().filter(|r| r.error.is_some()).count();
    emit_json(None, &json!({ "outputs": config.outputs, "rows": output.rows.len(), "errors": errors }))
}

fn oracle(args: OracleArgs) -> Result<()> {
    let data = match (&args.data, args.n) {
        (Some(path), _) => ingest_csv(path, Schema::Iid)?,
        (None, Some(n)) => simulate_pair(args.pair, args.component, n, args.seed)?,
        (None, None) => return Err(Error::Configuration("either --data or --n is required".into())),
    };
    let result = pair_oracle(args.pair, &data)
        .ok_or_else(|| Error::Unsupported(format!("no closed form for {} on these data", args.pair)))?;
    emit_json(
        args.out.as_deref(),
        &json!({
            "pair": args.pair.name(),
            "n": data.len(),
            "log_bf": result.log_bf,
            "bayes_factor": result.bayes_factor(),
            "posterior_prob_m1": result.posterior_prob_m1,
        }),
    )
}

fn consistency(args: ConsistencyArgs) -> Result<()> {
    let (grid, replicas) = if args.full_scale {
        (log_spaced_grid(10, 10_000, 20), 100)
    } else {
        (args.n.clone(), args.replicas)
    };
    let rows = consistency_harness(args.pair, args.component, &grid, replicas, args.a0, &args.chain.config(args.seed))?;
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in &rows {
        writer.serialize(row)?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    emit(args.out.as_deref(), &bytes)
}

fn survival(args: SurvivalArgs) -> Result<()> {
    let data = match (&args.data, args.n) {
        (Some(path), _) => ingest_csv(path, Schema::Survival)?,
        (None, Some(n)) => {
            let mut design = CohortDesign::new(args.truth, n);
            design.censoring_rate = args.censoring;
            simulate_cohort(&design, &mut chain_rng(args.seed))?
        }
        (None, None) => return Err(Error::Configuration("either --data or --n is required".into())),
    };
    let run = run_survival_test(&data, args.a0, &args.chain.config(args.seed))?;
    let medians: serde_json::Map<String, serde_json::Value> = SURVIVAL_FAMILIES
        .iter()
        .zip(&run.summary.weights)
        .map(|(family, w)| (family.name().to_string(), json!(w.median)))
        .collect();
    emit_json(args.out.as_deref(), &json!({ "n": data.len(), "weight_medians": medians, "summary": run.summary }))
}

fn report(kind: &str, message: &str) {
    let body = json!({ "error": { "kind": kind, "message": message } });
    eprintln!("{body}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                e.exit();
            }
            report("usage", e.to_string().trim());
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Oracle(a) => oracle(a),
        Command::Consistency(a) => consistency(a),
        Command::Survival(a) => survival(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(e.kind(), &e.to_string());
            ExitCode::FAILURE
        }
    }
}
