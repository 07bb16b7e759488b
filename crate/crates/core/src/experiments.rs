//! Batch experiments: simulation, CSV ingestion, replica sweeps over
//! `(a0, n)` grids, and the empirical consistency table.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::distributions::{Component, Family, Params};
use crate::error::{Error, Result};
use crate::glm::{self, Link, RegressionCase};
use crate::mixture::Dataset;
use crate::numeric::{derive_seed, quantile_sorted};
use crate::oracles::{self, BayesFactorResult};
use crate::pairs::{build_pair, PairKind};
use crate::samplers::{chain_rng, run_mh, summarize, ChainConfig, PosteriorSummary};
use crate::survival::{self, CohortDesign};

pub const SCHEMA_VERSION: u32 = 1;

/// Which test an experiment runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum TestKind {
    Pair { pair: PairKind },
    LogitProbit,
    Regression { case: RegressionCase },
    Survival,
}

impl TestKind {
    pub fn name(&self) -> String {
        match self {
            TestKind::Pair { pair } => pair.name().to_string(),
            TestKind::LogitProbit => "logit-probit".into(),
            TestKind::Regression { case: RegressionCase::SharedBeta } => "regression-shared".into(),
            TestKind::Regression { case: RegressionCase::SeparateBeta } => "regression-separate".into(),
            TestKind::Survival => "survival".into(),
        }
    }

    /// Component whose weight is reported as `α`.
    fn reported_component(&self) -> usize {
        match self {
            // the model with intercept and first covariate
            TestKind::Regression { .. } => 2,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schema {
    Iid,
    BinaryRegression,
    LinearRegression,
    Survival,
}

/// Where the data of each replica comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum DataSource {
    /// i.i.d. draws from one family.
    Simulate { family: Family, params: Vec<f64> },
    /// Binary regression with covariate `N(mean, sd²)`.
    BinaryRegression { link: Link, coefficients: [f64; 2], covariate: (f64, f64) },
    /// The four-column variable-selection design.
    SelectionDesign { beta: [f64; 4], sigma: f64 },
    /// Simulated survival cohort.
    Cohort { truth: usize, censoring_rate: f64 },
    /// A CSV file; the sample-size grid is ignored.
    File { path: PathBuf, schema: Schema },
}

fn default_schema_version() -> u32 {
    SCHEMA_VERSION
}

fn default_g() -> Option<f64> {
    None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub test: TestKind,
    pub data_source: DataSource,
    pub a0_grid: Vec<f64>,
    pub n_grid: Vec<usize>,
    pub replicas: usize,
    #[serde(default)]
    pub chain: ChainConfig,
    pub outputs: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Also report the classical posterior probability where one exists.
    #[serde(default)]
    pub oracle: bool,
    /// g-prior scale for regression tests; defaults to `n`.
    #[serde(default = "default_g")]
    pub g: Option<f64>,
    /// Worker threads; defaults to the available parallelism.
    #[serde(default)]
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path).map_err(|e| with_path(e, path))?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Validation(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.a0_grid.is_empty() {
            return Err(Error::Validation("a0_grid is empty".into()));
        }
        if self.n_grid.is_empty() {
            return Err(Error::Validation("n_grid is empty".into()));
        }
        if self.replicas == 0 {
            return Err(Error::Validation("replicas must be at least 1".into()));
        }
        if let Some(a) = self.a0_grid.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(Error::Validation(format!("a0 = {a} must be positive")));
        }
        self.chain.validate().map_err(|e| Error::Validation(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    PostMedianAlpha,
    PostMeanAlpha,
    BfPostProb,
}

/// One long-format result. Wall-clock time is kept out of the results file
/// so identical configurations produce identical bytes; it goes to a
/// separate timings file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub test: String,
    pub a0: f64,
    pub n: usize,
    pub replica: usize,
    pub estimator: Estimator,
    pub value: f64,
    #[serde(skip)]
    pub runtime_ms: u128,
    pub seed: u64,
    pub error: Option<String>,
}

/// Simulates `n` observations from `source`; deterministic in `seed`.
pub fn simulate_dataset(source: &DataSource, n: usize, seed: u64) -> Result<Dataset> {
    let mut rng = chain_rng(seed);
    simulate_with(source, n, &mut rng)
}

fn simulate_with(source: &DataSource, n: usize, rng: &mut dyn RngCore) -> Result<Dataset> {
    match source {
        DataSource::Simulate { family, params } => {
            let c = Component::new(*family, &Params(params.clone()))?;
            Ok(Dataset::iid((0..n).map(|_| c.sample_one(rng)).collect()))
        }
        DataSource::BinaryRegression { link, coefficients, covariate } => {
            glm::simulate_binary_regression(*link, *coefficients, n, *covariate, rng)
        }
        DataSource::SelectionDesign { beta, sigma } => glm::simulate_selection_design(n, beta, *sigma, rng),
        DataSource::Cohort { truth, censoring_rate } => {
            let mut design = CohortDesign::new(*truth, n);
            design.censoring_rate = *censoring_rate;
            survival::simulate_cohort(&design, rng)
        }
        DataSource::File { path, schema } => ingest_csv(path, *schema),
    }
}

fn parse_field(raw: &str, line: usize, column: &str) -> Result<f64> {
    raw.trim().parse::<f64>().map_err(|_| Error::Parse { line, message: format!("{column}: cannot parse {raw:?}") })
}

fn parse_flag(raw: &str, line: usize, column: &str) -> Result<bool> {
    match raw.trim() {
        "1" | "true" | "Yes" | "yes" => Ok(true),
        "0" | "false" | "No" | "no" => Ok(false),
        other => Err(Error::Parse { line, message: format!("{column}: expected 0/1, got {other:?}") }),
    }
}

/// Reads a dataset. Schemas:
///
/// * `iid`: column `y`;
/// * `binary-regression`: response `y` (0/1) or `type` (Yes/No), every
///   other column a covariate; an intercept column is prepended;
/// * `linear-regression`: response `y`, covariates as above;
/// * `survival`: `time` (> 0, transformed to `-log(time)`) or `y` (already
///   on that scale), plus `censored` (0/1).
fn with_path(e: std::io::Error, path: &Path) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

pub fn ingest_csv(path: &Path, schema: Schema) -> Result<Dataset> {
    let file = fs::File::open(path).map_err(|e| with_path(e, path))?;
    read_csv(file, schema)
}

pub fn read_csv<R: std::io::Read>(input: R, schema: Schema) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let records: Vec<csv::StringRecord> = reader.records().collect::<std::result::Result<_, _>>()?;
    // header is line 1
    let line_of = |r: usize| r + 2;
    match schema {
        Schema::Iid => {
            let col = find("y").ok_or_else(|| Error::Parse { line: 1, message: "missing column y".into() })?;
            let y = records
                .iter()
                .enumerate()
                .map(|(r, rec)| parse_field(&rec[col], line_of(r), "y"))
                .collect::<Result<Vec<_>>>()?;
            Ok(Dataset::iid(y))
        }
        Schema::BinaryRegression | Schema::LinearRegression => {
            let (response, binary_text) = match (find("y"), find("type")) {
                (Some(c), _) => (c, false),
                (None, Some(c)) if schema == Schema::BinaryRegression => (c, true),
                _ => return Err(Error::Parse { line: 1, message: "missing response column".into() }),
            };
            let covariates: Vec<usize> = (0..headers.len()).filter(|c| *c != response).collect();
            let n = records.len();
            let mut x = DMatrix::from_element(n, covariates.len() + 1, 1.0);
            let mut y = Vec::with_capacity(n);
            for (r, rec) in records.iter().enumerate() {
                let line = line_of(r);
                let v = if binary_text || schema == Schema::BinaryRegression {
                    if parse_flag(&rec[response], line, &headers[response])? {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    parse_field(&rec[response], line, &headers[response])?
                };
                y.push(v);
                for (q, &c) in covariates.iter().enumerate() {
                    x[(r, q + 1)] = parse_field(&rec[c], line, &headers[c])?;
                }
            }
            Dataset::regression(y, x)
        }
        Schema::Survival => {
            let flag = find("censored")
                .ok_or_else(|| Error::Parse { line: 1, message: "missing column censored".into() })?;
            let (col, is_time) = match (find("time"), find("y")) {
                (Some(c), _) => (c, true),
                (None, Some(c)) => (c, false),
                _ => return Err(Error::Parse { line: 1, message: "missing column time or y".into() }),
            };
            let mut y = Vec::with_capacity(records.len());
            let mut censored = Vec::with_capacity(records.len());
            for (r, rec) in records.iter().enumerate() {
                let line = line_of(r);
                let v = parse_field(&rec[col], line, &headers[col])?;
                if is_time && !(v > 0.0) {
                    return Err(Error::Parse { line, message: format!("time {v} must be positive") });
                }
                y.push(if is_time { -v.ln() } else { v });
                censored.push(parse_flag(&rec[flag], line, "censored")?);
            }
            Dataset::censored(y, censored)
        }
    }
}

/// Writes a dataset in the layout [`read_csv`] expects. Survival data is
/// written on the transformed scale (column `y`).
pub fn write_dataset_csv<W: Write>(data: &Dataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    match (&data.design, &data.censored) {
        (Some(x), _) => {
            let mut header = vec!["y".to_string()];
            header.extend((1..x.ncols()).map(|c| format!("x{c}")));
            w.write_record(&header)?;
            for (i, y) in data.y.iter().enumerate() {
                let mut row = vec![y.to_string()];
                row.extend((1..x.ncols()).map(|c| x[(i, c)].to_string()));
                w.write_record(&row)?;
            }
        }
        (None, Some(flags)) => {
            w.write_record(["y", "censored"])?;
            for (y, c) in data.y.iter().zip(flags) {
                w.write_record([y.to_string(), if *c { "1".into() } else { "0".into() }])?;
            }
        }
        (None, None) => {
            w.write_record(["y"])?;
            for y in &data.y {
                w.write_record([y.to_string()])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory, so readers never see a partial file.
pub fn write_atomically(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Summary of one sampler run on one dataset.
#[derive(Debug, Clone, Serialize)]
pub struct CellOutcome {
    pub summary: PosteriorSummary,
    /// Weight index reported as `α`.
    pub component: usize,
    pub oracle: Option<BayesFactorResult>,
}

impl CellOutcome {
    pub fn alpha_median(&self) -> f64 {
        self.summary.weights[self.component].median
    }

    pub fn alpha_mean(&self) -> f64 {
        self.summary.weights[self.component].mean
    }
}

/// Closed-form posterior probability of the first model, when the data
/// admit one.
pub fn pair_oracle(pair: PairKind, data: &Dataset) -> Option<BayesFactorResult> {
    match pair {
        PairKind::PoissonVsGeometric => oracles::bf_poisson_geometric(&data.y).ok(),
        PairKind::NormalVar1VsVar2 => oracles::bf_normal_var(&data.y).ok(),
        PairKind::NormalVsLaplace => oracles::bf_normal_laplace(&data.y).ok(),
        PairKind::PointNullMean => oracles::bf_point_null_mean(&data.y).ok(),
    }
}

/// Runs the configured test on one dataset.
pub fn run_cell(
    test: TestKind,
    data: &Dataset,
    a0: f64,
    chain: &ChainConfig,
    g: Option<f64>,
    oracle: bool,
) -> Result<CellOutcome> {
    let component = test.reported_component();
    let (summary, oracle_result) = match test {
        TestKind::Pair { pair } => {
            let spec = build_pair(pair, a0)?;
            spec.check_propriety(data)?;
            let proposal = pair.proposal(data)?;
            let summary = summarize(&run_mh(&spec, data, chain, proposal.as_ref())?)?;
            (summary, if oracle { pair_oracle(pair, data) } else { None })
        }
        TestKind::LogitProbit => (glm::run_logit_probit(data, a0, chain)?.summary, None),
        TestKind::Regression { case } => {
            let g = g.unwrap_or(data.len() as f64);
            let mix = glm::build_regression_mixture(data, a0, case, g, None)?;
            let trace = glm::run_regression_mixture(&mix, data, chain)?;
            let oracle_result = if oracle && data.len() > 0 {
                let probs = glm::gprior_model_posterior(data, &mix.models, g)?;
                let p = probs[component];
                Some(BayesFactorResult { log_bf: (p / (1.0 - p)).ln(), posterior_prob_m1: p })
            } else {
                None
            };
            (summarize(&trace)?, oracle_result)
        }
        TestKind::Survival => (survival::run_survival_test(data, a0, chain)?.summary, None),
    };
    Ok(CellOutcome { summary, component, oracle: oracle_result })
}

/// Per-cell digest of the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DigestEntry {
    pub a0: f64,
    pub n: usize,
    pub estimator: Estimator,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub errors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentDigest {
    pub schema_version: u32,
    pub test: String,
    pub cells: Vec<DigestEntry>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    pub digest: ExperimentDigest,
}

/// Seed of cell `(a0 index, n index, replica)`.
pub fn cell_seed(base: u64, a0_index: usize, n_index: usize, replica: usize) -> u64 {
    derive_seed(base, &[a0_index as u64, n_index as u64, replica as u64])
}

fn cell_rows(config: &ExperimentConfig, ai: usize, ni: usize, r: usize) -> Vec<ResultRow> {
    let a0 = config.a0_grid[ai];
    let n = config.n_grid[ni];
    let seed = cell_seed(config.seed, ai, ni, r);
    let start = Instant::now();
    let outcome = simulate_dataset(&config.data_source, n, derive_seed(seed, &[0])).and_then(|data| {
        let chain = ChainConfig { seed: derive_seed(seed, &[1]), ..config.chain.clone() };
        let n_actual = data.len();
        run_cell(config.test, &data, a0, &chain, config.g, config.oracle).map(|o| (o, n_actual))
    });
    let runtime_ms = start.elapsed().as_millis();
    let row = |estimator, value, n, error| ResultRow {
        test: config.test.name(),
        a0,
        n,
        replica: r,
        estimator,
        value,
        runtime_ms,
        seed,
        error,
    };
    match outcome {
        Ok((o, n_actual)) => {
            let mut rows = vec![
                row(Estimator::PostMedianAlpha, o.alpha_median(), n_actual, None),
                row(Estimator::PostMeanAlpha, o.alpha_mean(), n_actual, None),
            ];
            if let Some(b) = o.oracle {
                rows.push(row(Estimator::BfPostProb, b.posterior_prob_m1, n_actual, None));
            }
            rows
        }
        Err(e) => vec![row(Estimator::PostMedianAlpha, f64::NAN, n, Some(format!("{}: {e}", e.kind())))],
    }
}

/// Runs every grid cell and replica on a bounded worker pool. Failed cells
/// yield a row carrying the error and the sweep continues. Rows are sorted
/// before being returned, so the output does not depend on scheduling.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let mut jobs = Vec::new();
    for ai in 0..config.a0_grid.len() {
        for ni in 0..config.n_grid.len() {
            for r in 0..config.replicas {
                jobs.push((ai, ni, r));
            }
        }
    }
    let workers = config
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
        .clamp(1, jobs.len().max(1));
    let next = AtomicUsize::new(0);
    let collected = Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(ai, ni, r)) = jobs.get(i) else {
                    break;
                };
                let rows = cell_rows(config, ai, ni, r);
                collected.lock().expect("no worker panicked while holding the lock").extend(rows);
            });
        }
    });
    let mut rows = collected.into_inner().expect("workers finished");
    rows.sort_by(|a, b| {
        a.a0.total_cmp(&b.a0)
            .then(a.n.cmp(&b.n))
            .then(a.replica.cmp(&b.replica))
            .then(a.estimator.cmp(&b.estimator))
    });
    let digest = digest(config, &rows);
    Ok(ExperimentOutput { rows, digest })
}

fn digest(config: &ExperimentConfig, rows: &[ResultRow]) -> ExperimentDigest {
    let mut cells: Vec<DigestEntry> = Vec::new();
    for row in rows {
        let entry = match cells
            .iter_mut()
            .find(|c| c.a0 == row.a0 && c.n == row.n && c.estimator == row.estimator)
        {
            Some(e) => e,
            None => {
                cells.push(DigestEntry {
                    a0: row.a0,
                    n: row.n,
                    estimator: row.estimator,
                    mean: 0.0,
                    min: f64::INFINITY,
                    max: f64::NEG_INFINITY,
                    count: 0,
                    errors: 0,
                });
                cells.last_mut().expect("just pushed")
            }
        };
        if row.error.is_some() {
            entry.errors += 1;
        } else {
            entry.count += 1;
            entry.mean += row.value;
            entry.min = entry.min.min(row.value);
            entry.max = entry.max.max(row.value);
        }
    }
    for c in &mut cells {
        if c.count > 0 {
            c.mean /= c.count as f64;
        } else {
            (c.mean, c.min, c.max) = (f64::NAN, f64::NAN, f64::NAN);
        }
    }
    ExperimentDigest { schema_version: SCHEMA_VERSION, test: config.test.name(), cells }
}

/// Results CSV bytes (deterministic for a given configuration).
pub fn results_csv(rows: &[ResultRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Writes `results.csv`, `timings.csv` and `digest.json` under `dir`.
pub fn write_outputs(dir: &Path, output: &ExperimentOutput) -> Result<()> {
    write_atomically(&dir.join("results.csv"), &results_csv(&output.rows)?)?;
    let mut timings = csv::Writer::from_writer(Vec::new());
    timings.write_record(["test", "a0", "n", "replica", "runtime_ms"])?;
    let mut seen = std::collections::BTreeSet::new();
    for r in &output.rows {
        if seen.insert((r.a0.to_bits(), r.n, r.replica)) {
            timings.write_record([
                r.test.clone(),
                r.a0.to_string(),
                r.n.to_string(),
                r.replica.to_string(),
                r.runtime_ms.to_string(),
            ])?;
        }
    }
    write_atomically(&dir.join("timings.csv"), &timings.into_inner().map_err(|e| Error::Io(e.into_error()))?)?;
    write_atomically(&dir.join("digest.json"), &serde_json::to_vec_pretty(&output.digest)?)?;
    Ok(())
}

/// `count` log-spaced integers from `lo` to `hi`, deduplicated.
pub fn log_spaced_grid(lo: usize, hi: usize, count: usize) -> Vec<usize> {
    if count <= 1 || lo >= hi {
        return vec![hi.max(lo)];
    }
    let (a, b) = ((lo.max(1) as f64).ln(), (hi as f64).ln());
    let mut grid: Vec<usize> =
        (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp().round() as usize).collect();
    grid.dedup();
    grid
}

/// One row of the consistency table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyRow {
    pub n: usize,
    pub replicas: usize,
    /// Quartiles and mean of `|median(α) - α*|` over replicas.
    pub gap_q25: f64,
    pub gap_median: f64,
    pub gap_q75: f64,
    pub gap_mean: f64,
    /// Mean over replicas of `log(n) · log|α* - E[α|x]|`.
    pub log_n_log_mean_gap: f64,
    /// Mean over replicas of `log|α* - P(M₁|x)|`, when a classical answer
    /// exists.
    pub log_bf_gap: Option<f64>,
}

/// Simulates from component `true_component` of `pair` (at its default
/// parameters) for each `n` and tabulates how fast the weight of the first
/// component approaches its true value `α*` (1 or 0).
pub fn consistency_harness(
    pair: PairKind,
    true_component: usize,
    n_grid: &[usize],
    replicas: usize,
    a0: f64,
    chain: &ChainConfig,
) -> Result<Vec<ConsistencyRow>> {
    if n_grid.is_empty() || replicas == 0 {
        return Err(Error::Validation("need a non-empty n grid and at least one replica".into()));
    }
    let spec = build_pair(pair, a0)?;
    if true_component >= spec.k() {
        return Err(Error::Contract(format!("component {true_component} outside 0..{}", spec.k())));
    }
    let truth = spec.components[true_component].resolve(&pair.default_globals())?;
    let alpha_star = if true_component == 0 { 1.0 } else { 0.0 };
    n_grid
        .iter()
        .enumerate()
        .map(|(ni, &n)| {
            let mut gaps = Vec::with_capacity(replicas);
            let mut scaled = 0.0;
            let mut bf_total = 0.0;
            let mut bf_count = 0;
            for r in 0..replicas {
                let seed = derive_seed(chain.seed, &[true_component as u64, ni as u64, r as u64]);
                let mut rng = chain_rng(derive_seed(seed, &[0]));
                let data = Dataset::iid((0..n).map(|_| truth.sample_one(&mut rng)).collect());
                let cfg = ChainConfig { seed: derive_seed(seed, &[1]), ..chain.clone() };
                let proposal = pair.proposal(&data)?;
                let summary = summarize(&run_mh(&spec, &data, &cfg, proposal.as_ref())?)?;
                gaps.push((summary.alpha_median() - alpha_star).abs());
                scaled += (n as f64).ln() * (alpha_star - summary.alpha_mean()).abs().ln();
                if let Some(b) = pair_oracle(pair, &data) {
                    bf_total += (alpha_star - b.posterior_prob_m1).abs().ln();
                    bf_count += 1;
                }
            }
            let mean_gap = gaps.iter().sum::<f64>() / replicas as f64;
            gaps.sort_by(f64::total_cmp);
            Ok(ConsistencyRow {
                n,
                replicas,
                gap_q25: quantile_sorted(&gaps, 0.25),
                gap_median: quantile_sorted(&gaps, 0.5),
                gap_q75: quantile_sorted(&gaps, 0.75),
                gap_mean: mean_gap,
                log_n_log_mean_gap: scaled / replicas as f64,
                log_bf_gap: (bf_count > 0).then(|| bf_total / bf_count as f64),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> ExperimentConfig {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            test: TestKind::Pair { pair: PairKind::NormalVar1VsVar2 },
            data_source: DataSource::Simulate { family: Family::Normal, params: vec![0.0, 1.0] },
            a0_grid: vec![0.5],
            n_grid: vec![20],
            replicas: 2,
            chain: ChainConfig::with_iterations(200, 0),
            outputs: PathBuf::from("out"),
            seed: 7,
            oracle: true,
            g: None,
            workers: Some(1),
        }
    }

    #[test]
    fn empty_grid_rejected() {
        let mut c = config();
        c.n_grid.clear();
        assert!(matches!(run_experiment(&c), Err(Error::Validation(_))));
        let mut c = config();
        c.replicas = 0;
        assert!(matches!(c.validate(), Err(Error::Validation(_))));
    }

    #[test]
    fn config_json_round_trip() {
        let c = config();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), c);
        let mut bad: serde_json::Value = serde_json::from_str(&text).unwrap();
        bad["schema_version"] = 99.into();
        assert!(ExperimentConfig::from_json(&bad.to_string()).is_err());
    }

    #[test]
    fn log_grid() {
        let g = log_spaced_grid(1, 1000, 20);
        assert_eq!(g[0], 1);
        assert_eq!(*g.last().unwrap(), 1000);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn survival_csv_nonpositive_time() {
        let text = "time,censored\n1.5,0\n0,1\n";
        match read_csv(text.as_bytes(), Schema::Survival) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn failed_cell_is_recorded() {
        let mut c = config();
        c.test = TestKind::Pair { pair: PairKind::PoissonVsGeometric };
        c.data_source = DataSource::Simulate { family: Family::Poisson, params: vec![1e-9] };
        let out = run_experiment(&c).unwrap();
        assert!(out.rows.iter().all(|r| r.error.is_some()));
        assert_eq!(out.digest.cells[0].errors, 2);
    }
}
