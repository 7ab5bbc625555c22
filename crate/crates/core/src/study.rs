//! Repeated seeded runs over one swept parameter, with CSV output.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::{info, warn};
use rayon::prelude::*;

use crate::bench::{regret_trace, Benchmark};
use crate::config::{make_setup_rng, BetaMode, RunConfig, SamplerKind, Scenario};
use crate::data::PoolSet;
use crate::error::{Error, Result};
use crate::optimizer::{run, RunRecord};
use crate::pool::PoolObjective;
use crate::sampling::sample_uniform;

/// What a run optimizes.
#[derive(Debug, Clone)]
pub enum Problem {
    /// Benchmark over its box (sampling scenario).
    Benchmark(Benchmark),
    /// Benchmark restricted to `size` uniform candidates drawn from the run's setup stream.
    BenchmarkPool { benchmark: Benchmark, size: usize },
    /// Pool with tabulated values; regret is measured against the pool's best value.
    Pool(PoolObjective),
}

impl Problem {
    pub fn scenario(&self) -> Scenario {
        match self {
            Problem::Benchmark(_) => Scenario::Sampling,
            _ => Scenario::Pool,
        }
    }

    /// Reference value for simple regret.
    pub fn f_star(&self) -> f64 {
        match self {
            Problem::Benchmark(b) | Problem::BenchmarkPool { benchmark: b, .. } => b.known_optimum_value(),
            Problem::Pool(p) => p.best_value(),
        }
    }

    pub fn dims(&self) -> usize {
        match self {
            Problem::Benchmark(b) | Problem::BenchmarkPool { benchmark: b, .. } => b.space().dims(),
            Problem::Pool(p) => p.dims(),
        }
    }

    /// Candidate set a benchmark pool run with this seed uses.
    pub fn benchmark_pool(benchmark: &Benchmark, size: usize, seed: u64) -> Result<PoolSet> {
        let mut rng = make_setup_rng(seed);
        PoolSet::new(benchmark.space(), sample_uniform(benchmark.space(), size, &mut rng))
    }
}

/// Runs `config` on `problem`; the scenario is taken from the problem.
pub fn execute(config: &RunConfig, problem: &Problem) -> Result<RunRecord> {
    let mut config = config.clone();
    config.scenario = problem.scenario();
    match problem {
        Problem::Benchmark(b) => run(&config, b.space(), b, None),
        Problem::BenchmarkPool { benchmark, size } => {
            let pool = Problem::benchmark_pool(benchmark, *size, config.seed)?;
            run(&config, benchmark.space(), benchmark, Some(&pool))
        }
        Problem::Pool(p) => run(&config, &p.space, p, Some(&p.pool)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Beta,
    NUnlabeled,
    SamplerKind,
    PoolSubset,
    Zeta,
}

impl SweepParam {
    pub const ALL: &'static [SweepParam] = &[
        SweepParam::Beta,
        SweepParam::NUnlabeled,
        SweepParam::SamplerKind,
        SweepParam::PoolSubset,
        SweepParam::Zeta,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::Beta => "beta",
            SweepParam::NUnlabeled => "n_unlabeled",
            SweepParam::SamplerKind => "sampler",
            SweepParam::PoolSubset => "pool_subset",
            SweepParam::Zeta => "zeta",
        }
    }

    /// Sets this parameter of `config` from its text form.
    pub fn apply(self, value: &str, config: &mut RunConfig) -> Result<()> {
        let bad = |e: String| Error::InvalidConfig(format!("{}: {e}", self.as_str()));
        match self {
            SweepParam::Beta => config.beta = value.parse::<BetaMode>().map_err(|e| bad(e.to_string()))?,
            SweepParam::NUnlabeled => config.n_unlabeled = value.parse().map_err(|e| bad(format!("{e}")))?,
            SweepParam::SamplerKind => {
                config.sampler = value.parse::<SamplerKind>().map_err(|e| bad(e.to_string()))?
            }
            SweepParam::PoolSubset => config.pool_subset = Some(value.parse().map_err(|e| bad(format!("{e}")))?),
            SweepParam::Zeta => config.zeta = value.parse().map_err(|e| bad(format!("{e}")))?,
        }
        Ok(())
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase().replace('-', "_");
        let alias = match s.as_str() {
            "sampler_kind" => "sampler",
            other => other,
        };
        SweepParam::ALL
            .iter()
            .copied()
            .find(|p| p.as_str() == alias)
            .ok_or_else(|| {
                let names: Vec<_> = SweepParam::ALL.iter().map(|p| p.as_str()).collect();
                Error::InvalidConfig(format!("unknown sweep parameter `{s}` (expected one of {})", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone)]
pub struct StudySpec {
    pub base: RunConfig,
    pub problem: Problem,
    pub sweep: SweepParam,
    pub values: Vec<String>,
    /// Seeds `base.seed .. base.seed + repeats`.
    pub repeats: usize,
    pub output: PathBuf,
}

impl StudySpec {
    pub fn validate(&self) -> Result<()> {
        if self.repeats < 2 {
            return Err(Error::InvalidConfig("a study needs at least 2 repeats".into()));
        }
        if self.values.is_empty() {
            return Err(Error::InvalidConfig("a study needs at least one sweep value".into()));
        }
        for v in &self.values {
            self.config_for(v, 0)?;
        }
        Ok(())
    }

    /// Config of repeat `i` at sweep value `value`.
    pub fn config_for(&self, value: &str, i: usize) -> Result<RunConfig> {
        let mut config = self.base.clone();
        self.sweep.apply(value, &mut config)?;
        config.seed = self.base.seed.saturating_add(i as u64);
        config.scenario = self.problem.scenario();
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub sweep_value: String,
    pub iteration: usize,
    pub mean_regret: f64,
    /// Sample standard deviation over `sqrt(count)`; `None` below two runs.
    pub stderr_regret: Option<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunFailure {
    pub sweep_value: String,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct StudyOutcome {
    pub aggregate: Vec<AggregateRow>,
    pub failures: Vec<RunFailure>,
    /// Completed records per sweep value, in seed order.
    pub records: Vec<(String, Vec<RunRecord>)>,
}

/// Runs every (value, seed) pair and writes traces, `aggregate.csv` and `failures.csv` under `spec.output`.
pub fn run_study(spec: &StudySpec) -> Result<StudyOutcome> {
    spec.validate()?;
    let jobs: Vec<(usize, usize)> = (0..spec.values.len())
        .flat_map(|v| (0..spec.repeats).map(move |i| (v, i)))
        .collect();
    let results: Vec<Result<RunRecord>> = jobs
        .par_iter()
        .map(|&(v, i)| {
            let config = spec.config_for(&spec.values[v], i)?;
            execute(&config, &spec.problem)
        })
        .collect();

    fs::create_dir_all(spec.output.join("runs"))?;
    fs::write(spec.output.join("config.toml"), spec.base.to_toml_string()?)?;
    let f_star = spec.problem.f_star();
    let mut failures = Vec::new();
    let mut records: Vec<(String, Vec<RunRecord>)> = spec.values.iter().map(|v| (v.clone(), Vec::new())).collect();
    for (&(v, i), result) in jobs.iter().zip(results) {
        let value = &spec.values[v];
        let seed = spec.base.seed.saturating_add(i as u64);
        match result {
            Ok(record) => {
                let path = spec
                    .output
                    .join("runs")
                    .join(format!("{}={}_seed{}.csv", spec.sweep, sanitize(value), seed));
                emit_trace(&record, &path)?;
                records[v].1.push(record);
            }
            Err(e) => {
                warn!("{}={value}, seed {seed} failed: {e}", spec.sweep);
                failures.push(RunFailure {
                    sweep_value: value.clone(),
                    seed,
                    message: e.to_string(),
                });
            }
        }
    }

    let mut aggregate = Vec::new();
    for (value, recs) in &records {
        let traces: Vec<Vec<f64>> = recs.iter().map(|r| regret_trace(&r.values(), f_star)).collect();
        let len = spec.base.n_init + spec.base.iterations;
        for it in 0..len {
            let column: Vec<f64> = traces.iter().filter_map(|t| t.get(it).copied()).collect();
            aggregate.push(summarize(value, it, &column));
        }
    }
    write_aggregate(&aggregate, &spec.output.join("aggregate.csv"))?;
    write_failures(&failures, &spec.output.join("failures.csv"))?;
    info!(
        "study finished: {} runs, {} failures, output in {}",
        jobs.len(),
        failures.len(),
        spec.output.display()
    );
    Ok(StudyOutcome {
        aggregate,
        failures,
        records,
    })
}

fn sanitize(value: &str) -> String {
    value
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect()
}

fn summarize(value: &str, iteration: usize, column: &[f64]) -> AggregateRow {
    let count = column.len();
    let mean = if count == 0 { f64::NAN } else { column.iter().sum::<f64>() / count as f64 };
    let stderr = (count >= 2).then(|| {
        let var = column.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
        (var / count as f64).sqrt()
    });
    AggregateRow {
        sweep_value: value.to_owned(),
        iteration,
        mean_regret: mean,
        stderr_regret: stderr,
        count,
    }
}

fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_real).unwrap_or_default()
}

fn write_aggregate(rows: &[AggregateRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["sweep_value", "iteration", "mean_regret", "stderr_regret", "count"])?;
    for r in rows {
        w.write_record([
            r.sweep_value.clone(),
            r.iteration.to_string(),
            fmt_real(r.mean_regret),
            fmt_opt(r.stderr_regret),
            r.count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_failures(rows: &[RunFailure], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["sweep_value", "seed", "error"])?;
    for r in rows {
        w.write_record([r.sweep_value.clone(), r.seed.to_string(), r.message.clone()])?;
    }
    w.flush()?;
    Ok(())
}

/// Header of a trace file for `dims` coordinates.
pub fn trace_header(dims: usize) -> Vec<String> {
    let mut h = vec!["iteration".to_owned()];
    h.extend((1..=dims).map(|k| format!("x_{k}")));
    h.extend(
        ["y", "best_so_far", "y_dagger", "beta", "flat_landscape", "duration_s"]
            .iter()
            .map(|s| s.to_string()),
    );
    h
}

/// Writes one row per evaluation. Reals use 17 significant digits; absent values are empty cells.
pub fn write_trace<W: Write>(record: &RunRecord, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(trace_header(record.dims))?;
    for (i, (e, best)) in record.evaluations.iter().zip(record.best_so_far()).enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(e.point.iter().map(|&x| fmt_real(x)));
        row.push(fmt_real(e.value));
        row.push(fmt_real(best));
        row.push(fmt_opt(e.y_dagger));
        row.push(fmt_opt(e.beta));
        row.push(e.flat_landscape.to_string());
        row.push(fmt_opt(e.duration_s));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_trace(record: &RunRecord, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let file = fs::File::create(path)?;
    write_trace(record, std::io::BufWriter::new(file))
}

/// One parsed trace row.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub point: Vec<f64>,
    pub y: f64,
    pub best_so_far: f64,
    pub y_dagger: Option<f64>,
    pub beta: Option<f64>,
    pub flat_landscape: bool,
    pub duration_s: Option<f64>,
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut rdr = csv::Reader::from_path(path)?;
    let header = rdr.headers()?.clone();
    if header.len() < 7 {
        return Err(parse_err(1, "too few columns for a trace".into()));
    }
    let dims = header.len() - 7;
    if header.iter().collect::<Vec<_>>() != trace_header(dims) {
        return Err(parse_err(1, "unexpected trace header".into()));
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let real = |k: usize| -> Result<f64> {
            record[k]
                .parse()
                .map_err(|_| parse_err(line, format!("column {} is not a number", k + 1)))
        };
        let opt = |k: usize| -> Result<Option<f64>> {
            if record[k].is_empty() {
                Ok(None)
            } else {
                real(k).map(Some)
            }
        };
        let iteration = record[0]
            .parse()
            .map_err(|_| parse_err(line, "bad iteration index".into()))?;
        let point = (1..=dims).map(real).collect::<Result<Vec<_>>>()?;
        let flat_landscape = record[dims + 5]
            .parse()
            .map_err(|_| parse_err(line, "flat_landscape must be true or false".into()))?;
        rows.push(TraceRow {
            iteration,
            point,
            y: real(dims + 1)?,
            best_so_far: real(dims + 2)?,
            y_dagger: opt(dims + 3)?,
            beta: opt(dims + 4)?,
            flat_landscape,
            duration_s: opt(dims + 6)?,
        });
    }
    Ok(rows)
}
