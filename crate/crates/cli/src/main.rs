use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use drebo::bench::{self, simple_regret};
use drebo::pool::{load_pool_csv, PoolCsvOptions};
use drebo::study::{execute, run_study, write_trace, Problem, StudySpec, SweepParam};
use drebo::{BetaMode, Classifier, RunConfig, RunConfigPatch, SamplerKind, Scenario};

/// Density-ratio Bayesian optimization with graph semi-supervised classifiers.
#[derive(Parser)]
#[command(name = "drebo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one optimization and write its trace as CSV.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        problem: ProblemArgs,
        /// Trace file; stdout when absent.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Sweep one parameter over repeated seeded runs.
    Study {
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        problem: ProblemArgs,
        /// Parameter to sweep: beta, n_unlabeled, sampler, pool_subset or zeta.
        #[arg(long)]
        sweep: SweepParam,
        /// Comma-separated sweep values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        /// Runs per value, seeded seed, seed+1, ...
        #[arg(long, default_value_t = 20)]
        repeats: usize,
        /// Directory for traces and the aggregate table.
        #[arg(long)]
        output: PathBuf,
    },
    /// Check a pool CSV (features then objective) and summarize it.
    ImportPool {
        csv: PathBuf,
        /// Treat the objective column as a score to maximize.
        #[arg(long)]
        maximize: bool,
    },
    /// List the built-in benchmarks.
    ListBenchmarks,
}

/// Run settings. Precedence: flag, then `--config` file, then defaults.
#[derive(Args)]
struct ConfigArgs {
    /// TOML file with any subset of the run settings.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    zeta: Option<f64>,
    #[arg(long)]
    scenario: Option<Scenario>,
    #[arg(long)]
    classifier: Option<Classifier>,
    #[arg(long)]
    n_unlabeled: Option<usize>,
    #[arg(long)]
    pool_subset: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// `learned` or a positive number.
    #[arg(long)]
    beta: Option<BetaMode>,
    #[arg(long)]
    max_prop_iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    n_starts: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    n_init: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    sampler: Option<SamplerKind>,
    #[arg(long)]
    sampler_std: Option<f64>,
    #[arg(long)]
    tie_tol: Option<f64>,
    #[arg(long)]
    record_timing: Option<bool>,
}

#[derive(Args)]
struct ProblemArgs {
    /// Benchmark name (see `list-benchmarks`); branin when neither this nor --pool-csv is given.
    #[arg(long)]
    benchmark: Option<String>,
    /// Restrict the benchmark to this many uniform candidates (pool scenario).
    #[arg(long, conflicts_with = "pool_csv")]
    pool_size: Option<usize>,
    /// Pool CSV with features then objective (pool scenario).
    #[arg(long, conflicts_with = "benchmark")]
    pool_csv: Option<PathBuf>,
    /// Maximize the pool CSV objective instead of minimizing it.
    #[arg(long, requires = "pool_csv")]
    maximize: bool,
}

impl ConfigArgs {
    fn patch(&self) -> RunConfigPatch {
        RunConfigPatch {
            zeta: self.zeta,
            scenario: self.scenario,
            classifier: self.classifier,
            n_unlabeled: self.n_unlabeled,
            pool_subset: self.pool_subset,
            alpha: self.alpha,
            beta: self.beta,
            max_prop_iters: self.max_prop_iters,
            tol: self.tol,
            n_starts: self.n_starts,
            iterations: self.iterations,
            n_init: self.n_init,
            seed: self.seed,
            sampler: self.sampler,
            sampler_std: self.sampler_std,
            tie_tol: self.tie_tol,
            record_timing: self.record_timing,
        }
    }

    /// Resolved config and the scenario the user asked for, if any.
    fn resolve(&self) -> Result<(RunConfig, Option<Scenario>)> {
        let mut config = RunConfig::default();
        let mut scenario = None;
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let file = RunConfigPatch::from_toml_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            scenario = file.scenario;
            file.apply_to(&mut config);
        }
        let flags = self.patch();
        scenario = flags.scenario.or(scenario);
        flags.apply_to(&mut config);
        Ok((config, scenario))
    }
}

impl ProblemArgs {
    fn resolve(&self, requested: Option<Scenario>) -> Result<Problem> {
        let problem = if let Some(path) = &self.pool_csv {
            let options = PoolCsvOptions {
                space: None,
                maximize: self.maximize,
            };
            Problem::Pool(load_pool_csv(path, &options)?)
        } else {
            let benchmark = bench::benchmark(self.benchmark.as_deref().unwrap_or("branin"))?;
            match self.pool_size {
                Some(size) => Problem::BenchmarkPool { benchmark, size },
                None => Problem::Benchmark(benchmark),
            }
        };
        match requested {
            Some(Scenario::Pool) if problem.scenario() == Scenario::Sampling => {
                bail!("scenario `pool` needs --pool-size or --pool-csv")
            }
            Some(Scenario::Sampling) if problem.scenario() == Scenario::Pool => {
                bail!("scenario `sampling` cannot be combined with --pool-size or --pool-csv")
            }
            _ => Ok(problem),
        }
    }
}

fn run_one(config: ConfigArgs, problem: ProblemArgs, output: Option<PathBuf>) -> Result<()> {
    let (mut config, requested) = config.resolve()?;
    let problem = problem.resolve(requested)?;
    config.scenario = problem.scenario();
    config.validate()?;
    let record = execute(&config, &problem)?;
    match &output {
        Some(path) => {
            drebo::study::emit_trace(&record, path)?;
            info!("trace written to {}", path.display());
        }
        None => write_trace(&record, io::stdout().lock())?,
    }
    let best = record.best().context("run produced no evaluations")?;
    let regret = simple_regret(&record.values(), problem.f_star())?;
    eprintln!("best value {:.10e} at {:?}, simple regret {regret:.6e}", best.value, best.point);
    Ok(())
}

fn study(
    config: ConfigArgs,
    problem: ProblemArgs,
    sweep: SweepParam,
    values: Vec<String>,
    repeats: usize,
    output: PathBuf,
) -> Result<()> {
    let (base, requested) = config.resolve()?;
    let spec = StudySpec {
        problem: problem.resolve(requested)?,
        base,
        sweep,
        values,
        repeats,
        output,
    };
    let outcome = run_study(&spec)?;
    let last = spec.base.n_init + spec.base.iterations - 1;
    for row in outcome.aggregate.iter().filter(|r| r.iteration == last) {
        let stderr = row.stderr_regret.map_or_else(|| "n/a".to_owned(), |s| format!("{s:.6e}"));
        eprintln!(
            "{}={}: final regret {:.6e} ± {stderr} over {} runs",
            spec.sweep, row.sweep_value, row.mean_regret, row.count
        );
    }
    if !outcome.failures.is_empty() {
        eprintln!("{} runs failed, see {}", outcome.failures.len(), spec.output.join("failures.csv").display());
    }
    Ok(())
}

fn import_pool(path: &Path, maximize: bool) -> Result<()> {
    let options = PoolCsvOptions { space: None, maximize };
    let pool = load_pool_csv(path, &options)?;
    println!("candidates: {}", pool.pool.len());
    println!("dimensions: {}", pool.dims());
    for (k, name) in pool.feature_names.iter().enumerate() {
        println!("  {name}: [{}, {}]", pool.space.lower()[k], pool.space.upper()[k]);
    }
    let best = pool.best_value();
    println!("best objective: {}", if maximize { -best } else { best });
    Ok(())
}

fn list_benchmarks() {
    println!("{:<14} {:>4}  {:<30} {:>20}", "name", "dims", "box", "optimum");
    for b in bench::benchmarks() {
        let space = b.space();
        let bounds: Vec<String> = (0..space.dims())
            .map(|k| format!("[{}, {}]", space.lower()[k], space.upper()[k]))
            .collect();
        println!(
            "{:<14} {:>4}  {:<30} {:>20.15}",
            b.name(),
            space.dims(),
            bounds.join(" x "),
            b.known_optimum_value()
        );
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, problem, output } => run_one(config, problem, output),
        Command::Study {
            config,
            problem,
            sweep,
            values,
            repeats,
            output,
        } => study(config, problem, sweep, values, repeats, output),
        Command::ImportPool { csv, maximize } => import_pool(&csv, maximize),
        Command::ListBenchmarks => {
            list_benchmarks();
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
