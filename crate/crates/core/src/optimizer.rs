//! The optimization loop and its baselines.
//!
//! Random draws come from one stream per run, in this order:
//!
//! 1. initial design, one uniform point (or one pool pick) per evaluation;
//! 2. per iteration, the unlabeled set (truncated normal or uniform draws, or
//!    the pool subset), then the multi-start positions, then one tie-break
//!    draw; cold-start and random-search iterations draw a single point or
//!    pool pick instead.
//!
//! Halton and Sobol' unlabeled sets are deterministic and draw nothing.

use std::time::Instant;

use log::{debug, info};
use rand::Rng;

use crate::acquisition::{assign_labels, compute_threshold, maximize_continuous, maximize_pool, Query};
use crate::bench::Benchmark;
use crate::config::{make_rng, BetaMode, Classifier, RunConfig, RunRng, SamplerKind, Scenario};
use crate::data::{History, PoolSet};
use crate::error::{Error, Result};
use crate::graph::SimilarityGraph;
use crate::pool::PoolObjective;
use crate::sampling::{halton, sample_unlabeled, sample_uniform, sobol, subsample_indices, uniform_point};
use crate::space::SearchSpace;
use crate::ssl::{learn_beta, propagate, BetaSearch, InductiveModel, Method, PropagationSettings};

/// Something to minimize.
pub trait Objective: Sync {
    fn evaluate(&self, x: &[f64]) -> Result<f64>;

    /// Evaluates pool candidate `index`, whose coordinates are `x`.
    fn evaluate_candidate(&self, index: usize, x: &[f64]) -> Result<f64> {
        let _ = index;
        self.evaluate(x)
    }
}

impl Objective for Benchmark {
    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        Benchmark::evaluate(self, x)
    }
}

impl Objective for PoolObjective {
    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.lookup(x)
            .ok_or_else(|| Error::InvalidArgument(format!("{x:?} is not a pool candidate")))
    }

    fn evaluate_candidate(&self, index: usize, _x: &[f64]) -> Result<f64> {
        Ok(self.value_of(index))
    }
}

/// Adapts a closure into an [`Objective`].
pub struct FnObjective<F>(pub F);

impl<F: Fn(&[f64]) -> f64 + Sync> Objective for FnObjective<F> {
    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        Ok((self.0)(x))
    }
}

/// One objective evaluation and the state that produced its query.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub point: Vec<f64>,
    pub value: f64,
    pub pool_index: Option<usize>,
    /// Threshold in force when the query was chosen; `None` for the initial design.
    pub y_dagger: Option<f64>,
    /// Kernel width used for the query; `None` when no graph was built.
    pub beta: Option<f64>,
    pub flat_landscape: bool,
    /// Wall-clock seconds for the whole iteration, when timing is on.
    pub duration_s: Option<f64>,
    /// Wall-clock seconds spent on the graph and label propagation, when timing is on.
    pub propagation_s: Option<f64>,
}

impl Evaluation {
    fn initial(point: Vec<f64>, value: f64, pool_index: Option<usize>) -> Self {
        Self {
            point,
            value,
            pool_index,
            y_dagger: None,
            beta: None,
            flat_landscape: false,
            duration_s: None,
            propagation_s: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub config: RunConfig,
    pub dims: usize,
    pub evaluations: Vec<Evaluation>,
    /// Set when the pool ran out before the budget was spent.
    pub truncated: bool,
}

impl RunRecord {
    pub fn len(&self) -> usize {
        self.evaluations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.evaluations.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.evaluations.iter().map(|e| e.value).collect()
    }

    /// Running minimum of the observed values.
    pub fn best_so_far(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.evaluations
            .iter()
            .map(|e| {
                best = best.min(e.value);
                best
            })
            .collect()
    }

    /// First evaluation attaining the minimum.
    pub fn best(&self) -> Option<&Evaluation> {
        let mut best: Option<&Evaluation> = None;
        for e in &self.evaluations {
            if best.is_none_or(|b| e.value < b.value) {
                best = Some(e);
            }
        }
        best
    }

    pub fn best_value(&self) -> Option<f64> {
        self.best().map(|e| e.value)
    }

    pub fn best_point(&self) -> Option<&[f64]> {
        self.best().map(|e| e.point.as_slice())
    }
}

/// Runs the configured optimizer. `pool` must be given exactly when the scenario is `pool`.
pub fn run(config: &RunConfig, space: &SearchSpace, objective: &dyn Objective, pool: Option<&PoolSet>) -> Result<RunRecord> {
    config.validate()?;
    match (config.scenario, pool) {
        (Scenario::Pool, None) => return Err(Error::InvalidConfig("the pool scenario needs a pool".into())),
        (Scenario::Sampling, Some(_)) => {
            return Err(Error::InvalidConfig("a pool was supplied but the scenario is `sampling`".into()))
        }
        _ => {}
    }
    if let Some(pool) = pool {
        if pool.is_empty() || pool.candidate(0).len() != space.dims() {
            return Err(Error::InvalidArgument("pool dimension does not match the search space".into()));
        }
    }
    let mut state = RunState {
        config,
        space,
        objective,
        pool: pool.cloned(),
        history: History::new(),
        evaluations: Vec::with_capacity(config.n_init + config.iterations),
        rng: make_rng(config.seed),
    };
    let truncated = state.execute()?;
    Ok(RunRecord {
        config: config.clone(),
        dims: space.dims(),
        evaluations: state.evaluations,
        truncated,
    })
}

/// The supervised control: the inductive model over the labeled points alone.
pub fn run_control_nw(
    config: &RunConfig,
    space: &SearchSpace,
    objective: &dyn Objective,
    pool: Option<&PoolSet>,
) -> Result<RunRecord> {
    let mut config = config.clone();
    config.classifier = Classifier::NadarayaWatsonControl;
    run(&config, space, objective, pool)
}

struct RunState<'a> {
    config: &'a RunConfig,
    space: &'a SearchSpace,
    objective: &'a dyn Objective,
    pool: Option<PoolSet>,
    history: History,
    evaluations: Vec<Evaluation>,
    rng: RunRng,
}

/// A chosen query before evaluation.
struct Proposal {
    point: Vec<f64>,
    pool_index: Option<usize>,
    y_dagger: Option<f64>,
    beta: Option<f64>,
    flat_landscape: bool,
    propagation_s: Option<f64>,
}

impl Proposal {
    fn bare(point: Vec<f64>, pool_index: Option<usize>) -> Self {
        Self {
            point,
            pool_index,
            y_dagger: None,
            beta: None,
            flat_landscape: false,
            propagation_s: None,
        }
    }
}

impl RunState<'_> {
    /// Returns whether the pool ran out.
    fn execute(&mut self) -> Result<bool> {
        for _ in 0..self.config.n_init {
            let Some(p) = self.random_proposal() else { return Ok(true) };
            self.record(p, None)?;
        }
        for t in 0..self.config.iterations {
            let started = Instant::now();
            let proposal = match self.propose() {
                Ok(p) => p,
                Err(Error::PoolExhausted) => {
                    info!("pool exhausted after {} evaluations", self.evaluations.len());
                    return Ok(true);
                }
                Err(e) => return Err(e),
            };
            let elapsed = self.config.record_timing.then(|| started.elapsed().as_secs_f64());
            debug!(
                "iteration {t}: y_dagger={:?} beta={:?} flat={}",
                proposal.y_dagger, proposal.beta, proposal.flat_landscape
            );
            self.record(proposal, elapsed)?;
        }
        Ok(false)
    }

    fn record(&mut self, p: Proposal, duration_s: Option<f64>) -> Result<()> {
        let value = match p.pool_index {
            Some(i) => self.objective.evaluate_candidate(i, &p.point)?,
            None => self.objective.evaluate(&p.point)?,
        };
        if value.is_nan() {
            return Err(Error::ObjectiveNan {
                evaluation: self.evaluations.len(),
            });
        }
        if let (Some(pool), Some(i)) = (self.pool.as_mut(), p.pool_index) {
            pool.mark_evaluated(i);
        }
        self.history.push(p.point.clone(), value);
        let mut e = Evaluation::initial(p.point, value, p.pool_index);
        e.y_dagger = p.y_dagger;
        e.beta = p.beta;
        e.flat_landscape = p.flat_landscape;
        e.duration_s = duration_s;
        e.propagation_s = p.propagation_s;
        self.evaluations.push(e);
        Ok(())
    }

    /// Uniform point, or uniform unevaluated candidate; `None` once the pool is empty.
    fn random_proposal(&mut self) -> Option<Proposal> {
        match &self.pool {
            None => Some(Proposal::bare(uniform_point(self.space, &mut self.rng), None)),
            Some(pool) => {
                let open = pool.unevaluated();
                if open.is_empty() {
                    return None;
                }
                let i = open[self.rng.gen_range(0..open.len())];
                Some(Proposal::bare(pool.candidate(i).to_vec(), Some(i)))
            }
        }
    }

    fn propose(&mut self) -> Result<Proposal> {
        let config = self.config;
        if config.classifier == Classifier::RandomSearch {
            return self.random_proposal().ok_or(Error::PoolExhausted);
        }
        let y_dagger = compute_threshold(self.history.values(), config.zeta)?;
        if self.history.len() < 2 {
            let mut p = self.random_proposal().ok_or(Error::PoolExhausted)?;
            p.y_dagger = Some(y_dagger);
            return Ok(p);
        }
        if self.pool.as_ref().is_some_and(|p| p.unevaluated_count() == 0) {
            return Err(Error::PoolExhausted);
        }
        let labels = assign_labels(self.history.values(), y_dagger)?;

        let mut points = self.history.points().to_vec();
        points.extend(self.unlabeled()?);

        let settings = PropagationSettings {
            method: match config.classifier {
                Classifier::LabelSpreading => Method::Spreading { alpha: config.alpha },
                _ => Method::Propagation,
            },
            max_iters: config.max_prop_iters,
            tol: config.tol,
        };
        let started = Instant::now();
        let beta = match config.beta {
            BetaMode::Fixed(b) => b,
            BetaMode::Learned => learn_beta(&points, &labels, &settings, &BetaSearch::default()).beta,
        };
        let graph = SimilarityGraph::build(&points, beta)?;
        let propagated = propagate(&graph, &labels, &settings)?;
        let propagation_s = config.record_timing.then(|| started.elapsed().as_secs_f64());
        let model = InductiveModel::new(&points, &propagated.labels, beta)?;

        let outcome = match &self.pool {
            None => maximize_continuous(&model, self.space, config.n_starts, config.tie_tol, &mut self.rng)?,
            Some(pool) => maximize_pool(&model, pool, config.tie_tol, &mut self.rng)?,
        };
        let (point, pool_index) = match outcome.query {
            Query::Point(x) => (x, None),
            Query::PoolIndex(i) => (self.pool.as_ref().expect("pool query").candidate(i).to_vec(), Some(i)),
        };
        Ok(Proposal {
            point,
            pool_index,
            y_dagger: Some(y_dagger),
            beta: Some(beta),
            flat_landscape: outcome.flat_landscape,
            propagation_s,
        })
    }

    /// Unlabeled points for this iteration; empty for the supervised control.
    fn unlabeled(&mut self) -> Result<Vec<Vec<f64>>> {
        let config = self.config;
        if config.classifier == Classifier::NadarayaWatsonControl {
            return Ok(Vec::new());
        }
        if let Some(pool) = &self.pool {
            let open = pool.unevaluated();
            let chosen = match config.pool_subset {
                Some(m) => subsample_indices(&open, m, &mut self.rng),
                None => open,
            };
            return Ok(chosen.into_iter().map(|i| pool.candidate(i).to_vec()).collect());
        }
        let n = config.n_unlabeled;
        if n == 0 {
            return Ok(Vec::new());
        }
        match config.sampler {
            SamplerKind::TruncatedNormal => {
                sample_unlabeled(&self.history, self.space, n, config.sampler_std, &mut self.rng)
            }
            SamplerKind::Uniform => Ok(sample_uniform(self.space, n, &mut self.rng)),
            SamplerKind::Halton => Ok(halton(self.space, n)),
            SamplerKind::Sobol => sobol(self.space, n),
        }
    }
}
