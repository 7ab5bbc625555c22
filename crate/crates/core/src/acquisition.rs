//! Thresholding, labeling and maximization of the class-1 probability surface.
//!
//! The acquisition value is the class-1 probability itself; the constant
//! `1 / zeta` prefactor of the density ratio is dropped since it cannot move
//! the argmax.

use rand::Rng;
use rayon::prelude::*;

use crate::data::{ClassLabels, PoolSet};
use crate::error::{Error, Result};
use crate::sampling::uniform_point;
use crate::space::SearchSpace;
use crate::ssl::InductiveModel;

/// Local ascent stops once the projected gradient's max-norm drops below this.
pub const STATIONARITY_TOL: f64 = 1e-6;
/// Local ascent step budget per start.
pub const MAX_ASCENT_STEPS: usize = 200;

const ARMIJO_C: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 40;
/// Below this many starts the ascent runs on the calling thread.
const PARALLEL_STARTS: usize = 64;

/// A surface to be maximized over the box.
pub trait Surface: Sync {
    fn value(&self, x: &[f64]) -> f64;

    /// Value and gradient; the default uses central differences.
    fn value_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let mut probe = x.to_vec();
        for k in 0..x.len() {
            let h = 1e-6 * x[k].abs().max(1.0);
            probe[k] = x[k] + h;
            let up = self.value(&probe);
            probe[k] = x[k] - h;
            let down = self.value(&probe);
            probe[k] = x[k];
            grad[k] = (up - down) / (2.0 * h);
        }
        self.value(x)
    }
}

impl Surface for InductiveModel {
    fn value(&self, x: &[f64]) -> f64 {
        self.class1(x)
    }

    fn value_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        self.class1_with_gradient(x, grad)
    }
}

/// Adapts a closure into a [`Surface`] with finite-difference gradients.
pub struct FnSurface<F>(pub F);

impl<F: Fn(&[f64]) -> f64 + Sync> Surface for FnSurface<F> {
    fn value(&self, x: &[f64]) -> f64 {
        (self.0)(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Query {
    Point(Vec<f64>),
    PoolIndex(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionOutcome {
    pub query: Query,
    /// Surface value at the query.
    pub value: f64,
    pub flat_landscape: bool,
    /// Starts (continuous) or candidates (pool) that were evaluated.
    pub starts_evaluated: usize,
}

/// The `k`-th smallest value with `k = max(1, ceil(zeta * t))`.
pub fn compute_threshold(values: &[f64], zeta: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("threshold of an empty history".into()));
    }
    if !(zeta > 0.0 && zeta < 1.0) {
        return Err(Error::InvalidArgument(format!("zeta must lie in (0, 1), got {zeta}")));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument("NaN in observed values".into()));
    }
    let t = values.len();
    // the epsilon keeps products like 0.33 * 100 from rounding up a whole rank
    let k = ((zeta * t as f64 - 1e-9).ceil() as usize).clamp(1, t);
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    Ok(sorted[k - 1])
}

/// Class 1 is `y <= y_dagger`.
pub fn assign_labels(values: &[f64], y_dagger: f64) -> Result<ClassLabels> {
    let class1: Vec<bool> = values.iter().map(|&y| y <= y_dagger).collect();
    if !class1.iter().any(|&c| c) {
        return Err(Error::InvalidArgument(format!(
            "threshold {y_dagger} lies below every observed value"
        )));
    }
    Ok(ClassLabels::new(class1))
}

/// Terminal state of one local ascent.
#[derive(Debug, Clone, PartialEq)]
pub struct AscentResult {
    pub point: Vec<f64>,
    pub value: f64,
    pub steps: usize,
}

/// Projected gradient ascent with Armijo backtracking from `start`.
///
/// The search direction is the projected gradient scaled to unit max-norm, so
/// step lengths are in coordinate units regardless of how small the surface's
/// slopes are.
pub fn local_ascent<S: Surface + ?Sized>(surface: &S, space: &SearchSpace, start: &[f64]) -> Result<AscentResult> {
    let d = space.dims();
    let mut x = start.to_vec();
    space.clamp(&mut x);
    let mut grad = vec![0.0; d];
    let mut f = surface.value_and_gradient(&x, &mut grad);
    check_finite(f, &x)?;
    let max_width = (0..d).map(|k| space.width(k)).fold(0.0, f64::max);
    let min_step = 1e-12 * max_width;
    let mut step = 0.1 * max_width;
    let mut trial = vec![0.0; d];
    let mut trial_grad = vec![0.0; d];

    let mut steps = 0;
    while steps < MAX_ASCENT_STEPS {
        // drop components that push against an active bound
        for k in 0..d {
            let at_lower = x[k] <= space.lower()[k] && grad[k] < 0.0;
            let at_upper = x[k] >= space.upper()[k] && grad[k] > 0.0;
            if at_lower || at_upper || !grad[k].is_finite() {
                grad[k] = 0.0;
            }
        }
        let norm = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if norm < STATIONARITY_TOL {
            break;
        }

        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            for k in 0..d {
                trial[k] = x[k] + step * grad[k] / norm;
            }
            space.clamp(&mut trial);
            let gain: f64 = (0..d).map(|k| grad[k] * (trial[k] - x[k])).sum();
            let ft = surface.value_and_gradient(&trial, &mut trial_grad);
            check_finite(ft, &trial)?;
            if ft >= f + ARMIJO_C * gain && ft > f {
                accepted = Some(ft);
                break;
            }
            step *= 0.5;
            if step < min_step {
                break;
            }
        }
        let Some(ft) = accepted else { break };
        std::mem::swap(&mut x, &mut trial);
        std::mem::swap(&mut grad, &mut trial_grad);
        f = ft;
        step = (step * 2.0).min(max_width);
        steps += 1;
    }
    Ok(AscentResult { point: x, value: f, steps })
}

fn check_finite(v: f64, x: &[f64]) -> Result<()> {
    if v.is_nan() {
        Err(Error::SurfaceNan { point: x.to_vec() })
    } else {
        Ok(())
    }
}

/// Index among `values` chosen by the tie rule, and whether the landscape is flat.
///
/// Consumes exactly one uniform draw from `rng`.
fn pick<R: Rng + ?Sized>(values: &[f64], tie_tol: f64, rng: &mut R) -> (usize, bool) {
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let worst = values.iter().copied().fold(f64::INFINITY, f64::min);
    let flat = best - worst <= tie_tol;
    let tied: Vec<usize> = (0..values.len()).filter(|&i| best - values[i] <= tie_tol).collect();
    let u: f64 = rng.gen();
    let j = ((u * tied.len() as f64) as usize).min(tied.len() - 1);
    (tied[j], flat)
}

/// Runs a local ascent from every start and applies the tie rule to the terminal points.
///
/// Starts may be processed in parallel; the only random draw is the final tie-break.
pub fn maximize_from_starts<S, R>(
    surface: &S,
    space: &SearchSpace,
    starts: &[Vec<f64>],
    tie_tol: f64,
    rng: &mut R,
) -> Result<AcquisitionOutcome>
where
    S: Surface + ?Sized,
    R: Rng + ?Sized,
{
    if starts.is_empty() {
        return Err(Error::InvalidArgument("at least one start is required".into()));
    }
    let ascend = |s: &Vec<f64>| local_ascent(surface, space, s);
    let results: Vec<AscentResult> = if starts.len() >= PARALLEL_STARTS && rayon::current_num_threads() > 1 {
        starts.par_iter().map(ascend).collect::<Result<_>>()?
    } else {
        starts.iter().map(ascend).collect::<Result<_>>()?
    };
    let values: Vec<f64> = results.iter().map(|r| r.value).collect();
    let (i, flat) = pick(&values, tie_tol, rng);
    let best = results.into_iter().nth(i).expect("pick returns a valid index");
    Ok(AcquisitionOutcome {
        query: Query::Point(best.point),
        value: best.value,
        flat_landscape: flat,
        starts_evaluated: starts.len(),
    })
}

/// Multi-start maximization from `n_starts` uniform starts drawn from `rng`.
pub fn maximize_continuous<S, R>(
    surface: &S,
    space: &SearchSpace,
    n_starts: usize,
    tie_tol: f64,
    rng: &mut R,
) -> Result<AcquisitionOutcome>
where
    S: Surface + ?Sized,
    R: Rng + ?Sized,
{
    if n_starts == 0 {
        return Err(Error::InvalidArgument("n_starts must be positive".into()));
    }
    let starts: Vec<Vec<f64>> = (0..n_starts).map(|_| uniform_point(space, rng)).collect();
    maximize_from_starts(surface, space, &starts, tie_tol, rng)
}

/// Argmax of the surface over the unevaluated pool candidates.
pub fn maximize_pool<S, R>(surface: &S, pool: &PoolSet, tie_tol: f64, rng: &mut R) -> Result<AcquisitionOutcome>
where
    S: Surface + ?Sized,
    R: Rng + ?Sized,
{
    let open = pool.unevaluated();
    if open.is_empty() {
        return Err(Error::PoolExhausted);
    }
    let eval = |&i: &usize| {
        let v = surface.value(pool.candidate(i));
        check_finite(v, pool.candidate(i)).map(|_| v)
    };
    let values: Vec<f64> = if open.len() >= 4 * PARALLEL_STARTS && rayon::current_num_threads() > 1 {
        open.par_iter().map(eval).collect::<Result<_>>()?
    } else {
        open.iter().map(eval).collect::<Result<_>>()?
    };
    let (j, flat) = pick(&values, tie_tol, rng);
    Ok(AcquisitionOutcome {
        query: Query::PoolIndex(open[j]),
        value: values[j],
        flat_landscape: flat,
        starts_evaluated: open.len(),
    })
}
