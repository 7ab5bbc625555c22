//! Graph-based semi-supervised labeling of unlabeled points and the inductive
//! class-probability model built on top of it.
//!
//! Two transductive schemes are provided:
//!
//! * label propagation: `C <- D^{-1} W C`, labeled rows clamped to their
//!   one-hot labels, rows renormalized after every sweep;
//! * label spreading: `F <- alpha S F + (1 - alpha) C0` with
//!   `S = D^{-1/2} W D^{-1/2}`; the reported labels are the row-normalized `F`.
//!
//! Both stop when the max-abs entrywise change of the reported label matrix
//! drops below the tolerance, or after `max_iters` sweeps. Closed-form fixed
//! points are available as verification oracles.

use log::warn;
use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::data::ClassLabels;
use crate::error::{Error, Result};
use crate::graph::{squared_distance, DenseMatrix, SimilarityGraph};

/// Rows above which a propagation sweep is split across threads.
const PARALLEL_ROWS: usize = 512;

/// Soft two-class label matrix over `n_labeled + n_unlabeled` points.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagatedLabels {
    rows: Vec<[f64; 2]>,
    n_labeled: usize,
}

impl PropagatedLabels {
    pub fn new(rows: Vec<[f64; 2]>, n_labeled: usize) -> Self {
        assert!(n_labeled <= rows.len());
        Self { rows, n_labeled }
    }

    pub fn rows(&self) -> &[[f64; 2]] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> [f64; 2] {
        self.rows[i]
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_labeled(&self) -> usize {
        self.n_labeled
    }

    pub fn n_unlabeled(&self) -> usize {
        self.rows.len() - self.n_labeled
    }

    pub fn max_abs_diff(&self, other: &PropagatedLabels) -> f64 {
        assert_eq!(self.len(), other.len());
        self.rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| (a[0] - b[0]).abs().max((a[1] - b[1]).abs()))
            .fold(0.0, f64::max)
    }

    fn normalized(mut self) -> Self {
        self.rows.iter_mut().for_each(normalize_row);
        self
    }
}

fn normalize_row(row: &mut [f64; 2]) {
    let s = row[0] + row[1];
    if s > 0.0 {
        row[0] /= s;
        row[1] /= s;
    }
}

/// One-hot rows for the labeled points followed by `n_unlabeled` zero rows.
pub fn init_labels(labels: &ClassLabels, n_unlabeled: usize) -> PropagatedLabels {
    let mut rows: Vec<[f64; 2]> = (0..labels.len()).map(|i| labels.row(i)).collect();
    rows.resize(labels.len() + n_unlabeled, [0.0, 0.0]);
    PropagatedLabels::new(rows, labels.len())
}

/// Which transductive update to run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Propagation,
    Spreading { alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationSettings {
    pub method: Method,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for PropagationSettings {
    fn default() -> Self {
        Self {
            method: Method::Propagation,
            max_iters: 1000,
            tol: 1e-6,
        }
    }
}

/// Result of an iterative labeling run.
#[derive(Debug, Clone)]
pub struct Propagation {
    pub labels: PropagatedLabels,
    pub iterations: usize,
    pub converged: bool,
    /// Max-abs change after each sweep.
    pub changes: Vec<f64>,
}

fn check_inputs(g: &SimilarityGraph, labels: &ClassLabels) -> Result<()> {
    if labels.is_empty() {
        return Err(Error::InvalidArgument("at least one labeled point is required".into()));
    }
    if labels.len() > g.len() {
        return Err(Error::InvalidArgument(format!(
            "{} labels for a graph of {} points",
            labels.len(),
            g.len()
        )));
    }
    Ok(())
}

/// Split columns for cache-friendly sweeps.
struct Columns {
    c0: Vec<f64>,
    c1: Vec<f64>,
}

impl Columns {
    fn from_labels(p: &PropagatedLabels) -> Self {
        Self {
            c0: p.rows.iter().map(|r| r[0]).collect(),
            c1: p.rows.iter().map(|r| r[1]).collect(),
        }
    }

    fn to_labels(&self, n_labeled: usize) -> PropagatedLabels {
        let rows = self.c0.iter().zip(&self.c1).map(|(&a, &b)| [a, b]).collect();
        PropagatedLabels::new(rows, n_labeled)
    }
}

/// Dot products of `row` with both label columns.
///
/// Four interleaved partial sums per column let the compiler vectorize the loop.
#[inline]
fn row_dot(row: &[f64], cols: &Columns) -> (f64, f64) {
    let n = row.len();
    let split = n - n % 4;
    let (mut a, mut b) = ([0.0f64; 4], [0.0f64; 4]);
    for ((m, c0), c1) in row[..split]
        .chunks_exact(4)
        .zip(cols.c0[..split].chunks_exact(4))
        .zip(cols.c1[..split].chunks_exact(4))
    {
        for k in 0..4 {
            a[k] += m[k] * c0[k];
            b[k] += m[k] * c1[k];
        }
    }
    let mut s0 = (a[0] + a[1]) + (a[2] + a[3]);
    let mut s1 = (b[0] + b[1]) + (b[2] + b[3]);
    for ((&m, &c0), &c1) in row[split..n].iter().zip(&cols.c0[split..n]).zip(&cols.c1[split..n]) {
        s0 += m * c0;
        s1 += m * c1;
    }
    (s0, s1)
}

/// `out[i - first] = op.row(i) . cols` for `i in first..n`.
fn sweep(op: &DenseMatrix, cols: &Columns, first: usize, out: &mut [(f64, f64)]) {
    if out.len() >= PARALLEL_ROWS {
        out.par_iter_mut()
            .enumerate()
            .for_each(|(k, slot)| *slot = row_dot(op.row(first + k), cols));
    } else {
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = row_dot(op.row(first + k), cols);
        }
    }
}

/// Label propagation with clamped labeled rows.
pub fn propagate_lp(
    g: &SimilarityGraph,
    labels: &ClassLabels,
    max_iters: usize,
    tol: f64,
) -> Result<Propagation> {
    check_inputs(g, labels)?;
    let n = g.len();
    let n_l = labels.len();
    let m = g.row_stochastic();
    let mut cols = Columns::from_labels(&init_labels(labels, n - n_l));
    let mut next = vec![(0.0, 0.0); n - n_l];
    let mut changes = Vec::new();
    let mut converged = false;

    for _ in 0..max_iters.max(1) {
        sweep(&m, &cols, n_l, &mut next);
        let mut change: f64 = 0.0;
        for (k, &(s0, s1)) in next.iter().enumerate() {
            let mut row = [s0, s1];
            normalize_row(&mut row);
            let i = n_l + k;
            change = change
                .max((row[0] - cols.c0[i]).abs())
                .max((row[1] - cols.c1[i]).abs());
            cols.c0[i] = row[0];
            cols.c1[i] = row[1];
        }
        if change.is_nan() {
            return Err(Error::InvalidArgument("label propagation produced NaN".into()));
        }
        changes.push(change);
        if change < tol {
            converged = true;
            break;
        }
    }

    Ok(Propagation {
        labels: cols.to_labels(n_l),
        iterations: changes.len(),
        converged,
        changes,
    })
}

/// Label spreading with clamping factor `alpha`.
pub fn propagate_ls(
    g: &SimilarityGraph,
    labels: &ClassLabels,
    alpha: f64,
    max_iters: usize,
    tol: f64,
) -> Result<Propagation> {
    check_inputs(g, labels)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let n = g.len();
    let n_l = labels.len();
    let s = g.symmetric_normalized();
    let initial = init_labels(labels, n - n_l);
    let base = Columns::from_labels(&initial);
    let mut state = Columns::from_labels(&initial);
    let mut view = Columns::from_labels(&initial);
    let mut next = vec![(0.0, 0.0); n];
    let mut changes = Vec::new();
    let mut converged = false;

    for _ in 0..max_iters.max(1) {
        sweep(&s, &state, 0, &mut next);
        let mut change: f64 = 0.0;
        for (i, &(s0, s1)) in next.iter().enumerate() {
            let f0 = alpha * s0 + (1.0 - alpha) * base.c0[i];
            let f1 = alpha * s1 + (1.0 - alpha) * base.c1[i];
            state.c0[i] = f0;
            state.c1[i] = f1;
            let mut row = [f0, f1];
            normalize_row(&mut row);
            change = change
                .max((row[0] - view.c0[i]).abs())
                .max((row[1] - view.c1[i]).abs());
            view.c0[i] = row[0];
            view.c1[i] = row[1];
        }
        if change.is_nan() {
            return Err(Error::InvalidArgument("label spreading produced NaN".into()));
        }
        changes.push(change);
        if change < tol {
            converged = true;
            break;
        }
    }

    Ok(Propagation {
        labels: view.to_labels(n_l),
        iterations: changes.len(),
        converged,
        changes,
    })
}

/// Runs the configured method.
pub fn propagate(
    g: &SimilarityGraph,
    labels: &ClassLabels,
    settings: &PropagationSettings,
) -> Result<Propagation> {
    match settings.method {
        Method::Propagation => propagate_lp(g, labels, settings.max_iters, settings.tol),
        Method::Spreading { alpha } => {
            propagate_ls(g, labels, alpha, settings.max_iters, settings.tol)
        }
    }
}

/// Fixed point of label propagation, `C_u = (I - M_uu)^{-1} M_ul C_l`, by LU solve.
///
/// Verification oracle; independent of the iterative sweep.
pub fn lp_closed_form(g: &SimilarityGraph, labels: &ClassLabels) -> Result<PropagatedLabels> {
    check_inputs(g, labels)?;
    let n = g.len();
    let n_l = labels.len();
    let n_u = n - n_l;
    let mut rows: Vec<[f64; 2]> = (0..n_l).map(|i| labels.row(i)).collect();
    if n_u == 0 {
        return Ok(PropagatedLabels::new(rows, n_l));
    }
    let m = g.row_stochastic();
    let a = DMatrix::from_fn(n_u, n_u, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        delta - m.get(n_l + i, n_l + j)
    });
    let b = DMatrix::from_fn(n_u, 2, |i, k| {
        (0..n_l).map(|j| m.get(n_l + i, j) * labels.row(j)[k]).sum::<f64>()
    });
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::OracleUnavailable("I - M_uu is singular".into()))?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::OracleUnavailable("non-finite solution of I - M_uu".into()));
    }
    rows.extend((0..n_u).map(|i| [x[(i, 0)], x[(i, 1)]]));
    Ok(PropagatedLabels::new(rows, n_l).normalized())
}

/// Fixed point of label spreading, `(1 - alpha) (I - alpha S)^{-1} C0`, row-normalized.
///
/// Verification oracle; independent of the iterative sweep.
pub fn ls_closed_form(g: &SimilarityGraph, labels: &ClassLabels, alpha: f64) -> Result<PropagatedLabels> {
    check_inputs(g, labels)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let n = g.len();
    let n_l = labels.len();
    let s = g.symmetric_normalized();
    let a = DMatrix::from_fn(n, n, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        delta - alpha * s.get(i, j)
    });
    let c0 = DMatrix::from_fn(n, 2, |i, k| if i < n_l { labels.row(i)[k] } else { 0.0 });
    let x = a
        .lu()
        .solve(&c0)
        .ok_or_else(|| Error::OracleUnavailable("I - alpha S is singular".into()))?;
    let rows = (0..n)
        .map(|i| [(1.0 - alpha) * x[(i, 0)], (1.0 - alpha) * x[(i, 1)]])
        .collect();
    Ok(PropagatedLabels::new(rows, n_l).normalized())
}

/// Natural-log entropy summed over rows, with `0 ln 0 = 0`.
pub fn entropy(labels: &PropagatedLabels) -> Result<f64> {
    let mut h = 0.0;
    for (i, row) in labels.rows.iter().enumerate() {
        if row.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            return Err(Error::InvalidArgument(format!("row {i} has a negative or non-finite entry")));
        }
        let s = row[0] + row[1];
        if s != 0.0 && (s - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("row {i} sums to {s}, not 0 or 1")));
        }
        for &p in row {
            if p > 0.0 {
                h -= p * p.ln();
            }
        }
    }
    Ok(h)
}

/// Search interval and starting point of the kernel-width fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaSearch {
    pub lower: f64,
    pub upper: f64,
    pub initial: f64,
    /// Final step of the search, in natural-log units of beta.
    pub log_step_tol: f64,
}

impl Default for BetaSearch {
    fn default() -> Self {
        Self {
            lower: 1e-3,
            upper: 1e3,
            initial: 0.5,
            log_step_tol: 1e-2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaFit {
    pub beta: f64,
    pub entropy: f64,
    pub evaluations: usize,
    /// Set when the objective failed and the initial value was returned.
    pub fell_back: bool,
}

/// Entropy of the propagated labels obtained with kernel width `beta`.
pub fn entropy_at(
    points: &[Vec<f64>],
    labels: &ClassLabels,
    beta: f64,
    settings: &PropagationSettings,
) -> Result<f64> {
    let g = SimilarityGraph::build(points, beta)?;
    entropy(&propagate(&g, labels, settings)?.labels)
}

/// Fits the kernel width by minimizing the entropy of the propagated labels.
///
/// `points` stacks the labeled points (first `labels.len()` rows) and the
/// unlabeled points. The search is a deterministic compass search over
/// `ln beta`, started at `search.initial` and confined to
/// `[search.lower, search.upper]`: a trial step is accepted only if it lowers
/// the entropy, accepted steps double the step size and rejected ones halve
/// it, until the step falls below `search.log_step_tol`. A flat objective
/// therefore returns the initial value unchanged.
pub fn learn_beta(
    points: &[Vec<f64>],
    labels: &ClassLabels,
    settings: &PropagationSettings,
    search: &BetaSearch,
) -> BetaFit {
    let lo = search.lower.ln();
    let hi = search.upper.ln();
    let mut evaluations = 0;
    let mut objective = |t: f64| {
        evaluations += 1;
        entropy_at(points, labels, t.exp(), settings)
    };
    let fallback = |err: Option<Error>, evaluations| {
        match err {
            Some(e) => warn!("beta fit failed ({e}); using beta = {}", search.initial),
            None => warn!("beta fit produced NaN; using beta = {}", search.initial),
        }
        BetaFit {
            beta: search.initial,
            entropy: f64::NAN,
            evaluations,
            fell_back: true,
        }
    };

    let mut t = search.initial.ln().clamp(lo, hi);
    let mut f = match objective(t) {
        Ok(v) if v.is_finite() => v,
        Ok(_) => return fallback(None, 1),
        Err(e) => return fallback(Some(e), 1),
    };
    let mut step: f64 = 1.0;
    while step >= search.log_step_tol {
        let mut moved = false;
        for dir in [1.0, -1.0] {
            let trial = (t + dir * step).clamp(lo, hi);
            if trial == t {
                continue;
            }
            match objective(trial) {
                Ok(v) if v < f - 1e-12 => {
                    t = trial;
                    f = v;
                    moved = true;
                    break;
                }
                Ok(v) if v.is_nan() => {
                    let n = evaluations;
                    return fallback(None, n);
                }
                Ok(_) => {}
                Err(e) => {
                    let n = evaluations;
                    return fallback(Some(e), n);
                }
            }
        }
        step = if moved { (step * 2.0).min(hi - lo) } else { step / 2.0 };
    }

    BetaFit {
        beta: t.exp(),
        entropy: f,
        evaluations,
        fell_back: false,
    }
}

/// Inductive class-probability model: kernel-weighted vote of the propagated labels.
///
/// With no unlabeled points this is the Nadaraya-Watson estimate over the
/// labeled data.
#[derive(Debug, Clone)]
pub struct InductiveModel {
    points: Vec<Vec<f64>>,
    rows: Vec<[f64; 2]>,
    beta: f64,
    dims: usize,
}

impl InductiveModel {
    /// Rows with no label mass are dropped: they contribute nothing to either column.
    pub fn new(points: &[Vec<f64>], labels: &PropagatedLabels, beta: f64) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(Error::InvalidArgument(format!(
                "{} points but {} label rows",
                points.len(),
                labels.len()
            )));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidArgument(format!("beta must be positive and finite, got {beta}")));
        }
        let mut kept_points = Vec::new();
        let mut kept_rows = Vec::new();
        for (p, r) in points.iter().zip(labels.rows()) {
            if r[0] < 0.0 || r[1] < 0.0 {
                return Err(Error::InvalidArgument("negative label mass".into()));
            }
            if r[0] + r[1] > 0.0 {
                kept_points.push(p.clone());
                kept_rows.push(*r);
            }
        }
        if kept_rows.is_empty() {
            return Err(Error::InvalidArgument("every label row is zero".into()));
        }
        let dims = kept_points[0].len();
        Ok(Self {
            points: kept_points,
            rows: kept_rows,
            beta,
            dims,
        })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Squared distances to every kept point and their minimum.
    fn distances(&self, x: &[f64], out: &mut Vec<f64>) -> f64 {
        out.clear();
        let mut min = f64::INFINITY;
        for p in &self.points {
            let d = squared_distance(x, p);
            min = min.min(d);
            out.push(d);
        }
        min
    }

    /// Class-1 probability at `x`.
    pub fn class1(&self, x: &[f64]) -> f64 {
        let mut d2 = Vec::with_capacity(self.points.len());
        let min = self.distances(x, &mut d2);
        // weights are rescaled by exp(beta * min), which cancels in the ratio
        // and keeps the nearest weight at 1 instead of underflowing
        let (mut s0, mut s1) = (0.0, 0.0);
        for (d, r) in d2.iter().zip(&self.rows) {
            let w = (-self.beta * (d - min)).exp();
            s0 += w * r[0];
            s1 += w * r[1];
        }
        s1 / (s0 + s1)
    }

    /// `[P(Class 0), P(Class 1)]`; the entries sum to one exactly.
    pub fn predict_proba(&self, x: &[f64]) -> [f64; 2] {
        let p1 = self.class1(x);
        [1.0 - p1, p1]
    }

    /// Class-1 probability and its gradient with respect to `x`.
    pub fn class1_with_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let mut d2 = Vec::with_capacity(self.points.len());
        let min = self.distances(x, &mut d2);
        let (mut s0, mut s1) = (0.0, 0.0);
        let mut g0 = vec![0.0; self.dims];
        let mut g1 = vec![0.0; self.dims];
        for ((d, r), p) in d2.iter().zip(&self.rows).zip(&self.points) {
            let w = (-self.beta * (d - min)).exp();
            if w == 0.0 {
                continue;
            }
            s0 += w * r[0];
            s1 += w * r[1];
            for k in 0..self.dims {
                let dw = -2.0 * self.beta * (x[k] - p[k]) * w;
                g0[k] += dw * r[0];
                g1[k] += dw * r[1];
            }
        }
        let s = s0 + s1;
        for k in 0..self.dims {
            grad[k] = (s0 * g1[k] - s1 * g0[k]) / (s * s);
        }
        s1 / s
    }
}

/// Class-1 probability of `x` under the inductive model over `points` and `labels`.
pub fn predict_class1(x: &[f64], points: &[Vec<f64>], labels: &PropagatedLabels, beta: f64) -> Result<f64> {
    Ok(InductiveModel::new(points, labels, beta)?.class1(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn labels(bits: &[bool]) -> ClassLabels {
        ClassLabels::new(bits.to_vec())
    }

    #[test]
    fn init_labels_layout() {
        let p = init_labels(&labels(&[true, false]), 1);
        assert_eq!(p.rows(), &[[0.0, 1.0], [1.0, 0.0], [0.0, 0.0]]);
        let sums: Vec<f64> = p.rows().iter().map(|r| r[0] + r[1]).collect();
        assert_eq!(sums, vec![1.0, 1.0, 0.0]);
        let q = init_labels(&labels(&[false, true, true]), 0);
        assert_eq!(q.rows(), &[[1.0, 0.0], [0.0, 1.0], [0.0, 1.0]]);
    }

    #[test]
    fn equidistant_unlabeled_point_is_split() {
        let pts = vec![vec![0.0], vec![2.0], vec![1.0]];
        let g = SimilarityGraph::build(&pts, 1.0).unwrap();
        let l = labels(&[true, false]);
        let lp = propagate_lp(&g, &l, 1000, 1e-12).unwrap();
        assert_abs_diff_eq!(lp.labels.row(2)[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(lp.labels.row(2)[1], 0.5, epsilon = 1e-12);
        let cf = lp_closed_form(&g, &l).unwrap();
        assert_abs_diff_eq!(cf.row(2)[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn one_dimensional_lp_matches_hand_closed_form() {
        // x = 0 (Class 1), x = 1 (unlabeled), x = 10 (Class 0), beta = 1.
        // Hand solution: c_u is proportional to (w(1,10), w(1,0)) = (e^-81, e^-1),
        // so P(Class 0) = 1.8048513878454152e-35 (40-digit reference).
        let pts = vec![vec![0.0], vec![10.0], vec![1.0]];
        let g = SimilarityGraph::build(&pts, 1.0).unwrap();
        let l = labels(&[true, false]);
        let lp = propagate_lp(&g, &l, 1000, 1e-12).unwrap();
        let row = lp.labels.row(2);
        assert_abs_diff_eq!(row[0], 1.804_851_387_845_415_2e-35, epsilon = 1e-8);
        assert_abs_diff_eq!(row[1], 1.0, epsilon = 1e-8);
        let cf = lp_closed_form(&g, &l).unwrap();
        assert!(lp.labels.max_abs_diff(&cf) < 1e-8);
    }

    #[test]
    fn lp_without_unlabeled_points_returns_labels() {
        let pts = vec![vec![0.0], vec![1.0]];
        let g = SimilarityGraph::build(&pts, 1.0).unwrap();
        let l = labels(&[true, false]);
        let lp = propagate_lp(&g, &l, 10, 1e-6).unwrap();
        assert_eq!(lp.labels, init_labels(&l, 0));
        assert_eq!(lp.iterations, 1);
        assert_eq!(lp_closed_form(&g, &l).unwrap(), init_labels(&l, 0));
    }

    #[test]
    fn labeled_rows_stay_clamped() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.2], vec![0.4, 0.4], vec![0.6, 0.1]];
        let g = SimilarityGraph::build(&pts, 3.0).unwrap();
        let l = labels(&[false, true]);
        let lp = propagate_lp(&g, &l, 500, 1e-10).unwrap();
        assert_eq!(lp.labels.row(0), [1.0, 0.0]);
        assert_eq!(lp.labels.row(1), [0.0, 1.0]);
    }

    #[test]
    fn tiny_alpha_spreading_keeps_initial_labels() {
        let pts = vec![vec![0.0], vec![0.5], vec![3.0], vec![1.0]];
        let g = SimilarityGraph::build(&pts, 1.0).unwrap();
        let l = labels(&[true, false, false]);
        let ls = propagate_ls(&g, &l, 1e-9, 1000, 1e-12).unwrap();
        for i in 0..3 {
            let expected = l.row(i);
            assert_abs_diff_eq!(ls.labels.row(i)[0], expected[0], epsilon = 1e-6);
            assert_abs_diff_eq!(ls.labels.row(i)[1], expected[1], epsilon = 1e-6);
        }
    }

    #[test]
    fn spreading_is_cluster_symmetric() {
        // mirror-image clusters around x = 0; swapping labels mirrors the columns
        let pts = vec![vec![-2.0], vec![2.0], vec![-1.5], vec![1.5], vec![-2.5], vec![2.5]];
        let g = SimilarityGraph::build(&pts, 1.0).unwrap();
        let a = propagate_ls(&g, &labels(&[true, false]), 0.9, 2000, 1e-12).unwrap().labels;
        let b = propagate_ls(&g, &labels(&[false, true]), 0.9, 2000, 1e-12).unwrap().labels;
        for i in 0..pts.len() {
            assert_abs_diff_eq!(a.row(i)[0], b.row(i)[1], epsilon = 1e-12);
            assert_abs_diff_eq!(a.row(i)[1], b.row(i)[0], epsilon = 1e-12);
        }
        // and a point mirrored across zero gets the mirrored label
        assert_abs_diff_eq!(a.row(2)[1], a.row(3)[0], epsilon = 1e-12);
    }

    #[test]
    fn spreading_matches_closed_form_small() {
        let pts: Vec<Vec<f64>> = (0..15)
            .map(|i| vec![(i as f64 * 1.3).sin(), (i as f64 * 0.7).cos()])
            .collect();
        let g = SimilarityGraph::build(&pts, 1.0).unwrap();
        let l = labels(&[true, false, true, false, false]);
        let ls = propagate_ls(&g, &l, 0.9, 10_000, 1e-12).unwrap();
        assert!(ls.converged);
        let cf = ls_closed_form(&g, &l, 0.9).unwrap();
        assert!(ls.labels.max_abs_diff(&cf) < 1e-6);
    }

    #[test]
    fn entropy_reference_values() {
        let uniform = PropagatedLabels::new(vec![[0.5, 0.5]; 3], 0);
        assert_abs_diff_eq!(entropy(&uniform).unwrap(), 2.079_441_541_679_836, epsilon = 1e-12);
        let hot = PropagatedLabels::new(vec![[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]], 2);
        assert_eq!(entropy(&hot).unwrap(), 0.0);
        // 40-digit reference: 0.32508297339144824 + ln 2
        let mixed = PropagatedLabels::new(vec![[0.9, 0.1], [0.5, 0.5]], 0);
        assert_abs_diff_eq!(entropy(&mixed).unwrap(), 1.018_230_153_951_393_5, epsilon = 1e-12);
        let negative = PropagatedLabels::new(vec![[1.1, -0.1]], 0);
        assert!(entropy(&negative).is_err());
    }

    #[test]
    fn nadaraya_watson_reference_value() {
        // x = 0.5, Class 1 at 0, Class 0 at 2, beta = 1:
        // e^-0.25 / (e^-0.25 + e^-2.25) = 0.8807970779778824 (40-digit reference)
        let pts = vec![vec![0.0], vec![2.0]];
        let c = init_labels(&labels(&[true, false]), 0);
        let p = predict_class1(&[0.5], &pts, &c, 1.0).unwrap();
        assert_abs_diff_eq!(p, 0.880_797_077_977_882_4, epsilon = 1e-12);
    }

    #[test]
    fn inductive_model_edge_cases() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        let all_good = init_labels(&labels(&[true, true]), 0);
        assert_eq!(predict_class1(&[0.3, 0.9], &pts, &all_good, 2.0).unwrap(), 1.0);
        let split = init_labels(&labels(&[true, false]), 0);
        assert_abs_diff_eq!(predict_class1(&[1.0, 0.0], &pts, &split, 2.0).unwrap(), 0.5, epsilon = 1e-15);
        // far away with a huge beta: still well defined
        let p = predict_class1(&[50.0, 50.0], &pts, &split, 1e3).unwrap();
        assert_eq!(p, 0.0);
        let zero = PropagatedLabels::new(vec![[0.0, 0.0]; 2], 0);
        assert!(InductiveModel::new(&pts, &zero, 1.0).is_err());
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.5], vec![0.2, 0.9], vec![0.7, 0.7]];
        let c = PropagatedLabels::new(vec![[0.0, 1.0], [1.0, 0.0], [0.3, 0.7], [0.0, 0.0]], 2);
        let model = InductiveModel::new(&pts, &c, 1.7).unwrap();
        let x = [0.4, 0.3];
        let mut grad = [0.0; 2];
        model.class1_with_gradient(&x, &mut grad);
        for k in 0..2 {
            let h = 1e-6;
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let fd = (model.class1(&xp) - model.class1(&xm)) / (2.0 * h);
            assert_abs_diff_eq!(grad[k], fd, epsilon = 1e-8);
        }
    }

    #[test]
    fn beta_fit_on_coincident_points_keeps_initial_value() {
        let pts = vec![vec![0.5, 0.5]; 6];
        let l = labels(&[true, false, true]);
        let fit = learn_beta(&pts, &l, &PropagationSettings::default(), &BetaSearch::default());
        assert_eq!(fit.beta, 0.5);
        assert!(!fit.fell_back);
    }

    #[test]
    fn beta_fit_is_deterministic_and_not_worse_than_start() {
        let mut pts = vec![vec![0.0, 0.0], vec![3.0, 3.0], vec![0.2, -0.1], vec![3.1, 2.8]];
        pts.extend((0..10).map(|i| vec![0.1 * (i as f64).sin(), 0.1 * (i as f64).cos()]));
        pts.extend((0..10).map(|i| vec![3.0 + 0.1 * (i as f64).sin(), 3.0 + 0.1 * (i as f64).cos()]));
        let l = labels(&[true, false, true, false]);
        let settings = PropagationSettings::default();
        let a = learn_beta(&pts, &l, &settings, &BetaSearch::default());
        let b = learn_beta(&pts, &l, &settings, &BetaSearch::default());
        assert_eq!(a, b);
        let start = entropy_at(&pts, &l, 0.5, &settings).unwrap();
        assert!(a.entropy <= start);
        assert!((1e-3..=1e3).contains(&a.beta));
    }
}
