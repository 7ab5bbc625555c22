//! Labeled history, binary class labels and finite candidate pools.

use crate::error::{Error, Result};
use crate::space::SearchSpace;

/// Evaluated points `(x_i, y_i)` in evaluation order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
}

impl History {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_parts(space: &SearchSpace, points: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        if points.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "{} points but {} values",
                points.len(),
                values.len()
            )));
        }
        for p in &points {
            space.check(p)?;
        }
        Ok(Self { points, values })
    }

    pub fn push(&mut self, point: Vec<f64>, value: f64) {
        self.points.push(point);
        self.values.push(value);
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Index of the smallest value; the first one wins ties.
    pub fn best_index(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, &v) in self.values.iter().enumerate() {
            if best.is_none_or(|b| v < self.values[b]) {
                best = Some(i);
            }
        }
        best
    }
}

/// One-hot binary labels. Column 0 is Class 0, column 1 is Class 1 (the good points).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassLabels {
    class1: Vec<bool>,
}

impl ClassLabels {
    pub fn new(class1: Vec<bool>) -> Self {
        Self { class1 }
    }

    pub fn len(&self) -> usize {
        self.class1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class1.is_empty()
    }

    pub fn is_class1(&self, i: usize) -> bool {
        self.class1[i]
    }

    pub fn row(&self, i: usize) -> [f64; 2] {
        if self.class1[i] {
            [0.0, 1.0]
        } else {
            [1.0, 0.0]
        }
    }

    pub fn class1_count(&self) -> usize {
        self.class1.iter().filter(|&&c| c).count()
    }

    pub fn class0_count(&self) -> usize {
        self.len() - self.class1_count()
    }
}

/// Finite candidate set used both as unlabeled data and as query candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolSet {
    candidates: Vec<Vec<f64>>,
    evaluated: Vec<bool>,
}

impl PoolSet {
    pub fn new(space: &SearchSpace, candidates: Vec<Vec<f64>>) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::InvalidArgument("pool has no candidates".into()));
        }
        for c in &candidates {
            space.check(c)?;
        }
        let evaluated = vec![false; candidates.len()];
        Ok(Self { candidates, evaluated })
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn candidate(&self, i: usize) -> &[f64] {
        &self.candidates[i]
    }

    pub fn candidates(&self) -> &[Vec<f64>] {
        &self.candidates
    }

    pub fn is_evaluated(&self, i: usize) -> bool {
        self.evaluated[i]
    }

    pub fn mark_evaluated(&mut self, i: usize) {
        self.evaluated[i] = true;
    }

    pub fn unevaluated(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.evaluated[i]).collect()
    }

    pub fn unevaluated_count(&self) -> usize {
        self.evaluated.iter().filter(|&&e| !e).count()
    }

    /// Sub-pool made of the given indices, keeping their evaluation flags.
    pub fn select(&self, indices: &[usize]) -> PoolSet {
        PoolSet {
            candidates: indices.iter().map(|&i| self.candidates[i].clone()).collect(),
            evaluated: indices.iter().map(|&i| self.evaluated[i]).collect(),
        }
    }
}
