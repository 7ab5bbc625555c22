//! RBF similarity graphs over stacked labeled and unlabeled points.
//!
//! Storage is dense and row-major. Self-similarities are kept, so every
//! diagonal entry is exactly 1 and every degree is at least 1.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Row count above which graph construction is split across threads.
const PARALLEL_ROWS: usize = 256;

/// `exp(-beta * |a - b|^2)`.
pub fn rbf_similarity(a: &[f64], b: &[f64], beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidArgument(format!("beta must be positive and finite, got {beta}")));
    }
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "dimension mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite coordinate".into()));
    }
    Ok((-beta * squared_distance(a, b)).exp())
}

/// Graph weight; subnormal results are flushed to zero, since arithmetic on
/// them is very slow and they are below 2.3e-308 anyway.
#[inline]
fn kernel(a: &[f64], b: &[f64], beta: f64) -> f64 {
    let w = (-beta * squared_distance(a, b)).exp();
    if w < f64::MIN_POSITIVE {
        0.0
    } else {
        w
    }
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Similarity matrix `W`, its row sums and the kernel width used to build it.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityGraph {
    n: usize,
    w: Vec<f64>,
    degree: Vec<f64>,
    beta: f64,
}

impl SimilarityGraph {
    /// Builds the full pairwise graph. Duplicate points are allowed.
    pub fn build(points: &[Vec<f64>], beta: f64) -> Result<Self> {
        let n = points.len();
        if n < 2 {
            return Err(Error::InvalidArgument(format!("a graph needs at least 2 points, got {n}")));
        }
        // validates beta, dimensions and finiteness once
        for p in points {
            rbf_similarity(&points[0], p, beta)?;
        }

        let fill_row = |(i, row): (usize, &mut [f64])| {
            for j in 0..n {
                row[j] = if i == j { 1.0 } else { kernel(&points[i], &points[j], beta) };
            }
        };
        let mut w = vec![0.0; n * n];
        if n >= PARALLEL_ROWS {
            w.par_chunks_mut(n).enumerate().for_each(fill_row);
        } else {
            w.chunks_mut(n).enumerate().for_each(fill_row);
        }
        // squared_distance is symmetric bit-for-bit, but mirror anyway so
        // W == W^T holds by construction
        for i in 0..n {
            for j in 0..i {
                w[i * n + j] = w[j * n + i];
            }
        }
        let degree = w.chunks(n).map(|row| row.iter().sum()).collect();
        Ok(Self { n, w, degree, beta })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.n + j]
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn degree(&self) -> &[f64] {
        &self.degree
    }

    /// Row-stochastic transition operator `D^{-1} W`.
    pub fn row_stochastic(&self) -> DenseMatrix {
        let n = self.n;
        let mut data = self.w.clone();
        for (row, &d) in data.chunks_mut(n).zip(&self.degree) {
            row.iter_mut().for_each(|v| *v /= d);
        }
        DenseMatrix { n, data }
    }

    /// Symmetrically normalized operator `D^{-1/2} W D^{-1/2}`.
    pub fn symmetric_normalized(&self) -> DenseMatrix {
        let n = self.n;
        let mut data = self.w.clone();
        for i in 0..n {
            for j in 0..n {
                // d_i * d_j commutes, so the result is symmetric bit-for-bit
                data[i * n + j] /= (self.degree[i] * self.degree[j]).sqrt();
            }
        }
        DenseMatrix { n, data }
    }
}

/// Square dense matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn line() -> Vec<Vec<f64>> {
        vec![vec![0.0], vec![1.0], vec![2.0]]
    }

    #[test]
    fn similarity_of_identical_points_is_one() {
        assert_eq!(rbf_similarity(&[0.3, -1.0], &[0.3, -1.0], 123.0).unwrap(), 1.0);
    }

    #[test]
    fn similarity_reference_value() {
        // exp(-0.5), 40-digit reference
        let v = rbf_similarity(&[0.0, 0.0], &[1.0, 0.0], 0.5).unwrap();
        assert_abs_diff_eq!(v, 0.606_530_659_712_633_4, epsilon = 1e-15);
        assert_eq!(v, rbf_similarity(&[1.0, 0.0], &[0.0, 0.0], 0.5).unwrap());
    }

    #[test]
    fn similarity_rejects_bad_arguments() {
        assert!(rbf_similarity(&[0.0], &[1.0], 0.0).is_err());
        assert!(rbf_similarity(&[0.0], &[1.0], -1.0).is_err());
        assert!(rbf_similarity(&[f64::NAN], &[1.0], 1.0).is_err());
        assert!(rbf_similarity(&[0.0], &[1.0, 2.0], 1.0).is_err());
    }

    #[test]
    fn duplicate_points_give_all_ones() {
        let g = SimilarityGraph::build(&[vec![1.0, 2.0], vec![1.0, 2.0]], 3.0).unwrap();
        assert_eq!(g.weights(), &[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(g.degree(), &[2.0, 2.0]);
        let m = g.row_stochastic();
        assert_eq!(m.row(0), &[0.5, 0.5]);
        let s = g.symmetric_normalized();
        assert_eq!(s.row(1), &[0.5, 0.5]);
    }

    #[test]
    fn collinear_points() {
        let g = SimilarityGraph::build(&line(), 1.0).unwrap();
        assert_abs_diff_eq!(g.weight(0, 2), 0.018_315_638_888_734_18, epsilon = 1e-16);
        let m = g.row_stochastic();
        let z = 1.0 + (-1.0f64).exp() + (-4.0f64).exp();
        assert_abs_diff_eq!(m.get(0, 0), 1.0 / z, epsilon = 1e-15);
        assert_abs_diff_eq!(m.get(0, 1), (-1.0f64).exp() / z, epsilon = 1e-15);
        assert_abs_diff_eq!(m.get(0, 2), (-4.0f64).exp() / z, epsilon = 1e-15);
    }

    #[test]
    fn needs_two_points() {
        assert!(SimilarityGraph::build(&[vec![0.0]], 1.0).is_err());
    }

    #[test]
    fn symmetric_operator_entries() {
        let pts = vec![vec![0.0, 0.1], vec![0.7, 0.2], vec![0.3, 0.9], vec![0.5, 0.5]];
        let g = SimilarityGraph::build(&pts, 2.0).unwrap();
        let s = g.symmetric_normalized();
        for i in 0..4 {
            for j in 0..4 {
                let expected = g.weight(i, j) / (g.degree()[i] * g.degree()[j]).sqrt();
                assert_abs_diff_eq!(s.get(i, j), expected, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn parallel_construction_matches_serial_definition() {
        let pts: Vec<Vec<f64>> = (0..300).map(|i| vec![(i as f64 * 0.37).sin(), (i as f64).cos()]).collect();
        let g = SimilarityGraph::build(&pts, 0.8).unwrap();
        for &(i, j) in &[(0, 299), (150, 3), (299, 299), (17, 256)] {
            let expected = if i == j { 1.0 } else { kernel(&pts[i], &pts[j], 0.8) };
            assert_eq!(g.weight(i, j), expected);
        }
    }
}
