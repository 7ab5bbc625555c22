//! Synthetic benchmark objectives and the simple-regret metric.
//!
//! All benchmarks are minimized. Evaluating outside the benchmark's box is an
//! error rather than an extrapolation.

use std::f64::consts::PI;

use log::warn;

use crate::error::{Error, Result};
use crate::space::SearchSpace;

/// A named test function on a box with a known global minimum value.
#[derive(Debug, Clone)]
pub struct Benchmark {
    name: &'static str,
    space: SearchSpace,
    formula: fn(&[f64]) -> f64,
    optimum_value: f64,
    optimum_point: Vec<f64>,
}

impl Benchmark {
    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn space(&self) -> &SearchSpace {
        &self.space
    }

    pub fn known_optimum_value(&self) -> f64 {
        self.optimum_value
    }

    /// One global minimizer.
    pub fn optimum_point(&self) -> &[f64] {
        &self.optimum_point
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.space.check(x)?;
        Ok((self.formula)(x))
    }

    /// Formula value without the box check.
    pub fn formula(&self, x: &[f64]) -> f64 {
        (self.formula)(x)
    }
}

fn beale_formula(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    (1.5 - a + a * b).powi(2) + (2.25 - a + a * b * b).powi(2) + (2.625 - a + a * b.powi(3)).powi(2)
}

fn branin_formula(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    (b - 5.1 / (4.0 * PI * PI) * a * a + 5.0 / PI * a - 6.0).powi(2)
        + 10.0 * (1.0 - 1.0 / (8.0 * PI)) * a.cos()
        + 10.0
}

fn bukin6_formula(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    100.0 * (b - 0.01 * a * a).abs().sqrt() + 0.01 * (a + 10.0).abs()
}

fn sixhumpcamel_formula(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    (4.0 - 2.1 * a * a + a.powi(4) / 3.0) * a * a + a * b + (-4.0 + 4.0 * b * b) * b * b
}

fn make(
    name: &'static str,
    lower: [f64; 2],
    upper: [f64; 2],
    formula: fn(&[f64]) -> f64,
    optimum_value: f64,
    optimum_point: [f64; 2],
) -> Benchmark {
    Benchmark {
        name,
        space: SearchSpace::new(lower.to_vec(), upper.to_vec()).expect("benchmark boxes are valid"),
        formula,
        optimum_value,
        optimum_point: optimum_point.to_vec(),
    }
}

/// Beale on `[-4.5, 4.5]^2`; minimum 0 at `(3, 0.5)`.
pub fn beale_benchmark() -> Benchmark {
    make("beale", [-4.5, -4.5], [4.5, 4.5], beale_formula, 0.0, [3.0, 0.5])
}

/// Branin on `[-5, 10] x [0, 15]`; minimum `5 / (4 pi)` at `(pi, 2.275)` and two other points.
pub fn branin_benchmark() -> Benchmark {
    make(
        "branin",
        [-5.0, 0.0],
        [10.0, 15.0],
        branin_formula,
        5.0 / (4.0 * PI),
        [PI, 2.275],
    )
}

/// Bukin N.6 on `[-15, -5] x [-3, 3]`; minimum 0 at `(-10, 1)`.
pub fn bukin6_benchmark() -> Benchmark {
    make("bukin6", [-15.0, -3.0], [-5.0, 3.0], bukin6_formula, 0.0, [-10.0, 1.0])
}

/// Six-hump camel on `[-3, 3] x [-2, 2]`; minimum about `-1.0316284535` at `(±0.0898, ∓0.7126)`.
pub fn sixhumpcamel_benchmark() -> Benchmark {
    make(
        "sixhumpcamel",
        [-3.0, -2.0],
        [3.0, 2.0],
        sixhumpcamel_formula,
        -1.031_628_453_489_877,
        [0.089_842_008_736_688_6, -0.712_656_403_020_741_5],
    )
}

pub fn beale(x: &[f64]) -> Result<f64> {
    beale_benchmark().evaluate(x)
}

pub fn branin(x: &[f64]) -> Result<f64> {
    branin_benchmark().evaluate(x)
}

pub fn bukin6(x: &[f64]) -> Result<f64> {
    bukin6_benchmark().evaluate(x)
}

pub fn sixhumpcamel(x: &[f64]) -> Result<f64> {
    sixhumpcamel_benchmark().evaluate(x)
}

/// Every registered benchmark.
pub fn benchmarks() -> Vec<Benchmark> {
    vec![
        beale_benchmark(),
        branin_benchmark(),
        bukin6_benchmark(),
        sixhumpcamel_benchmark(),
    ]
}

/// Looks a benchmark up by name.
pub fn benchmark(name: &str) -> Result<Benchmark> {
    benchmarks()
        .into_iter()
        .find(|b| b.name == name)
        .ok_or_else(|| {
            let names: Vec<_> = benchmarks().iter().map(|b| b.name).collect();
            Error::InvalidArgument(format!("unknown benchmark `{name}` (known: {})", names.join(", ")))
        })
}

/// `min(values) - f_star`, clipped at zero.
pub fn simple_regret(values: &[f64], f_star: f64) -> Result<f64> {
    let best = values.iter().copied().fold(f64::INFINITY, f64::min);
    if values.is_empty() {
        return Err(Error::InvalidArgument("simple regret of an empty sequence".into()));
    }
    let regret = best - f_star;
    if regret < 0.0 {
        if regret < -1e-9 {
            warn!("observed value {best} is below the reference optimum {f_star}");
        }
        return Ok(0.0);
    }
    Ok(regret)
}

/// Simple regret of every prefix of `values`.
pub fn regret_trace(values: &[f64], f_star: f64) -> Vec<f64> {
    let mut best = f64::INFINITY;
    values
        .iter()
        .map(|&v| {
            best = best.min(v);
            (best - f_star).max(0.0)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn beale_values() {
        assert_eq!(beale(&[3.0, 0.5]).unwrap(), 0.0);
        assert_eq!(beale(&[0.0, 0.0]).unwrap(), 14.203125);
        assert!(beale(&[5.0, 0.0]).is_err());
    }

    #[test]
    fn branin_values() {
        // 40-digit references
        assert_abs_diff_eq!(branin(&[PI, 2.275]).unwrap(), 0.397_887_357_729_738_3, epsilon = 1e-12);
        assert_abs_diff_eq!(branin(&[0.0, 0.0]).unwrap(), 55.602_112_642_270_26, epsilon = 1e-10);
        assert!(branin(&[0.0, -0.1]).is_err());
    }

    #[test]
    fn bukin6_values() {
        assert_eq!(bukin6(&[-10.0, 1.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(bukin6(&[-5.0, 0.0]).unwrap(), 50.05, epsilon = 1e-12);
        assert!(bukin6(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn sixhumpcamel_values() {
        assert_eq!(sixhumpcamel(&[0.0, 0.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(sixhumpcamel(&[0.0898, -0.7126]).unwrap(), -1.031_628, epsilon = 1e-4);
        for &(a, b) in &[(1.2, -0.3), (-2.5, 1.9), (0.7, 0.7)] {
            assert_eq!(sixhumpcamel(&[a, b]).unwrap(), sixhumpcamel(&[-a, -b]).unwrap());
        }
    }

    #[test]
    fn registry_lookup() {
        assert_eq!(benchmark("branin").unwrap().name(), "branin");
        assert!(benchmark("rosenbrock").is_err());
        for b in benchmarks() {
            assert!(b.space().contains(b.optimum_point()));
            assert_abs_diff_eq!(b.formula(b.optimum_point()), b.known_optimum_value(), epsilon = 1e-9);
        }
    }

    #[test]
    fn regret_arithmetic() {
        assert_eq!(simple_regret(&[5.0, 3.0, 4.0], 1.0).unwrap(), 2.0);
        assert_eq!(simple_regret(&[2.0, 1.0], 1.0).unwrap(), 0.0);
        assert_eq!(simple_regret(&[1.0 - 1e-12], 1.0).unwrap(), 0.0);
        assert!(simple_regret(&[], 0.0).is_err());
        assert_eq!(regret_trace(&[5.0, 3.0, 4.0, 2.0], 1.0), vec![4.0, 2.0, 2.0, 1.0]);
    }
}
