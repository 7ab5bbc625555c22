//! Unlabeled-point generators.
//!
//! Stochastic samplers draw from the caller's stream in a fixed order: points
//! in output order and, within a point, dimensions in index order. The Halton
//! and Sobol' generators are deterministic and ignore the stream.

use log::info;
use rand::seq::index;
use rand::Rng;
use statrs::function::erf::{erfc, erfc_inv};
use std::f64::consts::SQRT_2;

use crate::data::{History, PoolSet};
use crate::error::{Error, Result};
use crate::space::SearchSpace;

mod sobol_table;

/// Smallest interval mass the inverse-CDF sampler accepts.
const MIN_MASS: f64 = 1e-300;

/// Highest dimension covered by the Sobol' direction numbers.
pub const MAX_SOBOL_DIMS: usize = sobol_table::DIRECTIONS.len() + 1;

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

fn std_normal_quantile(p: f64) -> f64 {
    -SQRT_2 * erfc_inv(2.0 * p)
}

/// Draws from `N(mu, sigma^2)` truncated to `[lo, hi]` by inverting the CDF.
///
/// Intervals lying entirely above the mean are mirrored below it first, so
/// both CDF values are computed in the accurate left tail.
pub fn sample_truncnorm<R: Rng + ?Sized>(mu: f64, sigma: f64, lo: f64, hi: f64, rng: &mut R) -> Result<f64> {
    if !(lo < hi) {
        return Err(Error::InvalidArgument(format!("empty truncation interval [{lo}, {hi}]")));
    }
    if !mu.is_finite() || !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("bad normal parameters mu = {mu}, sigma = {sigma}")));
    }
    let a = (lo - mu) / sigma;
    let b = (hi - mu) / sigma;
    let (a, b, mirrored) = if a > 0.0 { (-b, -a, true) } else { (a, b, false) };
    let pa = std_normal_cdf(a);
    let pb = std_normal_cdf(b);
    let mass = pb - pa;
    if !(mass >= MIN_MASS) {
        return Err(Error::NumericUnderflow { mu, lo, hi, mass });
    }
    let u: f64 = rng.gen();
    let z = std_normal_quantile(pa + u * mass).clamp(a, b);
    let z = if mirrored { -z } else { z };
    Ok((mu + sigma * z).clamp(lo, hi))
}

/// Unit-variance truncated normal draw.
pub fn sample_truncnorm_1d<R: Rng + ?Sized>(mu: f64, lo: f64, hi: f64, rng: &mut R) -> Result<f64> {
    sample_truncnorm(mu, 1.0, lo, hi, rng)
}

/// Number of points drawn around each of `n_centers` centers.
///
/// Counts differ by at most one; the first `n % n_centers` centers get the extra point.
pub fn allocation(n: usize, n_centers: usize) -> Vec<usize> {
    if n_centers == 0 {
        return Vec::new();
    }
    let base = n / n_centers;
    let extra = n % n_centers;
    (0..n_centers).map(|i| base + usize::from(i < extra)).collect()
}

/// Truncated normal points around every evaluated point, axis-aligned with
/// per-axis standard deviation `std` and truncated to the search space.
pub fn sample_unlabeled<R: Rng + ?Sized>(
    history: &History,
    space: &SearchSpace,
    n: usize,
    std: f64,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    if history.is_empty() {
        return Err(Error::InvalidArgument("no centers to sample around".into()));
    }
    let counts = allocation(n, history.len());
    let mut out = Vec::with_capacity(n);
    for (center, &count) in history.points().iter().zip(&counts) {
        for _ in 0..count {
            let x = center
                .iter()
                .zip(space.lower().iter().zip(space.upper()))
                .map(|(&c, (&lo, &hi))| sample_truncnorm(c, std, lo, hi, rng))
                .collect::<Result<Vec<_>>>()?;
            out.push(x);
        }
    }
    Ok(out)
}

/// i.i.d. uniform points in the box.
pub fn sample_uniform<R: Rng + ?Sized>(space: &SearchSpace, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..n).map(|_| uniform_point(space, rng)).collect()
}

pub(crate) fn uniform_point<R: Rng + ?Sized>(space: &SearchSpace, rng: &mut R) -> Vec<f64> {
    (0..space.dims())
        .map(|k| {
            let u: f64 = rng.gen();
            (space.lower()[k] + u * space.width(k)).min(space.upper()[k])
        })
        .collect()
}

/// Radical inverse of `index` in `base`.
///
/// Digits are reversed in integer arithmetic and divided once, so the result
/// is the correctly rounded value whenever the denominator stays below 2^53.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let base = u128::from(base);
    let mut numerator: u128 = 0;
    let mut denominator: u128 = 1;
    while index > 0 {
        let i = u128::from(index);
        numerator = numerator * base + i % base;
        denominator *= base;
        index = (i / base) as u64;
    }
    numerator as f64 / denominator as f64
}

/// First `n` primes.
pub fn first_primes(n: usize) -> Vec<u64> {
    let mut primes: Vec<u64> = Vec::with_capacity(n);
    let mut candidate = 2;
    while primes.len() < n {
        if primes.iter().take_while(|&&p| p * p <= candidate).all(|&p| candidate % p != 0) {
            primes.push(candidate);
        }
        candidate += 1;
    }
    primes
}

/// Unscrambled Halton points `1..=n` in the unit cube, dimension `k` using the `k`-th prime.
pub fn halton_unit(dims: usize, n: usize) -> Vec<Vec<f64>> {
    let bases = first_primes(dims);
    (1..=n as u64)
        .map(|i| bases.iter().map(|&b| radical_inverse(i, b)).collect())
        .collect()
}

/// Halton points mapped onto the box.
pub fn halton(space: &SearchSpace, n: usize) -> Vec<Vec<f64>> {
    halton_unit(space.dims(), n)
        .iter()
        .map(|u| space.from_unit(u))
        .collect()
}

/// Unscrambled Sobol' generator (Gray-code order, starting at the origin).
#[derive(Debug, Clone)]
pub struct SobolSequence {
    directions: Vec<[u32; 32]>,
    state: Vec<u32>,
    index: u64,
}

impl SobolSequence {
    pub fn new(dims: usize) -> Result<Self> {
        if dims == 0 || dims > MAX_SOBOL_DIMS {
            return Err(Error::UnsupportedDimension {
                requested: dims,
                max: MAX_SOBOL_DIMS,
            });
        }
        let mut directions = Vec::with_capacity(dims);
        // first dimension: van der Corput in base 2
        let mut first = [0u32; 32];
        for (j, v) in first.iter_mut().enumerate() {
            *v = 1u32 << (31 - j);
        }
        directions.push(first);
        for &(poly, m_init) in sobol_table::DIRECTIONS.iter().take(dims - 1) {
            let degree = (32 - poly.leading_zeros() - 1) as usize;
            let mut m = [0u32; 32];
            m[..degree].copy_from_slice(&m_init[..degree]);
            for j in degree..32 {
                let mut value = m[j - degree] ^ (m[j - degree] << degree);
                for k in 1..degree {
                    if (poly >> (degree - k)) & 1 == 1 {
                        value ^= m[j - k] << k;
                    }
                }
                m[j] = value;
            }
            let mut v = [0u32; 32];
            for j in 0..32 {
                v[j] = m[j] << (31 - j);
            }
            directions.push(v);
        }
        Ok(Self {
            directions,
            state: vec![0; dims],
            index: 0,
        })
    }

    pub fn dims(&self) -> usize {
        self.state.len()
    }

    /// Next point in `[0, 1)^dims`.
    pub fn next_point(&mut self) -> Vec<f64> {
        const SCALE: f64 = 1.0 / 4_294_967_296.0;
        let out = self.state.iter().map(|&s| s as f64 * SCALE).collect();
        // the bit flipped on the way to index + 1 is the lowest zero bit of index
        let bit = (!self.index).trailing_zeros() as usize;
        assert!(bit < 32, "Sobol' sequence exhausted after 2^32 points");
        for (s, v) in self.state.iter_mut().zip(&self.directions) {
            *s ^= v[bit];
        }
        self.index += 1;
        out
    }
}

/// First `n` Sobol' points in the unit cube.
pub fn sobol_unit(dims: usize, n: usize) -> Result<Vec<Vec<f64>>> {
    let mut seq = SobolSequence::new(dims)?;
    Ok((0..n).map(|_| seq.next_point()).collect())
}

/// First `n` Sobol' points mapped onto the box.
pub fn sobol(space: &SearchSpace, n: usize) -> Result<Vec<Vec<f64>>> {
    Ok(sobol_unit(space.dims(), n)?
        .iter()
        .map(|u| space.from_unit(u))
        .collect())
}

/// Uniform subset (without replacement) of the pool.
#[derive(Debug, Clone)]
pub struct PoolSubset {
    /// Indices into the original pool, in draw order.
    pub indices: Vec<usize>,
    pub pool: PoolSet,
}

/// Draws `m` distinct candidates uniformly; asking for more than the pool holds takes all of it.
pub fn subsample_pool<R: Rng + ?Sized>(pool: &PoolSet, m: usize, rng: &mut R) -> Result<PoolSubset> {
    if m == 0 {
        return Err(Error::InvalidArgument("subset size must be positive".into()));
    }
    let take = if m > pool.len() {
        info!("subset of {m} requested from a pool of {}; using the whole pool", pool.len());
        pool.len()
    } else {
        m
    };
    let indices = index::sample(rng, pool.len(), take).into_vec();
    let subset = pool.select(&indices);
    Ok(PoolSubset { indices, pool: subset })
}

/// Uniform subset of the given index list (used for the unevaluated part of a pool).
pub(crate) fn subsample_indices<R: Rng + ?Sized>(indices: &[usize], m: usize, rng: &mut R) -> Vec<usize> {
    if m >= indices.len() {
        return indices.to_vec();
    }
    index::sample(rng, indices.len(), m)
        .into_iter()
        .map(|k| indices[k])
        .collect()
}
