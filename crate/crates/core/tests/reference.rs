//! Statistical and brute-force reference checks.

use drebo::bench::benchmarks;
use drebo::graph::SimilarityGraph;
use drebo::sampling::{sample_uniform, sobol_unit, subsample_pool};
use drebo::{make_rng, Classifier, PoolSet, RunConfig, SearchSpace};
use nalgebra::DMatrix;
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[test]
fn symmetric_operator_has_unit_spectral_radius() {
    let mut rng = make_rng(10);
    for _ in 0..20 {
        let pts: Vec<Vec<f64>> = (0..10).map(|_| vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)]).collect();
        let beta = rng.gen_range(0.1..5.0);
        let s = SimilarityGraph::build(&pts, beta).unwrap().symmetric_normalized();
        let m = DMatrix::from_fn(10, 10, |i, j| s.get(i, j));
        let eig = m.symmetric_eigen();
        let largest = eig.eigenvalues.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let most_negative = eig.eigenvalues.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        assert!((largest - 1.0).abs() < 1e-8, "largest eigenvalue {largest}");
        assert!(most_negative >= -1.0 - 1e-8);
    }
}

/// Exact star discrepancy of a 2-D point set by enumerating critical boxes.
fn star_discrepancy(points: &[Vec<f64>]) -> f64 {
    let n = points.len() as f64;
    let mut xs: Vec<f64> = points.iter().map(|p| p[0]).chain([1.0]).collect();
    let mut ys: Vec<f64> = points.iter().map(|p| p[1]).chain([1.0]).collect();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let mut worst: f64 = 0.0;
    for &x in &xs {
        for &y in &ys {
            let volume = x * y;
            let open = points.iter().filter(|p| p[0] < x && p[1] < y).count() as f64 / n;
            let closed = points.iter().filter(|p| p[0] <= x && p[1] <= y).count() as f64 / n;
            worst = worst.max(volume - open).max(closed - volume);
        }
    }
    worst
}

#[test]
fn sobol_points_are_more_even_than_uniform_points() {
    let sobol = star_discrepancy(&sobol_unit(2, 256).unwrap());
    let unit = SearchSpace::cube(2, 0.0, 1.0).unwrap();
    let mut rng = make_rng(5);
    let wins = (0..20)
        .filter(|_| sobol < star_discrepancy(&sample_uniform(&unit, 256, &mut rng)))
        .count();
    assert!(wins > 10, "Sobol' discrepancy {sobol} beat uniform in only {wins}/20 trials");
}

#[test]
fn uniform_sampler_is_centered() {
    let space = SearchSpace::new(vec![-5.0, 0.0], vec![10.0, 15.0]).unwrap();
    let n = 100_000;
    let pts = sample_uniform(&space, n, &mut make_rng(8));
    for k in 0..2 {
        let mean = pts.iter().map(|p| p[k]).sum::<f64>() / n as f64;
        let mid = 0.5 * (space.lower()[k] + space.upper()[k]);
        let se = space.width(k) / 12f64.sqrt() / (n as f64).sqrt();
        assert!((mean - mid).abs() <= 3.0 * se);
    }
}

#[test]
fn single_draw_pool_subsets_are_uniform() {
    let space = SearchSpace::cube(1, 0.0, 1.0).unwrap();
    let pool = PoolSet::new(&space, vec![vec![0.0], vec![0.5], vec![1.0]]).unwrap();
    let mut rng = make_rng(12);
    let trials = 30_000;
    let mut counts = [0usize; 3];
    for _ in 0..trials {
        counts[subsample_pool(&pool, 1, &mut rng).unwrap().indices[0]] += 1;
    }
    let p = 1.0 / 3.0;
    let se = (p * (1.0 - p) / trials as f64).sqrt();
    for c in counts {
        assert!((c as f64 / trials as f64 - p).abs() <= 3.0 * se, "{counts:?}");
    }
}

#[test]
fn random_search_first_query_is_uniform() {
    let space = SearchSpace::cube(1, 0.0, 1.0).unwrap();
    let f = drebo::optimizer::FnObjective(|x: &[f64]| x[0]);
    let trials = 10_000;
    let mut bins = [0usize; 10];
    for seed in 0..trials {
        let config = RunConfig {
            classifier: Classifier::RandomSearch,
            n_init: 1,
            iterations: 1,
            seed,
            ..RunConfig::default()
        };
        let record = drebo::run(&config, &space, &f, None).unwrap();
        let x = record.evaluations[1].point[0];
        bins[((x * 10.0) as usize).min(9)] += 1;
    }
    let expected = trials as f64 / 10.0;
    let chi2: f64 = bins.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
    let p = 1.0 - ChiSquared::new(9.0).unwrap().cdf(chi2);
    assert!(p > 0.001, "chi-square {chi2}, p = {p}, bins {bins:?}");
}

#[test]
fn known_optima_are_grid_certified() {
    for b in benchmarks() {
        let space = b.space();
        let steps = 1000;
        let mut best = (f64::INFINITY, vec![0.0, 0.0]);
        for i in 0..steps {
            for j in 0..steps {
                let x = vec![
                    space.lower()[0] + space.width(0) * i as f64 / (steps - 1) as f64,
                    space.lower()[1] + space.width(1) * j as f64 / (steps - 1) as f64,
                ];
                let v = b.evaluate(&x).unwrap();
                if v < best.0 {
                    best = (v, x);
                }
            }
        }
        // compass refinement from the best grid point
        let (mut f, mut x) = best.clone();
        let mut h = space.width(0).max(space.width(1)) / steps as f64;
        while h > 1e-12 {
            let mut moved = false;
            for k in 0..2 {
                for dir in [1.0, -1.0] {
                    let mut y = x.clone();
                    y[k] += dir * h;
                    space.clamp(&mut y);
                    let v = b.evaluate(&y).unwrap();
                    if v < f {
                        f = v;
                        x = y;
                        moved = true;
                    }
                }
            }
            if !moved {
                h *= 0.5;
            }
        }
        assert!(b.known_optimum_value() <= best.0 + 1e-12, "{}: grid found {}", b.name(), best.0);
        // Bukin N.6 has a ridge that compass steps cannot follow, so only the bound is checked there
        if b.name() != "bukin6" {
            assert!((f - b.known_optimum_value()).abs() < 1e-6, "{}: refined {f}", b.name());
        }
    }
}
