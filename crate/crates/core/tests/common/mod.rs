#![allow(dead_code)]

use compatkit::glmgeom::{fit, FitResult, GlmFamily, GlmProblem};
use compatkit::nalgebra::{DMatrix, DVector};
use compatkit::statdist::std_normal_quantile;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(r: &mut ChaCha8Rng) -> f64 {
    loop {
        let u: f64 = r.random();
        if u > 0.0 {
            return std_normal_quantile(u).unwrap();
        }
    }
}

pub fn poisson(r: &mut ChaCha8Rng, mean: f64) -> f64 {
    let limit = (-mean).exp();
    let mut k = 0.0;
    let mut prod: f64 = r.random();
    while prod > limit {
        k += 1.0;
        prod *= r.random::<f64>();
    }
    k
}

pub fn binomial(r: &mut ChaCha8Rng, trials: u32, prob: f64) -> f64 {
    (0..trials).filter(|_| r.random::<f64>() < prob).count() as f64
}

/// Intercept plus standard normal covariates.
pub fn design(r: &mut ChaCha8Rng, n: usize, k: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, k, |_, j| if j == 0 { 1.0 } else { normal(r) })
}

/// A random nested pair: design A with k_A columns, M its first k_M.
pub struct NestedProblem {
    pub problem_a: GlmProblem,
    pub design_m: DMatrix<f64>,
}

pub fn random_spd(r: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| normal(r));
    &a * a.transpose() + DMatrix::identity(n, n) * 0.5
}

pub fn nested_problem(r: &mut ChaCha8Rng, family: &str) -> NestedProblem {
    let n = r.random_range(5..=10);
    let k_a = r.random_range(2..=4).min(n - 1);
    let k_m = r.random_range(1..k_a);
    let x = design(r, n, k_a);
    let (fam, y) = match family {
        "poisson" => {
            let y = (0..n)
                .map(|_| {
                    let mean = r.random_range(4.0..20.0);
                    poisson(r, mean)
                })
                .collect::<Vec<_>>();
            (GlmFamily::PoissonLog, y)
        }
        "binomial" => {
            let trials: Vec<f64> = (0..n).map(|_| r.random_range(10..=30) as f64).collect();
            let y = trials
                .iter()
                .map(|&t| {
                    let prob = r.random_range(0.2..0.8);
                    binomial(r, t as u32, prob)
                })
                .collect();
            (GlmFamily::binomial(trials).unwrap(), y)
        }
        "gaussian" => {
            let cov = random_spd(r, n);
            let y = (0..n).map(|_| 2.0 * normal(r)).collect();
            (GlmFamily::gaussian(cov).unwrap(), y)
        }
        other => panic!("unknown family {other}"),
    };
    let design_m = x.columns(0, k_m).into_owned();
    NestedProblem { problem_a: GlmProblem::new(fam, x, DVector::from_vec(y)).unwrap(), design_m }
}

pub fn fit_both(p: &NestedProblem, principle: &str) -> Option<(FitResult, FitResult)> {
    let a = fit(&p.problem_a, principle).ok()?;
    let m = fit(&p.problem_a.with_design(p.design_m.clone()).ok()?, principle).ok()?;
    Some((a, m))
}
