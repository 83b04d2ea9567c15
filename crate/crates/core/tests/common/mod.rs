#![allow(dead_code)]

use itertools::Itertools;
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use plrank::model::{PartialRanking, RankingDataset};
use plrank::rng::SimRng;

/// Upper-tail p-value of Pearson's chi-square statistic.
pub fn chi_square_p(observed: &[u64], probs: &[f64]) -> f64 {
    assert_eq!(observed.len(), probs.len());
    let total: u64 = observed.iter().sum();
    let stat: f64 = observed
        .iter()
        .zip(probs)
        .map(|(&o, &p)| {
            let e = p * total as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let dof = (observed.len() - 1) as f64;
    1.0 - ChiSquared::new(dof).unwrap().cdf(stat)
}

/// Two-sample chi-square homogeneity test over the same bins.
pub fn chi_square_two_sample_p(a: &[u64], b: &[u64]) -> f64 {
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    let mut stat = 0.0;
    let mut bins = 0;
    for (&x, &y) in a.iter().zip(b) {
        let pooled = (x + y) as f64 / (na + nb);
        if pooled == 0.0 {
            continue;
        }
        bins += 1;
        let (ea, eb) = (pooled * na, pooled * nb);
        stat += (x as f64 - ea).powi(2) / ea + (y as f64 - eb).powi(2) / eb;
    }
    1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(stat)
}

/// PL probability of an ordering, straight from the sequential construction.
pub fn pl_perm_prob(theta: &[f64], perm: &[usize]) -> f64 {
    let mut p = 1.0;
    for l in 0..perm.len() {
        let denom: f64 = perm[l..].iter().map(|&i| theta[i].exp()).sum();
        p *= theta[perm[l]].exp() / denom;
    }
    p
}

/// All orderings of `items` with their PL probabilities.
pub fn pl_distribution(theta: &[f64], items: &[usize]) -> Vec<(Vec<usize>, f64)> {
    items
        .iter()
        .copied()
        .permutations(items.len())
        .map(|p| {
            let prob = pl_perm_prob(theta, &p);
            (p, prob)
        })
        .collect()
}

/// Histogram of sampled orderings against the enumerated support.
pub fn count_orders(support: &[(Vec<usize>, f64)], draws: impl Iterator<Item = Vec<usize>>) -> Vec<u64> {
    let mut counts = vec![0u64; support.len()];
    for d in draws {
        let idx = support.iter().position(|(p, _)| *p == d).expect("ordering outside support");
        counts[idx] += 1;
    }
    counts
}

/// Random dataset with `m` rankings of sizes in `[2, k_max]`.
pub fn random_dataset(rng: &mut SimRng, n: usize, m: usize, k_max: usize) -> RankingDataset {
    let rankings = (0..m)
        .map(|j| {
            let k = rng.random_range(2..=k_max.min(n));
            let mut items: Vec<usize> = (0..n).collect();
            for t in 0..k {
                let s = rng.random_range(t..n);
                items.swap(t, s);
            }
            items.truncate(k);
            PartialRanking::new(j as u64, items).unwrap()
        })
        .collect();
    RankingDataset::new(n, rankings).unwrap()
}

pub fn random_theta(rng: &mut SimRng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

/// Central finite-difference gradient.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut up = x.to_vec();
            let mut down = x.to_vec();
            up[i] += h;
            down[i] -= h;
            (f(&up) - f(&down)) / (2.0 * h)
        })
        .collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}
