//! Preference vectors, partial rankings and the generative models.
//!
//! A partial ranking lists a subset of items best-first. Under the
//! Plackett-Luce (PL) model the first item is drawn from the subset with
//! probability proportional to `exp(theta_i)`, the second from the remainder,
//! and so on. The same distribution arises from sorting independent
//! exponential clocks with rates `exp(theta_i)`, and from the Thurstone model
//! with standard Gumbel noise.

use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// A point of the sum-zero, box-bounded parameter space.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceVector {
    theta: Vec<f64>,
    b: f64,
}

impl PreferenceVector {
    /// Validates `sum(theta) = 0` (to `1e-9 * n`) and `|theta_i| <= b`.
    /// `b` may be infinite for an unconstrained estimate.
    pub fn new(theta: Vec<f64>, b: f64) -> Result<Self> {
        if b.is_nan() || b < 0.0 {
            return Err(Error::InvalidParameter(format!("box bound b = {b} must be >= 0")));
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidParameter("theta has non-finite entries".into()));
        }
        let n = theta.len();
        let sum: f64 = theta.iter().sum();
        if sum.abs() > 1e-9 * n.max(1) as f64 {
            return Err(Error::InvalidParameter(format!("theta sums to {sum}, expected 0")));
        }
        if let Some(t) = theta.iter().find(|t| t.abs() > b + 1e-12) {
            return Err(Error::InvalidParameter(format!("|theta_i| = {} exceeds b = {b}", t.abs())));
        }
        Ok(Self { theta, b })
    }

    pub fn zeros(n: usize) -> Self {
        Self { theta: vec![0.0; n], b: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.theta
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.theta
    }
}

impl Deref for PreferenceVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.theta
    }
}

/// A ranking of a subset of items, most preferred first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartialRanking {
    pub user: u64,
    items: Vec<usize>,
}

impl PartialRanking {
    /// Rejects empty and repeated-item rankings. The length >= 2 and index
    /// range checks happen when a ranking enters a [`RankingDataset`].
    pub fn new(user: u64, items: Vec<usize>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::EmptyAssignment);
        }
        let mut sorted = items.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateItem { item: w[0] });
        }
        Ok(Self { user, items })
    }

    pub fn with_user(mut self, user: u64) -> Self {
        self.user = user;
        self
    }

    pub fn items(&self) -> &[usize] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Zero-based position of `item`, if ranked.
    pub fn position(&self, item: usize) -> Option<usize> {
        self.items.iter().position(|&i| i == item)
    }
}

/// The estimation input: `m >= 1` rankings of length >= 2 over `n` items.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingDataset {
    n: usize,
    rankings: Vec<PartialRanking>,
}

impl RankingDataset {
    pub fn new(n: usize, rankings: Vec<PartialRanking>) -> Result<Self> {
        if rankings.is_empty() {
            return Err(Error::NoRankings);
        }
        for r in &rankings {
            if r.len() < 2 {
                return Err(Error::RankingTooShort { len: r.len() });
            }
            if let Some(&item) = r.items().iter().find(|&&i| i >= n) {
                return Err(Error::ItemOutOfRange { item, n });
            }
        }
        Ok(Self { n, rankings })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.rankings.len()
    }

    pub fn rankings(&self) -> &[PartialRanking] {
        &self.rankings
    }

    /// `sum_j k_j`.
    pub fn total_size(&self) -> usize {
        self.rankings.iter().map(PartialRanking::len).sum()
    }

    /// Average ranking length `k = (1/m) sum_j k_j`.
    pub fn average_size(&self) -> f64 {
        self.total_size() as f64 / self.m() as f64
    }

    pub fn max_size(&self) -> usize {
        self.rankings.iter().map(PartialRanking::len).max().unwrap_or(0)
    }

    /// The item sets `S_j` (in ranked order).
    pub fn subsets(&self) -> Vec<Vec<usize>> {
        self.rankings.iter().map(|r| r.items().to_vec()).collect()
    }

    /// Applies an item relabeling `item -> perm[item]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::InvalidParameter("permutation length differs from n".into()));
        }
        let rankings = self
            .rankings
            .iter()
            .map(|r| PartialRanking::new(r.user, r.items().iter().map(|&i| perm[i]).collect()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.n, rankings)
    }
}

/// Noise law of a Thurstone (random utility) model, given by its quantile
/// function and the Fisher information of its location family.
#[derive(Clone)]
pub struct ThurstoneNoise {
    inverse_cdf: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    fisher_info: f64,
}

impl ThurstoneNoise {
    pub fn new(inverse_cdf: impl Fn(f64) -> f64 + Send + Sync + 'static, fisher_info: f64) -> Result<Self> {
        if !(fisher_info > 0.0 && fisher_info.is_finite()) {
            return Err(Error::InvalidParameter(format!("fisher information {fisher_info} must be positive")));
        }
        let probes: Vec<f64> = (0..100).map(|i| inverse_cdf((i as f64 + 0.5) / 100.0)).collect();
        if probes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("inverse CDF is not strictly increasing".into()));
        }
        Ok(Self { inverse_cdf: Arc::new(inverse_cdf), fisher_info })
    }

    /// Standard Gumbel: `F(c) = exp(-exp(-c))`. Recovers the PL model; `I(mu) = 1`.
    pub fn gumbel() -> Self {
        Self::new(|u: f64| -(-u.ln()).ln(), 1.0).expect("gumbel quantile is monotone")
    }

    /// Standard normal (Thurstone case V); `I(mu) = 1`.
    pub fn gaussian() -> Self {
        let normal = Normal::standard();
        Self::new(move |u| normal.inverse_cdf(u), 1.0).expect("normal quantile is monotone")
    }

    pub fn fisher_info(&self) -> f64 {
        self.fisher_info
    }

    pub fn quantile(&self, u: f64) -> f64 {
        (self.inverse_cdf)(u)
    }
}

impl fmt::Debug for ThurstoneNoise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ThurstoneNoise").field("fisher_info", &self.fisher_info).finish_non_exhaustive()
    }
}

/// Which PL sampler to run. Both produce the same distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PlSampler {
    /// Softmax selection without replacement.
    #[default]
    Sequential,
    /// Sort independent exponential clocks with means `exp(-theta_i)`.
    ExponentialLatent,
}

fn check_subset(theta: &[f64], subset: &[usize]) -> Result<()> {
    if subset.is_empty() {
        return Err(Error::EmptyAssignment);
    }
    if let Some(&item) = subset.iter().find(|&&i| i >= theta.len()) {
        return Err(Error::ItemOutOfRange { item, n: theta.len() });
    }
    Ok(())
}

/// Draws a PL ranking of `subset` with the sequential construction.
pub fn sample_pl<R: Rng + ?Sized>(theta: &[f64], subset: &[usize], rng: &mut R) -> Result<PartialRanking> {
    sample_pl_with(theta, subset, PlSampler::Sequential, rng)
}

pub fn sample_pl_with<R: Rng + ?Sized>(
    theta: &[f64],
    subset: &[usize],
    sampler: PlSampler,
    rng: &mut R,
) -> Result<PartialRanking> {
    check_subset(theta, subset)?;
    let items = match sampler {
        PlSampler::Sequential => sequential_order(theta, subset, rng),
        PlSampler::ExponentialLatent => {
            // X_i = E_i * exp(-theta_i); compare on the log scale.
            let keys: Vec<f64> = subset
                .iter()
                .map(|&i| {
                    let e: f64 = Exp1.sample(rng);
                    e.ln() - theta[i]
                })
                .collect();
            order_by_keys(subset, &keys, false)
        }
    };
    PartialRanking::new(0, items)
}

fn sequential_order<R: Rng + ?Sized>(theta: &[f64], subset: &[usize], rng: &mut R) -> Vec<usize> {
    let shift = subset.iter().map(|&i| theta[i]).fold(f64::NEG_INFINITY, f64::max);
    let mut remaining: Vec<(usize, f64)> = subset.iter().map(|&i| (i, (theta[i] - shift).exp())).collect();
    let mut order = Vec::with_capacity(subset.len());
    while remaining.len() > 1 {
        let total: f64 = remaining.iter().map(|&(_, w)| w).sum();
        let u = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = remaining.len() - 1;
        for (idx, &(_, w)) in remaining.iter().enumerate() {
            acc += w;
            if u < acc {
                pick = idx;
                break;
            }
        }
        order.push(remaining.remove(pick).0);
    }
    order.push(remaining[0].0);
    order
}

/// Sorts `items` by `keys` (ascending, or descending when `descending`),
/// breaking exact ties by lower item index.
fn order_by_keys(items: &[usize], keys: &[f64], descending: bool) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..items.len()).collect();
    idx.sort_by(|&a, &b| {
        let ord = keys[a].total_cmp(&keys[b]);
        let ord = if descending { ord.reverse() } else { ord };
        ord.then(items[a].cmp(&items[b]))
    });
    idx.into_iter().map(|j| items[j]).collect()
}

/// Draws a Thurstone ranking: `U_i = theta_i + noise`, sorted by decreasing utility.
pub fn sample_thurstone<R: Rng + ?Sized>(
    theta: &[f64],
    subset: &[usize],
    noise: &ThurstoneNoise,
    rng: &mut R,
) -> Result<PartialRanking> {
    check_subset(theta, subset)?;
    let utilities: Vec<f64> = subset
        .iter()
        .map(|&i| {
            // open interval (0, 1)
            let u = loop {
                let u: f64 = rng.random();
                if u > 0.0 {
                    break u;
                }
            };
            theta[i] + noise.quantile(u)
        })
        .collect();
    PartialRanking::new(0, order_by_keys(subset, &utilities, true))
}

/// The sub-ranking of `full` induced on `subset`.
pub fn restrict_ranking(full: &PartialRanking, subset: &[usize]) -> Result<PartialRanking> {
    if subset.is_empty() {
        return Err(Error::EmptyAssignment);
    }
    let max_item = full.items().iter().copied().max().unwrap_or(0);
    let mut wanted = vec![false; max_item + 1];
    for &i in subset {
        if i > max_item || full.position(i).is_none() {
            return Err(Error::NotASubset { item: i });
        }
        wanted[i] = true;
    }
    let items: Vec<usize> = full.items().iter().copied().filter(|&i| wanted[i]).collect();
    PartialRanking::new(full.user, items)
}

/// `log(e^a + e^b)` without overflow.
pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// PL log-probability of one ranking:
/// `sum_{l < k} [theta_{s(l)} - log sum_{t >= l} exp(theta_{s(t)})]`.
pub fn ranking_log_prob(theta: &[f64], ranking: &PartialRanking) -> f64 {
    let items = ranking.items();
    let mut lse = f64::NEG_INFINITY;
    let mut total = 0.0;
    for (pos, &i) in items.iter().enumerate().rev() {
        lse = log_add_exp(lse, theta[i]);
        if pos + 1 < items.len() {
            total += theta[i] - lse;
        }
    }
    total
}

/// Independent uniform subsets of the given sizes (partial Fisher-Yates).
pub fn random_subsets<R: Rng + ?Sized>(n: usize, sizes: &[usize], rng: &mut R) -> Result<Vec<Vec<usize>>> {
    if let Some(&k) = sizes.iter().find(|&&k| k < 2 || k > n) {
        return Err(Error::InvalidSubsetSize { k, n });
    }
    let mut pool: Vec<usize> = (0..n).collect();
    Ok(sizes
        .iter()
        .map(|&k| {
            // The pool is a permutation of [n] at every step, so the first k
            // entries after a partial shuffle are a uniform k-subset.
            for t in 0..k {
                let j = rng.random_range(t..n);
                pool.swap(t, j);
            }
            let mut s = pool[..k].to_vec();
            s.sort_unstable();
            s
        })
        .collect())
}

/// A uniformly random partition of `[n]` into `n / k` blocks of size `k`.
pub fn partition_subsets<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Vec<Vec<usize>>> {
    if k == 0 || k > n {
        return Err(Error::InvalidSubsetSize { k, n });
    }
    if !n.is_multiple_of(k) {
        return Err(Error::IndivisiblePartition { n, k });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    for t in (1..n).rev() {
        let j = rng.random_range(0..=t);
        perm.swap(t, j);
    }
    Ok(perm
        .chunks(k)
        .map(|c| {
            let mut s = c.to_vec();
            s.sort_unstable();
            s
        })
        .collect())
}

/// Ground truth for simulation: i.i.d. uniform on `[-b, b]`, then centered.
/// Centering can push coordinates past `b`, so the recorded box is `2b`.
pub fn gen_theta_star<R: Rng + ?Sized>(n: usize, b: f64, rng: &mut R) -> Result<PreferenceVector> {
    if b.is_nan() || b < 0.0 || !b.is_finite() {
        return Err(Error::InvalidParameter(format!("b = {b} must be finite and >= 0")));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    if b == 0.0 {
        return Ok(PreferenceVector::zeros(n));
    }
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(-b..=b)).collect();
    let mean = raw.iter().sum::<f64>() / n as f64;
    let mut theta: Vec<f64> = raw.iter().map(|x| x - mean).collect();
    // Make the sum exactly zero in the order it is summed.
    let head: f64 = theta[..n - 1].iter().sum();
    theta[n - 1] = -head;
    PreferenceVector::new(theta, 2.0 * b)
}
