//! Lower bounds, Fisher information and upper-bound diagnostics.
//!
//! All bounds are on the squared error `E ||theta_hat - theta*||^2` except the
//! upper-bound expressions (`thm3_upper_bound`, `thm4_upper_bound`, the
//! corollaries), which bound the unsquared error `||theta_hat - theta*||_2`
//! with high probability.

use itertools::Itertools;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::estimator::{add_ranking_hessian, hessian};
use crate::graph::{build_graph, is_connected, laplacian_spectrum, LaplacianSpectrum};
use crate::model::{ranking_log_prob, sample_pl, PartialRanking, RankingDataset};
use crate::rng::SeedStream;

/// A bound that may be infinite, or undefined when its hypotheses fail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundValue {
    Finite(f64),
    Infinite,
    Undefined,
}

impl BoundValue {
    pub fn value(&self) -> Option<f64> {
        match *self {
            BoundValue::Finite(v) => Some(v),
            BoundValue::Infinite => Some(f64::INFINITY),
            BoundValue::Undefined => None,
        }
    }

    fn from_f64(v: f64) -> Self {
        if v.is_infinite() {
            BoundValue::Infinite
        } else {
            BoundValue::Finite(v)
        }
    }
}

impl Serialize for BoundValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            BoundValue::Finite(v) => s.serialize_f64(v),
            BoundValue::Infinite => s.serialize_str("inf"),
            BoundValue::Undefined => s.serialize_str("undefined"),
        }
    }
}

/// `H_k = sum_{l=1}^k 1/l`.
pub fn harmonic(k: usize) -> f64 {
    (1..=k).map(|l| 1.0 / l as f64).sum()
}

/// `(1 - H_k / k)^{-1}`, the per-item normalized Cramér-Rao limit.
pub fn cr_limit_normalized(k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("k = {k} must be >= 2")));
    }
    Ok(1.0 / (1.0 - harmonic(k) / k as f64))
}

/// Oracle (genie) minimax lower bound
/// `sum_{i>=2} 1/d_i / (2 I(mu) + 2 pi^2 / (b^2 (d_1 + d_2)))`.
///
/// `degrees` must be sorted ascending. Returns 0 at `b = 0`.
pub fn oracle_lower_bound(degrees: &[f64], b: f64, fisher_info_mu: f64) -> Result<f64> {
    if degrees.len() < 2 {
        return Err(Error::InvalidParameter("need at least two items".into()));
    }
    if degrees.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("degrees must be sorted ascending".into()));
    }
    if degrees[0] < 1.0 {
        return Err(Error::InvalidParameter(format!("degree {} < 1: item never ranked", degrees[0])));
    }
    if !(fisher_info_mu > 0.0) {
        return Err(Error::InvalidParameter("I(mu) must be positive".into()));
    }
    if b.is_nan() || b < 0.0 {
        return Err(Error::InvalidParameter(format!("b = {b} must be >= 0")));
    }
    if b == 0.0 {
        return Ok(0.0);
    }
    let penalty = 2.0 * std::f64::consts::PI.powi(2) / (b * b * (degrees[0] + degrees[1]));
    let inv_sum: f64 = degrees[1..].iter().map(|d| 1.0 / d).sum();
    Ok(inv_sum / (2.0 * fisher_info_mu + penalty))
}

/// Cramér-Rao lower bound `(1 - H_kmax/kmax)^{-1} sum_{i>=2} 1/lambda_i`;
/// infinite for a disconnected comparison graph.
pub fn cramer_rao_bound(spectrum: &LaplacianSpectrum, k_max: usize) -> Result<f64> {
    let prefactor = cr_limit_normalized(k_max)?;
    if !is_connected(spectrum, None) {
        return Ok(f64::INFINITY);
    }
    Ok(prefactor * spectrum.eigenvalues[1..].iter().map(|l| 1.0 / l).sum::<f64>())
}

/// `sum_{i>=2} 1/lambda_i` of an arbitrary symmetric information matrix.
pub fn inverse_eigen_sum(info: &DMatrix<f64>) -> f64 {
    let mut ev: Vec<f64> = info.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    let tol = 1e-8 * ev.last().copied().unwrap_or(0.0).abs().max(1.0);
    if ev.len() < 2 || ev[1] <= tol {
        return f64::INFINITY;
    }
    ev[1..].iter().map(|l| 1.0 / l).sum()
}

/// `P[i and i' both still contend at round l]` for a uniformly random ranking
/// of `k` items: `(k - l + 1)(k - l) / (k (k - 1))`.
pub fn contention_probability_zero(k: usize, round: usize) -> Result<f64> {
    if k < 2 || round < 1 || round > k - 1 {
        return Err(Error::InvalidParameter(format!("need 1 <= l <= k - 1, got k = {k}, l = {round}")));
    }
    let (k, l) = (k as f64, round as f64);
    Ok((k - l + 1.0) * (k - l) / (k * (k - 1.0)))
}

/// Per-pair weight of the Fisher information at zero for a size-`k` ranking:
/// `sum_{l=1}^{k-1} (k - l) / (k (k - 1) (k - l + 1))`.
pub fn pair_information_zero(k: usize) -> f64 {
    let kf = k as f64;
    (1..k).map(|l| (kf - l as f64) / (kf * (kf - 1.0) * (kf - l as f64 + 1.0))).sum()
}

/// Exact Fisher information `I(0)` for the assignment `subsets` over `n` items.
pub fn fisher_information_zero(subsets: &[Vec<usize>], n: usize) -> Result<DMatrix<f64>> {
    let mut info = DMatrix::zeros(n, n);
    for s in subsets {
        if s.len() < 2 {
            return Err(Error::RankingTooShort { len: s.len() });
        }
        if let Some(&item) = s.iter().find(|&&i| i >= n) {
            return Err(Error::ItemOutOfRange { item, n });
        }
        let c = pair_information_zero(s.len());
        for (&a, &b) in s.iter().tuple_combinations() {
            info[(a, a)] += c;
            info[(b, b)] += c;
            info[(a, b)] -= c;
            info[(b, a)] -= c;
        }
    }
    Ok(info)
}

/// Largest subset size for which [`fisher_information_exact`] enumerates.
pub const EXACT_FISHER_MAX_K: usize = 8;

/// `I(theta) = -E_theta[H(theta)]` by enumerating every ordering of each subset.
pub fn fisher_information_exact(theta: &[f64], subsets: &[Vec<usize>]) -> Result<DMatrix<f64>> {
    let n = theta.len();
    let mut info = DMatrix::zeros(n, n);
    for s in subsets {
        if s.len() > EXACT_FISHER_MAX_K {
            return Err(Error::InvalidParameter(format!(
                "exact Fisher information enumerates k! orders; k = {} > {EXACT_FISHER_MAX_K}",
                s.len()
            )));
        }
        for perm in s.iter().copied().permutations(s.len()) {
            let ranking = PartialRanking::new(0, perm)?;
            let prob = ranking_log_prob(theta, &ranking).exp();
            add_ranking_hessian(theta, &ranking, -prob, &mut info);
        }
    }
    Ok(info)
}

/// Monte-Carlo Fisher information with per-entry standard errors.
#[derive(Debug, Clone)]
pub struct FisherEstimate {
    pub mean: DMatrix<f64>,
    pub std_err: DMatrix<f64>,
    pub samples: usize,
}

/// Averages `-H(theta)` over `samples` independent draws of one PL ranking per
/// subset. Sample `s` uses stream `[s]` of `stream`, and the reduction runs in
/// sample order, so the result does not depend on the thread count.
pub fn fisher_information_mc(
    theta: &[f64],
    subsets: &[Vec<usize>],
    samples: usize,
    stream: SeedStream,
) -> Result<FisherEstimate> {
    if samples < 2 {
        return Err(Error::InvalidParameter("need at least two samples".into()));
    }
    let n = theta.len();
    let draws: Vec<DMatrix<f64>> = (0..samples)
        .into_par_iter()
        .map(|s| -> Result<DMatrix<f64>> {
            let mut rng = stream.rng_at(&[s as u64]);
            let rankings = subsets.iter().map(|sub| sample_pl(theta, sub, &mut rng)).collect::<Result<Vec<_>>>()?;
            Ok(-hessian(theta, &RankingDataset::new(n, rankings)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let count = samples as f64;
    let mean = draws.iter().fold(DMatrix::zeros(n, n), |acc, d| acc + d) / count;
    let var = draws.iter().fold(DMatrix::zeros(n, n), |acc, d| acc + (d - &mean).map(|x| x * x)) / (count - 1.0);
    let std_err = var.map(|v| (v / count).sqrt());
    Ok(FisherEstimate { mean, std_err, samples })
}

/// Error-norm bound for the ML estimator. `k` is the average ranking size;
/// the pairwise branch applies when `k == 2`. `Undefined` when the `k > 2`
/// denominator `lambda_2 - 16 e^{2b} sqrt(lambda_n log n)` is not positive.
pub fn thm3_upper_bound(lambda2: f64, lambda_n: f64, m: usize, k: f64, b: f64, n: usize) -> BoundValue {
    let log_n = (n as f64).ln();
    let m = m as f64;
    if k <= 2.0 {
        if lambda2 <= 1e-8 {
            return BoundValue::Infinite;
        }
        return BoundValue::from_f64(4.0 * (1.0 + (2.0 * b).exp()).powi(2) * (m * log_n).sqrt() / lambda2);
    }
    let denom = lambda2 - 16.0 * (2.0 * b).exp() * (lambda_n * log_n).sqrt();
    if !(denom > 0.0) {
        return BoundValue::Undefined;
    }
    BoundValue::from_f64(8.0 * (4.0 * b).exp() * (2.0 * m * k * log_n).sqrt() / denom)
}

/// Error-norm bound for the full-breaking estimator, `2(1+e^{2b})^2 sqrt(mk log n) / lambda_2`.
pub fn thm4_upper_bound(lambda2: f64, m: usize, k: f64, b: f64, n: usize) -> BoundValue {
    if lambda2 <= 1e-8 {
        return BoundValue::Infinite;
    }
    let log_n = (n as f64).ln();
    BoundValue::from_f64(2.0 * (1.0 + (2.0 * b).exp()).powi(2) * (m as f64 * k * log_n).sqrt() / lambda2)
}

/// ML error-norm bound under uniformly random assignment.
pub fn cor1_upper_bound(n: usize, m: usize, k: f64, b: f64) -> f64 {
    let (n, m) = (n as f64, m as f64);
    if k <= 2.0 {
        4.0 * (1.0 + (2.0 * b).exp()).powi(2) * (n * n * n.ln() / m).sqrt()
    } else {
        32.0 * (4.0 * b).exp() * (2.0 * n * n * n.ln() / (m * k)).sqrt()
    }
}

/// IB error-norm bound under uniformly random assignment.
pub fn cor2_upper_bound(n: usize, m: usize, k: f64, b: f64) -> f64 {
    let (n, m) = (n as f64, m as f64);
    4.0 * (1.0 + (2.0 * b).exp()).powi(2) * (2.0 * n * n * n.ln() / (m * k)).sqrt()
}

/// FB error-norm bound under uniformly random assignment.
pub fn thm4_random_upper_bound(n: usize, m: usize, k: f64, b: f64) -> f64 {
    let (n, m) = (n as f64, m as f64);
    4.0 * (1.0 + (2.0 * b).exp()).powi(2) * (n * n * n.ln() / (m * k)).sqrt()
}

#[derive(Debug, Clone, Serialize)]
pub struct InputsSummary {
    pub n: usize,
    pub m: usize,
    pub k_max: usize,
    pub k_avg: f64,
    pub b: f64,
    pub lambda2: f64,
    pub lambda_n: f64,
    pub degrees: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub oracle_lb: BoundValue,
    pub cramer_rao_lb: BoundValue,
    pub cr_limit_normalized: f64,
    pub thm3_ub: BoundValue,
    pub thm4_ub: BoundValue,
    /// `sum_{i>=2} 1/lambda_i(I(theta))` at a supplied `theta`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cramer_rao_at_theta: Option<BoundValue>,
    pub inputs_summary: InputsSummary,
}

/// Monte-Carlo sample count for `I(theta)` when subsets are too large to enumerate.
pub const REPORT_FISHER_SAMPLES: usize = 2000;

/// Evaluates every bound for a dataset's assignment. The PL model is assumed
/// for the oracle bound (`I(mu) = 1`).
pub fn bound_report(
    dataset: &RankingDataset,
    b: f64,
    theta: Option<&[f64]>,
    stream: SeedStream,
) -> Result<BoundReport> {
    let graph = build_graph(dataset);
    let spectrum = laplacian_spectrum(&graph);
    let mut degrees = graph.degrees().to_vec();
    degrees.sort_by(f64::total_cmp);
    let k_max = dataset.max_size();
    let k_avg = dataset.average_size();
    let (n, m) = (dataset.n(), dataset.m());

    let oracle_lb = if degrees[0] < 1.0 {
        // an unranked item cannot be estimated at all
        BoundValue::Infinite
    } else {
        BoundValue::from_f64(oracle_lower_bound(&degrees, b, 1.0)?)
    };
    let cramer_rao_at_theta = match theta {
        None => None,
        Some(t) => {
            if t.len() != n {
                return Err(Error::InvalidParameter(format!("theta has {} entries, dataset has {n} items", t.len())));
            }
            let subsets = dataset.subsets();
            let info = if k_max <= 5 {
                fisher_information_exact(t, &subsets)?
            } else {
                fisher_information_mc(t, &subsets, REPORT_FISHER_SAMPLES, stream)?.mean
            };
            Some(BoundValue::from_f64(inverse_eigen_sum(&info)))
        }
    };
    Ok(BoundReport {
        oracle_lb,
        cramer_rao_lb: BoundValue::from_f64(cramer_rao_bound(&spectrum, k_max)?),
        cr_limit_normalized: cr_limit_normalized(k_max)?,
        thm3_ub: thm3_upper_bound(spectrum.lambda2(), spectrum.lambda_max(), m, k_avg, b, n),
        thm4_ub: thm4_upper_bound(spectrum.lambda2(), m, k_avg, b, n),
        cramer_rao_at_theta,
        inputs_summary: InputsSummary {
            n,
            m,
            k_max,
            k_avg,
            b,
            lambda2: spectrum.lambda2(),
            lambda_n: spectrum.lambda_max(),
            degrees,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_examples() {
        assert_eq!(oracle_lower_bound(&[10.0, 10.0], 0.0, 1.0).unwrap(), 0.0);
        let inf = oracle_lower_bound(&[10.0, 10.0], f64::INFINITY, 1.0).unwrap();
        assert!((inf - 0.05).abs() < 1e-15);
        let b1 = oracle_lower_bound(&[10.0, 10.0], 1.0, 1.0).unwrap();
        let expect = 0.1 / (2.0 + 2.0 * std::f64::consts::PI.powi(2) / 20.0);
        assert!((b1 - expect).abs() < 1e-15);
        assert!((b1 - 0.03348).abs() < 1e-5);
        assert!(oracle_lower_bound(&[3.0, 2.0], 1.0, 1.0).is_err());
    }

    #[test]
    fn cr_limits() {
        assert!((cr_limit_normalized(2).unwrap() - 4.0).abs() < 1e-14);
        assert!((cr_limit_normalized(4).unwrap() - 48.0 / 23.0).abs() < 1e-14);
        let big = cr_limit_normalized(1 << 20).unwrap();
        assert!(big > 1.0 && big <= 4.0);
        assert!(cr_limit_normalized(1).is_err());
    }

    #[test]
    fn triangle_cramer_rao() {
        let s = LaplacianSpectrum { eigenvalues: vec![0.0, 3.0, 3.0], trace: 6.0 };
        assert!((cramer_rao_bound(&s, 2).unwrap() - 8.0 / 3.0).abs() < 1e-14);
        let s = LaplacianSpectrum { eigenvalues: vec![0.0, 0.0, 2.0, 2.0], trace: 4.0 };
        assert_eq!(cramer_rao_bound(&s, 2).unwrap(), f64::INFINITY);
    }

    #[test]
    fn contention_examples() {
        assert_eq!(contention_probability_zero(5, 1).unwrap(), 1.0);
        assert!((contention_probability_zero(3, 2).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((contention_probability_zero(4, 3).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert!(contention_probability_zero(4, 4).is_err());
        assert!(contention_probability_zero(4, 0).is_err());
    }

    #[test]
    fn pair_information_for_pairs() {
        assert!((pair_information_zero(2) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn upper_bound_examples() {
        let v = thm3_upper_bound(3.0, 3.0, 3, 2.0, 0.0, 3).value().unwrap();
        assert!((v - 16.0 * (3.0 * 3f64.ln()).sqrt() / 3.0).abs() < 1e-12);
        let v = thm4_upper_bound(3.0, 3, 2.0, 0.0, 3).value().unwrap();
        assert!((v - 8.0 * (6.0 * 3f64.ln()).sqrt() / 3.0).abs() < 1e-12);
        assert_eq!(thm4_upper_bound(0.0, 3, 2.0, 0.0, 3), BoundValue::Infinite);
        assert_eq!(thm3_upper_bound(1.0, 50.0, 10, 4.0, 0.5, 20), BoundValue::Undefined);
    }

    #[test]
    fn bound_value_json() {
        let v = serde_json::to_string(&[BoundValue::Finite(1.5), BoundValue::Infinite, BoundValue::Undefined]).unwrap();
        assert_eq!(v, r#"[1.5,"inf","undefined"]"#);
    }
}
