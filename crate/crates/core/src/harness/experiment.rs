//! The normalized-MSE experiment.
//!
//! For each cell `(b, d, k)` and replicate: draw `theta*`, sample `d` full PL
//! rankings over all `n` items, cut each into `n / k` rankings of size `k` on a
//! fresh random partition, fit each requested estimator and record
//! `(m k / n^2) ||theta_hat - theta*||^2` with `m k = d n`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::cr_limit_normalized;
use crate::breaking::{break_dataset, Scheme};
use crate::error::{Error, Result};
use crate::estimator::{solve_mle, solve_pairwise_mle, MleResult};
use crate::graph::{build_graph, is_connected, laplacian_spectrum};
use crate::harness::config::{Estimator, ExperimentConfig};
use crate::model::{gen_theta_star, partition_subsets, restrict_ranking, sample_pl, RankingDataset};
use crate::rng::SeedStream;

/// One CSV row. `normalized_mse` is empty when the cell's comparison graph
/// was disconnected or the solver failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub b: f64,
    pub d: usize,
    pub k: usize,
    pub replicate: usize,
    pub estimator: Estimator,
    pub normalized_mse: Option<f64>,
    pub cr_limit: f64,
    pub lambda2: f64,
    pub lambda_n: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Stream index reserved for the IB breaking randomness, so that adding or
/// removing estimators never changes the sampled data.
const IB_STREAM: u64 = 1;

/// `d` full rankings cut into `d n / k` size-`k` rankings on random partitions.
pub fn partitioned_dataset(theta: &[f64], d: usize, k: usize, stream: SeedStream) -> Result<RankingDataset> {
    let n = theta.len();
    let mut rng = stream.rng();
    let all: Vec<usize> = (0..n).collect();
    let mut rankings = Vec::with_capacity(d * (n / k));
    for _ in 0..d {
        let full = sample_pl(theta, &all, &mut rng)?;
        for block in partition_subsets(n, k, &mut rng)? {
            let user = rankings.len() as u64;
            rankings.push(restrict_ranking(&full, &block)?.with_user(user));
        }
    }
    RankingDataset::new(n, rankings)
}

fn fit(
    estimator: Estimator,
    data: &RankingDataset,
    fit_b: f64,
    config: &ExperimentConfig,
    stream: SeedStream,
) -> Result<MleResult> {
    match estimator {
        Estimator::Ml => solve_mle(data, fit_b, &config.solver),
        Estimator::Ib => {
            let broken = break_dataset(data, Scheme::Ib, &mut stream.rng_at(&[IB_STREAM]));
            solve_pairwise_mle(&broken.pairs, data.n(), fit_b, &config.solver)
        }
        Estimator::Fb => {
            let broken = break_dataset(data, Scheme::Fb, &mut stream.rng_at(&[IB_STREAM]));
            solve_pairwise_mle(&broken.pairs, data.n(), fit_b, &config.solver)
        }
    }
}

/// Runs one replicate of one cell; deterministic in `(config.seed, cell_index, replicate)`.
pub fn run_replicate(config: &ExperimentConfig, cell_index: usize, replicate: usize) -> Result<Vec<ExperimentRow>> {
    let cells = config.cells();
    let &(b, d, k) = cells
        .get(cell_index)
        .ok_or_else(|| Error::InvalidParameter(format!("cell index {cell_index} out of range")))?;
    let n = config.n;
    let stream = SeedStream::new(config.seed).child(&[cell_index as u64, replicate as u64]);
    let theta_star = gen_theta_star(n, b, &mut stream.rng_at(&[0]))?;
    let data = partitioned_dataset(&theta_star, d, k, stream.child(&[2]))?;
    let mk = data.total_size();
    assert_eq!(mk, d * n, "accounting: m k must equal d n");

    let spectrum = laplacian_spectrum(&build_graph(&data));
    let connected = is_connected(&spectrum, None);
    let cr_limit = cr_limit_normalized(k)?;
    let scale = mk as f64 / (n * n) as f64;
    let fit_b = config.fit_box(b);

    Ok(config
        .estimator_variants
        .iter()
        .map(|&estimator| {
            let mut row = ExperimentRow {
                b,
                d,
                k,
                replicate,
                estimator,
                normalized_mse: None,
                cr_limit,
                lambda2: spectrum.lambda2(),
                lambda_n: spectrum.lambda_max(),
                iterations: 0,
                converged: false,
            };
            if !connected {
                return row;
            }
            match fit(estimator, &data, fit_b, config, stream.child(&[3])) {
                Ok(result) => {
                    let sq: f64 = result.theta_hat.iter().zip(theta_star.iter()).map(|(a, t)| (a - t).powi(2)).sum();
                    row.normalized_mse = Some(scale * sq);
                    row.iterations = result.iterations;
                    row.converged = result.converged;
                }
                Err(e) => log::warn!("b={b} d={d} k={k} replicate={replicate} {}: {e}", estimator.as_str()),
            }
            row
        })
        .collect())
}

/// All cells and replicates. Work runs in parallel; rows come back in
/// `(cell, replicate, estimator)` order regardless of scheduling.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ExperimentRow>> {
    config.validate()?;
    let tasks: Vec<(usize, usize)> =
        (0..config.cells().len()).flat_map(|c| (0..config.replicates).map(move |r| (c, r))).collect();
    let rows = tasks.into_par_iter().map(|(c, r)| run_replicate(config, c, r)).collect::<Result<Vec<_>>>()?;
    Ok(rows.into_iter().flatten().collect())
}

/// Mean normalized MSE of one `(b, d, k, estimator)` cell across replicates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub b: f64,
    pub d: usize,
    pub k: usize,
    pub estimator: Estimator,
    pub mean: f64,
    /// Standard error of the mean (0 with a single replicate).
    pub std_err: f64,
    /// Replicates with a recorded MSE.
    pub count: usize,
    /// Replicates without one (disconnected graph or solver failure).
    pub missing: usize,
    pub cr_limit: f64,
}

impl CellSummary {
    /// Normal-approximation 95% band for the mean.
    pub fn band(&self) -> (f64, f64) {
        (self.mean - 1.96 * self.std_err, self.mean + 1.96 * self.std_err)
    }
}

/// Groups rows by `(b, d, k, estimator)` in first-appearance order.
pub fn summarize(rows: &[ExperimentRow]) -> Vec<CellSummary> {
    let mut keys: Vec<(f64, usize, usize, Estimator)> = Vec::new();
    for r in rows {
        let key = (r.b, r.d, r.k, r.estimator);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(b, d, k, estimator)| {
            let cell: Vec<&ExperimentRow> =
                rows.iter().filter(|r| r.b == b && r.d == d && r.k == k && r.estimator == estimator).collect();
            let values: Vec<f64> = cell.iter().filter_map(|r| r.normalized_mse).collect();
            let count = values.len();
            let mean = if count > 0 { values.iter().sum::<f64>() / count as f64 } else { f64::NAN };
            let std_err = if count > 1 {
                let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
                (var / count as f64).sqrt()
            } else {
                0.0
            };
            CellSummary {
                b,
                d,
                k,
                estimator,
                mean,
                std_err,
                count,
                missing: cell.len() - count,
                cr_limit: cell[0].cr_limit,
            }
        })
        .collect()
}
