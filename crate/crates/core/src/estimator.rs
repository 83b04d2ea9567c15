//! PL likelihood, derivatives and constrained maximum-likelihood solvers.
//!
//! Two solvers are provided over `Theta_b = {sum theta = 0} ∩ [-b, b]^n`:
//!
//! - `MmThenProject`: Hunter's minorization-maximization iteration run to
//!   convergence on the unconstrained problem, followed by a Euclidean
//!   projection onto `Theta_b`.
//! - `ProjectedGradient`: gradient ascent with Armijo backtracking, projecting
//!   onto `Theta_b` after every step.
//!
//! Log-likelihood changes between iterates are evaluated directly from the
//! parameter difference (`log1p`/`expm1`), not as a difference of two large
//! totals, so the relative-change stopping rule stays meaningful near the
//! optimum.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_graph, ComparisonGraph};
use crate::model::{log_add_exp, ranking_log_prob, PartialRanking, PreferenceVector, RankingDataset};

/// A (possibly weighted) pairwise outcome `winner ≻ loser`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedPair {
    pub winner: usize,
    pub loser: usize,
    pub weight: f64,
}

impl WeightedPair {
    pub fn new(winner: usize, loser: usize, weight: f64) -> Result<Self> {
        if winner == loser {
            return Err(Error::InvalidParameter(format!("pair compares item {winner} with itself")));
        }
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::InvalidParameter(format!("pair weight {weight} must be positive")));
        }
        Ok(Self { winner, loser, weight })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMethod {
    #[default]
    MmThenProject,
    ProjectedGradient,
}

/// Armijo backtracking parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StepRule {
    pub initial: f64,
    pub shrink: f64,
    pub sufficient_increase: f64,
}

impl Default for StepRule {
    fn default() -> Self {
        Self { initial: 1.0, shrink: 0.5, sufficient_increase: 1e-4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MleOptions {
    pub max_iters: usize,
    pub tol_rel_ll: f64,
    pub tol_grad: f64,
    pub method: SolverMethod,
    pub step: StepRule,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            max_iters: 10_000,
            tol_rel_ll: 1e-10,
            tol_grad: 1e-8,
            method: SolverMethod::MmThenProject,
            step: StepRule::default(),
        }
    }
}

impl MleOptions {
    pub fn with_method(mut self, method: SolverMethod) -> Self {
        self.method = method;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.step;
        if self.max_iters < 1 {
            return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
        }
        if !(self.tol_rel_ll > 0.0 && self.tol_grad > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be positive".into()));
        }
        if !(s.initial > 0.0
            && s.shrink > 0.0
            && s.shrink < 1.0
            && s.sufficient_increase > 0.0
            && s.sufficient_increase < 1.0)
        {
            return Err(Error::InvalidParameter(format!("invalid step rule {s:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MleResult {
    pub theta_hat: PreferenceVector,
    pub final_log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Norm of the projected-gradient map `P(theta + grad) - theta` at `theta_hat`.
    pub grad_norm: f64,
}

/// Sum of per-ranking PL log-probabilities.
pub fn log_likelihood(theta: &[f64], dataset: &RankingDataset) -> f64 {
    dataset.rankings().iter().map(|r| ranking_log_prob(theta, r)).sum()
}

/// Shifted weights `exp(theta_i - max)` of a ranking and their suffix sums.
fn suffix_weights(theta: &[f64], items: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let shift = items.iter().map(|&i| theta[i]).fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = items.iter().map(|&i| (theta[i] - shift).exp()).collect();
    let mut z = e.clone();
    for t in (0..z.len().saturating_sub(1)).rev() {
        z[t] += z[t + 1];
    }
    (e, z)
}

/// Expected number of rounds each item wins: `sum_j sum_l P_theta(i wins round l of ranking j | contention set)`.
fn expected_wins(theta: &[f64], dataset: &RankingDataset) -> Vec<f64> {
    let mut out = vec![0.0; dataset.n()];
    for r in dataset.rankings() {
        let items = r.items();
        let k = items.len();
        let (e, z) = suffix_weights(theta, items);
        let mut inv_acc = 0.0;
        for p in 0..k {
            if p + 1 < k {
                inv_acc += 1.0 / z[p];
            }
            out[items[p]] += e[p] * inv_acc;
        }
    }
    out
}

/// Number of rounds each item wins (positions other than last).
pub fn round_wins(dataset: &RankingDataset) -> Vec<f64> {
    let mut wins = vec![0.0; dataset.n()];
    for r in dataset.rankings() {
        for &i in &r.items()[..r.len() - 1] {
            wins[i] += 1.0;
        }
    }
    wins
}

/// Exact gradient: rounds won by `i` minus the expected number of rounds it wins.
pub fn gradient(theta: &[f64], dataset: &RankingDataset) -> Vec<f64> {
    let wins = round_wins(dataset);
    let expected = expected_wins(theta, dataset);
    wins.iter().zip(&expected).map(|(w, e)| w - e).collect()
}

/// Exact Hessian. Each round contributes `-(diag(p) - p p^T)` over its contention set.
pub fn hessian(theta: &[f64], dataset: &RankingDataset) -> DMatrix<f64> {
    let n = dataset.n();
    let mut h = DMatrix::zeros(n, n);
    for r in dataset.rankings() {
        add_ranking_hessian(theta, r, 1.0, &mut h);
    }
    h
}

pub(crate) fn add_ranking_hessian(theta: &[f64], ranking: &PartialRanking, scale: f64, h: &mut DMatrix<f64>) {
    let items = ranking.items();
    let k = items.len();
    let (e, z) = suffix_weights(theta, items);
    let mut p = vec![0.0; k];
    for l in 0..k.saturating_sub(1) {
        for (pt, et) in p[l..].iter_mut().zip(&e[l..]) {
            *pt = et / z[l];
        }
        for a in l..k {
            let ia = items[a];
            h[(ia, ia)] -= scale * p[a];
            for c in l..k {
                h[(ia, items[c])] += scale * p[a] * p[c];
            }
        }
    }
}

/// `L(to) - L(from)` evaluated without cancellation against `L` itself.
pub fn log_likelihood_delta(from: &[f64], to: &[f64], dataset: &RankingDataset) -> f64 {
    let mut total = 0.0;
    let mut q = Vec::new();
    for r in dataset.rankings() {
        let items = r.items();
        let k = items.len();
        let (e, z) = suffix_weights(from, items);
        q.clear();
        q.extend(items.iter().zip(&e).map(|(&i, &ei)| ei * (to[i] - from[i]).exp_m1()));
        for t in (0..k.saturating_sub(1)).rev() {
            q[t] += q[t + 1];
        }
        for l in 0..k.saturating_sub(1) {
            let i = items[l];
            total += (to[i] - from[i]) - (q[l] / z[l]).ln_1p();
        }
    }
    total
}

/// Euclidean projection onto `{sum = 0} ∩ [-b, b]^n`.
///
/// Solves `sum_i clip(x_i - nu, -b, b) = 0` for the shift `nu` by bisection
/// (the sum is nonincreasing in `nu`), then snaps `nu` to the exact root of
/// the piecewise-linear equation on the identified active set.
pub fn project_theta(x: &[f64], b: f64) -> Result<PreferenceVector> {
    if b.is_nan() || b < 0.0 {
        return Err(Error::InvalidParameter(format!("box bound b = {b} must be >= 0")));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("cannot project a non-finite vector".into()));
    }
    let n = x.len();
    if b == 0.0 || n == 0 {
        return Ok(PreferenceVector::zeros(n));
    }
    if b.is_infinite() {
        let mean = x.iter().sum::<f64>() / n as f64;
        return PreferenceVector::new(x.iter().map(|v| v - mean).collect(), b);
    }
    let clipped_sum = |nu: f64| x.iter().map(|v| (v - nu).clamp(-b, b)).sum::<f64>();
    let (xmin, xmax) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let (mut lo, mut hi) = (xmin - b, xmax + b);
    let mut nu = 0.5 * (lo + hi);
    for _ in 0..200 {
        nu = 0.5 * (lo + hi);
        let s = clipped_sum(nu);
        if s.abs() <= 1e-12 || hi - lo <= f64::EPSILON * (1.0 + nu.abs()) {
            break;
        }
        if s > 0.0 {
            lo = nu;
        } else {
            hi = nu;
        }
    }
    // Exact root for the active set at nu.
    let (mut free_sum, mut free, mut bound) = (0.0, 0usize, 0.0);
    for &v in x {
        let y = v - nu;
        if y >= b {
            bound += b;
        } else if y <= -b {
            bound -= b;
        } else {
            free_sum += v;
            free += 1;
        }
    }
    if free > 0 {
        let exact = (free_sum + bound) / free as f64;
        if clipped_sum(exact).abs() <= clipped_sum(nu).abs() {
            nu = exact;
        }
    }
    let theta: Vec<f64> = x.iter().map(|v| (v - nu).clamp(-b, b)).collect();
    PreferenceVector::new(theta, b)
}

fn center(theta: &mut [f64]) {
    let mean = theta.iter().sum::<f64>() / theta.len() as f64;
    theta.iter_mut().for_each(|t| *t -= mean);
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn degenerate_items(wins: &[f64]) -> Vec<usize> {
    wins.iter().enumerate().filter(|(_, &w)| w == 0.0).map(|(i, _)| i).collect()
}

fn mm_update(theta: &[f64], wins: &[f64], expected: &[f64]) -> Vec<f64> {
    // w_i <- W_i / sum_{rounds containing i} 1 / sum_{t in round} w_t, which in
    // log space is theta_i + log W_i - log E_i with E_i the expected wins.
    let mut next: Vec<f64> =
        theta.iter().zip(wins.iter().zip(expected)).map(|(t, (w, e))| t + w.ln() - e.ln()).collect();
    center(&mut next);
    next
}

/// One MM update, returned recentered to sum zero.
pub fn mm_step(theta: &[f64], dataset: &RankingDataset) -> Result<Vec<f64>> {
    let wins = round_wins(dataset);
    let degenerate = degenerate_items(&wins);
    if !degenerate.is_empty() {
        return Err(Error::DegenerateItem { items: degenerate });
    }
    Ok(mm_update(theta, &wins, &expected_wins(theta, dataset)))
}

trait Objective {
    fn n(&self) -> usize;
    fn value(&self, theta: &[f64]) -> f64;
    fn gradient(&self, theta: &[f64]) -> Vec<f64>;
    fn delta(&self, from: &[f64], to: &[f64]) -> f64;
}

struct RankingObjective<'a>(&'a RankingDataset);

impl Objective for RankingObjective<'_> {
    fn n(&self) -> usize {
        self.0.n()
    }
    fn value(&self, theta: &[f64]) -> f64 {
        log_likelihood(theta, self.0)
    }
    fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        gradient(theta, self.0)
    }
    fn delta(&self, from: &[f64], to: &[f64]) -> f64 {
        log_likelihood_delta(from, to, self.0)
    }
}

struct PairwiseObjective<'a> {
    n: usize,
    pairs: &'a [WeightedPair],
}

impl Objective for PairwiseObjective<'_> {
    fn n(&self) -> usize {
        self.n
    }
    fn value(&self, theta: &[f64]) -> f64 {
        pairwise_log_likelihood(theta, self.pairs)
    }
    fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        pairwise_gradient(theta, self.n, self.pairs)
    }
    fn delta(&self, from: &[f64], to: &[f64]) -> f64 {
        self.pairs
            .iter()
            .map(|p| {
                let (dw, dl) = (to[p.winner] - from[p.winner], to[p.loser] - from[p.loser]);
                let pw = logistic(from[p.winner] - from[p.loser]);
                let shift = (pw * dw.exp_m1() + (1.0 - pw) * dl.exp_m1()).ln_1p();
                p.weight * (dw - shift)
            })
            .sum()
    }
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Weighted pairwise log-likelihood `sum_t w_t [theta_win - log(e^theta_win + e^theta_lose)]`.
pub fn pairwise_log_likelihood(theta: &[f64], pairs: &[WeightedPair]) -> f64 {
    pairs.iter().map(|p| p.weight * (theta[p.winner] - log_add_exp(theta[p.winner], theta[p.loser]))).sum()
}

pub fn pairwise_gradient(theta: &[f64], n: usize, pairs: &[WeightedPair]) -> Vec<f64> {
    let mut g = vec![0.0; n];
    for p in pairs {
        let lose_prob = logistic(theta[p.loser] - theta[p.winner]);
        g[p.winner] += p.weight * lose_prob;
        g[p.loser] -= p.weight * lose_prob;
    }
    g
}

fn gradient_map_norm(theta: &[f64], grad: &[f64], b: f64) -> Result<f64> {
    let stepped: Vec<f64> = theta.iter().zip(grad).map(|(t, g)| t + g).collect();
    let projected = project_theta(&stepped, b)?;
    Ok(projected.iter().zip(theta).map(|(p, t)| (p - t).powi(2)).sum::<f64>().sqrt())
}

fn ensure_connected(graph: &ComparisonGraph) -> Result<()> {
    let components = graph.components();
    if components.len() > 1 {
        return Err(Error::Disconnected { components });
    }
    Ok(())
}

fn projected_gradient_ascent(obj: &dyn Objective, b: f64, opts: &MleOptions) -> Result<MleResult> {
    let n = obj.n();
    let mut theta = vec![0.0; n];
    let mut ll = obj.value(&theta);
    let mut step = opts.step.initial;
    let mut iterations = 0;
    let mut converged = false;
    let mut grad = obj.gradient(&theta);
    for it in 1..=opts.max_iters {
        if gradient_map_norm(&theta, &grad, b)? < opts.tol_grad {
            converged = true;
            break;
        }
        let mut t = step;
        let mut accepted = None;
        for _ in 0..200 {
            let trial: Vec<f64> = theta.iter().zip(&grad).map(|(x, g)| x + t * g).collect();
            let candidate = project_theta(&trial, b)?.into_vec();
            let predicted: f64 = candidate.iter().zip(&theta).zip(&grad).map(|((c, x), g)| g * (c - x)).sum();
            if !(predicted > 0.0) {
                break;
            }
            let gain = obj.delta(&theta, &candidate);
            if gain >= opts.step.sufficient_increase * predicted {
                accepted = Some((candidate, gain));
                break;
            }
            t *= opts.step.shrink;
        }
        let Some((candidate, gain)) = accepted else {
            // No ascent step is representable; stationary to working precision.
            break;
        };
        theta = candidate;
        ll += gain;
        iterations = it;
        step = (t / opts.step.shrink).min(opts.step.initial);
        grad = obj.gradient(&theta);
        if gain.abs() / ll.abs().max(1.0) < opts.tol_rel_ll {
            converged = true;
            break;
        }
    }
    let theta_hat = project_theta(&theta, b)?;
    let grad_norm = gradient_map_norm(&theta_hat, &obj.gradient(&theta_hat), b)?;
    Ok(MleResult { final_log_likelihood: obj.value(&theta_hat), theta_hat, iterations, converged, grad_norm })
}

fn mm_then_project(dataset: &RankingDataset, b: f64, opts: &MleOptions) -> Result<MleResult> {
    let wins = round_wins(dataset);
    let mut theta = vec![0.0; dataset.n()];
    let mut ll = log_likelihood(&theta, dataset);
    let mut iterations = 0;
    let mut converged = false;
    for it in 1..=opts.max_iters {
        let expected = expected_wins(&theta, dataset);
        let grad: Vec<f64> = wins.iter().zip(&expected).map(|(w, e)| w - e).collect();
        if norm(&grad) < opts.tol_grad {
            converged = true;
            break;
        }
        let next = mm_update(&theta, &wins, &expected);
        let gain = log_likelihood_delta(&theta, &next, dataset);
        theta = next;
        ll += gain;
        iterations = it;
        if gain.abs() / ll.abs().max(1.0) < opts.tol_rel_ll {
            converged = true;
            break;
        }
    }
    if theta.iter().any(|t| !t.is_finite()) {
        return Err(Error::Numerical("MM iterates diverged".into()));
    }
    let theta_hat = project_theta(&theta, b)?;
    let grad_norm = gradient_map_norm(&theta_hat, &gradient(&theta_hat, dataset), b)?;
    Ok(MleResult {
        final_log_likelihood: log_likelihood(&theta_hat, dataset),
        theta_hat,
        iterations,
        converged,
        grad_norm,
    })
}

/// Maximum-likelihood estimate over `Theta_b` from partial rankings.
///
/// With `MmThenProject`, items that never win a round make the unconstrained
/// maximum diverge: that is an error when `b` is infinite, and otherwise the
/// solve switches to projected gradient, where the box keeps the maximum
/// attained.
pub fn solve_mle(dataset: &RankingDataset, b: f64, opts: &MleOptions) -> Result<MleResult> {
    opts.validate()?;
    if b.is_nan() || b < 0.0 {
        return Err(Error::InvalidParameter(format!("box bound b = {b} must be >= 0")));
    }
    ensure_connected(&build_graph(dataset))?;
    match opts.method {
        SolverMethod::ProjectedGradient => projected_gradient_ascent(&RankingObjective(dataset), b, opts),
        SolverMethod::MmThenProject => {
            let degenerate = degenerate_items(&round_wins(dataset));
            if degenerate.is_empty() {
                mm_then_project(dataset, b, opts)
            } else if b.is_finite() {
                log::debug!("items {degenerate:?} never win; using projected gradient");
                projected_gradient_ascent(&RankingObjective(dataset), b, opts)
            } else {
                Err(Error::DegenerateItem { items: degenerate })
            }
        }
    }
}

/// Maximum of the weighted pairwise likelihood over `Theta_b` by projected
/// gradient ascent. Unit weights give the IB estimator, `1/(k_j - 1)` the FB one.
pub fn solve_pairwise_mle(pairs: &[WeightedPair], n: usize, b: f64, opts: &MleOptions) -> Result<MleResult> {
    opts.validate()?;
    if b.is_nan() || b < 0.0 {
        return Err(Error::InvalidParameter(format!("box bound b = {b} must be >= 0")));
    }
    if let Some(p) = pairs.iter().find(|p| p.winner >= n || p.loser >= n) {
        return Err(Error::ItemOutOfRange { item: p.winner.max(p.loser), n });
    }
    if pairs.is_empty() {
        return Err(Error::NoRankings);
    }
    ensure_connected(&ComparisonGraph::from_pairs(n, pairs))?;
    if b.is_infinite() {
        let mut wins = vec![0.0; n];
        for p in pairs {
            wins[p.winner] += p.weight;
        }
        let degenerate = degenerate_items(&wins);
        if !degenerate.is_empty() {
            return Err(Error::DegenerateItem { items: degenerate });
        }
    }
    projected_gradient_ascent(&PairwiseObjective { n, pairs }, b, opts)
}
