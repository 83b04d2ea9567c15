//! Weighted comparison graph and Laplacian spectrum.
//!
//! Items `i` and `i'` are joined when some ranking contains both; the edge
//! weight is `sum_j 1/(k_j - 1)` over those rankings. Each ranking contributes
//! total weight 1 to every item it contains, so the degree `d_i` is the number
//! of rankings that contain `i` and `Tr(L) = sum_j k_j`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::estimator::WeightedPair;
use crate::model::RankingDataset;

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonGraph {
    n: usize,
    /// Keys are `(i, i')` with `i < i'`.
    weights: BTreeMap<(usize, usize), f64>,
    degrees: Vec<f64>,
}

impl ComparisonGraph {
    fn from_weighted_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut weights = BTreeMap::new();
        let mut degrees = vec![0.0; n];
        for (a, b, w) in edges {
            debug_assert!(a != b && w > 0.0);
            let key = if a < b { (a, b) } else { (b, a) };
            *weights.entry(key).or_insert(0.0) += w;
            degrees[a] += w;
            degrees[b] += w;
        }
        Self { n, weights, degrees }
    }

    /// Graph of a list of weighted pairwise comparisons; each pair adds its
    /// weight to the edge between winner and loser.
    pub fn from_pairs(n: usize, pairs: &[WeightedPair]) -> Self {
        Self::from_weighted_edges(n, pairs.iter().map(|p| (p.winner, p.loser, p.weight)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.weights.iter().map(|(&(a, b), &w)| (a, b, w))
    }

    pub fn edge_count(&self) -> usize {
        self.weights.len()
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let key = if i < j { (i, j) } else { (j, i) };
        self.weights.get(&key).copied().unwrap_or(0.0)
    }

    /// Dense `L = D - A`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let mut l = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.degrees));
        for (&(a, b), &w) in &self.weights {
            l[(a, b)] -= w;
            l[(b, a)] -= w;
        }
        l
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &(a, b) in self.weights.keys() {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..self.n {
            let r = find(&mut parent, i);
            groups.entry(r).or_default().push(i);
        }
        groups.into_values().collect()
    }
}

/// Builds the comparison graph of a dataset.
pub fn build_graph(dataset: &RankingDataset) -> ComparisonGraph {
    let edges = dataset.rankings().iter().flat_map(|r| {
        let items = r.items();
        let w = 1.0 / (items.len() - 1) as f64;
        (0..items.len()).flat_map(move |a| ((a + 1)..items.len()).map(move |b| (items[a], items[b], w)))
    });
    let mut graph = ComparisonGraph::from_weighted_edges(dataset.n(), edges);
    // The weights telescope to one per ranking; store the exact count.
    graph.degrees.iter_mut().for_each(|d| *d = 0.0);
    for r in dataset.rankings() {
        for &i in r.items() {
            graph.degrees[i] += 1.0;
        }
    }
    graph
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaplacianSpectrum {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub trace: f64,
}

impl LaplacianSpectrum {
    pub fn lambda2(&self) -> f64 {
        self.eigenvalues.get(1).copied().unwrap_or(0.0)
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// `1e-8 * max(1, lambda_n)`.
    pub fn default_tolerance(&self) -> f64 {
        1e-8 * self.lambda_max().max(1.0)
    }
}

/// Full dense symmetric eigen-decomposition of the Laplacian.
pub fn laplacian_spectrum(graph: &ComparisonGraph) -> LaplacianSpectrum {
    let l = graph.laplacian();
    let trace = l.trace();
    let mut eigenvalues: Vec<f64> = SymmetricEigen::new(l).eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    LaplacianSpectrum { eigenvalues, trace }
}

/// `lambda_2 > tol`; `None` uses [`LaplacianSpectrum::default_tolerance`].
pub fn is_connected(spectrum: &LaplacianSpectrum, tol: Option<f64>) -> bool {
    let tol = tol.unwrap_or_else(|| spectrum.default_tolerance());
    spectrum.lambda2() > tol
}

/// Summary printed by the `graph-stats` subcommand.
#[derive(Debug, Clone, Serialize)]
pub struct GraphStats {
    pub n: usize,
    pub m: usize,
    pub total_size: usize,
    pub min_degree: f64,
    pub max_degree: f64,
    pub lambda2: f64,
    pub lambda_n: f64,
    pub connected: bool,
}

pub fn graph_stats(dataset: &RankingDataset) -> GraphStats {
    let graph = build_graph(dataset);
    let spectrum = laplacian_spectrum(&graph);
    let degrees = graph.degrees();
    GraphStats {
        n: dataset.n(),
        m: dataset.m(),
        total_size: dataset.total_size(),
        min_degree: degrees.iter().copied().fold(f64::INFINITY, f64::min),
        max_degree: degrees.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        lambda2: spectrum.lambda2(),
        lambda_n: spectrum.lambda_max(),
        connected: is_connected(&spectrum, None),
    }
}
