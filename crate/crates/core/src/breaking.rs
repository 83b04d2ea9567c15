//! Rank breaking: turning a k-way ranking into pairwise comparisons.
//!
//! The independence-preserving breaking (IB) keeps `floor(k/2)` disjoint pairs
//! chosen uniformly at random; under the PL model these are independent
//! Bradley-Terry outcomes. The full breaking (FB) keeps all `k(k-1)/2` pairs,
//! each weighted `1/(k-1)`, so that a ranking contributes the same total
//! weight to every item it contains.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::estimator::WeightedPair;
use crate::model::{PartialRanking, RankingDataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Ib,
    Fb,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrokenDataset {
    pub n: usize,
    pub pairs: Vec<WeightedPair>,
    pub scheme: Scheme,
}

/// Random IB: shuffle the ranked positions, pair them consecutively, and drop
/// the leftover when `k` is odd. The higher-ranked item of each pair wins.
pub fn random_ib<R: Rng + ?Sized>(ranking: &PartialRanking, rng: &mut R) -> Vec<WeightedPair> {
    let items = ranking.items();
    let mut positions: Vec<usize> = (0..items.len()).collect();
    positions.shuffle(rng);
    positions
        .chunks_exact(2)
        .map(|c| {
            let (hi, lo) = if c[0] < c[1] { (c[0], c[1]) } else { (c[1], c[0]) };
            WeightedPair { winner: items[hi], loser: items[lo], weight: 1.0 }
        })
        .collect()
}

/// FB: every ordered pair of ranked items, weight `1/(k-1)`.
pub fn full_breaking(ranking: &PartialRanking) -> Vec<WeightedPair> {
    let items = ranking.items();
    let k = items.len();
    if k < 2 {
        return Vec::new();
    }
    let weight = 1.0 / (k - 1) as f64;
    (0..k).flat_map(|a| ((a + 1)..k).map(move |b| WeightedPair { winner: items[a], loser: items[b], weight })).collect()
}

pub fn break_dataset<R: Rng + ?Sized>(dataset: &RankingDataset, scheme: Scheme, rng: &mut R) -> BrokenDataset {
    let pairs = dataset
        .rankings()
        .iter()
        .flat_map(|r| match scheme {
            Scheme::Ib => random_ib(r, rng),
            Scheme::Fb => full_breaking(r),
        })
        .collect();
    BrokenDataset { n: dataset.n(), pairs, scheme }
}
