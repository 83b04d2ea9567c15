//! JSON Lines ranking and pair files, JSON theta files.
//!
//! Ranking line: `{"user": 3, "ranking": [4, 0, 2]}`, most preferred first.
//! Pair line: `{"winner": 4, "loser": 0, "weight": 0.5}`.
//! Theta file: `{"n": 3, "b": 2.0, "theta": [0.1, -0.3, 0.2]}`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::WeightedPair;
use crate::model::{PartialRanking, PreferenceVector, RankingDataset};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RankingLine {
    user: u64,
    ranking: Vec<usize>,
}

fn jsonl_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if !line.trim().is_empty() {
            lines.push((idx + 1, line));
        }
    }
    Ok(lines)
}

/// Reads a ranking file. With `n = None` the item count is one more than the
/// largest index seen.
pub fn load_rankings(path: &Path, n: Option<usize>) -> Result<RankingDataset> {
    let mut rankings = Vec::new();
    let mut max_item = 0;
    for (line_no, line) in jsonl_lines(path)? {
        let parse_err = |message: String| Error::Parse { line: line_no, message };
        let parsed: RankingLine = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        let ranking = PartialRanking::new(parsed.user, parsed.ranking).map_err(|e| parse_err(e.to_string()))?;
        if ranking.len() < 2 {
            return Err(parse_err(Error::RankingTooShort { len: ranking.len() }.to_string()));
        }
        let top = ranking.items().iter().copied().max().unwrap_or(0);
        if let Some(n) = n {
            if top >= n {
                return Err(parse_err(Error::ItemOutOfRange { item: top, n }.to_string()));
            }
        }
        max_item = max_item.max(top);
        rankings.push(ranking);
    }
    if rankings.is_empty() {
        return Err(Error::NoRankings);
    }
    RankingDataset::new(n.unwrap_or(max_item + 1), rankings)
}

pub fn save_rankings(dataset: &RankingDataset, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for r in dataset.rankings() {
        let line = RankingLine { user: r.user, ranking: r.items().to_vec() };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn load_pairs(path: &Path) -> Result<Vec<WeightedPair>> {
    jsonl_lines(path)?
        .into_iter()
        .map(|(line_no, line)| {
            let parse_err = |message: String| Error::Parse { line: line_no, message };
            let p: WeightedPair = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
            WeightedPair::new(p.winner, p.loser, p.weight).map_err(|e| parse_err(e.to_string()))
        })
        .collect()
}

pub fn save_pairs(pairs: &[WeightedPair], path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for p in pairs {
        serde_json::to_writer(&mut out, p)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaFile {
    pub n: usize,
    pub b: f64,
    pub theta: Vec<f64>,
}

impl ThetaFile {
    pub fn from_preference(theta: &PreferenceVector) -> Self {
        Self { n: theta.len(), b: theta.b(), theta: theta.to_vec() }
    }

    pub fn into_preference(self) -> Result<PreferenceVector> {
        if self.theta.len() != self.n {
            return Err(Error::InvalidParameter(format!("theta has {} entries but n = {}", self.theta.len(), self.n)));
        }
        PreferenceVector::new(self.theta, self.b)
    }
}

pub fn save_theta(theta: &PreferenceVector, path: &Path) -> Result<()> {
    if !theta.b().is_finite() {
        return Err(Error::InvalidParameter("theta files need a finite box bound".into()));
    }
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, &ThetaFile::from_preference(theta))?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

pub fn load_theta(path: &Path) -> Result<PreferenceVector> {
    let file: ThetaFile = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    file.into_preference()
}
