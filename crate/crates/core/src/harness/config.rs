use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::MleOptions;

/// Estimators compared by the experiment and the `estimate` subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    /// Maximum likelihood on the partial rankings.
    Ml,
    /// ML on independence-preserving pairwise breaking.
    Ib,
    /// ML on weighted full pairwise breaking.
    Fb,
}

impl Estimator {
    pub fn as_str(&self) -> &'static str {
        match self {
            Estimator::Ml => "ml",
            Estimator::Ib => "ib",
            Estimator::Fb => "fb",
        }
    }
}

/// Grid for the normalized-MSE experiment. Every field has a desk-scale default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "defaults::n")]
    pub n: usize,
    /// Number of full rankings `d` per cell.
    #[serde(default = "defaults::d_values")]
    pub d_values: Vec<usize>,
    #[serde(default = "defaults::k_values")]
    pub k_values: Vec<usize>,
    #[serde(default = "defaults::b_values")]
    pub b_values: Vec<f64>,
    #[serde(default = "defaults::replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::estimators")]
    pub estimator_variants: Vec<Estimator>,
    #[serde(default = "defaults::output_path")]
    pub output_path: PathBuf,
    /// SVG destination; defaults to `output_path` with an `.svg` extension.
    #[serde(default)]
    pub plot_path: Option<PathBuf>,
    /// Box used by the estimators. `None` uses `2 * max(b, 1)`, which is
    /// never active at the true parameter and keeps the problem well posed
    /// when an item loses every comparison.
    #[serde(default)]
    pub fit_b: Option<f64>,
    #[serde(default)]
    pub solver: MleOptions,
}

mod defaults {
    use super::*;

    pub fn n() -> usize {
        128
    }
    pub fn d_values() -> Vec<usize> {
        vec![16, 64, 128]
    }
    pub fn k_values() -> Vec<usize> {
        vec![128, 32, 8, 2]
    }
    pub fn b_values() -> Vec<f64> {
        vec![0.0, 2.0]
    }
    pub fn replicates() -> usize {
        20
    }
    pub fn estimators() -> Vec<Estimator> {
        vec![Estimator::Ml]
    }
    pub fn output_path() -> PathBuf {
        PathBuf::from("results.csv")
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: defaults::n(),
            d_values: defaults::d_values(),
            k_values: defaults::k_values(),
            b_values: defaults::b_values(),
            replicates: defaults::replicates(),
            seed: 0,
            estimator_variants: defaults::estimators(),
            output_path: defaults::output_path(),
            plot_path: None,
            fit_b: None,
            solver: MleOptions::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let config: Self = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.n < 2 {
            return bad(format!("n = {} must be >= 2", self.n));
        }
        if self.d_values.is_empty() || self.k_values.is_empty() || self.b_values.is_empty() {
            return bad("d_values, k_values and b_values must be nonempty".into());
        }
        if self.d_values.contains(&0) {
            return bad("every d must be >= 1".into());
        }
        for &k in &self.k_values {
            if k < 2 || k > self.n {
                return Err(Error::InvalidSubsetSize { k, n: self.n });
            }
            if !self.n.is_multiple_of(k) {
                return Err(Error::IndivisiblePartition { n: self.n, k });
            }
        }
        if let Some(b) = self.b_values.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
            return bad(format!("b = {b} must be finite and >= 0"));
        }
        if let Some(b) = self.fit_b {
            if b.is_nan() || b <= 0.0 {
                return bad(format!("fit_b = {b} must be positive"));
            }
        }
        if self.replicates < 1 {
            return bad("replicates must be >= 1".into());
        }
        if self.estimator_variants.is_empty() {
            return bad("at least one estimator is required".into());
        }
        self.solver.validate()
    }

    /// Estimator box for a cell with true range `b`.
    pub fn fit_box(&self, b: f64) -> f64 {
        self.fit_b.unwrap_or(2.0 * b.max(1.0))
    }

    pub fn plot_path(&self) -> PathBuf {
        self.plot_path.clone().unwrap_or_else(|| self.output_path.with_extension("svg"))
    }

    /// Cells in emission order: `b` outermost, then `d`, then `k`.
    pub fn cells(&self) -> Vec<(f64, usize, usize)> {
        let mut cells = Vec::new();
        for &b in &self.b_values {
            for &d in &self.d_values {
                for &k in &self.k_values {
                    cells.push((b, d, k));
                }
            }
        }
        cells
    }
}
