use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty assignment")]
    EmptyAssignment,

    #[error("item index {item} out of range for {n} items")]
    ItemOutOfRange { item: usize, n: usize },

    #[error("item {item} appears more than once in a ranking")]
    DuplicateItem { item: usize },

    #[error("ranking of length {len} carries no information (need at least 2 items)")]
    RankingTooShort { len: usize },

    #[error("item {item} of the subset does not appear in the ranking")]
    NotASubset { item: usize },

    #[error("subset size {k} invalid for {n} items (need 2 <= k <= n)")]
    InvalidSubsetSize { k: usize, n: usize },

    #[error("subset size {k} does not divide item count {n}")]
    IndivisiblePartition { n: usize, k: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("comparison graph is disconnected: {} components {}", components.len(), format_components(components))]
    Disconnected { components: Vec<Vec<usize>> },

    #[error("degenerate item; unconstrained MLE diverges (items {items:?})")]
    DegenerateItem { items: Vec<usize> },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("no rankings")]
    NoRankings,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the CLI: 2 for bad input, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DegenerateItem { .. } | Error::Numerical(_) => 3,
            _ => 2,
        }
    }
}

fn format_components(components: &[Vec<usize>]) -> String {
    const SHOWN: usize = 8;
    let mut parts: Vec<String> = components
        .iter()
        .take(SHOWN)
        .map(|c| if c.len() <= 10 { format!("{c:?}") } else { format!("[{} items starting {:?}]", c.len(), &c[..5]) })
        .collect();
    if components.len() > SHOWN {
        parts.push(format!("... {} more", components.len() - SHOWN));
    }
    parts.join(", ")
}
