use std::path::PathBuf;

use thiserror::Error;

use crate::ledger::NftId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{field} = {value} is outside its domain ({bound})")]
    Domain {
        field: &'static str,
        value: f64,
        bound: &'static str,
    },

    #[error("weights are not on the simplex: {0}")]
    Simplex(String),

    #[error("inconsistent action: {0}")]
    InconsistentAction(String),

    #[error("shape mismatch for {what}: expected {expected}, got {got}")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("reference to unknown NFT {0}")]
    DanglingReference(NftId),

    #[error("reference to settled NFT {0}")]
    ExpiredReference(NftId),

    #[error("reference to NFT {reference} minted at height {reference_height}, not below {height}")]
    Acyclicity {
        reference: NftId,
        reference_height: u64,
        height: u64,
    },

    #[error("unknown NFT {0}")]
    UnknownNft(NftId),

    #[error("rounds must advance one at a time: expected height {expected}, got {got}")]
    Sequencing { expected: u64, got: u64 },

    #[error("grid requires {evaluations} joint evaluations, more than the bound of {bound}")]
    GridTooLarge { evaluations: u128, bound: u128 },

    #[error("invalid configuration field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
