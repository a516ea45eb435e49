//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("unknown tile `{0}`")]
    UnknownTile(String),
    #[error("tile id {id} outside alphabet of size {size}")]
    TileOutOfRange { id: usize, size: usize },
    #[error("grid dimension {height}x{width} too small (need at least {min}x{min})")]
    Dimension { height: usize, width: usize, min: usize },
    #[error("ragged grid: row {row} has {got} cells, expected {expected}")]
    Ragged { row: usize, got: usize, expected: usize },
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("machine is not direction-unique: state `{0}` is entered by more than one move direction")]
    NotNormalized(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("capacity exceeded: {needed} states needed, limit is {limit}")]
    Capacity { needed: u128, limit: u128 },
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
