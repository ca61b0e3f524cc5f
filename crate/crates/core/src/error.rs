use thiserror::Error;

use crate::metrics::MetricError;
use crate::treespace::{ParseError, TreeError};

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Newick(#[from] ParseError),
    #[error("sample too small: need at least {needed} points, got {got}")]
    SampleTooSmall { needed: usize, got: usize },
    #[error("{0} is empty")]
    Empty(&'static str),
    #[error("grids do not match: {0}")]
    GridMismatch(String),
    #[error("{0}")]
    Domain(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
