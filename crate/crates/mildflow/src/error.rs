//! Error types shared across the crate.

use crate::solver::PicardRecord;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid error: {0}")]
    Grid(String),

    #[error("field error: {0}")]
    Field(String),

    #[error("picard iteration did not converge within {} iterations (last delta {:.3e}); window likely too long or under-resolved", record.deltas.len(), record.final_delta())]
    PicardNonConvergence { record: Box<PicardRecord> },

    #[error("picard iterate diverged (NaN or overflow) at iteration {iteration}")]
    PicardDivergence { iteration: usize },

    #[error("solver window [{t_start:.6}, {t_end:.6}] failed: {source}")]
    Window {
        t_start: f64,
        t_end: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("diagnostics error: {0}")]
    Diagnostics(String),

    #[error("rescale error: {0}")]
    Rescale(String),

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error("snapshot format error: {0}")]
    Snapshot(String),

    #[error("unsupported snapshot version {found} (this build reads up to {supported})")]
    SnapshotVersion { found: u16, supported: u16 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
