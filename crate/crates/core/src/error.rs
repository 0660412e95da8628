use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at byte {offset}: {msg}")]
    Parse { offset: u64, msg: String },

    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("degenerate strut pair ({0}, {1}): intersection is not a bounded planar curve")]
    DegeneratePair(u32, u32),

    #[error("unbounded section of strut {strut}: plane is too close to parallel with the rulings")]
    UnboundedSection { strut: u32 },

    #[error("strut {strut} end {end} is swallowed by its neighbors")]
    DegenerateLoop { strut: u32, end: u8 },

    #[error("arc loop of strut {strut} end {end} does not close: {msg}")]
    OpenLoop { strut: u32, end: u8, msg: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("capacity exceeded: need {needed}, have {capacity}")]
    Capacity { needed: u64, capacity: u64 },

    #[error("open hole contour at node {node}")]
    OpenContour { node: u32 },

    #[error("sink failed after {batches} completed batches: {source}")]
    Sink {
        batches: usize,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
