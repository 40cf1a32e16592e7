use thiserror::Error;

/// Errors surfaced by the detection, synthesis, and evaluation pipelines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("block size {block} exceeds image dimensions {width}x{height}")]
    BlockTooLarge {
        block: usize,
        width: usize,
        height: usize,
    },

    #[error("block at ({row},{col}) with size {block} lies outside a {width}x{height} image")]
    OutOfBounds {
        row: usize,
        col: usize,
        block: usize,
        width: usize,
        height: usize,
    },

    #[error("image yields {blocks} blocks, below the required match count {required}")]
    ImageTooSmall { blocks: usize, required: usize },

    #[error("source and destination regions overlap")]
    RegionOverlap,

    #[error("ground-truth masks are empty")]
    EmptyGroundTruth,

    #[error("mask dimensions {0}x{1} do not match {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("codec: {0}")]
    Codec(#[from] image::ImageError),

    #[error("manifest: {0}")]
    Manifest(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
