//! Copy-move forgery detection toolkit.
//!
//! The detector slides an overlapping window over the Y channel, describes
//! each block by four intensity-robust DCT characteristics, sorts the
//! quantized rows lexicographically, and reads clone evidence out of the
//! shift statistics of equal neighbouring rows. Matching costs
//! O(4 R log R) for R overlapping blocks instead of the quadratic cost of
//! raw block comparison, and the features survive intensity changes, JPEG
//! recompression, additive noise, and mild blurring.
//!
//! The crate also ships the surrounding laboratory: a raw-intensity
//! baseline matcher, forgery synthesis with ground truth, seeded JPEG /
//! AWGN / blur degradations, pixel-level ACC and FP scoring, and a batch
//! sweep harness with deterministic reports.

pub mod degrade;
pub mod error;
pub mod eval;
pub mod features;
pub mod matcher;
pub mod morphology;
pub mod olbm;
pub mod pixel;

pub use error::{Error, Result};
pub use matcher::{detect, DetectionResult, DetectorConfig, Th1Metric};
pub use pixel::{BinaryMask, LumaImage, RgbImage};
