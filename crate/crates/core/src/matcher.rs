//! Duplicate-block matching: assemble the quantized feature matrix, sort
//! it lexicographically, pair equal neighbouring rows, accumulate shift
//! classes, and turn the surviving classes into clone masks.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{feature_vector, quantize, DctBasis, QuantizedFeatureRow};
use crate::morphology::{close, StructuringElement};
use crate::pixel::{block_grid, extract_block, BinaryMask, LumaImage, Origin, RgbImage};

/// Block count of the 128x128 / b=8 reference setup that the default
/// match-count threshold is calibrated against.
pub const REFERENCE_BLOCK_COUNT: usize = 14641;

/// How the minimum-shift threshold measures a shift.
///
/// `Chebyshev` (max of |dx|, |dy|) rejects every near-zero shift.
/// `PaperAbsdiff` keeps the literal |dx - dy| rule for replication runs;
/// note it passes diagonal shifts like (50, 50).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Th1Metric {
    Chebyshev,
    PaperAbsdiff,
}

impl std::str::FromStr for Th1Metric {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "chebyshev" => Ok(Self::Chebyshev),
            "paper-absdiff" => Ok(Self::PaperAbsdiff),
            other => Err(format!(
                "unknown th1 metric '{other}' (expected 'chebyshev' or 'paper-absdiff')"
            )),
        }
    }
}

/// Full parameter set of the detector. Serializes as a flat key-value
/// document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub block_size: usize,
    /// Quantization step for the two coefficient features.
    pub s12: f64,
    /// Quantization step for the two ratio features.
    pub s34: f64,
    /// How many sorted neighbours each row is compared against.
    pub window: usize,
    /// Minimum shift magnitude for an accepted class.
    pub th1: u32,
    pub th1_metric: Th1Metric,
    /// Minimum matched-pair count at the reference block count; scaled by
    /// the actual block count of the image under test.
    pub th2: usize,
    /// Side of the square structuring element used by the final closing.
    pub se_size: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            block_size: 8,
            s12: 24.0,
            s34: 0.06,
            window: 2,
            th1: 10,
            th1_metric: Th1Metric::Chebyshev,
            th2: 40,
            se_size: 3,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.block_size < 2 {
            return Err(Error::InvalidParameter(
                "block_size must be at least 2".into(),
            ));
        }
        if !(self.s12 > 0.0) || !(self.s34 > 0.0) {
            return Err(Error::InvalidParameter(
                "quantization steps must be positive".into(),
            ));
        }
        if self.window < 1 {
            return Err(Error::InvalidParameter("window must be at least 1".into()));
        }
        if self.th2 < 1 {
            return Err(Error::InvalidParameter("th2 must be at least 1".into()));
        }
        if self.se_size < 1 {
            return Err(Error::InvalidParameter("se_size must be at least 1".into()));
        }
        Ok(())
    }

    /// Match-count threshold scaled to `blocks`, anchored at
    /// [`REFERENCE_BLOCK_COUNT`].
    pub fn effective_th2(&self, blocks: usize) -> usize {
        let scaled = (self.th2 as f64 * blocks as f64 / REFERENCE_BLOCK_COUNT as f64).round();
        (scaled as usize).max(1)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Manifest(e.to_string()))
    }
}

/// Translation between the two members of a matched pair, in
/// (row delta, col delta) form. Canonical pairs have positive row delta,
/// or zero row delta and positive col delta.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Shift {
    pub d_row: i32,
    pub d_col: i32,
}

impl Shift {
    pub fn chebyshev(&self) -> u32 {
        self.d_row.unsigned_abs().max(self.d_col.unsigned_abs())
    }

    /// The literal |dx - dy| reading of the shift-distance test.
    pub fn absdiff(&self) -> u32 {
        (self.d_row - self.d_col).unsigned_abs()
    }

    pub fn magnitude(&self, metric: Th1Metric) -> u32 {
        match metric {
            Th1Metric::Chebyshev => self.chebyshev(),
            Th1Metric::PaperAbsdiff => self.absdiff(),
        }
    }
}

/// A matched pair of block origins, ordered so the row-major smaller
/// origin comes first; the shift is then canonical by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchPair {
    pub a: Origin,
    pub b: Origin,
}

impl MatchPair {
    pub fn new(p: Origin, q: Origin) -> Self {
        debug_assert_ne!(p, q, "a block cannot pair with itself");
        if p <= q {
            Self { a: p, b: q }
        } else {
            Self { a: q, b: p }
        }
    }

    pub fn shift(&self) -> Shift {
        Shift {
            d_row: self.b.0 as i32 - self.a.0 as i32,
            d_col: self.b.1 as i32 - self.a.1 as i32,
        }
    }
}

/// The R x 4 matrix of quantized feature rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureMatrix {
    pub rows: Vec<QuantizedFeatureRow>,
}

/// All pairs sharing one canonical shift.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShiftClass {
    pub shift: Shift,
    pub pairs: Vec<MatchPair>,
}

impl ShiftClass {
    /// Matched-pair count Nc. Counts pairs; for two disjoint regions the
    /// block count is twice this.
    pub fn count(&self) -> usize {
        self.pairs.len()
    }
}

/// Wall-clock milliseconds spent in each pipeline stage.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimings {
    pub luma_ms: f64,
    pub features_ms: f64,
    pub sort_ms: f64,
    pub pair_scan_ms: f64,
    pub classify_ms: f64,
    pub mask_ms: f64,
    pub total_ms: f64,
}

/// Outcome of a detection run: clone masks (already closed), the accepted
/// shift classes, and per-stage timings.
#[derive(Debug, Clone)]
pub struct DetectionResult {
    pub source_mask: BinaryMask,
    pub dest_mask: BinaryMask,
    pub accepted: Vec<ShiftClass>,
    pub timings: StageTimings,
}

impl DetectionResult {
    /// The accepted class with the most pairs; ties break on the smaller
    /// shift so the choice is deterministic.
    pub fn dominant(&self) -> Option<&ShiftClass> {
        self.accepted
            .iter()
            .max_by(|x, y| x.count().cmp(&y.count()).then(y.shift.cmp(&x.shift)))
    }

    /// Union of source and destination masks.
    pub fn combined_mask(&self) -> BinaryMask {
        self.source_mask.union(&self.dest_mask)
    }
}

/// Builds the quantized feature matrix for every overlapping block, rows
/// in row-major origin order. Feature extraction runs in parallel; the
/// output is identical to the sequential order.
pub fn feature_matrix(luma: &LumaImage, cfg: &DetectorConfig) -> Result<FeatureMatrix> {
    let grid = block_grid(luma, cfg.block_size)?;
    let basis = DctBasis::new(cfg.block_size);
    let origins: Vec<Origin> = grid.origins().collect();
    let rows: Vec<QuantizedFeatureRow> = origins
        .par_iter()
        .map(|&origin| {
            let block = extract_block(luma, origin, cfg.block_size)
                .expect("grid origins are in bounds");
            let v = feature_vector(&basis.forward(&block));
            QuantizedFeatureRow {
                features: quantize(&v, cfg.s12, cfg.s34),
                origin,
            }
        })
        .collect();
    Ok(FeatureMatrix { rows })
}

/// Sorts rows lexicographically on the quantized features, ties broken by
/// row-major origin. The full key is unique, so the order is total.
pub fn sort_rows(mut t: FeatureMatrix) -> FeatureMatrix {
    t.rows
        .sort_unstable_by(|x, y| x.features.cmp(&y.features).then(x.origin.cmp(&y.origin)));
    t
}

/// Emits a pair for every two rows within `window` positions of each other
/// whose quantized features are component-wise equal. Expects sorted input,
/// where equal rows are contiguous.
pub fn find_pairs(t: &FeatureMatrix, window: usize) -> Vec<MatchPair> {
    let rows = &t.rows;
    let mut pairs = Vec::new();
    for i in 0..rows.len() {
        let upper = (i + window).min(rows.len().saturating_sub(1));
        for j in i + 1..=upper {
            if rows[i].features == rows[j].features {
                pairs.push(MatchPair::new(rows[i].origin, rows[j].origin));
            } else {
                break;
            }
        }
    }
    pairs
}

/// Groups pairs by canonical shift. Classes come out ordered by shift.
pub fn classify_shifts(pairs: &[MatchPair]) -> Vec<ShiftClass> {
    let mut groups: BTreeMap<Shift, Vec<MatchPair>> = BTreeMap::new();
    for &p in pairs {
        groups.entry(p.shift()).or_default().push(p);
    }
    groups
        .into_iter()
        .map(|(shift, pairs)| ShiftClass { shift, pairs })
        .collect()
}

/// Keeps classes whose shift magnitude reaches `th1` and whose pair count
/// reaches `th2`.
pub fn apply_thresholds(
    classes: Vec<ShiftClass>,
    th1: u32,
    metric: Th1Metric,
    th2: usize,
) -> Vec<ShiftClass> {
    classes
        .into_iter()
        .filter(|c| c.shift.magnitude(metric) >= th1 && c.count() >= th2)
        .collect()
}

/// Paints the b-by-b window of every pair member: first origins into the
/// source mask, second origins into the destination mask.
pub fn render_masks(
    accepted: &[ShiftClass],
    block_size: usize,
    width: usize,
    height: usize,
) -> (BinaryMask, BinaryMask) {
    let mut source = BinaryMask::new(width, height);
    let mut dest = BinaryMask::new(width, height);
    for class in accepted {
        for pair in &class.pairs {
            source.fill_rect(pair.a.0, pair.a.1, block_size, block_size);
            dest.fill_rect(pair.b.0, pair.b.1, block_size, block_size);
        }
    }
    (source, dest)
}

/// Runs the whole pipeline on an RGB image. Deterministic for a fixed
/// configuration regardless of thread count.
pub fn detect(img: &RgbImage, cfg: &DetectorConfig) -> Result<DetectionResult> {
    cfg.validate()?;
    let start = Instant::now();

    let t0 = Instant::now();
    let luma = img.to_luma();
    let luma_ms = ms_since(t0);

    let t0 = Instant::now();
    let matrix = feature_matrix(&luma, cfg)?;
    let features_ms = ms_since(t0);

    let blocks = matrix.rows.len();
    let th2 = cfg.effective_th2(blocks);
    if blocks < th2 {
        return Err(Error::ImageTooSmall {
            blocks,
            required: th2,
        });
    }

    let t0 = Instant::now();
    let matrix = sort_rows(matrix);
    let sort_ms = ms_since(t0);

    let t0 = Instant::now();
    let pairs = find_pairs(&matrix, cfg.window);
    let pair_scan_ms = ms_since(t0);

    let t0 = Instant::now();
    let classes = classify_shifts(&pairs);
    let accepted = apply_thresholds(classes, cfg.th1, cfg.th1_metric, th2);
    let classify_ms = ms_since(t0);

    let t0 = Instant::now();
    let (source, dest) = render_masks(&accepted, cfg.block_size, img.width(), img.height());
    let se = StructuringElement::square(cfg.se_size);
    let source_mask = close(&source, &se);
    let dest_mask = close(&dest, &se);
    let mask_ms = ms_since(t0);

    Ok(DetectionResult {
        source_mask,
        dest_mask,
        accepted,
        timings: StageTimings {
            luma_ms,
            features_ms,
            sort_ms,
            pair_scan_ms,
            classify_ms,
            mask_ms,
            total_ms: ms_since(start),
        },
    })
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}
