//! Raw overlapped-block matcher: blocks are compared as b*b vectors of
//! rounded luma values instead of DCT features. Exact matching makes it a
//! ground-truth oracle for undegraded clones and the comparison baseline
//! for the feature-based detector.

use std::collections::HashMap;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::matcher::{
    apply_thresholds, classify_shifts, render_masks, DetectionResult, MatchPair, StageTimings,
    Th1Metric,
};
use crate::morphology::{close, StructuringElement};
use crate::pixel::{block_grid, extract_block, LumaImage, Origin, RgbImage};

/// The b*b raw luma values of one block, rounded to integers, plus its
/// origin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawBlockRow {
    pub values: Vec<i32>,
    pub origin: Origin,
}

/// Builds raw rows for every overlapping block. Luma is rounded so exact
/// equality is well defined after synthesis.
pub fn raw_rows(luma: &LumaImage, block_size: usize) -> Result<Vec<RawBlockRow>> {
    let grid = block_grid(luma, block_size)?;
    let mut rows = Vec::with_capacity(grid.len());
    for origin in grid.origins() {
        let block = extract_block(luma, origin, block_size)?;
        rows.push(RawBlockRow {
            values: block.values().iter().map(|&v| v.round() as i32).collect(),
            origin,
        });
    }
    Ok(rows)
}

/// Sorted-row matcher over raw blocks: the same sort / neighbour-compare /
/// shift-threshold / mask pipeline as the feature detector, with exact
/// equality of the full b*b vector as the match test.
pub fn olbm_detect(
    img: &RgbImage,
    block_size: usize,
    th1: u32,
    th2: usize,
) -> Result<DetectionResult> {
    if block_size < 1 {
        return Err(Error::InvalidParameter("block_size must be positive".into()));
    }
    let start = Instant::now();

    let t0 = Instant::now();
    let luma = img.to_luma();
    let luma_ms = ms_since(t0);

    let t0 = Instant::now();
    let mut rows = raw_rows(&luma, block_size)?;
    let features_ms = ms_since(t0);

    let blocks = rows.len();
    let required = scaled_th2(th2, blocks);
    if blocks < required {
        return Err(Error::ImageTooSmall { blocks, required });
    }

    let t0 = Instant::now();
    rows.sort_unstable_by(|a, b| a.values.cmp(&b.values).then(a.origin.cmp(&b.origin)));
    let sort_ms = ms_since(t0);

    let t0 = Instant::now();
    let mut pairs = Vec::new();
    for w in rows.windows(2) {
        if w[0].values == w[1].values {
            pairs.push(MatchPair::new(w[0].origin, w[1].origin));
        }
    }
    let pair_scan_ms = ms_since(t0);

    let t0 = Instant::now();
    let classes = classify_shifts(&pairs);
    let accepted = apply_thresholds(classes, th1, Th1Metric::Chebyshev, required);
    let classify_ms = ms_since(t0);

    let t0 = Instant::now();
    let (source, dest) = render_masks(&accepted, block_size, img.width(), img.height());
    let se = StructuringElement::square(3);
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

/// Every pair of blocks with identical raw values, with no window limit —
/// the complete equality relation the sorted matcher approximates. Used as
/// the reference pair set in tests.
pub fn exhaustive_pairs(img: &RgbImage, block_size: usize) -> Result<Vec<MatchPair>> {
    let luma = img.to_luma();
    let rows = raw_rows(&luma, block_size)?;
    let mut groups: HashMap<&[i32], Vec<Origin>> = HashMap::new();
    for row in &rows {
        groups.entry(&row.values).or_default().push(row.origin);
    }
    let mut pairs = Vec::new();
    for origins in groups.values() {
        for i in 0..origins.len() {
            for j in i + 1..origins.len() {
                pairs.push(MatchPair::new(origins[i], origins[j]));
            }
        }
    }
    Ok(pairs)
}

fn scaled_th2(th2: usize, blocks: usize) -> usize {
    let scaled =
        (th2 as f64 * blocks as f64 / crate::matcher::REFERENCE_BLOCK_COUNT as f64).round();
    (scaled as usize).max(1)
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}
