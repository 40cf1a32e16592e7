//! Pixel-level ACC / FP scoring and the batch sweep harness.

use rayon::prelude::*;

use crate::degrade::{derive_seed, DegradeSpec, ForgedImage};
use crate::error::{Error, Result};
use crate::matcher::{detect, DetectorConfig};
use crate::pixel::{BinaryMask, RgbImage};

/// Pixel counts and ratios of one scored detection.
///
/// acc = (|R1 ∩ D1| + |R2 ∩ D2|) / (|R1| + |R2|)
/// fp  = (|D1 \ R1| + |D2 \ R2|) / (|R1| + |R2|)
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    pub acc: f64,
    pub fp: f64,
    pub detected_pixels: usize,
    pub false_positive_pixels: usize,
}

/// Scores detected masks against ground truth. Detected masks are assigned
/// to the truth masks by maximal overlap: the label swap is applied
/// whenever it increases ACC, so the reported ACC never depends on which
/// detected region was called "source".
pub fn score(
    detected: (&BinaryMask, &BinaryMask),
    truth: (&BinaryMask, &BinaryMask),
) -> Result<Score> {
    let (d1, d2) = detected;
    let (r1, r2) = truth;
    for m in [d1, d2, r2] {
        if (m.width(), m.height()) != (r1.width(), r1.height()) {
            return Err(Error::DimensionMismatch(
                m.width(),
                m.height(),
                r1.width(),
                r1.height(),
            ));
        }
    }
    let truth_total = r1.count_ones() + r2.count_ones();
    if truth_total == 0 {
        return Err(Error::EmptyGroundTruth);
    }

    let straight = r1.intersection_count(d1) + r2.intersection_count(d2);
    let swapped = r1.intersection_count(d2) + r2.intersection_count(d1);
    let (hits, fp_pixels) = if straight >= swapped {
        (straight, d1.difference_count(r1) + d2.difference_count(r2))
    } else {
        (swapped, d2.difference_count(r1) + d1.difference_count(r2))
    };

    Ok(Score {
        acc: hits as f64 / truth_total as f64,
        fp: fp_pixels as f64 / truth_total as f64,
        detected_pixels: d1.count_ones() + d2.count_ones(),
        false_positive_pixels: fp_pixels,
    })
}

/// One (image, grid point) evaluation.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub image_id: String,
    pub degrade_label: String,
    pub outcome: CellOutcome,
    pub detect_ms: f64,
}

#[derive(Debug, Clone)]
pub enum CellOutcome {
    Ok(Score),
    /// The cell failed somewhere in degrade/detect/score; it scores
    /// acc = 0, fp = 0 and is flagged rather than aborting the sweep.
    Failed(String),
}

impl CellOutcome {
    pub fn score(&self) -> Score {
        match self {
            CellOutcome::Ok(s) => *s,
            CellOutcome::Failed(_) => Score {
                acc: 0.0,
                fp: 0.0,
                detected_pixels: 0,
                false_positive_pixels: 0,
            },
        }
    }

    pub fn is_ok(&self) -> bool {
        matches!(self, CellOutcome::Ok(_))
    }
}

/// Mean scores of every cell sharing a grid point.
#[derive(Debug, Clone)]
pub struct GridAggregate {
    pub degrade_label: String,
    pub cells: usize,
    pub failed: usize,
    pub mean_acc: f64,
    pub mean_fp: f64,
}

/// Full sweep output: per-cell records plus the aggregate table, ordered
/// by grid point and then image.
#[derive(Debug, Clone)]
pub struct SweepReport {
    pub config: DetectorConfig,
    pub cells: Vec<SweepCell>,
    pub aggregates: Vec<GridAggregate>,
}

/// Runs degrade → detect → score for every (image, grid point) cell.
/// Cells evaluate in parallel; cell seeds derive from the grid seed and
/// the image position, so the report is byte-identical however the work
/// is scheduled.
pub fn sweep(corpus: &[ForgedImage], grid: &[DegradeSpec], cfg: &DetectorConfig) -> SweepReport {
    let tasks: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|g| (0..corpus.len()).map(move |i| (g, i)))
        .collect();

    let cells: Vec<SweepCell> = tasks
        .par_iter()
        .map(|&(g, i)| {
            let entry = &corpus[i];
            let spec = grid[g].with_seed(derive_seed(grid[g].seed, i as u64));
            run_cell(entry, &spec, cfg)
        })
        .collect();

    let aggregates = grid
        .iter()
        .enumerate()
        .map(|(g, spec)| {
            let slice = &cells[g * corpus.len()..(g + 1) * corpus.len()];
            let failed = slice.iter().filter(|c| !c.outcome.is_ok()).count();
            let n = slice.len().max(1) as f64;
            GridAggregate {
                degrade_label: spec.label(),
                cells: slice.len(),
                failed,
                mean_acc: slice.iter().map(|c| c.outcome.score().acc).sum::<f64>() / n,
                mean_fp: slice.iter().map(|c| c.outcome.score().fp).sum::<f64>() / n,
            }
        })
        .collect();

    SweepReport {
        config: cfg.clone(),
        cells,
        aggregates,
    }
}

fn run_cell(entry: &ForgedImage, spec: &DegradeSpec, cfg: &DetectorConfig) -> SweepCell {
    let outcome = spec
        .apply(&entry.image)
        .and_then(|degraded| detect(&degraded, cfg))
        .and_then(|result| {
            let s = score(
                (&result.source_mask, &result.dest_mask),
                (&entry.gt_source, &entry.gt_dest),
            )?;
            Ok((s, result.timings.total_ms))
        });
    match outcome {
        Ok((s, ms)) => SweepCell {
            image_id: entry.id.clone(),
            degrade_label: spec.label(),
            outcome: CellOutcome::Ok(s),
            detect_ms: ms,
        },
        Err(e) => SweepCell {
            image_id: entry.id.clone(),
            degrade_label: spec.label(),
            outcome: CellOutcome::Failed(e.to_string()),
            detect_ms: 0.0,
        },
    }
}

impl SweepReport {
    /// Stable text rendering: one record per cell, then the aggregate
    /// table. Field order is fixed so reports diff cleanly; timing is
    /// wall-clock and only included on request.
    pub fn to_text(&self, include_timing: bool) -> String {
        let mut out = String::new();
        out.push_str("# sweep report\n");
        out.push_str(&format!(
            "# config block_size={} s12={} s34={} window={} th1={} th1_metric={} th2={} se_size={}\n",
            self.config.block_size,
            self.config.s12,
            self.config.s34,
            self.config.window,
            self.config.th1,
            match self.config.th1_metric {
                crate::matcher::Th1Metric::Chebyshev => "chebyshev",
                crate::matcher::Th1Metric::PaperAbsdiff => "paper-absdiff",
            },
            self.config.th2,
            self.config.se_size,
        ));
        for cell in &self.cells {
            let s = cell.outcome.score();
            let status = match &cell.outcome {
                CellOutcome::Ok(_) => "ok".to_string(),
                CellOutcome::Failed(msg) => format!("error:{}", msg.replace(['\t', '\n'], " ")),
            };
            out.push_str(&format!(
                "cell\timage={}\tdegrade={}\tstatus={}\tacc={:.6}\tfp={:.6}\tdetected_pixels={}\tfp_pixels={}",
                cell.image_id,
                cell.degrade_label,
                status,
                s.acc,
                s.fp,
                s.detected_pixels,
                s.false_positive_pixels,
            ));
            if include_timing {
                out.push_str(&format!("\tms={:.3}", cell.detect_ms));
            }
            out.push('\n');
        }
        for agg in &self.aggregates {
            out.push_str(&format!(
                "aggregate\tdegrade={}\tcells={}\tfailed={}\tmean_acc={:.6}\tmean_fp={:.6}\n",
                agg.degrade_label, agg.cells, agg.failed, agg.mean_acc, agg.mean_fp
            ));
        }
        out
    }
}

/// Tints the masked pixels orange on a copy of the input, for visual
/// inspection of a detection.
pub fn overlay(img: &RgbImage, mask: &BinaryMask) -> RgbImage {
    const ORANGE: [f64; 3] = [255.0, 140.0, 0.0];
    let mut out = img.clone();
    for row in 0..img.height() {
        for col in 0..img.width() {
            if mask.get(row, col) {
                let px = img.pixel(row, col);
                let blended = [
                    (0.45 * px[0] as f64 + 0.55 * ORANGE[0]).round() as u8,
                    (0.45 * px[1] as f64 + 0.55 * ORANGE[1]).round() as u8,
                    (0.45 * px[2] as f64 + 0.55 * ORANGE[2]).round() as u8,
                ];
                out.set_pixel(row, col, blended);
            }
        }
    }
    out
}
