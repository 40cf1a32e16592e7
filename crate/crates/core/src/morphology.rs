//! Binary dilation, erosion, and closing used to denoise detection masks.
//!
//! Masks are treated as subsets of the plane that are empty outside the
//! image frame, and results are reported on the frame. Closing runs its
//! intermediate dilation on an enlarged grid so border pixels erode the
//! same way they would on the unbounded plane.

use crate::error::{Error, Result};
use crate::pixel::BinaryMask;

/// Boolean probe template with its anchor at (k/2, k/2).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuringElement {
    size: usize,
    cells: Vec<bool>,
}

impl StructuringElement {
    /// Full k-by-k square.
    pub fn square(size: usize) -> Self {
        assert!(size >= 1);
        Self {
            size,
            cells: vec![true; size * size],
        }
    }

    pub fn new(size: usize, cells: Vec<bool>) -> Result<Self> {
        if size == 0 || cells.len() != size * size {
            return Err(Error::InvalidParameter(
                "structuring element cells must form a k x k grid".into(),
            ));
        }
        if !cells.iter().any(|&c| c) {
            return Err(Error::InvalidParameter(
                "structuring element needs at least one active cell".into(),
            ));
        }
        Ok(Self { size, cells })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn anchor(&self) -> (usize, usize) {
        (self.size / 2, self.size / 2)
    }

    pub fn contains_anchor(&self) -> bool {
        let (ar, ac) = self.anchor();
        self.cells[ar * self.size + ac]
    }

    /// Active cells as (row, col) offsets from the anchor.
    pub fn offsets(&self) -> Vec<(isize, isize)> {
        let (ar, ac) = self.anchor();
        let mut out = Vec::new();
        for r in 0..self.size {
            for c in 0..self.size {
                if self.cells[r * self.size + c] {
                    out.push((r as isize - ar as isize, c as isize - ac as isize));
                }
            }
        }
        out
    }

    /// Point reflection about the anchor. Even sizes re-home onto an odd
    /// grid large enough to hold the negated offsets.
    pub fn reflect(&self) -> StructuringElement {
        let offsets = self.offsets();
        let radius = offsets
            .iter()
            .map(|&(r, c)| r.abs().max(c.abs()))
            .max()
            .unwrap_or(0) as usize;
        let size = 2 * radius + 1;
        let mut cells = vec![false; size * size];
        for (r, c) in offsets {
            let rr = (radius as isize - r) as usize;
            let cc = (radius as isize - c) as usize;
            cells[rr * size + cc] = true;
        }
        StructuringElement { size, cells }
    }
}

/// Dilation: z is set iff the reflected element translated to z meets the
/// mask. Contributions falling outside the frame are dropped.
pub fn dilate(a: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    let mut out = BinaryMask::new(a.width(), a.height());
    let offsets = se.offsets();
    for row in 0..a.height() {
        for col in 0..a.width() {
            if !a.get(row, col) {
                continue;
            }
            for &(dr, dc) in &offsets {
                let r = row as isize + dr;
                let c = col as isize + dc;
                if r >= 0 && c >= 0 && (r as usize) < a.height() && (c as usize) < a.width() {
                    out.set(r as usize, c as usize, true);
                }
            }
        }
    }
    out
}

/// Erosion: z is set iff the element translated to z fits inside the mask.
/// Probes outside the frame see background and fail.
pub fn erode(a: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    let mut out = BinaryMask::new(a.width(), a.height());
    let offsets = se.offsets();
    for row in 0..a.height() {
        'next: for col in 0..a.width() {
            for &(dr, dc) in &offsets {
                let r = row as isize + dr;
                let c = col as isize + dc;
                if r < 0
                    || c < 0
                    || r as usize >= a.height()
                    || c as usize >= a.width()
                    || !a.get(r as usize, c as usize)
                {
                    continue 'next;
                }
            }
            out.set(row, col, true);
        }
    }
    out
}

/// Closing: dilation followed by erosion. The intermediate dilation lives
/// on a padded grid so the erosion sees it before the final crop; the
/// result never extends past the bounding box of the input.
pub fn close(a: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    let pad = se.size();
    let (w, h) = (a.width(), a.height());
    let mut padded = BinaryMask::new(w + 2 * pad, h + 2 * pad);
    for row in 0..h {
        for col in 0..w {
            if a.get(row, col) {
                padded.set(row + pad, col + pad, true);
            }
        }
    }
    let closed = erode(&dilate(&padded, se), se);
    let mut out = BinaryMask::new(w, h);
    for row in 0..h {
        for col in 0..w {
            if closed.get(row + pad, col + pad) {
                out.set(row, col, true);
            }
        }
    }
    out
}


#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn random_mask(rng: &mut ChaCha12Rng, w: usize, h: usize, density: f64) -> BinaryMask {
        let mut m = BinaryMask::new(w, h);
        for r in 0..h {
            for c in 0..w {
                m.set(r, c, rng.random_bool(density));
            }
        }
        m
    }

    fn random_se(rng: &mut ChaCha12Rng, force_anchor: bool) -> StructuringElement {
        let k = rng.random_range(1..=5);
        loop {
            let mut cells: Vec<bool> = (0..k * k).map(|_| rng.random_bool(0.5)).collect();
            if force_anchor {
                let a = (k / 2) * k + k / 2;
                cells[a] = true;
            }
            if let Ok(se) = StructuringElement::new(k, cells) {
                return se;
            }
        }
    }

    #[test]
    fn dilate_single_pixel() {
        let mut a = BinaryMask::new(16, 16);
        a.set(5, 5, true);
        let d = dilate(&a, &StructuringElement::square(3));
        assert_eq!(d.count_ones(), 9);
        for r in 4..=6 {
            for c in 4..=6 {
                assert!(d.get(r, c));
            }
        }
    }

    #[test]
    fn dilate_empty_mask() {
        let a = BinaryMask::new(10, 8);
        assert_eq!(dilate(&a, &StructuringElement::square(3)).count_ones(), 0);
    }

    #[test]
    fn erode_block_to_center() {
        let mut a = BinaryMask::new(16, 16);
        a.fill_rect(6, 6, 3, 3);
        let e = erode(&a, &StructuringElement::square(3));
        assert_eq!(e.count_ones(), 1);
        assert!(e.get(7, 7));
    }

    #[test]
    fn erode_full_mask_shrinks_at_borders() {
        let mut a = BinaryMask::new(10, 10);
        a.fill_rect(0, 0, 10, 10);
        let e = erode(&a, &StructuringElement::square(3));
        assert_eq!(e.count_ones(), 64);
        assert!(!e.get(0, 0) && e.get(1, 1));
    }

    #[test]
    fn dilate_erode_match_setdef_oracle() {
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        for _ in 0..200 {
            let a = random_mask(&mut rng, 32, 32, 0.3);
            let se = random_se(&mut rng, false);
            assert_eq!(dilate(&a, &se), oracle::dilate_setdef(&a, &se));
            assert_eq!(erode(&a, &se), oracle::erode_setdef(&a, &se));
        }
    }

    #[test]
    fn close_solid_square_unchanged() {
        let mut a = BinaryMask::new(64, 64);
        a.fill_rect(10, 12, 40, 40);
        assert_eq!(close(&a, &StructuringElement::square(3)), a);
    }

    #[test]
    fn close_fills_interior_hole() {
        let mut a = BinaryMask::new(32, 32);
        a.fill_rect(8, 8, 10, 10);
        a.set(12, 12, false);
        let c = close(&a, &StructuringElement::square(3));
        assert!(c.get(12, 12));
        let mut solid = BinaryMask::new(32, 32);
        solid.fill_rect(8, 8, 10, 10);
        assert_eq!(c, solid);
    }

    #[test]
    fn close_is_idempotent() {
        let mut rng = ChaCha12Rng::seed_from_u64(33);
        for _ in 0..100 {
            let a = random_mask(&mut rng, 24, 20, 0.35);
            let se = random_se(&mut rng, false);
            let once = close(&a, &se);
            assert_eq!(close(&once, &se), once);
        }
    }

    #[test]
    fn extensivity_with_anchor_bearing_elements() {
        let mut rng = ChaCha12Rng::seed_from_u64(44);
        for _ in 0..100 {
            let a = random_mask(&mut rng, 20, 20, 0.3);
            let se = random_se(&mut rng, true);
            assert!(a.is_subset_of(&dilate(&a, &se)));
            assert!(erode(&a, &se).is_subset_of(&a));
            assert!(a.is_subset_of(&close(&a, &se)), "closing lost pixels");
        }
    }

    #[test]
    fn monotonicity() {
        let mut rng = ChaCha12Rng::seed_from_u64(55);
        for _ in 0..100 {
            let a = random_mask(&mut rng, 18, 18, 0.25);
            let extra = random_mask(&mut rng, 18, 18, 0.15);
            let b = a.union(&extra);
            let se = random_se(&mut rng, false);
            assert!(dilate(&a, &se).is_subset_of(&dilate(&b, &se)));
            assert!(erode(&a, &se).is_subset_of(&erode(&b, &se)));
        }
    }

    #[test]
    fn duality_on_padded_frame() {
        // erode(A, B) equals the complement of dilating the complement by
        // the reflected element, once the frame is padded far enough that
        // the border plays no role.
        let mut rng = ChaCha12Rng::seed_from_u64(66);
        for _ in 0..100 {
            let a = random_mask(&mut rng, 16, 14, 0.4);
            let se = random_se(&mut rng, false);
            let pad = se.size();
            let (w, h) = (a.width(), a.height());

            let mut big = BinaryMask::new(w + 2 * pad, h + 2 * pad);
            for r in 0..h {
                for c in 0..w {
                    if a.get(r, c) {
                        big.set(r + pad, c + pad, true);
                    }
                }
            }
            let eroded = erode(&big, &se);
            let dual = dilate(&big.complement(), &se.reflect()).complement();
            for r in 0..h {
                for c in 0..w {
                    assert_eq!(
                        eroded.get(r + pad, c + pad),
                        dual.get(r + pad, c + pad),
                        "duality mismatch at ({r},{c})"
                    );
                }
            }
        }
    }
}
