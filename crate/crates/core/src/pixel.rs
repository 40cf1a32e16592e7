//! Image rasters, luminance conversion, overlapping-block iteration, and
//! binary masks — the substrate every other module operates on.

use std::path::Path;

use crate::error::{Error, Result};

/// Block origin as `(row, col)` of the top-left pixel.
pub type Origin = (usize, usize);

/// 8-bit RGB raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter(
                "image dimensions must be at least 1x1".into(),
            ));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidParameter(format!(
                "pixel buffer holds {} entries, expected {}",
                pixels.len(),
                width * height
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, px: [u8; 3]) -> Self {
        Self {
            width,
            height,
            pixels: vec![px; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn pixel(&self, row: usize, col: usize) -> [u8; 3] {
        self.pixels[row * self.width + col]
    }

    #[inline]
    pub fn set_pixel(&mut self, row: usize, col: usize, px: [u8; 3]) {
        self.pixels[row * self.width + col] = px;
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [[u8; 3]] {
        &mut self.pixels
    }

    /// Luminance conversion. Grayscale inputs behave as R=G=B, for which
    /// the result is the channel value itself.
    pub fn to_luma(&self) -> LumaImage {
        let values = self
            .pixels
            .iter()
            .map(|&[r, g, b]| luma_of(r, g, b))
            .collect();
        LumaImage {
            width: self.width,
            height: self.height,
            values,
        }
    }

    /// Decodes PNG, BMP, or baseline JFIF/JPEG. Other inputs supported by
    /// the underlying decoders are accepted as well; everything is widened
    /// to RGB (grayscale becomes R=G=B).
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let img = image::open(path)?.to_rgb8();
        let (w, h) = (img.width() as usize, img.height() as usize);
        let pixels = img.pixels().map(|p| p.0).collect();
        Self::new(w, h, pixels)
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let buf: Vec<u8> = self.pixels.iter().flatten().copied().collect();
        image::save_buffer_with_format(
            path,
            &buf,
            self.width as u32,
            self.height as u32,
            image::ColorType::Rgb8,
            image::ImageFormat::Png,
        )?;
        Ok(())
    }
}

/// Y = 0.299 R + 0.587 G + 0.114 B, evaluated as an exact integer
/// numerator over 1000 so that equal channels yield Y = v exactly.
#[inline]
pub fn luma_of(r: u8, g: u8, b: u8) -> f64 {
    let num = 299 * r as u32 + 587 * g as u32 + 114 * b as u32;
    num as f64 / 1000.0
}

/// Real-valued Y-channel raster produced by [`RgbImage::to_luma`].
#[derive(Debug, Clone, PartialEq)]
pub struct LumaImage {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl LumaImage {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || values.len() != width * height {
            return Err(Error::InvalidParameter(
                "luma buffer does not match dimensions".into(),
            ));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// The set of overlapping b-by-b block origins of an image, row-major,
/// sliding by one pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockGrid {
    block_size: usize,
    origin_rows: usize,
    origin_cols: usize,
}

impl BlockGrid {
    pub fn block_size(&self) -> usize {
        self.block_size
    }

    /// Total number of origins, (M-b+1)(N-b+1).
    pub fn len(&self) -> usize {
        self.origin_rows * self.origin_cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Origins from top-left to bottom-right, row-major.
    pub fn origins(&self) -> impl Iterator<Item = Origin> + '_ {
        let cols = self.origin_cols;
        (0..self.origin_rows).flat_map(move |r| (0..cols).map(move |c| (r, c)))
    }

    pub fn contains(&self, origin: Origin) -> bool {
        origin.0 < self.origin_rows && origin.1 < self.origin_cols
    }
}

/// Builds the overlapping block grid for `img`.
pub fn block_grid(img: &LumaImage, block_size: usize) -> Result<BlockGrid> {
    if block_size == 0 || block_size > img.width() || block_size > img.height() {
        return Err(Error::BlockTooLarge {
            block: block_size,
            width: img.width(),
            height: img.height(),
        });
    }
    Ok(BlockGrid {
        block_size,
        origin_rows: img.height() - block_size + 1,
        origin_cols: img.width() - block_size + 1,
    })
}

/// Square window of luma samples cut out of an image.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelBlock {
    size: usize,
    values: Vec<f64>,
}

impl PixelBlock {
    pub fn new(size: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), size * size);
        Self { size, values }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.size + col]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Copies the b-by-b window at `origin` out of the image, values unmodified.
pub fn extract_block(img: &LumaImage, origin: Origin, block_size: usize) -> Result<PixelBlock> {
    let (row, col) = origin;
    if row + block_size > img.height() || col + block_size > img.width() {
        return Err(Error::OutOfBounds {
            row,
            col,
            block: block_size,
            width: img.width(),
            height: img.height(),
        });
    }
    let mut values = Vec::with_capacity(block_size * block_size);
    for r in row..row + block_size {
        let start = r * img.width() + col;
        values.extend_from_slice(&img.values()[start..start + block_size]);
    }
    Ok(PixelBlock::new(block_size, values))
}

/// Per-pixel boolean mask with the dimensions of the image it annotates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.bits[row * self.width + col] = value;
    }

    /// Sets every pixel of the rectangle starting at (row, col).
    pub fn fill_rect(&mut self, row: usize, col: usize, rect_height: usize, rect_width: usize) {
        assert!(row + rect_height <= self.height && col + rect_width <= self.width);
        for r in row..row + rect_height {
            for c in col..col + rect_width {
                self.set(r, c, true);
            }
        }
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.assert_same_dims(other);
        self.bits
            .iter()
            .zip(&other.bits)
            .all(|(&a, &b)| !a || b)
    }

    pub fn intersection(&self, other: &BinaryMask) -> BinaryMask {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn union(&self, other: &BinaryMask) -> BinaryMask {
        self.zip_with(other, |a, b| a || b)
    }

    /// Set difference self \ other.
    pub fn difference(&self, other: &BinaryMask) -> BinaryMask {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn complement(&self) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|&b| !b).collect(),
        }
    }

    /// |self ∩ other| without allocating.
    pub fn intersection_count(&self, other: &BinaryMask) -> usize {
        self.assert_same_dims(other);
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(&a, &b)| a && b)
            .count()
    }

    /// |self \ other| without allocating.
    pub fn difference_count(&self, other: &BinaryMask) -> usize {
        self.assert_same_dims(other);
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(&a, &b)| a && !b)
            .count()
    }

    fn zip_with(&self, other: &BinaryMask, f: impl Fn(bool, bool) -> bool) -> BinaryMask {
        self.assert_same_dims(other);
        BinaryMask {
            width: self.width,
            height: self.height,
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    fn assert_same_dims(&self, other: &BinaryMask) {
        assert_eq!(
            (self.width, self.height),
            (other.width, other.height),
            "mask dimensions differ"
        );
    }

    /// Writes the mask as a PNG, 0 as black and 1 as white.
    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let buf: Vec<u8> = self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
        image::save_buffer_with_format(
            path,
            &buf,
            self.width as u32,
            self.height as u32,
            image::ColorType::L8,
            image::ImageFormat::Png,
        )?;
        Ok(())
    }

    /// Reads a mask PNG written with the same convention; any pixel at or
    /// above mid-gray counts as set.
    pub fn load_png(path: impl AsRef<Path>) -> Result<Self> {
        let img = image::open(path)?.to_luma8();
        let (width, height) = (img.width() as usize, img.height() as usize);
        let bits = img.pixels().map(|p| p.0[0] >= 128).collect();
        Ok(Self {
            width,
            height,
            bits,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn luma_of_equal_channels_is_identity() {
        for v in 0..=255u8 {
            assert_eq!(luma_of(v, v, v), v as f64);
        }
    }

    #[test]
    fn luma_of_primaries() {
        assert!((luma_of(255, 0, 0) - 76.245).abs() < 1e-9);
        assert!((luma_of(0, 255, 0) - 149.685).abs() < 1e-9);
        assert!((luma_of(0, 0, 255) - 29.07).abs() < 1e-9);
    }

    #[test]
    fn luma_is_monotone_per_channel() {
        let mut prev = -1.0;
        for r in 0..=255u8 {
            let y = luma_of(r, 40, 200);
            assert!(y > prev);
            prev = y;
        }
    }

    #[test]
    fn grid_counts_match_formula() {
        let img = LumaImage::new(128, 128, vec![0.0; 128 * 128]).unwrap();
        assert_eq!(block_grid(&img, 8).unwrap().len(), 14641);

        let img = LumaImage::new(64, 64, vec![0.0; 64 * 64]).unwrap();
        assert_eq!(block_grid(&img, 8).unwrap().len(), 3249);

        let img = LumaImage::new(8, 8, vec![0.0; 64]).unwrap();
        let grid = block_grid(&img, 8).unwrap();
        assert_eq!(grid.len(), 1);
        assert_eq!(grid.origins().collect::<Vec<_>>(), vec![(0, 0)]);
    }

    #[test]
    fn grid_rejects_oversized_block() {
        let img = LumaImage::new(8, 12, vec![0.0; 96]).unwrap();
        assert!(matches!(
            block_grid(&img, 9),
            Err(Error::BlockTooLarge { .. })
        ));
    }

    #[test]
    fn grid_origins_are_exhaustive_and_unique() {
        // Brute-force enumeration over all block sizes for small images.
        for (w, h) in [(5usize, 7usize), (12, 9), (32, 32), (1, 1)] {
            let img = LumaImage::new(w, h, vec![0.0; w * h]).unwrap();
            for b in 1..=w.min(h) {
                let grid = block_grid(&img, b).unwrap();
                let origins: Vec<_> = grid.origins().collect();
                assert_eq!(origins.len(), (w - b + 1) * (h - b + 1));

                let mut expected = Vec::new();
                for r in 0..h {
                    for c in 0..w {
                        if r + b <= h && c + b <= w {
                            expected.push((r, c));
                        }
                    }
                }
                assert_eq!(origins, expected);
            }
        }
    }

    #[test]
    fn extract_block_windows() {
        let w = 10;
        let h = 9;
        let values: Vec<f64> = (0..w * h).map(|i| i as f64).collect();
        let img = LumaImage::new(w, h, values).unwrap();

        let top_left = extract_block(&img, (0, 0), 3).unwrap();
        assert_eq!(top_left.value(0, 0), 0.0);
        assert_eq!(top_left.value(2, 2), (2 * w + 2) as f64);

        let bottom_right = extract_block(&img, (h - 3, w - 3), 3).unwrap();
        assert_eq!(bottom_right.value(2, 2), (w * h - 1) as f64);

        assert!(matches!(
            extract_block(&img, (7, 0), 3),
            Err(Error::OutOfBounds { .. })
        ));
    }

    #[test]
    fn extract_block_constant_image() {
        let img = LumaImage::new(12, 12, vec![100.0; 144]).unwrap();
        let blk = extract_block(&img, (3, 4), 8).unwrap();
        assert!(blk.values().iter().all(|&v| v == 100.0));
    }

    #[test]
    fn mask_set_algebra() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(11);
        for _ in 0..50 {
            let (w, h) = (13, 9);
            let mut a = BinaryMask::new(w, h);
            let mut b = BinaryMask::new(w, h);
            for r in 0..h {
                for c in 0..w {
                    a.set(r, c, rng.random_bool(0.4));
                    b.set(r, c, rng.random_bool(0.4));
                }
            }
            let inter = a.intersection(&b);
            let uni = a.union(&b);
            let diff = a.difference(&b);
            // Inclusion-exclusion and partition identities.
            assert_eq!(
                uni.count_ones() + inter.count_ones(),
                a.count_ones() + b.count_ones()
            );
            assert_eq!(diff.count_ones() + inter.count_ones(), a.count_ones());
            assert_eq!(a.intersection_count(&b), inter.count_ones());
            assert_eq!(a.difference_count(&b), diff.count_ones());
            assert!(inter.is_subset_of(&a) && inter.is_subset_of(&b));
            assert!(a.is_subset_of(&uni));
            assert_eq!(a.complement().count_ones(), w * h - a.count_ones());
        }
    }

    #[test]
    fn mask_png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mask.png");
        let mut m = BinaryMask::new(17, 11);
        m.fill_rect(2, 3, 5, 7);
        m.set(0, 0, true);
        m.save_png(&path).unwrap();
        let back = BinaryMask::load_png(&path).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn rgb_png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.png");
        let mut img = RgbImage::filled(9, 7, [10, 20, 30]);
        img.set_pixel(3, 4, [200, 100, 50]);
        img.save_png(&path).unwrap();
        let back = RgbImage::load(&path).unwrap();
        assert_eq!(img, back);
    }
}
