//! Block 2D DCT and the four-element intensity-robust feature vector.
//!
//! The transform subtracts the block's top-left sample before transforming
//! and restores the DC term analytically. An additive intensity shift then
//! cancels exactly in the subtraction, so every AC coefficient — and with
//! them the whole feature vector — is bit-identical for a block and its
//! shifted copy whenever the inputs sit on a grid where the subtraction is
//! exact (integer pixel values in particular).

use serde::{Deserialize, Serialize};

use crate::pixel::PixelBlock;

/// Orthonormal 2D DCT-II coefficients of one block, row-major. The DC
/// coefficient sits at (0, 0).
#[derive(Debug, Clone, PartialEq)]
pub struct DctBlock {
    size: usize,
    coeffs: Vec<f64>,
}

impl DctBlock {
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn coeff(&self, row: usize, col: usize) -> f64 {
        self.coeffs[row * self.size + col]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
}

/// Precomputed cosine basis for b-by-b blocks.
///
/// Row k holds alpha(k) * cos((2n+1) k pi / 2b); alpha(0) = sqrt(1/b),
/// alpha(k) = sqrt(2/b) otherwise.
#[derive(Debug, Clone)]
pub struct DctBasis {
    size: usize,
    basis: Vec<f64>,
}

impl DctBasis {
    pub fn new(size: usize) -> Self {
        assert!(size >= 2, "DCT blocks must be at least 2x2");
        let b = size as f64;
        let mut basis = vec![0.0; size * size];
        for k in 0..size {
            let alpha = if k == 0 { (1.0 / b).sqrt() } else { (2.0 / b).sqrt() };
            for n in 0..size {
                basis[k * size + n] =
                    alpha * ((2 * n + 1) as f64 * k as f64 * std::f64::consts::PI / (2.0 * b)).cos();
            }
        }
        Self { size, basis }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    fn at(&self, k: usize, n: usize) -> f64 {
        self.basis[k * self.size + n]
    }

    /// Forward transform, D = C (X - x00) C^T with the DC term restored.
    pub fn forward(&self, block: &PixelBlock) -> DctBlock {
        let b = self.size;
        assert_eq!(block.size(), b, "block size does not match basis");
        let offset = block.value(0, 0);

        // T(x, v) = sum_y (X(x, y) - offset) * C(v, y)
        let mut t = vec![0.0; b * b];
        for x in 0..b {
            for v in 0..b {
                let mut acc = 0.0;
                for y in 0..b {
                    acc += (block.value(x, y) - offset) * self.at(v, y);
                }
                t[x * b + v] = acc;
            }
        }
        // D(u, v) = sum_x C(u, x) * T(x, v)
        let mut coeffs = vec![0.0; b * b];
        for u in 0..b {
            for v in 0..b {
                let mut acc = 0.0;
                for x in 0..b {
                    acc += self.at(u, x) * t[x * b + v];
                }
                coeffs[u * b + v] = acc;
            }
        }
        coeffs[0] += b as f64 * offset;
        DctBlock { size: b, coeffs }
    }

    /// Inverse transform, X = C^T D C.
    pub fn inverse(&self, d: &DctBlock) -> PixelBlock {
        let b = self.size;
        assert_eq!(d.size(), b, "coefficient block size does not match basis");
        // T(x, v) = sum_u C(u, x) * D(u, v)
        let mut t = vec![0.0; b * b];
        for x in 0..b {
            for v in 0..b {
                let mut acc = 0.0;
                for u in 0..b {
                    acc += self.at(u, x) * d.coeff(u, v);
                }
                t[x * b + v] = acc;
            }
        }
        let mut values = vec![0.0; b * b];
        for x in 0..b {
            for y in 0..b {
                let mut acc = 0.0;
                for v in 0..b {
                    acc += t[x * b + v] * self.at(v, y);
                }
                values[x * b + y] = acc;
            }
        }
        PixelBlock::new(b, values)
    }
}

/// Orthonormal 2D DCT-II of a square block.
pub fn block_dct(block: &PixelBlock) -> DctBlock {
    DctBasis::new(block.size()).forward(block)
}

/// Inverse of [`block_dct`].
pub fn inverse_dct(d: &DctBlock) -> PixelBlock {
    DctBasis::new(d.size()).inverse(d)
}

/// The four block characteristics: the (2,1) and (1,2) coefficients plus
/// two magnitude-energy ratios over the low-frequency triangle and the top
/// half of the rows. The DC coefficient is excluded everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

/// Extracts the feature vector of a coefficient block.
///
/// C3 sums |coeff| over the anti-diagonal triangle i + j <= b (1-based,
/// DC excluded); C4 over the first ceil(b/2) rows (DC excluded); both are
/// divided by the total AC magnitude sum. Zero AC energy yields C3 = C4 = 0.
pub fn feature_vector(d: &DctBlock) -> FeatureVector {
    let b = d.size();
    let c1 = d.coeff(1, 0);
    let c2 = d.coeff(0, 1);

    let top_rows = b.div_ceil(2);
    let mut upper = 0.0;
    let mut top_half = 0.0;
    let mut total = 0.0;
    for i in 0..b {
        for j in 0..b {
            if i == 0 && j == 0 {
                continue;
            }
            let mag = d.coeff(i, j).abs();
            total += mag;
            if i + j <= b - 2 {
                upper += mag;
            }
            if i < top_rows {
                top_half += mag;
            }
        }
    }
    let (c3, c4) = if total == 0.0 {
        (0.0, 0.0)
    } else {
        (upper / total, top_half / total)
    };
    FeatureVector { c1, c2, c3, c4 }
}

/// Rounds each feature onto its quantization step.
pub fn quantize(v: &FeatureVector, s12: f64, s34: f64) -> [i64; 4] {
    debug_assert!(s12 > 0.0 && s34 > 0.0);
    [
        (v.c1 / s12).round() as i64,
        (v.c2 / s12).round() as i64,
        (v.c3 / s34).round() as i64,
        (v.c4 / s34).round() as i64,
    ]
}

/// One row of the match matrix: quantized features plus the block origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuantizedFeatureRow {
    pub features: [i64; 4],
    pub origin: (usize, usize),
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    /// Direct O(b^4) evaluation of the orthonormal DCT-II definition.
    fn dct_direct(block: &PixelBlock) -> Vec<f64> {
        let b = block.size();
        let bf = b as f64;
        let mut out = vec![0.0; b * b];
        for u in 0..b {
            for v in 0..b {
                let au = if u == 0 { (1.0 / bf).sqrt() } else { (2.0 / bf).sqrt() };
                let av = if v == 0 { (1.0 / bf).sqrt() } else { (2.0 / bf).sqrt() };
                let mut acc = 0.0;
                for x in 0..b {
                    for y in 0..b {
                        acc += block.value(x, y)
                            * ((2 * x + 1) as f64 * u as f64 * std::f64::consts::PI / (2.0 * bf))
                                .cos()
                            * ((2 * y + 1) as f64 * v as f64 * std::f64::consts::PI / (2.0 * bf))
                                .cos();
                    }
                }
                out[u * b + v] = au * av * acc;
            }
        }
        out
    }

    fn random_block(rng: &mut ChaCha12Rng, b: usize) -> PixelBlock {
        let values: Vec<f64> = (0..b * b).map(|_| rng.random_range(0.0..255.0)).collect();
        PixelBlock::new(b, values)
    }

    fn random_integer_block(rng: &mut ChaCha12Rng, b: usize, lo: u8, hi: u8) -> PixelBlock {
        let values: Vec<f64> = (0..b * b)
            .map(|_| rng.random_range(lo..=hi) as f64)
            .collect();
        PixelBlock::new(b, values)
    }

    #[test]
    fn dct_of_constant_block() {
        let blk = PixelBlock::new(8, vec![31.5; 64]);
        let d = block_dct(&blk);
        assert_eq!(d.coeff(0, 0), 8.0 * 31.5);
        for (idx, &c) in d.coeffs().iter().enumerate() {
            if idx != 0 {
                assert_eq!(c, 0.0);
            }
        }
    }

    #[test]
    fn dct_of_zero_block() {
        let blk = PixelBlock::new(8, vec![0.0; 64]);
        let d = block_dct(&blk);
        assert!(d.coeffs().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn dct_matches_direct_summation_oracle() {
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        for b in [2usize, 3, 8, 11] {
            for _ in 0..20 {
                let blk = random_block(&mut rng, b);
                let d = block_dct(&blk);
                let oracle = dct_direct(&blk);
                for (got, want) in d.coeffs().iter().zip(&oracle) {
                    assert!(
                        (got - want).abs() < 1e-9,
                        "b={b}: {got} vs oracle {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn dct_round_trip_and_parseval() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let basis = DctBasis::new(8);
        for _ in 0..50 {
            let blk = random_block(&mut rng, 8);
            let d = basis.forward(&blk);

            let pixel_energy: f64 = blk.values().iter().map(|v| v * v).sum();
            let coeff_energy: f64 = d.coeffs().iter().map(|c| c * c).sum();
            assert!((pixel_energy - coeff_energy).abs() <= 1e-6 * pixel_energy.max(1.0));

            let back = basis.inverse(&d);
            for (got, want) in back.values().iter().zip(blk.values()) {
                assert!((got - want).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn features_of_constant_block_are_zero() {
        let blk = PixelBlock::new(8, vec![77.0; 64]);
        let v = feature_vector(&block_dct(&blk));
        assert_eq!((v.c1, v.c2, v.c3, v.c4), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn features_match_index_set_oracle() {
        // Independent summation with explicit triangle / half-row predicates.
        let mut rng = ChaCha12Rng::seed_from_u64(99);
        for b in [7usize, 8] {
            for _ in 0..500 {
                let blk = random_block(&mut rng, b);
                let d = block_dct(&blk);
                let v = feature_vector(&d);

                let mut upper = 0.0;
                let mut top = 0.0;
                let mut total = 0.0;
                for i1 in 1..=b {
                    for j1 in 1..=b {
                        if (i1, j1) == (1, 1) {
                            continue;
                        }
                        let mag = d.coeff(i1 - 1, j1 - 1).abs();
                        total += mag;
                        if i1 + j1 <= b {
                            upper += mag;
                        }
                        if i1 <= b.div_ceil(2) {
                            top += mag;
                        }
                    }
                }
                assert_eq!(v.c1, d.coeff(1, 0));
                assert_eq!(v.c2, d.coeff(0, 1));
                assert!((v.c3 - upper / total).abs() < 1e-12);
                assert!((v.c4 - top / total).abs() < 1e-12);
                assert!((0.0..=1.0).contains(&v.c3));
                assert!((0.0..=1.0).contains(&v.c4));
            }
        }
    }

    #[test]
    fn additive_shift_leaves_features_bit_identical() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let basis = DctBasis::new(8);
        for _ in 0..200 {
            let blk = random_integer_block(&mut rng, 8, 60, 200);
            let c = rng.random_range(-50i32..=50) as f64;
            let shifted =
                PixelBlock::new(8, blk.values().iter().map(|v| v + c).collect());
            let v0 = feature_vector(&basis.forward(&blk));
            let v1 = feature_vector(&basis.forward(&shifted));
            assert_eq!(v0, v1, "shift c={c}");
        }
    }

    #[test]
    fn power_of_two_gain_scales_c1_c2_exactly() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let basis = DctBasis::new(8);
        for _ in 0..100 {
            let blk = random_block(&mut rng, 8);
            for g in [0.5f64, 2.0, 4.0] {
                let scaled = PixelBlock::new(8, blk.values().iter().map(|v| v * g).collect());
                let v0 = feature_vector(&basis.forward(&blk));
                let v1 = feature_vector(&basis.forward(&scaled));
                assert_eq!(v1.c1, v0.c1 * g);
                assert_eq!(v1.c2, v0.c2 * g);
                assert_eq!(v1.c3, v0.c3);
                assert_eq!(v1.c4, v0.c4);
            }
        }
    }

    #[test]
    fn general_gain_preserves_ratios() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let basis = DctBasis::new(8);
        for _ in 0..100 {
            let blk = random_block(&mut rng, 8);
            let g = rng.random_range(0.1..3.0);
            let scaled = PixelBlock::new(8, blk.values().iter().map(|v| v * g).collect());
            let v0 = feature_vector(&basis.forward(&blk));
            let v1 = feature_vector(&basis.forward(&scaled));
            assert!((v1.c1 - v0.c1 * g).abs() < 1e-9 * v0.c1.abs().max(1.0));
            assert!((v1.c3 - v0.c3).abs() < 1e-12);
            assert!((v1.c4 - v0.c4).abs() < 1e-12);
        }
    }

    #[test]
    fn quantize_examples() {
        let zero = FeatureVector {
            c1: 0.0,
            c2: 0.0,
            c3: 0.0,
            c4: 0.0,
        };
        assert_eq!(quantize(&zero, 2.0, 0.01), [0, 0, 0, 0]);
        assert_eq!(quantize(&zero, 17.0, 0.5), [0, 0, 0, 0]);

        let v = FeatureVector {
            c1: 5.2,
            c2: -5.2,
            c3: 0.0,
            c4: 0.0,
        };
        assert_eq!(quantize(&v, 2.0, 0.01)[0], 3);
        assert_eq!(quantize(&v, 2.0, 0.01)[1], -3);
    }

    #[test]
    fn nearby_features_share_a_bin() {
        // 5.6 and 6.2 are 0.6 < s/2 apart and land in the same width-2 bin.
        let a = FeatureVector { c1: 5.6, c2: 0.0, c3: 0.412, c4: 0.0 };
        let b = FeatureVector { c1: 6.2, c2: 0.0, c3: 0.414, c4: 0.0 };
        assert_eq!(quantize(&a, 2.0, 0.01), quantize(&b, 2.0, 0.01));
    }
}
