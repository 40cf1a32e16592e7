//! Forgery synthesis and the three degradations used by the robustness
//! sweeps: JPEG recompression, additive white Gaussian noise, and Gaussian
//! blur. Also hosts the seeded base-image synthesizer and corpus helpers,
//! since the reference corpora are not published.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pixel::{BinaryMask, RgbImage};

/// Placement and intensity change of one synthesized clone. Flat so it
/// serializes as a plain key-value manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForgerySpec {
    pub source_row: usize,
    pub source_col: usize,
    pub region_height: usize,
    pub region_width: usize,
    pub dest_row: usize,
    pub dest_col: usize,
    /// Added to every channel of the pasted region.
    #[serde(default)]
    pub intensity_delta: i32,
    /// Multiplies every channel of the pasted region before the delta.
    #[serde(default = "default_gain")]
    pub intensity_gain: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_gain() -> f64 {
    1.0
}

impl ForgerySpec {
    /// Shift from source to destination, (row delta, col delta).
    pub fn true_shift(&self) -> (i32, i32) {
        (
            self.dest_row as i32 - self.source_row as i32,
            self.dest_col as i32 - self.source_col as i32,
        )
    }

    fn rects_overlap(&self) -> bool {
        let (sr, sc) = (self.source_row, self.source_col);
        let (dr, dc) = (self.dest_row, self.dest_col);
        let (h, w) = (self.region_height, self.region_width);
        sr < dr + h && dr < sr + h && sc < dc + w && dc < sc + w
    }

    fn validate_against(&self, img: &RgbImage) -> Result<()> {
        if self.region_height == 0 || self.region_width == 0 {
            return Err(Error::InvalidParameter("clone region must be non-empty".into()));
        }
        let fits = |row: usize, col: usize| {
            row + self.region_height <= img.height() && col + self.region_width <= img.width()
        };
        if !fits(self.source_row, self.source_col) || !fits(self.dest_row, self.dest_col) {
            return Err(Error::OutOfBounds {
                row: self.dest_row,
                col: self.dest_col,
                block: self.region_height.max(self.region_width),
                width: img.width(),
                height: img.height(),
            });
        }
        if self.rects_overlap() {
            return Err(Error::RegionOverlap);
        }
        Ok(())
    }
}

/// Copies the source rectangle onto the destination with the requested
/// gain and delta, clamped per channel. Returns the forged image and the
/// two ground-truth masks.
pub fn synthesize(
    img: &RgbImage,
    spec: &ForgerySpec,
) -> Result<(RgbImage, BinaryMask, BinaryMask)> {
    spec.validate_against(img)?;
    let mut out = img.clone();
    for r in 0..spec.region_height {
        for c in 0..spec.region_width {
            let px = img.pixel(spec.source_row + r, spec.source_col + c);
            let forged = px.map(|v| {
                (spec.intensity_gain * v as f64 + spec.intensity_delta as f64)
                    .round()
                    .clamp(0.0, 255.0) as u8
            });
            out.set_pixel(spec.dest_row + r, spec.dest_col + c, forged);
        }
    }
    let mut gt_source = BinaryMask::new(img.width(), img.height());
    gt_source.fill_rect(
        spec.source_row,
        spec.source_col,
        spec.region_height,
        spec.region_width,
    );
    let mut gt_dest = BinaryMask::new(img.width(), img.height());
    gt_dest.fill_rect(
        spec.dest_row,
        spec.dest_col,
        spec.region_height,
        spec.region_width,
    );
    Ok((out, gt_source, gt_dest))
}

/// One point of a degradation grid. Stages apply in declared order:
/// JPEG, then noise, then blur. All stages optional; none means identity.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DegradeSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jpeg_qf: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub awgn_snr_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blur_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blur_sd: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl DegradeSpec {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn jpeg(qf: u8) -> Self {
        Self {
            jpeg_qf: Some(qf),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(qf) = self.jpeg_qf {
            if qf == 0 || qf > 100 {
                return Err(Error::InvalidParameter(format!(
                    "jpeg quality factor {qf} outside [1, 100]"
                )));
            }
        }
        if let Some(snr) = self.awgn_snr_db {
            if !snr.is_finite() {
                return Err(Error::InvalidParameter("snr must be finite".into()));
            }
        }
        match (self.blur_size, self.blur_sd) {
            (None, None) => {}
            (Some(k), Some(sd)) => {
                if k < 1 || !(sd > 0.0) {
                    return Err(Error::InvalidParameter(
                        "blur needs size >= 1 and sd > 0".into(),
                    ));
                }
            }
            _ => {
                return Err(Error::InvalidParameter(
                    "blur_size and blur_sd must be given together".into(),
                ));
            }
        }
        Ok(())
    }

    /// Applies the configured stages in order.
    pub fn apply(&self, img: &RgbImage) -> Result<RgbImage> {
        self.validate()?;
        let mut out = match self.jpeg_qf {
            Some(qf) => jpeg_roundtrip(img, qf)?,
            None => img.clone(),
        };
        if let Some(snr) = self.awgn_snr_db {
            out = add_awgn(&out, snr, self.seed);
        }
        if let (Some(k), Some(sd)) = (self.blur_size, self.blur_sd) {
            out = gaussian_blur(&out, k, sd);
        }
        Ok(out)
    }

    /// Stable short name used as the grid key in reports.
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if let Some(qf) = self.jpeg_qf {
            parts.push(format!("qf={qf}"));
        }
        if let Some(snr) = self.awgn_snr_db {
            parts.push(format!("snr={snr}"));
        }
        if let (Some(k), Some(sd)) = (self.blur_size, self.blur_sd) {
            parts.push(format!("blur={k}x{sd}"));
        }
        if parts.is_empty() {
            "identity".to_string()
        } else {
            parts.join("+")
        }
    }

    /// Copy of this grid point with the per-cell seed swapped in.
    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }
}

/// Encode then decode with a baseline JFIF codec at the given quality
/// factor. Dimensions are preserved.
pub fn jpeg_roundtrip(img: &RgbImage, qf: u8) -> Result<RgbImage> {
    if qf == 0 || qf > 100 {
        return Err(Error::InvalidParameter(format!(
            "jpeg quality factor {qf} outside [1, 100]"
        )));
    }
    use image::ImageEncoder;
    let raw: Vec<u8> = img.pixels().iter().flatten().copied().collect();
    let mut encoded = Vec::new();
    let encoder = image::codecs::jpeg::JpegEncoder::new_with_quality(&mut encoded, qf);
    encoder.write_image(
        &raw,
        img.width() as u32,
        img.height() as u32,
        image::ExtendedColorType::Rgb8,
    )?;
    let decoded = image::load_from_memory_with_format(&encoded, image::ImageFormat::Jpeg)?
        .to_rgb8();
    let pixels = decoded.pixels().map(|p| p.0).collect();
    RgbImage::new(decoded.width() as usize, decoded.height() as usize, pixels)
}

/// Mean squared luma value, the signal power the SNR is referenced to.
pub fn luma_power(img: &RgbImage) -> f64 {
    let luma = img.to_luma();
    luma.values().iter().map(|y| y * y).sum::<f64>() / luma.values().len() as f64
}

/// Noise standard deviation for a given signal power and SNR in dB.
pub fn noise_sigma(p_signal: f64, snr_db: f64) -> f64 {
    (p_signal / 10f64.powf(snr_db / 10.0)).sqrt()
}

/// Adds iid Gaussian noise to every channel, clamped to [0, 255]. The
/// noise variance comes from the luma power of the input image and the
/// requested SNR. Deterministic under the seed.
pub fn add_awgn(img: &RgbImage, snr_db: f64, seed: u64) -> RgbImage {
    let sigma = noise_sigma(luma_power(img), snr_db);
    let normal = Normal::new(0.0, sigma).expect("valid sigma");
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut out = img.clone();
    for px in out.pixels_mut() {
        for ch in px.iter_mut() {
            let noisy = *ch as f64 + normal.sample(&mut rng);
            *ch = noisy.round().clamp(0.0, 255.0) as u8;
        }
    }
    out
}

/// k-by-k Gaussian weights around the anchor (k/2, k/2), normalized to
/// sum 1.
pub fn gaussian_kernel(k: usize, sd: f64) -> Vec<f64> {
    assert!(k >= 1 && sd > 0.0);
    let anchor = (k / 2) as isize;
    let mut weights = vec![0.0; k * k];
    let mut sum = 0.0;
    for i in 0..k {
        for j in 0..k {
            let di = (i as isize - anchor) as f64;
            let dj = (j as isize - anchor) as f64;
            let w = (-(di * di + dj * dj) / (2.0 * sd * sd)).exp();
            weights[i * k + j] = w;
            sum += w;
        }
    }
    for w in weights.iter_mut() {
        *w /= sum;
    }
    weights
}

/// Convolution with the normalized Gaussian kernel; borders replicate the
/// edge pixel.
pub fn gaussian_blur(img: &RgbImage, k: usize, sd: f64) -> RgbImage {
    let kernel = gaussian_kernel(k, sd);
    let anchor = (k / 2) as isize;
    let (w, h) = (img.width(), img.height());
    let mut out = img.clone();
    for row in 0..h {
        for col in 0..w {
            let mut acc = [0.0f64; 3];
            for i in 0..k {
                for j in 0..k {
                    let r = (row as isize + i as isize - anchor).clamp(0, h as isize - 1) as usize;
                    let c = (col as isize + j as isize - anchor).clamp(0, w as isize - 1) as usize;
                    let px = img.pixel(r, c);
                    let weight = kernel[i * k + j];
                    for ch in 0..3 {
                        acc[ch] += weight * px[ch] as f64;
                    }
                }
            }
            out.set_pixel(
                row,
                col,
                [
                    acc[0].round().clamp(0.0, 255.0) as u8,
                    acc[1].round().clamp(0.0, 255.0) as u8,
                    acc[2].round().clamp(0.0, 255.0) as u8,
                ],
            );
        }
    }
    out
}

/// Cheap seed derivation for per-item streams (splitmix64 step).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Synthesizes a natural-looking base image: a few octaves of bilinear
/// value noise plus per-pixel texture, normalized away from the channel
/// limits so intensity deltas and noise have headroom, with gentle
/// low-frequency color tints.
pub fn synth_base(width: usize, height: usize, seed: u64) -> RgbImage {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut field = vec![0.0f64; width * height];
    // Large-scale structure from randomly oriented cosine waves; their
    // gradients vary continuously, so no two windows see the same slope.
    for _ in 0..6 {
        let wavelength = rng.random_range(20.0..80.0);
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        let amp = rng.random_range(8.0..16.0);
        let (fr, fc) = (
            theta.sin() / wavelength * std::f64::consts::TAU,
            theta.cos() / wavelength * std::f64::consts::TAU,
        );
        for r in 0..height {
            for c in 0..width {
                field[r * width + c] += amp * (fr * r as f64 + fc * c as f64 + phase).cos();
            }
        }
    }
    // Strong mid-frequency texture, photograph-like, so blocks stay
    // individually recognizable.
    for &(cell, amp) in &[(16usize, 25.0f64), (8, 20.0), (4, 12.0)] {
        add_value_noise(&mut field, width, height, cell, amp, &mut rng);
    }
    // Per-pixel grain in the role of sensor noise.
    for v in field.iter_mut() {
        *v += rng.random_range(-8.0..8.0);
    }

    let min = field.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = field.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = (max - min).max(1e-9);
    for v in field.iter_mut() {
        *v = 64.0 + (*v - min) / span * 128.0;
    }

    let mut tints = [vec![0.0; width * height], vec![0.0; width * height], vec![
        0.0;
        width * height
    ]];
    for t in tints.iter_mut() {
        add_value_noise(t, width, height, 64, 12.0, &mut rng);
    }

    let pixels = (0..width * height)
        .map(|i| {
            let y = field[i];
            [
                (y + tints[0][i]).round().clamp(0.0, 255.0) as u8,
                (y + tints[1][i]).round().clamp(0.0, 255.0) as u8,
                (y + tints[2][i]).round().clamp(0.0, 255.0) as u8,
            ]
        })
        .collect();
    RgbImage::new(width, height, pixels).expect("valid dimensions")
}

fn add_value_noise(
    field: &mut [f64],
    width: usize,
    height: usize,
    cell: usize,
    amplitude: f64,
    rng: &mut ChaCha12Rng,
) {
    let lw = width / cell + 2;
    let lh = height / cell + 2;
    let lattice: Vec<f64> = (0..lw * lh).map(|_| rng.random_range(-1.0..1.0)).collect();
    let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
    for r in 0..height {
        for c in 0..width {
            let fr = r as f64 / cell as f64;
            let fc = c as f64 / cell as f64;
            let (r0, c0) = (fr as usize, fc as usize);
            let (tr, tc) = (smooth(fr - r0 as f64), smooth(fc - c0 as f64));
            let v00 = lattice[r0 * lw + c0];
            let v01 = lattice[r0 * lw + c0 + 1];
            let v10 = lattice[(r0 + 1) * lw + c0];
            let v11 = lattice[(r0 + 1) * lw + c0 + 1];
            let top = v00 + (v01 - v00) * tc;
            let bottom = v10 + (v11 - v10) * tc;
            field[r * width + c] += amplitude * (top + (bottom - top) * tr);
        }
    }
}

/// A synthesized forgery with its ground truth, ready for sweeps.
#[derive(Debug, Clone)]
pub struct ForgedImage {
    pub id: String,
    pub image: RgbImage,
    pub gt_source: BinaryMask,
    pub gt_dest: BinaryMask,
    pub spec: ForgerySpec,
}

/// Generates `count` forgeries on synthesized bases. Clone placement is
/// uniform over disjoint positions whose shift magnitude is at least
/// `min_shift`; deltas cycle through the given list. Fully determined by
/// the master seed.
///
/// When `align_jpeg_grid` is set, the paste shift is snapped to the
/// baseline JPEG sampling grid (rows to 8, columns to 16), the regime in
/// which clones survive recompression best.
pub fn synth_forgery_corpus(
    count: usize,
    width: usize,
    height: usize,
    region: usize,
    deltas: &[i32],
    min_shift: u32,
    align_jpeg_grid: bool,
    master_seed: u64,
) -> Vec<ForgedImage> {
    assert!(!deltas.is_empty());
    assert!(region <= width && region <= height);
    (0..count)
        .map(|i| {
            let seed = derive_seed(master_seed, i as u64);
            let base = synth_base(width, height, seed);
            let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(seed, 0xF0F0));
            let (src, dst) = loop {
                let src = (
                    rng.random_range(0..=height - region),
                    rng.random_range(0..=width - region),
                );
                let mut dst = (
                    rng.random_range(0..=height - region),
                    rng.random_range(0..=width - region),
                );
                if align_jpeg_grid {
                    let snap = |d: usize, s: usize, q: usize, max: usize| {
                        let shift = d as i64 - s as i64;
                        let snapped = (shift as f64 / q as f64).round() as i64 * q as i64;
                        (s as i64 + snapped).clamp(0, max as i64) as usize
                    };
                    dst = (
                        snap(dst.0, src.0, 8, height - region),
                        snap(dst.1, src.1, 16, width - region),
                    );
                }
                let shift_r = (dst.0 as i32 - src.0 as i32).unsigned_abs();
                let shift_c = (dst.1 as i32 - src.1 as i32).unsigned_abs();
                let disjoint = shift_r >= region as u32 || shift_c >= region as u32;
                if disjoint && shift_r.max(shift_c) >= min_shift {
                    break (src, dst);
                }
            };
            let spec = ForgerySpec {
                source_row: src.0,
                source_col: src.1,
                region_height: region,
                region_width: region,
                dest_row: dst.0,
                dest_col: dst.1,
                intensity_delta: deltas[i % deltas.len()],
                intensity_gain: 1.0,
                seed,
            };
            let (image, gt_source, gt_dest) = synthesize(&base, &spec).expect("valid placement");
            ForgedImage {
                id: format!("forged_{i:03}"),
                image,
                gt_source,
                gt_dest,
                spec,
            }
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    image: String,
    gt_source: String,
    gt_dest: String,
    #[serde(flatten)]
    spec: ForgerySpec,
}

/// Writes the forged image, both ground-truth masks, and a flat TOML
/// manifest into `dir`.
pub fn save_corpus_entry(dir: impl AsRef<Path>, entry: &ForgedImage) -> Result<()> {
    let dir = dir.as_ref();
    let image = format!("{}.png", entry.id);
    let gt_source = format!("{}.gt_source.png", entry.id);
    let gt_dest = format!("{}.gt_dest.png", entry.id);
    entry.image.save_png(dir.join(&image))?;
    entry.gt_source.save_png(dir.join(&gt_source))?;
    entry.gt_dest.save_png(dir.join(&gt_dest))?;
    let manifest = Manifest {
        image,
        gt_source,
        gt_dest,
        spec: entry.spec.clone(),
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::Manifest(e.to_string()))?;
    std::fs::write(dir.join(format!("{}.manifest.toml", entry.id)), text)?;
    Ok(())
}

/// Loads every `*.manifest.toml` under `dir`, sorted by file name.
pub fn load_corpus(dir: impl AsRef<Path>) -> Result<Vec<ForgedImage>> {
    let dir = dir.as_ref();
    let mut manifests: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.ends_with(".manifest.toml"))
        })
        .collect();
    manifests.sort();
    let mut out = Vec::with_capacity(manifests.len());
    for path in manifests {
        let text = std::fs::read_to_string(&path)?;
        let manifest: Manifest =
            toml::from_str(&text).map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
        let id = path
            .file_name()
            .unwrap()
            .to_string_lossy()
            .trim_end_matches(".manifest.toml")
            .to_string();
        out.push(ForgedImage {
            id,
            image: RgbImage::load(dir.join(&manifest.image))?,
            gt_source: BinaryMask::load_png(dir.join(&manifest.gt_source))?,
            gt_dest: BinaryMask::load_png(dir.join(&manifest.gt_dest))?,
            spec: manifest.spec,
        });
    }
    Ok(out)
}
