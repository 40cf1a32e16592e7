//! End-to-end behaviour of the detection pipeline on synthesized images.

use cmfd::degrade::{synth_base, synthesize, DegradeSpec, ForgerySpec};
use cmfd::eval::score;
use cmfd::matcher::{detect, feature_matrix, find_pairs, sort_rows, DetectorConfig, MatchPair};
use cmfd::olbm;
use cmfd::pixel::RgbImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn noise_image(w: usize, h: usize, seed: u64) -> RgbImage {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let pixels = (0..w * h)
        .map(|_| {
            let v: u8 = rng.random_range(30..=225);
            [v, v, v]
        })
        .collect();
    RgbImage::new(w, h, pixels).unwrap()
}

fn forgery_spec(src: (usize, usize), dst: (usize, usize), region: usize, delta: i32) -> ForgerySpec {
    ForgerySpec {
        source_row: src.0,
        source_col: src.1,
        region_height: region,
        region_width: region,
        dest_row: dst.0,
        dest_col: dst.1,
        intensity_delta: delta,
        intensity_gain: 1.0,
        seed: 0,
    }
}

#[test]
fn find_pairs_matches_exhaustive_raw_oracle_on_tiny_image() {
    // Two identical 8x8 patches at (0,0) and (8,8) in a 16x16 noise image:
    // the feature matcher must report exactly the pairs the exhaustive raw
    // matcher reports.
    let mut img = noise_image(16, 16, 71);
    for r in 0..8 {
        for c in 0..8 {
            let px = img.pixel(r, c);
            img.set_pixel(8 + r, 8 + c, px);
        }
    }
    let cfg = DetectorConfig::default();
    let matrix = sort_rows(feature_matrix(&img.to_luma(), &cfg).unwrap());
    let got = normalized(find_pairs(&matrix, cfg.window));
    let want = normalized(olbm::exhaustive_pairs(&img, 8).unwrap());
    assert_eq!(got, want);
    assert!(want.contains(&MatchPair::new((0, 0), (8, 8))));
}

fn normalized(mut pairs: Vec<MatchPair>) -> Vec<MatchPair> {
    pairs.sort_by_key(|p| (p.a, p.b));
    pairs.dedup();
    pairs
}

#[test]
fn dominant_class_counts_interior_blocks_exactly() {
    // 40x40 clone on a noise base: the dominant class holds one pair per
    // fully-interior origin, (40-8+1)^2 = 1089 of them.
    let base = noise_image(128, 128, 72);
    let spec = forgery_spec((20, 16), (70, 64), 40, 25);
    let (img, gt_source, gt_dest) = synthesize(&base, &spec).unwrap();

    let result = detect(&img, &DetectorConfig::default()).unwrap();
    let dominant = result.dominant().expect("clone detected");
    assert_eq!(dominant.shift.d_row, 50);
    assert_eq!(dominant.shift.d_col, 48);
    assert_eq!(dominant.count(), 1089);

    // With every interior window painted, the masks reconstruct the
    // regions exactly and the score is perfect.
    let s = score(
        (&result.source_mask, &result.dest_mask),
        (&gt_source, &gt_dest),
    )
    .unwrap();
    assert_eq!(s.acc, 1.0);
    assert_eq!(s.fp, 0.0);
}

#[test]
fn end_to_end_additive_shift_invariance() {
    // The same forgery with and without an intensity delta accepts the
    // same shift classes on the uncompressed path.
    let base = synth_base(128, 128, 73);
    let plain = synthesize(&base, &forgery_spec((12, 70), (66, 14), 40, 0)).unwrap();
    let shifted = synthesize(&base, &forgery_spec((12, 70), (66, 14), 40, 30)).unwrap();

    let cfg = DetectorConfig::default();
    let shifts = |img: &RgbImage| {
        detect(img, &cfg)
            .unwrap()
            .accepted
            .iter()
            .map(|c| c.shift)
            .collect::<Vec<_>>()
    };
    let a = shifts(&plain.0);
    let b = shifts(&shifted.0);
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn pristine_images_stay_clean() {
    let cfg = DetectorConfig::default();
    for seed in 900..910 {
        let img = synth_base(128, 128, seed);
        let result = detect(&img, &cfg).unwrap();
        let density = result.combined_mask().count_ones() as f64 / (128.0 * 128.0);
        assert!(
            density < 0.01,
            "seed {seed}: false-positive density {density}"
        );
    }
}

#[test]
fn clean_forged_image_scores_above_090() {
    let base = synth_base(128, 128, 74);
    let spec = forgery_spec((24, 20), (72, 68), 40, 20);
    let (img, gt_s, gt_d) = synthesize(&base, &spec).unwrap();
    let result = detect(&img, &DetectorConfig::default()).unwrap();
    let s = score((&result.source_mask, &result.dest_mask), (&gt_s, &gt_d)).unwrap();
    assert!(s.acc >= 0.90, "acc {}", s.acc);
}

#[test]
fn qf50_recompression_still_localizes() {
    let base = synth_base(128, 128, 75);
    let spec = forgery_spec((24, 20), (72, 68), 40, 20);
    let (img, gt_s, gt_d) = synthesize(&base, &spec).unwrap();
    let degraded = DegradeSpec::jpeg(50).apply(&img).unwrap();

    let result = detect(&degraded, &DetectorConfig::default()).unwrap();
    let dominant = result.dominant().expect("clone still found at QF 50");
    assert!((dominant.shift.d_row - 48).abs() <= 2);
    assert!((dominant.shift.d_col - 48).abs() <= 2);
    let s = score((&result.source_mask, &result.dest_mask), (&gt_s, &gt_d)).unwrap();
    assert!(s.acc >= 0.5, "acc {}", s.acc);
}

#[test]
fn olbm_and_feature_matcher_agree_on_exact_clones() {
    let base = noise_image(96, 96, 76);
    let spec = forgery_spec((8, 8), (50, 55), 30, 0);
    let (img, _, _) = synthesize(&base, &spec).unwrap();

    let cfg = DetectorConfig::default();
    let feat = detect(&img, &cfg).unwrap();
    let raw = olbm::olbm_detect(&img, cfg.block_size, cfg.th1, cfg.th2).unwrap();
    let a = feat.dominant().expect("feature matcher finds the clone");
    let b = raw.dominant().expect("raw matcher finds the clone");
    assert_eq!(a.shift, b.shift);
    assert_eq!(a.shift.d_row, 42);
    assert_eq!(a.shift.d_col, 47);
}
