//! One-off diagnostic: how far do the block features drift between clone
//! copies under each degradation, and what does the detector see?

use cmfd::degrade::{jpeg_roundtrip, synth_base, synthesize, DegradeSpec, ForgerySpec};
use cmfd::eval::score;
use cmfd::features::{feature_vector, DctBasis};
use cmfd::matcher::{detect, DetectorConfig};
use cmfd::pixel::{extract_block, RgbImage};

fn main() {
    let base = synth_base(128, 128, 0xC0FFEE ^ 1);
    let spec = ForgerySpec {
        source_row: 20,
        source_col: 16,
        region_height: 40,
        region_width: 40,
        dest_row: 71,
        dest_col: 63,
        intensity_delta: 20,
        intensity_gain: 1.0,
        seed: 0,
    };
    let (img, gt_s, gt_d) = synthesize(&base, &spec).unwrap();

    // Feature drift between matching source/dest blocks after degradation.
    for (name, degraded) in [
        ("clean", img.clone()),
        ("qf100", jpeg_roundtrip(&img, 100).unwrap()),
        ("qf75", jpeg_roundtrip(&img, 75).unwrap()),
        ("qf50", jpeg_roundtrip(&img, 50).unwrap()),
        ("qf25", jpeg_roundtrip(&img, 25).unwrap()),
        ("qf17", jpeg_roundtrip(&img, 17).unwrap()),
        (
            "qf75+snr30",
            DegradeSpec {
                jpeg_qf: Some(75),
                awgn_snr_db: Some(30.0),
                seed: 1,
                ..Default::default()
            }
            .apply(&img)
            .unwrap(),
        ),
        (
            "qf75+snr20",
            DegradeSpec {
                jpeg_qf: Some(75),
                awgn_snr_db: Some(20.0),
                seed: 1,
                ..Default::default()
            }
            .apply(&img)
            .unwrap(),
        ),
    ] {
        let luma = degraded.to_luma();
        let basis = DctBasis::new(8);
        let mut d1 = Vec::new();
        let mut d2 = Vec::new();
        let mut d3 = Vec::new();
        let mut d4 = Vec::new();
        for r in (0..33).step_by(4) {
            for c in (0..33).step_by(4) {
                let a = extract_block(&luma, (20 + r, 16 + c), 8).unwrap();
                let b = extract_block(&luma, (71 + r, 63 + c), 8).unwrap();
                let va = feature_vector(&basis.forward(&a));
                let vb = feature_vector(&basis.forward(&b));
                d1.push((va.c1 - vb.c1).abs());
                d2.push((va.c2 - vb.c2).abs());
                d3.push((va.c3 - vb.c3).abs());
                d4.push((va.c4 - vb.c4).abs());
            }
        }
        let stat = |v: &mut Vec<f64>| {
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            (v[v.len() / 2], v[v.len() * 9 / 10])
        };
        let (m1, p1) = stat(&mut d1);
        let (m2, p2) = stat(&mut d2);
        let (m3, p3) = stat(&mut d3);
        let (m4, p4) = stat(&mut d4);
        println!(
            "{name:>11}: |dC1| med {m1:7.3} p90 {p1:7.3} | |dC2| med {m2:7.3} p90 {p2:7.3} | |dC3| med {m3:.4} p90 {p3:.4} | |dC4| med {m4:.4} p90 {p4:.4}"
        );
    }

    // What the detector reports per configuration and QF, for a clone
    // whose shift is aligned to the JPEG sampling grid (rows mod 8,
    // cols mod 16) and for the unaligned clone above.
    let aligned_spec = ForgerySpec {
        source_row: 20,
        source_col: 16,
        region_height: 40,
        region_width: 40,
        dest_row: 68,
        dest_col: 80,
        intensity_delta: 20,
        intensity_gain: 1.0,
        seed: 0,
    };
    let (aligned_img, agt_s, agt_d) = synthesize(&base, &aligned_spec).unwrap();

    for (name, forged, gs, gd) in [
        ("unaligned", &img, &gt_s, &gt_d),
        ("aligned  ", &aligned_img, &agt_s, &agt_d),
    ] {
        for (s12, s34, w, th2) in [
            (8.0, 0.25, 2usize, 40usize),
            (12.0, 0.25, 2, 40),
            (12.0, 0.35, 2, 40),
            (16.0, 0.35, 2, 40),
        ] {
            let cfg = DetectorConfig {
                s12,
                s34,
                window: w,
                th2,
                ..Default::default()
            };
            print!("{name} s12={s12:<4} s34={s34:<4} w={w} th2={th2}:");
            for qf in [100u8, 75, 50, 33, 25, 17, 9] {
                let degraded = jpeg_roundtrip(forged, qf).unwrap();
                let r = detect(&degraded, &cfg).unwrap();
                let s = score((&r.source_mask, &r.dest_mask), (gs, gd)).unwrap();
                let dom = r
                    .dominant()
                    .map(|c| format!("({},{})x{}", c.shift.d_row, c.shift.d_col, c.count()))
                    .unwrap_or_else(|| "-".into());
                print!(" qf{qf}:{:.2}/{:.2},{dom}", s.acc, s.fp);
            }
            println!();
        }
    }
}
