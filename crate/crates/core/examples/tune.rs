//! Parameter-grid search over the detector's quantization steps, sort
//! window, and match-count threshold, evaluated on a synthesized corpus
//! under the JPEG / noise / blur degradations.
//!
//!     cargo run --release -p cmfd --example tune

use cmfd::degrade::{synth_base, synth_forgery_corpus, DegradeSpec, ForgedImage};
use cmfd::eval::score;
use cmfd::matcher::{detect, DetectorConfig};
use rayon::prelude::*;

#[derive(Default, Clone, Copy)]
struct CellStats {
    acc: f64,
    fp: f64,
    localized: bool,
    mislocalized: bool,
    accepted: usize,
}

fn run_cell(entry: &ForgedImage, spec: &DegradeSpec, cfg: &DetectorConfig) -> CellStats {
    let degraded = match spec.apply(&entry.image) {
        Ok(img) => img,
        Err(_) => return CellStats::default(),
    };
    let result = match detect(&degraded, cfg) {
        Ok(r) => r,
        Err(_) => return CellStats::default(),
    };
    let s = score(
        (&result.source_mask, &result.dest_mask),
        (&entry.gt_source, &entry.gt_dest),
    )
    .unwrap();
    let truth = entry.spec.true_shift();
    let (localized, mislocalized) = match result.dominant() {
        Some(class) => {
            let close = (class.shift.d_row - truth.0).abs() <= 2
                && (class.shift.d_col - truth.1).abs() <= 2;
            (close, !close)
        }
        None => (false, false),
    };
    CellStats {
        acc: s.acc,
        fp: s.fp,
        localized,
        mislocalized,
        accepted: result.accepted.len(),
    }
}

fn grid_stats(corpus: &[ForgedImage], spec: &DegradeSpec, cfg: &DetectorConfig) -> Vec<CellStats> {
    corpus.par_iter().map(|e| run_cell(e, spec, cfg)).collect()
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

fn main() {
    let corpus = synth_forgery_corpus(20, 128, 128, 40, &[10, -10, 20, -20, 30, -30], 16, 0xC0FFEE);
    let pristine: Vec<_> = (0..10).map(|i| synth_base(128, 128, 5000 + i)).collect();

    let qfs = [100u8, 92, 83, 75, 67, 58, 50, 42, 33, 25, 17, 9];
    let snrs = [10.0f64, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0];
    let sds = [0.1f64, 0.5, 2.0, 5.0, 8.0, 10.0];

    let mut candidates = Vec::new();
    for &s12 in &[8.0, 12.0, 16.0, 24.0] {
        for &s34 in &[0.04, 0.06, 0.1] {
            for &window in &[1usize, 2, 4] {
                for &th2 in &[40usize, 60, 100] {
                    candidates.push(DetectorConfig {
                        s12,
                        s34,
                        window,
                        th2,
                        ..DetectorConfig::default()
                    });
                }
            }
        }
    }
    if let Ok(extra) = std::env::var("TUNE_ONE") {
        // s12,s34,window,th2
        let parts: Vec<f64> = extra.split(',').map(|p| p.parse().unwrap()).collect();
        candidates = vec![DetectorConfig {
            s12: parts[0],
            s34: parts[1],
            window: parts[2] as usize,
            th2: parts[3] as usize,
            ..DetectorConfig::default()
        }];
    }

    println!(
        "{:<28} | {:<17} | {:<26} | {:<22} | {:<13} | pristine",
        "config", "clean", "jpeg", "awgn", "blur"
    );
    for cfg in candidates {
        // clean, intensity-variant clones
        let clean = grid_stats(&corpus, &DegradeSpec::identity(), &cfg);
        let clean_acc = mean(clean.iter().map(|c| c.acc));
        let clean_fp = mean(clean.iter().map(|c| c.fp));

        // jpeg sweep
        let mut acc_by_qf = Vec::new();
        let mut loc_by_qf = Vec::new();
        for &qf in &qfs {
            let stats = grid_stats(&corpus, &DegradeSpec::jpeg(qf), &cfg);
            acc_by_qf.push(mean(stats.iter().map(|c| c.acc)));
            loc_by_qf.push(stats.iter().filter(|c| c.localized).count());
        }
        let high = mean(acc_by_qf[..5].iter().copied()); // 100..=67
        let low = mean(acc_by_qf[9..].iter().copied()); // 25,17,9
        let low25 = mean(acc_by_qf[9..11].iter().copied()); // 25,17
        let min_loc_17 = *loc_by_qf[..11].iter().min().unwrap(); // down to qf 17

        // awgn on qf-75
        let mut snr_accs = Vec::new();
        let mut snr_fps = Vec::new();
        let mut snr_misloc = 0usize;
        for &snr in &snrs {
            let spec = DegradeSpec {
                jpeg_qf: Some(75),
                awgn_snr_db: Some(snr),
                seed: 1,
                ..DegradeSpec::default()
            };
            let stats = grid_stats(&corpus, &spec, &cfg);
            snr_accs.push(mean(stats.iter().map(|c| c.acc)));
            snr_fps.push(mean(stats.iter().map(|c| c.fp)));
            snr_misloc += stats.iter().filter(|c| c.mislocalized).count();
        }

        // blur on qf-75
        let mut blur_accs = Vec::new();
        let mut blur_fps = Vec::new();
        for &sd in &sds {
            let spec = DegradeSpec {
                jpeg_qf: Some(75),
                blur_size: Some(3),
                blur_sd: Some(sd),
                seed: 2,
                ..DegradeSpec::default()
            };
            let stats = grid_stats(&corpus, &spec, &cfg);
            blur_accs.push(mean(stats.iter().map(|c| c.acc)));
            blur_fps.push(mean(stats.iter().map(|c| c.fp)));
        }

        // pristine false-positive density
        let fpd = mean(pristine.par_iter().map(|img| {
            let r = detect(img, &cfg).unwrap();
            r.combined_mask().count_ones() as f64 / (128.0 * 128.0)
        }).collect::<Vec<_>>().into_iter());

        println!(
            "s12={:<4} s34={:<5} w={} th2={:<3} | acc={:.3} fp={:.3} | trend={:+.2} loc17={:<2} acc@{{25,17}}={:.2} | acc={:.2} fp={:.3} mis={} | acc={:.2} fp={:.3} | fpd={:.4}",
            cfg.s12, cfg.s34, cfg.window, cfg.th2,
            clean_acc, clean_fp,
            high - low, min_loc_17, low25,
            mean(snr_accs.iter().copied()), mean(snr_fps.iter().copied()), snr_misloc,
            mean(blur_accs.iter().copied()), mean(blur_fps.iter().copied()),
            fpd
        );
    }
}
