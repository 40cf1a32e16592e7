//! Batch front end for the copy-move forgery detector: detect clones in an
//! image, synthesize forgery corpora with ground truth, degrade images,
//! score masks, and run degradation sweeps.

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use cmfd::degrade::{
    self, derive_seed, load_corpus, save_corpus_entry, synth_forgery_corpus, DegradeSpec,
    ForgedImage, ForgerySpec,
};
use cmfd::eval::{overlay, score, sweep};
use cmfd::matcher::{detect, DetectorConfig, Th1Metric};
use cmfd::olbm::olbm_detect;
use cmfd::pixel::{BinaryMask, RgbImage};

#[derive(Parser)]
#[command(
    name = "cmfd",
    about = "Copy-move forgery detection toolkit",
    version
)]
struct Cli {
    /// Worker threads for block processing and sweeps (default: all cores).
    /// Output is identical for any thread count.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Locate duplicated regions in an image and write clone masks.
    Detect(DetectCmd),
    /// Create copy-move forgeries with ground-truth masks and manifests.
    Synthesize(SynthesizeCmd),
    /// Apply JPEG / noise / blur degradations to an image.
    Degrade(DegradeCmd),
    /// Score detected masks against ground-truth masks.
    Evaluate(EvaluateCmd),
    /// Run a degradation grid over a corpus and write the report table.
    Sweep(SweepCmd),
}

#[derive(Args)]
struct DetectorArgs {
    /// Side of the sliding analysis window, in pixels.
    #[arg(long, default_value_t = DetectorConfig::default().block_size)]
    block_size: usize,
    /// Quantization step for the two DCT coefficient features.
    #[arg(long, default_value_t = DetectorConfig::default().s12)]
    s12: f64,
    /// Quantization step for the two energy-ratio features.
    #[arg(long, default_value_t = DetectorConfig::default().s34)]
    s34: f64,
    /// Sorted neighbours compared per row.
    #[arg(long, default_value_t = DetectorConfig::default().window)]
    window: usize,
    /// Minimum shift magnitude of an accepted clone.
    #[arg(long, default_value_t = DetectorConfig::default().th1)]
    th1: u32,
    /// Shift metric: 'chebyshev' or 'paper-absdiff'.
    #[arg(long, default_value = "chebyshev")]
    th1_metric: String,
    /// Minimum matched-pair count at 128x128; scaled with image area.
    #[arg(long, default_value_t = DetectorConfig::default().th2)]
    th2: usize,
    /// Side of the square structuring element for mask closing.
    #[arg(long, default_value_t = DetectorConfig::default().se_size)]
    se_size: usize,
}

impl DetectorArgs {
    fn to_config(&self) -> anyhow::Result<DetectorConfig> {
        let th1_metric: Th1Metric = self
            .th1_metric
            .parse()
            .map_err(|e: String| Usage(e))
            .context("bad --th1-metric")?;
        let cfg = DetectorConfig {
            block_size: self.block_size,
            s12: self.s12,
            s34: self.s34,
            window: self.window,
            th1: self.th1,
            th1_metric,
            th2: self.th2,
            se_size: self.se_size,
        };
        cfg.validate().map_err(|e| Usage(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct DetectCmd {
    /// Image to analyze (PNG, BMP, or JPEG).
    #[arg(long = "in")]
    input: PathBuf,
    /// Where masks, overlay, and report are written.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// 'iidmjpeg' (quantized DCT features) or 'olbm' (raw block equality).
    #[arg(long, default_value = "iidmjpeg")]
    method: String,
    #[command(flatten)]
    detector: DetectorArgs,
}

#[derive(Args)]
struct SynthesizeCmd {
    /// Output directory for images, masks, and manifests.
    #[arg(long)]
    out_dir: PathBuf,
    /// Forge this image instead of synthesizing base images.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Number of forgeries to synthesize (corpus mode).
    #[arg(long, default_value_t = 20)]
    count: usize,
    #[arg(long, default_value_t = 128)]
    width: usize,
    #[arg(long, default_value_t = 128)]
    height: usize,
    /// Side of the square cloned region.
    #[arg(long, default_value_t = 40)]
    region: usize,
    /// Intensity deltas cycled across the corpus, e.g. "10,-10,20".
    #[arg(long, default_value = "10,-10,20,-20,30,-30")]
    deltas: String,
    /// Minimum shift magnitude between source and destination.
    #[arg(long, default_value_t = 16)]
    min_shift: u32,
    /// Explicit source rectangle "row,col,height,width" (single mode).
    #[arg(long)]
    source_rect: Option<String>,
    /// Explicit destination origin "row,col" (single mode).
    #[arg(long)]
    dest: Option<String>,
    /// Intensity delta for single mode.
    #[arg(long, default_value_t = 0)]
    delta: i32,
    /// Intensity gain for single mode.
    #[arg(long, default_value_t = 1.0)]
    gain: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct DegradeCmd {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// JPEG quality factor in [1, 100].
    #[arg(long)]
    qf: Option<u8>,
    /// Additive white Gaussian noise SNR in dB.
    #[arg(long)]
    snr_db: Option<f64>,
    #[arg(long)]
    blur_size: Option<usize>,
    #[arg(long)]
    blur_sd: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct EvaluateCmd {
    #[arg(long)]
    detected_source: PathBuf,
    #[arg(long)]
    detected_dest: PathBuf,
    #[arg(long)]
    truth_source: PathBuf,
    #[arg(long)]
    truth_dest: PathBuf,
}

#[derive(Args)]
struct SweepCmd {
    /// Corpus directory produced by `synthesize` (manifests + images).
    #[arg(long)]
    corpus: PathBuf,
    /// Grid: 'identity', 'qf=100,83,75', 'snr=10,20,30',
    /// 'blur-sd=0.5,2,5', or 'blur-size=3,7,11'.
    #[arg(long)]
    grid: String,
    /// Report output path.
    #[arg(long)]
    out: PathBuf,
    /// JPEG quality applied before noise/blur grids.
    #[arg(long)]
    base_qf: Option<u8>,
    /// Fixed filter size for 'blur-sd' grids.
    #[arg(long, default_value_t = 3)]
    blur_size: usize,
    /// Fixed standard deviation for 'blur-size' grids.
    #[arg(long, default_value_t = 0.5)]
    blur_sd: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Include wall-clock per-cell timings in the report.
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    detector: DetectorArgs,
}

/// Marker for flag-level mistakes, reported with exit code 1.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for Usage {}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return 1;
        }
    };
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be at least 1");
            return 1;
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: {e}");
            return 2;
        }
    }
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            if e.chain().any(|c| c.is::<Usage>()) {
                eprintln!("error: {e:#}");
                eprintln!("run with --help for flag documentation");
                1
            } else {
                eprintln!("error: {e:#}");
                2
            }
        }
    }
}

fn execute(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::Detect(c) => cmd_detect(c),
        Command::Synthesize(c) => cmd_synthesize(c),
        Command::Degrade(c) => cmd_degrade(c),
        Command::Evaluate(c) => cmd_evaluate(c),
        Command::Sweep(c) => cmd_sweep(c),
    }
}

fn cmd_detect(cmd: DetectCmd) -> anyhow::Result<()> {
    let cfg = cmd.detector.to_config()?;
    let img = RgbImage::load(&cmd.input)
        .with_context(|| format!("reading {}", cmd.input.display()))?;
    let result = match cmd.method.as_str() {
        "iidmjpeg" => detect(&img, &cfg),
        "olbm" => olbm_detect(&img, cfg.block_size, cfg.th1, cfg.th2),
        other => bail!(Usage(format!(
            "unknown method '{other}' (expected 'iidmjpeg' or 'olbm')"
        ))),
    }
    .context("detection failed")?;

    std::fs::create_dir_all(&cmd.out_dir)?;
    result
        .source_mask
        .save_png(cmd.out_dir.join("source_mask.png"))?;
    result.dest_mask.save_png(cmd.out_dir.join("dest_mask.png"))?;
    overlay(&img, &result.combined_mask()).save_png(cmd.out_dir.join("overlay.png"))?;

    let mut report = String::new();
    report.push_str("# detection report\n");
    report.push_str(&format!("method = \"{}\"\n", cmd.method));
    report.push_str(&cfg.to_toml());
    report.push_str(&format!("accepted_classes = {}\n", result.accepted.len()));
    for class in &result.accepted {
        report.push_str(&format!(
            "# shift ({}, {}): {} pairs\n",
            class.shift.d_row,
            class.shift.d_col,
            class.count()
        ));
    }
    let t = &result.timings;
    report.push_str(&format!(
        "# ms: luma {:.2}, features {:.2}, sort {:.2}, pairs {:.2}, classify {:.2}, masks {:.2}, total {:.2}\n",
        t.luma_ms, t.features_ms, t.sort_ms, t.pair_scan_ms, t.classify_ms, t.mask_ms, t.total_ms
    ));
    std::fs::write(cmd.out_dir.join("report.txt"), &report)?;

    match result.dominant() {
        Some(class) => println!(
            "clone evidence: dominant shift ({}, {}) with {} pairs across {} class(es)",
            class.shift.d_row,
            class.shift.d_col,
            class.count(),
            result.accepted.len()
        ),
        None => println!("no clone evidence above thresholds"),
    }
    Ok(())
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> anyhow::Result<Vec<T>> {
    let items: Result<Vec<T>, _> = s.split(',').map(|p| p.trim().parse::<T>()).collect();
    match items {
        Ok(v) if !v.is_empty() => Ok(v),
        _ => bail!(Usage(format!("could not parse {what} list '{s}'"))),
    }
}

fn cmd_synthesize(cmd: SynthesizeCmd) -> anyhow::Result<()> {
    std::fs::create_dir_all(&cmd.out_dir)?;

    if let Some(input) = &cmd.input {
        let (src, dst) = match (&cmd.source_rect, &cmd.dest) {
            (Some(s), Some(d)) => (s, d),
            _ => bail!(Usage(
                "single-image mode needs both --source-rect and --dest".into()
            )),
        };
        let rect: Vec<usize> = parse_list(src, "--source-rect")?;
        let dest: Vec<usize> = parse_list(dst, "--dest")?;
        if rect.len() != 4 || dest.len() != 2 {
            bail!(Usage(
                "--source-rect is 'row,col,height,width' and --dest is 'row,col'".into()
            ));
        }
        let base = RgbImage::load(input)?;
        let spec = ForgerySpec {
            source_row: rect[0],
            source_col: rect[1],
            region_height: rect[2],
            region_width: rect[3],
            dest_row: dest[0],
            dest_col: dest[1],
            intensity_delta: cmd.delta,
            intensity_gain: cmd.gain,
            seed: cmd.seed,
        };
        let (image, gt_source, gt_dest) = degrade::synthesize(&base, &spec)?;
        let entry = ForgedImage {
            id: "forged_000".into(),
            image,
            gt_source,
            gt_dest,
            spec,
        };
        save_corpus_entry(&cmd.out_dir, &entry)?;
        println!("wrote 1 forgery to {}", cmd.out_dir.display());
        return Ok(());
    }

    if cmd.count == 0 {
        bail!(Usage("--count must be at least 1".into()));
    }
    if cmd.region == 0 || cmd.region > cmd.width.min(cmd.height) {
        bail!(Usage("--region must fit inside the image".into()));
    }
    let deltas: Vec<i32> = parse_list(&cmd.deltas, "--deltas")?;
    let corpus = synth_forgery_corpus(
        cmd.count,
        cmd.width,
        cmd.height,
        cmd.region,
        &deltas,
        cmd.min_shift,
        cmd.seed,
    );
    for entry in &corpus {
        save_corpus_entry(&cmd.out_dir, entry)?;
    }
    println!("wrote {} forgeries to {}", corpus.len(), cmd.out_dir.display());
    Ok(())
}

fn cmd_degrade(cmd: DegradeCmd) -> anyhow::Result<()> {
    let spec = DegradeSpec {
        jpeg_qf: cmd.qf,
        awgn_snr_db: cmd.snr_db,
        blur_size: cmd.blur_size,
        blur_sd: cmd.blur_sd,
        seed: cmd.seed,
    };
    spec.validate().map_err(|e| Usage(e.to_string()))?;
    let img = RgbImage::load(&cmd.input)
        .with_context(|| format!("reading {}", cmd.input.display()))?;
    let out = spec.apply(&img)?;
    out.save_png(&cmd.out)?;
    println!("applied {} -> {}", spec.label(), cmd.out.display());
    Ok(())
}

fn cmd_evaluate(cmd: EvaluateCmd) -> anyhow::Result<()> {
    let d1 = BinaryMask::load_png(&cmd.detected_source)?;
    let d2 = BinaryMask::load_png(&cmd.detected_dest)?;
    let r1 = BinaryMask::load_png(&cmd.truth_source)?;
    let r2 = BinaryMask::load_png(&cmd.truth_dest)?;
    let s = score((&d1, &d2), (&r1, &r2)).context("scoring failed")?;
    println!("acc={:.6}", s.acc);
    println!("fp={:.6}", s.fp);
    println!("detected_pixels={}", s.detected_pixels);
    println!("fp_pixels={}", s.false_positive_pixels);
    Ok(())
}

fn parse_grid(cmd: &SweepCmd) -> anyhow::Result<Vec<DegradeSpec>> {
    let text = cmd.grid.trim();
    let specs: Vec<DegradeSpec> = if text == "identity" {
        vec![DegradeSpec::identity()]
    } else if let Some(list) = text.strip_prefix("qf=") {
        parse_list::<u8>(list, "qf")?
            .into_iter()
            .map(DegradeSpec::jpeg)
            .collect()
    } else if let Some(list) = text.strip_prefix("snr=") {
        parse_list::<f64>(list, "snr")?
            .into_iter()
            .map(|snr| DegradeSpec {
                jpeg_qf: cmd.base_qf,
                awgn_snr_db: Some(snr),
                ..DegradeSpec::default()
            })
            .collect()
    } else if let Some(list) = text.strip_prefix("blur-sd=") {
        parse_list::<f64>(list, "blur-sd")?
            .into_iter()
            .map(|sd| DegradeSpec {
                jpeg_qf: cmd.base_qf,
                blur_size: Some(cmd.blur_size),
                blur_sd: Some(sd),
                ..DegradeSpec::default()
            })
            .collect()
    } else if let Some(list) = text.strip_prefix("blur-size=") {
        parse_list::<usize>(list, "blur-size")?
            .into_iter()
            .map(|k| DegradeSpec {
                jpeg_qf: cmd.base_qf,
                blur_size: Some(k),
                blur_sd: Some(cmd.blur_sd),
                ..DegradeSpec::default()
            })
            .collect()
    } else {
        bail!(Usage(format!(
            "unrecognized --grid '{text}' (see --help for accepted forms)"
        )));
    };
    let specs: Vec<DegradeSpec> = specs
        .into_iter()
        .enumerate()
        .map(|(g, s)| s.with_seed(derive_seed(cmd.seed, g as u64)))
        .collect();
    for s in &specs {
        s.validate().map_err(|e| Usage(e.to_string()))?;
    }
    Ok(specs)
}

fn cmd_sweep(cmd: SweepCmd) -> anyhow::Result<()> {
    let cfg = cmd.detector.to_config()?;
    let grid = parse_grid(&cmd)?;
    let corpus = load_corpus(&cmd.corpus)
        .with_context(|| format!("loading corpus {}", cmd.corpus.display()))?;
    if corpus.is_empty() {
        bail!(Usage(format!(
            "no manifests found under {}",
            cmd.corpus.display()
        )));
    }
    let report = sweep(&corpus, &grid, &cfg);
    std::fs::write(&cmd.out, report.to_text(cmd.timing))?;
    for agg in &report.aggregates {
        println!(
            "{}: mean_acc={:.4} mean_fp={:.4} ({} cells, {} failed)",
            agg.degrade_label, agg.mean_acc, agg.mean_fp, agg.cells, agg.failed
        );
    }
    println!("report written to {}", cmd.out.display());
    Ok(())
}
