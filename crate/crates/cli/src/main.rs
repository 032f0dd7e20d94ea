//! `fingerwave`: enroll fingerprint images, verify or identify probes, run
//! the threshold-sweep evaluation and generate synthetic corpora.
//!
//! Results go to stdout, diagnostics to stderr. Exit status is 0 on
//! success (for `verify` and `identify`: a match), 1 when a probe does not
//! match and 2 on any error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use fingerwave_core::dwt::{Extension, Wavelet};
use fingerwave_core::eval::{
    amfauw_baseline, compare_report, dwtfr_reference, parse_thresholds, ClaimAssignment, OperatingPoint,
    REFERENCE_THRESHOLDS,
};
use fingerwave_core::ingest::{load_image, scan_dataset, NamingPattern};
use fingerwave_core::matcher::{Aggregation, Matcher};
use fingerwave_core::pipeline::{enroll_database, extract, Normalization, Template, TemplateStore};
use fingerwave_core::protocol::{run_protocol, RunConfig, ThresholdChoice};
use fingerwave_core::synth::{write_corpus, OrientationField, SynthParams};

#[derive(Parser, Debug)]
#[command(name = "fingerwave", version, about = "Wavelet-domain fingerprint verification toolkit")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Extract templates from a dataset directory into a store.
    Enroll(EnrollArgs),
    /// Check one image against a claimed finger.
    Verify(VerifyArgs),
    /// Rank every enrolled finger by distance to one image.
    Identify(IdentifyArgs),
    /// Run the enroll / probe / threshold-sweep protocol and write reports.
    Evaluate(EvaluateArgs),
    /// Write a synthetic corpus of ridge-pattern images.
    Synth(SynthArgs),
}

/// Run configuration: a TOML file plus flags that override it.
#[derive(Args, Debug, Clone)]
struct ConfigArgs {
    /// TOML run configuration.
    #[arg(long, env = "FINGERWAVE_CONFIG")]
    config: Option<PathBuf>,
    #[arg(long, env = "FINGERWAVE_WAVELET")]
    wavelet: Option<Wavelet>,
    #[arg(long, value_parser = parse_extension, env = "FINGERWAVE_EXTENSION")]
    extension: Option<Extension>,
    #[arg(long, value_parser = parse_normalization, env = "FINGERWAVE_NORMALIZATION")]
    normalization: Option<Normalization>,
    #[arg(long, env = "FINGERWAVE_AGGREGATION")]
    aggregation: Option<Aggregation>,
    /// File-stem pattern with `{finger}` and `{sample}` placeholders.
    #[arg(long, env = "FINGERWAVE_NAMING")]
    naming: Option<String>,
    /// Samples `1..=N` of each finger are enrolled, later ones are probes.
    #[arg(long, env = "FINGERWAVE_ENROLL_SAMPLES")]
    enroll_samples: Option<u32>,
}

fn parse_extension(s: &str) -> Result<Extension, String> {
    match s {
        "symmetric" => Ok(Extension::Symmetric),
        "periodic" => Ok(Extension::Periodic),
        other => Err(format!("unknown extension {other:?} (symmetric | periodic)")),
    }
}

fn parse_normalization(s: &str) -> Result<Normalization, String> {
    match s {
        "none" => Ok(Normalization::None),
        "zscore" => Ok(Normalization::Zscore),
        other => Err(format!("unknown normalization {other:?} (none | zscore)")),
    }
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(w) = self.wavelet {
            cfg.extraction.wavelet = w;
        }
        if let Some(e) = self.extension {
            cfg.extraction.extension = e;
        }
        if let Some(n) = self.normalization {
            cfg.extraction.normalization = n;
        }
        if let Some(a) = self.aggregation {
            cfg.matching.aggregation = a;
        }
        if let Some(n) = &self.naming {
            cfg.protocol.naming = n.clone();
        }
        if let Some(n) = self.enroll_samples {
            cfg.protocol.enroll_samples = n;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
struct EnrollArgs {
    /// Directory of `<finger>_<sample>` images.
    dataset: PathBuf,
    /// Output store directory.
    #[arg(long, env = "FINGERWAVE_STORE")]
    store: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Probe image (PGM or PNG).
    image: PathBuf,
    /// Finger id the probe claims to be.
    #[arg(long)]
    claim: u32,
    #[arg(long, env = "FINGERWAVE_STORE")]
    store: PathBuf,
    /// Accept when the distance is at most this value.
    #[arg(long, env = "FINGERWAVE_THRESHOLD")]
    threshold: f64,
    #[arg(long, env = "FINGERWAVE_AGGREGATION")]
    aggregation: Option<Aggregation>,
}

#[derive(Args, Debug)]
struct IdentifyArgs {
    image: PathBuf,
    #[arg(long, env = "FINGERWAVE_STORE")]
    store: PathBuf,
    /// Flag candidates within this distance; exit 1 if the best is not.
    #[arg(long, env = "FINGERWAVE_THRESHOLD")]
    threshold: Option<f64>,
    /// Number of candidates to print (0 prints all).
    #[arg(long, default_value_t = 5)]
    top: usize,
    #[arg(long, env = "FINGERWAVE_AGGREGATION")]
    aggregation: Option<Aggregation>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Directory with enrollment and genuine probe images.
    dataset: PathBuf,
    /// Directory of impostor images (fingers not in the dataset).
    #[arg(long)]
    impostors: Option<PathBuf>,
    /// `lo:hi:step`, a comma list, or `auto[:N]`. Defaults to the twelve
    /// published thresholds.
    #[arg(long, env = "FINGERWAVE_THRESHOLDS")]
    thresholds: Option<String>,
    /// Report path; `.csv` and `.json` are written next to it.
    #[arg(long, default_value = "report", env = "FINGERWAVE_OUT")]
    out: PathBuf,
    /// Shuffle impostor claims with this seed instead of round-robin.
    #[arg(long, env = "FINGERWAVE_SEED")]
    seed: Option<u64>,
    /// Also print the published rates next to the minimum-error row.
    #[arg(long)]
    compare: bool,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args, Debug)]
struct SynthArgs {
    out_dir: PathBuf,
    #[arg(long, default_value_t = 10)]
    fingers: u32,
    #[arg(long, default_value_t = 8)]
    samples: u32,
    #[arg(long, default_value_t = 1)]
    first_finger: u32,
    #[arg(long, default_value_t = 192)]
    width: usize,
    #[arg(long, default_value_t = 192)]
    height: usize,
    /// Ridge frequency in cycles per pixel.
    #[arg(long, default_value_t = 0.1)]
    frequency: f64,
    /// Standard deviation of the additive Gaussian noise.
    #[arg(long, default_value_t = 12.0)]
    noise: f64,
    #[arg(long, default_value_t = 3)]
    max_shift: i64,
    /// One global ridge angle in radians instead of a random field.
    #[arg(long, allow_hyphen_values = true)]
    angle: Option<f64>,
    #[arg(long, default_value_t = 1, env = "FINGERWAVE_SEED")]
    seed: u64,
    #[arg(long, default_value = "{finger}_{sample}")]
    naming: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();

    let outcome = match cli.command {
        Command::Enroll(a) => enroll(a),
        Command::Verify(a) => verify(a),
        Command::Identify(a) => identify(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Synth(a) => synth(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn progress(done: usize, total: usize) {
    if done == total || done % 50 == 0 {
        log::info!("extracted {done}/{total}");
    }
}

fn enroll(a: EnrollArgs) -> Result<ExitCode> {
    let cfg = a.config.resolve()?;
    let split = scan_dataset(&a.dataset, None, &cfg.protocol.naming()?, cfg.protocol.enroll_samples)?;
    let enrollment = enroll_database(&split.enroll, &cfg.extraction, Some(&progress))?;
    for f in &enrollment.failures {
        eprintln!("warning: {}: {}", f.path.display(), f.error);
    }
    enrollment
        .store
        .save(&a.store)
        .with_context(|| format!("writing store {}", a.store.display()))?;
    println!(
        "enrolled {} templates, {} failures",
        enrollment.store.len(),
        enrollment.failures.len()
    );
    Ok(ExitCode::SUCCESS)
}

/// Loads the store and extracts `image` with the store's own configuration.
fn load_probe(store_dir: &Path, image: &Path) -> Result<(TemplateStore, Template)> {
    let store = TemplateStore::load(store_dir)?;
    let features = extract(&load_image(image)?, store.config())
        .with_context(|| format!("extracting {}", image.display()))?;
    let probe = Template {
        finger_id: 0,
        sample_id: 0,
        features,
        config_hash: store.config_hash().to_string(),
        source_path: Some(image.to_path_buf()),
    };
    Ok((store, probe))
}

fn verify(a: VerifyArgs) -> Result<ExitCode> {
    if !a.threshold.is_finite() {
        bail!("threshold must be finite");
    }
    let (store, probe) = load_probe(&a.store, &a.image)?;
    let matcher = Matcher::new(&store, a.aggregation.unwrap_or_default());
    let d = matcher.verify(&probe, a.claim, a.threshold)?;
    let verdict = if d.matched { "MATCH" } else { "NO-MATCH" };
    println!(
        "{verdict} finger={} distance={} threshold={} nearest_sample={}",
        a.claim, d.distance, d.threshold, d.best_sample_id
    );
    Ok(if d.matched { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn identify(a: IdentifyArgs) -> Result<ExitCode> {
    let (store, probe) = load_probe(&a.store, &a.image)?;
    let matcher = Matcher::new(&store, a.aggregation.unwrap_or_default());
    let threshold = a.threshold.unwrap_or(f64::INFINITY);
    let ranked = matcher.identify(&probe, threshold)?;
    let shown = if a.top == 0 { ranked.len() } else { a.top.min(ranked.len()) };
    println!("rank\tfinger\tdistance\twithin");
    for (i, c) in ranked.iter().take(shown).enumerate() {
        println!("{}\t{}\t{}\t{}", i + 1, c.finger_id, c.distance, c.within_threshold);
    }
    Ok(if ranked[0].within_threshold { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn threshold_choice(spec: Option<&str>) -> Result<ThresholdChoice> {
    Ok(match spec {
        None => ThresholdChoice::Explicit(REFERENCE_THRESHOLDS.to_vec()),
        Some("auto") => ThresholdChoice::Auto(101),
        Some(s) if s.starts_with("auto:") => {
            let n: usize = s[5..].parse().with_context(|| format!("bad threshold spec {s:?}"))?;
            if n < 2 {
                bail!("auto threshold count must be at least 2");
            }
            ThresholdChoice::Auto(n)
        }
        Some(s) => ThresholdChoice::Explicit(parse_thresholds(s)?),
    })
}

fn evaluate(a: EvaluateArgs) -> Result<ExitCode> {
    let mut cfg = a.config.resolve()?;
    if let Some(seed) = a.seed {
        cfg.protocol.impostor_claims = ClaimAssignment::Seeded(seed);
    }
    let thresholds = threshold_choice(a.thresholds.as_deref())?;
    let split = scan_dataset(
        &a.dataset,
        a.impostors.as_deref(),
        &cfg.protocol.naming()?,
        cfg.protocol.enroll_samples,
    )?;
    if split.genuine_test.is_empty() {
        bail!(
            "{} has no genuine probes (no sample ids above {})",
            a.dataset.display(),
            cfg.protocol.enroll_samples
        );
    }
    let run = run_protocol(&split, &cfg, &thresholds, Some(&progress))?;
    for f in &run.failures {
        eprintln!("warning: {}: {}", f.path.display(), f.error);
    }
    run.report.write(&a.out)?;
    print!("{}", run.report.to_table());
    println!("{}", run.report.eer_line());
    if a.compare {
        if let Some(table) = compare_report(
            &run.report,
            OperatingPoint::MinTotalError,
            &[amfauw_baseline(), dwtfr_reference()],
        ) {
            print!("{}", table.to_text());
        }
    }
    eprintln!(
        "wrote {} and {}",
        a.out.with_extension("csv").display(),
        a.out.with_extension("json").display()
    );
    Ok(ExitCode::SUCCESS)
}

fn synth(a: SynthArgs) -> Result<ExitCode> {
    if a.fingers == 0 || a.samples == 0 {
        bail!("--fingers and --samples must be at least 1");
    }
    let params = SynthParams {
        width: a.width,
        height: a.height,
        ridge_frequency: a.frequency,
        orientation_field: a.angle.map_or(OrientationField::Random, OrientationField::Global),
        noise_sigma: a.noise,
        max_shift: a.max_shift,
        seed: a.seed,
    };
    let last = a
        .first_finger
        .checked_add(a.fingers - 1)
        .context("finger ids overflow")?;
    let naming = NamingPattern::parse(&a.naming)?;
    let paths = write_corpus(&a.out_dir, &params, a.first_finger..=last, a.samples, &naming)?;
    println!("wrote {} images to {}", paths.len(), a.out_dir.display());
    Ok(ExitCode::SUCCESS)
}
