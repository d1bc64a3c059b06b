//! `fuzzquant` command line. JSON goes to stdout, human-readable text to
//! stderr. Exit codes: 0 success, 1 segmentation failure, 2 usage or I/O.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fuzzquant_core::batch::run_directory;
use fuzzquant_core::cfis::{segment_with_artifacts, CfisConfig, ErrorReport};
use fuzzquant_core::indicators::{verify_triplet, CombinedIndicators};
use fuzzquant_core::quantizer::{kmeans_quantize, QuantizeOptions, Signal};
use fuzzquant_core::raster::{load_image, render_overlay, save_image, GrayImage};
use fuzzquant_core::synth::{
    generate_corpus, generate_eye, random_specs, CorpusOptions, SynthEyeSpec,
};
use fuzzquant_core::{Parallelism, PupilOptions};
use serde::Serialize;

const SEGMENTATION_FAILED: u8 = 1;
const USAGE_OR_IO: u8 = 2;

#[derive(Parser)]
#[command(
    name = "fuzzquant",
    version,
    about = "k-means quantization with fuzzy indicators, and circular fuzzy iris segmentation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Quantize a whitespace- or comma-separated signal ("-" reads stdin).
    Quantize {
        file: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        k: u64,
        /// JSON only; suppresses the stderr summary.
        #[arg(long)]
        json: bool,
    },
    /// Segment one eye image.
    Segment {
        image: PathBuf,
        /// Write the annotated PNG here.
        #[arg(long)]
        overlay: Option<PathBuf>,
        /// Write UI/RUI rasters, profiles, labels and indicators here.
        #[arg(long)]
        dump: Option<PathBuf>,
        #[command(flatten)]
        options: SegmentOptions,
    },
    /// Segment every PGM/PNG image in a directory.
    Batch {
        dir: PathBuf,
        /// Worker threads; defaults to the available cores.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        jobs: Option<u64>,
        /// Also write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        options: SegmentOptions,
    },
    /// Generate a synthetic eye corpus with a ground-truth manifest.
    Synth {
        /// Images per noise level.
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Noise sigma; repeat or comma-separate for a sweep.
        #[arg(long, value_delimiter = ',', default_value = "4")]
        noise: Vec<f64>,
        #[arg(long, default_value = "synth")]
        out: PathBuf,
        /// Render a single eye from this spec JSON instead of a random corpus.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SegmentOptions {
    #[arg(long, default_value_t = 512, value_parser = clap::value_parser!(u64).range(2..))]
    rui_width: u64,
    /// Cap on the unwrap radius; defaults to the largest disc that fits.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    max_radius: Option<u64>,
    /// Smallest pupil area as a fraction of the image.
    #[arg(long, default_value_t = 0.0005, value_parser = positive_fraction)]
    min_area: f64,
    /// Smallest area / bounding-box ratio for a pupil candidate.
    #[arg(long, default_value_t = 0.6, value_parser = positive_fraction)]
    disc_likeness: f64,
}

fn positive_fraction(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is not in (0, 1]"))
    }
}

impl SegmentOptions {
    fn config(&self) -> CfisConfig {
        CfisConfig {
            rui_width: self.rui_width as usize,
            max_radius: self.max_radius.map(|r| r as usize),
            pupil: PupilOptions {
                min_area_fraction: self.min_area,
                disc_likeness: self.disc_likeness,
            },
            quantize: QuantizeOptions::default(),
            parallelism: Parallelism::default(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Quantize { file, k, json } => quantize(&file, k as usize, json),
        Command::Segment {
            image,
            overlay,
            dump,
            options,
        } => segment(
            &image,
            overlay.as_deref(),
            dump.as_deref(),
            &options.config(),
        ),
        Command::Batch {
            dir,
            jobs,
            out,
            options,
        } => batch(
            &dir,
            jobs.map(|j| j as usize),
            out.as_deref(),
            &options.config(),
        ),
        Command::Synth {
            n,
            seed,
            noise,
            out,
            spec,
        } => synth(n, seed, noise, &out, spec.as_deref()),
    };
    match outcome {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(USAGE_OR_IO)
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize")
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), String> {
    fs::write(path, contents).map_err(|e| format!("{}: {e}", path.display()))
}

fn parse_signal(text: &str) -> Result<Vec<f64>, String> {
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| format!("not a number: {t:?}")))
        .collect()
}

#[derive(Serialize)]
struct QuantizeOutput {
    centroids: Vec<f64>,
    labels: Vec<usize>,
    sse: f64,
    cci: Vec<usize>,
    cfi: Vec<f64>,
    fib: Vec<f64>,
}

fn quantize(file: &Path, k: usize, json_only: bool) -> Result<ExitCode, String> {
    let text = if file == Path::new("-") {
        let mut s = String::new();
        io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| e.to_string())?;
        s
    } else {
        fs::read_to_string(file).map_err(|e| format!("{}: {e}", file.display()))?
    };
    let signal = Signal::new(parse_signal(&text)?).map_err(|e| e.to_string())?;
    let q = kmeans_quantize(&signal, k, &QuantizeOptions::default()).map_err(|e| e.to_string())?;
    let ind = CombinedIndicators::from_quantization(&signal, &q).map_err(|e| e.to_string())?;
    let report = verify_triplet(&ind, Some(signal.values()));
    if !report.ok {
        return Err(format!(
            "indicator triplet failed verification: {:?}",
            report.violations
        ));
    }
    if !json_only {
        eprintln!(
            "{} samples, k = {}, {} iterations, sse = {}, cluster sizes {:?}",
            signal.len(),
            q.k,
            q.iterations,
            q.sse,
            q.cluster_sizes()
        );
    }
    println!(
        "{}",
        to_json(&QuantizeOutput {
            centroids: q.centroids.clone(),
            labels: q.labels.clone(),
            sse: q.sse,
            cci: ind.cci,
            cfi: ind.cfi,
            fib: ind.fib,
        })
    );
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct FailureOutput {
    error: ErrorReport,
}

fn segment(
    path: &Path,
    overlay: Option<&Path>,
    dump: Option<&Path>,
    config: &CfisConfig,
) -> Result<ExitCode, String> {
    let img = load_image(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let (result, artifacts) = match segment_with_artifacts(&img, config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("segmentation failed: {e}");
            println!("{}", to_json(&FailureOutput { error: (&e).into() }));
            return Ok(ExitCode::from(SEGMENTATION_FAILED));
        }
    };
    eprintln!(
        "pupil ({:.1}, {:.1}) r = {:.1}; limbic row {} of {}; {:.2} ms",
        result.pupil.x,
        result.pupil.y,
        result.pupil.radius,
        result.limbic_row,
        result.unwrap_radius,
        result.timings.total_us as f64 / 1000.0
    );
    if let Some(out) = overlay {
        render_overlay(&img, &result.pupil, result.limbic_row)
            .and_then(|o| o.save_png(out))
            .map_err(|e| format!("{}: {e}", out.display()))?;
    }
    if let Some(dir) = dump {
        fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
        let raster = |name: &str, img: &GrayImage| {
            save_image(img, dir.join(name)).map_err(|e| format!("{name}: {e}"))
        };
        raster("ui.pgm", &artifacts.ui.to_image())?;
        raster("rui.pgm", &artifacts.rui.to_image())?;

        let p = &result.profiles;
        let [bp, bq, br] = &result.bands;
        let mut profiles = String::from("A,B,C\n");
        let mut labels = String::from("P,Q,R\n");
        let mut indicators = String::from("cfi_P,fib_P,cfi_Q,fib_Q,cfi_R,fib_R\n");
        for i in 0..p.len() {
            let _ = writeln!(profiles, "{},{},{}", p.a[i], p.b[i], p.c[i]);
            let _ = writeln!(labels, "{},{},{}", bp.cci[i], bq.cci[i], br.cci[i]);
            let _ = writeln!(
                indicators,
                "{},{},{},{},{},{}",
                bp.cfi[i], bp.fib[i], bq.cfi[i], bq.fib[i], br.cfi[i], br.fib[i]
            );
        }
        write_file(&dir.join("profiles.csv"), profiles)?;
        write_file(&dir.join("labels.csv"), labels)?;
        write_file(&dir.join("indicators.csv"), indicators)?;
    }
    println!("{}", to_json(&result.report()));
    Ok(ExitCode::SUCCESS)
}

fn batch(
    dir: &Path,
    jobs: Option<usize>,
    out: Option<&Path>,
    config: &CfisConfig,
) -> Result<ExitCode, String> {
    let report = run_directory(dir, config, jobs).map_err(|e| e.to_string())?;
    let s = &report.summary;
    let ms = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.2} ms"));
    eprintln!(
        "{}/{} segmented; {} pupil failures, {} limbic failures, {} unreadable; median pupil {}, total {}",
        s.succeeded,
        s.total,
        s.pupil_failures,
        s.limbic_failures,
        s.io_failures,
        ms(s.median_ms_pupil),
        ms(s.median_ms_total)
    );
    let json = to_json(&report);
    if let Some(path) = out {
        write_file(path, &json)?;
    }
    println!("{json}");
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct ManifestEntry<'a> {
    file: String,
    spec: &'a SynthEyeSpec,
}

fn synth(
    n: usize,
    seed: u64,
    noise: Vec<f64>,
    out: &Path,
    spec: Option<&Path>,
) -> Result<ExitCode, String> {
    let specs = match spec {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            let spec: SynthEyeSpec =
                serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
            generate_eye(&spec).map_err(|e| e.to_string())?;
            vec![spec]
        }
        None => {
            if let Some(bad) = noise.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
                return Err(format!(
                    "noise sigma must be a non-negative number, got {bad}"
                ));
            }
            random_specs(&CorpusOptions {
                n,
                seed,
                noise_levels: noise,
                ..CorpusOptions::default()
            })
        }
    };
    let images = generate_corpus(&specs, Parallelism::default()).map_err(|e| e.to_string())?;
    fs::create_dir_all(out).map_err(|e| format!("{}: {e}", out.display()))?;
    let mut manifest = Vec::with_capacity(specs.len());
    for (i, (spec, img)) in specs.iter().zip(&images).enumerate() {
        let file = format!("eye_{i:04}.pgm");
        save_image(img, out.join(&file)).map_err(|e| format!("{file}: {e}"))?;
        manifest.push(ManifestEntry { file, spec });
    }
    write_file(&out.join("manifest.json"), to_json(&manifest))?;
    eprintln!("wrote {} images to {}", images.len(), out.display());
    Ok(ExitCode::SUCCESS)
}
