//! `nfractal` command line.
//!
//! Exit codes: 0 success, 1 argument or configuration error, 2 I/O error,
//! 3 dataset slot rejected on every retry. Summaries go to stdout as one JSON
//! line; logs go to stderr.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::coloring::PaletteStyle;
use crate::config::{DynamicsChoice, Precision, RunConfig};
use crate::dataset::{generate_dataset_with_workers, manifest_path};
use crate::image_io::{write_gray_png, write_json, write_rgb_png};
use crate::render::{ColorMode, RenderStats};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_GENERATION: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "nfractal", version, about = "Neural fractal renderer and dataset generator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render one image to a PNG plus a JSON sidecar.
    Render(RenderArgs),
    /// Generate a filtered batch of images with a manifest.
    Dataset(DatasetArgs),
    /// Render one image and write its variance and sample-count maps.
    Diag(DiagArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OracleKind {
    Mandelbrot,
    Zero,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PrecisionArg {
    F32,
    F64,
}

/// Overrides applied on top of the config file. Flags win.
#[derive(Debug, Args)]
struct Overrides {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Replace the random network with reference dynamics.
    #[arg(long, value_enum)]
    oracle: Option<OracleKind>,
    /// Fixed escape threshold; disables automatic tuning.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// `N` for NxN or `WxH`.
    #[arg(long, value_parser = parse_resolution)]
    resolution: Option<[usize; 2]>,
    /// Window center as `re,im`.
    #[arg(long, value_parser = parse_center, allow_hyphen_values = true)]
    center: Option<[f64; 2]>,
    #[arg(long)]
    width: Option<f64>,
    #[arg(long)]
    height: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    initial_spp: Option<usize>,
    #[arg(long)]
    hidden_layers: Option<usize>,
    #[arg(long)]
    neurons: Option<usize>,
    /// Color bounded points white and escaped points black.
    #[arg(long)]
    indicator: bool,
    /// Interpolated palette instead of independent random colors.
    #[arg(long)]
    smooth_palette: bool,
    #[arg(long, value_enum)]
    precision: Option<PrecisionArg>,
}

#[derive(Debug, Args)]
struct RenderArgs {
    #[command(flatten)]
    overrides: Overrides,
    /// Output PNG. The sidecar goes next to it with a `.json` extension.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct DatasetArgs {
    #[command(flatten)]
    overrides: Overrides,
    #[arg(long)]
    count: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads. Never changes the output.
    #[arg(long, default_value_t = default_workers())]
    workers: usize,
}

#[derive(Debug, Args)]
struct DiagArgs {
    #[command(flatten)]
    overrides: Overrides,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn parse_resolution(s: &str) -> std::result::Result<[usize; 2], String> {
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("{v:?}: {e}"));
    match s.split_once(['x', 'X']) {
        Some((w, h)) => Ok([parse(w)?, parse(h)?]),
        None => {
            let n = parse(s)?;
            Ok([n, n])
        }
    }
}

fn parse_center(s: &str) -> std::result::Result<[f64; 2], String> {
    let (re, im) = s.split_once(',').ok_or("expected re,im")?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    Ok([parse(re)?, parse(im)?])
}

impl Overrides {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
            cfg.dataset.base_seed = seed;
        }
        match self.oracle {
            Some(OracleKind::Mandelbrot) => cfg.dynamics = DynamicsChoice::Mandelbrot,
            Some(OracleKind::Zero) => cfg.dynamics = DynamicsChoice::Zero,
            None => {}
        }
        if let Some(tau) = self.tau {
            cfg.render.iteration.tau = tau;
            cfg.render.auto_threshold = false;
        }
        if let Some(n) = self.max_iters {
            cfg.render.iteration.max_iters = n;
        }
        if let Some(r) = self.resolution {
            cfg.window.resolution = r;
        }
        if let Some(c) = self.center {
            cfg.window.center = c;
        }
        if let Some(w) = self.width {
            cfg.window.width = w;
        }
        if let Some(h) = self.height {
            cfg.window.height = h;
        }
        if let Some(e) = self.epochs {
            cfg.render.max_epochs = e;
        }
        if let Some(n) = self.initial_spp {
            cfg.render.initial_samples_per_pixel = n;
        }
        if let Some(n) = self.hidden_layers {
            cfg.network.hidden_layers = n;
        }
        if let Some(n) = self.neurons {
            cfg.network.neurons_per_layer = n;
        }
        if self.indicator {
            cfg.render.color_mode = ColorMode::Indicator;
        }
        if self.smooth_palette {
            cfg.render.palette_style = PaletteStyle::Smooth;
        }
        match self.precision {
            Some(PrecisionArg::F32) => cfg.precision = Precision::F32,
            Some(PrecisionArg::F64) => cfg.precision = Precision::F64,
            None => {}
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Everything needed to repeat a single render.
#[derive(Serialize)]
struct RenderSidecar<'a> {
    tool_version: &'static str,
    network_seed: u64,
    render_seed: u64,
    palette_seed: u64,
    stats: &'a RenderStats,
    config: &'a RunConfig,
}

fn sidecar<'a>(cfg: &'a RunConfig, stats: &'a RenderStats) -> RenderSidecar<'a> {
    let (network, render) = cfg.seeded();
    RenderSidecar {
        tool_version: env!("CARGO_PKG_VERSION"),
        network_seed: network.seed,
        render_seed: render.seed,
        palette_seed: render.palette_seed(),
        stats,
        config: cfg,
    }
}

fn print_json<S: Serialize>(stdout: &mut dyn Write, value: &S) -> Result<()> {
    let line = serde_json::to_string(value)?;
    writeln!(stdout, "{line}").map_err(|e| Error::io("<stdout>", e))
}

fn cmd_render(args: &RenderArgs, stdout: &mut dyn Write) -> Result<()> {
    let cfg = args.overrides.resolve()?;
    let (image, stats) = cfg.render_once()?;
    write_rgb_png(&args.out, &image)?;
    write_json(&args.out.with_extension("json"), &sidecar(&cfg, &stats))?;
    print_json(stdout, &stats)
}

fn cmd_dataset(args: &DatasetArgs, stdout: &mut dyn Write) -> Result<()> {
    let mut cfg = args.overrides.resolve()?;
    if let Some(count) = args.count {
        if count == 0 {
            return Err(Error::Argument("--count must be at least 1".into()));
        }
        cfg.dataset.count = count;
    }
    if let Some(out) = &args.out {
        cfg.dataset.output_dir = out.clone();
    }
    if !matches!(cfg.dynamics, DynamicsChoice::Network) {
        return Err(Error::Argument("datasets are generated from random networks only".into()));
    }
    let spec = cfg.dataset_spec();
    let manifest = generate_dataset_with_workers(&spec, args.workers)?;
    log::info!(
        "{} images, {} rejected renders",
        manifest.images.len(),
        manifest.rejections.len()
    );
    writeln!(stdout, "{}", manifest_path(&spec.output_dir).display())
        .map_err(|e| Error::io("<stdout>", e))
}

#[derive(Serialize)]
struct DiagSummary<'a> {
    #[serde(flatten)]
    stats: &'a RenderStats,
    count_map_total: u64,
    max_count: u64,
}

fn cmd_diag(args: &DiagArgs, stdout: &mut dyn Write) -> Result<()> {
    let cfg = args.overrides.resolve()?;
    let (image, stats) = cfg.render_once()?;
    let out = &args.out;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let [w, h] = cfg.window.resolution;
    write_rgb_png(&out.join("image.png"), &image)?;
    write_gray_png(&out.join("cv2.png"), &stats.final_cv2, w, h)?;
    let counts: Vec<f64> = stats.sample_counts.iter().map(|&c| c as f64).collect();
    write_gray_png(&out.join("samples.png"), &counts, w, h)?;
    write_json(&out.join("diag.json"), &sidecar(&cfg, &stats))?;
    write_json(&out.join("sample_counts.json"), &stats.sample_counts)?;
    print_json(
        stdout,
        &DiagSummary {
            stats: &stats,
            count_map_total: stats.sample_counts.iter().sum(),
            max_count: stats.sample_counts.iter().copied().max().unwrap_or(0),
        },
    )
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } | Error::Png(_) | Error::Json(_) => EXIT_IO,
        Error::RetryExhausted { .. } => EXIT_GENERATION,
        Error::Config(_)
        | Error::Argument(_)
        | Error::UndefinedStatistics { .. }
        | Error::ExhaustedMap => EXIT_CONFIG,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, S>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Render(a) => cmd_render(a, stdout),
        Command::Dataset(a) => cmd_dataset(a, stdout),
        Command::Diag(a) => cmd_diag(a, stdout),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Path of the sidecar written next to a rendered PNG.
pub fn sidecar_path(png: &Path) -> PathBuf {
    png.with_extension("json")
}
