//! Batch generation of filtered neural fractal images.
//!
//! Slot `k` of a dataset renders a fresh random network whose seed is derived
//! from `(base_seed, k, retry)`. Renders with too little contrast in every
//! channel are rejected and the slot retries with the next derived seed. The
//! output directory receives `img_NNNNNN.png`, a matching `.json` sidecar per
//! accepted image, and `manifest.json`.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::complex_net::{init_network, ComplexMlp, NetworkConfig};
use crate::config::Precision;
use crate::image_io::{write_json, write_rgb_png};
use crate::render::{render_image, ImageRgb, ImageWindow, RenderConfig, RenderStats};
use crate::seed::{self, Stream};
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSpec {
    pub count: usize,
    pub base_seed: u64,
    /// Images whose largest per-channel standard deviation is below this are
    /// rejected.
    pub filter_std_min: f64,
    pub max_retries_per_slot: usize,
    pub precision: Precision,
    pub network: NetworkConfig,
    pub render: RenderConfig,
    pub window: ImageWindow,
    pub output_dir: PathBuf,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            count: 100,
            base_seed: 0,
            filter_std_min: 0.025,
            max_retries_per_slot: 20,
            precision: Precision::F64,
            network: NetworkConfig::default(),
            render: RenderConfig::default(),
            window: ImageWindow::default(),
            output_dir: PathBuf::from("dataset"),
        }
    }
}

impl DatasetSpec {
    pub fn resolution(&self) -> [usize; 2] {
        self.window.resolution
    }

    pub fn validate(&self) -> Result<()> {
        if self.count < 1 {
            return Err(Error::Config("count must be at least 1".into()));
        }
        if !(self.filter_std_min.is_finite() && self.filter_std_min >= 0.0) {
            return Err(Error::Config(format!(
                "filter_std_min must be finite and non-negative, got {}",
                self.filter_std_min
            )));
        }
        if self.max_retries_per_slot < 1 {
            return Err(Error::Config("max_retries_per_slot must be at least 1".into()));
        }
        if self.max_retries_per_slot >= 1 << 20 {
            return Err(Error::Config("max_retries_per_slot must be below 2^20".into()));
        }
        self.network.validate()?;
        self.render.validate()?;
        self.window.validate()
    }

    /// SHA-256 of everything that affects the images. The output directory is
    /// left out so the same spec written elsewhere hashes the same.
    pub fn digest(&self) -> String {
        let view = DatasetSpec {
            output_dir: PathBuf::new(),
            ..self.clone()
        };
        sha256_hex(&serde_json::to_vec(&view).expect("spec serializes"))
    }
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Population standard deviation of each channel over all pixels.
pub fn channel_std(image: &ImageRgb) -> [f64; 3] {
    let n = image.pixels().len() as f64;
    let mut out = [0.0; 3];
    for (ch, slot) in out.iter_mut().enumerate() {
        let mean = image.pixels().iter().map(|p| p.channels()[ch]).sum::<f64>() / n;
        let var = image
            .pixels()
            .iter()
            .map(|p| {
                let d = p.channels()[ch] - mean;
                d * d
            })
            .sum::<f64>()
            / n;
        *slot = var.sqrt();
    }
    out
}

/// True when every channel's standard deviation is below `std_min`.
pub fn is_featureless(image: &ImageRgb, std_min: f64) -> bool {
    channel_std(image).iter().copied().fold(0.0, f64::max) < std_min
}

/// Seeds used by one render attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttemptSeeds {
    pub network: u64,
    pub render: u64,
}

pub fn attempt_seeds(base_seed: u64, slot: usize, retry: usize) -> AttemptSeeds {
    let key = seed::slot_key(slot, retry);
    AttemptSeeds {
        network: seed::derive(base_seed, Stream::Network, key),
        render: seed::derive(base_seed, Stream::Render, key),
    }
}

pub fn image_stem(slot: usize) -> String {
    format!("img_{slot:06}")
}

/// Per-image metadata written next to the PNG.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub slot: usize,
    pub file: String,
    pub retry_index: usize,
    pub network_seed: u64,
    pub render_seed: u64,
    pub palette_seed: u64,
    pub final_tau: f64,
    pub total_samples: u64,
    pub epochs_run: usize,
    pub max_channel_std: f64,
    pub resolution: [usize; 2],
    pub window: ImageWindow,
    pub network: NetworkConfig,
    pub config_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub slot: usize,
    pub retry_index: usize,
    pub network_seed: u64,
    pub max_channel_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub tool_version: String,
    pub spec_digest: String,
    pub count: usize,
    pub total_renders: usize,
    pub rejection_rate: f64,
    pub images: Vec<ImageRecord>,
    pub rejections: Vec<Rejection>,
}

struct SlotOutcome {
    record: ImageRecord,
    rejections: Vec<Rejection>,
}

/// Renders one attempt of one slot.
pub fn render_attempt(spec: &DatasetSpec, slot: usize, retry: usize) -> Result<(ImageRgb, RenderStats, RenderConfig, NetworkConfig)> {
    let seeds = attempt_seeds(spec.base_seed, slot, retry);
    let network = NetworkConfig {
        seed: seeds.network,
        ..spec.network.clone()
    };
    let render = RenderConfig {
        seed: seeds.render,
        ..spec.render
    };
    let (image, stats) = match spec.precision {
        Precision::F64 => {
            let g: ComplexMlp<f64> = init_network(&network)?;
            render_image(&g, &spec.window, &render)?
        }
        Precision::F32 => {
            let g: ComplexMlp<f32> = init_network(&network)?;
            render_image(&g, &spec.window, &render)?
        }
    };
    Ok((image, stats, render, network))
}

fn run_slot(spec: &DatasetSpec, slot: usize, digest: &str) -> Result<SlotOutcome> {
    let mut rejections = Vec::new();
    for retry in 0..spec.max_retries_per_slot {
        let (image, stats, render, network) = render_attempt(spec, slot, retry)?;
        let max_std = channel_std(&image).into_iter().fold(0.0, f64::max);
        if max_std < spec.filter_std_min {
            log::debug!("slot {slot} retry {retry}: featureless (max std {max_std:.4})");
            rejections.push(Rejection {
                slot,
                retry_index: retry,
                network_seed: network.seed,
                max_channel_std: max_std,
            });
            continue;
        }

        let stem = image_stem(slot);
        let record = ImageRecord {
            slot,
            file: format!("{stem}.png"),
            retry_index: retry,
            network_seed: network.seed,
            render_seed: render.seed,
            palette_seed: render.palette_seed(),
            final_tau: stats.final_tau,
            total_samples: stats.total_samples,
            epochs_run: stats.epochs_run,
            max_channel_std: max_std,
            resolution: spec.resolution(),
            window: spec.window,
            network,
            config_digest: digest.to_owned(),
        };
        write_rgb_png(&spec.output_dir.join(&record.file), &image)?;
        write_json(&spec.output_dir.join(format!("{stem}.json")), &record)?;
        return Ok(SlotOutcome { record, rejections });
    }
    Err(Error::RetryExhausted {
        slot,
        attempts: spec.max_retries_per_slot,
    })
}

/// Generates `spec.count` accepted images on the current rayon pool.
pub fn generate_dataset(spec: &DatasetSpec) -> Result<DatasetManifest> {
    spec.validate()?;
    fs::create_dir_all(&spec.output_dir).map_err(|e| Error::io(&spec.output_dir, e))?;
    let digest = spec.digest();

    let outcomes: Vec<Result<SlotOutcome>> = (0..spec.count)
        .into_par_iter()
        .map(|slot| run_slot(spec, slot, &digest))
        .collect();

    let mut images = Vec::with_capacity(spec.count);
    let mut rejections = Vec::new();
    for outcome in outcomes {
        let outcome = outcome?;
        images.push(outcome.record);
        rejections.extend(outcome.rejections);
    }
    let total_renders = images.len() + rejections.len();
    let manifest = DatasetManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        spec_digest: digest,
        count: spec.count,
        total_renders,
        rejection_rate: rejections.len() as f64 / total_renders as f64,
        images,
        rejections,
    };
    write_json(&manifest_path(&spec.output_dir), &manifest)?;
    Ok(manifest)
}

/// Like [`generate_dataset`] on a dedicated pool of `workers` threads.
/// The output does not depend on `workers`.
pub fn generate_dataset_with_workers(spec: &DatasetSpec, workers: usize) -> Result<DatasetManifest> {
    if workers < 1 {
        return Err(Error::Argument("workers must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| generate_dataset(spec))
}

pub fn manifest_path(dir: &Path) -> PathBuf {
    dir.join(MANIFEST_FILE)
}
