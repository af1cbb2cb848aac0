//! Declarative run configuration (TOML).
//!
//! ```toml
//! seed = 7
//! precision = "f64"
//!
//! [dynamics]
//! kind = "network"        # or "mandelbrot", "zero", "polynomial"
//!
//! [network]
//! hidden_layers = 3
//! neurons_per_layer = 6
//!
//! [render]
//! max_epochs = 50
//! [render.iteration]
//! max_iters = 20
//!
//! [window]
//! center = [0.0, 0.0]
//! width = 4.0
//! height = 4.0
//! resolution = [256, 256]
//!
//! [dataset]
//! count = 100
//! base_seed = 0
//! output_dir = "dataset"
//! ```
//!
//! Unknown keys are rejected. The `seed` fields inside `[network]` and
//! `[render]` are overwritten by seeds derived from the top-level `seed`
//! (single renders) or `dataset.base_seed` (datasets).

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::complex_net::{init_network, ComplexMlp, NetworkConfig};
use crate::dataset::{attempt_seeds, DatasetSpec};
use crate::oracle::OracleDynamics;
use crate::render::{render_image, ImageRgb, ImageWindow, RenderConfig, RenderStats};
use crate::scalar::Scalar;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    F32,
    #[default]
    F64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DynamicsChoice {
    #[default]
    Network,
    Mandelbrot,
    Zero,
    Polynomial {
        /// `[re, im]` pairs in ascending degree.
        coefficients: Vec<[f64; 2]>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    pub count: usize,
    pub base_seed: u64,
    pub filter_std_min: f64,
    pub max_retries_per_slot: usize,
    pub output_dir: PathBuf,
}

impl Default for DatasetSection {
    fn default() -> Self {
        let spec = DatasetSpec::default();
        Self {
            count: spec.count,
            base_seed: spec.base_seed,
            filter_std_min: spec.filter_std_min,
            max_retries_per_slot: spec.max_retries_per_slot,
            output_dir: spec.output_dir,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Seed for single renders.
    pub seed: u64,
    pub precision: Precision,
    pub dynamics: DynamicsChoice,
    pub network: NetworkConfig,
    pub render: RenderConfig,
    pub window: ImageWindow,
    pub dataset: DatasetSection,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        self.render.validate()?;
        self.window.validate()?;
        if let DynamicsChoice::Polynomial { coefficients } = &self.dynamics {
            if coefficients.is_empty() {
                return Err(Error::Config("polynomial needs at least one coefficient".into()));
            }
        }
        Ok(())
    }

    /// Network and render seeds derived from `seed`, as slot 0 of a dataset
    /// with `base_seed = seed`.
    pub fn seeded(&self) -> (NetworkConfig, RenderConfig) {
        let seeds = attempt_seeds(self.seed, 0, 0);
        (
            NetworkConfig {
                seed: seeds.network,
                ..self.network.clone()
            },
            RenderConfig {
                seed: seeds.render,
                ..self.render
            },
        )
    }

    pub fn dataset_spec(&self) -> DatasetSpec {
        DatasetSpec {
            count: self.dataset.count,
            base_seed: self.dataset.base_seed,
            filter_std_min: self.dataset.filter_std_min,
            max_retries_per_slot: self.dataset.max_retries_per_slot,
            precision: self.precision,
            network: self.network.clone(),
            render: self.render,
            window: self.window,
            output_dir: self.dataset.output_dir.clone(),
        }
    }

    /// Renders the configured dynamics once.
    pub fn render_once(&self) -> Result<(ImageRgb, RenderStats)> {
        self.validate()?;
        match self.precision {
            Precision::F32 => self.render_typed::<f32>(),
            Precision::F64 => self.render_typed::<f64>(),
        }
    }

    fn render_typed<T: Scalar>(&self) -> Result<(ImageRgb, RenderStats)> {
        let (network, render) = self.seeded();
        let oracle = match &self.dynamics {
            DynamicsChoice::Network => {
                let g: ComplexMlp<T> = init_network(&network)?;
                return render_image(&g, &self.window, &render);
            }
            DynamicsChoice::Mandelbrot => OracleDynamics::MandelbrotSquare,
            DynamicsChoice::Zero => OracleDynamics::Zero,
            DynamicsChoice::Polynomial { coefficients } => OracleDynamics::polynomial(
                coefficients
                    .iter()
                    .map(|&[re, im]| Complex::new(T::from_f64_lossy(re), T::from_f64_lossy(im)))
                    .collect(),
            )?,
        };
        render_image(&oracle, &self.window, &render)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_default() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
    }

    #[test]
    fn nested_values() {
        let cfg = RunConfig::parse(
            r#"
            seed = 3
            precision = "f32"
            [dynamics]
            kind = "polynomial"
            coefficients = [[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]
            [render]
            color_mode = "indicator"
            auto_threshold = false
            [render.iteration]
            tau = 2.0
            max_iters = 64
            [window]
            center = [-0.5, 0.0]
            resolution = [32, 16]
            "#,
        )
        .unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.precision, Precision::F32);
        assert_eq!(cfg.render.iteration.max_iters, 64);
        assert_eq!(cfg.window.resolution, [32, 16]);
        assert!(matches!(cfg.dynamics, DynamicsChoice::Polynomial { .. }));
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::parse("sede = 1").is_err());
        assert!(RunConfig::parse("[render]\nmax_epoch = 3").is_err());
        assert!(RunConfig::parse("[dynamics]\nkind = \"julia\"").is_err());
    }

    #[test]
    fn round_trips_through_toml() {
        let mut cfg = RunConfig {
            dynamics: DynamicsChoice::Mandelbrot,
            ..Default::default()
        };
        cfg.render.samples_per_epoch = Some(10);
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::parse(&text).unwrap(), cfg);
    }
}
