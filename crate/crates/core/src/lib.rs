//! Neural fractal rendering and dataset generation.
//!
//! A neural fractal is the bounded set of the recurrence `z <- g(z) + c`,
//! `z_0 = 0`, where `g` is a randomly initialized complex-valued MLP. This
//! crate evaluates such networks, renders the escape-time colored image with
//! variance-guided adaptive Monte Carlo sampling, and batches renders into a
//! filtered dataset. Classical Mandelbrot dynamics are provided as a
//! reference for testing.
//!
//! The numerical core (network, dynamics, reference dynamics) is generic over
//! the scalar type; the `*F32` / `*F64` aliases below name the common
//! instantiations. Pixel statistics are always accumulated in `f64`.

pub mod cli;
pub mod coloring;
pub mod complex_net;
pub mod config;
pub mod dataset;
pub mod dynamics;
mod error;
pub mod image_io;
pub mod oracle;
pub mod render;
pub mod sampler;
pub mod scalar;
pub mod seed;
pub mod threshold;

pub use coloring::{escape_color, make_colormap, ColorMap, PaletteStyle, Rgb, Shading};
pub use complex_net::{init_network, ComplexMlp, NetworkConfig};
pub use dataset::{generate_dataset, is_featureless, DatasetManifest, DatasetSpec};
pub use dynamics::{indicator, iterate, Dynamics, EscapeResult, IterationParams};
pub use error::{Error, Result};
pub use oracle::{dense_reference_render, OracleDynamics};
pub use render::{pixel_to_region, render_image, ImageRgb, ImageWindow, RenderConfig, RenderStats};
pub use sampler::{compute_sampling_map, draw_samples, pixel_variance, PixelAccumulator, SamplingMap};
pub use scalar::Scalar;
pub use threshold::{adjust_threshold, ThresholdConfig};

pub use num_complex::Complex;

pub type ComplexF32 = Complex<f32>;
pub type ComplexF64 = Complex<f64>;

pub type ComplexMlpF32 = ComplexMlp<f32>;
pub type ComplexMlpF64 = ComplexMlp<f64>;

pub type EscapeResultF32 = EscapeResult<f32>;
pub type EscapeResultF64 = EscapeResult<f64>;

pub type OracleDynamicsF32 = OracleDynamics<f32>;
pub type OracleDynamicsF64 = OracleDynamics<f64>;
