//! Escape-time coloring.
//!
//! Every sample is colored by how many iterations its orbit took to leave the
//! threshold disc, looked up in a random palette. Orbits that never escape,
//! and orbits that escape on the first update, take the last palette entry.

use std::ops::{Add, Mul};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::EscapeResult;
use crate::seed;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Rgb {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

impl Rgb {
    pub const BLACK: Rgb = Rgb::gray(0.0);
    pub const WHITE: Rgb = Rgb::gray(1.0);

    pub const fn new(r: f64, g: f64, b: f64) -> Self {
        Self { r, g, b }
    }

    pub const fn gray(v: f64) -> Self {
        Self { r: v, g: v, b: v }
    }

    pub fn channels(&self) -> [f64; 3] {
        [self.r, self.g, self.b]
    }

    pub fn from_channels([r, g, b]: [f64; 3]) -> Self {
        Self { r, g, b }
    }

    pub fn map(self, f: impl Fn(f64) -> f64) -> Self {
        Self::new(f(self.r), f(self.g), f(self.b))
    }

    pub fn zip(self, other: Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self::new(f(self.r, other.r), f(self.g, other.g), f(self.b, other.b))
    }

    pub fn in_unit_cube(&self) -> bool {
        self.channels().iter().all(|c| (0.0..=1.0).contains(c))
    }
}

impl Add for Rgb {
    type Output = Rgb;
    fn add(self, rhs: Rgb) -> Rgb {
        self.zip(rhs, |a, b| a + b)
    }
}

impl Mul for Rgb {
    type Output = Rgb;
    fn mul(self, rhs: Rgb) -> Rgb {
        self.zip(rhs, |a, b| a * b)
    }
}

impl Mul<f64> for Rgb {
    type Output = Rgb;
    fn mul(self, s: f64) -> Rgb {
        self.map(|a| a * s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PaletteStyle {
    /// Every entry an independent uniform draw from the RGB cube.
    #[default]
    Uniform,
    /// Random anchor colors with linear interpolation between them.
    Smooth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColorMap {
    entries: Vec<Rgb>,
}

impl ColorMap {
    pub fn new(entries: Vec<Rgb>) -> Result<Self> {
        if entries.len() < 2 {
            return Err(Error::Argument(format!(
                "a color map needs at least 2 entries, got {}",
                entries.len()
            )));
        }
        if let Some(bad) = entries.iter().find(|c| !c.in_unit_cube()) {
            return Err(Error::Argument(format!("color {bad:?} is outside [0,1]^3")));
        }
        Ok(Self { entries })
    }

    /// Two entries: escaped black, bounded white.
    pub fn binary() -> Self {
        Self {
            entries: vec![Rgb::BLACK, Rgb::WHITE],
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Rgb] {
        &self.entries
    }
}

/// Random palette of `size` entries, determined by `seed`.
pub fn make_colormap(seed: u64, size: usize) -> Result<ColorMap> {
    make_colormap_with(seed, size, PaletteStyle::Uniform)
}

pub fn make_colormap_with(seed: u64, size: usize, style: PaletteStyle) -> Result<ColorMap> {
    if size < 2 {
        return Err(Error::Argument(format!(
            "a color map needs at least 2 entries, got {size}"
        )));
    }
    let mut rng = seed::rng(seed);
    let mut draw = || Rgb::new(rng.random(), rng.random(), rng.random());
    let entries = match style {
        PaletteStyle::Uniform => (0..size).map(|_| draw()).collect(),
        PaletteStyle::Smooth => {
            let anchors: Vec<Rgb> = (0..(size / 32).clamp(2, 16)).map(|_| draw()).collect();
            let segments = (anchors.len() - 1) as f64;
            (0..size)
                .map(|i| {
                    let pos = i as f64 / (size - 1) as f64 * segments;
                    let k = (pos.floor() as usize).min(anchors.len() - 2);
                    let f = pos - k as f64;
                    anchors[k] * (1.0 - f) + anchors[k + 1] * f
                })
                .map(|c| c.map(|v| v.clamp(0.0, 1.0)))
                .collect()
        }
    };
    ColorMap::new(entries)
}

/// Palette index for an escape count.
///
/// The count is `escape_iter` for escaped orbits and `max_iters` otherwise;
/// a count of 0 is replaced by `max_iters`. The index is
/// `floor(size * count / max_iters)` clamped to `size - 1`.
pub fn palette_index(escaped: bool, escape_iter: usize, max_iters: usize, size: usize) -> usize {
    debug_assert!(max_iters >= 1 && size >= 1);
    let mut count = if escaped { escape_iter } else { max_iters };
    if count == 0 {
        count = max_iters;
    }
    let index = (size as u128 * count as u128 / max_iters.max(1) as u128) as usize;
    index.min(size - 1)
}

pub fn escape_color<T>(result: &EscapeResult<T>, max_iters: usize, cmap: &ColorMap) -> (Rgb, bool) {
    let i = palette_index(result.escaped, result.escape_iter, max_iters, cmap.len());
    (cmap.entries[i], result.escaped)
}

/// How a sample's escape result becomes a color.
#[derive(Debug, Clone, PartialEq)]
pub enum Shading {
    /// Escape-time palette lookup.
    Palette(ColorMap),
    /// Bounded white, escaped black: the plain set-membership image.
    Indicator,
}

impl Shading {
    pub fn shade<T>(&self, result: &EscapeResult<T>, max_iters: usize) -> Rgb {
        match self {
            Shading::Palette(cmap) => escape_color(result, max_iters, cmap).0,
            Shading::Indicator => {
                if result.escaped {
                    Rgb::BLACK
                } else {
                    Rgb::WHITE
                }
            }
        }
    }
}
