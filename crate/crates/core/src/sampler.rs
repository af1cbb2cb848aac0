//! Per-pixel sample statistics and variance-guided sample allocation.
//!
//! Each pixel keeps running sums of its sampled colors and of their squares.
//! The squared coefficient of variation (variance over squared mean, averaged
//! over RGB) is box-blurred, thresholded and normalized into a categorical
//! distribution over pixels that decides where the next samples go.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::coloring::Rgb;
use crate::{Error, Result};

/// Channel means below this are treated as zero when forming CV2.
pub const CV2_MEAN_EPSILON: f64 = 1e-6;
/// Upper bound on a guarded (near-zero-mean) CV2 contribution.
pub const CV2_GUARD_CAP: f64 = 1e6;
pub const DEFAULT_BLUR_KERNEL: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PixelAccumulator {
    /// Sum of sampled colors.
    pub mu: Rgb,
    /// Sum of squared sampled colors.
    pub m2: Rgb,
    pub n: u64,
}

impl PixelAccumulator {
    pub fn push(&mut self, color: Rgb) {
        self.mu = self.mu + color;
        self.m2 = self.m2 + color * color;
        self.n += 1;
    }

    pub fn mean(&self) -> Option<Rgb> {
        (self.n > 0).then(|| self.mu * (1.0 / self.n as f64))
    }
}

pub fn accumulate(mut acc: PixelAccumulator, color: Rgb) -> PixelAccumulator {
    acc.push(color);
    acc
}

/// `m2/n - (mu/n)^2` per channel, clamped at 0.
pub fn pixel_variance(acc: &PixelAccumulator) -> Result<Rgb> {
    if acc.n == 0 {
        return Err(Error::UndefinedStatistics { pixel: 0 });
    }
    let n = acc.n as f64;
    Ok(acc.m2.zip(acc.mu, |m2, mu| (m2 / n - (mu / n) * (mu / n)).max(0.0)))
}

/// Variance of the pixel mean, `V / n`. Diagnostic only.
pub fn variance_of_mean(acc: &PixelAccumulator) -> Result<Rgb> {
    let n = acc.n as f64;
    pixel_variance(acc).map(|v| v * (1.0 / n))
}

/// Squared coefficient of variation averaged over the three channels.
pub fn pixel_cv2(acc: &PixelAccumulator) -> Result<f64> {
    let var = pixel_variance(acc)?;
    let n = acc.n as f64;
    let total: f64 = var
        .channels()
        .iter()
        .zip(acc.mu.channels())
        .map(|(&v, mu)| {
            let mean = mu / n;
            if mean < CV2_MEAN_EPSILON {
                (v / (CV2_MEAN_EPSILON * CV2_MEAN_EPSILON)).min(CV2_GUARD_CAP)
            } else {
                v / (mean * mean)
            }
        })
        .sum();
    Ok(total / 3.0)
}

/// Row-major grid of pixel accumulators.
#[derive(Debug, Clone, PartialEq)]
pub struct AccumulatorGrid {
    width: usize,
    height: usize,
    cells: Vec<PixelAccumulator>,
}

impl AccumulatorGrid {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            cells: vec![PixelAccumulator::default(); width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[PixelAccumulator] {
        &self.cells
    }

    pub fn push(&mut self, pixel: usize, color: Rgb) {
        self.cells[pixel].push(color);
    }

    pub fn reset(&mut self) {
        self.cells.fill(PixelAccumulator::default());
    }

    pub fn counts(&self) -> Vec<u64> {
        self.cells.iter().map(|c| c.n).collect()
    }

    pub fn total_samples(&self) -> u64 {
        self.cells.iter().map(|c| c.n).sum()
    }
}

/// Mean filter of odd width `kernel` with clamp-to-edge borders.
pub fn box_blur(values: &[f64], width: usize, height: usize, kernel: usize) -> Vec<f64> {
    assert_eq!(values.len(), width * height);
    assert!(kernel % 2 == 1, "kernel width must be odd");
    if kernel == 1 {
        return values.to_vec();
    }
    let r = (kernel / 2) as isize;
    let clamp = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;

    let mut horizontal = vec![0.0; values.len()];
    for y in 0..height {
        let row = &values[y * width..(y + 1) * width];
        for x in 0..width {
            let s: f64 = (-r..=r).map(|d| row[clamp(x as isize + d, width)]).sum();
            horizontal[y * width + x] = s / kernel as f64;
        }
    }
    let mut out = vec![0.0; values.len()];
    for y in 0..height {
        for x in 0..width {
            let s: f64 = (-r..=r)
                .map(|d| horizontal[clamp(y as isize + d, height) * width + x])
                .sum();
            out[y * width + x] = s / kernel as f64;
        }
    }
    out
}

/// Normalized per-pixel sampling probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingMap {
    width: usize,
    height: usize,
    probabilities: Vec<f64>,
    blurred_cv2: Vec<f64>,
    exhausted: bool,
}

impl SamplingMap {
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// Blurred CV2 before thresholding and normalization.
    pub fn blurred_cv2(&self) -> &[f64] {
        &self.blurred_cv2
    }

    /// True when every pixel fell below the stopping threshold.
    pub fn is_exhausted(&self) -> bool {
        self.exhausted
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }
}

pub fn compute_sampling_map(grid: &AccumulatorGrid, stop_threshold: f64) -> Result<SamplingMap> {
    compute_sampling_map_with(grid, stop_threshold, DEFAULT_BLUR_KERNEL)
}

pub fn compute_sampling_map_with(
    grid: &AccumulatorGrid,
    stop_threshold: f64,
    kernel: usize,
) -> Result<SamplingMap> {
    if kernel.is_multiple_of(2) {
        return Err(Error::Argument(format!("blur kernel must be odd, got {kernel}")));
    }
    let cv2 = grid
        .cells
        .iter()
        .enumerate()
        .map(|(pixel, acc)| {
            pixel_cv2(acc).map_err(|_| Error::UndefinedStatistics { pixel })
        })
        .collect::<Result<Vec<f64>>>()?;
    let blurred_cv2 = box_blur(&cv2, grid.width, grid.height, kernel);

    let mut probabilities: Vec<f64> = blurred_cv2
        .iter()
        .map(|&v| if v < stop_threshold { 0.0 } else { v })
        .collect();
    let total: f64 = probabilities.iter().sum();
    let exhausted = total.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater);
    if exhausted {
        probabilities.fill(0.0);
    } else {
        probabilities.iter_mut().for_each(|p| *p /= total);
    }
    Ok(SamplingMap {
        width: grid.width,
        height: grid.height,
        probabilities,
        blurred_cv2,
        exhausted,
    })
}

/// A pixel and a uniform position inside it, both in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleSite {
    pub pixel: usize,
    pub offset: (f64, f64),
}

/// Draws `n` independent pixels from `map` with uniform intra-pixel offsets.
pub fn draw_samples<R: Rng + ?Sized>(map: &SamplingMap, n: usize, rng: &mut R) -> Result<Vec<SampleSite>> {
    if map.exhausted {
        return Err(Error::ExhaustedMap);
    }
    if n == 0 {
        return Err(Error::Argument("sample count must be at least 1".into()));
    }
    let dist = WeightedIndex::new(&map.probabilities).map_err(|_| Error::ExhaustedMap)?;
    Ok((0..n)
        .map(|_| {
            let pixel = dist.sample(rng);
            let offset = (rng.random::<f64>(), rng.random::<f64>());
            SampleSite { pixel, offset }
        })
        .collect())
}
