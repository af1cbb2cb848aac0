//! Reference dynamics and brute-force reference renders.
//!
//! Nothing here touches the MLP evaluator, so agreement between the two is
//! evidence rather than tautology.

use num_complex::Complex;
use num_traits::Zero;
use rand::Rng;
use rayon::prelude::*;

use crate::coloring::{Rgb, Shading};
use crate::dynamics::{iterate, Dynamics, IterationParams};
use crate::render::{pass_seed, ImageRgb, ImageWindow};
use crate::sampler::AccumulatorGrid;
use crate::scalar::Scalar;
use crate::seed;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum OracleDynamics<T> {
    /// `g(z) = z^2`, the Mandelbrot map.
    MandelbrotSquare,
    /// `g(z) = 0`.
    Zero,
    /// `g(z) = sum_k a_k z^k`, coefficients in ascending degree.
    Polynomial(Vec<Complex<T>>),
}

impl<T: Scalar> OracleDynamics<T> {
    pub fn polynomial(coefficients: Vec<Complex<T>>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::Config("polynomial needs at least one coefficient".into()));
        }
        Ok(Self::Polynomial(coefficients))
    }
}

pub fn oracle_g<T: Scalar>(dynamics: &OracleDynamics<T>, z: Complex<T>) -> Complex<T> {
    match dynamics {
        OracleDynamics::MandelbrotSquare => Complex::new(z.re * z.re - z.im * z.im, (z.re + z.re) * z.im),
        OracleDynamics::Zero => Complex::zero(),
        OracleDynamics::Polynomial(coeffs) => coeffs
            .iter()
            .rev()
            .fold(Complex::zero(), |acc, &a| acc * z + a),
    }
}

impl<T: Scalar> Dynamics<T> for OracleDynamics<T> {
    #[inline]
    fn apply(&self, z: Complex<T>) -> Complex<T> {
        oracle_g(self, z)
    }
}

/// Scalar Mandelbrot membership with the same update budget as
/// [`iterate`] (`max_iters + 1` updates, escape on `|z| > tau`).
///
/// Also returns the smallest `| |z| - tau |` seen along the orbit, so callers
/// can skip points whose classification is within rounding of the boundary.
pub fn mandelbrot_membership(c_re: f64, c_im: f64, tau: f64, max_iters: usize) -> (bool, f64) {
    let (mut x, mut y) = (0.0f64, 0.0f64);
    let mut margin = f64::INFINITY;
    for _ in 0..=max_iters {
        let xt = x * x - y * y + c_re;
        y = 2.0 * x * y + c_im;
        x = xt;
        let r = (x * x + y * y).sqrt();
        margin = margin.min((r - tau).abs());
        if r > tau {
            return (false, margin);
        }
    }
    (true, margin)
}

/// Stratified uniform sampling of `window`: pass `k` puts one sample at a
/// uniform position in every pixel using the stream `pass_seed(seed, k)`.
/// No threshold tuning, no adaptivity.
pub fn dense_reference_grid<T: Scalar, D: Dynamics<T> + ?Sized>(
    dynamics: &D,
    window: &ImageWindow,
    iteration: &IterationParams,
    shading: &Shading,
    samples_per_pixel: usize,
    seed: u64,
) -> Result<AccumulatorGrid> {
    window.validate()?;
    iteration.validate()?;
    if samples_per_pixel < 1 {
        return Err(Error::Argument("samples_per_pixel must be at least 1".into()));
    }
    let [nx, ny] = window.resolution;
    let mut grid = AccumulatorGrid::new(nx, ny);
    for pass in 0..samples_per_pixel as u64 {
        let mut rng = seed::rng(pass_seed(seed, pass));
        let offsets: Vec<(f64, f64)> = (0..nx * ny)
            .map(|_| (rng.random::<f64>(), rng.random::<f64>()))
            .collect();
        let colors: Vec<Rgb> = offsets
            .par_iter()
            .enumerate()
            .map(|(pixel, &off)| {
                let (re, im) = window.point_in(pixel, off);
                let c = Complex::new(T::from_f64_lossy(re), T::from_f64_lossy(im));
                shading.shade(&iterate(dynamics, c, iteration), iteration.max_iters)
            })
            .collect();
        for (pixel, color) in colors.into_iter().enumerate() {
            grid.push(pixel, color);
        }
    }
    Ok(grid)
}

pub fn dense_reference_render<T: Scalar, D: Dynamics<T> + ?Sized>(
    dynamics: &D,
    window: &ImageWindow,
    iteration: &IterationParams,
    shading: &Shading,
    samples_per_pixel: usize,
    seed: u64,
) -> Result<ImageRgb> {
    let grid = dense_reference_grid(dynamics, window, iteration, shading, samples_per_pixel, seed)?;
    let pixels = grid
        .cells()
        .iter()
        .map(|a| a.mean().unwrap_or_default())
        .collect();
    ImageRgb::new(grid.width(), grid.height(), pixels)
}
