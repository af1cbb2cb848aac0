//! Full image render: threshold calibration, uniform passes, adaptive passes.

use num_complex::Complex;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coloring::{make_colormap_with, ColorMap, PaletteStyle, Rgb, Shading};
use crate::dynamics::{iterate, Dynamics, IterationParams};
use crate::sampler::{
    compute_sampling_map_with, draw_samples, AccumulatorGrid, SampleSite, SamplingMap,
    DEFAULT_BLUR_KERNEL,
};
use crate::scalar::Scalar;
use crate::seed::{self, Stream};
use crate::threshold::{adjust_threshold, sanitize_magnitude, ThresholdConfig};
use crate::{Error, Result};

/// Rectangle of the complex plane mapped onto the image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImageWindow {
    /// `[re, im]` of the window center.
    pub center: [f64; 2],
    /// Extent along the real axis.
    pub width: f64,
    /// Extent along the imaginary axis.
    pub height: f64,
    /// `[pixels_x, pixels_y]`.
    pub resolution: [usize; 2],
}

impl Default for ImageWindow {
    fn default() -> Self {
        Self {
            center: [0.0, 0.0],
            width: 4.0,
            height: 4.0,
            resolution: [256, 256],
        }
    }
}

impl ImageWindow {
    pub fn new(center: [f64; 2], width: f64, height: f64, resolution: [usize; 2]) -> Result<Self> {
        let w = Self {
            center,
            width,
            height,
            resolution,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width.is_finite() && self.width > 0.0 && self.height.is_finite() && self.height > 0.0) {
            return Err(Error::Config(format!(
                "window extents must be positive, got {} x {}",
                self.width, self.height
            )));
        }
        if !(self.center[0].is_finite() && self.center[1].is_finite()) {
            return Err(Error::Config("window center must be finite".into()));
        }
        if self.resolution[0] < 1 || self.resolution[1] < 1 {
            return Err(Error::Config(format!(
                "resolution must be at least 1x1, got {:?}",
                self.resolution
            )));
        }
        Ok(())
    }

    pub fn pixel_count(&self) -> usize {
        self.resolution[0] * self.resolution[1]
    }

    fn left(&self) -> f64 {
        self.center[0] - self.width / 2.0
    }

    fn top(&self) -> f64 {
        self.center[1] + self.height / 2.0
    }

    /// Point at offset `(u, v)` in `[0,1)^2` inside pixel `index`.
    pub(crate) fn point_in(&self, index: usize, (u, v): (f64, f64)) -> (f64, f64) {
        let [nx, ny] = self.resolution;
        let (x, y) = (index % nx, index / nx);
        let re = self.left() + (x as f64 + u) * (self.width / nx as f64);
        let im = self.top() - (y as f64 + v) * (self.height / ny as f64);
        (re, im)
    }
}

/// Axis-aligned rectangle of the complex plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

/// Region covered by pixel `(x, y)`. Pixel `(0, 0)` is the top-left corner,
/// i.e. smallest real part and largest imaginary part.
pub fn pixel_to_region(window: &ImageWindow, (x, y): (usize, usize)) -> Result<Region> {
    let [nx, ny] = window.resolution;
    if x >= nx || y >= ny {
        return Err(Error::Argument(format!(
            "pixel ({x}, {y}) outside {nx}x{ny} image"
        )));
    }
    let dx = window.width / nx as f64;
    let dy = window.height / ny as f64;
    Ok(Region {
        re_min: window.left() + x as f64 * dx,
        re_max: window.left() + (x + 1) as f64 * dx,
        im_max: window.top() - y as f64 * dy,
        im_min: window.top() - (y + 1) as f64 * dy,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColorMode {
    /// Random escape-time palette.
    #[default]
    EscapeTime,
    /// Bounded white, escaped black.
    Indicator,
}

/// Orbit magnitude the threshold calibration is run on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationStatistic {
    /// Largest `|z_n|` along the orbit: the quantity the escape test compares
    /// with tau, so the chosen tau bounds the stated fraction of orbits.
    #[default]
    OrbitMax,
    /// `|z|` after the last iteration.
    Final,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderConfig {
    pub iteration: IterationParams,
    pub threshold: ThresholdConfig,
    /// Pick tau from a calibration pass. When off, `iteration.tau` is used.
    pub auto_threshold: bool,
    pub calibration_statistic: CalibrationStatistic,
    /// Adaptive passes; 0 renders with the uniform passes only.
    pub max_epochs: usize,
    pub initial_samples_per_pixel: usize,
    /// Samples drawn per adaptive pass. Defaults to the pixel count.
    pub samples_per_epoch: Option<usize>,
    /// Pixels whose blurred CV2 falls below this get no further samples.
    pub stop_threshold: f64,
    pub blur_kernel: usize,
    pub colormap_size: usize,
    pub palette_style: PaletteStyle,
    pub color_mode: ColorMode,
    pub seed: u64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            iteration: IterationParams::default(),
            threshold: ThresholdConfig::default(),
            auto_threshold: true,
            calibration_statistic: CalibrationStatistic::OrbitMax,
            max_epochs: 50,
            initial_samples_per_pixel: 4,
            samples_per_epoch: None,
            stop_threshold: 1e-4,
            blur_kernel: DEFAULT_BLUR_KERNEL,
            colormap_size: 256,
            palette_style: PaletteStyle::Uniform,
            color_mode: ColorMode::EscapeTime,
            seed: 0,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<()> {
        self.iteration.validate()?;
        self.threshold.validate()?;
        if self.initial_samples_per_pixel < 1 {
            return Err(Error::Config("initial_samples_per_pixel must be at least 1".into()));
        }
        if self.samples_per_epoch == Some(0) {
            return Err(Error::Config("samples_per_epoch must be at least 1".into()));
        }
        if !(self.stop_threshold.is_finite() && self.stop_threshold >= 0.0) {
            return Err(Error::Config(format!(
                "stop_threshold must be finite and non-negative, got {}",
                self.stop_threshold
            )));
        }
        if self.blur_kernel.is_multiple_of(2) {
            return Err(Error::Config(format!("blur_kernel must be odd, got {}", self.blur_kernel)));
        }
        if self.colormap_size < 2 {
            return Err(Error::Config("colormap_size must be at least 2".into()));
        }
        Ok(())
    }

    pub fn palette_seed(&self) -> u64 {
        seed::derive(self.seed, Stream::Palette, 0)
    }

    pub fn shading(&self) -> Result<Shading> {
        Ok(match self.color_mode {
            ColorMode::EscapeTime => Shading::Palette(self.palette()?),
            ColorMode::Indicator => Shading::Indicator,
        })
    }

    pub fn palette(&self) -> Result<ColorMap> {
        make_colormap_with(self.palette_seed(), self.colormap_size, self.palette_style)
    }
}

/// Magnitude statistic of the free orbit of `c` over `max_iters + 1` updates
/// (the update budget of [`iterate`]). Stops at the first non-finite value.
pub fn orbit_magnitude<T: Scalar, D: Dynamics<T> + ?Sized>(
    g: &D,
    c: Complex<T>,
    max_iters: usize,
    statistic: CalibrationStatistic,
) -> f64 {
    let mut z = Complex::new(T::zero(), T::zero());
    let mut peak = 0.0f64;
    for _ in 0..=max_iters {
        z = g.apply(z) + c;
        let m = z.norm().to_f64_lossy();
        if !m.is_finite() {
            return f64::INFINITY;
        }
        peak = peak.max(m);
    }
    match statistic {
        CalibrationStatistic::OrbitMax => peak,
        CalibrationStatistic::Final => z.norm().to_f64_lossy(),
    }
}

/// Seed of the random stream for pass `index` of a render seeded `seed`.
pub fn pass_seed(seed: u64, index: u64) -> u64 {
    seed::derive(seed, Stream::Pass, index)
}

/// Row-major RGB image with channels in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRgb {
    width: usize,
    height: usize,
    pixels: Vec<Rgb>,
}

impl ImageRgb {
    pub fn new(width: usize, height: usize, pixels: Vec<Rgb>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::Argument(format!(
                "{} pixels do not fill a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels: pixels.into_iter().map(|p| p.map(|c| c.clamp(0.0, 1.0))).collect(),
        })
    }

    pub fn filled(width: usize, height: usize, color: Rgb) -> Self {
        Self {
            width,
            height,
            pixels: vec![color.map(|c| c.clamp(0.0, 1.0)); width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> Rgb {
        self.pixels[y * self.width + x]
    }

    /// Interleaved 8-bit RGB, `round(255 * c)`.
    pub fn to_rgb8(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .flat_map(|p| p.channels())
            .map(|c| (c.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RenderStats {
    pub final_tau: f64,
    /// Samples accumulated into the image.
    pub total_samples: u64,
    /// Samples spent on threshold calibration and then discarded.
    pub calibration_samples: u64,
    pub initial_passes: usize,
    pub epochs_run: usize,
    /// The sampling map ran dry before `max_epochs`.
    pub exhausted: bool,
    pub resolution: [usize; 2],
    #[serde(skip)]
    pub sample_counts: Vec<u64>,
    /// Blurred CV2 of the final accumulators.
    #[serde(skip)]
    pub final_cv2: Vec<f64>,
}

/// Step-by-step renderer. [`render_image`] drives it through the whole
/// schedule; tests and diagnostics can drive it pass by pass.
pub struct Renderer<'a, T: Scalar, D: Dynamics<T> + ?Sized> {
    g: &'a D,
    window: ImageWindow,
    config: RenderConfig,
    shading: Shading,
    params: IterationParams,
    grid: AccumulatorGrid,
    next_pass: u64,
    calibration_samples: u64,
    initial_passes: usize,
    epochs_run: usize,
    exhausted: bool,
    _scalar: std::marker::PhantomData<T>,
}

impl<'a, T: Scalar, D: Dynamics<T> + ?Sized> Renderer<'a, T, D> {
    pub fn new(g: &'a D, window: ImageWindow, config: RenderConfig) -> Result<Self> {
        window.validate()?;
        config.validate()?;
        Ok(Self {
            g,
            window,
            shading: config.shading()?,
            params: config.iteration,
            grid: AccumulatorGrid::new(window.resolution[0], window.resolution[1]),
            config,
            next_pass: 0,
            calibration_samples: 0,
            initial_passes: 0,
            epochs_run: 0,
            exhausted: false,
            _scalar: std::marker::PhantomData,
        })
    }

    pub fn tau(&self) -> f64 {
        self.params.tau
    }

    pub fn grid(&self) -> &AccumulatorGrid {
        &self.grid
    }

    pub fn is_exhausted(&self) -> bool {
        self.exhausted
    }

    fn pass_rng(&mut self) -> rand_chacha::ChaCha8Rng {
        let rng = seed::rng(pass_seed(self.config.seed, self.next_pass));
        self.next_pass += 1;
        rng
    }

    fn stratified_sites(&mut self) -> Vec<SampleSite> {
        let mut rng = self.pass_rng();
        (0..self.window.pixel_count())
            .map(|pixel| SampleSite {
                pixel,
                offset: (rng.random::<f64>(), rng.random::<f64>()),
            })
            .collect()
    }

    fn coordinate(&self, site: &SampleSite) -> Complex<T> {
        let (re, im) = self.window.point_in(site.pixel, site.offset);
        Complex::new(T::from_f64_lossy(re), T::from_f64_lossy(im))
    }

    fn shade_and_accumulate(&mut self, sites: &[SampleSite]) {
        let colors: Vec<Rgb> = sites
            .par_iter()
            .with_min_len(256)
            .map(|s| {
                let r = iterate(self.g, self.coordinate(s), &self.params);
                self.shading.shade(&r, self.params.max_iters)
            })
            .collect();
        for (site, color) in sites.iter().zip(colors) {
            self.grid.push(site.pixel, color);
        }
    }

    /// One stratified pass with no escape test; sets tau from the orbit
    /// magnitudes. The pass contributes nothing to the image.
    pub fn calibrate(&mut self) -> Result<f64> {
        let sites = self.stratified_sites();
        let max_iters = self.params.max_iters;
        let statistic = self.config.calibration_statistic;
        let magnitudes: Vec<f64> = sites
            .par_iter()
            .with_min_len(256)
            .map(|s| {
                let m = orbit_magnitude(self.g, self.coordinate(s), max_iters, statistic);
                sanitize_magnitude(m)
            })
            .collect();
        let tau = adjust_threshold(&magnitudes, &self.config.threshold)?;
        self.params.tau = tau;
        self.calibration_samples += sites.len() as u64;
        self.grid.reset();
        log::debug!("calibrated tau = {tau}");
        Ok(tau)
    }

    /// One sample at a uniform position inside every pixel.
    pub fn uniform_pass(&mut self) {
        let sites = self.stratified_sites();
        self.shade_and_accumulate(&sites);
        self.initial_passes += 1;
    }

    pub fn sampling_map(&self) -> Result<SamplingMap> {
        compute_sampling_map_with(&self.grid, self.config.stop_threshold, self.config.blur_kernel)
    }

    /// One variance-guided pass. Returns `false` without sampling when the
    /// map is exhausted.
    pub fn adaptive_epoch(&mut self) -> Result<bool> {
        let map = self.sampling_map()?;
        if map.is_exhausted() {
            self.exhausted = true;
            return Ok(false);
        }
        let n = self.config.samples_per_epoch.unwrap_or(self.window.pixel_count());
        let mut rng = self.pass_rng();
        let sites = draw_samples(&map, n, &mut rng)?;
        self.shade_and_accumulate(&sites);
        self.epochs_run += 1;
        Ok(true)
    }

    /// Runs the configured schedule from the current state.
    pub fn run(&mut self) -> Result<()> {
        if self.config.auto_threshold {
            self.calibrate()?;
        }
        for _ in 0..self.config.initial_samples_per_pixel {
            self.uniform_pass();
        }
        for _ in 0..self.config.max_epochs {
            if !self.adaptive_epoch()? {
                break;
            }
        }
        Ok(())
    }

    pub fn image(&self) -> ImageRgb {
        let pixels = self
            .grid
            .cells()
            .iter()
            .map(|acc| acc.mean().unwrap_or_default().map(|c| c.clamp(0.0, 1.0)))
            .collect();
        ImageRgb {
            width: self.window.resolution[0],
            height: self.window.resolution[1],
            pixels,
        }
    }

    pub fn stats(&self) -> RenderStats {
        let final_cv2 = self
            .sampling_map()
            .map(|m| m.blurred_cv2().to_vec())
            .unwrap_or_default();
        RenderStats {
            final_tau: self.params.tau,
            total_samples: self.grid.total_samples(),
            calibration_samples: self.calibration_samples,
            initial_passes: self.initial_passes,
            epochs_run: self.epochs_run,
            exhausted: self.exhausted,
            resolution: self.window.resolution,
            sample_counts: self.grid.counts(),
            final_cv2,
        }
    }
}

/// Renders `g` over `window`.
///
/// With `auto_threshold`, a calibration pass picks tau and is discarded. Then
/// `initial_samples_per_pixel` stratified passes run, followed by up to
/// `max_epochs` variance-guided passes; an exhausted sampling map ends the
/// render early. The image is the per-pixel mean color.
pub fn render_image<T: Scalar, D: Dynamics<T> + ?Sized>(
    g: &D,
    window: &ImageWindow,
    config: &RenderConfig,
) -> Result<(ImageRgb, RenderStats)> {
    let mut renderer = Renderer::new(g, *window, *config)?;
    renderer.run()?;
    Ok((renderer.image(), renderer.stats()))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Zero;
    impl Dynamics<f64> for Zero {
        fn apply(&self, _: Complex<f64>) -> Complex<f64> {
            Complex::new(0.0, 0.0)
        }
    }

    #[test]
    fn single_pixel_region_is_window() {
        let w = ImageWindow::new([0.5, -1.0], 3.0, 2.0, [1, 1]).unwrap();
        let r = pixel_to_region(&w, (0, 0)).unwrap();
        assert_eq!(
            r,
            Region {
                re_min: -1.0,
                re_max: 2.0,
                im_min: -2.0,
                im_max: 0.0
            }
        );
    }

    #[test]
    fn two_by_two_top_left() {
        let w = ImageWindow::new([0.0, 0.0], 2.0, 2.0, [2, 2]).unwrap();
        let r = pixel_to_region(&w, (0, 0)).unwrap();
        assert_eq!((r.re_min, r.re_max, r.im_min, r.im_max), (-1.0, 0.0, 0.0, 1.0));
        let r = pixel_to_region(&w, (1, 1)).unwrap();
        assert_eq!((r.re_min, r.re_max, r.im_min, r.im_max), (0.0, 1.0, -1.0, 0.0));
    }

    #[test]
    fn neighbours_share_edges() {
        let w = ImageWindow::new([0.3, 0.1], 3.7, 1.3, [7, 5]).unwrap();
        for y in 0..5 {
            for x in 0..7 {
                let r = pixel_to_region(&w, (x, y)).unwrap();
                if x + 1 < 7 {
                    let right = pixel_to_region(&w, (x + 1, y)).unwrap();
                    assert_eq!(r.re_max, right.re_min);
                    assert_eq!((r.im_min, r.im_max), (right.im_min, right.im_max));
                }
                if y + 1 < 5 {
                    let below = pixel_to_region(&w, (x, y + 1)).unwrap();
                    assert_eq!(r.im_min, below.im_max);
                }
            }
        }
        let last = pixel_to_region(&w, (6, 4)).unwrap();
        assert!((last.re_max - (0.3 + 3.7 / 2.0)).abs() < 1e-12);
        assert!((last.im_min - (0.1 - 1.3 / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_pixel() {
        let w = ImageWindow::new([0.0, 0.0], 2.0, 2.0, [2, 2]).unwrap();
        assert!(matches!(pixel_to_region(&w, (2, 0)), Err(Error::Argument(_))));
    }

    #[test]
    fn sample_points_stay_in_their_pixel() {
        let w = ImageWindow::new([-0.5, 0.2], 3.0, 2.0, [6, 4]).unwrap();
        for idx in 0..24 {
            let r = pixel_to_region(&w, (idx % 6, idx / 6)).unwrap();
            for off in [(0.0, 0.0), (0.5, 0.5), (0.999, 0.001)] {
                let (re, im) = w.point_in(idx, off);
                assert!(re >= r.re_min - 1e-12 && re <= r.re_max + 1e-12);
                assert!(im >= r.im_min - 1e-12 && im <= r.im_max + 1e-12);
            }
        }
    }

    #[test]
    fn invalid_window_and_config() {
        assert!(ImageWindow::new([0.0, 0.0], 0.0, 1.0, [4, 4]).is_err());
        assert!(ImageWindow::new([0.0, 0.0], 1.0, 1.0, [0, 4]).is_err());
        let bad = [
            RenderConfig { initial_samples_per_pixel: 0, ..Default::default() },
            RenderConfig { samples_per_epoch: Some(0), ..Default::default() },
            RenderConfig { blur_kernel: 4, ..Default::default() },
            RenderConfig { colormap_size: 1, ..Default::default() },
            RenderConfig { stop_threshold: -1.0, ..Default::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err());
        }
    }

    #[test]
    fn zero_dynamics_render_flat_and_exhaust() {
        let window = ImageWindow::new([0.0, 0.0], 4.0, 4.0, [16, 16]).unwrap();
        let cfg = RenderConfig { colormap_size: 32, ..Default::default() };
        let (img, stats) = render_image(&Zero, &window, &cfg).unwrap();
        let bounded = cfg.palette().unwrap().entries()[31];
        assert!(img.pixels().iter().all(|&p| p == bounded));
        assert!(stats.exhausted);
        assert_eq!(stats.epochs_run, 0);
        assert_eq!(stats.total_samples, 4 * 256);
        assert_eq!(stats.calibration_samples, 256);
    }

    #[test]
    fn rgb8_rounding() {
        let img = ImageRgb::new(2, 1, vec![Rgb::new(0.5, 1.0, 0.0), Rgb::gray(2.0 / 255.0 - 1e-9)]).unwrap();
        assert_eq!(img.to_rgb8(), vec![128, 255, 0, 2, 2, 2]);
    }
}
