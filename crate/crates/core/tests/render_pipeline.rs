use neural_fractal::oracle::{dense_reference_grid, mandelbrot_membership};
use neural_fractal::render::{ColorMode, Renderer};
use neural_fractal::{
    dense_reference_render, init_network, render_image, ComplexMlpF64, ImageWindow, IterationParams,
    NetworkConfig, OracleDynamicsF64, RenderConfig, Shading,
};

fn mandelbrot_window(n: usize) -> ImageWindow {
    ImageWindow::new([-0.5, 0.0], 3.0, 3.0, [n, n]).unwrap()
}

fn fixed_tau(tau: f64, max_iters: usize) -> RenderConfig {
    RenderConfig {
        iteration: IterationParams::new(tau, max_iters).unwrap(),
        auto_threshold: false,
        ..Default::default()
    }
}

fn small_network() -> ComplexMlpF64 {
    init_network(&NetworkConfig { seed: 11, ..Default::default() }).unwrap()
}

#[test]
fn render_is_deterministic_across_runs_and_pools() {
    let g = small_network();
    let window = ImageWindow { resolution: [24, 24], ..Default::default() };
    let config = RenderConfig { max_epochs: 5, seed: 9, ..Default::default() };
    let (a, sa) = render_image(&g, &window, &config).unwrap();
    let (b, sb) = render_image(&g, &window, &config).unwrap();
    assert_eq!(a, b);
    assert_eq!(sa, sb);
    for threads in [1, 3] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let (c, sc) = pool.install(|| render_image(&g, &window, &config)).unwrap();
        assert_eq!(a.to_rgb8(), c.to_rgb8());
        assert_eq!(sa.sample_counts, sc.sample_counts);
    }
}

#[test]
fn different_seeds_give_different_sample_placement() {
    let m = OracleDynamicsF64::MandelbrotSquare;
    let window = mandelbrot_window(16);
    let base = RenderConfig { max_epochs: 3, ..fixed_tau(2.0, 32) };
    let (_, a) = render_image(&m, &window, &RenderConfig { seed: 1, ..base }).unwrap();
    let (_, b) = render_image(&m, &window, &RenderConfig { seed: 2, ..base }).unwrap();
    assert_ne!(a.sample_counts, b.sample_counts);
}

#[test]
fn sample_counts_are_conserved() {
    let m = OracleDynamicsF64::MandelbrotSquare;
    let window = mandelbrot_window(20);
    let config = RenderConfig {
        max_epochs: 7,
        samples_per_epoch: Some(333),
        ..fixed_tau(2.0, 32)
    };
    let (_, stats) = render_image(&m, &window, &config).unwrap();
    let expected = 4 * 400 + stats.epochs_run as u64 * 333;
    assert_eq!(stats.sample_counts.iter().sum::<u64>(), expected);
    assert_eq!(stats.total_samples, expected);
    assert!(stats.sample_counts.iter().all(|&c| c >= 4));
}

#[test]
fn calibration_samples_are_not_accumulated() {
    let g = small_network();
    let window = ImageWindow { resolution: [16, 16], ..Default::default() };
    let config = RenderConfig { max_epochs: 0, ..Default::default() };
    let (_, stats) = render_image(&g, &window, &config).unwrap();
    assert_eq!(stats.calibration_samples, 256);
    assert_eq!(stats.total_samples, 4 * 256);
    assert!(stats.final_tau >= 1.0);
}

#[test]
fn one_pass_render_equals_dense_reference() {
    let m = OracleDynamicsF64::MandelbrotSquare;
    let window = mandelbrot_window(32);
    let config = RenderConfig {
        initial_samples_per_pixel: 1,
        max_epochs: 0,
        seed: 5,
        ..fixed_tau(2.0, 64)
    };
    let (image, _) = render_image(&m, &window, &config).unwrap();
    let reference = dense_reference_render(&m, &window, &config.iteration, &config.shading().unwrap(), 1, 5).unwrap();
    assert_eq!(image, reference);
}

#[test]
fn adaptive_render_converges_to_dense_reference() {
    let m = OracleDynamicsF64::MandelbrotSquare;
    let window = mandelbrot_window(64);
    let config = RenderConfig { seed: 3, ..fixed_tau(2.0, 64) };
    let (image, _) = render_image(&m, &window, &config).unwrap();
    let reference = dense_reference_render(&m, &window, &config.iteration, &config.shading().unwrap(), 256, 1234).unwrap();
    let mae = image
        .pixels()
        .iter()
        .zip(reference.pixels())
        .flat_map(|(a, b)| a.channels().into_iter().zip(b.channels()).map(|(x, y)| (x - y).abs()))
        .sum::<f64>()
        / (3 * image.pixels().len()) as f64;
    assert!(mae <= 0.02, "mean absolute error {mae}");
}

#[test]
fn boundary_pixels_receive_more_samples_than_interior() {
    let m = OracleDynamicsF64::MandelbrotSquare;
    let window = mandelbrot_window(32);
    let config = RenderConfig {
        max_epochs: 10,
        color_mode: ColorMode::Indicator,
        seed: 8,
        ..fixed_tau(2.0, 64)
    };
    let it = config.iteration;
    let reference = dense_reference_grid(&m, &window, &it, &Shading::Indicator, 64, 77).unwrap();
    let mut renderer = Renderer::new(&m, window, config).unwrap();
    renderer.run().unwrap();
    let counts = renderer.grid().counts();

    let (mut boundary, mut interior) = (Vec::new(), Vec::new());
    for (i, acc) in reference.cells().iter().enumerate() {
        let p = acc.mean().unwrap().r;
        if p > 0.05 && p < 0.95 {
            boundary.push(counts[i] as f64);
        } else if p == 1.0 {
            interior.push(counts[i] as f64);
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(!boundary.is_empty() && !interior.is_empty());
    assert!(
        mean(&boundary) > 2.0 * mean(&interior),
        "boundary {} interior {}",
        mean(&boundary),
        mean(&interior)
    );
}

#[test]
fn indicator_render_agrees_with_scalar_membership_on_clear_pixels() {
    let m = OracleDynamicsF64::MandelbrotSquare;
    let window = mandelbrot_window(16);
    let it = IterationParams::new(2.0, 64).unwrap();
    let image = dense_reference_render(&m, &window, &it, &Shading::Indicator, 1, 0).unwrap();
    let mut rng = neural_fractal::seed::rng(neural_fractal::render::pass_seed(0, 0));
    use rand::Rng;
    for y in 0..16 {
        for x in 0..16 {
            let (u, v): (f64, f64) = (rng.random(), rng.random());
            let r = neural_fractal::pixel_to_region(&window, (x, y)).unwrap();
            let re = r.re_min + u * (r.re_max - r.re_min);
            let im = r.im_max - v * (r.im_max - r.im_min);
            let (bounded, margin) = mandelbrot_membership(re, im, 2.0, 64);
            if margin > 1e-9 {
                assert_eq!(image.get(x, y).r == 1.0, bounded, "pixel ({x}, {y})");
            }
        }
    }
}

#[test]
fn zero_dynamics_render_is_flat_and_stops_early() {
    let z = OracleDynamicsF64::Zero;
    let window = mandelbrot_window(16);
    let config = RenderConfig { color_mode: ColorMode::Indicator, ..fixed_tau(100.0, 16) };
    let (image, stats) = render_image(&z, &window, &config).unwrap();
    assert!(image.pixels().iter().all(|p| p.r == 1.0));
    assert!(stats.exhausted);
    assert_eq!(stats.epochs_run, 0);
}

#[test]
fn f32_network_render_is_valid_and_deterministic() {
    let g32: neural_fractal::ComplexMlpF32 = init_network(&NetworkConfig { seed: 21, ..Default::default() }).unwrap();
    let window = ImageWindow { resolution: [16, 16], ..Default::default() };
    let config = RenderConfig { max_epochs: 3, ..Default::default() };
    let (a, stats) = render_image(&g32, &window, &config).unwrap();
    let (b, _) = render_image(&g32, &window, &config).unwrap();
    assert_eq!(a, b);
    assert!(a.pixels().iter().all(|p| p.in_unit_cube()));
    assert!(stats.final_tau.is_finite());
}
