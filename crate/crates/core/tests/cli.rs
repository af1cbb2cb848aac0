use std::fs;
use std::path::Path;

use neural_fractal::cli::{run, sidecar_path, EXIT_CONFIG, EXIT_GENERATION, EXIT_IO, EXIT_OK};
use neural_fractal::DatasetManifest;

fn nfractal(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let code = run(std::iter::once("nfractal").chain(args.iter().copied()), &mut out);
    (code, String::from_utf8(out).unwrap())
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn render_twice_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.png");
    let b = dir.path().join("b.png");
    let args = ["--seed", "4", "--resolution", "20", "--epochs", "3"];
    for out in [&a, &b] {
        let mut full = vec!["render", "--out", path_str(out)];
        full.extend(args);
        let (code, stdout) = nfractal(&full);
        assert_eq!(code, EXIT_OK);
        let stats: serde_json::Value = serde_json::from_str(stdout.trim()).unwrap();
        assert!(stats["final_tau"].as_f64().unwrap() > 0.0);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let sa: serde_json::Value = serde_json::from_slice(&fs::read(sidecar_path(&a)).unwrap()).unwrap();
    let sb: serde_json::Value = serde_json::from_slice(&fs::read(sidecar_path(&b)).unwrap()).unwrap();
    assert_eq!(sa, sb);
    assert!(sa["network_seed"].is_u64());
}

#[test]
fn render_into_missing_directory_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("missing").join("x.png");
    let (code, _) = nfractal(&["render", "--out", path_str(&out), "--resolution", "8", "--epochs", "0"]);
    assert_eq!(code, EXIT_IO);
}

#[test]
fn invalid_arguments_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d");
    assert_eq!(nfractal(&["dataset", "--count", "0", "--out", path_str(&out)]).0, EXIT_CONFIG);
    let png = dir.path().join("x.png");
    assert_eq!(nfractal(&["render", "--out", path_str(&png), "--resolution", "0"]).0, EXIT_CONFIG);
    assert_eq!(nfractal(&["render", "--out", path_str(&png), "--tau=-1"]).0, EXIT_CONFIG);
    assert_eq!(nfractal(&["render", "--bogus"]).0, EXIT_CONFIG);
    let missing = dir.path().join("nope.toml");
    assert_eq!(nfractal(&["render", "--out", path_str(&png), "--config", path_str(&missing)]).0, EXIT_IO);
}

#[test]
fn config_file_is_applied_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        "seed = 3\n[dynamics]\nkind = \"mandelbrot\"\n[window]\ncenter = [-0.5, 0.0]\nwidth = 3.0\nheight = 3.0\nresolution = [12, 12]\n[render]\nauto_threshold = false\nmax_epochs = 2\n",
    )
    .unwrap();
    let png = dir.path().join("m.png");
    let (code, stdout) = nfractal(&["render", "--config", path_str(&cfg), "--out", path_str(&png), "--resolution", "10x6"]);
    assert_eq!(code, EXIT_OK);
    let stats: serde_json::Value = serde_json::from_str(stdout.trim()).unwrap();
    assert_eq!(stats["resolution"], serde_json::json!([10, 6]));
    assert_eq!(stats["final_tau"].as_f64(), Some(2.0));
}

#[test]
fn diag_writes_maps_consistent_with_stats() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("diag");
    let (code, stdout) = nfractal(&[
        "diag", "--oracle", "mandelbrot", "--tau", "2", "--center", "-0.5,0", "--width", "3", "--height", "3",
        "--resolution", "16", "--epochs", "4", "--out", path_str(&out),
    ]);
    assert_eq!(code, EXIT_OK);
    for f in ["image.png", "cv2.png", "samples.png", "diag.json", "sample_counts.json"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let summary: serde_json::Value = serde_json::from_str(stdout.trim()).unwrap();
    let counts: Vec<u64> = serde_json::from_slice(&fs::read(out.join("sample_counts.json")).unwrap()).unwrap();
    assert_eq!(counts.len(), 256);
    let total: u64 = counts.iter().sum();
    assert_eq!(summary["count_map_total"].as_u64(), Some(total));
    assert_eq!(summary["total_samples"].as_u64(), Some(total));
}

#[test]
fn dataset_output_does_not_depend_on_workers() {
    let dir = tempfile::tempdir().unwrap();
    let mut manifests = Vec::new();
    for workers in ["1", "3"] {
        let out = dir.path().join(format!("w{workers}"));
        let (code, stdout) = nfractal(&[
            "dataset", "--count", "3", "--resolution", "16", "--epochs", "2", "--seed", "10", "--workers", workers,
            "--out", path_str(&out),
        ]);
        assert_eq!(code, EXIT_OK);
        assert_eq!(stdout.trim(), path_str(&out.join("manifest.json")));
        manifests.push(out);
    }
    let names = |d: &Path| {
        let mut v: Vec<_> = fs::read_dir(d).unwrap().map(|e| e.unwrap().file_name()).collect();
        v.sort();
        v
    };
    assert_eq!(names(&manifests[0]), names(&manifests[1]));
    for name in names(&manifests[0]) {
        let a = fs::read(manifests[0].join(&name)).unwrap();
        let b = fs::read(manifests[1].join(&name)).unwrap();
        if name == "manifest.json" {
            let a: DatasetManifest = serde_json::from_slice(&a).unwrap();
            let b: DatasetManifest = serde_json::from_slice(&b).unwrap();
            assert_eq!(a.images.len(), 3);
            assert_eq!(a.images, b.images);
            assert_eq!(a.rejections, b.rejections);
        } else {
            assert_eq!(a, b, "{name:?} differs");
        }
    }
}

#[test]
fn dataset_rejects_oracle_dynamics() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = nfractal(&["dataset", "--oracle", "zero", "--count", "1", "--out", path_str(dir.path())]);
    assert_eq!(code, EXIT_CONFIG);
}

#[test]
fn exhausted_retries_exit_with_generation_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("flat.toml");
    fs::write(&cfg, "[dataset]\nfilter_std_min = 2.0\nmax_retries_per_slot = 2\n").unwrap();
    let (code, _) = nfractal(&[
        "dataset", "--config", path_str(&cfg), "--count", "1", "--resolution", "8", "--epochs", "0",
        "--out", path_str(&dir.path().join("d")),
    ]);
    assert_eq!(code, EXIT_GENERATION);
}
