use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_eigenprofile"));
    cmd.env("RUST_LOG", "warn");
    cmd
}

fn synth(dir: &Path) {
    let status = bin()
        .args(["synth", "--rows", "32", "--cols", "32", "--bands", "8", "--classes", "3", "--out"])
        .arg(dir)
        .status()
        .unwrap();
    assert!(status.success());
}

fn run(dir: &Path, out: &str, extra: &[&str]) -> Output {
    bin()
        .arg("--config")
        .arg(dir.join("config.txt"))
        .args(["--window", "5", "--runs", "3", "--out"])
        .arg(dir.join(out))
        .args(extra)
        .output()
        .unwrap()
}

fn overall_accuracy(csv: &str) -> f64 {
    let mean = csv.lines().find(|l| l.starts_with("mean,")).expect("mean row");
    mean.split(',').nth(2).unwrap().parse().unwrap()
}

#[test]
fn synthetic_scene_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let output = run(dir.path(), "a", &["--scheme", "c"]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let out = dir.path().join("a");
    for name in ["metrics.txt", "metrics.csv", "classmap.ppm", "eigenspectrum.txt", "model.bin"] {
        assert!(out.join(name).is_file(), "missing {name}");
    }
    let csv = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(overall_accuracy(&csv) >= 95.0, "{csv}");
    assert_eq!(csv.lines().filter(|l| l.chars().next().unwrap().is_ascii_digit()).count(), 3);
    let ppm = std::fs::read(out.join("classmap.ppm")).unwrap();
    assert!(ppm.starts_with(b"P6\n32 32\n255\n"));
}

#[test]
fn same_seed_gives_identical_metrics() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    assert!(run(dir.path(), "a", &["--seed", "3"]).status.success());
    assert!(run(dir.path(), "b", &["--seed", "3", "--threads", "1"]).status.success());
    let a = std::fs::read(dir.path().join("a/metrics.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/metrics.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn missing_cube_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let cube = dir.path().join("nowhere.raw");
    let output = bin()
        .arg("--cube")
        .arg(&cube)
        .arg("--labels")
        .arg(dir.path().join("labels.raw"))
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("nowhere.raw"));
}

#[test]
fn invalid_settings_exit_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    for bad in [["--window", "4"], ["--scheme", "e"], ["--variance-fraction", "1.5"], ["--runs", "0"]] {
        let output = run(dir.path(), "x", &bad);
        assert_eq!(output.status.code(), Some(3), "{bad:?}");
    }
    let config = dir.path().join("bad.txt");
    std::fs::write(&config, "window_c = 5\nno_such_key = 1\n").unwrap();
    let output = bin().arg("--config").arg(&config).output().unwrap();
    assert_eq!(output.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&output.stderr).contains("no_such_key"));
}
