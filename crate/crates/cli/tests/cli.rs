use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn preset(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../presets").join(name)
}

fn genpu(args: &[&str], root: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_genpu"))
        .args(args)
        .env("GENPU_OUTPUT_ROOT", root)
        .output()
        .expect("binary runs")
}

/// Shrinks a synthetic preset to a few seconds of work.
const TINY: &[&str] = &[
    "--set",
    "genpu.iterations=20",
    "--set",
    "dataset.n_per_class=100",
    "--set",
    "dataset.n_labeled=10",
    "--set",
    "dataset.test_per_class=50",
    "--set",
    "classifier.iterations=20",
    "--set",
    "baselines.generated_per_class=50",
    "--set",
    "logging.snapshot_every=10",
    "--set",
    "logging.snapshot_samples=20",
    "--set",
    "genpu.architecture.latent_dim=8",
    "--quiet",
];

fn run_tiny(config: &Path, root: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", config.to_str().unwrap()];
    args.extend_from_slice(TINY);
    args.extend_from_slice(extra);
    genpu(&args, root)
}

fn assert_ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn assert_rectangular_csv(path: &Path) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_else(|| panic!("{} is empty", path.display()));
    assert!(header.chars().next().unwrap().is_alphabetic(), "{}: no header", path.display());
    let width = header.split(',').count();
    for l in lines {
        assert_eq!(l.split(',').count(), width, "{}: {l}", path.display());
    }
}

#[test]
fn run_writes_every_artifact() {
    let root = tempfile::tempdir().unwrap();
    let out = run_tiny(&preset("two_moons.toml"), root.path(), &[]);
    assert_ok(&out);
    let dir = root.path().join("two_moons");
    for f in ["metrics.csv", "checkpoint.json", "summary.json", "learning_curves.csv", "config.toml"] {
        assert!(dir.join(f).exists(), "{f} missing");
    }
    for f in ["samples_0.csv", "samples_10.csv", "samples_20.csv"] {
        assert!(dir.join(f).exists(), "{f} missing");
    }
    for f in ["metrics.csv", "learning_curves.csv", "samples_10.csv"] {
        assert_rectangular_csv(&dir.join(f));
    }
    let metrics = fs::read_to_string(dir.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 21);
    let s = summary(&dir);
    for k in ["genpu_pn", "upu", "nnpu", "oracle_pn"] {
        let a = s["accuracy"][k].as_f64().unwrap_or_else(|| panic!("{k} missing"));
        assert!((0.0..=1.0).contains(&a));
    }
    assert_eq!(s["iterations"], 20);
}

#[test]
fn zero_iterations_reports_untrained_metrics() {
    let root = tempfile::tempdir().unwrap();
    let out = run_tiny(&preset("circles.toml"), root.path(), &["--set", "genpu.iterations=0"]);
    assert_ok(&out);
    let s = summary(&root.path().join("circles"));
    assert_eq!(s["iterations"], 0);
    assert!(s["final_metrics"].is_null());
    assert!(s["accuracy"]["genpu_pn"].is_f64());
}

#[test]
fn same_config_gives_identical_metrics() {
    let root = tempfile::tempdir().unwrap();
    let a = root.path().join("a");
    let b = root.path().join("b");
    assert_ok(&run_tiny(&preset("gaussian_mixture.toml"), root.path(), &["--out", a.to_str().unwrap()]));
    assert_ok(&run_tiny(&preset("gaussian_mixture.toml"), root.path(), &["--out", b.to_str().unwrap()]));
    let read = |d: &Path, f: &str| fs::read(d.join(f)).unwrap();
    assert_eq!(read(&a, "metrics.csv"), read(&b, "metrics.csv"));
    assert_eq!(read(&a, "samples_20.csv"), read(&b, "samples_20.csv"));

    // the saved config alone reproduces the run
    let c = root.path().join("c");
    let saved = a.join("config.toml");
    let out = genpu(&["run", saved.to_str().unwrap(), "--quiet", "--out", c.to_str().unwrap()], root.path());
    assert_ok(&out);
    assert_eq!(read(&a, "metrics.csv"), read(&c, "metrics.csv"));
}

#[test]
fn digit_smoke_run_reports_all_methods() {
    let root = tempfile::tempdir().unwrap();
    let out = genpu(
        &[
            "run",
            preset("mnist_3v5_n100.toml").to_str().unwrap(),
            "--set",
            "genpu.iterations=30",
            "--set",
            "classifier.iterations=30",
            "--set",
            "baselines.generated_per_class=100",
            "--set",
            "logging.snapshot_samples=0",
            "--quiet",
        ],
        root.path(),
    );
    assert_ok(&out);
    let s = summary(&root.path().join("mnist_3v5_n100"));
    assert_eq!(s["n_labeled"], 100);
    assert_eq!(s["n_test"], 200);
    for k in ["genpu_pn", "upu", "nnpu", "oracle_pn"] {
        assert!(s["accuracy"][k].is_f64(), "{k}");
    }
}

#[test]
fn config_errors_exit_2_and_name_the_field() {
    let root = tempfile::tempdir().unwrap();
    let out = run_tiny(&preset("two_moons.toml"), root.path(), &["--set", "genpu.lamda_p=1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lamda_p"));

    let out = run_tiny(&preset("two_moons.toml"), root.path(), &["--set", "dataset.n_labeled=0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_labeled"));

    let out = genpu(&["run", "/nonexistent/config.toml"], root.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn divergence_exits_3() {
    let root = tempfile::tempdir().unwrap();
    let out = run_tiny(&preset("two_moons.toml"), root.path(), &["--set", "genpu.adam.lr=1e200"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("diverged"));
}

#[test]
fn oracle_verify_passes_and_detects_faults() {
    let root = tempfile::tempdir().unwrap();
    let out = genpu(&["oracle", "verify"], root.path());
    assert_ok(&out);
    let text = String::from_utf8_lossy(&out.stdout).to_string();
    assert_eq!(text.lines().count(), 5);
    assert!(text.contains("1000 trials"));

    let once = genpu(&["oracle", "verify", "--trials", "1", "--seed", "7"], root.path());
    let again = genpu(&["oracle", "verify", "--trials", "1", "--seed", "7"], root.path());
    assert_ok(&once);
    assert_eq!(once.stdout, again.stdout);

    let bad = genpu(&["oracle", "verify", "--trials", "20", "--inject-fault"], root.path());
    assert_eq!(bad.status.code(), Some(4));
}

#[test]
fn generate_and_eval_use_the_checkpoint() {
    let root = tempfile::tempdir().unwrap();
    assert_ok(&run_tiny(&preset("two_moons.toml"), root.path(), &[]));
    let ck = root.path().join("two_moons/checkpoint.json");
    let out = genpu(&["generate", ck.to_str().unwrap(), "--class", "n", "-n", "7"], root.path());
    assert_ok(&out);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x0,x1,label");
    assert_eq!(lines.len(), 8);
    assert!(lines[1..].iter().all(|l| l.ends_with(",-1")));

    let test_csv = root.path().join("test.csv");
    fs::write(&test_csv, &text).unwrap();
    let out = genpu(&["eval", ck.to_str().unwrap(), test_csv.to_str().unwrap()], root.path());
    assert_ok(&out);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["n"], 7);
    assert!((0.0..=1.0).contains(&v["accuracy"].as_f64().unwrap()));

    let out = genpu(&["eval", "/nonexistent.json", test_csv.to_str().unwrap()], root.path());
    assert!(!out.status.success());
}

#[test]
fn paper_init_starts_from_zero_networks() {
    let root = tempfile::tempdir().unwrap();
    let out = run_tiny(&preset("two_moons.toml"), root.path(), &["--paper-init", "--set", "genpu.iterations=0"]);
    assert_ok(&out);
    let samples = fs::read_to_string(root.path().join("two_moons/samples_0.csv")).unwrap();
    assert!(samples.lines().skip(1).all(|l| l.starts_with("0,0,")), "{samples}");
}
