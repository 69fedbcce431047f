use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sampler_lab::samplers::truncated_power_law_quantile;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_sampler-lab"));
    c.env_remove("SAMPLER_LAB_OUT");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .map(|e| {
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

#[test]
fn spectrum_writes_results_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("s7");
    let o = run(&[
        "spectrum",
        "--seed",
        "7",
        "--samples",
        "1024",
        "--replicates",
        "4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("results.csv").exists());
    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["criteria"][0]["id"], "C2");
    let status = summary["criteria"][0]["status"].as_str().unwrap();
    assert!(status == "PASS" || status == "FAIL");
    assert!(stdout(&o).contains("C2 "));
    let rows = fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 4 * 3);
}

#[test]
fn identical_invocations_give_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let c = tmp.path().join("c");
    for (dir, seed, jobs) in [(&a, "3", "1"), (&b, "3", "3"), (&c, "4", "2")] {
        let o = run(&[
            "levy",
            "--seed",
            seed,
            "--samples",
            "300",
            "--replicates",
            "3",
            "--jobs",
            jobs,
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let (fa, fb, fc) = (files(&a), files(&b), files(&c));
    assert_eq!(fa, fb);
    for (name, bytes) in &fa {
        if name.starts_with("env_") || name.starts_with("trace_") || name == "results.csv" {
            assert_ne!(Some(bytes), fc.get(name), "{name} unchanged by --seed");
        }
    }
}

#[test]
fn missing_seed_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&[
        "kl",
        "--replicates",
        "1",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("seed"), "{}", stderr(&o));
    assert!(fs::read_dir(tmp.path()).unwrap().next().is_none());
}

#[test]
fn config_errors_report_field_paths() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.json");
    fs::write(
        &cfg,
        r#"{"experiment": "levy", "master_seed": 1, "target": {"r": "far"}}"#,
    )
    .unwrap();
    let o = run(&["levy", "--config", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("target.r"), "{}", stderr(&o));

    let o = run(&[
        "levy",
        "--config",
        tmp.path().join("absent.json").to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("does not exist"));

    fs::write(&cfg, r#"{"experiment": "spectrum", "master_seed": 1}"#).unwrap();
    let o = run(&["levy", "--config", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
}

#[test]
fn config_values_and_flag_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    let out = tmp.path().join("run");
    fs::write(
        &cfg,
        r#"{"experiment": "ratio_sweep", "master_seed": 5, "replicates": 5, "samples": 256,
            "sweep": {"ratios": [1.0, 100.0]}}"#,
    )
    .unwrap();
    let o = run(&[
        "ratio",
        "--config",
        cfg.to_str().unwrap(),
        "--replicates",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 2 * 2 * 3);
    let resolved: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("config.json")).unwrap()).unwrap();
    assert_eq!(resolved["samples"], 256);
    assert_eq!(resolved["replicates"], 2);
}

#[test]
fn output_root_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bin()
        .env("SAMPLER_LAB_OUT", tmp.path())
        .args(["kl", "--seed", "1", "--samples", "128", "--replicates", "1"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(tmp
        .path()
        .join("kl_race")
        .join("kl_trajectories.csv")
        .exists());
}

#[test]
fn unknown_subcommand_prints_usage() {
    let o = run(&["frobnicate"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("Usage"));
    let o = run(&["spectrum", "--swap-policy", "sideways", "--seed", "1"]);
    assert!(!o.status.success());
}

#[test]
fn fit_recovers_synthetic_exponent() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("distances.csv");
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut text = String::from("distance\n");
    for _ in 0..50_000 {
        text += &format!(
            "{}\n",
            truncated_power_law_quantile(rng.random(), 2.0, 1.0, 1000.0)
        );
    }
    fs::write(&path, text).unwrap();
    let plot = tmp.path().join("plot.csv");
    let o = run(&[
        "fit",
        "--input",
        path.to_str().unwrap(),
        "--windows",
        "10",
        "--plotdata",
        plot.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let fit: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let mu = fit["mu_hat"].as_f64().unwrap();
    assert!((mu - 2.0).abs() < 0.1, "{mu}");
    assert_eq!(fit["n_cells"], 10);
    assert!(fs::read_to_string(plot)
        .unwrap()
        .starts_with("logx,logy,cell_mean"));
}

#[test]
fn analyze_random_walk_and_traces() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("walk.csv");
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut x = 0.0;
    let mut text = String::new();
    for _ in 0..4096 {
        x += rng.random::<f64>() - 0.5;
        text += &format!("{x}\n");
    }
    fs::write(&path, text).unwrap();
    let o = run(&["analyze", "--input", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let fit: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let alpha = fit["alpha_hat"].as_f64().unwrap();
    assert!((1.6..2.4).contains(&alpha), "{alpha}");

    let run_dir = tmp.path().join("levy");
    let o = run(&[
        "levy",
        "--seed",
        "2",
        "--replicates",
        "1",
        "--out",
        run_dir.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let trace = run_dir.join("trace_mc3_0.csv");
    let o = run(&["fit", "--trace", trace.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let fit: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let results = fs::read_to_string(run_dir.join("results.csv")).unwrap();
    let mc3_row = results.lines().find(|l| l.contains(",MC3,")).unwrap();
    let logged: f64 = mc3_row.split(',').nth(9).unwrap().parse().unwrap();
    assert!((fit["mu_hat"].as_f64().unwrap() - logged).abs() < 1e-9);

    let o = run(&["analyze", "--trace", trace.to_str().unwrap(), "--axis", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(&["analyze", "--trace", trace.to_str().unwrap(), "--axis", "2"]);
    assert!(!o.status.success());
}

#[test]
fn fit_input_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("x.csv");
    fs::write(&path, "1\n1\n").unwrap();
    let o = run(&["fit", "--input", path.to_str().unwrap()]);
    assert!(!o.status.success());
    let o = run(&["fit"]);
    assert!(!o.status.success());
}
