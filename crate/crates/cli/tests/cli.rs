use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

fn mmshare(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmshare")).args(args).output().expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_writes_five_files() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("nested/out");
    let o = mmshare(&["--out", path_str(&out), "--trials", "50", "run"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut names: Vec<String> =
        fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(
        names,
        ["baseline_sinr.csv", "baseline_snr.csv", "dynamic_sinr.csv", "dynamic_snr.csv", "results.json"]
    );
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("baseline_sinr") && stdout.contains("dynamic_snr"));

    let summary = mmshare::output::read_summary(&out.join("results.json")).unwrap();
    assert_eq!(summary.total_trials, 50);
    assert_eq!(summary.schema_version, 1);
    // the printed table carries the same digits as the file
    for c in &summary.configurations {
        let j = mmshare::numeric::fmt_sig9(c.jain.unwrap());
        assert!(stdout.contains(&j), "{j} missing from {stdout}");
    }
    let cdf = fs::read_to_string(out.join("dynamic_sinr.csv")).unwrap();
    assert!(cdf.starts_with("throughput_bps,cdf\n"));
    assert!(!cdf.contains('\r'));
    assert_eq!(cdf.lines().count(), 51);
}

#[test]
fn missing_config_is_exit_1_naming_the_path() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("absent.json");
    let o = mmshare(&["--config", path_str(&cfg), "--out", path_str(dir.path()), "run"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("absent.json"));
}

#[test]
fn bad_config_values_are_exit_1_naming_the_field() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"num_operators": 5, "chunk_bandwidth_hz": 3e8}"#).unwrap();
    let o = mmshare(&["--config", path_str(&cfg), "--out", path_str(dir.path()), "run"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("chunk"));

    fs::write(&cfg, r#"{"no_such_field": 1}"#).unwrap();
    let o = mmshare(&["--config", path_str(&cfg), "--out", path_str(dir.path()), "run"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no_such_field"));

    let o = mmshare(&["--set", "tx_power_dbm=\"loud\"", "--out", path_str(dir.path()), "run"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn existing_output_needs_force() {
    let dir = tempdir().unwrap();
    let out = path_str(dir.path());
    assert!(mmshare(&["--out", out, "--trials", "20", "run"]).status.success());
    let before = fs::read(dir.path().join("results.json")).unwrap();

    let o = mmshare(&["--out", out, "--trials", "30", "--seed", "9", "run"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(fs::read(dir.path().join("results.json")).unwrap(), before);

    let o = mmshare(&["--out", out, "--trials", "30", "--seed", "9", "--force", "run"]);
    assert!(o.status.success());
    assert_ne!(fs::read(dir.path().join("results.json")).unwrap(), before);
}

#[test]
fn overrides_reach_the_scenario() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"tx_power_dbm": 20}"#).unwrap();
    let o = mmshare(&[
        "--config",
        path_str(&cfg),
        "--set",
        "tx_power_dbm=35",
        "--set",
        "channel.los.sigma_db=4",
        "--seed",
        "77",
        "--trials",
        "10",
        "--out",
        path_str(dir.path()),
        "run",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = mmshare::output::read_summary(&dir.path().join("results.json")).unwrap();
    assert_eq!(s.scenario.tx_power_dbm, 35.0);
    assert_eq!(s.scenario.channel.los.sigma_db, 4.0);
    assert_eq!(s.scenario.master_seed, 77);
    assert_eq!(s.scenario.num_trials, 10);
}

#[test]
fn worker_count_does_not_change_files() {
    let a = tempdir().unwrap();
    let b = tempdir().unwrap();
    for (dir, w) in [(&a, "1"), (&b, "3")] {
        let o = mmshare(&["--out", path_str(dir.path()), "--trials", "40", "--workers", w, "run"]);
        assert!(o.status.success());
    }
    for name in mmshare::output::campaign_file_names() {
        assert_eq!(fs::read(a.path().join(&name)).unwrap(), fs::read(b.path().join(&name)).unwrap(), "{name}");
    }
}

#[test]
fn dump_trials_writes_tables() {
    let dir = tempdir().unwrap();
    let o = mmshare(&["--out", path_str(dir.path()), "--trials", "5", "run", "--dump-trials", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["deployment.csv", "links.csv", "allocations.csv"] {
        let text = fs::read_to_string(dir.path().join(name)).unwrap();
        assert!(text.lines().count() > 1, "{name}");
    }
    let o = mmshare(&["--out", path_str(dir.path()), "--trials", "5", "--force", "run", "--dump-trials", "6"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_rows_and_errors() {
    let dir = tempdir().unwrap();
    let out = path_str(dir.path());
    let o = mmshare(&["--out", out, "--trials", "20", "sweep", "--densities", "50,75,100"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "density_per_km2,policy,jain,mean_throughput_gbps");
    assert_eq!(lines.len(), 7);

    let o = mmshare(&["--out", out, "--trials", "20", "--force", "sweep", "--densities", "75,75"]);
    assert!(o.status.success());
    let text = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[1..3], lines[3..5]);

    for bad in ["", "50,,75", "-50", "abc"] {
        let o = mmshare(&["--out", out, "--force", "sweep", "--densities", bad]);
        assert_eq!(o.status.code(), Some(1), "{bad:?}");
    }
}

fn pattern_gains(dir: &Path) -> Vec<f64> {
    fs::read_to_string(dir.join("pattern.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect()
}

#[test]
fn default_pattern_peaks_at_boresight() {
    let dir = tempdir().unwrap();
    let o = mmshare(&["--out", path_str(dir.path()), "pattern", "--phi=-90:90:5", "--theta", "0:180:5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let g = pattern_gains(dir.path());
    assert_eq!(g.len(), 37 * 37);
    let peak = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert!((peak - (8.0 + 10.0 * 64f64.log10())).abs() < 1e-6, "{peak}");
}

#[test]
fn single_isotropic_element_is_flat() {
    let dir = tempdir().unwrap();
    let o = mmshare(&[
        "--set",
        "gnb_array=[1,1]",
        "--out",
        path_str(dir.path()),
        "pattern",
        "--isotropic",
        "--phi=-180:180:30",
        "--theta",
        "0:180:30",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(pattern_gains(dir.path()).iter().all(|&g| g == 0.0));
}

#[test]
fn out_of_range_grid_is_exit_1() {
    let dir = tempdir().unwrap();
    for (phi, theta) in [("-190:0:1", "0:180:1"), ("0:10:1", "0:181:1"), ("0:10:0", "0:10:1"), ("0:10", "0:10:1")] {
        let phi_arg = format!("--phi={phi}");
        let o = mmshare(&["--out", path_str(dir.path()), "pattern", &phi_arg, "--theta", theta]);
        assert_eq!(o.status.code(), Some(1), "{phi} {theta}");
    }
    assert!(!dir.path().join("pattern.csv").exists());
}
