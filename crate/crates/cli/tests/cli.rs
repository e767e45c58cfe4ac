use std::path::Path;
use std::process::{Command, Output};

use clap::Parser;
use steklov_cli::Cli;

fn steklov(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_steklov"))
        .args(args)
        .current_dir(dir)
        .env("STEKLOV_THREADS", "1")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn flag_wins_over_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "regime = \"critical\"\nalpha = 0.3\nk = [32]\n").unwrap();
    let p = path.to_str().unwrap();
    let cli = Cli::try_parse_from(["steklov", "sweep", "--config", p, "--k", "64"]).unwrap();
    assert_eq!(cli.flags.resolve().unwrap().k, vec![64]);
    let cli = Cli::try_parse_from(["steklov", "sweep", "--config", p]).unwrap();
    let cfg = cli.flags.resolve().unwrap();
    assert_eq!(cfg.k, vec![32]);
    assert_eq!(cfg.p, 2.0);
}

#[test]
fn weight_table_for_flat_chart() {
    let dir = tempfile::tempdir().unwrap();
    let o = steklov(&["weight", "--profile", "sin2", "--phi-slope", "0", "--intervals", "8"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,m");
    assert_eq!(lines.len(), 10);
    let m: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!(m > 1.0);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(steklov(&["frobnicate"], dir.path()).status.code(), Some(2));
    assert_eq!(steklov(&["solve", "--alpha", "1.2"], dir.path()).status.code(), Some(2));
    assert_eq!(steklov(&["solve", "--eps", "0.3"], dir.path()).status.code(), Some(2));
    std::fs::write(dir.path().join("bad.json"), "{\"alpah\": 0.3}").unwrap();
    let o = steklov(&["weight", "--config", "bad.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpah"));
    // a mesh finer than the period allows is a config error, a missing file is not
    assert_eq!(steklov(&["solve", "--eps", "0.25", "--h", "0.1"], dir.path()).status.code(), Some(2));
    let o = steklov(&["sweep", "--k", "4", "--output", "missing/dir/out.csv", "--h-min", "0.03125"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn help_lists_config_keys() {
    let dir = tempfile::tempdir().unwrap();
    let text = stdout(&steklov(&["--help"], dir.path()));
    for key in ["regime", "alpha", "h_factor", "boundary_refine", "tol_lambda", "scan_starts", "STEKLOV_THREADS"] {
        assert!(text.contains(key), "{key}");
    }
}

#[test]
fn solve_and_optimize_write_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = steklov(&["solve", "--h", "0.1", "--output", "u.csv"], dir.path());
    assert!(o.status.success());
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let solved = summary["lambda"].as_f64().unwrap();
    assert!(std::fs::read_to_string(dir.path().join("u.csv")).unwrap().starts_with("node,x,y,u"));
    let o = steklov(&["optimize", "--h", "0.1", "--output", "w.csv"], dir.path());
    assert!(o.status.success());
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(summary["lambda"].as_f64().unwrap() <= solved);
    assert!(std::fs::read_to_string(dir.path().join("w.csv")).unwrap().starts_with("edge,fraction"));
}

#[test]
fn check_transform_reports_each_k() {
    let dir = tempfile::tempdir().unwrap();
    let o = steklov(&["check-transform", "--a", "2", "--k", "4,8,16"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 3);
    assert!(v[0]["min_j"].as_f64().unwrap() > 0.0);
}

#[test]
fn sweep_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["sweep", "--regime", "subcritical", "--a", "0.5", "--k", "4,8", "--h-min", "0.015625", "--seed", "7"];
    let mut outputs = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let mut full = args.to_vec();
        full.extend(["--output", name]);
        let o = steklov(&full, dir.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(std::fs::read(dir.path().join(name)).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs.remove(0)).unwrap();
    assert!(text.starts_with("k,eps,lambda,ref_lambda,rel_gap,slope_running,delta_measure,weakstar_err\n"));
    assert_eq!(text.lines().count(), 3);
    let side: serde_json::Value =
        serde_json::from_reader(std::fs::File::open(dir.path().join("a.json")).unwrap()).unwrap();
    assert_eq!(side["a"].as_f64(), Some(0.5));
    assert_eq!(side["seed"].as_u64(), Some(7));
}

#[test]
fn report_writes_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let o = steklov(&["report", "--a", "2", "--k", "4", "--h-min", "0.03125", "--output", "r.csv"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let full: serde_json::Value =
        serde_json::from_reader(std::fs::File::open(dir.path().join("r.diagnostics.json")).unwrap()).unwrap();
    assert_eq!(full["regime"], "supercritical");
    assert_eq!(full["rows"].as_array().unwrap().len(), 1);
    assert!(dir.path().join("r.csv").exists());
}
