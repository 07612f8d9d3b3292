use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_confmetric"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json_file(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn verify_all_flat_passes() {
    let out = run(&["verify-all", "--preset", "flat"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("unit_ball_ratio") && !text.contains("FAIL"));
}

#[test]
fn cone_preset_report() {
    let dir = tempfile::tempdir().unwrap();
    let rep = dir.path().join("cone.json");
    let out = run(&[
        "verify-all", "--preset", "cone", "--beta", "0.5", "--dimension", "4",
        "--report", rep.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_file(&rep);
    assert!((v["H"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    assert!((v["nu"].as_f64().unwrap() - 0.5).abs() < 1e-6);
    assert!(v["iso_sup"].as_f64().unwrap().is_finite());
    assert_eq!(v["family_seed"], 20240601);
}

#[test]
fn malformed_header_exits_2_naming_line() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.csv");
    std::fs::write(&f, "radius,value\n1,2\n2,3\n").unwrap();
    let out = run(&["potential", "--measure", f.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let diag: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(diag["error"], "parse");
    assert_eq!(diag["line"], 1);
    assert!(diag["message"].as_str().unwrap().contains("line 1"));

    std::fs::write(&f, "r,value\n1,2\n2,oops\n").unwrap();
    let out = run(&["decompose", "--measure", f.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let diag: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(diag["line"], 3);
}

#[test]
fn invalid_parameters_exit_2() {
    assert_eq!(run(&["verify-all", "--preset", "cone", "--beta", "1.5"]).status.code(), Some(2));
    assert_eq!(run(&["potential", "--measure", "flat", "--dimension", "3"]).status.code(), Some(2));
    assert_eq!(run(&["verify-all", "--preset", "nonsense"]).status.code(), Some(2));
    assert_eq!(run(&["qcmap", "--dimension", "2"]).status.code(), Some(2));
}

#[test]
fn failed_check_exits_1() {
    // ω = |x|^{-1} in the plane: ω² is not locally integrable
    let out = run(&["weights", "--field", "cone", "--beta", "0.5", "--test", "rh", "--rexp", "2", "--count", "20"]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["passed"], false);
    let out = run(&["weights", "--field", "cone", "--beta", "0.5", "--test", "rh", "--count", "20"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut reports = Vec::new();
    for (i, threads) in ["1", "3", "3"].iter().enumerate() {
        let rep = dir.path().join(format!("d{i}.json"));
        let map = dir.path().join(format!("m{i}.csv"));
        let st = bin()
            .env("CONFMETRIC_THREADS", threads)
            .args([
                "decompose", "--measure", "gaussian-bump", "--dimension", "4",
                "--out-report", rep.to_str().unwrap(), "--out-map", map.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(st.success());
        reports.push((std::fs::read(&rep).unwrap(), std::fs::read(&map).unwrap()));
    }
    assert!(reports.windows(2).all(|w| w[0] == w[1]));

    let iso = |name: &str| {
        let p = dir.path().join(name);
        let st = run(&["iso", "--metric", "dirac-cluster", "--count", "50", "--seed", "7", "--report", p.to_str().unwrap()]);
        assert_eq!(st.status.code(), Some(0));
        std::fs::read(p).unwrap()
    };
    assert_eq!(iso("a.json"), iso("b.json"));
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "dimension = 4\nseed = 11\ncount = 40\n\n[scenario]\npreset = \"cone\"\nbeta = 0.25\n").unwrap();
    let rep = dir.path().join("r.json");
    let out = run(&["--config", cfg.to_str().unwrap(), "verify-all", "--preset", "cone", "--report", rep.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_file(&rep);
    assert_eq!(v["dimension"], 4);
    assert_eq!(v["family_seed"], 11);
    assert_eq!(v["family_count"], 40);
    assert!((v["H"].as_f64().unwrap() - 4.0 / 3.0).abs() < 1e-9);

    std::fs::write(&cfg, "dimensions = 4\n").unwrap();
    let out = run(&["--config", cfg.to_str().unwrap(), "verify-all", "--preset", "flat"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn files_round_trip_through_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let dens = d.join("m.csv");
    let out = run(&["mbeta", "--beta", "0.5", "--dimension", "2", "--out-density", dens.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    // the smoothed cone read back from disk decomposes with m_β carrying all the mass
    let rep = d.join("r.json");
    let out = run(&["decompose", "--measure", dens.to_str().unwrap(), "--out-report", rep.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_file(&rep);
    assert!((v["report"]["beta"].as_f64().unwrap() - 0.5).abs() < 1e-6);

    let p = d.join("p.csv");
    assert!(run(&["qcmap", "--cone", "0.5", "--out", p.to_str().unwrap()]).status.success());
    let q = d.join("q.json");
    let out = run(&["qcmap", "--compose", p.to_str().unwrap(), p.to_str().unwrap(), "--report", q.to_str().unwrap()]);
    assert!(out.status.success());
    assert!((json_file(&q)["H"].as_f64().unwrap() - 4.0).abs() < 1e-9);

    // planar density: potential samples every cell
    let grid = d.join("g.csv");
    let mut text = String::from("nx,ny,x0,y0,dx,dy\n4,4,-1,-1,0.5,0.5\n");
    for _ in 0..16 {
        text.push_str("0.01\n");
    }
    std::fs::write(&grid, text).unwrap();
    let out = run(&["potential", "--measure", grid.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 17);
}
