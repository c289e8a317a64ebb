use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use exdyn::verify::{CheckReport, Verdict};

fn exdyn(dir: &Path, config: &str, extra: &[&str]) -> Output {
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_exdyn"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .output()
        .unwrap()
}

fn reports(dir: &Path) -> Vec<CheckReport> {
    serde_json::from_str(&fs::read_to_string(dir.join("out/reports.json")).unwrap()).unwrap()
}

#[test]
fn verify_all_passes_for_iem11() {
    let dir = tempfile::tempdir().unwrap();
    let out = exdyn(dir.path(), "command = verify-all\nmodel = IEM(1,1;1,1)\nnmax = 8\n", &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let reports = reports(dir.path());
    for check in ["self-duality", "detailed-balance", "pair-symmetry+", "projection-identity", "exchange-commutation+"] {
        assert!(reports.iter().any(|r| r.check == check), "missing {check}");
    }
    assert!(reports.iter().all(|r| r.verdict != Verdict::Fail));
    assert!(!dir.path().join("out/witnesses.json").exists());
}

#[test]
fn unequal_s_fails_with_witness_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = exdyn(dir.path(), "command = verify-duality\nmodel = IEM(1,1;2,1)\nnmax = 3\n", &[]);
    assert_eq!(out.status.code(), Some(1));
    let w = fs::read_to_string(dir.path().join("out/witnesses.json")).unwrap();
    assert!(w.contains("\"location\": \"k=(0,1) n=(1,0)\""), "{w}");
    let failing = reports(dir.path()).into_iter().find(|r| r.check == "self-duality").unwrap();
    assert_eq!(failing.verdict, Verdict::Fail);
    assert!(failing.detail.contains("outside hypothesis"));
}

#[test]
fn config_errors_name_the_position() {
    let dir = tempfile::tempdir().unwrap();
    let out = exdyn(dir.path(), "command = verify-duality\nmodel = RIEM(2,3;1,4)\n", &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2, column 9") && err.contains("gamma1"), "{err}");

    let out = exdyn(dir.path(), "command = verify-all\nmodel = RW\nspeed = 3\n", &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key 'speed'"));
}

#[test]
fn float_arithmetic_flag() {
    let dir = tempfile::tempdir().unwrap();
    let out = exdyn(dir.path(), "command = verify-duality\nmodel = PIEM(1,2)\nnmax = 4\n", &["--arithmetic", "float"]);
    assert_eq!(out.status.code(), Some(0));
    let json = fs::read_to_string(dir.path().join("out/reports.json")).unwrap();
    assert!(json.contains("\"tolerance\": 1e-12"), "{json}");
}

#[test]
fn thermalize_writes_exact_laws() {
    let dir = tempfile::tempdir().unwrap();
    let out = exdyn(dir.path(), "command = thermalize\nmodel = IEM(1,1)\nnmax = 2\n", &[]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("out/thermalization.csv")).unwrap();
    // BB(2,2,2) = (3/10, 2/5, 3/10)
    assert!(csv.contains("2,0,3/10\n2,1,2/5\n2,2,3/10\n"), "{csv}");
}

#[test]
fn simulate_two_vertices_with_jobs_from_env() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("pair.txt"), "# one edge\n0 1\n").unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "command = simulate\nmodel = IEM(1,1;1,1)\ngraph = pair.txt\ninit = 10 10\ntmax = 10\nsamples = 500\nseed = 1\n",
    )
    .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_exdyn"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .env("EXDYN_JOBS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let traj = fs::read_to_string(dir.path().join("out/trajectory.csv")).unwrap();
    assert!(traj.starts_with("time,vertex,wealth\n0,0,10\n0,1,10\n"));
    let joint = fs::read_to_string(dir.path().join("out/joint_histogram.csv")).unwrap();
    let counted: u64 = joint.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(counted, 500);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["total_mass"], 20);
}

#[test]
fn seed_flag_changes_the_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "command = simulate\nmodel = RW\ngraph = path(3)\ninit = 3 0 0\ntmax = 5\nsamples = 10\n";
    exdyn(dir.path(), cfg, &["--seed", "1"]);
    let a = fs::read(dir.path().join("out/trajectory.csv")).unwrap();
    exdyn(dir.path(), cfg, &["--seed", "2"]);
    let b = fs::read(dir.path().join("out/trajectory.csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn missing_graph_file_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = exdyn(dir.path(), "command = simulate\nmodel = RW\ngraph = nowhere.txt\ninit = 1 1\n", &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere.txt"));
}
