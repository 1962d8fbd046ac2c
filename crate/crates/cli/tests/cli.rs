//! End-to-end tests of the `sigshape` binary.

use std::path::Path;
use std::process::{Command, Output};

fn sigshape(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sigshape"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(path).expect("file exists");
    serde_json::from_str(&text).expect("valid json")
}

#[test]
fn design_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let common = [
        "design",
        "--scheme",
        "gensm",
        "--nt",
        "3",
        "--nr",
        "2",
        "--nrf",
        "2",
        "--n",
        "2",
        "--method",
        "obss",
        "--csit",
        "statistical",
        "--delta",
        "0.1",
        "--seed",
        "7",
        "--restarts",
        "4",
        "--max-iters",
        "60",
        "--inner-iters",
        "80",
    ];
    let out1 = sigshape(&[&common[..], &["--out", "a.csv"]].concat(), dir.path());
    assert!(
        out1.status.success(),
        "{}",
        String::from_utf8_lossy(&out1.stderr)
    );
    let out2 = sigshape(&[&common[..], &["--out", "b.csv"]].concat(), dir.path());
    assert!(out2.status.success());
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b, "same seed must give identical set files");
}

#[test]
fn baseline_design_reports_unit_distance() {
    let dir = tempfile::tempdir().unwrap();
    let out = sigshape(
        &[
            "design", "--scheme", "gensm", "--nt", "3", "--nr", "2", "--nrf", "2", "--n", "3",
            "--method", "baseline", "--csit", "none", "--out", "base.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let summary = read_json(&dir.path().join("base.summary.json"));
    let d_min = summary["d_min"].as_f64().unwrap();
    assert!((d_min - 1.0).abs() < 1e-9, "d_min {d_min}");
    assert_eq!(summary["method"], "baseline");
}

#[test]
fn design_then_evaluate_roundtrips_dmin() {
    let dir = tempfile::tempdir().unwrap();
    let out = sigshape(
        &[
            "design",
            "--scheme",
            "gensm",
            "--nt",
            "3",
            "--nr",
            "2",
            "--nrf",
            "2",
            "--n",
            "3",
            "--method",
            "cbss",
            "--mc",
            "4",
            "--csit",
            "statistical",
            "--delta",
            "0.3",
            "--seed",
            "9",
            "--out",
            "set.csv",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let designed = read_json(&dir.path().join("set.summary.json"));

    let out = sigshape(
        &[
            "evaluate",
            "--set",
            "set.csv",
            "--snr-db",
            "0,10",
            "--trials",
            "2000",
            "--seed",
            "1",
            "--out",
            "curve.csv",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let evaluated: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("summary on stdout");

    let d_design = designed["d_min"].as_f64().unwrap();
    let d_eval = evaluated["d_min"].as_f64().unwrap();
    assert!(
        (d_design - d_eval).abs() < 1e-12,
        "design {d_design} vs evaluate {d_eval}"
    );

    let curve = std::fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    let lines: Vec<&str> = curve.lines().collect();
    assert_eq!(lines[0], "rho_db,ser,ci_low,ci_high,bound,trials,errors");
    assert_eq!(lines.len(), 3);

    // The bound column is exactly the analytic value for the stored set.
    let set_text = std::fs::read_to_string(dir.path().join("set.csv")).unwrap();
    let set = sigshape::shaping::TransmitSet::from_csv(&set_text).unwrap();
    let corr = sigshape::channel::make_correlation(0.3, 3).unwrap();
    for (row, &db) in lines[1..].iter().zip(&[0.0, 10.0]) {
        let bound_col: f64 = row.split(',').nth(4).unwrap().parse().unwrap();
        let rho = 10f64.powf(db / 10.0);
        let expected = sigshape::evaluate::ser_upper_bound(&set, &corr, rho, 2).unwrap();
        assert!(
            (bound_col - expected).abs() < 1e-12,
            "bound {bound_col} vs {expected}"
        );
    }

    // SER falls as the SNR grows (0 dB vs 10 dB is far outside noise).
    let ser_at = |line: &str| -> f64 { line.split(',').nth(1).unwrap().parse().unwrap() };
    assert!(ser_at(lines[1]) > ser_at(lines[2]));
}

#[test]
fn ccdf_outputs_one_row_per_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let out = sigshape(
        &[
            "ccdf",
            "--scheme",
            "gensm",
            "--nt",
            "3",
            "--nr",
            "2",
            "--nrf",
            "2",
            "--n",
            "3",
            "--csit",
            "instantaneous",
            "--method",
            "cbss",
            "--mc",
            "4",
            "--draws",
            "30",
            "--thresholds",
            "0,1,2,50",
            "--seed",
            "5",
            "--out",
            "ccdf.csv",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let table = std::fs::read_to_string(dir.path().join("ccdf.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[1], "0,1");
    assert_eq!(lines[4], "50,0");
}

#[test]
fn ccdf_requires_instantaneous_csit() {
    let dir = tempfile::tempdir().unwrap();
    let out = sigshape(
        &[
            "ccdf", "--scheme", "gensm", "--nt", "3", "--nr", "2", "--nrf", "2", "--n", "3",
            "--csit", "none", "--out", "x.csv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("exp.cfg"),
        "# experiment defaults\nscheme=gensm\nnt=3\nnr=2\nnrf=2\nn=2\nmethod=cbss\nmc=4\ncsit=none\nout=from_file.csv\n",
    )
    .unwrap();

    // n comes from the file: 4 vectors
    let out = sigshape(&["design", "--config", "exp.cfg"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let set = std::fs::read_to_string(dir.path().join("from_file.csv")).unwrap();
    assert_eq!(set.lines().count(), 2 + 4);

    // the flag overrides n: 8 vectors
    let out = sigshape(
        &[
            "design",
            "--config",
            "exp.cfg",
            "--n",
            "3",
            "--out",
            "override.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let set = std::fs::read_to_string(dir.path().join("override.csv")).unwrap();
    assert_eq!(set.lines().count(), 2 + 8);
}

#[test]
fn sweep_reports_grid_times_methods_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = sigshape(
        &[
            "sweep",
            "--scheme",
            "gensm",
            "--nt",
            "3",
            "--nr",
            "2",
            "--nrf",
            "2",
            "--n",
            "3",
            "--methods",
            "cbss,baseline",
            "--mc",
            "4",
            "--csit",
            "none",
            "--snr-db",
            "0,10,20",
            "--trials",
            "2000",
            "--seed",
            "3",
            "--out",
            "report.csv",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert_eq!(report.lines().count(), 1 + 3 * 2);
}

#[test]
fn malformed_set_file_reports_line_and_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("broken.csv"),
        "# scheme=gensm nt=3 nr=2 nrf=2 n=1 csit=none method=test weight=identity\nx1,x2,x3,x4,x5,x6\n1,0,0,0,0,0\nnot,a,number,row,xx,yy\n",
    )
    .unwrap();
    let out = sigshape(
        &[
            "evaluate",
            "--set",
            "broken.csv",
            "--snr-db",
            "0",
            "--trials",
            "10",
            "--out",
            "x.csv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 4"), "stderr: {stderr}");
}

#[test]
fn degenerate_set_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("dup.csv"),
        "# scheme=gensm nt=3 nr=2 nrf=2 n=1 csit=none method=test weight=identity\nx1,x2,x3,x4,x5,x6\n1,0,0,0,0,0\n1,0,0,0,0,0\n",
    )
    .unwrap();
    let out = sigshape(
        &[
            "evaluate", "--set", "dup.csv", "--snr-db", "0", "--trials", "10", "--out", "x.csv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn sweep_rejects_instantaneous_csit() {
    let dir = tempfile::tempdir().unwrap();
    let out = sigshape(
        &[
            "sweep",
            "--scheme",
            "gensm",
            "--nt",
            "3",
            "--nr",
            "2",
            "--nrf",
            "2",
            "--n",
            "3",
            "--csit",
            "instantaneous",
            "--snr-db",
            "0,10",
            "--out",
            "x.csv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn infeasible_rate_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = sigshape(
        &[
            "design", "--scheme", "gensm", "--nt", "3", "--nr", "2", "--nrf", "2", "--n", "4",
            "--method", "baseline", "--csit", "none", "--out", "x.csv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("rate mismatch"));
}
