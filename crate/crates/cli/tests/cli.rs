use std::path::Path;
use std::process::{Command, Output};

use mor_core::io::parse_csv;
use mor_core::morph::{format_points, parse_points};

fn mor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mor")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> serde_json::Value {
    let out = mor(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON summary on stdout")
}

fn csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    parse_csv(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn thermal_block_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("tb");
    let summary = ok(&["thermal-block", "--grid", "12", "--tol", "1e-6", "--out", s(&out)]);
    assert_eq!(summary["converged"], true);

    let (h, rows) = csv(&out.join("greedy_history.csv"));
    assert_eq!(h, ["N", "max_delta", "max_true_error"]);
    for w in rows.windows(2) {
        assert!(w[1][0] > w[0][0]);
    }
    assert!(rows.last().unwrap()[1] <= 1e-6);

    let (h, rows) = csv(&out.join("bound_sweep.csv"));
    assert_eq!(h[3], "effectivity");
    assert_eq!(rows.len(), 20);
    assert!(rows.iter().all(|r| r[3] >= 1.0 - 1e-10));
    assert!(out.join("rom/manifest.json").is_file());
}

#[test]
fn eim_demo_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("eim");
    let summary = ok(&["eim-demo", "--grid", "16", "--out", s(&out)]);
    let (_, eps) = csv(&out.join("eim_error.csv"));
    for w in eps.windows(2) {
        assert!(w[1][1] <= w[0][1]);
    }
    let (_, magic) = csv(&out.join("magic_points.csv"));
    assert_eq!(magic.len(), eps.len());
    assert_eq!(summary["q"].as_u64().unwrap() as usize, magic.len());

    let (h, rom) = csv(&out.join("rom_error.csv"));
    assert_eq!(h, ["N", "mean_rel_error", "max_rel_error"]);
    assert_eq!(summary["q_eim"], 11);
    // decreasing until the interpolation error of the source takes over;
    // on the plateau (within 5% of the smallest error) it may wobble
    let floor = rom.iter().map(|r| r[1]).fold(f64::INFINITY, f64::min);
    for w in rom.windows(2).filter(|w| w[0][1] > 1.05 * floor) {
        assert!(w[1][1] <= w[0][1], "{rom:?}");
    }
    assert!(rom.last().unwrap()[1] < 0.5 * rom[0][1]);
}

#[test]
fn deim_demo_errors_decay() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("deim");
    ok(&["deim-demo", "--grid", "10", "--train-size", "40", "--out", s(&out)]);
    let (h, rows) = csv(&out.join("mdeim_error.csv"));
    assert_eq!(h[0], "Q");
    assert_eq!(rows.iter().map(|r| r[0] as usize).collect::<Vec<_>>(), [2, 4, 6, 8, 10]);
    for w in rows.windows(2) {
        assert!(w[1][1] < w[0][1], "{rows:?}");
    }
}

#[test]
fn asub_demo_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&["asub-demo", "--out", s(&a)]);
    let rerun = Command::new(env!("CARGO_BIN_EXE_mor"))
        .args(["asub-demo", "--out", s(&b)])
        .env("MOR_THREADS", "1")
        .output()
        .unwrap();
    assert!(rerun.status.success());
    for f in ["paraboloid_eigenvalues.csv", "paraboloid_summary.csv", "quadratic_eigenvalues.csv", "quadratic_summary.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let (h, para) = csv(&a.join("paraboloid_eigenvalues.csv"));
    assert_eq!(h, ["index", "lambda"]);
    assert_eq!(para.len(), 3);
    assert!(para.iter().all(|r| (r[1] - 1.0 / 3.0).abs() < 0.15 / 3.0));
    let (_, quad) = csv(&a.join("quadratic_eigenvalues.csv"));
    assert!(quad[0][1] / quad[1][1] >= 10.0);
    let (h, summary) = csv(&a.join("quadratic_summary.csv"));
    assert_eq!(h, ["mu_M_1", "f"]);
    assert_eq!(summary.len(), 2000);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"train_size": 50, "seed": 3}"#).unwrap();
    let out = dir.path().join("o");
    let summary = ok(&["asub-demo", "--config", s(&cfg), "--train-size", "64", "--out", s(&out)]);
    assert_eq!(summary["samples"], 64);
    let (_, rows) = csv(&out.join("paraboloid_summary.csv"));
    assert_eq!(rows.len(), 64);

    std::fs::write(&cfg, r#"{"train_sise": 50}"#).unwrap();
    assert_eq!(mor(&["asub-demo", "--config", s(&cfg), "--out", s(&out)]).status.code(), Some(1));
    let bad = Command::new(env!("CARGO_BIN_EXE_mor"))
        .args(["asub-demo", "--out", s(&out)])
        .env("MOR_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

fn cloud(n: usize) -> Vec<Vec<f64>> {
    // deterministic scatter in the unit square
    (0..n)
        .map(|i| {
            let t = i as f64;
            vec![(0.6180339887 * t).fract(), (0.7548776662 * t + 0.1).fract()]
        })
        .collect()
}

#[test]
fn morph_ffd_zero_displacement_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let pts = cloud(200);
    std::fs::write(dir.path().join("p.txt"), format_points(&pts)).unwrap();
    std::fs::write(dir.path().join("d.json"), r#"{"origin": [-0.5, -0.5], "axes": [2, 0, 0.3, 2], "degrees": [3, 2]}"#).unwrap();
    let out = dir.path().join("o");
    let summary = ok(&[
        "morph",
        "ffd",
        "--points",
        s(&dir.path().join("p.txt")),
        "--descriptor",
        s(&dir.path().join("d.json")),
        "--out",
        s(&out),
    ]);
    assert_eq!(summary["points"], 200);
    assert!(summary["max_displacement"].as_f64().unwrap() <= 1e-12);
    let got = parse_points(&std::fs::read_to_string(out.join("deformed_points.txt")).unwrap()).unwrap();
    for (a, b) in got.iter().zip(&pts) {
        assert!((a[0] - b[0]).abs() <= 1e-12 && (a[1] - b[1]).abs() <= 1e-12);
    }
}

#[test]
fn morph_rbf_hits_deformed_controls() {
    let dir = tempfile::tempdir().unwrap();
    let xc = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0], vec![0.5, 0.5]];
    let yc = vec![vec![0.0, 0.0], vec![1.1, 0.0], vec![0.0, 0.9], vec![1.2, 1.05], vec![0.55, 0.45]];
    let desc = serde_json::json!({"control_points": xc, "deformed_points": yc, "kernel": "gaussian", "R": 1.0});
    std::fs::write(dir.path().join("d.json"), desc.to_string()).unwrap();
    let mut pts = cloud(20);
    pts.splice(3..3, xc.iter().cloned());
    std::fs::write(dir.path().join("p.txt"), format_points(&pts)).unwrap();
    let out = dir.path().join("o");
    ok(&[
        "morph",
        "rbf",
        "--points",
        s(&dir.path().join("p.txt")),
        "--descriptor",
        s(&dir.path().join("d.json")),
        "--out",
        s(&out),
    ]);
    let got = parse_points(&std::fs::read_to_string(out.join("deformed_points.txt")).unwrap()).unwrap();
    for (k, y) in yc.iter().enumerate() {
        for j in 0..2 {
            assert!((got[3 + k][j] - y[j]).abs() <= 1e-12, "{:?} vs {y:?}", got[3 + k]);
        }
    }
}

#[test]
fn morph_idw_matches_scripted_shepard() {
    let dir = tempfile::tempdir().unwrap();
    let xc = vec![vec![0.0, 0.0], vec![1.0, 0.2], vec![0.3, 0.9], vec![0.8, 0.8]];
    let yc = vec![vec![0.1, 0.0], vec![1.0, 0.3], vec![0.2, 1.0], vec![0.9, 0.85]];
    let desc = serde_json::json!({"control_points": xc, "deformed_points": yc, "s": 3});
    std::fs::write(dir.path().join("d.json"), desc.to_string()).unwrap();
    let pts = cloud(11)[1..].to_vec();
    std::fs::write(dir.path().join("p.txt"), format_points(&pts)).unwrap();
    let out = dir.path().join("o");
    ok(&[
        "morph",
        "idw",
        "--points",
        s(&dir.path().join("p.txt")),
        "--descriptor",
        s(&dir.path().join("d.json")),
        "--out",
        s(&out),
    ]);
    let got = parse_points(&std::fs::read_to_string(out.join("deformed_points.txt")).unwrap()).unwrap();
    assert_eq!(got.len(), 10);
    for (x, g) in pts.iter().zip(&got) {
        let w: Vec<f64> = xc
            .iter()
            .map(|c| ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)).sqrt().powi(-3))
            .collect();
        let total: f64 = w.iter().sum();
        for j in 0..2 {
            let want = x[j] + (0..4).map(|k| w[k] / total * (yc[k][j] - xc[k][j])).sum::<f64>();
            assert!((g[j] - want).abs() <= 1e-12);
        }
    }
}

#[test]
fn malformed_descriptor_exits_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("p.txt"), "0 0\n").unwrap();
    std::fs::write(dir.path().join("d.json"), "{\n  \"control_points\": [[0, 0]],\n  \"deformed_points\": [[0 0]]\n}").unwrap();
    let out = mor(&[
        "morph",
        "idw",
        "--points",
        s(&dir.path().join("p.txt")),
        "--descriptor",
        s(&dir.path().join("d.json")),
        "--out",
        s(&dir.path().join("o")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");

    std::fs::write(dir.path().join("d.json"), r#"{"control_points": [[0, 0]], "deformed_points": [[1, 0]]}"#).unwrap();
    std::fs::write(dir.path().join("p.txt"), "0 0\n1 x\n").unwrap();
    let out = mor(&[
        "morph",
        "idw",
        "--points",
        s(&dir.path().join("p.txt")),
        "--descriptor",
        s(&dir.path().join("d.json")),
        "--out",
        s(&dir.path().join("o")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn rom_save_load_solve() {
    let dir = tempfile::tempdir().unwrap();
    let rom = dir.path().join("rom");
    let saved = ok(&["rom", "save", "--grid", "10", "--out", s(&rom)]);
    let loaded = ok(&["rom", "load", "--dir", s(&rom)]);
    assert_eq!(loaded["n"], saved["n"]);
    assert_eq!(loaded["q_a"], 4);
    let solved = ok(&["rom", "solve", "--dir", s(&rom), "--mu", "0.3"]);
    assert_eq!(solved["coefficients"].as_array().unwrap().len() as u64, saved["n"].as_u64().unwrap());
    assert!(solved["output"].as_f64().unwrap().is_finite());
    // outside the parameter box
    assert_eq!(mor(&["rom", "solve", "--dir", s(&rom), "--mu", "1.5"]).status.code(), Some(1));
}
