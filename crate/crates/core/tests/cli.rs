use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn gaussnl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gaussnl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn read_csv(path: &Path) -> (Value, Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let meta = serde_json::from_str(lines.next().unwrap().strip_prefix("# ").unwrap()).unwrap();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (meta, header, rows)
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn svet_sym_reports_agreement() {
    let out = gaussnl(&["svet-sym", "--a", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert!((v["s_max_analytic"].as_f64().unwrap() - 4.343985857691197).abs() < 1e-6);
    assert!(v["delta"].as_f64().unwrap() < 1e-5);

    for a in ["1.0", "1.2247448"] {
        let v = stdout_json(&gaussnl(&["svet-sym", "--a", a]));
        assert_eq!(v["s_max_analytic"].as_f64().unwrap(), 4.0);
    }
}

#[test]
fn bad_input_exits_with_2() {
    assert_eq!(gaussnl(&["svet-sym", "--a", "0.5"]).status.code(), Some(2));
    assert_eq!(gaussnl(&["svet-sym"]).status.code(), Some(2));
    assert_eq!(gaussnl(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(gaussnl(&["--threads", "0", "svet-sym", "--a", "2"]).status.code(), Some(2));
}

#[test]
fn fig1ab_grid() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("fig1ab.csv");
    let out = gaussnl(&["fig1ab", "--a1", "2", "--step", "0.1", "--out", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (meta, header, rows) = read_csv(&csv);
    assert_eq!(meta["schema"], "gaussnl/fig1ab/1");
    assert_eq!(header, ["a2", "a3", "s_max", "entanglement"]);
    assert_eq!(rows.len(), 21 * 21);
    let mut feasible = 0;
    for r in &rows {
        let (a2, a3) = (num(&r[0]), num(&r[1]));
        let inside = (a2 - a3).abs() + 1.0 <= 2.0 + 1e-9 && a2 + a3 - 1.0 >= 2.0 - 1e-9;
        if r[2].is_empty() {
            assert!(!inside || (a2 - a3).abs() + 1.0 > 2.0 - 1e-12, "({a2},{a3}) should be feasible");
            assert!(r[3].is_empty());
        } else {
            feasible += 1;
            assert!(num(&r[2]) >= 4.0 - 1e-9);
            assert!(num(&r[3]) >= 0.0);
        }
        if (a2 - 1.0).abs() < 1e-12 && (a3 - 3.0).abs() < 1e-12 {
            assert!(r[2].is_empty());
        }
        if (a2 - 2.0).abs() < 1e-12 && (a3 - 2.0).abs() < 1e-12 {
            assert!((num(&r[2]) - 4.343985857691197).abs() < 1e-6);
        }
    }
    assert!(feasible > 0);
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fig1ab.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["outputs"][0], "fig1ab.csv");
    assert_eq!(manifest["rows"], 441);
    assert!(manifest["wall_time_s"].as_f64().is_some());
}

#[test]
fn scatter_pure_bounds_and_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let out = gaussnl(&["scatter-pure", "--n", "200", "--seed", "7", "--out", p.to_str().unwrap()]);
        assert!(out.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let (meta, header, rows) = read_csv(&a);
    assert_eq!(meta["meta"]["sampler"]["config"]["seed"], 7);
    assert_eq!(header[3], "entanglement");
    let thr = 0.5 * (32.0f64 / 27.0).ln();
    for r in rows {
        let (e, s, lower) = (num(&r[3]), num(&r[4]), num(&r[5]));
        assert!(s >= lower - 1e-4);
        if e > thr + 1e-6 {
            assert!(s > 4.0);
        }
    }
}

#[test]
fn scatter_mixed_product_law_sits_on_lower_line() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("m.csv");
    let out = gaussnl(&["scatter-mixed", "--n", "30", "--law", "product", "--out", csv.to_str().unwrap()]);
    assert!(out.status.success());
    let (meta, _, rows) = read_csv(&csv);
    assert_eq!(meta["meta"]["sampler"]["law"], "thermal-product");
    for r in rows {
        assert!((num(&r[1]) - 4.0 * num(&r[0])).abs() < 1e-6);
    }
}

#[test]
fn classify_rows() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("c.csv");
    let out = gaussnl(&[
        "classify",
        "--a-grid",
        "1:3:1",
        "--mu-grid",
        "0.5:1:0.5",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let (_, header, rows) = read_csv(&csv);
    assert_eq!(header[3], "flags");
    for r in &rows {
        let (a, mu) = (num(&r[0]), num(&r[2]));
        let (fi, pr, sn) = (&r[4] == "1", &r[5] == "1", &r[6] == "1");
        // nesting
        assert!(!pr || fi);
        assert!(!sn || fi);
        if a == 1.0 {
            assert_eq!(r[3], "SEP");
        }
        if a == 3.0 && mu == 1.0 {
            assert!(sn);
        }
        if a == 3.0 && mu == 0.5 {
            assert!(fi && !sn);
        }
    }

    let z = dir.path().join("z.csv");
    let out = gaussnl(&["classify", "--z-grid", "0.5:1:0.5", "--mu-grid", "1:1:1", "--out", z.to_str().unwrap()]);
    assert!(out.status.success());
    let (_, _, rows) = read_csv(&z);
    assert!((num(&rows[0][0]) - 1.5f64.sqrt()).abs() < 1e-9);
    assert_eq!(num(&rows[1][0]), 1.0);
}

#[test]
fn bell_commands() {
    let out = gaussnl(&["bell", "maximize", "--ineq", "svetlichny", "--sym-a", "2"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert!((v["value"].as_f64().unwrap() - 4.343985857691197).abs() < 1e-6);
    assert_eq!(v["violated"], true);

    let v = stdout_json(&gaussnl(&["bell", "maximize", "--ineq", "svetlichny", "--sym-a", "1"]));
    assert!((v["value"].as_f64().unwrap() - 4.0).abs() < 1e-9);
    assert_eq!(v["violated"], false);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "1 A0 B0 C0\nnonsense\nbound 1\n").unwrap();
    let out = gaussnl(&["bell", "eval", "--ineq", bad.to_str().unwrap(), "--sym-a", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let state = dir.path().join("state.json");
    std::fs::write(&state, gaussnl::gaussian::symmetric_pure(2.0).unwrap().to_json()).unwrap();
    let out = gaussnl(&[
        "bell",
        "eval",
        "--ineq",
        "svetlichny",
        "--state-file",
        state.to_str().unwrap(),
        "--settings",
        "0,0.2267374490969931,0,0.2267374490969931,0,0.2267374490969931,0,-0.2267374490969931,0,-0.2267374490969931,0,-0.2267374490969931",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert!((v["value"].as_f64().unwrap().abs() - 4.343985857691197).abs() < 1e-9);
}
