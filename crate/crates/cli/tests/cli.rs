use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn exgraph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_exgraph"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn alpha_of_bonet_is_two() {
    let out = exgraph(&["alpha", "--ineq", "bonet"]);
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("alpha = 2\n"));
}

#[test]
fn alpha_with_oracle_agrees() {
    let out = exgraph(&["alpha", "--ineq", "c7_433", "--oracle"]);
    assert!(out.status.success());
    let s = stdout(&out);
    assert!(s.contains("alpha = 3\n"));
    assert!(s.contains("oracle = 3 "));
}

#[test]
fn theta_of_pentagon() {
    let out = exgraph(&["theta", "--cycle", "5"]);
    assert!(out.status.success());
    let expected = format!("theta = {:.7}", 5f64.sqrt());
    assert_eq!(expected, "theta = 2.2360680");
    assert!(stdout(&out).starts_with(&expected));
}

#[test]
fn table1_columns() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("t.csv");
    let out = exgraph(&["table1", "--max-d", "5", "--csv", csv_path.to_str().unwrap()]);
    assert!(out.status.success());
    let text = fs::read_to_string(&csv_path).unwrap();
    assert!(!text.contains('\r'));
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), ["d", "k", "alpha", "theta"]);
    let rows: Vec<Vec<String>> = reader
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect();
    let alphas: Vec<&str> = rows.iter().map(|r| r[2].as_str()).collect();
    assert_eq!(alphas, ["3", "3", "3", "3", "3", "4"]);
    // θ values of Table 1, to the printed precision.
    let thetas = [3.4641, 3.4641, 3.4142, 3.4142, 3.4318, 4.0];
    for (row, t) in rows.iter().zip(thetas) {
        let v: f64 = row[3].parse().unwrap();
        assert!((v - t).abs() < 1e-3, "{row:?}");
        assert!(row[3].replace(['-', '.'], "").trim_start_matches('0').len() <= 7);
    }
    assert_eq!(stdout(&out), text);
}

#[test]
fn bad_flags_exit_two() {
    let out = exgraph(&["alpha", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    let out = exgraph(&["seesaw", "--ineq", "bonet"]);
    assert_eq!(out.status.code(), Some(2), "seed is mandatory");
}

#[test]
fn computation_failures_exit_one() {
    let out = exgraph(&["alpha", "--ineq", "no_such_inequality"]);
    assert_eq!(out.status.code(), Some(1));
    let out = exgraph(&["graph", "--scenario", "instrumental:0,2,2"]);
    assert_eq!(out.status.code(), Some(1));
    let out = exgraph(&["catalog", "--name", "cglmp:1,0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn json_report_is_deterministic_apart_from_wall_time() {
    let dir = tempfile::tempdir().unwrap();
    let read = |name: &str| -> Value {
        let p = dir.path().join(name);
        let out = exgraph(&[
            "seesaw", "--ineq", "bonet", "--seed", "11", "--restarts", "4", "--json",
            p.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        let mut v: Value = serde_json::from_str(&fs::read_to_string(&p).unwrap()).unwrap();
        assert_eq!(v["schema"], 1);
        assert_eq!(v["seed"], 11);
        assert_eq!(v["scenario"], "instrumental:3,2,2");
        assert!(v["wall_time_s"].as_f64().unwrap() >= 0.0);
        v.as_object_mut().unwrap().remove("wall_time_s");
        v.as_object_mut().unwrap().remove("command");
        v
    };
    let a = read("a.json");
    let b = read("b.json");
    assert_eq!(a, b);
    let value = a["results"]["value"].as_f64().unwrap();
    assert!(value > 2.0 && value <= (3.0 + 2f64.sqrt()) / 2.0 + 1e-6);
}

#[test]
fn seesaw_strategy_dump_reproduces_value() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("s.json");
    let out = exgraph(&[
        "seesaw", "--ineq", "chsh_bell", "--seed", "3", "--restarts", "3", "--strategy-out",
        p.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let s = exclusivity_core::quantum::QuantumStrategy::from_json(
        &serde_json::from_str(&fs::read_to_string(&p).unwrap()).unwrap(),
    )
    .unwrap();
    let q = exclusivity_core::catalog::catalog_get("chsh_bell").unwrap();
    let probs = exclusivity_core::quantum::born_probabilities(&s, q.scenario()).unwrap();
    let v = q.evaluate(&probs).unwrap();
    assert!((v - (2.0 + 2f64.sqrt())).abs() < 1e-6, "{v}");
}

#[test]
fn graph_dot_has_two_layers_for_bonet_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("g.dot");
    let out = exgraph(&["graph", "--scenario", "instrumental:3,2,2", "--dot", p.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("instrumental:3,2,2: 12 vertices"));
    let dot = fs::read_to_string(&p).unwrap();
    assert!(dot.starts_with("graph"));
    let colors: std::collections::BTreeSet<&str> = dot
        .lines()
        .filter(|l| l.contains("--"))
        .filter_map(|l| l.split("color=").nth(1))
        .map(|c| c.split(",").next().unwrap())
        .collect();
    assert_eq!(colors.len(), 2, "{colors:?}");
}

#[test]
fn scan_scenario_and_grid() {
    let out = exgraph(&["scan", "--scenario", "instrumental:3,2,2", "--max-len", "all"]);
    assert!(out.status.success());
    let s = stdout(&out);
    assert!(s.contains("length 5: 24 holes"));
    assert!(s.contains("verdict: imperfect"));

    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("scan.csv");
    let out = exgraph(&[
        "scan", "--l-max", "3", "--m-max", "2", "--n-max", "2", "--max-len", "5", "--csv",
        p.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = fs::read_to_string(&p).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("cycle_length,l,m,n,witness_vertices"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&row[..4], ["5", "3", "2", "2"]);
    assert_eq!(row[4].split(' ').count(), 5);
}

#[test]
fn catalog_lists_and_shows() {
    let out = exgraph(&["catalog"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().count(), 4);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.json");
    let out = exgraph(&["catalog", "--name", "bonet", "--json", p.to_str().unwrap()]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&fs::read_to_string(&p).unwrap()).unwrap();
    let ineq = serde_json::to_string(&v["results"][0]).unwrap();
    let q = exclusivity_core::catalog::LinearInequality::parse(&ineq).unwrap();
    assert_eq!(q.classical_bound(), 2.0);
    assert_eq!(q.terms().len(), 5);
    let out = exgraph(&["catalog", "--pearl", "2,2,2"]);
    assert_eq!(stdout(&out).lines().count(), 8);
}

#[test]
fn inequality_file_input() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("q.json");
    let q = exclusivity_core::catalog::catalog_get("bonet").unwrap();
    fs::write(&p, serde_json::to_string(&q.to_json()).unwrap()).unwrap();
    let out = exgraph(&["alpha", "--ineq", p.to_str().unwrap(), "--scenario", "instrumental:3,3,3"]);
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("alpha = 2\n"));
}

#[test]
fn iv_estimate_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("iv.csv");
    // b = 1.5 a exactly, so the covariance ratio is 1.5.
    let mut text = String::from("x,a,b\n");
    for i in 0..200 {
        let x = (i % 2) as f64;
        let a = x + ((i * 7919) % 13) as f64 / 13.0;
        text.push_str(&format!("{x},{a},{}\n", 1.5 * a));
    }
    fs::write(&p, text).unwrap();
    let out = exgraph(&["iv-estimate", "--input", p.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).starts_with("gamma = 1.5000000"));
}

#[test]
fn threads_flag_is_accepted() {
    let out = exgraph(&["--threads", "1", "alpha", "--cycle", "7"]);
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("alpha = 3\n"));
}
