use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
}

fn metpart(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_metpart"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> serde_json::Value {
    assert_eq!(code(o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("json output")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn eig_pumpkin_and_h() {
    let p3 = fixture("pumpkin3.json");
    let v = json(&metpart(&["eig", "--graph", path(&p3), "--count", "4"]));
    let ev: Vec<f64> = serde_json::from_value(v["eigenvalues"].clone()).unwrap();
    assert!(ev[0].abs() < 1e-12);
    for x in &ev[1..] {
        assert!((x - PI * PI).abs() < 1e-9 * PI * PI);
    }
    let h = fixture("pumpkin_h.json");
    let v = json(&metpart(&["eig", "--graph", path(&h), "--count", "5"]));
    assert!((v["eigenvalues"][4].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn file_errors_exit_two() {
    let o = metpart(&["eig", "--graph", "/nonexistent/graph.json"]);
    assert_eq!(code(&o), 2);
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(code(&metpart(&["eig", "--graph", path(&bad)])), 2);
}

#[test]
fn invalid_requests_exit_three() {
    let star = fixture("star3.json");
    let o = metpart(&["partition", "minimize", "--graph", path(&star), "--k", "0"]);
    assert_eq!(code(&o), 3);
    let o = metpart(&["partition", "minimize", "--graph", path(&star), "--k", "2", "--p", "-1"]);
    assert_eq!(code(&o), 3);
    let o = metpart(&["sweep", "--graph", path(&star), "--k", "2", "--p-grid", ""]);
    assert_eq!(code(&o), 3);
    let o = metpart(&["verify", "--fixture", "no-such-fixture"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn six_pumpkin_natural_minimum() {
    let g = fixture("pumpkin6.json");
    let v = json(&metpart(&[
        "partition", "minimize", "--graph", path(&g), "--k", "2", "--problem", "natural", "--p",
        "inf",
    ]));
    let value = v["value"].as_f64().unwrap();
    assert!((value - PI * PI / 9.0).abs() < 1e-7 * value);
}

#[test]
fn dirichlet_two_partition_matches_eig() {
    let g = fixture("star3.json");
    let e = json(&metpart(&["eig", "--graph", path(&g), "--count", "2"]));
    let mu2 = e["eigenvalues"][1].as_f64().unwrap();
    let v = json(&metpart(&["partition", "minimize", "--graph", path(&g), "--k", "2"]));
    assert!((v["value"].as_f64().unwrap() - mu2).abs() < 1e-6 * mu2);
}

#[test]
fn maximize_on_interval() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("interval.json");
    std::fs::write(
        &g,
        r#"{"edges":[{"id":"e","length":1.0}],
            "vertices":[{"id":"x","slots":[["e","a"]]},{"id":"y","slots":[["e","b"]]}],
            "dirichlet":[]}"#,
    )
    .unwrap();
    let v = json(&metpart(&["partition", "maximize", "--graph", path(&g), "--k", "2"]));
    assert!((v["value"].as_f64().unwrap() - PI * PI).abs() < 1e-8);
}

fn csv_rows(o: &Output) -> Vec<csv::StringRecord> {
    assert_eq!(code(o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    csv::Reader::from_reader(o.stdout.as_slice())
        .records()
        .map(|r| r.unwrap())
        .collect()
}

#[test]
fn star_p_sweep_offsets_decrease() {
    let g = fixture("star3.json");
    let rows = csv_rows(&metpart(&[
        "sweep", "--graph", path(&g), "--k", "2", "--p-grid", "1,2,4,8",
    ]));
    let offsets: Vec<f64> = rows
        .iter()
        .map(|r| {
            let pos: Vec<Vec<f64>> = serde_json::from_str(&r[3]).unwrap();
            pos.into_iter().flatten().next().unwrap()
        })
        .collect();
    assert!(offsets.windows(2).all(|w| w[1] < w[0]), "{offsets:?}");
    assert!(offsets.iter().all(|&a| a > 0.0));
}

#[test]
fn lasso_length_sweep_plateau_and_switch() {
    let g = fixture("lasso.json");
    let rows = csv_rows(&metpart(&[
        "sweep", "--graph", path(&g), "--k", "2", "--problem", "natural", "--edge", "e1",
        "--lengths", "2,2.5,3,3.25,3.5",
    ]));
    let values: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    for v in &values[..3] {
        assert!((v - PI * PI / 4.0).abs() < 1e-7 * v);
    }
    assert!(values[3] < values[2] && values[4] < values[3]);
    assert_eq!(&rows[2][5], "true");
    assert!(!rows[2][6].is_empty());
}

#[test]
fn verify_single_fixture_and_forced_failure() {
    let o = metpart(&["verify", "--fixture", "pumpkin3"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = metpart(&["verify", "--fixture", "pumpkin3", "--tolerance", "1e-300"]);
    assert_eq!(code(&o), 1);
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(report
        .as_array()
        .unwrap()
        .iter()
        .any(|c| c["pass"] == serde_json::Value::Bool(false)));
}

#[test]
fn outputs_are_deterministic_and_lossless() {
    let g = fixture("lasso.json");
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for out in [&a, &b] {
        let o = metpart(&[
            "partition", "minimize", "--graph", path(&g), "--k", "3", "--problem", "natural",
            "--seed", "7", "--out", path(out),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (ja, jb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ja, jb);
    let v: serde_json::Value = serde_json::from_slice(&ja).unwrap();
    let rows = csv_rows(&metpart(&[
        "partition", "minimize", "--graph", path(&g), "--k", "3", "--problem", "natural",
        "--seed", "7", "--format", "csv",
    ]));
    let from_csv: f64 = rows[0][0].parse().unwrap();
    assert_eq!(from_csv.to_bits(), v["value"].as_f64().unwrap().to_bits());
}
