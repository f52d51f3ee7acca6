use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kerrlattice")).args(args).output().expect("binary runs")
}

fn config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("model.toml");
    std::fs::write(&p, body).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Data rows of a CSV with `#` metadata, keyed by header.
fn table(text: &str) -> Vec<Vec<(String, String)>> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    lines
        .map(|l| header.iter().cloned().zip(l.split(',').map(String::from)).collect())
        .collect()
}

fn field<'a>(row: &'a [(String, String)], key: &str) -> &'a str {
    &row.iter().find(|(k, _)| k == key).unwrap().1
}

#[test]
fn undriven_chain_is_vacuum() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), "n = 4\ndims = [4]\nboundary = \"periodic\"\nbig_u = 1.0\ndelta = 0.3\nkappa = 0.2\n");
    let out = dir.path().join("obs.json");
    let o = run(&["observables", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["nbar"].as_f64().unwrap(), 0.0);
    for z in doc["pairing"].as_array().unwrap() {
        assert_eq!(z[0].as_f64().unwrap(), 0.0);
        assert_eq!(z[1].as_f64().unwrap(), 0.0);
    }
    assert!(doc["max_pairing_concentration"].is_null());
}

#[test]
fn single_point_sweep_matches_observables() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), "n = 6\nbig_u = 1.0\ndelta = 0.0\nkappa = 0.5\ng_re = 0.4\n");
    let cfg = cfg.to_str().unwrap();
    let json = dir.path().join("obs.json");
    assert!(run(&["observables", "--config", cfg, "--out", json.to_str().unwrap()]).status.success());
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();

    let csv = dir.path().join("sweep.csv");
    let o = run(&["sweep", "--config", cfg, "--out", csv.to_str().unwrap(), "--axis", "delta=0.7:0.7:1", "--observables", "nbar"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = table(&std::fs::read_to_string(&csv).unwrap());
    assert_eq!(rows.len(), 1);
    let swept: f64 = field(&rows[0], "nbar").parse().unwrap();

    // the sweep point sits at Δ = 0.7U, the config at Δ = 0
    assert!((swept - doc["nbar"].as_f64().unwrap()).abs() > 1e-6);
    let cfg2 = config(dir.path(), "n = 6\nbig_u = 1.0\ndelta = 0.7\nkappa = 0.5\ng_re = 0.4\n");
    let json2 = dir.path().join("obs2.json");
    assert!(run(&["observables", "--config", cfg2.to_str().unwrap(), "--out", json2.to_str().unwrap()]).status.success());
    let doc2: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json2).unwrap()).unwrap();
    assert!((swept - doc2["nbar"].as_f64().unwrap()).abs() <= 1e-12 * swept.abs().max(1e-300));
}

#[test]
fn sweeps_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), "n = 8\ndims = [8]\nboundary = \"periodic\"\nbig_u = 1.0\ndelta = 0.0\nkappa = 0.1\ng_re = 0.2\nlambda_re = 0.25\n");
    let args = |out: &Path| {
        vec![
            "sweep".to_string(),
            "--config".into(),
            cfg.to_str().unwrap().into(),
            "--out".into(),
            out.to_str().unwrap().into(),
            "--axis".into(),
            "delta=-2:2:9".into(),
            "--observables".into(),
            "nbar,pairing,g2-far".into(),
        ]
    };
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let ra: Vec<String> = args(&a);
    let rb: Vec<String> = args(&b);
    assert!(run(&ra.iter().map(String::as_str).collect::<Vec<_>>()).status.success());
    assert!(run(&rb.iter().map(String::as_str).collect::<Vec<_>>()).status.success());
    let (ta, tb) = (std::fs::read_to_string(&a).unwrap(), std::fs::read_to_string(&b).unwrap());
    assert_eq!(ta, tb);
    assert_eq!(table(&ta).len(), 9);
}

#[test]
fn oracle_check_rejects_zero_loss() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), "n = 1\nbig_u = 1.0\ndelta = 0.0\nkappa = 0.5\ng_re = 0.3\n");
    let o = run(&["oracle-check", "--config", cfg.to_str().unwrap(), "--kappa-min", "0"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("resonance guard"));
}

#[test]
fn small_oracle_check_passes() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), "n = 2\nbig_u = 1.0\ndelta = 0.0\nkappa = 0.5\ng_re = 0.3\n");
    let o = run(&["oracle-check", "--config", cfg.to_str().unwrap(), "--draws", "3", "--seed", "5", "--kappa-min", "0.3"]);
    let text = stdout(&o);
    assert!(o.status.success(), "{text}\n{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 3);
}

#[test]
fn resonant_config_names_a_safe_loss() {
    let dir = TempDir::new().unwrap();
    // N = 2: Δ = 2U(n+1)/N is resonant at n = 0
    let cfg = config(dir.path(), "n = 2\nbig_u = 1.0\ndelta = 1.0\nkappa = 0.0\ng_re = 0.3\n");
    let o = run(&["observables", "--config", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("nearest safe loss rate"));
}

#[test]
fn wigner_grid_writes_all_cells() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), "n = 1\nbig_u = 1.0\ndelta = 0.2\nkappa = 0.5\ng_re = 0.8\n");
    let out = dir.path().join("w.csv");
    let o = run(&["wigner-grid", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--points", "5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("# schema: kerrlattice-wigner-grid/1"));
    let rows = table(&text);
    assert_eq!(rows.len(), 25);
    for r in &rows {
        assert!(field(r, "husimi_q").parse::<f64>().unwrap() >= 0.0);
    }
}
