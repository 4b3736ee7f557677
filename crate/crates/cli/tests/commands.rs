use std::f64::consts::PI;
use std::process::{Command, Output};

use symnet_core::fourier::p_k_pi_uniform;

const BIN: &str = env!("CARGO_BIN_EXE_symnet");

fn symnet(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Rows of the named table as `column -> cell` lookups.
fn table(text: &str, name: &str) -> Vec<Vec<(String, String)>> {
    let mut lines = text
        .lines()
        .skip_while(|l| *l != format!("# table: {name}"))
        .skip(1)
        .take_while(|l| !l.is_empty());
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    lines
        .map(|l| header.iter().cloned().zip(l.split(',').map(String::from)).collect())
        .collect()
}

fn get<'a>(row: &'a [(String, String)], col: &str) -> &'a str {
    &row.iter().find(|(c, _)| c == col).unwrap().1
}

fn num(row: &[(String, String)], col: &str) -> f64 {
    get(row, col).parse().unwrap()
}

#[test]
fn full_circle_modes_report_p() {
    let o = symnet(&["clustering", "--p", "0.2", "--phi", &PI.to_string(), "--modes", "closed,leading,quadrature,lattice,mc", "--trials", "50"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for r in table(&text, "clustering") {
        let tol = match get(&r, "mode") {
            "mc" => 3.0 * num(&r, "std_error"),
            _ => num(&r, "error_estimate") + 1e-12,
        };
        assert!((num(&r, "value") - 0.2).abs() <= tol, "{r:?}");
    }
}

#[test]
fn zero_width_window_is_a_config_error() {
    let o = symnet(&["clustering", "--phi", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mean degree is zero"));
}

#[test]
fn closed_and_quadrature_agree() {
    let o = symnet(&["clustering", "--p", "0.1", "--phi", "1", "--modes", "closed,quadrature"]);
    let rows = table(&stdout(&o), "agreement");
    assert_eq!(rows.len(), 1);
    assert_eq!(get(&rows[0], "status"), "pass");
    assert!(num(&rows[0], "delta").abs() < num(&rows[0], "tolerance"));
}

#[test]
fn separation_rows() {
    let o = symnet(&["separation", "--p", "0.05", "--phi", "0.5", "--radius", "20", "--modes", "closed,mc", "--trials", "300"]);
    assert!(o.status.success());
    let rows = table(&stdout(&o), "separation");
    for r in rows.iter().filter(|r| get(r, "k") == "0" && get(r, "mode") == "kernel") {
        let b = num(r, "b");
        let q = if b <= 0.5 { 0.05 } else { 0.0 };
        assert_eq!(num(r, "value"), q);
    }
    let n = 2.0 * 20.0 * 0.05 * 0.5;
    for k in [1u32, 2] {
        let r = rows
            .iter()
            .find(|r| get(r, "k") == k.to_string() && get(r, "mode") == "closed" && num(r, "b") == PI)
            .unwrap();
        let want = p_k_pi_uniform(0.05, 0.5, n, k, 1 << 20).unwrap().value.value;
        assert_eq!(num(r, "value"), want);
    }
    assert!(rows.iter().any(|r| get(r, "mode") == "mc_histogram" && !get(r, "std_error").is_empty()));
    assert!(rows.iter().any(|r| get(r, "mode") == "mc_chains" && get(r, "trials") == "300"));
}

#[test]
fn sweep_endpoints() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(BIN)
        .args(["sweep-phi", "--p", "0.3", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    let left = std::fs::read_to_string(dir.path().join("clustering_ratio.csv")).unwrap();
    let right = std::fs::read_to_string(dir.path().join("separation_pi.csv")).unwrap();
    assert!(left.contains("# schema: "));
    let at = |text: &str, phi: f64| -> Vec<f64> {
        text.lines()
            .filter(|l| !l.starts_with('#'))
            .skip(1)
            .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect::<Vec<f64>>())
            .min_by(|a, b| (a[0] - phi).abs().total_cmp(&(b[0] - phi).abs()))
            .unwrap()
    };
    assert_eq!(at(&left, PI)[1], 1.0);
    assert!((at(&left, 1.0)[1] - 0.75).abs() < 1e-3);
    let end = at(&right, PI);
    for v in end[1..].iter().step_by(2) {
        assert!((v - 0.3 / PI).abs() < 1e-12);
    }
}

#[test]
fn validation_battery() {
    let o = symnet(&["mc-validate", "--seed", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let again = symnet(&["mc-validate", "--seed", "5"]);
    assert_eq!(o.stdout, again.stdout);

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("m2.json");
    std::fs::write(&cfg, r#"{"compute": {"truncation": 2}}"#).unwrap();
    let bad = symnet(&["mc-validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(1));
    let rows = table(&stdout(&bad), "checks");
    let r = rows
        .iter()
        .find(|r| get(r, "check") == "clustering: series vs quadrature")
        .unwrap();
    assert_eq!(get(r, "status"), "fail");
}

#[test]
fn config_file_and_json_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{
            "model": {"kernel": {"product": {"factors": [
                {"uniform_window": {"p": 0.4, "phi": 0.6}},
                {"uniform_window": {"p": 0.5, "phi": 1.0}}
            ]}}},
            "mc": {"dims": [40, 30], "trials": 20, "seed": 1},
            "compute": {"modes": ["leading", "quadrature", "mc"]}
        }"#,
    )
    .unwrap();
    let out = dir.path().join("c.json");
    let o = symnet(&["clustering", "--config", cfg.to_str().unwrap(), "--format", "json", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["command"], "clustering");
    assert_eq!(doc["config_sha256"].as_str().unwrap().len(), 64);
    let rows = doc["tables"][0]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    let lead = rows[0][1].as_f64().unwrap();
    let quad = rows[1][1].as_f64().unwrap();
    assert!((lead - quad).abs() < 1e-6 * quad);
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"model": {"kernel": {"uniform_window": {"p": 1.2, "phi": 1}}}}"#).unwrap();
    let o = symnet(&["kernel-info", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("p out of [0,1]"));
    assert_eq!(symnet(&["clustering", "--config", "/nonexistent.json"]).status.code(), Some(2));
    assert_eq!(symnet(&["clustering", "--modes", "fast"]).status.code(), Some(2));
}

#[test]
fn kernel_info_lists_coefficients() {
    let o = symnet(&["kernel-info", "--p", "0.2", "--phi", "1.5707963267948966"]);
    let rows = table(&stdout(&o), "coefficients");
    assert!((num(&rows[1], "a_n") - 0.2 / PI).abs() < 1e-15);
}
