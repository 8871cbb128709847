//! End-to-end checks of the `conespec` command line: exit-code contract,
//! deterministic outputs, diagnostics, and schema validity of the JSON files.

use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_conespec"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("conespec_cli_{tag}_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

/// Minimal structural JSON-schema check: `type`, `required`, `properties`,
/// `items`. Enough to pin the shipped schemas to the emitted documents.
fn validate(schema: &Value, value: &Value, path: &str) -> std::result::Result<(), String> {
    if let Some(ty) = schema.get("type") {
        let allowed: Vec<String> = match ty {
            Value::String(s) => vec![s.clone()],
            Value::Array(a) => a
                .iter()
                .filter_map(|v| v.as_str().map(String::from))
                .collect(),
            _ => vec![],
        };
        let actual = match value {
            Value::Null => "null",
            Value::Bool(_) => "boolean",
            Value::Number(n) => {
                if n.is_i64() || n.is_u64() {
                    "integer"
                } else {
                    "number"
                }
            }
            Value::String(_) => "string",
            Value::Array(_) => "array",
            Value::Object(_) => "object",
        };
        let ok = allowed
            .iter()
            .any(|t| t == actual || (t == "number" && actual == "integer"));
        if !ok {
            return Err(format!("{path}: expected {allowed:?}, got {actual}"));
        }
    }
    if let Some(required) = schema.get("required").and_then(|r| r.as_array()) {
        for key in required {
            let key = key.as_str().unwrap();
            if value.get(key).is_none() {
                return Err(format!("{path}: missing required field {key:?}"));
            }
        }
    }
    if let (Some(props), Some(obj)) = (
        schema.get("properties").and_then(|p| p.as_object()),
        value.as_object(),
    ) {
        for (key, sub) in props {
            if let Some(v) = obj.get(key) {
                validate(sub, v, &format!("{path}.{key}"))?;
            }
        }
    }
    if let (Some(items), Some(arr)) = (schema.get("items"), value.as_array()) {
        for (i, v) in arr.iter().enumerate() {
            validate(items, v, &format!("{path}[{i}]"))?;
        }
    }
    Ok(())
}

fn load_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn schema(name: &str) -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("schemas")
        .join(name);
    load_json(&path)
}

#[test]
fn analyze_gaussian_pair_writes_report_and_verdicts() {
    // frozen golden verdicts from the certificate gates: the pair is
    // certifiable from roughly gamma = 10 upward
    let out8 = temp_dir("analyze8");
    let status = bin()
        .args([
            "analyze",
            "--preset",
            "gaussian-pair",
            "--gamma",
            "8",
            "--out",
            out8.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let text = std::fs::read_to_string(out8.join("report.txt")).unwrap();
    assert!(text.contains("verdict: NotWellSeparated"), "{text}");
    let report = load_json(&out8.join("report.json"));
    validate(&schema("report.schema.json"), &report, "report").unwrap();
    assert_eq!(report["verdict"], "not-well-separated");

    let out12 = temp_dir("analyze12");
    let status = bin()
        .args([
            "analyze",
            "--preset",
            "gaussian-pair",
            "--gamma",
            "12",
            "--out",
            out12.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let report = load_json(&out12.join("report.json"));
    assert_eq!(report["verdict"], "well-separated");
    assert_eq!(report["flag_tau_gap"], Value::Bool(true));
    assert_eq!(report["flag_tau_small"], Value::Bool(true));
}

#[test]
fn analyze_overlapping_pair_is_not_separated() {
    let out = temp_dir("analyze05");
    let status = bin()
        .args([
            "analyze",
            "--preset",
            "gaussian-pair",
            "--gamma",
            "0.5",
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    // exit 2 (indeterminate) or a definite negative verdict both satisfy the contract
    let code = status.code().unwrap();
    assert!(code == 0 || code == 2, "exit {code}");
    let report = load_json(&out.join("report.json"));
    let s = report["overlap"].as_f64().unwrap();
    assert!(s > 0.5, "overlap {s}");
    assert_ne!(report["verdict"], "well-separated");
}

#[test]
fn analyze_missing_config_names_the_path() {
    let output = bin()
        .args(["analyze", "--config", "/nonexistent/model.json"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("/nonexistent/model.json"), "{stderr}");
}

#[test]
fn analyze_from_json_config_with_table_component() {
    let dir = temp_dir("config_table");
    let table = dir.join("bump.csv");
    // triangle density on [0, 1]
    let mut rows = String::from("x,density\n");
    for i in 0..=40 {
        let x = i as f64 / 40.0;
        let y = if x < 0.5 { 4.0 * x } else { 4.0 * (1.0 - x) };
        rows.push_str(&format!("{x},{y}\n"));
    }
    std::fs::write(&table, rows).unwrap();
    let config = dir.join("model.json");
    std::fs::write(
        &config,
        serde_json::json!({
            "domain": {"type": "interval", "a": 0.0, "b": 4.0},
            "components": [
                {"kind": "table", "path": "bump.csv"},
                {"kind": "uniform", "a": 3.0, "b": 4.0}
            ],
            "weights": [0.5, 0.5],
            "resolution": 512
        })
        .to_string(),
    )
    .unwrap();
    let out = dir.join("out");
    let status = bin()
        .args([
            "analyze",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let report = load_json(&out.join("report.json"));
    // disjoint supports: overlap 0, so tau is unavailable (C fine but NS = 0 gate passes);
    // with S = 0 the model is trivially separable when Theta is positive
    let s = report["overlap"].as_f64().unwrap();
    assert!(s < 1e-12);
}

#[test]
fn embed_two_circles_below_gap_exits_one_with_diagnostic() {
    let out = temp_dir("embed2c");
    let output = bin()
        .args([
            "embed",
            "--preset",
            "two-circles",
            "--n",
            "400",
            "--seed",
            "3",
            "--epsilon",
            "0.3",
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("2 components"), "{stderr}");
    assert!(stderr.contains("connecting epsilon"), "{stderr}");
}

#[test]
fn embed_is_byte_deterministic() {
    let out_a = temp_dir("embed_det_a");
    let out_b = temp_dir("embed_det_b");
    for out in [&out_a, &out_b] {
        // explicit epsilon: gaussian tails thin out and need a wider scale
        // than the bounded-density default to stay connected at n = 500
        let status = bin()
            .args([
                "embed",
                "--preset",
                "gaussian-pair",
                "--gamma",
                "6",
                "--n",
                "500",
                "--seed",
                "11",
                "--epsilon",
                "0.8",
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
    }
    let a = std::fs::read(out_a.join("embedding.csv")).unwrap();
    let b = std::fs::read(out_b.join("embedding.csv")).unwrap();
    assert_eq!(a, b);
    let ja = std::fs::read(out_a.join("eigenvalues.json")).unwrap();
    let jb = std::fs::read(out_b.join("eigenvalues.json")).unwrap();
    assert_eq!(ja, jb);
    validate(
        &schema("eigenvalues.schema.json"),
        &load_json(&out_a.join("eigenvalues.json")),
        "eigenvalues",
    )
    .unwrap();
}

#[test]
fn embed_exports_matrix_market_on_request() {
    let out = temp_dir("embed_mm");
    let status = bin()
        .args([
            "embed",
            "--preset",
            "uniform-circle",
            "--n",
            "300",
            "--seed",
            "5",
            "--export-matrix",
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let mm = std::fs::read_to_string(out.join("laplacian.mtx")).unwrap();
    assert!(mm.starts_with("%%MatrixMarket matrix coordinate real symmetric"));
}

#[test]
fn cones_on_orthogonal_clusters_reaches_zero_delta() {
    let out = temp_dir("cones_synth");
    let status = bin()
        .args([
            "cones",
            "--preset",
            "orthogonal-clusters",
            "--n",
            "300",
            "--seed",
            "2",
            "--N",
            "2",
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let pareto = std::fs::read_to_string(out.join("pareto.csv")).unwrap();
    assert!(pareto.lines().next().unwrap() == "sigma,r,delta,status");
    let zero_rows = pareto
        .lines()
        .skip(1)
        .filter(|l| l.split(',').nth(2).map(|d| d == "0") == Some(true))
        .count();
    assert!(zero_rows > 0, "no delta = 0 rows in:\n{pareto}");
    let cones = load_json(&out.join("cones.json"));
    validate(&schema("cones.schema.json"), &cones, "cones").unwrap();
    assert_eq!(cones["status"], "detected");
}

#[test]
fn cones_rejects_too_many_cones() {
    let dir = temp_dir("cones_badn");
    let emb = dir.join("embedding.csv");
    std::fs::write(&emb, "u1,u2\n1.0,0.0\n0.0,1.0\n").unwrap();
    let status = bin()
        .args([
            "cones",
            "--embedding",
            emb.to_str().unwrap(),
            "--N",
            "5",
            "--out",
            dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(1));
}

#[test]
fn cones_from_embedding_csv() {
    let dir = temp_dir("cones_csv");
    // write a tiny embedding by hand
    let mut text = String::from("u1,u2\n");
    for i in 0..60 {
        if i % 2 == 0 {
            text.push_str("1.4,0.01\n");
        } else {
            text.push_str("0.01,1.35\n");
        }
    }
    let emb = dir.join("embedding.csv");
    std::fs::write(&emb, text).unwrap();
    let status = bin()
        .args([
            "cones",
            "--embedding",
            emb.to_str().unwrap(),
            "--N",
            "2",
            "--out",
            dir.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let cones = load_json(&dir.join("cones.json"));
    assert_eq!(cones["delta"], 0.0);
}

#[test]
fn embed_from_points_csv_with_trace() {
    let dir = temp_dir("embed_points");
    let mut csv = String::from("x,y\n");
    let mut rng_state = 17u64;
    let mut next = || {
        rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1);
        (rng_state >> 11) as f64 / (1u64 << 53) as f64
    };
    for _ in 0..600 {
        csv.push_str(&format!("{},{}\n", next() * 2.0, next()));
    }
    let points = dir.join("cloud.csv");
    std::fs::write(&points, csv).unwrap();
    let status = bin()
        .args([
            "embed",
            "--points",
            points.to_str().unwrap(),
            "--epsilon",
            "0.35",
            "--N",
            "3",
            "--trace-eigen",
            "--out",
            dir.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let emb = std::fs::read_to_string(dir.join("embedding.csv")).unwrap();
    assert!(emb.starts_with("u1,u2,u3\n"));
    assert_eq!(emb.lines().count(), 601);
    let trace = std::fs::read_to_string(dir.join("residual_history.csv")).unwrap();
    assert!(trace.starts_with("iteration,worst_residual\n"));
}

#[test]
fn thread_cap_is_respected_and_output_stable() {
    let out_a = temp_dir("threads_a");
    let out_b = temp_dir("threads_b");
    for (out, threads) in [(&out_a, "1"), (&out_b, "4")] {
        let status = bin()
            .env("CONESPEC_THREADS", threads)
            .args([
                "embed",
                "--preset",
                "uniform-circle",
                "--n",
                "400",
                "--seed",
                "9",
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
    }
    let a = std::fs::read(out_a.join("embedding.csv")).unwrap();
    let b = std::fs::read(out_b.join("embedding.csv")).unwrap();
    assert_eq!(a, b, "outputs differ across thread pool sizes");
}

#[test]
fn analyze_bad_dumbbell_partition_is_not_separated() {
    let out = temp_dir("analyze_bad_dumbbell");
    let status = bin()
        .args([
            "analyze",
            "--preset",
            "dumbbell",
            "--partition",
            "bad",
            "--resolution",
            "128",
            "--quad-nodes",
            "1025",
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let report = load_json(&out.join("report.json"));
    assert_ne!(report["verdict"], "well-separated");
}

#[test]
fn sweep_gaussian_offsets_and_resume() {
    let out = temp_dir("sweep_gauss");
    let run = || {
        bin()
            .args([
                "sweep",
                "--kind",
                "gaussian-gamma",
                "--values",
                "1,2,4,8",
                "--n",
                "400",
                "--seed",
                "3",
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap()
    };
    assert_eq!(run().code(), Some(0));
    let first = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let rows: Vec<&str> = first.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    // S strictly decreasing along gamma, C <= gamma^2 S / 8 per row
    let mut prev_s = f64::INFINITY;
    for row in &rows {
        let cols: Vec<&str> = row.split(',').collect();
        let gamma: f64 = cols[2].parse().unwrap();
        let s: f64 = cols[6].parse().unwrap();
        let c: f64 = cols[7].parse().unwrap();
        assert!(s < prev_s, "S not decreasing at gamma={gamma}");
        assert!(
            c <= gamma * gamma / 8.0 * s + 1e-8,
            "C bound fails at gamma={gamma}"
        );
        prev_s = s;
    }
    // resumable: a second run adds nothing
    assert_eq!(run().code(), Some(0));
    let second = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn sweep_dumbbell_vartheta_bounds() {
    let out = temp_dir("sweep_dumbbell");
    let status = bin()
        .args([
            "sweep",
            "--kind",
            "dumbbell-vartheta",
            "--values",
            "0.05,0.02,0.01",
            "--n",
            "400",
            "--seed",
            "3",
            "--quad-nodes",
            "1025",
            "--resolution",
            "128",
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let text = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    for row in text.lines().skip(1) {
        let cols: Vec<&str> = row.split(',').collect();
        let vartheta: f64 = cols[2].parse().unwrap();
        let s: f64 = cols[6].parse().unwrap();
        assert!(
            s <= 16.0 * vartheta * 0.1 + 1e-10,
            "S bound fails at vartheta={vartheta}: S={s}"
        );
    }
}
