mod common;

use std::fs;

use common::*;
use hewflow::compiler::ModelGraph;
use hewflow::engine::{classify, compare_outputs};
use hewflow::models::{synthetic_dataset, CLASS_THRESHOLD};
use serde_json::Value;
use tempfile::TempDir;

fn oracle(ws: &std::path::Path, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let model = ModelGraph::from_json(&fs::read_to_string(ws.join("model.json")).unwrap()).unwrap();
    rows.iter().map(|r| model.forward(r).unwrap()).collect()
}

#[test]
fn file_pipeline_matches_plaintext_model() {
    let dir = TempDir::new().unwrap();
    let ws = dir.path();
    setup(ws, "logistic", "5");
    let data = synthetic_dataset(30, 256, 5);
    write_csv(&ws.join("in.csv"), &data.samples);
    hewflow(ws, &["--seed", "5", "encrypt", "--input", ws.join("in.csv").to_str().unwrap()]).ok();
    hewflow(ws, &["infer"]).ok();
    hewflow(ws, &["decrypt"]).ok();

    let preds = read_predictions(&ws.join("predictions.csv"));
    assert_eq!(preds.len(), 256);
    let decoded: Vec<Vec<f64>> = preds.iter().map(|p| p.0.clone()).collect();
    for (scores, class) in &preds {
        assert_eq!(*class, classify(scores, CLASS_THRESHOLD));
    }
    let report = compare_outputs(&decoded, &oracle(ws, &data.samples), CLASS_THRESHOLD).unwrap();
    assert!(report.mean_deviation_pct < 0.2, "{report:?}");
    assert!(report.agreement_pct >= 99.8, "{report:?}");
}

#[test]
fn all_flag_combinations_decode_to_the_same_predictions() {
    let dir = TempDir::new().unwrap();
    let ws = dir.path();
    setup(ws, "logistic", "2");
    let rows = synthetic_dataset(30, 6, 2).samples;
    let csv = ws.join("in.csv");
    write_csv(&csv, &rows);
    let expected = oracle(ws, &rows);
    for packing in ["on", "off"] {
        hewflow(ws, &["encrypt", "--input", csv.to_str().unwrap(), "--batch-packing", packing]).ok();
        for fuse in ["on", "off"] {
            for rescale in ["eager", "off"] {
                hewflow(ws, &["infer", "--fuse", fuse, "--rescale", rescale, "--batch-packing", packing]).ok();
                hewflow(ws, &["decrypt"]).ok();
                let preds = read_predictions(&ws.join("predictions.csv"));
                for ((scores, _), want) in preds.iter().zip(&expected) {
                    assert!(
                        (scores[0] - want[0]).abs() < 1e-3,
                        "fuse={fuse} rescale={rescale} packing={packing}: {} vs {}",
                        scores[0],
                        want[0]
                    );
                }
            }
        }
    }
}

#[test]
fn unpacked_inputs_run_one_request_per_row() {
    let dir = TempDir::new().unwrap();
    let ws = dir.path();
    setup(ws, "logistic", "1");
    write_csv(&ws.join("in.csv"), &synthetic_dataset(30, 3, 1).samples);
    hewflow(ws, &["encrypt", "--input", ws.join("in.csv").to_str().unwrap(), "--batch-packing", "off"]).ok();
    let manifest: Value = serde_json::from_str(&fs::read_to_string(ws.join("inputs/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["requests"].as_array().unwrap().len(), 3);
    assert!(ws.join("inputs/r0002/f029.hect").exists());
    // packing flag must agree with how the inputs were encrypted
    assert_eq!(hewflow(ws, &["infer"]).code, 2);
    hewflow(ws, &["infer", "--fuse", "off", "--rescale", "off", "--batch-packing", "off"]).ok();
    let metrics: Value = serde_json::from_str(&fs::read_to_string(ws.join("outputs/metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["requests"], 3);
    // unfused logistic regression: 3 groups per request
    assert_eq!(metrics["dispatches"], 9);
}

#[test]
fn batches_split_inputs_into_requests() {
    let dir = TempDir::new().unwrap();
    let ws = dir.path();
    setup(ws, "logistic", "1");
    let rows = synthetic_dataset(30, 10, 1).samples;
    write_csv(&ws.join("in.csv"), &rows);
    hewflow(ws, &["encrypt", "--input", ws.join("in.csv").to_str().unwrap(), "--batch", "4"]).ok();
    let manifest: Value = serde_json::from_str(&fs::read_to_string(ws.join("inputs/manifest.json")).unwrap()).unwrap();
    let batches: Vec<u64> = manifest["requests"].as_array().unwrap().iter().map(|r| r["batch"].as_u64().unwrap()).collect();
    assert_eq!(batches, [4, 4, 2]);
    hewflow(ws, &["infer"]).ok();
    hewflow(ws, &["decrypt", "--rows", "7"]).ok();
    let preds = read_predictions(&ws.join("predictions.csv"));
    assert_eq!(preds.len(), 7);
    let expected = oracle(ws, &rows);
    for ((s, _), want) in preds.iter().zip(&expected) {
        assert!((s[0] - want[0]).abs() < 1e-3);
    }
    // a batch larger than the slot count is rejected
    let r = hewflow(ws, &["encrypt", "--input", ws.join("in.csv").to_str().unwrap(), "--batch", "1025"]);
    assert_eq!(r.code, 2, "{}", r.stderr);
}

#[test]
fn single_row_and_full_slot_batches() {
    let dir = TempDir::new().unwrap();
    let ws = dir.path();
    setup(ws, "logistic", "4");
    let rows = synthetic_dataset(30, 1024, 4).samples;
    for n in [1usize, 1024] {
        write_csv(&ws.join("in.csv"), &rows[..n]);
        hewflow(ws, &["encrypt", "--input", ws.join("in.csv").to_str().unwrap()]).ok();
        let m: Value = serde_json::from_str(&fs::read_to_string(ws.join("inputs/manifest.json")).unwrap()).unwrap();
        assert_eq!(m["requests"].as_array().unwrap().len(), 1);
        assert_eq!(m["requests"][0]["batch"], n);
        // one ciphertext per feature regardless of row count
        assert_eq!(m["requests"][0]["files"].as_array().unwrap().len(), 30);
    }
    hewflow(ws, &["infer"]).ok();
    hewflow(ws, &["decrypt"]).ok();
    assert_eq!(read_predictions(&ws.join("predictions.csv")).len(), 1024);
}

#[test]
fn zero_rows_flow_through_every_step() {
    let dir = TempDir::new().unwrap();
    let ws = dir.path();
    setup(ws, "logistic", "1");
    write_empty_csv(&ws.join("empty.csv"), 30);
    hewflow(ws, &["encrypt", "--input", ws.join("empty.csv").to_str().unwrap()]).ok();
    hewflow(ws, &["infer"]).ok();
    hewflow(ws, &["decrypt"]).ok();
    assert_eq!(fs::read_to_string(ws.join("predictions.csv")).unwrap(), "row,class\n");
}

#[test]
fn metrics_file_has_the_documented_fields() {
    let dir = TempDir::new().unwrap();
    let ws = dir.path();
    setup(ws, "logistic", "1");
    write_csv(&ws.join("in.csv"), &synthetic_dataset(30, 8, 1).samples);
    hewflow(ws, &["encrypt", "--input", ws.join("in.csv").to_str().unwrap()]).ok();
    hewflow(ws, &["infer"]).ok();
    let m: Value = serde_json::from_str(&fs::read_to_string(ws.join("outputs/metrics.json")).unwrap()).unwrap();
    for key in [
        "config",
        "params_hash",
        "limbs",
        "rows",
        "requests",
        "task_groups",
        "circuit_depth",
        "modulus_depth",
        "input_level",
        "wall_ms",
        "latency_ms_per_row",
        "throughput_rps",
        "dispatches",
        "op_counts",
        "avg_ciphertext_bytes",
        "peak_live_bytes",
        "handoff_bytes",
        "per_request",
    ] {
        assert!(m.get(key).is_some(), "missing {key}");
    }
    assert_eq!(m["config"]["fuse"], true);
    assert_eq!(m["config"]["rescale"], "eager");
    assert_eq!(m["rows"], 8);
    let req = &m["per_request"][0];
    for key in ["op_counts", "op_time_ns", "group_time_ns", "dispatches", "bytes_processed", "latency_ms"] {
        assert!(req.get(key).is_some(), "missing per_request.{key}");
    }
    let summed: u64 = m["op_counts"].as_object().unwrap().values().map(|v| v.as_u64().unwrap()).sum();
    let circuit: Value = serde_json::from_str(&fs::read_to_string(ws.join("circuit.json")).unwrap()).unwrap();
    let ops: usize = circuit["groups"].as_array().unwrap().iter().map(|g| g["ops"].as_array().unwrap().len()).sum();
    assert_eq!(summed as usize, ops);
}

#[test]
fn workspace_flag_overrides_environment() {
    let dir = TempDir::new().unwrap();
    let other = TempDir::new().unwrap();
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_hewflow"))
        .args(["--workspace", dir.path().to_str().unwrap(), "keygen", "--limbs", "3"])
        .env("HEWFLOW_WORKSPACE", other.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("params.json").exists());
    assert!(!other.path().join("params.json").exists());
}
