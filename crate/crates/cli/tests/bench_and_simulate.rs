mod common;

use std::fs;

use common::*;
use hewflow::bench::BenchReport;
use serde_json::Value;
use tempfile::TempDir;

#[test]
fn bench_report_ratios_recompute_and_repetitions_are_recorded() {
    let dir = TempDir::new().unwrap();
    let ws = dir.path();
    let r = hewflow(ws, &["--seed", "3", "bench", "--scenario", "modswitch", "--reps", "6", "--batch", "256"]).ok();
    assert!(r.stdout.contains("6 timed repetitions after 1 warm-up"), "{}", r.stdout);
    let json = fs::read_to_string(ws.join("reports/bench-modswitch-logistic.json")).unwrap();
    let report: BenchReport = serde_json::from_str(&json).unwrap();
    assert!(report.ratios_consistent());
    assert_eq!(report.repetitions, 6);
    assert_eq!(report.warmup, 1);
    assert_eq!(report.seed, 3);
    for m in [&report.baseline, &report.optimized] {
        assert_eq!(m.raw_wall_ms.len(), 6);
        let median = hewflow::bench::median(&m.raw_wall_ms);
        assert!((median - m.wall_ms).abs() <= 1e-9 * m.wall_ms);
        assert!((m.latency_ms - m.wall_ms / 256.0).abs() <= 1e-9 * m.latency_ms);
    }
    let size = 1.0 - report.optimized.avg_ciphertext_bytes / report.baseline.avg_ciphertext_bytes;
    assert!((size - report.ratios.size_reduction).abs() <= 1e-9);
    let speedup = report.baseline.latency_ms / report.optimized.latency_ms;
    assert!((speedup - report.ratios.latency_speedup).abs() <= 1e-9 * speedup);
    let v: Value = serde_json::from_str(&json).unwrap();
    assert!(v["machine"]["logical_cpus"].as_u64().unwrap() >= 1);
    assert!(ws.join("reports/bench-modswitch-logistic.md").exists());
}

#[test]
fn bench_rejects_bad_requests() {
    let dir = TempDir::new().unwrap();
    let ws = dir.path();
    for args in [
        vec!["bench", "--scenario", "turbo"],
        vec!["bench", "--scenario", "fusion", "--reps", "4"],
        vec!["bench", "--scenario", "fusion", "--model", "resnet"],
        vec!["bench", "--scenario", "fusion", "--batch", "0"],
    ] {
        assert_eq!(hewflow(ws, &args).code, 2, "{args:?}");
    }
}

#[test]
fn fusion_bench_on_the_mlp() {
    let dir = TempDir::new().unwrap();
    let ws = dir.path();
    hewflow(ws, &["bench", "--scenario", "fusion", "--batch", "32"]).ok();
    let report: BenchReport =
        serde_json::from_str(&fs::read_to_string(ws.join("reports/bench-fusion-mlp.json")).unwrap()).unwrap();
    assert_eq!(report.baseline.dispatches, 9);
    assert_eq!(report.optimized.dispatches, 3);
    assert!(report.ratios_consistent());
}

#[test]
fn report_collects_bench_and_simulation_outputs() {
    let dir = TempDir::new().unwrap();
    let ws = dir.path();
    hewflow(ws, &["bench", "--scenario", "modswitch", "--batch", "64"]).ok();
    hewflow(ws, &["bench", "--scenario", "e2e", "--batch", "8"]).ok();
    hewflow(ws, &["simulate", "--horizon", "120"]).ok();
    hewflow(ws, &["report"]).ok();
    let md = fs::read_to_string(ws.join("reports/summary.md")).unwrap();
    assert!(md.contains("| Model | Baseline Latency (ms) | Optimized Latency (ms) | Speedup |"));
    assert!(md.contains("## modswitch"));
    assert!(md.contains("| Cluster(Pods) | CPU Usage (%) | Memory (MB) | Latency (ms) |"));
    let csv = fs::read_to_string(ws.join("reports/bench-summary.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);

    // a report whose stored ratios disagree with its measurements is refused
    let path = ws.join("reports/bench-modswitch-logistic.json");
    let mut v: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    v["ratios"]["latency_speedup"] = Value::from(v["ratios"]["latency_speedup"].as_f64().unwrap() * 1.01);
    fs::write(&path, serde_json::to_string(&v).unwrap()).unwrap();
    assert_eq!(hewflow(ws, &["report"]).code, 2);
}

fn sample_config() -> String {
    fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/autoscale.json")).unwrap()
}

#[test]
fn simulate_reference_mode_writes_table_and_curve() {
    let dir = TempDir::new().unwrap();
    let ws = dir.path();
    let r = hewflow(ws, &["simulate", "--horizon", "600"]).ok();
    assert!(r.stdout.contains("calibrated on 2 and 8 pods"));
    let table = fs::read_to_string(ws.join("reports/sim-table.md")).unwrap();
    assert_eq!(table, r.stdout.lines().skip(1).collect::<Vec<_>>().join("\n") + "\n");
    assert!(table.starts_with("| Cluster(Pods) | CPU Usage (%) | Memory (MB) | Latency (ms) |"));
    let csv = fs::read_to_string(ws.join("reports/sim-curve.csv")).unwrap();
    let lat: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
        .collect();
    assert_eq!(lat.len(), 4);
    assert!(lat.windows(2).all(|w| w[1] < w[0]), "{lat:?}");
    let cal: Value = serde_json::from_str(&fs::read_to_string(ws.join("reports/sim-calibration.json")).unwrap()).unwrap();
    assert_eq!(cal["calibration_rows"], serde_json::json!([2, 8]));

    // extra pod counts join the curve
    hewflow(ws, &["simulate", "--horizon", "300", "--pods", "3,10"]).ok();
    let csv = fs::read_to_string(ws.join("reports/sim-curve.csv")).unwrap();
    let pods: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(pods, ["2", "3", "4", "6", "8", "10"]);
}

#[test]
fn simulate_config_is_seed_deterministic() {
    let dir = TempDir::new().unwrap();
    let ws = dir.path();
    fs::write(ws.join("cfg.json"), sample_config()).unwrap();
    let cfg = ws.join("cfg.json");
    let cfg = cfg.to_str().unwrap();
    let read = || fs::read(ws.join("reports/sim-metrics.json")).unwrap();
    hewflow(ws, &["--seed", "5", "simulate", "--config", cfg]).ok();
    let a = read();
    hewflow(ws, &["--seed", "5", "simulate", "--config", cfg]).ok();
    assert_eq!(a, read());
    hewflow(ws, &["--seed", "6", "simulate", "--config", cfg]).ok();
    assert_ne!(a, read());
    let v: Value = serde_json::from_slice(&a).unwrap();
    assert!(v[0]["metrics"]["scale_ups"].as_u64().unwrap() >= 1);
}

#[test]
fn simulate_rejects_invalid_configs_with_field_paths() {
    let dir = TempDir::new().unwrap();
    let ws = dir.path();
    let base: Value = serde_json::from_str(&sample_config()).unwrap();
    let cases: Vec<(Box<dyn Fn(&mut Value)>, &str)> = vec![
        (Box::new(|v| v["cluster"]["min_pods"] = 9.into()), "cluster.min_pods"),
        (Box::new(|v| v["cluster"]["pod_templates"][1]["capacity"] = (-1.0).into()), "cluster.pod_templates[1].capacity"),
        (Box::new(|v| v["workload"]["arrival"]["rate"] = 0.into()), "workload.arrival.rate"),
        (Box::new(|v| v["workload"]["classes"][0]["weight"] = (-2.0).into()), "workload.classes[0].weight"),
        (Box::new(|v| v["cluster"]["policy"] = "fastest".into()), "cluster.policy"),
        (Box::new(|v| v["cluster"]["hpa_target_utilization"] = 1.5.into()), "cluster.hpa_target_utilization"),
    ];
    for (edit, path) in cases {
        let mut v = base.clone();
        edit(&mut v);
        fs::write(ws.join("bad.json"), v.to_string()).unwrap();
        let r = hewflow(ws, &["simulate", "--config", ws.join("bad.json").to_str().unwrap()]);
        assert_eq!(r.code, 2, "{path}: {}", r.stderr);
        assert!(r.stderr.contains(path), "expected {path} in: {}", r.stderr);
    }
    assert_eq!(hewflow(ws, &["simulate", "--config", ws.join("absent.json").to_str().unwrap()]).code, 2);
    assert_eq!(hewflow(ws, &["simulate", "--horizon", "-1"]).code, 2);
}
