use std::fmt::Write as _;

use super::RowResult;

/// `Cluster(Pods) | CPU Usage (%) | Memory (MB) | Latency (ms)` table.
pub fn markdown_table(rows: &[RowResult]) -> String {
    let mut s = String::from("| Cluster(Pods) | CPU Usage (%) | Memory (MB) | Latency (ms) |\n|---|---|---|---|\n");
    for r in rows {
        let _ = writeln!(
            s,
            "| {} | {:.1} | {:.0} | {:.1} |",
            r.pods, r.cpu_pct, r.memory_mb, r.latency_ms
        );
    }
    s
}

/// Latency-vs-pods curve with the reference latency alongside.
pub fn curve_csv(rows: &[RowResult]) -> String {
    let mut s = String::from(
        "pods,cpu_pct,memory_mb,latency_ms,p95_latency_ms,throughput_rps,predicted_latency_ms,reference_latency_ms,latency_error\n",
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{},{:.3},{:.3},{:.3},{:.3},{:.3},{},{},{}",
            r.pods,
            r.cpu_pct,
            r.memory_mb,
            r.latency_ms,
            r.p95_latency_ms,
            r.throughput_rps,
            opt(r.predicted_latency_ms, 3),
            opt(r.reference.map(|t| t.latency_ms), 3),
            opt(r.latency_error, 5)
        );
    }
    s
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(String::new, |x| format!("{x:.digits$}"))
}
