//! Fits request cost and fixed overhead to measured (pods, CPU %, latency)
//! rows, and replays rows through the simulator.
//!
//! With `S` shards over `P` identical pods, a request occupies each pod for
//! `D = ⌈S/P⌉/S · K` (K = single-pod request cost). Pods see Poisson batch
//! arrivals of deterministic size, i.e. an M/D/1 queue, so mean latency is
//!
//! ```text
//! L = o + D · (1 + ρ / (2(1 − ρ)))
//! ```
//!
//! which is linear in (o, K); the fit is ordinary least squares.

use serde::{Deserialize, Serialize};

use super::{run_sim, ClusterConfig, PodSpec, RequestClass, SimConfig, WorkloadConfig};
use super::{Arrival, SchedulerPolicy};
use crate::error::{Error, Result};

/// Compute units per second of a reference pod: one unit is one
/// millisecond of single-pod work.
pub const REFERENCE_SPEED: f64 = 1000.0;
/// Input ciphertexts of one logistic-regression request (30 × 2 × 4 limbs × 2048 × 8 B).
const REFERENCE_REQUEST_BYTES: u64 = 30 * 2 * 4 * 2048 * 8;
const REFERENCE_DEPTH: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub pods: usize,
    pub cpu_pct: f64,
    pub memory_mb: f64,
    pub latency_ms: f64,
}

/// Reference cluster measurements of the optimized workflow.
pub const REFERENCE_ROWS: [TableRow; 4] = [
    TableRow { pods: 2, cpu_pct: 83.1, memory_mb: 3125.0, latency_ms: 128.4 },
    TableRow { pods: 4, cpu_pct: 76.5, memory_mb: 3189.0, latency_ms: 89.7 },
    TableRow { pods: 6, cpu_pct: 70.4, memory_mb: 3215.0, latency_ms: 62.3 },
    TableRow { pods: 8, cpu_pct: 69.1, memory_mb: 3274.0, latency_ms: 59.8 },
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub shards: usize,
    /// Single-pod compute time of one request.
    pub request_cost_ms: f64,
    pub overhead_ms: f64,
    /// Relative fit error per input row.
    pub residuals: Vec<f64>,
}

/// M/D/1 sojourn factor for a pod at utilization `rho`, per unit service.
pub fn queue_factor(rho: f64) -> f64 {
    1.0 + rho / (2.0 * (1.0 - rho))
}

fn share(pods: usize, shards: usize) -> f64 {
    shards.div_ceil(pods) as f64 / shards as f64
}

/// Regressor multiplying K for one row; `utilization` is the cluster mean.
fn feature(pods: usize, utilization: f64, shards: usize) -> f64 {
    let s = share(pods, shards);
    // The busiest pod carries ⌈S/P⌉ shards of every request.
    let rho = utilization * s * pods as f64;
    s * queue_factor(rho)
}

pub fn predict_latency_ms(cal: &Calibration, pods: usize, utilization: f64) -> f64 {
    cal.overhead_ms + cal.request_cost_ms * feature(pods, utilization, cal.shards)
}

pub fn calibrate(rows: &[TableRow], shards: usize) -> Result<Calibration> {
    if rows.len() < 2 {
        return Err(Error::Degenerate(format!(
            "calibration needs at least 2 rows, got {}",
            rows.len()
        )));
    }
    if shards == 0 {
        return Err(Error::Config("shards must be at least 1".into()));
    }
    let mut xs = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        if r.pods == 0 {
            return Err(Error::Config(format!("row {i}: pods must be at least 1")));
        }
        let rho = r.cpu_pct / 100.0 * share(r.pods, shards) * r.pods as f64;
        if !(r.cpu_pct > 0.0 && rho < 1.0) {
            return Err(Error::Config(format!("row {i}: CPU {}% is not a stable load", r.cpu_pct)));
        }
        if !(r.latency_ms > 0.0 && r.latency_ms.is_finite()) {
            return Err(Error::Config(format!("row {i}: latency must be positive")));
        }
        xs.push(feature(r.pods, r.cpu_pct / 100.0, shards));
    }
    let n = rows.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = rows.iter().map(|r| r.latency_ms).sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 1e-12 * mx * mx {
        return Err(Error::Degenerate(
            "rows do not separate cost from overhead (identical operating points)".into(),
        ));
    }
    let sxy: f64 = xs.iter().zip(rows).map(|(x, r)| (x - mx) * (r.latency_ms - my)).sum();
    let k = sxy / sxx;
    let o = my - k * mx;
    if k <= 0.0 {
        return Err(Error::Degenerate(format!("fitted request cost {k:.3} ms is not positive")));
    }
    if o < 0.0 {
        return Err(Error::Degenerate(format!("fitted overhead {o:.3} ms is negative")));
    }
    let residuals = xs
        .iter()
        .zip(rows)
        .map(|(x, r)| (o + k * x - r.latency_ms) / r.latency_ms)
        .collect();
    Ok(Calibration {
        shards,
        request_cost_ms: k,
        overhead_ms: o,
        residuals,
    })
}

/// Fixed-size cluster of reference pods driven at `utilization`.
pub fn row_config(cal: &Calibration, pods: usize, utilization: f64, horizon_s: f64, seed: u64) -> SimConfig {
    let pod = PodSpec {
        capacity: REFERENCE_SPEED,
        accel_multiplier: 1.0,
        startup_delay_s: 0.0,
        base_memory_mb: 3000.0,
    };
    let mut cluster = ClusterConfig::fixed(pods, pod);
    cluster.policy = SchedulerPolicy::PriorityDepth;
    // λ·K/(P·v) = utilization
    let rate = utilization * pods as f64 * REFERENCE_SPEED / cal.request_cost_ms;
    SimConfig {
        cluster,
        workload: WorkloadConfig {
            arrival: Arrival::Poisson { rate },
            horizon_s,
            classes: vec![RequestClass {
                name: "logistic".into(),
                cost_units: Some(cal.request_cost_ms),
                op_counts: None,
                modulus_depth: REFERENCE_DEPTH,
                ciphertext_bytes: REFERENCE_REQUEST_BYTES,
                weight: 1.0,
            }],
            shards: cal.shards,
            dispatch_overhead_ms: cal.overhead_ms,
        },
        unit_costs: None,
        seed,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowResult {
    pub pods: usize,
    pub cpu_pct: f64,
    pub memory_mb: f64,
    pub latency_ms: f64,
    pub p95_latency_ms: f64,
    pub throughput_rps: f64,
    pub predicted_latency_ms: Option<f64>,
    pub reference: Option<TableRow>,
    /// (simulated − reference) / reference latency.
    pub latency_error: Option<f64>,
}

impl RowResult {
    /// A row for a run with no reference measurement.
    pub fn from_metrics(pods: usize, m: &super::SimMetrics) -> Self {
        Self {
            pods,
            cpu_pct: m.mean_utilization * 100.0,
            memory_mb: m.memory_per_pod_mb,
            latency_ms: m.mean_latency_ms,
            p95_latency_ms: m.p95_latency_ms,
            throughput_rps: m.throughput_rps,
            predicted_latency_ms: None,
            reference: None,
            latency_error: None,
        }
    }
}

/// Simulates each row at its own offered load.
pub fn reproduce_rows(cal: &Calibration, rows: &[TableRow], horizon_s: f64, seed: u64) -> Result<Vec<RowResult>> {
    rows.iter()
        .map(|r| {
            let u = r.cpu_pct / 100.0;
            let m = run_sim(&row_config(cal, r.pods, u, horizon_s, seed))?;
            Ok(RowResult {
                predicted_latency_ms: Some(predict_latency_ms(cal, r.pods, u)),
                reference: Some(*r),
                latency_error: Some((m.mean_latency_ms - r.latency_ms) / r.latency_ms),
                ..RowResult::from_metrics(r.pods, &m)
            })
        })
        .collect()
}
