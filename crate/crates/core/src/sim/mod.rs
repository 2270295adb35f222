//! Discrete-event model of an autoscaled inference cluster.
//!
//! Requests arrive (open-loop Poisson or closed-loop clients), pass through
//! a fixed dispatch delay and fan out into equal shards. Each shard is placed
//! on a pod by the scheduler; a pod serves its FIFO queue at
//! `capacity × accel_multiplier` units/s. A horizontal autoscaler samples
//! utilization every evaluation interval. Pod-count changes follow the
//! replica formula.

mod calibrate;
mod config;
mod des;
mod report;

use rand::distributions::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

pub use calibrate::{
    calibrate, predict_latency_ms, queue_factor, reproduce_rows, row_config, Calibration, RowResult, TableRow,
    REFERENCE_ROWS, REFERENCE_SPEED,
};
pub use config::{
    Arrival, ClusterConfig, PodSpec, RequestClass, SchedulerPolicy, SimConfig, UnitCosts, WorkloadConfig,
};
pub use des::{run_sim, run_workload, PodSample, SimMetrics, TaskRecord, UtilSample};
pub use report::{curve_csv, markdown_table};

use crate::error::Result;
use crate::ring::rng_from_seed;

/// Slack for the replica ceiling so float noise at exact ratios does not
/// add a pod.
const HPA_CEIL_GUARD: f64 = 1e-9;

/// One inference request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: usize,
    pub arrival_s: f64,
    /// Index into the workload's request classes.
    pub circuit: usize,
    pub cost_units: f64,
    pub modulus_depth: usize,
    pub ciphertext_bytes: u64,
    /// Issuing client in closed-loop workloads.
    pub client: Option<usize>,
}

/// The schedulable unit: one shard of a request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub request: usize,
    pub arrival_s: f64,
    pub circuit: usize,
    pub cost_units: f64,
    pub modulus_depth: usize,
    pub bytes: u64,
}

/// Scheduler's view of one pod.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PodView {
    pub id: usize,
    pub speed: f64,
    /// Queued plus in-service tasks.
    pub queue_len: usize,
    /// Ready and not draining.
    pub accepting: bool,
}

/// Arrival stream for `workload`. Closed-loop workloads yield each client's
/// first request; follow-ups depend on completions and are drawn by the
/// simulator. Same seed, same stream.
pub fn generate_workload(workload: &WorkloadConfig, unit_costs: Option<&UnitCosts>, seed: u64) -> Result<Vec<Request>> {
    let costs = workload.validate(unit_costs)?;
    let mut rng = rng_from_seed(seed ^ 0xa221_7a15);
    let picker = ClassPicker::new(workload)?;
    let mut out = Vec::new();
    match workload.arrival {
        Arrival::Poisson { rate } => {
            let gap = Exp::new(rate).expect("validated rate");
            let mut t = gap.sample(&mut rng);
            while t < workload.horizon_s {
                let c = picker.pick(&mut rng);
                out.push(make_request(workload, &costs, out.len(), t, c, None));
                t += gap.sample(&mut rng);
            }
        }
        Arrival::ClosedLoop { clients, think_time_s } => {
            for client in 0..clients {
                let t = think_sample(think_time_s, &mut rng);
                if t < workload.horizon_s {
                    let c = picker.pick(&mut rng);
                    out.push(make_request(workload, &costs, 0, t, c, Some(client)));
                }
            }
            out.sort_by(|a, b| a.arrival_s.total_cmp(&b.arrival_s));
            for (i, r) in out.iter_mut().enumerate() {
                r.id = i;
            }
        }
    }
    Ok(out)
}

pub(crate) fn think_sample<R: Rng>(mean: f64, rng: &mut R) -> f64 {
    if mean == 0.0 {
        0.0
    } else {
        Exp::new(1.0 / mean).expect("positive mean").sample(rng)
    }
}

pub(crate) struct ClassPicker(Option<WeightedIndex<f64>>);

impl ClassPicker {
    pub(crate) fn new(workload: &WorkloadConfig) -> Result<Self> {
        if workload.classes.len() == 1 {
            return Ok(Self(None));
        }
        let w = WeightedIndex::new(workload.classes.iter().map(|c| c.weight))
            .map_err(|e| crate::Error::Config(format!("workload.classes weights: {e}")))?;
        Ok(Self(Some(w)))
    }

    pub(crate) fn pick<R: Rng>(&self, rng: &mut R) -> usize {
        self.0.as_ref().map_or(0, |w| w.sample(rng))
    }
}

pub(crate) fn make_request(
    workload: &WorkloadConfig,
    costs: &[f64],
    id: usize,
    t: f64,
    circuit: usize,
    client: Option<usize>,
) -> Request {
    let class = &workload.classes[circuit];
    Request {
        id,
        arrival_s: t,
        circuit,
        cost_units: costs[circuit],
        modulus_depth: class.modulus_depth,
        ciphertext_bytes: class.ciphertext_bytes,
        client,
    }
}

/// Picks a pod for `task`, or `None` when no pod accepts work.
///
/// `PriorityDepth`: tasks at or above `depth_threshold` go to the fastest
/// pod (capacity × multiplier); ties, and all shallower tasks, go to the
/// shortest queue, then the lowest id. `RoundRobin`: the next accepting pod
/// after `cursor`, cyclically by id; `cursor` is updated.
pub fn schedule(
    task: &Task,
    pods: &[PodView],
    policy: SchedulerPolicy,
    depth_threshold: usize,
    cursor: &mut Option<usize>,
) -> Option<usize> {
    let open = || pods.iter().filter(|p| p.accepting);
    let pick = match policy {
        SchedulerPolicy::PriorityDepth => {
            let by_queue = |a: &&PodView, b: &&PodView| a.queue_len.cmp(&b.queue_len).then(a.id.cmp(&b.id));
            if task.modulus_depth >= depth_threshold {
                let fastest = open().map(|p| p.speed).fold(f64::NEG_INFINITY, f64::max);
                open().filter(|p| p.speed == fastest).min_by(by_queue)
            } else {
                open().min_by(by_queue)
            }
        }
        SchedulerPolicy::RoundRobin => {
            let after = |p: &&PodView| cursor.map_or(true, |c| p.id > c);
            open()
                .filter(after)
                .min_by_key(|p| p.id)
                .or_else(|| open().min_by_key(|p| p.id))
        }
    }?;
    *cursor = Some(pick.id);
    Some(pick.id)
}

/// Replica formula: `clamp(ceil(current × utilization / target), min, max)`.
pub fn hpa_step(current: usize, utilization: f64, cluster: &ClusterConfig) -> usize {
    let raw = current as f64 * utilization / cluster.hpa_target_utilization;
    let desired = if raw.is_finite() {
        (raw - HPA_CEIL_GUARD).ceil().max(0.0) as usize
    } else {
        cluster.max_pods
    };
    desired.clamp(cluster.min_pods, cluster.max_pods)
}
