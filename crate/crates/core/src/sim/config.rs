use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::compiler::OpKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PodSpec {
    /// Compute units per second.
    pub capacity: f64,
    /// Vectorized-arithmetic speedup of this node class (≥ 1).
    #[serde(default = "one_f64")]
    pub accel_multiplier: f64,
    #[serde(default)]
    pub startup_delay_s: f64,
    #[serde(default = "default_base_memory")]
    pub base_memory_mb: f64,
}

fn one_f64() -> f64 {
    1.0
}

fn default_base_memory() -> f64 {
    3000.0
}

impl PodSpec {
    pub fn speed(&self) -> f64 {
        self.capacity * self.accel_multiplier
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulerPolicy {
    PriorityDepth,
    RoundRobin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterConfig {
    pub min_pods: usize,
    pub max_pods: usize,
    /// Pods ready at t = 0; defaults to `min_pods`.
    #[serde(default)]
    pub initial_pods: Option<usize>,
    #[serde(default = "default_target")]
    pub hpa_target_utilization: f64,
    #[serde(default = "default_interval")]
    pub hpa_evaluation_interval_s: f64,
    /// Number of evaluation intervals averaged by the autoscaler.
    #[serde(default = "one_usize")]
    pub hpa_window: usize,
    /// Pod i uses template i mod len.
    pub pod_templates: Vec<PodSpec>,
    #[serde(default = "default_policy")]
    pub policy: SchedulerPolicy,
    #[serde(default = "default_depth_threshold")]
    pub depth_threshold: usize,
}

fn default_target() -> f64 {
    0.70
}

fn default_interval() -> f64 {
    15.0
}

fn one_usize() -> usize {
    1
}

fn default_policy() -> SchedulerPolicy {
    SchedulerPolicy::PriorityDepth
}

fn default_depth_threshold() -> usize {
    3
}

impl ClusterConfig {
    pub fn fixed(pods: usize, template: PodSpec) -> Self {
        Self {
            min_pods: pods,
            max_pods: pods,
            initial_pods: None,
            hpa_target_utilization: default_target(),
            hpa_evaluation_interval_s: default_interval(),
            hpa_window: 1,
            pod_templates: vec![template],
            policy: SchedulerPolicy::PriorityDepth,
            depth_threshold: default_depth_threshold(),
        }
    }

    pub fn initial(&self) -> usize {
        self.initial_pods.unwrap_or(self.min_pods)
    }

    pub fn template(&self, pod: usize) -> &PodSpec {
        &self.pod_templates[pod % self.pod_templates.len()]
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |path: &str, msg: String| Err(Error::Config(format!("cluster.{path}: {msg}")));
        if self.min_pods < 1 {
            return bad("min_pods", "must be at least 1".into());
        }
        if self.min_pods > self.max_pods {
            return bad("min_pods", format!("{} exceeds max_pods {}", self.min_pods, self.max_pods));
        }
        if !(self.min_pods..=self.max_pods).contains(&self.initial()) {
            return bad("initial_pods", format!("{} outside [min_pods, max_pods]", self.initial()));
        }
        if !(self.hpa_target_utilization > 0.0 && self.hpa_target_utilization < 1.0) {
            return bad("hpa_target_utilization", format!("{} not in (0, 1)", self.hpa_target_utilization));
        }
        if !(self.hpa_evaluation_interval_s > 0.0 && self.hpa_evaluation_interval_s.is_finite()) {
            return bad("hpa_evaluation_interval_s", "must be positive".into());
        }
        if self.hpa_window == 0 {
            return bad("hpa_window", "must be at least 1".into());
        }
        if self.pod_templates.is_empty() {
            return bad("pod_templates", "needs at least one pod spec".into());
        }
        for (i, p) in self.pod_templates.iter().enumerate() {
            if !(p.capacity > 0.0 && p.capacity.is_finite()) {
                return bad(&format!("pod_templates[{i}].capacity"), "must be positive".into());
            }
            if !(p.accel_multiplier >= 1.0 && p.accel_multiplier.is_finite()) {
                return bad(&format!("pod_templates[{i}].accel_multiplier"), "must be >= 1".into());
            }
            if !(p.startup_delay_s >= 0.0 && p.startup_delay_s.is_finite()) {
                return bad(&format!("pod_templates[{i}].startup_delay_s"), "must be >= 0".into());
            }
            if !(p.base_memory_mb >= 0.0) {
                return bad(&format!("pod_templates[{i}].base_memory_mb"), "must be >= 0".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Arrival {
    /// Open loop, exponential inter-arrivals.
    Poisson { rate: f64 },
    /// Each client waits an exponential think time after every completion.
    ClosedLoop { clients: usize, think_time_s: f64 },
}

/// Compute cost per primitive op, in compute units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitCosts {
    pub mul_plain: f64,
    pub add_ct: f64,
    pub add_plain: f64,
    pub mul_ct: f64,
    pub rescale: f64,
    pub mod_switch: f64,
}

impl UnitCosts {
    pub fn of(&self, kind: OpKind) -> f64 {
        match kind {
            OpKind::MulPlain => self.mul_plain,
            OpKind::AddCt => self.add_ct,
            OpKind::AddPlain => self.add_plain,
            OpKind::MulCt => self.mul_ct,
            OpKind::Rescale => self.rescale,
            OpKind::ModSwitch => self.mod_switch,
        }
    }

    /// Σ count × unit cost; keys are op names such as `MUL_CT`.
    pub fn price(&self, counts: &BTreeMap<String, usize>) -> Result<f64> {
        let mut total = 0.0;
        for (name, &n) in counts {
            let kind = OpKind::ALL
                .into_iter()
                .find(|k| k.name() == name)
                .ok_or_else(|| Error::Config(format!("unknown op '{name}' in op_counts")))?;
            total += n as f64 * self.of(kind);
        }
        Ok(total)
    }
}

/// One kind of inference request, e.g. one compiled model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequestClass {
    pub name: String,
    /// Total compute units; alternatively derived from `op_counts`.
    #[serde(default)]
    pub cost_units: Option<f64>,
    #[serde(default)]
    pub op_counts: Option<BTreeMap<String, usize>>,
    pub modulus_depth: usize,
    #[serde(default)]
    pub ciphertext_bytes: u64,
    #[serde(default = "one_f64")]
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadConfig {
    pub arrival: Arrival,
    pub horizon_s: f64,
    pub classes: Vec<RequestClass>,
    /// Tasks each request fans out into; each is scheduled independently.
    #[serde(default = "default_shards")]
    pub shards: usize,
    /// Fixed per-request pipeline delay before its tasks are dispatched.
    #[serde(default)]
    pub dispatch_overhead_ms: f64,
}

fn default_shards() -> usize {
    24
}

impl WorkloadConfig {
    pub fn validate(&self, unit_costs: Option<&UnitCosts>) -> Result<Vec<f64>> {
        let bad = |path: &str, msg: String| Err(Error::Config(format!("workload.{path}: {msg}")));
        match self.arrival {
            Arrival::Poisson { rate } if !(rate > 0.0 && rate.is_finite()) => {
                return bad("arrival.rate", format!("{rate} must be positive"))
            }
            Arrival::ClosedLoop { clients, .. } if clients == 0 => {
                return bad("arrival.clients", "must be at least 1".into())
            }
            Arrival::ClosedLoop { think_time_s, .. } if !(think_time_s >= 0.0 && think_time_s.is_finite()) => {
                return bad("arrival.think_time_s", "must be >= 0".into())
            }
            _ => {}
        }
        if !(self.horizon_s >= 0.0 && self.horizon_s.is_finite()) {
            return bad("horizon_s", "must be >= 0".into());
        }
        if self.shards == 0 {
            return bad("shards", "must be at least 1".into());
        }
        if !(self.dispatch_overhead_ms >= 0.0) {
            return bad("dispatch_overhead_ms", "must be >= 0".into());
        }
        if self.classes.is_empty() {
            return bad("classes", "needs at least one request class".into());
        }
        let mut costs = Vec::with_capacity(self.classes.len());
        for (i, c) in self.classes.iter().enumerate() {
            let cost = match (&c.cost_units, &c.op_counts, unit_costs) {
                (Some(u), _, _) => *u,
                (None, Some(counts), Some(units)) => units.price(counts)?,
                (None, Some(_), None) => return bad(&format!("classes[{i}]"), "op_counts need unit_costs".into()),
                (None, None, _) => return bad(&format!("classes[{i}]"), "needs cost_units or op_counts".into()),
            };
            if !(cost > 0.0 && cost.is_finite()) {
                return bad(&format!("classes[{i}].cost_units"), format!("{cost} must be positive"));
            }
            if c.modulus_depth < 1 {
                return bad(&format!("classes[{i}].modulus_depth"), "must be at least 1".into());
            }
            if !(c.weight > 0.0) {
                return bad(&format!("classes[{i}].weight"), "must be positive".into());
            }
            costs.push(cost);
        }
        Ok(costs)
    }
}

/// Everything `simulate` reads from its config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub cluster: ClusterConfig,
    pub workload: WorkloadConfig,
    #[serde(default)]
    pub unit_costs: Option<UnitCosts>,
    #[serde(default)]
    pub seed: u64,
}

impl SimConfig {
    /// Parses JSON, reporting the path of the offending field on failure.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de)
            .map_err(|e| Error::Config(format!("{}: {}", e.path(), e.inner())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.cluster.validate()?;
        self.workload.validate(self.unit_costs.as_ref()).map(|_| ())
    }
}
