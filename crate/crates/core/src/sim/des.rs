use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};

use super::{
    generate_workload, hpa_step, make_request, schedule, think_sample, Arrival, ClassPicker, PodSpec, PodView,
    Request, SimConfig, Task,
};
use crate::error::{Error, Result};
use crate::ring::rng_from_seed;

const MIB: f64 = (1u64 << 20) as f64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilSample {
    pub t_s: f64,
    pub utilization: f64,
    pub pods: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PodSample {
    pub t_s: f64,
    /// Ready or starting, excluding draining pods.
    pub pods: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMetrics {
    pub horizon_s: f64,
    pub arrived: usize,
    pub completed: usize,
    pub completed_by_horizon: usize,
    pub in_flight_at_horizon: usize,
    pub dropped: usize,
    pub mean_latency_ms: f64,
    pub p50_latency_ms: f64,
    pub p95_latency_ms: f64,
    pub p99_latency_ms: f64,
    pub max_latency_ms: f64,
    pub throughput_rps: f64,
    /// Busy pod-time over ready pod-time within the horizon.
    pub mean_utilization: f64,
    pub mean_pods: f64,
    pub peak_pods: usize,
    pub scale_ups: usize,
    pub scale_downs: usize,
    /// Time-averaged base memory plus live ciphertext bytes, per pod.
    pub memory_per_pod_mb: f64,
    pub memory_total_mb: f64,
    pub utilization_timeline: Vec<UtilSample>,
    pub pod_timeline: Vec<PodSample>,
}

/// Lifecycle of one shard, for invariant checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TaskRecord {
    pub request: usize,
    pub pod: usize,
    pub request_arrival_s: f64,
    pub dispatched_s: f64,
    pub started_s: f64,
    pub finished_s: f64,
    pub service_s: f64,
    pub pod_ready_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Arrival(usize),
    Dispatch(usize),
    Complete(usize),
    Ready(usize),
    Tick,
}

#[derive(Debug, Clone, Copy)]
struct Event {
    t: f64,
    seq: u64,
    kind: Kind,
}

// Min-heap on (time, insertion order).
impl Ord for Event {
    fn cmp(&self, o: &Self) -> Ordering {
        o.t.total_cmp(&self.t).then(o.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl PartialEq for Event {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}

impl Eq for Event {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PodState {
    Starting,
    Ready,
    Draining,
    Gone,
}

#[derive(Debug, Clone)]
struct Shard {
    task: Task,
    dispatched: f64,
}

struct Pod {
    spec: PodSpec,
    state: PodState,
    ready_at: f64,
    queue: VecDeque<Shard>,
    current: Option<(Shard, f64)>,
    window_busy: f64,
    window_from: f64,
    live_bytes: u64,
}

impl Pod {
    fn exists(&self) -> bool {
        matches!(self.state, PodState::Ready | PodState::Draining)
    }

    fn active(&self) -> bool {
        matches!(self.state, PodState::Ready | PodState::Starting)
    }

    fn load(&self) -> usize {
        self.queue.len() + self.current.is_some() as usize
    }
}

struct ReqState {
    arrival: f64,
    remaining: usize,
    done: Option<f64>,
    client: Option<usize>,
}

struct Sim<'a> {
    cfg: &'a SimConfig,
    horizon: f64,
    now: f64,
    seq: u64,
    heap: BinaryHeap<Event>,
    pods: Vec<Pod>,
    pending: VecDeque<Shard>,
    requests: Vec<Request>,
    state: Vec<ReqState>,
    rr_cursor: Option<usize>,
    views: Vec<PodView>,
    // integrals over [0, horizon]
    ready_time: f64,
    busy_time: f64,
    base_mb_time: f64,
    live_byte_time: f64,
    util: Vec<UtilSample>,
    pod_timeline: Vec<PodSample>,
    scale_ups: usize,
    scale_downs: usize,
    trace: Option<Vec<TaskRecord>>,
}

/// Runs `cfg` on its seeded workload.
pub fn run_sim(cfg: &SimConfig) -> Result<SimMetrics> {
    let requests = generate_workload(&cfg.workload, cfg.unit_costs.as_ref(), cfg.seed)?;
    Ok(run_workload(cfg, requests, false)?.0)
}

/// Runs `cfg` on an explicit arrival stream (e.g. the same stream at several
/// pod counts). Optionally returns a per-shard trace.
pub fn run_workload(cfg: &SimConfig, requests: Vec<Request>, trace: bool) -> Result<(SimMetrics, Vec<TaskRecord>)> {
    cfg.validate()?;
    if let Some(bad) = requests
        .windows(2)
        .position(|w| w[1].arrival_s < w[0].arrival_s)
    {
        return Err(Error::Config(format!("arrival stream not sorted at request {}", bad + 1)));
    }
    let mut sim = Sim::new(cfg, requests, trace);
    sim.run()?;
    let records = sim.trace.take().unwrap_or_default();
    Ok((sim.metrics(), records))
}

impl<'a> Sim<'a> {
    fn new(cfg: &'a SimConfig, requests: Vec<Request>, trace: bool) -> Self {
        let state = requests
            .iter()
            .map(|r| ReqState {
                arrival: r.arrival_s,
                remaining: cfg.workload.shards,
                done: None,
                client: r.client,
            })
            .collect();
        let mut sim = Sim {
            cfg,
            horizon: cfg.workload.horizon_s,
            now: 0.0,
            seq: 0,
            heap: BinaryHeap::new(),
            pods: Vec::new(),
            pending: VecDeque::new(),
            requests,
            state,
            rr_cursor: None,
            views: Vec::new(),
            ready_time: 0.0,
            busy_time: 0.0,
            base_mb_time: 0.0,
            live_byte_time: 0.0,
            util: Vec::new(),
            pod_timeline: Vec::new(),
            scale_ups: 0,
            scale_downs: 0,
            trace: trace.then(Vec::new),
        };
        for _ in 0..cfg.cluster.initial() {
            let id = sim.add_pod();
            sim.pods[id].state = PodState::Ready;
            sim.pods[id].ready_at = 0.0;
        }
        sim.pod_timeline.push(PodSample {
            t_s: 0.0,
            pods: sim.active_count(),
        });
        for i in 0..sim.requests.len() {
            let t = sim.requests[i].arrival_s;
            sim.push(t, Kind::Arrival(i));
        }
        let dt = cfg.cluster.hpa_evaluation_interval_s;
        if dt <= sim.horizon {
            sim.push(dt, Kind::Tick);
        }
        sim
    }

    fn push(&mut self, t: f64, kind: Kind) {
        self.seq += 1;
        self.heap.push(Event { t, seq: self.seq, kind });
    }

    fn add_pod(&mut self) -> usize {
        let id = self.pods.len();
        self.pods.push(Pod {
            spec: self.cfg.cluster.template(id).clone(),
            state: PodState::Starting,
            ready_at: f64::INFINITY,
            queue: VecDeque::new(),
            current: None,
            window_busy: 0.0,
            window_from: 0.0,
            live_bytes: 0,
        });
        id
    }

    fn active_count(&self) -> usize {
        self.pods.iter().filter(|p| p.active()).count()
    }

    fn run(&mut self) -> Result<()> {
        while let Some(ev) = self.heap.pop() {
            self.advance(ev.t);
            match ev.kind {
                Kind::Arrival(r) => {
                    let delay = self.cfg.workload.dispatch_overhead_ms / 1e3;
                    if delay > 0.0 {
                        self.push(ev.t + delay, Kind::Dispatch(r));
                    } else {
                        self.dispatch(r);
                    }
                }
                Kind::Dispatch(r) => self.dispatch(r),
                Kind::Complete(p) => self.complete(p),
                Kind::Ready(p) => self.pod_ready(p),
                Kind::Tick => self.tick(),
            }
        }
        if let Some(r) = self.state.iter().position(|s| s.done.is_none()) {
            return Err(Error::Resource(format!("request {r} never completed")));
        }
        Ok(())
    }

    /// Accumulates time integrals up to `t` (clipped to the horizon).
    fn advance(&mut self, t: f64) {
        let (a, b) = (self.now.min(self.horizon), t.min(self.horizon));
        if b > a {
            let dt = b - a;
            for p in self.pods.iter().filter(|p| p.exists()) {
                self.ready_time += dt;
                self.base_mb_time += p.spec.base_memory_mb * dt;
                self.live_byte_time += p.live_bytes as f64 * dt;
            }
        }
        self.now = t;
    }

    fn dispatch(&mut self, r: usize) {
        let req = &self.requests[r];
        let shards = self.cfg.workload.shards;
        let task = Task {
            request: r,
            arrival_s: req.arrival_s,
            circuit: req.circuit,
            cost_units: req.cost_units / shards as f64,
            modulus_depth: req.modulus_depth,
            bytes: req.ciphertext_bytes / shards as u64,
        };
        for _ in 0..shards {
            self.place(Shard {
                task: task.clone(),
                dispatched: self.now,
            });
        }
    }

    fn place(&mut self, shard: Shard) {
        self.views.clear();
        self.views.extend(
            self.pods
                .iter()
                .enumerate()
                .filter(|(_, p)| p.state != PodState::Gone)
                .map(|(id, p)| PodView {
                    id,
                    speed: p.spec.speed(),
                    queue_len: p.load(),
                    accepting: p.state == PodState::Ready,
                }),
        );
        let cluster = &self.cfg.cluster;
        match schedule(&shard.task, &self.views, cluster.policy, cluster.depth_threshold, &mut self.rr_cursor) {
            Some(p) => {
                self.pods[p].live_bytes += shard.task.bytes;
                self.pods[p].queue.push_back(shard);
                if self.pods[p].current.is_none() {
                    self.start_next(p);
                }
            }
            None => self.pending.push_back(shard),
        }
    }

    fn start_next(&mut self, p: usize) {
        let pod = &mut self.pods[p];
        if let Some(shard) = pod.queue.pop_front() {
            let service = shard.task.cost_units / pod.spec.speed();
            pod.current = Some((shard, self.now));
            self.push(self.now + service, Kind::Complete(p));
        } else if pod.state == PodState::Draining {
            pod.state = PodState::Gone;
        }
    }

    fn complete(&mut self, p: usize) {
        let now = self.now;
        let horizon = self.horizon;
        let pod = &mut self.pods[p];
        let (shard, start) = pod.current.take().expect("completion on an idle pod");
        pod.live_bytes -= shard.task.bytes;
        pod.window_busy += now - start.max(pod.window_from);
        self.busy_time += (now.min(horizon) - start.min(horizon)).max(0.0);
        if let Some(tr) = &mut self.trace {
            tr.push(TaskRecord {
                request: shard.task.request,
                pod: p,
                request_arrival_s: shard.task.arrival_s,
                dispatched_s: shard.dispatched,
                started_s: start,
                finished_s: now,
                service_s: shard.task.cost_units / pod.spec.speed(),
                pod_ready_s: pod.ready_at,
            });
        }
        let r = shard.task.request;
        let st = &mut self.state[r];
        st.remaining -= 1;
        if st.remaining == 0 {
            st.done = Some(now);
            if let Some(client) = st.client {
                self.reissue(client, r);
            }
        }
        self.start_next(p);
    }

    /// Closed loop: the client thinks, then sends its next request.
    fn reissue(&mut self, client: usize, prev: usize) {
        let Arrival::ClosedLoop { think_time_s, .. } = self.cfg.workload.arrival else {
            return;
        };
        // One stream per (seed, request) keeps runs reproducible regardless
        // of event interleaving.
        let mut rng = rng_from_seed(self.cfg.seed ^ (prev as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let t = self.now + think_sample(think_time_s, &mut rng);
        if t >= self.horizon {
            return;
        }
        let costs = self
            .cfg
            .workload
            .validate(self.cfg.unit_costs.as_ref())
            .expect("validated config");
        let picker = ClassPicker::new(&self.cfg.workload).expect("validated weights");
        let id = self.requests.len();
        let req = make_request(&self.cfg.workload, &costs, id, t, picker.pick(&mut rng), Some(client));
        self.requests.push(req);
        self.state.push(ReqState {
            arrival: t,
            remaining: self.cfg.workload.shards,
            done: None,
            client: Some(client),
        });
        self.push(t, Kind::Arrival(id));
    }

    fn pod_ready(&mut self, p: usize) {
        if self.pods[p].state != PodState::Starting {
            return; // cancelled while starting
        }
        let pod = &mut self.pods[p];
        pod.state = PodState::Ready;
        pod.ready_at = self.now;
        pod.window_from = self.now;
        for shard in std::mem::take(&mut self.pending) {
            self.place(shard);
        }
    }

    fn tick(&mut self) {
        let now = self.now;
        let mut sum = 0.0;
        let mut n = 0usize;
        for pod in self.pods.iter_mut().filter(|p| p.exists()) {
            if let Some((_, start)) = &pod.current {
                pod.window_busy += now - start.max(pod.window_from);
            }
            let span = now - pod.window_from;
            if span > 0.0 {
                sum += (pod.window_busy / span).min(1.0);
                n += 1;
            }
            pod.window_busy = 0.0;
            pod.window_from = now;
        }
        let utilization = if n == 0 { 0.0 } else { sum / n as f64 };
        let current = self.active_count();
        self.util.push(UtilSample {
            t_s: now,
            utilization,
            pods: current,
        });

        let cluster = &self.cfg.cluster;
        let recent = &self.util[self.util.len().saturating_sub(cluster.hpa_window)..];
        let avg = recent.iter().map(|u| u.utilization).sum::<f64>() / recent.len() as f64;
        let desired = hpa_step(current, avg, cluster);
        if desired > current {
            self.scale_ups += 1;
            for _ in current..desired {
                let id = self.add_pod();
                let delay = self.pods[id].spec.startup_delay_s;
                self.push(now + delay, Kind::Ready(id));
            }
        } else if desired < current {
            self.scale_downs += 1;
            let mut excess = current - desired;
            // Cancel pods still starting first, then drain the newest ready ones.
            for want in [PodState::Starting, PodState::Ready] {
                for pod in self.pods.iter_mut().rev().filter(|p| p.state == want) {
                    if excess == 0 {
                        break;
                    }
                    excess -= 1;
                    pod.state = if pod.load() == 0 { PodState::Gone } else { PodState::Draining };
                }
            }
        }
        if desired != current {
            self.pod_timeline.push(PodSample {
                t_s: now,
                pods: self.active_count(),
            });
        }
        let next = now + cluster.hpa_evaluation_interval_s;
        if next <= self.horizon {
            self.push(next, Kind::Tick);
        }
    }

    fn metrics(&self) -> SimMetrics {
        let h = self.horizon;
        let mut lat: Vec<f64> = self
            .state
            .iter()
            .filter_map(|s| s.done.map(|d| (d - s.arrival) * 1e3))
            .collect();
        lat.sort_by(f64::total_cmp);
        let pct = |q: f64| {
            if lat.is_empty() {
                0.0
            } else {
                lat[((q * lat.len() as f64).ceil() as usize).clamp(1, lat.len()) - 1]
            }
        };
        let completed_by_horizon = self.state.iter().filter(|s| s.done.is_some_and(|d| d <= h)).count();
        let mean_pods = if h > 0.0 { self.ready_time / h } else { self.pods.len() as f64 };
        let (per_pod, total) = if self.ready_time > 0.0 {
            let per = (self.base_mb_time + self.live_byte_time / MIB) / self.ready_time;
            (per, per * mean_pods)
        } else {
            (0.0, 0.0)
        };
        SimMetrics {
            horizon_s: h,
            arrived: self.state.len(),
            completed: lat.len(),
            completed_by_horizon,
            in_flight_at_horizon: self.state.len() - completed_by_horizon,
            dropped: 0,
            mean_latency_ms: if lat.is_empty() { 0.0 } else { lat.iter().sum::<f64>() / lat.len() as f64 },
            p50_latency_ms: pct(0.50),
            p95_latency_ms: pct(0.95),
            p99_latency_ms: pct(0.99),
            max_latency_ms: lat.last().copied().unwrap_or(0.0),
            throughput_rps: if h > 0.0 { completed_by_horizon as f64 / h } else { 0.0 },
            mean_utilization: if self.ready_time > 0.0 { self.busy_time / self.ready_time } else { 0.0 },
            mean_pods,
            peak_pods: self.pod_timeline.iter().map(|s| s.pods).max().unwrap_or(0),
            scale_ups: self.scale_ups,
            scale_downs: self.scale_downs,
            memory_per_pod_mb: per_pod,
            memory_total_mb: total,
            utilization_timeline: self.util.clone(),
            pod_timeline: self.pod_timeline.clone(),
        }
    }
}
