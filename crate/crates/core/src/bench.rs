//! Paired baseline/optimized measurements of the encrypted workflow.
//!
//! Both sides of a scenario share parameters, keys, inputs and seeds; only
//! the optimization flags differ. Client-side encryption happens before the
//! clock starts. Every configuration runs one warm-up pass, then
//! `repetitions` timed passes; medians are reported.

use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::compiler::{compile, params_for, CompileOptions, ModelGraph, RescaleMode};
use crate::engine::{
    compare_outputs, decrypt_batch, encrypt_batch, execute_plain, DeviationReport, EncryptedBatch, ExecOptions,
    Executor,
};
use crate::error::{Error, Result};
use crate::models::{reference_model, synthetic_dataset, CLASS_THRESHOLD};
use crate::ring::rng_from_seed;
use crate::scheme::{keygen, KeySet, SchemeParams};

pub const MIN_REPETITIONS: usize = 5;
/// Distinct pre-encrypted requests cycled through by unpacked runs.
pub const REQUEST_POOL: usize = 64;
const RATIO_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub fuse: bool,
    pub rescale: RescaleMode,
    pub batch_packing: bool,
}

impl FlowConfig {
    /// Everything off: unfused, no in-circuit rescaling, one request per
    /// ciphertext.
    pub const BASELINE: Self = Self {
        fuse: false,
        rescale: RescaleMode::Off,
        batch_packing: false,
    };
    pub const OPTIMIZED: Self = Self {
        fuse: true,
        rescale: RescaleMode::Eager,
        batch_packing: true,
    };

    pub fn compile_options(&self, batch: usize) -> CompileOptions {
        CompileOptions {
            batch: if self.batch_packing { batch } else { 1 },
            fuse: self.fuse,
            rescale: self.rescale,
        }
    }

    pub fn label(&self) -> String {
        let on = |b: bool| if b { "on" } else { "off" };
        let rescale = match self.rescale {
            RescaleMode::Eager => "eager",
            RescaleMode::Off => "off",
        };
        format!("fuse={} rescale={} batch-packing={}", on(self.fuse), rescale, on(self.batch_packing))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Packing,
    Fusion,
    Modswitch,
    E2e,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [Scenario::Packing, Scenario::Fusion, Scenario::Modswitch, Scenario::E2e];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Packing => "packing",
            Scenario::Fusion => "fusion",
            Scenario::Modswitch => "modswitch",
            Scenario::E2e => "e2e",
        }
    }

    pub fn default_model(self) -> &'static str {
        match self {
            Scenario::Fusion => "mlp",
            _ => "logistic",
        }
    }

    /// (baseline, optimized): the optimized side always has everything on;
    /// the baseline turns off the optimization under test.
    pub fn configs(self) -> (FlowConfig, FlowConfig) {
        let opt = FlowConfig::OPTIMIZED;
        let base = match self {
            Scenario::Packing => FlowConfig { batch_packing: false, ..opt },
            Scenario::Fusion => FlowConfig { fuse: false, ..opt },
            Scenario::Modswitch => FlowConfig { rescale: RescaleMode::Off, ..opt },
            Scenario::E2e => FlowConfig::BASELINE,
        };
        (base, opt)
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scenario '{s}' (expected packing|fusion|modswitch|e2e)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchOptions {
    pub scenario: Scenario,
    pub model: String,
    pub batch: usize,
    pub repetitions: usize,
    pub seed: u64,
}

impl BenchOptions {
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            model: scenario.default_model().to_string(),
            batch: 1024,
            repetitions: MIN_REPETITIONS,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub config: FlowConfig,
    pub label: String,
    /// Median wall time to serve all `batch` requests.
    pub wall_ms: f64,
    /// `wall_ms / batch`.
    pub latency_ms: f64,
    pub throughput_rps: f64,
    pub avg_ciphertext_bytes: f64,
    pub peak_live_bytes: u64,
    /// Dispatches to serve all requests.
    pub dispatches: usize,
    pub raw_wall_ms: Vec<f64>,
    pub accuracy: DeviationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ratios {
    /// baseline / optimized latency.
    pub latency_speedup: f64,
    /// 1 − optimized / baseline latency.
    pub latency_reduction: f64,
    pub throughput_gain: f64,
    /// 1 − optimized / baseline average ciphertext bytes.
    pub size_reduction: f64,
    /// optimized / baseline dispatches.
    pub dispatch_ratio: f64,
}

impl Ratios {
    pub fn from_measurements(base: &Measurement, opt: &Measurement) -> Self {
        Self {
            latency_speedup: base.latency_ms / opt.latency_ms,
            latency_reduction: 1.0 - opt.latency_ms / base.latency_ms,
            throughput_gain: opt.throughput_rps / base.throughput_rps,
            size_reduction: 1.0 - opt.avg_ciphertext_bytes / base.avg_ciphertext_bytes,
            dispatch_ratio: opt.dispatches as f64 / base.dispatches as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineInfo {
    pub os: String,
    pub arch: String,
    pub logical_cpus: usize,
    pub cpu_model: Option<String>,
    /// Benchmarks execute on one thread.
    pub threads_used: usize,
}

impl MachineInfo {
    pub fn detect() -> Self {
        let cpu_model = std::fs::read_to_string("/proc/cpuinfo").ok().and_then(|s| {
            s.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split(':').nth(1))
                .map(|m| m.trim().to_string())
        });
        Self {
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            logical_cpus: std::thread::available_parallelism().map_or(1, |n| n.get()),
            cpu_model,
            threads_used: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub scenario: Scenario,
    pub model: String,
    pub batch: usize,
    pub repetitions: usize,
    pub warmup: usize,
    pub seed: u64,
    pub limbs: usize,
    pub baseline: Measurement,
    pub optimized: Measurement,
    pub ratios: Ratios,
    /// Set when the baseline had to deviate from its nominal flags.
    pub note: Option<String>,
    pub machine: MachineInfo,
}

impl BenchReport {
    /// Ratios recomputed from the raw measurements agree with the stored ones.
    pub fn ratios_consistent(&self) -> bool {
        let r = Ratios::from_measurements(&self.baseline, &self.optimized);
        let pairs = [
            (r.latency_speedup, self.ratios.latency_speedup),
            (r.latency_reduction, self.ratios.latency_reduction),
            (r.throughput_gain, self.ratios.throughput_gain),
            (r.size_reduction, self.ratios.size_reduction),
            (r.dispatch_ratio, self.ratios.dispatch_ratio),
        ];
        pairs.iter().all(|(a, b)| (a - b).abs() <= RATIO_TOLERANCE * a.abs().max(1.0))
    }

    pub fn to_markdown(&self) -> String {
        let (b, o, r) = (&self.baseline, &self.optimized, &self.ratios);
        let mut s = String::new();
        let _ = writeln!(s, "## {} ({}, B={})\n", self.scenario.name(), self.model, self.batch);
        let _ = writeln!(s, "| Metric | Baseline | Optimized | Ratio |\n|---|---|---|---|");
        let _ = writeln!(s, "| Configuration | {} | {} | |", b.label, o.label);
        let _ = writeln!(
            s,
            "| Latency per request (ms) | {:.4} | {:.4} | {:.2}x faster ({:.1}% lower) |",
            b.latency_ms,
            o.latency_ms,
            r.latency_speedup,
            100.0 * r.latency_reduction
        );
        let _ = writeln!(s, "| Wall time, all requests (ms) | {:.2} | {:.2} | |", b.wall_ms, o.wall_ms);
        let _ = writeln!(
            s,
            "| Throughput (req/s) | {:.1} | {:.1} | {:.2}x |",
            b.throughput_rps, o.throughput_rps, r.throughput_gain
        );
        let _ = writeln!(
            s,
            "| Avg ciphertext (bytes) | {:.0} | {:.0} | {:.1}% smaller |",
            b.avg_ciphertext_bytes,
            o.avg_ciphertext_bytes,
            100.0 * r.size_reduction
        );
        let _ = writeln!(
            s,
            "| Peak live ciphertext (bytes) | {} | {} | |",
            b.peak_live_bytes, o.peak_live_bytes
        );
        let _ = writeln!(
            s,
            "| Task dispatches | {} | {} | {:.3} |",
            b.dispatches, o.dispatches, r.dispatch_ratio
        );
        let _ = writeln!(
            s,
            "| Agreement with plaintext (%) | {:.2} | {:.2} | |",
            b.accuracy.agreement_pct, o.accuracy.agreement_pct
        );
        let _ = writeln!(
            s,
            "\n{} timed repetitions after {} warm-up; medians. Modulus chain: {} limbs. Machine: {} {} ({} logical CPUs{}), single thread.",
            self.repetitions,
            self.warmup,
            self.limbs,
            self.machine.os,
            self.machine.arch,
            self.machine.logical_cpus,
            self.machine.cpu_model.as_deref().map(|m| format!(", {m}")).unwrap_or_default()
        );
        if let Some(n) = &self.note {
            let _ = writeln!(s, "\nNote: {n}");
        }
        s
    }
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 0 {
        (v[m - 1] + v[m]) / 2.0
    } else {
        v[m]
    }
}

/// Smallest parameter set on which every config compiles.
pub fn shared_params(model: &ModelGraph, configs: &[FlowConfig], batch: usize) -> Result<Arc<SchemeParams>> {
    let mut best: Option<Arc<SchemeParams>> = None;
    for c in configs {
        let p = params_for(model, c.compile_options(batch))?;
        if best.as_ref().map_or(true, |b| p.max_level() > b.max_level()) {
            best = Some(p);
        }
    }
    Ok(best.expect("at least one config"))
}

pub fn run_bench(opts: &BenchOptions) -> Result<BenchReport> {
    if opts.repetitions < MIN_REPETITIONS {
        return Err(Error::Config(format!(
            "repetitions must be at least {MIN_REPETITIONS}, got {}",
            opts.repetitions
        )));
    }
    if opts.batch == 0 {
        return Err(Error::Config("batch must be at least 1".into()));
    }
    let model = reference_model(&opts.model, opts.seed)?;
    let (mut base_cfg, opt_cfg) = opts.scenario.configs();
    let mut note = None;
    let params = match shared_params(&model, &[base_cfg, opt_cfg], opts.batch) {
        Ok(p) => p,
        // The full baseline has no in-circuit rescaling; deep models exceed
        // any supported chain that way, so the end-to-end baseline falls
        // back to eager rescaling for them.
        Err(Error::Resource(why)) if opts.scenario == Scenario::E2e => {
            base_cfg.rescale = RescaleMode::Eager;
            note = Some(format!("baseline uses eager rescaling: {why}"));
            shared_params(&model, &[base_cfg, opt_cfg], opts.batch)?
        }
        Err(e) => return Err(e),
    };
    let keys = keygen(&params, opts.seed)?;
    let data = synthetic_dataset(model.input_width()?, opts.batch, opts.seed);

    let baseline = measure(&model, base_cfg, &params, &keys, &data.samples, opts)?;
    let optimized = measure(&model, opt_cfg, &params, &keys, &data.samples, opts)?;
    Ok(BenchReport {
        scenario: opts.scenario,
        model: opts.model.clone(),
        batch: opts.batch,
        repetitions: opts.repetitions,
        warmup: 1,
        seed: opts.seed,
        limbs: params.max_level(),
        ratios: Ratios::from_measurements(&baseline, &optimized),
        baseline,
        optimized,
        note,
        machine: MachineInfo::detect(),
    })
}

fn measure(
    model: &ModelGraph,
    cfg: FlowConfig,
    params: &Arc<SchemeParams>,
    keys: &KeySet,
    samples: &[Vec<f64>],
    opts: &BenchOptions,
) -> Result<Measurement> {
    let circuit = compile(model, params, cfg.compile_options(samples.len()))?;
    let exec = Executor::new(&circuit, params, Some(&keys.relin), ExecOptions::default())?;
    let mut rng = rng_from_seed(opts.seed ^ 0x00be_4c40);
    // Unpacked requests each carry full-size ciphertexts, so only a pool of
    // distinct ones is kept; request i uses pool[i mod len]. Execution is
    // data-oblivious, so timing matches distinct requests.
    let (requests, checked): (Vec<EncryptedBatch>, &[Vec<f64>]) = if cfg.batch_packing {
        let b = encrypt_batch(samples, &circuit.plan, &keys.public, circuit.input_level, &mut rng)?;
        (vec![b], samples)
    } else {
        let pool = &samples[..samples.len().min(REQUEST_POOL)];
        let reqs = pool
            .iter()
            .map(|s| encrypt_batch(std::slice::from_ref(s), &circuit.plan, &keys.public, circuit.input_level, &mut rng))
            .collect::<Result<_>>()?;
        (reqs, pool)
    };
    let passes = if cfg.batch_packing { 1 } else { samples.len() };
    let pass = |i: usize| &requests[i % requests.len()];

    // warm-up; distinct requests are checked against the plaintext oracle
    let mut decoded = Vec::with_capacity(checked.len());
    let mut dispatches = 0;
    for i in 0..passes {
        let (out, m) = exec.execute(pass(i))?;
        dispatches += m.dispatches;
        if i < requests.len() {
            decoded.extend(decrypt_batch(&keys.secret, &out)?);
        }
    }
    let accuracy = compare_outputs(&decoded, &execute_plain(&circuit, checked)?, CLASS_THRESHOLD)?;

    let mut raw = Vec::with_capacity(opts.repetitions);
    for _ in 0..opts.repetitions {
        let t = Instant::now();
        for i in 0..passes {
            exec.execute(pass(i))?;
        }
        raw.push(t.elapsed().as_secs_f64() * 1e3);
    }
    let wall_ms = median(&raw);
    let trace = exec.trace();
    Ok(Measurement {
        config: cfg,
        label: cfg.label(),
        wall_ms,
        latency_ms: wall_ms / samples.len() as f64,
        throughput_rps: samples.len() as f64 / (wall_ms / 1e3),
        avg_ciphertext_bytes: trace.avg_bytes,
        peak_live_bytes: trace.peak_live_bytes,
        dispatches,
        raw_wall_ms: raw,
        accuracy,
    })
}

/// Baseline-vs-optimized table over end-to-end reports, one row per model.
pub fn comparison_table(reports: &[BenchReport]) -> String {
    let mut s = String::from(
        "| Model | Baseline Latency (ms) | Optimized Latency (ms) | Speedup | Baseline Throughput (req/s) | Optimized Throughput (req/s) |\n|---|---|---|---|---|---|\n",
    );
    for r in reports {
        let _ = writeln!(
            s,
            "| {}{} | {:.3} | {:.3} | {:.1}x | {:.1} | {:.1} |",
            r.model,
            if r.note.is_some() { "*" } else { "" },
            r.baseline.latency_ms,
            r.optimized.latency_ms,
            r.ratios.latency_speedup,
            r.baseline.throughput_rps,
            r.optimized.throughput_rps
        );
    }
    if reports.iter().any(|r| r.note.is_some()) {
        s.push_str("\n\\* baseline keeps eager rescaling (the model does not fit without it).\n");
    }
    s
}
