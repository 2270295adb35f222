use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use hewflow::bench::{comparison_table, run_bench, shared_params, BenchOptions, BenchReport, FlowConfig, Scenario};
use hewflow::compiler::{compile as compile_circuit, plan_packing, CompileOptions, CompiledCircuit, ModelGraph, RescaleMode};
use hewflow::engine::{classify, decrypt_batch, encrypt_batch, EncryptedBatch, ExecOptions, ExecutionMetrics, Executor};
use hewflow::format::{write_ciphertext, write_public_key, write_relin_key, write_secret_key};
use hewflow::models::{reference_model, CLASS_THRESHOLD, REFERENCE_MODELS};
use hewflow::ring::rng_from_seed;
use hewflow::scheme::{keygen as scheme_keygen, SchemeParams, SECURITY_DISCLAIMER};
use hewflow::sim::{
    calibrate, curve_csv, markdown_table, reproduce_rows, run_sim, RowResult, SimConfig, SimMetrics, REFERENCE_ROWS,
};
use hewflow::Error;
use serde::Serialize;

use crate::error::CliError;
use crate::workspace::*;
use crate::{Rescale, Switch};

type CliResult<T = ()> = Result<T, CliError>;

const DEFAULT_SIM_HORIZON_S: f64 = 1500.0;
const SIM_SHARDS: usize = 24;

fn rescale_mode(r: Rescale) -> RescaleMode {
    match r {
        Rescale::Eager => RescaleMode::Eager,
        Rescale::Off => RescaleMode::Off,
    }
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable") + "\n"
}

/// A reference model name, or a path to a model JSON file.
fn load_model(spec: &str, seed: u64) -> CliResult<ModelGraph> {
    if REFERENCE_MODELS.contains(&spec) {
        return Ok(reference_model(spec, seed)?);
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(CliError::Usage(format!(
            "unknown model '{spec}': expected one of {} or a model JSON path",
            REFERENCE_MODELS.join(", ")
        )));
    }
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
    ModelGraph::from_json(&text).map_err(|e| CliError::Context(display(path), e))
}

pub fn keygen(ws: &Workspace, seed: u64, model: Option<String>, limbs: Option<usize>, force: bool) -> CliResult {
    let existing: Vec<_> = [PUBLIC_KEY, SECRET_KEY, RELIN_KEY]
        .into_iter()
        .filter(|f| ws.exists(f))
        .collect();
    if !existing.is_empty() && !force {
        return Err(CliError::Usage(format!(
            "keys already exist in {} ({}); pass --force to overwrite",
            display(&ws.path("")),
            existing.join(", ")
        )));
    }
    let params = match (limbs, model) {
        (Some(0), _) => return Err(CliError::Usage("--limbs must be at least 1".into())),
        (Some(l), _) => SchemeParams::with_depth(l - 1)?,
        (None, Some(spec)) => params_for_model(&load_model(&spec, seed)?)?,
        (None, None) if ws.exists(MODEL) => params_for_model(&ws.model()?)?,
        (None, None) => SchemeParams::desk_default(),
    };
    eprintln!("{SECURITY_DISCLAIMER}");
    let keys = scheme_keygen(&params, seed)?;
    ws.write(PARAMS, json(&params.to_file()))?;
    ws.write(PUBLIC_KEY, write_public_key(&keys.public))?;
    ws.write(RELIN_KEY, write_relin_key(&keys.relin))?;
    ws.write(SECRET_KEY, write_secret_key(&keys.secret))?;
    println!(
        "keys written to {} (n={}, limbs={}, params hash {})",
        display(&ws.path("")),
        params.n(),
        params.max_level(),
        &hex(params.hash())[..16]
    );
    Ok(())
}

/// Chain on which both the optimized and the all-off configuration compile;
/// if the all-off one cannot fit, the optimized one alone.
fn params_for_model(model: &ModelGraph) -> CliResult<Arc<SchemeParams>> {
    let slots = SchemeParams::desk_default().slot_count();
    match shared_params(model, &[FlowConfig::OPTIMIZED, FlowConfig::BASELINE], slots) {
        Ok(p) => Ok(p),
        Err(Error::Resource(why)) => {
            eprintln!("note: rescale=off does not fit this model ({why}); sizing for eager rescaling");
            Ok(shared_params(model, &[FlowConfig::OPTIMIZED], slots)?)
        }
        Err(e) => Err(e.into()),
    }
}

pub fn compile(
    ws: &Workspace,
    seed: u64,
    model: &str,
    fuse: Switch,
    rescale: Rescale,
    batch: usize,
) -> CliResult {
    let model = load_model(model, seed)?;
    let params = ws.params()?;
    let circuit = compile_circuit(
        &model,
        &params,
        CompileOptions {
            batch,
            fuse: fuse.on(),
            rescale: rescale_mode(rescale),
        },
    )?;
    ws.write(MODEL, model.to_json())?;
    ws.write(CIRCUIT, json(&circuit))?;
    let counts = circuit.op_counts();
    println!(
        "compiled {}: {} inputs -> {} outputs, depth {}, {} task groups, {} ops (MUL_PLAIN {} ADD_CT {} ADD_PLAIN {} MUL_CT {} RESCALE {} MOD_SWITCH {}), entry level {}",
        model.name.as_deref().unwrap_or("model"),
        circuit.inputs.len(),
        circuit.outputs.len(),
        circuit.depth,
        circuit.group_count(),
        circuit.op_total(),
        counts[0],
        counts[1],
        counts[2],
        counts[3],
        counts[4],
        counts[5],
        circuit.input_level
    );
    Ok(())
}

/// Reads a headered CSV of finite floats with `width` columns.
fn read_csv(path: &Path, width: usize) -> CliResult<Vec<Vec<f64>>> {
    let bad = |msg: String| CliError::Usage(format!("{}: {msg}", display(path)));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => CliError::Missing(path.to_path_buf(), "input CSV not found".into()),
            _ => bad(e.to_string()),
        })?;
    let header = reader.headers().map_err(|e| bad(format!("header: {e}")))?.clone();
    if header.len() != width {
        return Err(bad(format!(
            "header has {} columns, the model expects {width} features",
            header.len()
        )));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        // data rows are numbered from 1; line numbers count the header
        let row = i + 1;
        let record = record.map_err(|e| bad(format!("row {row}: {e}")))?;
        let line = record.position().map_or(row + 1, |p| p.line() as usize);
        if record.len() != width {
            return Err(bad(format!(
                "row {row} (line {line}): {} columns, expected {width}",
                record.len()
            )));
        }
        let values = record
            .iter()
            .enumerate()
            .map(|(c, cell)| match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(bad(format!(
                    "row {row} (line {line}), column {} ('{}'): '{cell}' is not a finite number",
                    c + 1,
                    &header[c]
                ))),
            })
            .collect::<CliResult<Vec<f64>>>()?;
        rows.push(values);
    }
    Ok(rows)
}

pub fn encrypt(ws: &Workspace, seed: u64, input: &Path, batch: Option<usize>, packing: Switch) -> CliResult {
    let params = ws.params()?;
    let pk = ws.public_key(&params)?;
    let model = ws.model()?;
    let width = model.input_width()?;
    let rows = read_csv(input, width)?;
    let slots = params.slot_count();
    let batch = if packing.on() {
        match batch {
            Some(0) => return Err(CliError::Usage("--batch must be at least 1".into())),
            Some(b) if b > slots => {
                return Err(Error::TooManyValues { got: b, slots }.into());
            }
            Some(b) => b,
            None => rows.len().clamp(1, slots),
        }
    } else {
        1
    };
    let mut rng = rng_from_seed(seed ^ 0x0e4c_7e57);
    ws.reset_dir(INPUTS)?;
    let mut requests = Vec::new();
    for (r, chunk) in rows.chunks(batch).enumerate() {
        let plan = plan_packing(&model, chunk.len(), slots)?;
        let enc = encrypt_batch(chunk, &plan, &pk, params.max_level(), &mut rng)?;
        let tag = (!packing.on() || rows.len() > batch).then_some(r);
        let mut files = Vec::with_capacity(enc.ciphertexts.len());
        for (j, ct) in enc.ciphertexts.iter().enumerate() {
            let rel = blob_path(INPUTS, tag, "f", j);
            ws.write(&rel, write_ciphertext(ct))?;
            files.push(rel);
        }
        requests.push(RequestFiles {
            batch: chunk.len(),
            files,
        });
    }
    let manifest = Manifest {
        params_hash: hex(params.hash()),
        rows: rows.len(),
        batch_packing: packing.on(),
        requests,
    };
    ws.write(&format!("{INPUTS}/{MANIFEST}"), json(&manifest))?;
    let files: usize = manifest.requests.iter().map(|r| r.files.len()).sum();
    println!(
        "encrypted {} rows x {width} features into {} request(s), {files} ciphertext file(s) under {}",
        rows.len(),
        manifest.requests.len(),
        display(&ws.path(INPUTS))
    );
    Ok(())
}

fn check_hash(manifest: &Manifest, params: &SchemeParams, what: &str) -> CliResult {
    if manifest.params_hash != hex(params.hash()) {
        return Err(CliError::Context(
            format!("{what} were produced under different parameters than params.json"),
            Error::ParamsHashMismatch,
        ));
    }
    Ok(())
}

#[derive(Serialize)]
struct InferMetrics {
    config: FlowConfig,
    params_hash: String,
    limbs: usize,
    rows: usize,
    requests: usize,
    task_groups: usize,
    circuit_depth: usize,
    modulus_depth: usize,
    input_level: usize,
    wall_ms: f64,
    latency_ms_per_row: f64,
    throughput_rps: f64,
    dispatches: usize,
    op_counts: BTreeMap<String, usize>,
    avg_ciphertext_bytes: f64,
    peak_live_bytes: u64,
    handoff_bytes: u64,
    per_request: Vec<ExecutionMetrics>,
}

pub fn infer(ws: &Workspace, fuse: Switch, rescale: Rescale, packing: Switch) -> CliResult {
    let params = ws.params()?;
    let manifest = ws.manifest(INPUTS, "run `hewflow encrypt` first")?;
    check_hash(&manifest, &params, "input ciphertexts")?;
    if manifest.batch_packing != packing.on() {
        return Err(CliError::Usage(format!(
            "inputs were encrypted with --batch-packing {}; re-run `hewflow encrypt --batch-packing {}` for this configuration",
            if manifest.batch_packing { "on" } else { "off" },
            if packing.on() { "on" } else { "off" },
        )));
    }
    let model = ws.model()?;
    let relin = ws.relin_key(&params)?;
    let config = FlowConfig {
        fuse: fuse.on(),
        rescale: rescale_mode(rescale),
        batch_packing: packing.on(),
    };
    // Compile once per distinct request size, and fail before reading any
    // ciphertext if the configuration cannot run.
    let mut circuits: BTreeMap<usize, CompiledCircuit> = BTreeMap::new();
    for req in &manifest.requests {
        if !circuits.contains_key(&req.batch) {
            let c = compile_circuit(&model, &params, config.compile_options(req.batch))?;
            Executor::new(&c, &params, relin.as_ref(), ExecOptions::default())?;
            circuits.insert(req.batch, c);
        }
    }
    let reference = match circuits.values().next() {
        Some(c) => c.clone(),
        None => compile_circuit(&model, &params, config.compile_options(1))?,
    };
    if circuits.is_empty() {
        Executor::new(&reference, &params, relin.as_ref(), ExecOptions::default())?;
    }
    let inputs = manifest
        .requests
        .iter()
        .map(|r| ws.ciphertexts(&params, &r.files))
        .collect::<CliResult<Vec<_>>>()?;

    ws.reset_dir(OUTPUTS)?;
    let tagged = manifest.requests.len() > 1 || !manifest.batch_packing;
    let mut out_requests = Vec::with_capacity(inputs.len());
    let mut per_request = Vec::with_capacity(inputs.len());
    let start = Instant::now();
    for (r, (req, cts)) in manifest.requests.iter().zip(inputs).enumerate() {
        let circuit = &circuits[&req.batch];
        let exec = Executor::new(circuit, &params, relin.as_ref(), ExecOptions::default())?;
        let (out, metrics) = exec.execute(&EncryptedBatch {
            ciphertexts: cts,
            batch: req.batch,
        })?;
        let mut files = Vec::with_capacity(out.ciphertexts.len());
        for (j, ct) in out.ciphertexts.iter().enumerate() {
            let rel = blob_path(OUTPUTS, tagged.then_some(r), "o", j);
            ws.write(&rel, write_ciphertext(ct))?;
            files.push(rel);
        }
        out_requests.push(RequestFiles { batch: req.batch, files });
        per_request.push(metrics);
    }
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;

    let mut op_counts = BTreeMap::new();
    for m in &per_request {
        for (k, v) in &m.op_counts {
            *op_counts.entry(k.clone()).or_insert(0) += v;
        }
    }
    let trace = Executor::new(&reference, &params, relin.as_ref(), ExecOptions::default())?.trace();
    let metrics = InferMetrics {
        config,
        params_hash: hex(params.hash()),
        limbs: params.max_level(),
        rows: manifest.rows,
        requests: per_request.len(),
        task_groups: reference.group_count(),
        circuit_depth: reference.depth,
        modulus_depth: reference.modulus_depth,
        input_level: reference.input_level,
        wall_ms,
        latency_ms_per_row: if manifest.rows > 0 { wall_ms / manifest.rows as f64 } else { 0.0 },
        throughput_rps: if wall_ms > 0.0 { manifest.rows as f64 / (wall_ms / 1e3) } else { 0.0 },
        dispatches: per_request.iter().map(|m| m.dispatches).sum(),
        op_counts,
        avg_ciphertext_bytes: trace.avg_bytes,
        peak_live_bytes: trace.peak_live_bytes,
        handoff_bytes: per_request.iter().map(|m| m.handoff_bytes).sum(),
        per_request,
    };
    let out_manifest = Manifest {
        params_hash: manifest.params_hash.clone(),
        rows: manifest.rows,
        batch_packing: manifest.batch_packing,
        requests: out_requests,
    };
    ws.write(&format!("{OUTPUTS}/{MANIFEST}"), json(&out_manifest))?;
    ws.write(&format!("{OUTPUTS}/{METRICS}"), json(&metrics))?;
    println!(
        "inferred {} rows ({}) in {:.1} ms: {} dispatches, {:.4} ms/row",
        metrics.rows,
        config.label(),
        wall_ms,
        metrics.dispatches,
        metrics.latency_ms_per_row
    );
    Ok(())
}

pub fn decrypt(ws: &Workspace, output: Option<PathBuf>, limit: Option<usize>) -> CliResult {
    let params = ws.params()?;
    let manifest = ws.manifest(OUTPUTS, "run `hewflow infer` first")?;
    check_hash(&manifest, &params, "output ciphertexts")?;
    // Read and verify every blob before touching the secret key.
    let outputs = manifest
        .requests
        .iter()
        .map(|r| ws.ciphertexts(&params, &r.files))
        .collect::<CliResult<Vec<_>>>()?;
    let sk = ws.secret_key(&params)?;
    let width = manifest.requests.first().map_or(0, |r| r.files.len());
    let mut csv = String::from("row");
    for j in 0..width {
        let _ = write!(csv, ",score_{j}");
    }
    csv.push_str(",class\n");
    let limit = limit.unwrap_or(usize::MAX);
    let mut row = 0;
    'outer: for (req, cts) in manifest.requests.iter().zip(outputs) {
        let decoded = decrypt_batch(
            &sk,
            &EncryptedBatch {
                ciphertexts: cts,
                batch: req.batch,
            },
        )?;
        for scores in decoded {
            if row >= limit {
                break 'outer;
            }
            let _ = write!(csv, "{row}");
            for s in &scores {
                let _ = write!(csv, ",{s:.9}");
            }
            let _ = writeln!(csv, ",{}", classify(&scores, CLASS_THRESHOLD));
            row += 1;
        }
    }
    let dest = output.unwrap_or_else(|| ws.path(PREDICTIONS));
    if let Some(dir) = dest.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.to_path_buf(), e))?;
    }
    fs::write(&dest, csv).map_err(|e| CliError::Io(dest.clone(), e))?;
    println!("wrote {row} prediction(s) to {}", display(&dest));
    Ok(())
}

pub fn bench(ws: &Workspace, seed: u64, scenario: &str, model: Option<String>, reps: usize, batch: usize) -> CliResult {
    let scenario: Scenario = scenario.parse()?;
    let mut opts = BenchOptions::new(scenario);
    if let Some(m) = model {
        if !REFERENCE_MODELS.contains(&m.as_str()) {
            return Err(CliError::Usage(format!(
                "bench model must be one of {}",
                REFERENCE_MODELS.join(", ")
            )));
        }
        opts.model = m;
    }
    opts.repetitions = reps;
    opts.batch = batch;
    opts.seed = seed;
    let report = run_bench(&opts)?;
    let stem = format!("{REPORTS}/bench-{}-{}", scenario.name(), report.model);
    ws.write(&format!("{stem}.json"), json(&report))?;
    let md = report.to_markdown();
    ws.write(&format!("{stem}.md"), &md)?;
    print!("{md}");
    Ok(())
}

#[derive(Serialize)]
struct SimRun {
    pods: Option<usize>,
    metrics: SimMetrics,
}

pub fn simulate(
    ws: &Workspace,
    seed: Option<u64>,
    config: Option<PathBuf>,
    pods: Vec<usize>,
    horizon: Option<f64>,
) -> CliResult {
    if let Some(h) = horizon {
        if !(h >= 0.0 && h.is_finite()) {
            return Err(CliError::Usage("--horizon must be a non-negative number of seconds".into()));
        }
    }
    let (rows, runs, calibration) = match config {
        Some(path) => {
            let text = fs::read_to_string(&path).map_err(|e| match e.kind() {
                std::io::ErrorKind::NotFound => CliError::Missing(path.clone(), "simulation config not found".into()),
                _ => CliError::Io(path.clone(), e),
            })?;
            let mut cfg = SimConfig::from_json(&text).map_err(|e| CliError::Context(display(&path), e))?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(h) = horizon {
                cfg.workload.horizon_s = h;
            }
            let (rows, runs) = simulate_config(&cfg, &pods)?;
            (rows, runs, None)
        }
        None => simulate_reference(seed.unwrap_or(11), horizon.unwrap_or(DEFAULT_SIM_HORIZON_S), &pods)?,
    };
    ws.write(&format!("{REPORTS}/sim-metrics.json"), json(&runs))?;
    let table = markdown_table(&rows);
    ws.write(&format!("{REPORTS}/sim-table.md"), &table)?;
    ws.write(&format!("{REPORTS}/sim-curve.csv"), curve_csv(&rows))?;
    if let Some(c) = calibration {
        ws.write(&format!("{REPORTS}/sim-calibration.json"), c)?;
    }
    print!("{table}");
    Ok(())
}

fn simulate_config(cfg: &SimConfig, pods: &[usize]) -> CliResult<(Vec<RowResult>, Vec<SimRun>)> {
    cfg.validate()?;
    let mut rows = Vec::new();
    let mut runs = Vec::new();
    if pods.is_empty() {
        let m = run_sim(cfg)?;
        rows.push(RowResult::from_metrics(m.peak_pods, &m));
        runs.push(SimRun { pods: None, metrics: m });
    }
    for &p in pods {
        let mut c = cfg.clone();
        c.cluster.min_pods = p;
        c.cluster.max_pods = p;
        c.cluster.initial_pods = Some(p);
        c.validate().map_err(|e| CliError::Context(format!("--pods {p}"), e))?;
        let m = run_sim(&c)?;
        rows.push(RowResult::from_metrics(p, &m));
        runs.push(SimRun { pods: Some(p), metrics: m });
    }
    Ok((rows, runs))
}

#[derive(Serialize)]
struct CalibrationReport<'a> {
    calibration_rows: [usize; 2],
    calibration: &'a hewflow::sim::Calibration,
    rows: &'a [RowResult],
}

/// Calibrates on the 2- and 8-pod reference rows and replays all four at
/// their measured load; extra `pods` are swept at the 8-pod load.
fn simulate_reference(seed: u64, horizon: f64, pods: &[usize]) -> CliResult<(Vec<RowResult>, Vec<SimRun>, Option<String>)> {
    let cal = calibrate(&[REFERENCE_ROWS[0], REFERENCE_ROWS[3]], SIM_SHARDS)?;
    let mut rows = reproduce_rows(&cal, &REFERENCE_ROWS, horizon, seed)?;
    let u = REFERENCE_ROWS[3].cpu_pct / 100.0;
    let mut runs = Vec::new();
    for &p in pods.iter().filter(|p| !REFERENCE_ROWS.iter().any(|r| r.pods == **p)) {
        if p == 0 {
            return Err(CliError::Usage("--pods entries must be at least 1".into()));
        }
        let m = run_sim(&hewflow::sim::row_config(&cal, p, u, horizon, seed))?;
        rows.push(RowResult {
            predicted_latency_ms: Some(hewflow::sim::predict_latency_ms(&cal, p, u)),
            ..RowResult::from_metrics(p, &m)
        });
        runs.push(SimRun { pods: Some(p), metrics: m });
    }
    rows.sort_by_key(|r| r.pods);
    println!(
        "calibrated on 2 and 8 pods: request cost {:.2} ms, overhead {:.2} ms",
        cal.request_cost_ms, cal.overhead_ms
    );
    let report = CalibrationReport {
        calibration_rows: [REFERENCE_ROWS[0].pods, REFERENCE_ROWS[3].pods],
        calibration: &cal,
        rows: &rows,
    };
    let report = json(&report);
    Ok((rows, runs, Some(report)))
}

pub fn report(ws: &Workspace) -> CliResult {
    let dir = ws.path(REPORTS);
    let mut reports = Vec::new();
    if dir.exists() {
        let mut entries: Vec<PathBuf> = fs::read_dir(&dir)
            .map_err(|e| CliError::Io(dir.clone(), e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension().is_some_and(|x| x == "json")
                    && p.file_name().is_some_and(|n| n.to_string_lossy().starts_with("bench-"))
            })
            .collect();
        entries.sort();
        for p in entries {
            let text = fs::read_to_string(&p).map_err(|e| CliError::Io(p.clone(), e))?;
            let r: BenchReport = serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("{}: not a bench report: {e}", display(&p))))?;
            if !r.ratios_consistent() {
                return Err(CliError::Usage(format!(
                    "{}: stored ratios do not match the recorded measurements",
                    display(&p)
                )));
            }
            reports.push(r);
        }
    }
    let sim_table = ws.path(&format!("{REPORTS}/sim-table.md"));
    if reports.is_empty() && !sim_table.exists() {
        return Err(CliError::Missing(dir, "run `hewflow bench` or `hewflow simulate` first".into()));
    }
    let mut md = String::from("# hewflow report\n\n");
    let e2e: Vec<BenchReport> = reports.iter().filter(|r| r.scenario == Scenario::E2e).cloned().collect();
    if !e2e.is_empty() {
        md.push_str("## Baseline vs optimized (end to end)\n\n");
        md.push_str(&comparison_table(&e2e));
        md.push('\n');
    }
    let mut csv = String::from(
        "scenario,model,batch,repetitions,baseline_latency_ms,optimized_latency_ms,latency_speedup,latency_reduction,throughput_gain,size_reduction,baseline_dispatches,optimized_dispatches\n",
    );
    for r in &reports {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.scenario.name(),
            r.model,
            r.batch,
            r.repetitions,
            r.baseline.latency_ms,
            r.optimized.latency_ms,
            r.ratios.latency_speedup,
            r.ratios.latency_reduction,
            r.ratios.throughput_gain,
            r.ratios.size_reduction,
            r.baseline.dispatches,
            r.optimized.dispatches
        );
        md.push_str(&r.to_markdown());
        md.push('\n');
    }
    if sim_table.exists() {
        let table = fs::read_to_string(&sim_table).map_err(|e| CliError::Io(sim_table.clone(), e))?;
        md.push_str("## Cluster simulation\n\n");
        md.push_str(&table);
    }
    ws.write(&format!("{REPORTS}/summary.md"), &md)?;
    ws.write(&format!("{REPORTS}/bench-summary.csv"), csv)?;
    println!(
        "summarized {} bench report(s) into {}",
        reports.len(),
        display(&ws.path(&format!("{REPORTS}/summary.md")))
    );
    Ok(())
}
