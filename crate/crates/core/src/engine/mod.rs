//! Encrypted execution of compiled circuits, with instrumentation.
//!
//! Each task group is one dispatch. Values that cross a group boundary are
//! handed off through the binary blob format, the way separate workers would
//! exchange them through storage. Inside a fused group, dense
//! multiply-accumulate chains run as a single lazy-reduction kernel.

mod plain;
mod trace;

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;
use std::time::Instant;

use rand::RngCore;
use serde::Serialize;

pub use plain::{classify, compare_outputs, execute_plain, DeviationReport};
pub use trace::{trace_bytes, TraceBytes};

use crate::compiler::{CompiledCircuit, ConstId, OpKind, PackingPlan, ValueId};
use crate::error::{Error, Result};
use crate::format;
use crate::scheme::{
    self, decrypt_values, encode, encrypt, Ciphertext, Plaintext, PublicKey, RelinKey, SchemeParams, SecretKey,
};

/// Feature-major batch: ciphertext j holds feature j of every sample.
#[derive(Debug, Clone)]
pub struct EncryptedBatch {
    pub ciphertexts: Vec<Ciphertext>,
    pub batch: usize,
}

impl EncryptedBatch {
    pub fn size_bytes(&self) -> usize {
        self.ciphertexts.iter().map(|c| c.size_bytes()).sum()
    }
}

/// Packs column j of `samples` into ciphertext j at `level` limbs.
pub fn encrypt_batch<R: RngCore>(
    samples: &[Vec<f64>],
    plan: &PackingPlan,
    pk: &PublicKey,
    level: usize,
    rng: &mut R,
) -> Result<EncryptedBatch> {
    let params = pk.params();
    let d = plan.feature_count();
    if samples.len() > params.slot_count() {
        return Err(Error::TooManyValues {
            got: samples.len(),
            slots: params.slot_count(),
        });
    }
    if let Some((i, row)) = samples.iter().enumerate().find(|(_, r)| r.len() != d) {
        return Err(Error::Shape(format!("sample {i} has {} features, plan expects {d}", row.len())));
    }
    let mut ciphertexts = Vec::with_capacity(d);
    for j in 0..d {
        let column: Vec<f64> = samples.iter().map(|r| r[j]).collect();
        let pt = encode(params, &column, params.scale(), level)?;
        ciphertexts.push(encrypt(pk, &pt, rng)?);
    }
    Ok(EncryptedBatch {
        ciphertexts,
        batch: samples.len(),
    })
}

/// Decrypts and unpacks: one row per sample, one column per ciphertext.
pub fn decrypt_batch(sk: &SecretKey, batch: &EncryptedBatch) -> Result<Vec<Vec<f64>>> {
    let cols = batch
        .ciphertexts
        .iter()
        .map(|ct| decrypt_values(sk, ct))
        .collect::<Result<Vec<_>>>()?;
    Ok((0..batch.batch).map(|i| cols.iter().map(|c| c[i]).collect()).collect())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ExecutionMetrics {
    /// Primitive ops executed, by kind (equals the circuit's static counts).
    pub op_counts: BTreeMap<String, usize>,
    /// Cumulative wall time per op kind; fused multiply-accumulate kernels
    /// are reported under `MAC_KERNEL`.
    pub op_time_ns: BTreeMap<String, u64>,
    pub group_time_ns: Vec<u64>,
    pub dispatches: usize,
    pub mac_kernels: usize,
    /// Inputs above the circuit's entry level, switched down on arrival.
    pub entry_mod_switches: usize,
    pub handoff_bytes: u64,
    pub handoff_time_ns: u64,
    /// Bytes of every ciphertext an op produced.
    pub bytes_processed: u64,
    pub avg_ciphertext_bytes: f64,
    pub peak_live_bytes: u64,
    pub latency_ms: f64,
}

impl ExecutionMetrics {
    pub fn op_time_total_ns(&self) -> u64 {
        self.op_time_ns.values().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExecOptions {
    /// Serialize values crossing group boundaries.
    pub handoff: bool,
    /// Use the multiply-accumulate kernel inside fused groups.
    pub mac_kernel: bool,
}

impl Default for ExecOptions {
    fn default() -> Self {
        Self {
            handoff: true,
            mac_kernel: true,
        }
    }
}

enum Step {
    Op(usize),
    Mac { dst: ValueId, terms: Vec<(ValueId, ConstId)> },
    Skip,
}

struct GroupPlan {
    steps: Vec<Step>,
    imports: Vec<ValueId>,
    exports: Vec<ValueId>,
}

enum Stored {
    Blob(Vec<u8>),
    Live(Ciphertext),
}

/// Read-only execution context; shareable across threads.
pub struct Executor<'a> {
    circuit: &'a CompiledCircuit,
    params: Arc<SchemeParams>,
    relin: Option<&'a RelinKey>,
    constants: Vec<Option<Plaintext>>,
    groups: Vec<GroupPlan>,
    opts: ExecOptions,
    trace: TraceBytes,
}

impl<'a> Executor<'a> {
    /// Validates the circuit against `params` and encodes every constant.
    pub fn new(
        circuit: &'a CompiledCircuit,
        params: &Arc<SchemeParams>,
        relin: Option<&'a RelinKey>,
        opts: ExecOptions,
    ) -> Result<Self> {
        circuit.validate(params)?;
        if let Some(rk) = relin {
            if rk.params().hash() != params.hash() {
                return Err(Error::ParamsHashMismatch);
            }
        }
        if relin.is_none() && circuit.count(OpKind::MulCt) > 0 {
            return Err(Error::MissingRelinKey);
        }
        let constants = circuit
            .constants
            .iter()
            .map(|c| {
                if c.level == 0 {
                    Ok(None)
                } else {
                    scheme::encode_constant(params, c.value, c.scale, c.level).map(Some)
                }
            })
            .collect::<Result<_>>()?;
        let groups = plan_groups(circuit, circuit.fused && opts.mac_kernel);
        Ok(Self {
            circuit,
            params: params.clone(),
            relin,
            constants,
            groups,
            opts,
            trace: trace_bytes(circuit, params.n()),
        })
    }

    pub fn trace(&self) -> TraceBytes {
        self.trace
    }

    pub fn execute(&self, batch: &EncryptedBatch) -> Result<(EncryptedBatch, ExecutionMetrics)> {
        let start = Instant::now();
        let c = self.circuit;
        let mut m = ExecutionMetrics {
            avg_ciphertext_bytes: self.trace.avg_bytes,
            peak_live_bytes: self.trace.peak_live_bytes,
            ..Default::default()
        };
        for kind in OpKind::ALL {
            m.op_counts.insert(kind.name().to_string(), 0);
        }
        if batch.ciphertexts.len() != c.inputs.len() {
            return Err(Error::Shape(format!(
                "batch has {} ciphertexts, circuit expects {}",
                batch.ciphertexts.len(),
                c.inputs.len()
            )));
        }

        let mut store: HashMap<ValueId, Stored> = HashMap::new();
        for (&v, ct) in c.inputs.iter().zip(&batch.ciphertexts) {
            if ct.params_hash() != self.params.hash() {
                return Err(Error::ParamsHashMismatch);
            }
            if !scheme::scales_match(ct.scale(), c.input_scale) {
                return Err(Error::ScaleMismatch(ct.scale(), c.input_scale));
            }
            let ct = match ct.level() {
                l if l < c.input_level => return Err(Error::LevelMismatch(l, c.input_level)),
                l if l > c.input_level => {
                    m.entry_mod_switches += 1;
                    scheme::mod_switch_to(ct, c.input_level)?
                }
                _ => ct.clone(),
            };
            self.put(&mut store, v, ct, &mut m);
        }

        let mut remaining_imports: HashMap<ValueId, usize> = HashMap::new();
        for g in &self.groups {
            for &v in &g.imports {
                *remaining_imports.entry(v).or_default() += 1;
            }
        }
        for &o in &c.outputs {
            *remaining_imports.entry(o).or_default() += 1;
        }

        for (gi, g) in self.groups.iter().enumerate() {
            let g_start = Instant::now();
            m.dispatches += 1;
            let mut local: HashMap<ValueId, Ciphertext> = HashMap::new();
            for &v in &g.imports {
                let ct = self.take(&mut store, &mut remaining_imports, v, &mut m)?;
                local.insert(v, ct);
            }
            let ops = &c.groups[gi].ops;
            for step in &g.steps {
                match step {
                    Step::Skip => {}
                    Step::Op(i) => {
                        let op = &ops[*i];
                        let t = Instant::now();
                        let x = &local[&op.srcs[0]];
                        let out = match op.kind {
                            OpKind::MulPlain => scheme::mul_plain(x, self.constant(op.constant)?)?,
                            OpKind::AddPlain => scheme::add_plain(x, self.constant(op.constant)?)?,
                            OpKind::AddCt => scheme::add(x, &local[&op.srcs[1]])?,
                            OpKind::MulCt => scheme::mul_opt(x, &local[&op.srcs[1]], self.relin)?,
                            OpKind::Rescale => scheme::rescale(x)?,
                            OpKind::ModSwitch => scheme::mod_switch_to(x, op.level)?,
                        };
                        *m.op_time_ns.entry(op.kind.name().to_string()).or_default() += t.elapsed().as_nanos() as u64;
                        *m.op_counts.get_mut(op.kind.name()).unwrap() += 1;
                        m.bytes_processed += out.size_bytes() as u64;
                        local.insert(op.dst, out);
                    }
                    Step::Mac { dst, terms } => {
                        let t = Instant::now();
                        let pairs = terms
                            .iter()
                            .map(|&(v, k)| Ok((&local[&v], self.constant(Some(k))?)))
                            .collect::<Result<Vec<_>>>()?;
                        let out = scheme::mul_plain_accumulate(&pairs)?;
                        *m.op_time_ns.entry("MAC_KERNEL".to_string()).or_default() += t.elapsed().as_nanos() as u64;
                        *m.op_counts.get_mut(OpKind::MulPlain.name()).unwrap() += terms.len();
                        *m.op_counts.get_mut(OpKind::AddCt.name()).unwrap() += terms.len() - 1;
                        m.mac_kernels += 1;
                        m.bytes_processed += out.size_bytes() as u64;
                        local.insert(*dst, out);
                    }
                }
            }
            for &v in &g.exports {
                let ct = local.remove(&v).ok_or_else(|| internal(format!("export v{v} missing")))?;
                self.put(&mut store, v, ct, &mut m);
            }
            m.group_time_ns.push(g_start.elapsed().as_nanos() as u64);
        }

        let outputs = c
            .outputs
            .iter()
            .map(|&o| self.take(&mut store, &mut remaining_imports, o, &mut m))
            .collect::<Result<Vec<_>>>()?;
        m.latency_ms = start.elapsed().as_secs_f64() * 1e3;
        Ok((
            EncryptedBatch {
                ciphertexts: outputs,
                batch: batch.batch,
            },
            m,
        ))
    }

    fn constant(&self, id: Option<ConstId>) -> Result<&Plaintext> {
        id.and_then(|k| self.constants.get(k)?.as_ref())
            .ok_or_else(|| internal("op references an unplanned constant".into()))
    }

    fn put(&self, store: &mut HashMap<ValueId, Stored>, v: ValueId, ct: Ciphertext, m: &mut ExecutionMetrics) {
        let stored = if self.opts.handoff {
            let t = Instant::now();
            let blob = format::write_ciphertext(&ct);
            m.handoff_bytes += blob.len() as u64;
            m.handoff_time_ns += t.elapsed().as_nanos() as u64;
            Stored::Blob(blob)
        } else {
            Stored::Live(ct)
        };
        store.insert(v, stored);
    }

    fn take(
        &self,
        store: &mut HashMap<ValueId, Stored>,
        remaining: &mut HashMap<ValueId, usize>,
        v: ValueId,
        m: &mut ExecutionMetrics,
    ) -> Result<Ciphertext> {
        let left = remaining.get_mut(&v).ok_or_else(|| internal(format!("v{v} has no consumers")))?;
        *left -= 1;
        let last = *left == 0;
        let stored = if last { store.remove(&v) } else { None };
        let stored = match &stored {
            Some(s) => s,
            None => store.get(&v).ok_or_else(|| internal(format!("v{v} not in storage")))?,
        };
        match stored {
            Stored::Live(ct) => Ok(ct.clone()),
            Stored::Blob(bytes) => {
                let t = Instant::now();
                let ct = format::read_ciphertext(&self.params, bytes)?;
                m.handoff_time_ns += t.elapsed().as_nanos() as u64;
                Ok(ct)
            }
        }
    }
}

fn internal(msg: String) -> Error {
    Error::InvalidModel(format!("engine: {msg}"))
}

/// One-shot convenience: prepare and run.
pub fn execute(
    circuit: &CompiledCircuit,
    params: &Arc<SchemeParams>,
    batch: &EncryptedBatch,
    relin: Option<&RelinKey>,
) -> Result<(EncryptedBatch, ExecutionMetrics)> {
    Executor::new(circuit, params, relin, ExecOptions::default())?.execute(batch)
}

fn plan_groups(c: &CompiledCircuit, mac: bool) -> Vec<GroupPlan> {
    let mut uses = vec![0usize; c.value_count];
    let mut group_of = vec![usize::MAX; c.value_count];
    for (gi, g) in c.groups.iter().enumerate() {
        for op in &g.ops {
            group_of[op.dst] = gi;
            for &s in &op.srcs {
                uses[s] += 1;
            }
        }
    }
    for &o in &c.outputs {
        uses[o] += 1;
    }

    let mut plans = Vec::with_capacity(c.groups.len());
    for (gi, g) in c.groups.iter().enumerate() {
        // Multiply-accumulate chains: MulPlain leaves joined by AddCt, with
        // every intermediate consumed exactly once inside the group.
        let mut chain: HashMap<ValueId, Vec<(ValueId, ConstId)>> = HashMap::new();
        let mut absorbed: HashMap<ValueId, bool> = HashMap::new();
        if mac {
            for op in &g.ops {
                match op.kind {
                    OpKind::MulPlain => {
                        if let Some(k) = op.constant {
                            chain.insert(op.dst, vec![(op.srcs[0], k)]);
                        }
                    }
                    OpKind::AddCt => {
                        let (a, b) = (op.srcs[0], op.srcs[1]);
                        let ok = a != b
                            && [a, b].iter().all(|v| chain.contains_key(v) && uses[*v] == 1 && group_of[*v] == gi);
                        if ok {
                            let mut terms = chain[&a].clone();
                            terms.extend(chain[&b].iter().copied());
                            chain.insert(op.dst, terms);
                            absorbed.insert(a, true);
                            absorbed.insert(b, true);
                        }
                    }
                    _ => {}
                }
            }
        }
        let steps = g
            .ops
            .iter()
            .enumerate()
            .map(|(i, op)| {
                if absorbed.contains_key(&op.dst) {
                    Step::Skip
                } else if op.kind == OpKind::AddCt && chain.contains_key(&op.dst) {
                    Step::Mac {
                        dst: op.dst,
                        terms: chain[&op.dst].clone(),
                    }
                } else {
                    Step::Op(i)
                }
            })
            .collect();

        let defined: std::collections::HashSet<ValueId> = g.ops.iter().map(|o| o.dst).collect();
        let mut imports = Vec::new();
        for op in &g.ops {
            for &s in &op.srcs {
                if !defined.contains(&s) && !imports.contains(&s) {
                    imports.push(s);
                }
            }
        }
        plans.push(GroupPlan {
            steps,
            imports,
            exports: Vec::new(),
        });
    }
    // A value is exported if a later group imports it or it is an output.
    let mut exported = vec![false; c.value_count];
    for p in &plans {
        for &v in &p.imports {
            exported[v] = true;
        }
    }
    for &o in &c.outputs {
        exported[o] = true;
    }
    for (gi, g) in c.groups.iter().enumerate() {
        plans[gi].exports = g.ops.iter().map(|o| o.dst).filter(|&v| exported[v]).collect();
    }
    plans
}
