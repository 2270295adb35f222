//! Static ciphertext-size accounting over a circuit's value trace.

use serde::Serialize;

use crate::compiler::CompiledCircuit;
use crate::scheme::ct_size_bytes;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceBytes {
    /// Ciphertexts materialized: inputs plus one per op result.
    pub ciphertexts: usize,
    pub total_bytes: u64,
    pub avg_bytes: f64,
    /// Largest sum of simultaneously live ciphertexts, freeing each value
    /// right after its last use (outputs live to the end).
    pub peak_live_bytes: u64,
}

/// Every value is a relinearized two-part ciphertext, so its size follows
/// from its level annotation alone.
pub fn trace_bytes(circuit: &CompiledCircuit, n: usize) -> TraceBytes {
    let size = |level: usize| ct_size_bytes(2, level, n) as u64;
    let ops: Vec<_> = circuit.ops().collect();
    let mut last_use = vec![None; circuit.value_count];
    for (i, op) in ops.iter().enumerate() {
        for &s in &op.srcs {
            last_use[s] = Some(i);
        }
    }
    for &o in &circuit.outputs {
        last_use[o] = Some(usize::MAX);
    }
    let mut bytes = vec![0u64; circuit.value_count];
    let mut live = 0u64;
    let mut total = 0u64;
    for &v in &circuit.inputs {
        bytes[v] = size(circuit.input_level);
        live += bytes[v];
        total += bytes[v];
    }
    let mut peak = live;
    for (i, op) in ops.iter().enumerate() {
        bytes[op.dst] = size(op.level);
        total += bytes[op.dst];
        live += bytes[op.dst];
        peak = peak.max(live);
        for (k, &s) in op.srcs.iter().enumerate() {
            if last_use[s] == Some(i) && !op.srcs[..k].contains(&s) {
                live -= bytes[s];
            }
        }
        if last_use[op.dst].is_none() {
            live -= bytes[op.dst];
        }
    }
    let count = circuit.inputs.len() + ops.len();
    TraceBytes {
        ciphertexts: count,
        total_bytes: total,
        avg_bytes: if count == 0 { 0.0 } else { total as f64 / count as f64 },
        peak_live_bytes: peak,
    }
}
