//! Model -> level-annotated encrypted circuit.
//!
//! Pipeline: packing plan -> lowering (conv to dense, activations to
//! polynomials) -> op emission -> optional fusion -> level planning.

mod activation;
mod circuit;
mod emit;
mod levels;
mod lower;
mod model;
mod packing;

use std::sync::Arc;

pub use activation::{
    approximate_activation, chebyshev_nodes, max_residual, ActivationKind, ActivationPolynomial, DEFAULT_DEGREE,
    ERROR_GRID, FIT_NODES,
};
pub use circuit::{CompiledCircuit, ConstId, Constant, Op, OpKind, RescaleMode, TaskGroup, ValueId};
pub use emit::fuse_groups;
pub use levels::{Chain, OFF_MODE_HEADROOM_BITS};
pub use lower::{lower, lower_conv_to_dense, Lowered};
pub use model::{conv_direct, Layer, ModelGraph};
pub use packing::{plan_packing, Layout, PackingPlan};

use crate::error::{Error, Result};
use crate::scheme::{SchemeParams, BASE_PRIME_BITS, DEFAULT_N, DEFAULT_SCALE_BITS, RESCALE_PRIME_BITS};

/// Longest modulus chain the sizing helpers will propose.
pub const MAX_LIMBS: usize = 16;
const PROBE_LEVELS: usize = 64;
/// Bits left for output magnitudes above the scale.
const OFF_MODE_OUTPUT_HEADROOM_BITS: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompileOptions {
    pub batch: usize,
    pub fuse: bool,
    pub rescale: RescaleMode,
}

impl Default for CompileOptions {
    fn default() -> Self {
        Self {
            batch: 1024,
            fuse: true,
            rescale: RescaleMode::Eager,
        }
    }
}

fn chain_of(params: &SchemeParams) -> Chain {
    Chain {
        primes: params.ring().primes().iter().map(|&p| p as f64).collect(),
        scale: params.scale(),
    }
}

/// Emits the unplanned, unfused circuit.
pub fn emit_circuit(model: &ModelGraph, batch: usize, slot_count: usize) -> Result<CompiledCircuit> {
    let plan = plan_packing(model, batch, slot_count)?;
    let lowered = lower(model)?;
    let e = emit::emit(&lowered, plan.feature_count());
    Ok(CompiledCircuit {
        groups: e.groups.clone(),
        constants: e.constants.clone(),
        inputs: e.inputs,
        outputs: e.outputs.clone(),
        value_count: e.value_count,
        input_level: 0,
        input_scale: 0.0,
        depth: 0,
        modulus_depth: 0,
        fused: false,
        rescale: RescaleMode::Eager,
        planned: false,
        plan,
        source: e.groups,
        source_constants: e.constants,
        source_values: e.value_count,
        source_outputs: e.outputs,
    })
}

/// Merges each dense layer's matmul, bias and following activation into one
/// task group. A planned circuit is re-planned under `params`.
pub fn fuse_operators(circuit: &CompiledCircuit, params: Option<&SchemeParams>) -> Result<CompiledCircuit> {
    let mut out = circuit.clone();
    out.fused = true;
    if circuit.planned {
        let params = params.ok_or_else(|| Error::Config("re-planning a fused circuit needs params".into()))?;
        return plan_levels(&out, params, circuit.rescale);
    }
    out.groups = fuse_groups(&circuit.groups);
    Ok(out)
}

/// Multiplicative depth: levels an eager plan consumes on an unbounded chain.
pub fn circuit_depth(circuit: &CompiledCircuit) -> Result<usize> {
    let groups = logical_groups(circuit);
    let chain = Chain::virtual_chain(PROBE_LEVELS, 2f64.powi(DEFAULT_SCALE_BITS as i32));
    let p = levels::plan(
        &groups,
        &circuit.source_constants,
        &circuit.inputs,
        &circuit.source_outputs,
        circuit.source_values,
        &chain,
        RescaleMode::Eager,
        PROBE_LEVELS,
    )?;
    let low = output_levels(&p.groups, &p.outputs, PROBE_LEVELS).into_iter().min().unwrap_or(PROBE_LEVELS);
    Ok(PROBE_LEVELS - low)
}

fn logical_groups(c: &CompiledCircuit) -> Vec<TaskGroup> {
    if c.fused {
        fuse_groups(&c.source)
    } else {
        c.source.clone()
    }
}

fn output_levels(groups: &[TaskGroup], outputs: &[ValueId], input_level: usize) -> Vec<usize> {
    let mut level = std::collections::HashMap::new();
    for op in groups.iter().flat_map(|g| &g.ops) {
        level.insert(op.dst, op.level);
    }
    outputs.iter().map(|o| level.get(o).copied().unwrap_or(input_level)).collect()
}

/// Inserts rescales / mod switches and annotates levels and scales.
pub fn plan_levels(circuit: &CompiledCircuit, params: &SchemeParams, mode: RescaleMode) -> Result<CompiledCircuit> {
    let depth = circuit_depth(circuit)?;
    let top = params.max_level();
    let chain = chain_of(params);
    let groups = logical_groups(circuit);
    let run = |input_level: usize| {
        levels::plan(
            &groups,
            &circuit.source_constants,
            &circuit.inputs,
            &circuit.source_outputs,
            circuit.source_values,
            &chain,
            mode,
            input_level,
        )
    };
    let overflow = |layer: usize| Error::DepthOverflow {
        layer,
        needed: depth,
        available: top - 1,
    };
    let input_level = match mode {
        RescaleMode::Eager if depth + 1 > top => {
            return Err(match run(top) {
                Err(Error::DepthOverflow { layer, .. }) => overflow(layer),
                Err(e) => e,
                Ok(_) => overflow(circuit.source.last().and_then(|g| g.ops.last()).map_or(0, |o| o.layer)),
            });
        }
        RescaleMode::Eager => depth + 1,
        RescaleMode::Off => top,
    };
    let planned = run(input_level).map_err(|e| match e {
        Error::DepthOverflow { layer, .. } => overflow(layer),
        e => e,
    })?;

    if mode == RescaleMode::Off {
        let need = planned.max_scale.log2() + OFF_MODE_HEADROOM_BITS;
        let have = chain.log2_modulus(top);
        if need > have {
            return Err(Error::Resource(format!(
                "rescale off: values reach scale 2^{:.0}, needing ~{need:.0} modulus bits; the {top}-limb chain has {have:.0}",
                planned.max_scale.log2()
            )));
        }
    }
    let out_levels = output_levels(&planned.groups, &planned.outputs, input_level);
    let mut out = circuit.clone();
    out.groups = planned.groups;
    out.constants = planned.constants;
    out.outputs = planned.outputs;
    out.value_count = planned.value_count;
    out.input_level = input_level;
    out.input_scale = params.scale();
    out.depth = depth;
    out.modulus_depth = input_level - out_levels.iter().copied().min().unwrap_or(input_level);
    out.rescale = mode;
    out.planned = true;

    if mode == RescaleMode::Off {
        for (level, scale) in out.output_annotations() {
            if scale.log2() + OFF_MODE_OUTPUT_HEADROOM_BITS > chain.log2_modulus(level) {
                return Err(Error::Resource(format!(
                    "rescale off: outputs stay at scale 2^{:.0}; the chain is too short to bring them back",
                    scale.log2()
                )));
            }
        }
    }
    out.validate(params)?;
    Ok(out)
}

/// packing -> lowering -> emission -> fusion -> level planning.
pub fn compile(model: &ModelGraph, params: &SchemeParams, opts: CompileOptions) -> Result<CompiledCircuit> {
    let mut c = emit_circuit(model, opts.batch, params.slot_count())?;
    if opts.fuse {
        c = fuse_operators(&c, None)?;
    }
    plan_levels(&c, params, opts.rescale)
}

fn limb_bits(limbs: usize) -> Vec<u32> {
    let mut bits = vec![BASE_PRIME_BITS];
    bits.extend(std::iter::repeat(RESCALE_PRIME_BITS).take(limbs - 1));
    bits
}

/// Smallest default-shaped chain (40-bit base, 30-bit primes, n = 2048,
/// scale 2^30) on which `model` compiles under `opts`.
pub fn params_for(model: &ModelGraph, opts: CompileOptions) -> Result<Arc<SchemeParams>> {
    let mut c = emit_circuit(model, opts.batch, DEFAULT_N / 2)?;
    c.fused = opts.fuse;
    let start = (circuit_depth(&c)? + 1).max(2);
    let mut last_err = None;
    for limbs in start..=MAX_LIMBS {
        let params = SchemeParams::from_bits(DEFAULT_N, &limb_bits(limbs), DEFAULT_SCALE_BITS)?;
        match compile(model, &params, opts) {
            Ok(_) => return Ok(params),
            Err(e @ (Error::Resource(_) | Error::DepthOverflow { .. })) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(Error::Resource(format!(
        "no chain of at most {MAX_LIMBS} limbs fits this model ({})",
        last_err.map_or_else(String::new, |e| e.to_string())
    )))
}
