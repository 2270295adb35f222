use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::packing::PackingPlan;
use crate::error::{Error, Result};
use crate::scheme::{scales_match, SchemeParams};

pub type ValueId = usize;
pub type ConstId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OpKind {
    MulPlain,
    AddCt,
    AddPlain,
    MulCt,
    Rescale,
    ModSwitch,
}

impl OpKind {
    pub const ALL: [OpKind; 6] = [
        OpKind::MulPlain,
        OpKind::AddCt,
        OpKind::AddPlain,
        OpKind::MulCt,
        OpKind::Rescale,
        OpKind::ModSwitch,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OpKind::MulPlain => "MUL_PLAIN",
            OpKind::AddCt => "ADD_CT",
            OpKind::AddPlain => "ADD_PLAIN",
            OpKind::MulCt => "MUL_CT",
            OpKind::Rescale => "RESCALE",
            OpKind::ModSwitch => "MOD_SWITCH",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Op {
    pub kind: OpKind,
    pub dst: ValueId,
    pub srcs: Vec<ValueId>,
    pub constant: Option<ConstId>,
    /// 1-based model layer that produced the op.
    pub layer: usize,
    /// Level and scale of `dst`; zero until levels are planned.
    pub level: usize,
    pub scale: f64,
}

/// A scalar broadcast to every slot, encoded at `scale` with `level` limbs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constant {
    pub value: f64,
    pub scale: f64,
    pub level: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskGroup {
    pub label: String,
    /// Groups sharing a unit (a dense layer and its activation) fuse together.
    pub unit: usize,
    pub ops: Vec<Op>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RescaleMode {
    /// Rescale as soon as a product is consumed or leaves its task group.
    Eager,
    /// No modulus switching inside the circuit; outputs are rescaled at the end.
    Off,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompiledCircuit {
    pub groups: Vec<TaskGroup>,
    pub constants: Vec<Constant>,
    pub inputs: Vec<ValueId>,
    pub outputs: Vec<ValueId>,
    pub value_count: usize,
    pub input_level: usize,
    pub input_scale: f64,
    /// Multiplicative depth of the model (levels an eager plan consumes).
    pub depth: usize,
    /// Levels this plan consumes between inputs and outputs.
    pub modulus_depth: usize,
    pub fused: bool,
    pub rescale: RescaleMode,
    pub planned: bool,
    pub plan: PackingPlan,
    #[serde(skip)]
    pub(crate) source: Vec<TaskGroup>,
    #[serde(skip)]
    pub(crate) source_constants: Vec<Constant>,
    #[serde(skip)]
    pub(crate) source_values: usize,
    #[serde(skip)]
    pub(crate) source_outputs: Vec<ValueId>,
}

impl CompiledCircuit {
    pub fn ops(&self) -> impl Iterator<Item = &Op> {
        self.groups.iter().flat_map(|g| g.ops.iter())
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    pub fn op_counts(&self) -> [usize; 6] {
        let mut c = [0; 6];
        for op in self.ops() {
            c[op.kind.index()] += 1;
        }
        c
    }

    pub fn count(&self, kind: OpKind) -> usize {
        self.op_counts()[kind.index()]
    }

    pub fn op_total(&self) -> usize {
        self.ops().count()
    }

    /// One line per op: `L<level> <OP> <dst> <srcs...> scale=<s>`.
    pub fn debug_dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# inputs={} outputs={} level={} depth={} modulus_depth={} fused={} rescale={:?}",
            self.inputs.len(),
            self.outputs.len(),
            self.input_level,
            self.depth,
            self.modulus_depth,
            self.fused,
            self.rescale
        );
        for (gi, g) in self.groups.iter().enumerate() {
            let _ = writeln!(s, "# group {gi}: {}", g.label);
            for op in &g.ops {
                let _ = write!(s, "L{} {} v{}", op.level, op.kind.name(), op.dst);
                for src in &op.srcs {
                    let _ = write!(s, " v{src}");
                }
                if let Some(c) = op.constant {
                    let _ = write!(s, " c{c}");
                }
                let _ = writeln!(s, " scale=2^{:.4}", op.scale.log2());
            }
        }
        s
    }

    /// Checks dataflow order and re-derives every level/scale annotation.
    pub fn validate(&self, params: &SchemeParams) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidModel(format!("circuit validation: {msg}")));
        if !self.planned {
            return bad("levels have not been planned".into());
        }
        if self.depth + 1 > params.max_level() && self.rescale == RescaleMode::Eager {
            return Err(Error::DepthOverflow {
                layer: 0,
                needed: self.depth,
                available: params.max_level() - 1,
            });
        }
        if self.input_level > params.max_level() {
            return bad(format!("input level {} above chain", self.input_level));
        }
        let mut state: Vec<Option<(usize, f64)>> = vec![None; self.value_count];
        for &i in &self.inputs {
            state[i] = Some((self.input_level, self.input_scale));
        }
        let mut defined: HashSet<ValueId> = self.inputs.iter().copied().collect();
        for op in self.ops() {
            let mut srcs = Vec::with_capacity(2);
            for &s in &op.srcs {
                match state.get(s).copied().flatten() {
                    Some(x) => srcs.push(x),
                    None => return bad(format!("v{s} used before definition")),
                }
            }
            if !defined.insert(op.dst) {
                return bad(format!("v{} defined twice", op.dst));
            }
            let constant = op.constant.map(|c| &self.constants[c]);
            let (level, scale) = match op.kind {
                OpKind::MulPlain | OpKind::AddPlain => {
                    let c = match constant {
                        Some(c) => c,
                        None => return bad(format!("{} without constant", op.kind.name())),
                    };
                    if c.level != srcs[0].0 {
                        return bad(format!("constant level {} vs operand {}", c.level, srcs[0].0));
                    }
                    if op.kind == OpKind::AddPlain {
                        if !scales_match(c.scale, srcs[0].1) {
                            return bad(format!("v{}: add scale mismatch", op.dst));
                        }
                        srcs[0]
                    } else {
                        (srcs[0].0, srcs[0].1 * c.scale)
                    }
                }
                OpKind::AddCt | OpKind::MulCt => {
                    if srcs.len() != 2 || srcs[0].0 != srcs[1].0 {
                        return bad(format!("v{}: operand levels differ", op.dst));
                    }
                    if op.kind == OpKind::AddCt {
                        if !scales_match(srcs[0].1, srcs[1].1) {
                            return bad(format!("v{}: add scale mismatch", op.dst));
                        }
                        srcs[0]
                    } else {
                        (srcs[0].0, srcs[0].1 * srcs[1].1)
                    }
                }
                OpKind::Rescale => {
                    if srcs[0].0 < 2 {
                        return bad(format!("v{}: rescale at bottom level", op.dst));
                    }
                    (srcs[0].0 - 1, srcs[0].1 / params.prime_at(srcs[0].0) as f64)
                }
                OpKind::ModSwitch => {
                    if op.level == 0 || op.level > srcs[0].0 {
                        return bad(format!("v{}: mod switch upwards", op.dst));
                    }
                    (op.level, srcs[0].1)
                }
            };
            if level != op.level || !scales_match(scale, op.scale) {
                return bad(format!(
                    "v{}: annotated L{} scale 2^{:.3}, derived L{} scale 2^{:.3}",
                    op.dst,
                    op.level,
                    op.scale.log2(),
                    level,
                    scale.log2()
                ));
            }
            state[op.dst] = Some((level, scale));
        }
        for &o in &self.outputs {
            if state.get(o).copied().flatten().is_none() {
                return bad(format!("output v{o} never defined"));
            }
        }
        Ok(())
    }

    /// Level and scale of every output.
    pub fn output_annotations(&self) -> Vec<(usize, f64)> {
        let mut ann = vec![(self.input_level, self.input_scale); self.value_count];
        for op in self.ops() {
            ann[op.dst] = (op.level, op.scale);
        }
        self.outputs.iter().map(|&o| ann[o]).collect()
    }
}
