//! Level and scale planning.
//!
//! Walks the ops of (possibly fused) task groups in order, tracking each
//! value's level and scale. In eager mode a product ("raised" value) is
//! rescaled when it feeds a multiplication or leaves its task group; adds
//! consume raised values directly. Binary ops align levels by mod-switching
//! the higher operand down. Multiplier constants start at the prime about
//! to be dropped (exact scale restoration); a multiplier constant that has
//! not been consumed yet is retuned when its product meets an add operand
//! at a different scale.

use std::collections::{HashMap, HashSet};

use super::circuit::{Constant, ConstId, Op, OpKind, RescaleMode, TaskGroup, ValueId};
use crate::error::{Error, Result};
use crate::scheme::scales_match;

/// Rescale-off mode keeps this many bits of the top modulus free for values.
pub const OFF_MODE_HEADROOM_BITS: f64 = 12.0;
/// Terminal rescales in rescale-off mode stop once the scale would fall below this.
pub const OFF_MODE_MIN_SCALE_BITS: f64 = 20.0;

/// Prime values (as floats) of a modulus chain, base prime first.
#[derive(Debug, Clone)]
pub struct Chain {
    pub primes: Vec<f64>,
    pub scale: f64,
}

impl Chain {
    fn prime_at(&self, level: usize) -> f64 {
        self.primes[level - 1]
    }

    pub fn log2_modulus(&self, level: usize) -> f64 {
        self.primes[..level].iter().map(|p| p.log2()).sum()
    }

    /// Stand-in chain for depth probing: every prime equals the scale.
    pub fn virtual_chain(levels: usize, scale: f64) -> Self {
        Self {
            primes: vec![scale; levels],
            scale,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Info {
    level: usize,
    scale: f64,
    raised: bool,
}

pub(crate) struct Planned {
    pub groups: Vec<TaskGroup>,
    pub constants: Vec<Constant>,
    pub outputs: Vec<ValueId>,
    pub value_count: usize,
    pub max_scale: f64,
}

struct Planner<'a> {
    chain: &'a Chain,
    mode: RescaleMode,
    info: Vec<Option<Info>>,
    constants: Vec<Constant>,
    /// constant -> values whose scale depends on it, with their defining op
    tunable: HashMap<ConstId, Vec<(usize, usize, ValueId)>>,
    /// value -> constant it can still be retuned through
    tune_of: HashMap<ValueId, ConstId>,
    rescaled: HashMap<ValueId, ValueId>,
    switched: HashMap<(ValueId, usize), ValueId>,
    groups: Vec<TaskGroup>,
    max_scale: f64,
}

impl Planner<'_> {
    fn new_value(&mut self, info: Info) -> ValueId {
        self.info.push(Some(info));
        self.max_scale = self.max_scale.max(info.scale);
        self.info.len() - 1
    }

    fn get(&self, v: ValueId) -> Info {
        self.info[v].expect("value defined before use")
    }

    fn push(&mut self, g: usize, mut op: Op, info: Info) -> ValueId {
        op.level = info.level;
        op.scale = info.scale;
        let v = op.dst;
        if v >= self.info.len() {
            self.info.resize(v + 1, None);
        }
        self.info[v] = Some(info);
        self.max_scale = self.max_scale.max(info.scale);
        self.groups[g].ops.push(op);
        v
    }

    fn consume(&mut self, v: ValueId) {
        if let Some(c) = self.tune_of.remove(&v) {
            self.tunable.remove(&c);
        }
    }

    fn rescale(&mut self, g: usize, v: ValueId, layer: usize) -> Result<ValueId> {
        if let Some(&r) = self.rescaled.get(&v) {
            return Ok(r);
        }
        self.consume(v);
        let i = self.get(v);
        if i.level < 2 {
            return Err(Error::DepthOverflow {
                layer,
                needed: 0,
                available: 0,
            });
        }
        let info = Info {
            level: i.level - 1,
            scale: i.scale / self.chain.prime_at(i.level),
            raised: false,
        };
        let dst = self.new_value(info);
        self.push(
            g,
            Op {
                kind: OpKind::Rescale,
                dst,
                srcs: vec![v],
                constant: None,
                layer,
                level: 0,
                scale: 0.0,
            },
            info,
        );
        self.rescaled.insert(v, dst);
        Ok(dst)
    }

    /// Multiplication operands must not carry a raised scale in eager mode.
    fn settle(&mut self, g: usize, v: ValueId, layer: usize) -> Result<ValueId> {
        if self.mode == RescaleMode::Eager && self.get(v).raised {
            self.rescale(g, v, layer)
        } else {
            Ok(v)
        }
    }

    fn switch_to(&mut self, g: usize, v: ValueId, level: usize, layer: usize) -> ValueId {
        let i = self.get(v);
        if i.level == level {
            return v;
        }
        if let Some(&s) = self.switched.get(&(v, level)) {
            return s;
        }
        let info = Info { level, ..i };
        let dst = self.new_value(info);
        self.push(
            g,
            Op {
                kind: OpKind::ModSwitch,
                dst,
                srcs: vec![v],
                constant: None,
                layer,
                level: 0,
                scale: 0.0,
            },
            info,
        );
        // the switched copy stays retunable through the same constant
        if let Some(&c) = self.tune_of.get(&v) {
            let at = (g, self.groups[g].ops.len() - 1, dst);
            self.tunable.get_mut(&c).expect("linked").push(at);
            self.tune_of.insert(dst, c);
        }
        self.switched.insert((v, level), dst);
        dst
    }

    fn align(&mut self, g: usize, a: ValueId, b: ValueId, layer: usize) -> (ValueId, ValueId) {
        let (la, lb) = (self.get(a).level, self.get(b).level);
        let low = la.min(lb);
        (self.switch_to(g, a, low, layer), self.switch_to(g, b, low, layer))
    }

    /// Makes `v`'s scale equal `target` by retuning its multiplier constant.
    fn retune(&mut self, v: ValueId, target: f64) -> bool {
        let Some(&c) = self.tune_of.get(&v) else {
            return false;
        };
        let old = self.constants[c].scale;
        let base = self.get(v).scale / old;
        let new = target / base;
        self.constants[c].scale = new;
        let links = self.tunable.remove(&c).unwrap_or_default();
        for (g, o, val) in links {
            let op = &mut self.groups[g].ops[o];
            op.scale = base * new;
            if let Some(i) = self.info[val].as_mut() {
                i.scale = base * new;
            }
            self.tune_of.remove(&val);
        }
        true
    }

    fn plan_op(&mut self, g: usize, op: &Op, map: &mut Vec<ValueId>) -> Result<()> {
        let layer = op.layer;
        let src: Vec<ValueId> = op.srcs.iter().map(|&s| map[s]).collect();
        let mut out = op.clone();
        let dst = self.new_value(Info {
            level: 0,
            scale: 1.0,
            raised: false,
        });
        out.dst = dst;
        let info = match op.kind {
            OpKind::MulPlain => {
                let x = self.settle(g, src[0], layer)?;
                self.consume(x);
                let xi = self.get(x);
                let c = op.constant.expect("multiplier constant");
                let scale = match self.mode {
                    RescaleMode::Eager => self.chain.prime_at(xi.level),
                    RescaleMode::Off => self.chain.scale,
                };
                self.constants[c] = Constant {
                    value: self.constants[c].value,
                    scale,
                    level: xi.level,
                };
                out.srcs = vec![x];
                let info = Info {
                    level: xi.level,
                    scale: xi.scale * scale,
                    raised: true,
                };
                let idx = self.groups[g].ops.len();
                self.tunable.insert(c, vec![(g, idx, dst)]);
                self.tune_of.insert(dst, c);
                info
            }
            OpKind::MulCt => {
                let a = self.settle(g, src[0], layer)?;
                let b = self.settle(g, src[1], layer)?;
                let (a, b) = self.align(g, a, b, layer);
                self.consume(a);
                self.consume(b);
                out.srcs = vec![a, b];
                let (ai, bi) = (self.get(a), self.get(b));
                Info {
                    level: ai.level,
                    scale: ai.scale * bi.scale,
                    raised: true,
                }
            }
            OpKind::AddCt => {
                let (a, b) = self.align(g, src[0], src[1], layer);
                let (sa, sb) = (self.get(a).scale, self.get(b).scale);
                if !scales_match(sa, sb) && !self.retune(b, sa) && !self.retune(a, sb) {
                    return Err(Error::InvalidModel(format!(
                        "layer {layer}: cannot align add scales 2^{:.3} and 2^{:.3}",
                        sa.log2(),
                        sb.log2()
                    )));
                }
                self.consume(a);
                self.consume(b);
                out.srcs = vec![a, b];
                let (ai, bi) = (self.get(a), self.get(b));
                Info {
                    level: ai.level,
                    scale: ai.scale,
                    raised: ai.raised || bi.raised,
                }
            }
            OpKind::AddPlain => {
                let x = src[0];
                self.consume(x);
                let xi = self.get(x);
                let c = op.constant.expect("addend constant");
                self.constants[c] = Constant {
                    value: self.constants[c].value,
                    scale: xi.scale,
                    level: xi.level,
                };
                out.srcs = vec![x];
                xi
            }
            OpKind::Rescale | OpKind::ModSwitch => unreachable!("source circuits carry no level ops"),
        };
        self.push(g, out, info);
        map[op.dst] = dst;
        Ok(())
    }
}

/// Plans `groups` starting from inputs at `input_level` / `chain.scale`.
pub(crate) fn plan(
    groups: &[TaskGroup],
    constants: &[Constant],
    inputs: &[ValueId],
    outputs: &[ValueId],
    value_count: usize,
    chain: &Chain,
    mode: RescaleMode,
    input_level: usize,
) -> Result<Planned> {
    let mut p = Planner {
        chain,
        mode,
        info: Vec::with_capacity(value_count * 2),
        constants: constants.to_vec(),
        tunable: HashMap::new(),
        tune_of: HashMap::new(),
        rescaled: HashMap::new(),
        switched: HashMap::new(),
        groups: groups
            .iter()
            .map(|g| TaskGroup {
                label: g.label.clone(),
                unit: g.unit,
                ops: Vec::new(),
            })
            .collect(),
        max_scale: chain.scale,
    };
    // Planned ids: inputs keep their ids; everything else is renumbered.
    let mut map: Vec<ValueId> = vec![usize::MAX; value_count];
    for &i in inputs {
        let v = p.new_value(Info {
            level: input_level,
            scale: chain.scale,
            raised: false,
        });
        map[i] = v;
    }

    // last group that reads each source value
    let mut last_use: HashMap<ValueId, usize> = HashMap::new();
    for (gi, g) in groups.iter().enumerate() {
        for op in &g.ops {
            for &s in &op.srcs {
                last_use.insert(s, gi);
            }
        }
    }
    let output_set: HashSet<ValueId> = outputs.iter().copied().collect();

    for (gi, g) in groups.iter().enumerate() {
        for op in &g.ops {
            p.plan_op(gi, op, &mut map)?;
        }
        if mode == RescaleMode::Eager {
            for op in &g.ops {
                let leaves = output_set.contains(&op.dst) || last_use.get(&op.dst).is_some_and(|&u| u > gi);
                let v = map[op.dst];
                if leaves && p.get(v).raised {
                    map[op.dst] = p.rescale(gi, v, op.layer)?;
                }
            }
        }
    }

    let mut planned_outputs: Vec<ValueId> = outputs.iter().map(|&o| map[o]).collect();
    if mode == RescaleMode::Off {
        let min_scale = OFF_MODE_MIN_SCALE_BITS.exp2();
        let last = p.groups.len().saturating_sub(1);
        let mut layer_of: HashMap<ValueId, (usize, usize)> = HashMap::new();
        for (gi, g) in groups.iter().enumerate() {
            for op in &g.ops {
                layer_of.insert(map[op.dst], (gi, op.layer));
            }
        }
        for o in planned_outputs.iter_mut() {
            let (gi, layer) = layer_of.get(o).copied().unwrap_or((last, 0));
            loop {
                let i = p.get(*o);
                if i.level < 2 || i.scale / chain.prime_at(i.level) < min_scale {
                    break;
                }
                *o = p.rescale(gi, *o, layer)?;
            }
        }
    }
    Ok(Planned {
        value_count: p.info.len(),
        groups: p.groups,
        constants: p.constants,
        outputs: planned_outputs,
        max_scale: p.max_scale,
    })
}
