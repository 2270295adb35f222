//! Unplanned op emission (feature-major, no rescales) and operator fusion.

use super::activation::ActivationKind;
use super::circuit::{Constant, Op, OpKind, TaskGroup, ValueId};
use super::lower::Lowered;

pub(crate) struct Emitted {
    pub groups: Vec<TaskGroup>,
    pub constants: Vec<Constant>,
    pub inputs: Vec<ValueId>,
    pub outputs: Vec<ValueId>,
    pub value_count: usize,
}

struct Emitter {
    constants: Vec<Constant>,
    next: ValueId,
    layer: usize,
}

impl Emitter {
    fn value(&mut self) -> ValueId {
        self.next += 1;
        self.next - 1
    }

    fn op(&mut self, ops: &mut Vec<Op>, kind: OpKind, srcs: Vec<ValueId>, constant: Option<f64>) -> ValueId {
        let dst = self.value();
        let constant = constant.map(|value| {
            self.constants.push(Constant {
                value,
                scale: 0.0,
                level: 0,
            });
            self.constants.len() - 1
        });
        ops.push(Op {
            kind,
            dst,
            srcs,
            constant,
            layer: self.layer,
            level: 0,
            scale: 0.0,
        });
        dst
    }

    fn poly(&mut self, ops: &mut Vec<Op>, z: ValueId, kind: ActivationKind, c: &[f64]) -> ValueId {
        use OpKind::*;
        match (kind, c.len() - 1) {
            (ActivationKind::Square, _) => self.op(ops, MulCt, vec![z, z], None),
            (ActivationKind::Cubic, _) => {
                let z2 = self.op(ops, MulCt, vec![z, z], None);
                self.op(ops, MulCt, vec![z2, z], None)
            }
            (_, 1) => {
                let t = self.op(ops, MulPlain, vec![z], Some(c[1]));
                self.op(ops, AddPlain, vec![t], Some(c[0]))
            }
            (_, 2) => {
                let t = self.op(ops, MulPlain, vec![z], Some(c[2]));
                let u = self.op(ops, MulCt, vec![t, z], None);
                let v = self.op(ops, MulPlain, vec![z], Some(c[1]));
                let w = self.op(ops, AddCt, vec![u, v], None);
                self.op(ops, AddPlain, vec![w], Some(c[0]))
            }
            _ => {
                let z2 = self.op(ops, MulCt, vec![z, z], None);
                let t3 = self.op(ops, MulPlain, vec![z], Some(c[3]));
                let z3 = self.op(ops, MulCt, vec![t3, z2], None);
                let t2 = self.op(ops, MulPlain, vec![z2], Some(c[2]));
                let s = self.op(ops, AddCt, vec![z3, t2], None);
                let t1 = self.op(ops, MulPlain, vec![z], Some(c[1]));
                let s = self.op(ops, AddCt, vec![s, t1], None);
                self.op(ops, AddPlain, vec![s], Some(c[0]))
            }
        }
    }
}

/// Dense layers become a matmul group and a bias group; each activation is
/// its own group. An activation directly after a dense layer shares its unit.
pub(crate) fn emit(layers: &[Lowered], input_width: usize) -> Emitted {
    let mut e = Emitter {
        constants: Vec::new(),
        next: 0,
        layer: 0,
    };
    let inputs: Vec<ValueId> = (0..input_width).map(|_| e.value()).collect();
    let mut current = inputs.clone();
    let mut groups = Vec::new();
    let mut unit = 0usize;
    let mut prev_dense = false;
    for l in layers {
        match l {
            Lowered::Dense { layer, weights, bias } => {
                e.layer = *layer;
                unit += 1;
                let mut ops = Vec::new();
                let mut acc_values = Vec::with_capacity(weights.len());
                for row in weights {
                    let mut terms: Vec<(usize, f64)> =
                        row.iter().copied().enumerate().filter(|&(_, w)| w != 0.0).collect();
                    if terms.is_empty() {
                        terms.push((0, 0.0));
                    }
                    let mut acc = e.op(&mut ops, OpKind::MulPlain, vec![current[terms[0].0]], Some(terms[0].1));
                    for &(i, w) in &terms[1..] {
                        let t = e.op(&mut ops, OpKind::MulPlain, vec![current[i]], Some(w));
                        acc = e.op(&mut ops, OpKind::AddCt, vec![acc, t], None);
                    }
                    acc_values.push(acc);
                }
                groups.push(TaskGroup {
                    label: format!("layer {layer} matmul"),
                    unit,
                    ops,
                });
                let mut ops = Vec::new();
                current = acc_values
                    .iter()
                    .zip(bias)
                    .map(|(&a, &b)| e.op(&mut ops, OpKind::AddPlain, vec![a], Some(b)))
                    .collect();
                groups.push(TaskGroup {
                    label: format!("layer {layer} bias"),
                    unit,
                    ops,
                });
                prev_dense = true;
            }
            Lowered::Poly { layer, poly } => {
                e.layer = *layer;
                if !prev_dense {
                    unit += 1;
                }
                let mut ops = Vec::new();
                current = current
                    .iter()
                    .map(|&z| e.poly(&mut ops, z, poly.kind, &poly.coefficients))
                    .collect();
                groups.push(TaskGroup {
                    label: format!("layer {layer} activation"),
                    unit,
                    ops,
                });
                prev_dense = false;
            }
        }
    }
    Emitted {
        groups,
        constants: e.constants,
        inputs,
        outputs: current,
        value_count: e.next,
    }
}

/// Merges adjacent groups of the same unit. Idempotent.
pub fn fuse_groups(groups: &[TaskGroup]) -> Vec<TaskGroup> {
    let mut out: Vec<TaskGroup> = Vec::new();
    for g in groups {
        match out.last_mut() {
            Some(last) if last.unit == g.unit => {
                last.ops.extend(g.ops.iter().cloned());
                last.label = format!("{} + {}", last.label, g.label);
            }
            _ => out.push(g.clone()),
        }
    }
    out
}
