//! Float interpreter for compiled circuits and output comparison.

use serde::{Deserialize, Serialize};

use crate::compiler::{CompiledCircuit, OpKind};
use crate::error::{Error, Result};

/// Runs `circuit` over plain floats. `samples` is B rows of d features;
/// the result is B rows of output values. Rescales and mod switches are
/// no-ops on plain values.
pub fn execute_plain(circuit: &CompiledCircuit, samples: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let d = circuit.inputs.len();
    if let Some((i, row)) = samples.iter().enumerate().find(|(_, r)| r.len() != d) {
        return Err(Error::Shape(format!("sample {i} has {} features, circuit expects {d}", row.len())));
    }
    let b = samples.len();
    let mut values: Vec<Option<Vec<f64>>> = vec![None; circuit.value_count];
    for (j, &v) in circuit.inputs.iter().enumerate() {
        values[v] = Some(samples.iter().map(|r| r[j]).collect());
    }
    let get = |values: &[Option<Vec<f64>>], v: usize| -> Result<Vec<f64>> {
        values[v]
            .clone()
            .ok_or_else(|| Error::InvalidModel(format!("v{v} used before definition")))
    };
    for op in circuit.ops() {
        let x = get(&values, op.srcs[0])?;
        let c = op.constant.map(|c| circuit.constants[c].value);
        let out: Vec<f64> = match op.kind {
            OpKind::MulPlain => x.iter().map(|v| v * c.unwrap_or(0.0)).collect(),
            OpKind::AddPlain => x.iter().map(|v| v + c.unwrap_or(0.0)).collect(),
            OpKind::AddCt => {
                let y = get(&values, op.srcs[1])?;
                x.iter().zip(&y).map(|(a, b)| a + b).collect()
            }
            OpKind::MulCt => {
                let y = get(&values, op.srcs[1])?;
                x.iter().zip(&y).map(|(a, b)| a * b).collect()
            }
            OpKind::Rescale | OpKind::ModSwitch => x,
        };
        values[op.dst] = Some(out);
    }
    let cols = circuit
        .outputs
        .iter()
        .map(|&o| get(&values, o))
        .collect::<Result<Vec<_>>>()?;
    Ok((0..b).map(|i| cols.iter().map(|c| c[i]).collect()).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub max_abs_error: f64,
    pub mean_abs_error: f64,
    /// Percentage of rows whose predicted class matches.
    pub agreement_pct: f64,
    /// Spread of the reference scores (max − min); 0 for constant scores.
    pub score_range: f64,
    /// mean_abs_error / score_range, as a percentage.
    pub mean_deviation_pct: f64,
    pub rows: usize,
}

/// Class of one output row: argmax for vector outputs, `score >= threshold`
/// for a single score.
pub fn classify(row: &[f64], threshold: f64) -> usize {
    match row {
        [s] => usize::from(*s >= threshold),
        _ => row
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
            .0,
    }
}

pub fn compare_outputs(decoded: &[Vec<f64>], plain: &[Vec<f64>], threshold: f64) -> Result<DeviationReport> {
    if decoded.len() != plain.len() || decoded.iter().zip(plain).any(|(a, b)| a.len() != b.len()) {
        return Err(Error::Shape("decoded and reference outputs differ in shape".into()));
    }
    if plain.is_empty() {
        return Err(Error::Shape("no rows to compare".into()));
    }
    let errs: Vec<f64> = decoded
        .iter()
        .zip(plain)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
        .collect();
    let max_abs_error = errs.iter().copied().fold(0.0, f64::max);
    let mean_abs_error = if errs.is_empty() { 0.0 } else { errs.iter().sum::<f64>() / errs.len() as f64 };
    let agree = decoded
        .iter()
        .zip(plain)
        .filter(|(a, b)| classify(a, threshold) == classify(b, threshold))
        .count();
    let (lo, hi) = plain
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let score_range = if hi > lo { hi - lo } else { 0.0 };
    let mean_deviation_pct = if score_range > 0.0 {
        100.0 * mean_abs_error / score_range
    } else if mean_abs_error == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(DeviationReport {
        max_abs_error,
        mean_abs_error,
        agreement_pct: 100.0 * agree as f64 / plain.len() as f64,
        score_range,
        mean_deviation_pct,
        rows: plain.len(),
    })
}
