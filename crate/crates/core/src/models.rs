//! Bundled reference models and a synthetic stand-in for a standardized
//! 30-feature tabular dataset.
//!
//! Weights are drawn from a seeded generator and then scaled layer by layer
//! so that, on the synthetic data, every pre-activation stays inside its
//! activation's fit interval.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::compiler::{ActivationKind, Layer, ModelGraph};
use crate::error::{Error, Result};
use crate::ring::rng_from_seed;

pub const TABULAR_FEATURES: usize = 30;
pub const IMAGE_SIDE: usize = 8;
pub const REFERENCE_MODELS: [&str; 3] = ["logistic", "mlp", "cnn"];
/// Score threshold for the sigmoid-headed reference models.
pub const CLASS_THRESHOLD: f64 = 0.5;

const CALIBRATION_SAMPLES: usize = 256;
const HIDDEN_TARGET: f64 = 3.0;
const HEAD_TARGET: f64 = 6.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
}

/// Two Gaussian classes at ±1.5·dir, where dir is a seeded direction with
/// RMS entry 1/2; per-feature noise σ = 0.5; values clipped to [−3, 3].
pub fn synthetic_dataset(features: usize, count: usize, seed: u64) -> Dataset {
    let mut rng = rng_from_seed(seed ^ 0x5eed_da7a);
    let dir = unit_direction(features, seed);
    let noise = Normal::new(0.0, 0.5).unwrap();
    let mut samples = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    for _ in 0..count {
        let y: u8 = rng.gen_range(0..=1);
        let sign = if y == 1 { 1.5 } else { -1.5 };
        samples.push(
            dir.iter()
                .map(|d| (sign * d + noise.sample(&mut rng)).clamp(-3.0, 3.0))
                .collect(),
        );
        labels.push(y);
    }
    Dataset { samples, labels }
}

fn unit_direction(d: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed ^ 0xd1ec_7104);
    let v: Vec<f64> = (0..d).map(|_| Normal::new(0.0, 1.0).unwrap().sample(&mut rng)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm * (d as f64).sqrt() / 2.0).collect()
}

fn activation(kind: ActivationKind, degree: usize) -> Layer {
    Layer::Activation {
        kind,
        degree: Some(degree),
        interval: None,
    }
}

fn random_dense<R: Rng>(rng: &mut R, out: usize, inp: usize) -> Layer {
    let w = Normal::new(0.0, 1.0 / (inp as f64).sqrt()).unwrap();
    let b = Normal::new(0.0, 0.1).unwrap();
    Layer::Dense {
        weights: (0..out).map(|_| (0..inp).map(|_| w.sample(rng)).collect()).collect(),
        bias: (0..out).map(|_| b.sample(rng)).collect(),
    }
}

/// Scales a weighted layer so max |pre-activation| over `inputs` is `target`.
fn calibrate_layer(layer: &mut Layer, inputs: &[Vec<f64>], target: f64) -> Result<Vec<Vec<f64>>> {
    let probe = ModelGraph {
        name: None,
        input_dim: None,
        layers: vec![layer.clone()],
    };
    let outs = inputs.iter().map(|x| probe.forward(x)).collect::<Result<Vec<_>>>()?;
    let peak = outs.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return Err(Error::Degenerate("layer output is identically zero".into()));
    }
    let k = target / peak;
    match layer {
        Layer::Dense { weights, bias } => {
            weights.iter_mut().flatten().for_each(|w| *w *= k);
            bias.iter_mut().for_each(|b| *b *= k);
        }
        Layer::Conv2D { kernels, bias, .. } => {
            kernels.iter_mut().flatten().flatten().flatten().for_each(|w| *w *= k);
            bias.iter_mut().for_each(|b| *b *= k);
        }
        _ => {}
    }
    Ok(outs.into_iter().map(|o| o.into_iter().map(|v| v * k).collect()).collect())
}

/// Builds `layers` in order, calibrating each weighted layer against the
/// activations that follow it (or the sigmoid head for the last one).
fn assemble(name: &str, mut layers: Vec<Layer>, features: usize, seed: u64) -> Result<ModelGraph> {
    let data = synthetic_dataset(features, CALIBRATION_SAMPLES, seed);
    let mut xs = data.samples;
    let last_weighted = layers
        .iter()
        .rposition(|l| matches!(l, Layer::Dense { .. } | Layer::Conv2D { .. }))
        .unwrap_or(0);
    for i in 0..layers.len() {
        match &layers[i] {
            Layer::Dense { .. } | Layer::Conv2D { .. } => {
                let target = if i == last_weighted { HEAD_TARGET } else { HIDDEN_TARGET };
                xs = calibrate_layer(&mut layers[i], &xs, target)?;
            }
            other => {
                let probe = ModelGraph {
                    name: None,
                    input_dim: Some(xs[0].len()),
                    layers: vec![other.clone()],
                };
                xs = xs.iter().map(|x| probe.forward(x)).collect::<Result<_>>()?;
            }
        }
    }
    let model = ModelGraph {
        name: Some(name.to_string()),
        input_dim: None,
        layers,
    };
    model.validate()?;
    Ok(model)
}

/// 30 → 1 with a degree-3 sigmoid approximation. Weights follow the class
/// direction, so the model separates the synthetic classes.
pub fn logistic_regression(seed: u64) -> Result<ModelGraph> {
    let dir = unit_direction(TABULAR_FEATURES, seed);
    let layers = vec![
        Layer::Dense {
            weights: vec![dir],
            bias: vec![0.0],
        },
        activation(ActivationKind::SigmoidApprox, 3),
    ];
    assemble("logistic", layers, TABULAR_FEATURES, seed)
}

/// 30 → 16 → 8 → 1: two degree-2 relu approximations, sigmoid head.
pub fn mlp(seed: u64) -> Result<ModelGraph> {
    let mut rng = rng_from_seed(seed ^ 0x0000_0a1b);
    let layers = vec![
        random_dense(&mut rng, 16, TABULAR_FEATURES),
        activation(ActivationKind::ReluApprox, 2),
        random_dense(&mut rng, 8, 16),
        activation(ActivationKind::ReluApprox, 2),
        random_dense(&mut rng, 1, 8),
        activation(ActivationKind::SigmoidApprox, 3),
    ];
    assemble("mlp", layers, TABULAR_FEATURES, seed)
}

/// 1×8×8 image: conv (2 kernels, 3×3) → square → flatten → dense 72 → 8 →
/// square → dense 8 → 1 → sigmoid.
pub fn cnn(seed: u64) -> Result<ModelGraph> {
    let mut rng = rng_from_seed(seed ^ 0x0000_0c77);
    let k = Normal::new(0.0, 1.0 / 3.0).unwrap();
    let kernels = (0..2)
        .map(|_| vec![(0..3).map(|_| (0..3).map(|_| k.sample(&mut rng)).collect()).collect()])
        .collect();
    let layers = vec![
        Layer::Conv2D {
            kernels,
            bias: vec![0.05, -0.05],
            stride: 1,
            input_shape: [1, IMAGE_SIDE, IMAGE_SIDE],
        },
        Layer::Activation {
            kind: ActivationKind::Square,
            degree: None,
            interval: None,
        },
        Layer::Flatten,
        random_dense(&mut rng, 8, 72),
        Layer::Activation {
            kind: ActivationKind::Square,
            degree: None,
            interval: None,
        },
        random_dense(&mut rng, 1, 8),
        activation(ActivationKind::SigmoidApprox, 3),
    ];
    assemble("cnn", layers, IMAGE_SIDE * IMAGE_SIDE, seed)
}

pub fn reference_model(name: &str, seed: u64) -> Result<ModelGraph> {
    match name {
        "logistic" | "logistic-regression" | "lr" => logistic_regression(seed),
        "mlp" => mlp(seed),
        "cnn" => cnn(seed),
        other => Err(Error::Config(format!(
            "unknown reference model '{other}' (expected one of {})",
            REFERENCE_MODELS.join(", ")
        ))),
    }
}

/// Input width of a reference model.
pub fn reference_features(name: &str) -> Result<usize> {
    match name {
        "logistic" | "logistic-regression" | "lr" | "mlp" => Ok(TABULAR_FEATURES),
        "cnn" => Ok(IMAGE_SIDE * IMAGE_SIDE),
        other => Err(Error::Config(format!("unknown reference model '{other}'"))),
    }
}
