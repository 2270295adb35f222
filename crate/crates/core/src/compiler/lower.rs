//! Model -> dense layers and activation polynomials.

use super::activation::{approximate_activation, ActivationPolynomial};
use super::model::{conv_output_shape, Layer, ModelGraph};
use crate::error::Result;

#[derive(Debug, Clone)]
pub enum Lowered {
    Dense {
        layer: usize,
        weights: Vec<Vec<f64>>,
        bias: Vec<f64>,
    },
    Poly {
        layer: usize,
        poly: ActivationPolynomial,
    },
}

/// Toeplitz form of a valid-padding convolution over channel-major inputs.
pub fn lower_conv_to_dense(
    kernels: &[Vec<Vec<Vec<f64>>>],
    bias: &[f64],
    stride: usize,
    input_shape: [usize; 3],
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let [oc, oh, ow] = conv_output_shape(kernels, stride, input_shape)?;
    let [c, h, w] = input_shape;
    let mut weights = vec![vec![0.0; c * h * w]; oc * oh * ow];
    let mut out_bias = vec![0.0; oc * oh * ow];
    for o in 0..oc {
        for i in 0..oh {
            for j in 0..ow {
                let row = o * oh * ow + i * ow + j;
                out_bias[row] = bias.get(o).copied().unwrap_or(0.0);
                for (ch, k) in kernels[o].iter().enumerate() {
                    for (di, krow) in k.iter().enumerate() {
                        for (dj, &kv) in krow.iter().enumerate() {
                            weights[row][ch * h * w + (i * stride + di) * w + j * stride + dj] = kv;
                        }
                    }
                }
            }
        }
    }
    Ok((weights, out_bias))
}

pub fn lower(model: &ModelGraph) -> Result<Vec<Lowered>> {
    model.validate()?;
    let mut out = Vec::new();
    for (i, layer) in model.layers.iter().enumerate() {
        let layer_no = i + 1;
        match layer {
            Layer::Dense { weights, bias } => out.push(Lowered::Dense {
                layer: layer_no,
                weights: weights.clone(),
                bias: bias.clone(),
            }),
            Layer::Conv2D {
                kernels,
                bias,
                stride,
                input_shape,
            } => {
                let (weights, bias) = lower_conv_to_dense(kernels, bias, *stride, *input_shape)?;
                out.push(Lowered::Dense {
                    layer: layer_no,
                    weights,
                    bias,
                });
            }
            Layer::Activation { kind, degree, interval } => out.push(Lowered::Poly {
                layer: layer_no,
                poly: approximate_activation(*kind, degree.unwrap_or(3), interval.map(|[a, b]| (a, b)))?,
            }),
            Layer::Flatten => {}
        }
    }
    Ok(out)
}
