use serde::{Deserialize, Serialize};

use super::activation::{approximate_activation, ActivationKind, ActivationPolynomial};
use crate::error::{Error, Result};

/// Model description as read from `model.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelGraph {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Needed only when no dense/conv layer fixes the input width.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_dim: Option<usize>,
    pub layers: Vec<Layer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Layer {
    /// `weights` is row-major `[out][in]`.
    Dense { weights: Vec<Vec<f64>>, bias: Vec<f64> },
    /// `kernels` is `[out_channels][in_channels][kh][kw]`; valid padding.
    #[serde(alias = "conv2d")]
    Conv2D {
        kernels: Vec<Vec<Vec<Vec<f64>>>>,
        #[serde(default)]
        bias: Vec<f64>,
        #[serde(default = "one")]
        stride: usize,
        /// `[channels, height, width]`
        input_shape: [usize; 3],
    },
    Activation {
        kind: ActivationKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        degree: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        interval: Option<[f64; 2]>,
    },
    Flatten,
}

fn one() -> usize {
    1
}

impl Layer {
    pub fn type_name(&self) -> &'static str {
        match self {
            Layer::Dense { .. } => "dense",
            Layer::Conv2D { .. } => "conv2d",
            Layer::Activation { .. } => "activation",
            Layer::Flatten => "flatten",
        }
    }
}

pub(crate) fn conv_output_shape(kernels: &[Vec<Vec<Vec<f64>>>], stride: usize, input: [usize; 3]) -> Result<[usize; 3]> {
    let [c, h, w] = input;
    let oc = kernels.len();
    if oc == 0 || c == 0 || h == 0 || w == 0 || stride == 0 {
        return Err(Error::Shape("conv2d needs non-empty kernels, input and stride".into()));
    }
    let kh = kernels[0].first().map_or(0, |k| k.len());
    let kw = kernels[0].first().and_then(|k| k.first()).map_or(0, |r| r.len());
    if kh == 0 || kw == 0 || kh > h || kw > w {
        return Err(Error::Shape(format!("kernel {kh}x{kw} does not fit input {h}x{w}")));
    }
    for k in kernels {
        if k.len() != c || k.iter().any(|ch| ch.len() != kh || ch.iter().any(|r| r.len() != kw)) {
            return Err(Error::Shape(format!("every kernel must be {c}x{kh}x{kw}")));
        }
    }
    Ok([oc, (h - kh) / stride + 1, (w - kw) / stride + 1])
}

impl ModelGraph {
    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    /// Input width, taken from `input_dim` or the first sizing layer.
    pub fn input_width(&self) -> Result<usize> {
        if let Some(d) = self.input_dim {
            return Ok(d);
        }
        for layer in &self.layers {
            match layer {
                Layer::Dense { weights, .. } => {
                    return weights
                        .first()
                        .map(|r| r.len())
                        .ok_or_else(|| Error::InvalidModel("dense layer without rows".into()))
                }
                Layer::Conv2D { input_shape, .. } => return Ok(input_shape.iter().product()),
                _ => {}
            }
        }
        Err(Error::InvalidModel("input width unknown: add input_dim".into()))
    }

    /// Widths at every layer boundary, input first. Validates shapes and values.
    pub fn widths(&self) -> Result<Vec<usize>> {
        if self.layers.is_empty() {
            return Err(Error::InvalidModel("model has no layers".into()));
        }
        let mut width = self.input_width()?;
        if width == 0 {
            return Err(Error::InvalidModel("zero input width".into()));
        }
        let mut out = vec![width];
        for (i, layer) in self.layers.iter().enumerate() {
            let at = |msg: String| Error::InvalidModel(format!("layer {} ({}): {msg}", i + 1, layer.type_name()));
            match layer {
                Layer::Dense { weights, bias } => {
                    if weights.is_empty() {
                        return Err(at("no output rows".into()));
                    }
                    if let Some(r) = weights.iter().position(|r| r.len() != width) {
                        return Err(at(format!("row {r} has {} weights, expected {width}", weights[r].len())));
                    }
                    if bias.len() != weights.len() {
                        return Err(at(format!("bias has {} entries, expected {}", bias.len(), weights.len())));
                    }
                    if weights.iter().flatten().chain(bias).any(|v| !v.is_finite()) {
                        return Err(at("non-finite weight".into()));
                    }
                    width = weights.len();
                }
                Layer::Conv2D {
                    kernels,
                    bias,
                    stride,
                    input_shape,
                } => {
                    let shape = conv_output_shape(kernels, *stride, *input_shape).map_err(|e| at(e.to_string()))?;
                    if input_shape.iter().product::<usize>() != width {
                        return Err(at(format!("input shape {input_shape:?} does not match width {width}")));
                    }
                    if !bias.is_empty() && bias.len() != kernels.len() {
                        return Err(at(format!("bias needs one entry per output channel ({})", kernels.len())));
                    }
                    if kernels.iter().flatten().flatten().flatten().chain(bias).any(|v| !v.is_finite()) {
                        return Err(at("non-finite weight".into()));
                    }
                    width = shape.iter().product();
                }
                Layer::Activation { kind, degree, interval } => {
                    approximate_activation(*kind, degree.unwrap_or(3), interval.map(|[a, b]| (a, b)))
                        .map_err(|e| at(e.to_string()))?;
                }
                Layer::Flatten => {}
            }
            out.push(width);
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        self.widths().map(|_| ())
    }

    pub fn output_width(&self) -> Result<usize> {
        Ok(*self.widths()?.last().unwrap())
    }

    /// Direct forward pass with polynomial activations: dense products,
    /// direct convolution, no circuit involved.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        let widths = self.widths()?;
        if input.len() != widths[0] {
            return Err(Error::Shape(format!("input has {} features, model expects {}", input.len(), widths[0])));
        }
        let mut x = input.to_vec();
        for layer in &self.layers {
            x = match layer {
                Layer::Dense { weights, bias } => weights
                    .iter()
                    .zip(bias)
                    .map(|(row, b)| row.iter().zip(&x).map(|(w, v)| w * v).sum::<f64>() + b)
                    .collect(),
                Layer::Conv2D {
                    kernels,
                    bias,
                    stride,
                    input_shape,
                } => conv_direct(kernels, bias, *stride, *input_shape, &x)?,
                Layer::Activation { kind, degree, interval } => {
                    let p = approximate_activation(*kind, degree.unwrap_or(3), interval.map(|[a, b]| (a, b)))?;
                    x.iter().map(|&v| p.eval(v)).collect()
                }
                Layer::Flatten => x,
            };
        }
        Ok(x)
    }

    /// Polynomials used by the activation layers, in layer order.
    pub fn activation_polynomials(&self) -> Result<Vec<(usize, ActivationPolynomial)>> {
        self.layers
            .iter()
            .enumerate()
            .filter_map(|(i, l)| match l {
                Layer::Activation { kind, degree, interval } => Some(
                    approximate_activation(*kind, degree.unwrap_or(3), interval.map(|[a, b]| (a, b))).map(|p| (i, p)),
                ),
                _ => None,
            })
            .collect()
    }
}

/// Valid-padding convolution, channel-major flattening.
pub fn conv_direct(
    kernels: &[Vec<Vec<Vec<f64>>>],
    bias: &[f64],
    stride: usize,
    input_shape: [usize; 3],
    x: &[f64],
) -> Result<Vec<f64>> {
    let [oc, oh, ow] = conv_output_shape(kernels, stride, input_shape)?;
    let [c, h, w] = input_shape;
    if x.len() != c * h * w {
        return Err(Error::Shape(format!("conv input has {} values, expected {}", x.len(), c * h * w)));
    }
    let mut out = vec![0.0; oc * oh * ow];
    for o in 0..oc {
        for i in 0..oh {
            for j in 0..ow {
                let mut acc = bias.get(o).copied().unwrap_or(0.0);
                for (ch, k) in kernels[o].iter().enumerate() {
                    for (di, row) in k.iter().enumerate() {
                        for (dj, &kv) in row.iter().enumerate() {
                            acc += kv * x[ch * h * w + (i * stride + di) * w + j * stride + dj];
                        }
                    }
                }
                out[o * oh * ow + i * ow + j] = acc;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_shape() {
        let text = r#"{"layers":[{"type":"dense","weights":[[1.0,2.0]],"bias":[0.5]},{"type":"activation","kind":"square"}]}"#;
        let m = ModelGraph::from_json(text).unwrap();
        assert_eq!(m.widths().unwrap(), vec![2, 1, 1]);
        assert_eq!(m.forward(&[1.0, 1.0]).unwrap(), vec![12.25]);
        let back = ModelGraph::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn rejects_bad_models() {
        assert!(ModelGraph::from_json(r#"{"layers":[]}"#).is_err());
        assert!(ModelGraph::from_json(r#"{"layers":[{"type":"dense","weights":[[1.0],[1.0,2.0]],"bias":[0,0]}]}"#).is_err());
        assert!(ModelGraph::from_json(r#"{"layers":[{"type":"dense","weights":[[1.0]],"bias":[]}]}"#).is_err());
        assert!(ModelGraph::from_json(r#"{"layers":[{"type":"activation","kind":"square"}]}"#).is_err());
        assert!(ModelGraph::from_json(r#"{"input_dim":2,"layers":[{"type":"activation","kind":"tanh"}]}"#).is_err());
        let two = r#"{"layers":[{"type":"dense","weights":[[1.0,1.0]],"bias":[0]},{"type":"dense","weights":[[1.0,1.0]],"bias":[0]}]}"#;
        let err = ModelGraph::from_json(two).unwrap_err().to_string();
        assert!(err.contains("layer 2"), "{err}");
    }
}
