use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::activation::{relu, relu_backward, softmax};
use super::batchnorm::{
    batchnorm_backward, batchnorm_infer, batchnorm_train, BatchNormCache, BatchNormParams, Mode,
};
use super::conv::{conv2d_backward, conv2d_forward};
use super::dense::{dense_backward, dense_forward};
use super::pool::{maxpool_backward, maxpool_forward, pooled_extent};
use super::Tensor;
use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Softmax,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LayerSpec {
    MaxPool { pool: [usize; 2], stride: [usize; 2] },
    /// Same-padded, stride-1 convolution, optionally followed by ReLU.
    Conv2d { filters: usize, kernel: [usize; 2], relu: bool },
    BatchNorm,
    Flatten,
    Dense { units: usize, activation: Activation },
}

/// Ordered layer stack.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub layers: Vec<LayerSpec>,
}

impl Default for ModelSpec {
    /// The nine-layer incident classifier: a leading 3×3 max pool, three pairs of 3×3
    /// ReLU convolutions (64, 128, 256 filters) with pooling and batch norm between
    /// them, then dense 80 → 40 → 5 with a softmax output.
    fn default() -> Self {
        use LayerSpec::*;
        let pool = || MaxPool { pool: [3, 3], stride: [3, 3] };
        let conv = |filters| Conv2d { filters, kernel: [3, 3], relu: true };
        Self {
            layers: vec![
                pool(),
                conv(64),
                conv(64),
                pool(),
                BatchNorm,
                conv(128),
                conv(128),
                pool(),
                BatchNorm,
                conv(256),
                conv(256),
                BatchNorm,
                Flatten,
                Dense { units: 80, activation: Activation::Relu },
                Dense { units: 40, activation: Activation::Relu },
                Dense { units: 5, activation: Activation::Softmax },
            ],
        }
    }
}

impl ModelSpec {
    /// Per-layer output shapes (without the batch axis) for an `[h, w, c]` input.
    pub fn infer_shapes(&self, input: [usize; 3]) -> Result<Vec<Vec<usize>>> {
        let mut shape = input.to_vec();
        let mut shapes = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let fail = |msg: String| Error::invalid(format!("layer {i} ({layer:?}): {msg}"));
            shape = match (layer, shape.as_slice()) {
                (LayerSpec::MaxPool { pool, stride }, &[h, w, c]) => {
                    let (oh, ow) = (pooled_extent(h, pool[0], stride[0]), pooled_extent(w, pool[1], stride[1]));
                    if oh == 0 || ow == 0 {
                        return Err(fail(format!("{h}x{w} is smaller than the pool")));
                    }
                    vec![oh, ow, c]
                }
                (LayerSpec::Conv2d { filters, kernel, .. }, &[h, w, _]) => {
                    if kernel[0] % 2 == 0 || kernel[1] % 2 == 0 || *filters == 0 {
                        return Err(fail("needs odd kernel and at least one filter".into()));
                    }
                    vec![h, w, *filters]
                }
                (LayerSpec::BatchNorm, s) => s.to_vec(),
                (LayerSpec::Flatten, s) => vec![s.iter().product()],
                (LayerSpec::Dense { units, .. }, &[_]) => vec![*units],
                (_, s) => return Err(fail(format!("incompatible input shape {s:?}"))),
            };
            shapes.push(shape.clone());
        }
        match shapes.last() {
            Some(s) if s.len() == 1 => {}
            _ => return Err(Error::invalid("model must end in a dense layer")),
        }
        let softmax_at = self
            .layers
            .iter()
            .position(|l| matches!(l, LayerSpec::Dense { activation: Activation::Softmax, .. }));
        if let Some(i) = softmax_at {
            if i + 1 != self.layers.len() {
                return Err(Error::invalid("softmax is only allowed on the final layer"));
            }
        }
        Ok(shapes)
    }

    pub fn n_outputs(&self, input: [usize; 3]) -> Result<usize> {
        Ok(self.infer_shapes(input)?.last().expect("non-empty")[0])
    }

    /// Trainable parameters (weights, biases, batch-norm scale and shift).
    pub fn param_count(&self, input: [usize; 3]) -> Result<usize> {
        let shapes = self.infer_shapes(input)?;
        let mut prev = input.to_vec();
        let mut total = 0;
        for (layer, out) in self.layers.iter().zip(&shapes) {
            total += match layer {
                LayerSpec::Conv2d { filters, kernel, .. } => {
                    kernel[0] * kernel[1] * prev[2] * filters + filters
                }
                LayerSpec::BatchNorm => 2 * prev.last().copied().unwrap_or(0),
                LayerSpec::Dense { units, .. } => prev[0] * units + units,
                _ => 0,
            };
            prev = out.clone();
        }
        Ok(total)
    }
}

#[derive(Debug, Clone)]
pub(crate) enum Layer {
    MaxPool {
        pool: (usize, usize),
        stride: (usize, usize),
        cache: Option<(Vec<usize>, Vec<usize>)>,
    },
    Conv {
        kernel: Tensor,
        bias: Tensor,
        relu: bool,
        grad_kernel: Tensor,
        grad_bias: Tensor,
        cache: Option<(Tensor, Tensor)>,
    },
    BatchNorm {
        params: BatchNormParams,
        grad_gamma: Tensor,
        grad_beta: Tensor,
        cache: Option<BatchNormCache>,
    },
    Flatten {
        cache: Option<Vec<usize>>,
    },
    Dense {
        weight: Tensor,
        bias: Tensor,
        activation: Activation,
        grad_weight: Tensor,
        grad_bias: Tensor,
        cache: Option<(Tensor, Tensor)>,
    },
}

fn he_uniform(shape: &[usize], fan_in: usize, rng: &mut Rng) -> Tensor {
    let limit = (6.0 / fan_in as f64).sqrt();
    let n = shape.iter().product();
    let data = (0..n).map(|_| rng.gen_range(-limit..limit)).collect();
    Tensor::from_vec(shape, data).expect("shape matches")
}

/// Output layers feed softmax, not ReLU. Post-ReLU features have a large shared mean,
/// so He scaling there gives every input the same few-nats logit offset and the
/// untrained model favours one class. A tenth of LeCun-uniform keeps initial logits
/// within a few tenths.
fn output_uniform(shape: &[usize], fan_in: usize, rng: &mut Rng) -> Tensor {
    let limit = 0.1 * (3.0 / fan_in as f64).sqrt();
    let n = shape.iter().product();
    let data = (0..n).map(|_| rng.gen_range(-limit..limit)).collect();
    Tensor::from_vec(shape, data).expect("shape matches")
}

impl Layer {
    fn build(spec: &LayerSpec, input: &[usize], rng: &mut Rng) -> Self {
        match spec {
            LayerSpec::MaxPool { pool, stride } => Layer::MaxPool {
                pool: (pool[0], pool[1]),
                stride: (stride[0], stride[1]),
                cache: None,
            },
            LayerSpec::Conv2d { filters, kernel, relu } => {
                let shape = [kernel[0], kernel[1], input[2], *filters];
                Layer::Conv {
                    kernel: he_uniform(&shape, kernel[0] * kernel[1] * input[2], rng),
                    bias: Tensor::zeros(&[*filters]),
                    relu: *relu,
                    grad_kernel: Tensor::zeros(&shape),
                    grad_bias: Tensor::zeros(&[*filters]),
                    cache: None,
                }
            }
            LayerSpec::BatchNorm => {
                let c = *input.last().expect("non-empty shape");
                Layer::BatchNorm {
                    params: BatchNormParams::new(c),
                    grad_gamma: Tensor::zeros(&[c]),
                    grad_beta: Tensor::zeros(&[c]),
                    cache: None,
                }
            }
            LayerSpec::Flatten => Layer::Flatten { cache: None },
            LayerSpec::Dense { units, activation } => {
                let shape = [input[0], *units];
                Layer::Dense {
                    weight: if *activation == Activation::Relu {
                        he_uniform(&shape, input[0], rng)
                    } else {
                        output_uniform(&shape, input[0], rng)
                    },
                    bias: Tensor::zeros(&[*units]),
                    activation: *activation,
                    grad_weight: Tensor::zeros(&shape),
                    grad_bias: Tensor::zeros(&[*units]),
                    cache: None,
                }
            }
        }
    }

    fn infer(&self, x: &Tensor) -> Result<Tensor> {
        match self {
            Layer::MaxPool { pool, stride, .. } => Ok(maxpool_forward(x, *pool, *stride)?.output),
            Layer::Conv { kernel, bias, relu: r, .. } => {
                let pre = conv2d_forward(x, kernel, bias)?;
                Ok(if *r { relu(&pre) } else { pre })
            }
            Layer::BatchNorm { params, .. } => batchnorm_infer(x, params),
            Layer::Flatten { .. } => flatten(x),
            Layer::Dense { weight, bias, activation, .. } => {
                let pre = dense_forward(x, weight, bias)?;
                Ok(if *activation == Activation::Relu { relu(&pre) } else { pre })
            }
        }
    }

    fn forward_train(&mut self, x: &Tensor) -> Result<Tensor> {
        match self {
            Layer::MaxPool { pool, stride, cache } => {
                let p = maxpool_forward(x, *pool, *stride)?;
                *cache = Some((p.argmax, x.shape().to_vec()));
                Ok(p.output)
            }
            Layer::Conv { kernel, bias, relu: r, cache, .. } => {
                let pre = conv2d_forward(x, kernel, bias)?;
                let out = if *r { relu(&pre) } else { pre.clone() };
                *cache = Some((x.clone(), pre));
                Ok(out)
            }
            Layer::BatchNorm { params, cache, .. } => {
                let (out, c) = batchnorm_train(x, params)?;
                *cache = Some(c);
                Ok(out)
            }
            Layer::Flatten { cache } => {
                *cache = Some(x.shape().to_vec());
                flatten(x)
            }
            Layer::Dense { weight, bias, activation, cache, .. } => {
                let pre = dense_forward(x, weight, bias)?;
                let out = if *activation == Activation::Relu { relu(&pre) } else { pre.clone() };
                *cache = Some((x.clone(), pre));
                Ok(out)
            }
        }
    }

    /// Accumulates parameter gradients and returns the input gradient.
    fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let missing = || Error::invalid("backward called without a training forward pass");
        match self {
            Layer::MaxPool { cache, .. } => {
                let (argmax, shape) = cache.as_ref().ok_or_else(missing)?;
                maxpool_backward(grad, argmax, shape)
            }
            Layer::Conv { kernel, relu: r, grad_kernel, grad_bias, cache, .. } => {
                let (input, pre) = cache.as_ref().ok_or_else(missing)?;
                let g = if *r { relu_backward(grad, pre) } else { grad.clone() };
                let grads = conv2d_backward(&g, input, kernel)?;
                grad_kernel.add_assign(&grads.kernel);
                grad_bias.add_assign(&grads.bias);
                Ok(grads.input)
            }
            Layer::BatchNorm { params, grad_gamma, grad_beta, cache, .. } => {
                let c = cache.as_ref().ok_or_else(missing)?;
                let grads = batchnorm_backward(grad, c, &params.gamma)?;
                grad_gamma.add_assign(&grads.gamma);
                grad_beta.add_assign(&grads.beta);
                Ok(grads.input)
            }
            Layer::Flatten { cache } => {
                let shape = cache.as_ref().ok_or_else(missing)?;
                grad.clone().reshape(shape)
            }
            Layer::Dense { weight, activation, grad_weight, grad_bias, cache, .. } => {
                let (input, pre) = cache.as_ref().ok_or_else(missing)?;
                let g = if *activation == Activation::Relu {
                    relu_backward(grad, pre)
                } else {
                    grad.clone()
                };
                let grads = dense_backward(&g, input, weight)?;
                grad_weight.add_assign(&grads.weight);
                grad_bias.add_assign(&grads.bias);
                Ok(grads.input)
            }
        }
    }

    fn clear_cache(&mut self) {
        match self {
            Layer::MaxPool { cache, .. } => *cache = None,
            Layer::Conv { cache, .. } => *cache = None,
            Layer::BatchNorm { cache, .. } => *cache = None,
            Layer::Flatten { cache } => *cache = None,
            Layer::Dense { cache, .. } => *cache = None,
        }
    }
}

fn flatten(x: &Tensor) -> Result<Tensor> {
    let n = *x.shape().first().ok_or_else(|| Error::invalid("cannot flatten a scalar"))?;
    let d = x.len() / n.max(1);
    x.clone().reshape(&[n, d])
}

/// A trainable parameter and its accumulated gradient.
pub struct ParamRef<'a> {
    pub name: String,
    pub value: &'a mut Tensor,
    pub grad: &'a mut Tensor,
}

/// A layer stack with parameters, batch-norm state and training caches.
#[derive(Debug, Clone)]
pub struct Model {
    spec: ModelSpec,
    input_shape: [usize; 3],
    layers: Vec<Layer>,
}

impl Model {
    /// Builds the stack with He-uniform weights (scaled-down for non-ReLU dense outputs)
    /// and zero biases drawn from `rng`.
    pub fn new(spec: ModelSpec, input_shape: [usize; 3], rng: &mut Rng) -> Result<Self> {
        let shapes = spec.infer_shapes(input_shape)?;
        let mut prev = input_shape.to_vec();
        let mut layers = Vec::with_capacity(spec.layers.len());
        for (ls, out) in spec.layers.iter().zip(&shapes) {
            layers.push(Layer::build(ls, &prev, rng));
            prev = out.clone();
        }
        Ok(Self {
            spec,
            input_shape,
            layers,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn input_shape(&self) -> [usize; 3] {
        self.input_shape
    }

    pub fn n_classes(&self) -> usize {
        self.spec.n_outputs(self.input_shape).expect("validated at construction")
    }

    fn check_input(&self, x: &Tensor) -> Result<()> {
        let (_, h, w, c) = x.dims4()?;
        if [h, w, c] != self.input_shape {
            return Err(Error::invalid(format!(
                "model expects input {:?}, got {:?}",
                self.input_shape,
                &x.shape()[1..]
            )));
        }
        Ok(())
    }

    /// Logits for a batch `[N, h, w, c]`. Train mode caches activations for
    /// [`Model::backward`] and updates batch-norm running statistics.
    pub fn forward(&mut self, x: &Tensor, mode: Mode) -> Result<Tensor> {
        self.check_input(x)?;
        if mode == Mode::Infer {
            return self.infer(x);
        }
        let mut h = x.clone();
        for layer in &mut self.layers {
            h = layer.forward_train(&h)?;
        }
        h.ensure_finite("logits")?;
        Ok(h)
    }

    /// Inference-mode logits without touching any state.
    pub fn infer(&self, x: &Tensor) -> Result<Tensor> {
        self.check_input(x)?;
        let mut h = x.clone();
        for layer in &self.layers {
            h = layer.infer(&h)?;
        }
        h.ensure_finite("logits")?;
        Ok(h)
    }

    /// Softmax probabilities `[N, classes]` in inference mode.
    pub fn predict_proba(&self, x: &Tensor) -> Result<Tensor> {
        softmax(&self.infer(x)?)
    }

    /// Back-propagates `dloss/dlogits`, accumulating into the parameter gradients.
    pub fn backward(&mut self, grad_logits: &Tensor) -> Result<Tensor> {
        let mut g = grad_logits.clone();
        for layer in self.layers.iter_mut().rev() {
            g = layer.backward(&g)?;
        }
        Ok(g)
    }

    pub fn clear_caches(&mut self) {
        self.layers.iter_mut().for_each(Layer::clear_cache);
    }

    pub fn zero_grads(&mut self) {
        for p in self.params_mut() {
            p.grad.fill(0.0);
        }
    }

    /// Trainable parameters in a fixed order.
    pub fn params_mut(&mut self) -> Vec<ParamRef<'_>> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter_mut().enumerate() {
            match layer {
                Layer::Conv { kernel, bias, grad_kernel, grad_bias, .. } => {
                    out.push(ParamRef { name: format!("layer{i}.conv.kernel"), value: kernel, grad: grad_kernel });
                    out.push(ParamRef { name: format!("layer{i}.conv.bias"), value: bias, grad: grad_bias });
                }
                Layer::BatchNorm { params, grad_gamma, grad_beta, .. } => {
                    out.push(ParamRef { name: format!("layer{i}.bn.gamma"), value: &mut params.gamma, grad: grad_gamma });
                    out.push(ParamRef { name: format!("layer{i}.bn.beta"), value: &mut params.beta, grad: grad_beta });
                }
                Layer::Dense { weight, bias, grad_weight, grad_bias, .. } => {
                    out.push(ParamRef { name: format!("layer{i}.dense.weight"), value: weight, grad: grad_weight });
                    out.push(ParamRef { name: format!("layer{i}.dense.bias"), value: bias, grad: grad_bias });
                }
                Layer::MaxPool { .. } | Layer::Flatten { .. } => {}
            }
        }
        out
    }

    /// Every persistent tensor (parameters and batch-norm running statistics) by name.
    pub fn state(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            match layer {
                Layer::Conv { kernel, bias, .. } => {
                    out.push((format!("layer{i}.conv.kernel"), kernel));
                    out.push((format!("layer{i}.conv.bias"), bias));
                }
                Layer::BatchNorm { params, .. } => {
                    out.push((format!("layer{i}.bn.gamma"), &params.gamma));
                    out.push((format!("layer{i}.bn.beta"), &params.beta));
                    out.push((format!("layer{i}.bn.running_mean"), &params.running_mean));
                    out.push((format!("layer{i}.bn.running_var"), &params.running_var));
                }
                Layer::Dense { weight, bias, .. } => {
                    out.push((format!("layer{i}.dense.weight"), weight));
                    out.push((format!("layer{i}.dense.bias"), bias));
                }
                Layer::MaxPool { .. } | Layer::Flatten { .. } => {}
            }
        }
        out
    }

    pub fn state_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter_mut().enumerate() {
            match layer {
                Layer::Conv { kernel, bias, .. } => {
                    out.push((format!("layer{i}.conv.kernel"), kernel));
                    out.push((format!("layer{i}.conv.bias"), bias));
                }
                Layer::BatchNorm { params, .. } => {
                    let BatchNormParams { gamma, beta, running_mean, running_var } = params;
                    out.push((format!("layer{i}.bn.gamma"), gamma));
                    out.push((format!("layer{i}.bn.beta"), beta));
                    out.push((format!("layer{i}.bn.running_mean"), running_mean));
                    out.push((format!("layer{i}.bn.running_var"), running_var));
                }
                Layer::Dense { weight, bias, .. } => {
                    out.push((format!("layer{i}.dense.weight"), weight));
                    out.push((format!("layer{i}.dense.bias"), bias));
                }
                Layer::MaxPool { .. } | Layer::Flatten { .. } => {}
            }
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.spec.param_count(self.input_shape).expect("validated at construction")
    }
}
