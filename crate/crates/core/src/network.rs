//! Minimal dense feedforward network with softmax cross-entropy loss.
//!
//! Backpropagation produces gradients for weights, biases, AND per-layer
//! activation parameters, which is what makes the catalog's trainable
//! families actually adaptive. Every layer applies its activation to the
//! affine preactivation; the last layer's output feeds the loss directly.

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activations::{ActivationError, ActivationInstance, ActivationKind, ParamSet};
use crate::tensor::{ShapeError, Tensor};

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error("label {label} out of range for {classes} classes")]
    LabelRange { label: u8, classes: usize },
    #[error("batch has {rows} rows but {labels} labels")]
    LabelCount { rows: usize, labels: usize },
    #[error(transparent)]
    Activation(#[from] ActivationError),
    #[error("invalid network spec: {0}")]
    Spec(String),
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint decode: {0}")]
    Decode(String),
}

/// One dense layer: `a = activation(x W^T + b)`.
#[derive(Debug, Clone)]
pub struct DenseLayer {
    /// `[out x in]`, row-major.
    pub weights: Tensor,
    /// `[out]`.
    pub bias: Tensor,
    pub activation: ActivationInstance,
}

impl DenseLayer {
    pub fn out_dim(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn in_dim(&self) -> usize {
        self.weights.shape()[1]
    }
}

/// Ordered dense layers; the final layer's output feeds softmax
/// cross-entropy.
#[derive(Debug, Clone)]
pub struct Network {
    layers: Vec<DenseLayer>,
}

/// Activation record from a forward pass, retained for backprop.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    input: Tensor,
    pre: Vec<Tensor>,
    post: Vec<Tensor>,
}

impl ForwardCache {
    pub fn logits(&self) -> &Tensor {
        self.post.last().expect("cache from a non-empty network")
    }
}

/// Per-layer parameter gradients.
#[derive(Debug, Clone)]
pub struct LayerGrads {
    pub d_weights: Tensor,
    pub d_bias: Tensor,
    /// One entry per activation parameter, in declaration order; frozen
    /// parameters still get their gradient computed here and are simply
    /// excluded from optimizer updates.
    pub d_params: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<LayerGrads>,
}

/// Scalar training loss applied to the final layer output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossFn {
    /// Mean over the batch of -log softmax(logits)[label].
    CrossEntropy,
    /// Mean over the batch of 0.5 ||logits - onehot(label)||^2. Exists for
    /// closed-form gradient fixtures.
    SquaredError,
}

impl Network {
    /// Build from explicit layers, checking that dimensions chain.
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self, NetworkError> {
        if layers.is_empty() {
            return Err(NetworkError::Spec(
                "network needs at least one layer".into(),
            ));
        }
        for w in layers.windows(2) {
            if w[0].out_dim() != w[1].in_dim() {
                return Err(NetworkError::Spec(format!(
                    "layer output {} does not chain into next input {}",
                    w[0].out_dim(),
                    w[1].in_dim()
                )));
            }
        }
        Ok(Network { layers })
    }

    /// Glorot-uniform initialization from a seeded generator; biases zero;
    /// activation parameters taken from the provided instances.
    pub fn init(
        sizes: &[usize],
        activations: Vec<ActivationInstance>,
        seed: u64,
    ) -> Result<Self, NetworkError> {
        if sizes.len() < 2 {
            return Err(NetworkError::Spec(
                "need at least input and output sizes".into(),
            ));
        }
        if sizes.contains(&0) {
            return Err(NetworkError::Spec("layer sizes must be positive".into()));
        }
        if activations.len() != sizes.len() - 1 {
            return Err(NetworkError::Spec(format!(
                "{} activations for {} layers",
                activations.len(),
                sizes.len() - 1
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(sizes.len() - 1);
        for (idx, act) in activations.into_iter().enumerate() {
            let fan_in = sizes[idx];
            let fan_out = sizes[idx + 1];
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let data: Vec<f64> = (0..fan_in * fan_out)
                .map(|_| rng.gen_range(-limit..limit))
                .collect();
            layers.push(DenseLayer {
                weights: Tensor::from_vec_unchecked(vec![fan_out, fan_in], data),
                bias: Tensor::zeros(vec![fan_out]),
                activation: act,
            });
        }
        Network::new(layers)
    }

    /// As [`Network::init`] with the same activation kind (at defaults) on
    /// every layer.
    pub fn init_uniform_kind(
        sizes: &[usize],
        kind: ActivationKind,
        seed: u64,
    ) -> Result<Self, NetworkError> {
        let acts = vec![ActivationInstance::with_defaults(kind); sizes.len() - 1];
        Network::init(sizes, acts, seed)
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").out_dim()
    }

    /// Forward the batch, retaining every pre- and post-activation for
    /// backprop. Returns the logits (the last layer's activations).
    pub fn forward_pass(&self, x: &Tensor) -> Result<(Tensor, ForwardCache), NetworkError> {
        let (_, cols) = x.dims2()?;
        if cols != self.input_dim() {
            return Err(ShapeError::Dim(format!(
                "input width {cols} does not match first layer input {}",
                self.input_dim()
            ))
            .into());
        }
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post = Vec::with_capacity(self.layers.len());
        let mut current = x;
        for layer in &self.layers {
            let mut z = Tensor::matmul_nt(current, &layer.weights)?;
            add_bias_rows(&mut z, layer.bias.data());
            let a = layer.activation.forward_batch(&z)?;
            pre.push(z);
            post.push(a);
            current = post.last().expect("just pushed");
        }
        let logits = post.last().expect("non-empty").clone();
        Ok((
            logits,
            ForwardCache {
                input: x.clone(),
                pre,
                post,
            },
        ))
    }

    /// Mean softmax cross-entropy of logits against class labels.
    pub fn loss(logits: &Tensor, labels: &[u8]) -> Result<f64, NetworkError> {
        Self::loss_with(logits, labels, LossFn::CrossEntropy)
    }

    /// Loss under an explicit loss function.
    pub fn loss_with(logits: &Tensor, labels: &[u8], loss: LossFn) -> Result<f64, NetworkError> {
        let (rows, classes) = logits.dims2()?;
        check_labels(labels, rows, classes)?;
        if rows == 0 {
            return Ok(0.0);
        }
        let mut total = 0.0;
        match loss {
            LossFn::CrossEntropy => {
                for (r, &label) in labels.iter().enumerate() {
                    let row = logits.row(r);
                    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let z: f64 = row.iter().map(|&l| (l - max).exp()).sum();
                    total += z.ln() - (row[label as usize] - max);
                }
            }
            LossFn::SquaredError => {
                for (r, &label) in labels.iter().enumerate() {
                    for (c, &l) in logits.row(r).iter().enumerate() {
                        let t = if c == label as usize { 1.0 } else { 0.0 };
                        total += 0.5 * (l - t) * (l - t);
                    }
                }
            }
        }
        Ok(total / rows as f64)
    }

    /// Row-stabilized softmax of a logits tensor.
    pub fn softmax(logits: &Tensor) -> Result<Tensor, NetworkError> {
        let (rows, cols) = logits.dims2()?;
        let mut out = logits.clone();
        for r in 0..rows {
            let row = &mut out.data_mut()[r * cols..(r + 1) * cols];
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for v in row.iter_mut() {
                *v = (*v - max).exp();
                z += *v;
            }
            for v in row.iter_mut() {
                *v /= z;
            }
        }
        Ok(out)
    }

    /// Exact analytic gradients of the mean loss with respect to every
    /// weight, bias, and activation parameter.
    pub fn backward_pass(
        &self,
        cache: &ForwardCache,
        labels: &[u8],
        loss: LossFn,
    ) -> Result<Gradients, NetworkError> {
        let logits = cache.logits();
        let (rows, classes) = logits.dims2()?;
        check_labels(labels, rows, classes)?;
        let scale = if rows == 0 { 0.0 } else { 1.0 / rows as f64 };

        // dL/d(logits)
        let mut upstream = match loss {
            LossFn::CrossEntropy => {
                let mut p = Self::softmax(logits)?;
                for (r, &label) in labels.iter().enumerate() {
                    p.data_mut()[r * classes + label as usize] -= 1.0;
                }
                for v in p.data_mut() {
                    *v *= scale;
                }
                p
            }
            LossFn::SquaredError => {
                let mut p = logits.clone();
                for (r, &label) in labels.iter().enumerate() {
                    p.data_mut()[r * classes + label as usize] -= 1.0;
                }
                for v in p.data_mut() {
                    *v *= scale;
                }
                p
            }
        };

        let mut grads: Vec<LayerGrads> = Vec::with_capacity(self.layers.len());
        for (li, layer) in self.layers.iter().enumerate().rev() {
            let z = &cache.pre[li];

            // activation parameter gradients from the upstream da
            let mut d_params = vec![0.0; layer.activation.kind().arity()];
            layer
                .activation
                .param_gradient_accumulate(z.data(), upstream.data(), &mut d_params)?;

            // dz = da (.) sigma'(z)
            let dsig = layer.activation.derivative_batch(z)?;
            let mut dz = upstream;
            for (v, &d) in dz.data_mut().iter_mut().zip(dsig.data()) {
                *v *= d;
            }

            let below: &Tensor = if li == 0 {
                &cache.input
            } else {
                &cache.post[li - 1]
            };
            let d_weights = Tensor::matmul_tn(&dz, below)?;
            let (_, out_dim) = dz.dims2()?;
            let mut d_bias = Tensor::zeros(vec![out_dim]);
            for r in 0..rows {
                for (b, &v) in d_bias.data_mut().iter_mut().zip(dz.row(r)) {
                    *b += v;
                }
            }

            grads.push(LayerGrads {
                d_weights,
                d_bias,
                d_params,
            });

            if li == 0 {
                break;
            }
            upstream = Tensor::matmul(&dz, &layer.weights)?;
        }
        grads.reverse();
        Ok(Gradients { layers: grads })
    }

    /// Argmax class per row; ties break to the lowest class index.
    pub fn predict(&self, x: &Tensor) -> Result<Vec<u8>, NetworkError> {
        let (logits, _) = self.forward_pass(x)?;
        let (rows, _) = logits.dims2()?;
        let mut out = Vec::with_capacity(rows);
        for r in 0..rows {
            out.push(argmax(logits.row(r)) as u8);
        }
        Ok(out)
    }
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, &v) in row.iter().enumerate() {
        if v > best_v {
            best_v = v;
            best = i;
        }
    }
    best
}

fn add_bias_rows(z: &mut Tensor, bias: &[f64]) {
    let cols = bias.len();
    for row in z.data_mut().chunks_mut(cols) {
        for (v, &b) in row.iter_mut().zip(bias) {
            *v += b;
        }
    }
}

fn check_labels(labels: &[u8], rows: usize, classes: usize) -> Result<(), NetworkError> {
    if labels.len() != rows {
        return Err(NetworkError::LabelCount {
            rows,
            labels: labels.len(),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&l| l as usize >= classes) {
        return Err(NetworkError::LabelRange {
            label: bad,
            classes,
        });
    }
    Ok(())
}

// --- checkpoint -------------------------------------------------------------

const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CheckpointParam {
    name: String,
    value: f64,
    trainable: bool,
}

#[derive(Serialize, Deserialize)]
struct CheckpointLayer {
    weights_shape: Vec<usize>,
    weights: Vec<f64>,
    bias: Vec<f64>,
    activation: String,
    params: Vec<CheckpointParam>,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    layers: Vec<CheckpointLayer>,
}

/// Write a versioned textual checkpoint. Float values round-trip bitwise.
pub fn save_checkpoint<W: Write>(net: &Network, mut w: W) -> Result<(), NetworkError> {
    let ck = Checkpoint {
        version: CHECKPOINT_VERSION,
        layers: net
            .layers()
            .iter()
            .map(|l| CheckpointLayer {
                weights_shape: l.weights.shape().to_vec(),
                weights: l.weights.data().to_vec(),
                bias: l.bias.data().to_vec(),
                activation: l.activation.kind().name().to_string(),
                params: l
                    .activation
                    .params()
                    .entries()
                    .iter()
                    .map(|p| CheckpointParam {
                        name: p.name.to_string(),
                        value: p.value,
                        trainable: p.trainable,
                    })
                    .collect(),
            })
            .collect(),
    };
    let text = serde_json::to_string(&ck).map_err(|e| NetworkError::Decode(e.to_string()))?;
    w.write_all(text.as_bytes())?;
    Ok(())
}

pub fn save_checkpoint_file(net: &Network, path: &Path) -> Result<(), NetworkError> {
    let file = std::fs::File::create(path)?;
    save_checkpoint(net, std::io::BufWriter::new(file))
}

/// Load a checkpoint produced by [`save_checkpoint`].
pub fn load_checkpoint<R: Read>(mut r: R) -> Result<Network, NetworkError> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let ck: Checkpoint =
        serde_json::from_str(&text).map_err(|e| NetworkError::Decode(e.to_string()))?;
    if ck.version != CHECKPOINT_VERSION {
        return Err(NetworkError::Decode(format!(
            "unsupported checkpoint version {}",
            ck.version
        )));
    }
    let mut layers = Vec::with_capacity(ck.layers.len());
    for l in ck.layers {
        let kind = ActivationKind::from_name(&l.activation)?;
        if l.params.len() != kind.arity() {
            return Err(NetworkError::Decode(format!(
                "{} expects {} params, checkpoint has {}",
                l.activation,
                kind.arity(),
                l.params.len()
            )));
        }
        let mut params = ParamSet::defaults(kind);
        for p in &l.params {
            params
                .set(kind, &p.name, p.value)
                .map_err(|e| NetworkError::Decode(e.to_string()))?;
            params.set_trainable(&p.name, p.trainable);
        }
        let activation = ActivationInstance::new(kind, params)?;
        layers.push(DenseLayer {
            weights: Tensor::from_vec(l.weights_shape, l.weights).map_err(NetworkError::Shape)?,
            bias: Tensor::from_vec(vec![l.bias.len()], l.bias).map_err(NetworkError::Shape)?,
            activation,
        });
    }
    Network::new(layers)
}

pub fn load_checkpoint_file(path: &Path) -> Result<Network, NetworkError> {
    let file = std::fs::File::open(path)?;
    load_checkpoint(std::io::BufReader::new(file))
}
