//! Seeded end-to-end training runs and the multi-activation comparison
//! harness.
//!
//! A run is fully determined by its `RunConfig`: identical config and seed
//! produce byte-identical metrics payloads. Wall time is measured but kept
//! out of serialized files so payloads stay reproducible.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activations::{ActivationError, ActivationInstance, ActivationKind, ParamSet};
use crate::data::{batches, load_idx_dir, synth_blobs, DataError, Dataset, LoadOptions, Split};
use crate::network::{self, LossFn, Network, NetworkError};
use crate::optim::{sgd_step, AdamConfig, AdamState, OptimError};
use crate::tensor::Tensor;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Activation(#[from] ActivationError),
    #[error(transparent)]
    Optim(#[from] OptimError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Optimizer selection with hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum OptimizerConfig {
    Adam {
        #[serde(default = "default_lr")]
        lr: f64,
        #[serde(default = "default_beta1")]
        beta1: f64,
        #[serde(default = "default_beta2")]
        beta2: f64,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
    },
    Sgd {
        #[serde(default = "default_lr")]
        lr: f64,
    },
}

fn default_lr() -> f64 {
    0.001
}
fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_epsilon() -> f64 {
    1e-8
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig::Adam {
            lr: default_lr(),
            beta1: default_beta1(),
            beta2: default_beta2(),
            epsilon: default_epsilon(),
        }
    }
}

impl OptimizerConfig {
    pub fn learning_rate(&self) -> f64 {
        match *self {
            OptimizerConfig::Adam { lr, .. } | OptimizerConfig::Sgd { lr } => lr,
        }
    }

    pub fn with_learning_rate(self, lr: f64) -> Self {
        match self {
            OptimizerConfig::Adam {
                beta1,
                beta2,
                epsilon,
                ..
            } => OptimizerConfig::Adam {
                lr,
                beta1,
                beta2,
                epsilon,
            },
            OptimizerConfig::Sgd { .. } => OptimizerConfig::Sgd { lr },
        }
    }

    fn validate(&self) -> Result<(), TrainError> {
        let lr = self.learning_rate();
        if lr.is_nan() || lr <= 0.0 {
            return Err(TrainError::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate()
            )));
        }
        Ok(())
    }
}

/// Activation choice for a run: kind, parameter overrides by name, and an
/// optional trainability override applied to every parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ActivationConfig {
    pub kind: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trainable: Option<bool>,
}

impl ActivationConfig {
    pub fn new(kind: &str) -> Self {
        ActivationConfig {
            kind: kind.to_string(),
            ..Default::default()
        }
    }

    /// Parse a CLI token: `name`, `name:frozen`, or `name:trainable`.
    pub fn parse_token(token: &str) -> Result<Self, TrainError> {
        let (kind, trainable) = match token.split_once(':') {
            None => (token, None),
            Some((k, "frozen")) => (k, Some(false)),
            Some((k, "trainable")) => (k, Some(true)),
            Some((_, suffix)) => {
                return Err(TrainError::Config(format!(
                    "unknown activation suffix ':{suffix}' in '{token}' (expected :frozen or :trainable)"
                )))
            }
        };
        ActivationKind::from_name(kind)?;
        Ok(ActivationConfig {
            kind: kind.to_string(),
            params: BTreeMap::new(),
            trainable,
        })
    }

    /// Resolve to a validated instance.
    pub fn build(&self) -> Result<ActivationInstance, TrainError> {
        let kind = ActivationKind::from_name(&self.kind)?;
        let mut params = ParamSet::defaults(kind);
        for (name, &value) in &self.params {
            params.set(kind, name, value)?;
        }
        if let Some(t) = self.trainable {
            params.set_trainable_all(t);
        }
        Ok(ActivationInstance::new(kind, params)?)
    }
}

/// Dataset source for a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase", deny_unknown_fields)]
pub enum DataConfig {
    /// IDX files with the four standard names under `dir`.
    Idx {
        dir: PathBuf,
        #[serde(default)]
        pad_to_32: bool,
    },
    /// Seeded synthetic Gaussian blobs.
    Synth {
        #[serde(default = "default_synth_n")]
        train_n: usize,
        #[serde(default = "default_synth_test_n")]
        test_n: usize,
        #[serde(default = "default_synth_classes")]
        classes: usize,
        #[serde(default = "default_synth_separation")]
        separation: f64,
    },
}

fn default_synth_n() -> usize {
    512
}
fn default_synth_test_n() -> usize {
    256
}
fn default_synth_classes() -> usize {
    2
}
fn default_synth_separation() -> f64 {
    6.0
}

/// Full description of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Layer sizes including input and output; derived from the dataset as
    /// `[d, 128, classes]` when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layers: Option<Vec<usize>>,
    /// One activation applied to every layer. Mutually exclusive with
    /// `activations`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activation: Option<ActivationConfig>,
    /// Per-layer activations, one per weight layer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activations: Option<Vec<ActivationConfig>>,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub data: DataConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    /// Optional cap on total optimizer steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<u64>,
    #[serde(default = "default_shuffle")]
    pub shuffle: bool,
}

fn default_epochs() -> usize {
    5
}
fn default_batch_size() -> usize {
    128
}
fn default_seed() -> u64 {
    42
}
fn default_shuffle() -> bool {
    true
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, TrainError> {
        serde_json::from_str(text).map_err(|e| TrainError::Config(e.to_string()))
    }

    /// Validate everything that can be checked before touching data.
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.batch_size == 0 {
            return Err(TrainError::Config("batch_size must be positive".into()));
        }
        self.optimizer.validate()?;
        match (&self.activation, &self.activations) {
            (Some(_), Some(_)) => {
                return Err(TrainError::Config(
                    "give either 'activation' or 'activations', not both".into(),
                ))
            }
            (None, None) => {
                return Err(TrainError::Config(
                    "an activation must be configured".into(),
                ))
            }
            _ => {}
        }
        for ac in self
            .activation
            .iter()
            .chain(self.activations.iter().flatten())
        {
            ac.build()?;
        }
        if let Some(layers) = &self.layers {
            if layers.len() < 2 {
                return Err(TrainError::Config(
                    "layers needs at least input and output".into(),
                ));
            }
            if layers.contains(&0) {
                return Err(TrainError::Config("layer sizes must be positive".into()));
            }
            if let Some(acts) = &self.activations {
                if acts.len() != layers.len() - 1 {
                    return Err(TrainError::Config(format!(
                        "{} activations for {} weight layers",
                        acts.len(),
                        layers.len() - 1
                    )));
                }
            }
        }
        Ok(())
    }

    fn label(&self) -> String {
        if let Some(a) = &self.activation {
            match a.trainable {
                Some(false) => format!("{}:frozen", a.kind),
                Some(true) => format!("{}:trainable", a.kind),
                None => a.kind.clone(),
            }
        } else if let Some(acts) = &self.activations {
            acts.iter()
                .map(|a| a.kind.as_str())
                .collect::<Vec<_>>()
                .join("+")
        } else {
            "unconfigured".into()
        }
    }
}

/// Per-epoch training record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamValue {
    pub name: String,
    pub value: f64,
    pub trainable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParamReport {
    pub layer: usize,
    pub activation: String,
    pub params: Vec<ParamValue>,
}

/// Result of one run. Everything serialized here is deterministic for a
/// given config; wall time is deliberately excluded from the payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub label: String,
    pub seed: u64,
    pub epochs: Vec<EpochMetrics>,
    pub final_train_loss: f64,
    pub final_train_accuracy: f64,
    pub final_test_accuracy: f64,
    pub final_params: Vec<LayerParamReport>,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl RunMetrics {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("metrics serialize");
        text.push('\n');
        text
    }
}

/// A finished run: metrics plus the trained network.
pub struct TrainOutcome {
    pub metrics: RunMetrics,
    pub network: Network,
    pub train: Dataset,
    pub test: Dataset,
}

fn load_data(cfg: &RunConfig) -> Result<(Dataset, Dataset), TrainError> {
    match &cfg.data {
        DataConfig::Idx { dir, pad_to_32 } => {
            let (train, test) = load_idx_dir(
                dir,
                LoadOptions {
                    pad_to_32: *pad_to_32,
                },
            )?;
            Ok((train, test))
        }
        DataConfig::Synth {
            train_n,
            test_n,
            classes,
            separation,
        } => {
            let mut train = synth_blobs(*train_n, *classes, *separation, cfg.seed);
            train.split = Split::Train;
            let mut test = synth_blobs(*test_n, *classes, *separation, cfg.seed.wrapping_add(1));
            test.split = Split::Test;
            Ok((train, test))
        }
    }
}

fn build_network(cfg: &RunConfig, train: &Dataset) -> Result<Network, TrainError> {
    let classes = train.class_count.max(2);
    let sizes = match &cfg.layers {
        Some(l) => l.clone(),
        None => vec![train.feature_dim(), 128, classes],
    };
    if sizes[0] != train.feature_dim() {
        return Err(TrainError::Config(format!(
            "first layer size {} does not match dataset feature width {}",
            sizes[0],
            train.feature_dim()
        )));
    }
    if *sizes.last().expect("validated") < classes {
        return Err(TrainError::Config(format!(
            "output size {} is smaller than class count {classes}",
            sizes.last().expect("validated")
        )));
    }
    let acts: Vec<ActivationInstance> = match (&cfg.activation, &cfg.activations) {
        (Some(a), None) => vec![a.build()?; sizes.len() - 1],
        (None, Some(list)) => {
            if list.len() != sizes.len() - 1 {
                return Err(TrainError::Config(format!(
                    "{} activations for {} weight layers",
                    list.len(),
                    sizes.len() - 1
                )));
            }
            list.iter().map(|a| a.build()).collect::<Result<_, _>>()?
        }
        _ => {
            return Err(TrainError::Config(
                "an activation must be configured".into(),
            ))
        }
    };
    Ok(Network::init(&sizes, acts, cfg.seed)?)
}

// --- trainable parameter flattening ----------------------------------------

fn trainable_dim(net: &Network) -> usize {
    net.layers()
        .iter()
        .map(|l| {
            l.weights.len()
                + l.bias.len()
                + l.activation
                    .params()
                    .entries()
                    .iter()
                    .filter(|p| p.trainable)
                    .count()
        })
        .sum()
}

fn collect_params(net: &Network, flat: &mut Vec<f64>) {
    flat.clear();
    for l in net.layers() {
        flat.extend_from_slice(l.weights.data());
        flat.extend_from_slice(l.bias.data());
        flat.extend(
            l.activation
                .params()
                .entries()
                .iter()
                .filter(|p| p.trainable)
                .map(|p| p.value),
        );
    }
}

fn collect_grads(net: &Network, grads: &network::Gradients, flat: &mut Vec<f64>) {
    flat.clear();
    for (l, g) in net.layers().iter().zip(&grads.layers) {
        flat.extend_from_slice(g.d_weights.data());
        flat.extend_from_slice(g.d_bias.data());
        flat.extend(
            l.activation
                .params()
                .entries()
                .iter()
                .zip(&g.d_params)
                .filter(|(p, _)| p.trainable)
                .map(|(_, &dg)| dg),
        );
    }
}

fn scatter_params(net: &mut Network, flat: &[f64]) {
    let mut i = 0;
    for l in net.layers_mut() {
        let w = l.weights.data_mut();
        w.copy_from_slice(&flat[i..i + w.len()]);
        i += w.len();
        let b = l.bias.data_mut();
        b.copy_from_slice(&flat[i..i + b.len()]);
        i += b.len();
        let arity = l.activation.kind().arity();
        for pi in 0..arity {
            if l.activation.params().entries()[pi].trainable {
                l.activation.params_mut().set_value_at(pi, flat[i]);
                i += 1;
            }
        }
    }
    debug_assert_eq!(i, flat.len());
}

// --- evaluation --------------------------------------------------------------

const EVAL_CHUNK: usize = 2048;

/// Mean loss and accuracy over a dataset, evaluated in fixed-order chunks.
pub fn evaluate(net: &Network, ds: &Dataset) -> Result<(f64, f64), TrainError> {
    let mut loss_sum = 0.0;
    let mut correct = 0usize;
    for (x, labels) in batches(ds, EVAL_CHUNK, 0, false) {
        let (logits, _) = net.forward_pass(&x)?;
        loss_sum += Network::loss(&logits, &labels)? * labels.len() as f64;
        correct += count_correct(&logits, &labels);
    }
    let n = ds.len().max(1) as f64;
    Ok((loss_sum / n, correct as f64 / n))
}

fn count_correct(logits: &Tensor, labels: &[u8]) -> usize {
    let (rows, _) = logits.dims2().expect("rank-2 logits");
    let mut correct = 0;
    for (r, &label) in labels.iter().enumerate() {
        let row = logits.row(r);
        let mut best = 0;
        let mut best_v = f64::NEG_INFINITY;
        for (i, &v) in row.iter().enumerate() {
            if v > best_v {
                best_v = v;
                best = i;
            }
        }
        if best == label as usize {
            correct += 1;
        }
    }
    debug_assert!(labels.len() == rows);
    correct
}

fn epoch_seed(seed: u64, epoch: usize) -> u64 {
    // splitmix64 of (seed, epoch) so each epoch reshuffles independently
    let mut z = seed ^ (epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Run one seeded training job end to end. Writes `metrics.json` and
/// `checkpoint.json` under `out_dir` when configured; with zero epochs the
/// checkpoint is left untouched.
pub fn run_train(cfg: &RunConfig) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    let started = Instant::now();
    let (train, test) = load_data(cfg)?;
    let mut net = build_network(cfg, &train)?;

    let mut flat = Vec::with_capacity(trainable_dim(&net));
    let mut gflat = Vec::with_capacity(trainable_dim(&net));
    collect_params(&net, &mut flat);
    let mut adam = match cfg.optimizer {
        OptimizerConfig::Adam {
            lr,
            beta1,
            beta2,
            epsilon,
        } => Some(AdamState::new(
            flat.len(),
            AdamConfig {
                lr,
                beta1,
                beta2,
                epsilon,
            },
        )),
        OptimizerConfig::Sgd { .. } => None,
    };

    let mut epochs = Vec::with_capacity(cfg.epochs);
    let mut steps_taken = 0u64;
    'outer: for epoch in 0..cfg.epochs {
        let mut loss_sum = 0.0;
        let mut seen = 0usize;
        let mut correct = 0usize;
        let mut capped = false;
        for (x, labels) in batches(
            &train,
            cfg.batch_size,
            epoch_seed(cfg.seed, epoch),
            cfg.shuffle,
        ) {
            let (logits, cache) = net.forward_pass(&x)?;
            loss_sum += Network::loss(&logits, &labels)? * labels.len() as f64;
            correct += count_correct(&logits, &labels);
            seen += labels.len();

            let grads = net.backward_pass(&cache, &labels, LossFn::CrossEntropy)?;
            collect_grads(&net, &grads, &mut gflat);
            match &mut adam {
                Some(state) => state.step(&mut flat, &gflat)?,
                None => sgd_step(&mut flat, &gflat, cfg.optimizer.learning_rate())?,
            }
            scatter_params(&mut net, &flat);

            steps_taken += 1;
            if cfg.max_steps.is_some_and(|m| steps_taken >= m) {
                capped = true;
                break;
            }
        }
        let (_, test_accuracy) = evaluate(&net, &test)?;
        epochs.push(EpochMetrics {
            epoch,
            train_loss: loss_sum / seen.max(1) as f64,
            train_accuracy: correct as f64 / seen.max(1) as f64,
            test_accuracy,
        });
        if capped {
            break 'outer;
        }
    }

    let (final_train_loss, final_train_accuracy) = evaluate(&net, &train)?;
    let (_, final_test_accuracy) = evaluate(&net, &test)?;
    let final_params = net
        .layers()
        .iter()
        .enumerate()
        .map(|(i, l)| LayerParamReport {
            layer: i,
            activation: l.activation.kind().name().to_string(),
            params: l
                .activation
                .params()
                .entries()
                .iter()
                .map(|p| ParamValue {
                    name: p.name.to_string(),
                    value: p.value,
                    trainable: p.trainable,
                })
                .collect(),
        })
        .collect();

    let metrics = RunMetrics {
        label: cfg.label(),
        seed: cfg.seed,
        epochs,
        final_train_loss,
        final_train_accuracy,
        final_test_accuracy,
        final_params,
        wall_time: started.elapsed(),
    };

    if let Some(dir) = &cfg.out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("metrics.json"), metrics.to_json())?;
        if steps_taken > 0 {
            network::save_checkpoint_file(&net, &dir.join("checkpoint.json"))?;
        }
    }

    Ok(TrainOutcome {
        metrics,
        network: net,
        train,
        test,
    })
}

// --- comparison harness -------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub rank: usize,
    pub activation: String,
    pub test_accuracy: f64,
    pub train_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
    /// Full metrics per activation, in the input order.
    pub runs: Vec<RunMetrics>,
}

impl CompareReport {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serialize");
        text.push('\n');
        text
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "rank,activation,test_accuracy,train_loss")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{}",
                r.rank, r.activation, r.test_accuracy, r.train_loss
            )?;
        }
        Ok(())
    }
}

/// Train one run per activation with everything else held constant, then
/// rank by final test accuracy (ties broken by lower final train loss, then
/// input order). Runs execute in input order; per-run `out_dir` is disabled
/// and the combined report is written instead.
pub fn run_compare(
    base: &RunConfig,
    specs: &[ActivationConfig],
) -> Result<CompareReport, TrainError> {
    if specs.len() < 2 {
        return Err(TrainError::Config(
            "compare needs at least two activations".into(),
        ));
    }
    let mut runs = Vec::with_capacity(specs.len());
    for spec in specs {
        let mut cfg = base.clone();
        cfg.activation = Some(spec.clone());
        cfg.activations = None;
        cfg.out_dir = None;
        let outcome = run_train(&cfg)?;
        runs.push(outcome.metrics);
    }

    let mut order: Vec<usize> = (0..runs.len()).collect();
    order.sort_by(|&a, &b| {
        runs[b]
            .final_test_accuracy
            .partial_cmp(&runs[a].final_test_accuracy)
            .expect("finite accuracy")
            .then(
                runs[a]
                    .final_train_loss
                    .partial_cmp(&runs[b].final_train_loss)
                    .expect("finite loss"),
            )
            .then(a.cmp(&b))
    });
    let rows = order
        .iter()
        .enumerate()
        .map(|(rank, &i)| CompareRow {
            rank: rank + 1,
            activation: runs[i].label.clone(),
            test_accuracy: runs[i].final_test_accuracy,
            train_loss: runs[i].final_train_loss,
        })
        .collect();
    let report = CompareReport { rows, runs };

    if let Some(dir) = &base.out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("compare.json"), report.to_json())?;
        let mut csv = Vec::new();
        report.write_csv(&mut csv)?;
        std::fs::write(dir.join("compare.csv"), csv)?;
    }
    Ok(report)
}

/// Load a config file and apply it as the base for a run.
pub fn load_config_file(path: &Path) -> Result<RunConfig, TrainError> {
    let text = std::fs::read_to_string(path)?;
    RunConfig::from_json(&text)
}
