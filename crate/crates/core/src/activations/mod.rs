//! The activation catalog: 23 fixed and trainable families with forward
//! values, input derivatives, and per-parameter gradients.
//!
//! Derivatives are derived from the forward definitions and audited against
//! the finite-difference oracle in [`crate::gradcheck`]; that audit, not any
//! printed formula, is the correctness contract.

mod eval;

use std::fmt;

use thiserror::Error;

use crate::tensor::Tensor;

/// Errors raised by catalog operations.
#[derive(Debug, Error)]
pub enum ActivationError {
    #[error("unknown activation '{0}'")]
    UnknownActivation(String),
    #[error("{kind}: parameter set mismatch: expected [{expected}], got [{got}]")]
    ParamMismatch {
        kind: &'static str,
        expected: String,
        got: String,
    },
    #[error("{kind}: parameter domain violation: {reason}")]
    ParamDomain { kind: &'static str, reason: String },
    #[error("{kind}: non-finite parameter {name} = {value}")]
    NonFiniteParam {
        kind: &'static str,
        name: &'static str,
        value: f64,
    },
}

/// Static description of one named parameter of a family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: f64,
    pub trainable: bool,
}

const fn spec(name: &'static str, default: f64, trainable: bool) -> ParamSpec {
    ParamSpec {
        name,
        default,
        trainable,
    }
}

/// One of the 23 activation families in the catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ActivationKind {
    Sigmoid,
    Tanh,
    Relu,
    LeakyRelu,
    Elu,
    Silu,
    Pats,
    Swish,
    ESwish,
    Lisht,
    Mish,
    TanhSoft1,
    TanhSoft2,
    TanhSoft3,
    SinLu,
    TanhLu,
    Saaf,
    Serf,
    ErfAct,
    Pserf,
    Smish,
    IpLu,
    ErfRelu,
}

use ActivationKind::*;

/// Every family, in fixed catalog order.
pub const ALL_KINDS: [ActivationKind; 23] = [
    Sigmoid, Tanh, Relu, LeakyRelu, Elu, Silu, Pats, Swish, ESwish, Lisht, Mish, TanhSoft1,
    TanhSoft2, TanhSoft3, SinLu, TanhLu, Saaf, Serf, ErfAct, Pserf, Smish, IpLu, ErfRelu,
];

/// The ten families whose default parameters come from the tuned reference
/// benchmark; this is the cohort used by the comparison harness.
pub const BENCHMARK_KINDS: [ActivationKind; 10] = [
    TanhSoft1, TanhSoft2, TanhSoft3, TanhLu, Saaf, ErfAct, Pserf, Smish, Serf, ErfRelu,
];

impl ActivationKind {
    /// Lowercase ASCII identifier used for CLI and config serialization.
    pub fn name(self) -> &'static str {
        match self {
            Sigmoid => "sigmoid",
            Tanh => "tanh",
            Relu => "relu",
            LeakyRelu => "lrelu",
            Elu => "elu",
            Silu => "silu",
            Pats => "pats",
            Swish => "swish",
            ESwish => "eswish",
            Lisht => "lisht",
            Mish => "mish",
            TanhSoft1 => "tanhsoft1",
            TanhSoft2 => "tanhsoft2",
            TanhSoft3 => "tanhsoft3",
            SinLu => "sinlu",
            TanhLu => "tanhlu",
            Saaf => "saaf",
            Serf => "serf",
            ErfAct => "erfact",
            Pserf => "pserf",
            Smish => "smish",
            IpLu => "iplu",
            ErfRelu => "erfrelu",
        }
    }

    /// Resolve a lowercase identifier back to a kind.
    pub fn from_name(name: &str) -> Result<Self, ActivationError> {
        ALL_KINDS
            .iter()
            .copied()
            .find(|k| k.name() == name)
            .ok_or_else(|| ActivationError::UnknownActivation(name.to_string()))
    }

    /// Named parameters of this family, in declaration order.
    ///
    /// Defaults for the benchmark cohort are the tuned reference values;
    /// the remaining parametric families carry conventional defaults and are
    /// frozen unless explicitly unfrozen.
    pub fn param_specs(self) -> &'static [ParamSpec] {
        const LRELU: [ParamSpec; 1] = [spec("alpha", 0.01, false)];
        const ELU: [ParamSpec; 1] = [spec("alpha", 1.0, false)];
        const PATS: [ParamSpec; 1] = [spec("k", 0.625, false)];
        const SWISH: [ParamSpec; 1] = [spec("beta", 1.0, false)];
        const ESWISH: [ParamSpec; 1] = [spec("beta", 1.5, false)];
        const TANHSOFT1: [ParamSpec; 1] = [spec("alpha", 0.87, true)];
        const TANHSOFT2: [ParamSpec; 2] = [spec("beta", 0.75, true), spec("gamma", 0.75, true)];
        const TANHSOFT3: [ParamSpec; 1] = [spec("delta", 0.85, true)];
        const SINLU: [ParamSpec; 2] = [spec("alpha", 1.0, true), spec("beta", 1.0, true)];
        const TANHLU: [ParamSpec; 3] = [
            spec("alpha", 1.0, true),
            spec("beta", 0.5, true),
            spec("gamma", 2.0, true),
        ];
        const SAAF: [ParamSpec; 2] = [spec("alpha", 3.0, true), spec("beta", 2.0, true)];
        const ERFACT: [ParamSpec; 2] = [spec("alpha", 0.75, true), spec("beta", 0.75, true)];
        const PSERF: [ParamSpec; 2] = [spec("gamma", 1.25, true), spec("delta", 0.85, true)];
        const SMISH: [ParamSpec; 2] = [spec("alpha", 0.95, true), spec("beta", 1.2, true)];
        const IPLU: [ParamSpec; 1] = [spec("alpha", 1.0, false)];
        const ERFRELU: [ParamSpec; 1] = [spec("alpha", 0.882267, true)];
        match self {
            Sigmoid | Tanh | Relu | Silu | Lisht | Mish | Serf => &[],
            LeakyRelu => &LRELU,
            Elu => &ELU,
            Pats => &PATS,
            Swish => &SWISH,
            ESwish => &ESWISH,
            TanhSoft1 => &TANHSOFT1,
            TanhSoft2 => &TANHSOFT2,
            TanhSoft3 => &TANHSOFT3,
            SinLu => &SINLU,
            TanhLu => &TANHLU,
            Saaf => &SAAF,
            ErfAct => &ERFACT,
            Pserf => &PSERF,
            Smish => &SMISH,
            IpLu => &IPLU,
            ErfRelu => &ERFRELU,
        }
    }

    /// Number of named parameters.
    pub fn arity(self) -> usize {
        self.param_specs().len()
    }

    /// True when this family's defaults come from the tuned benchmark table.
    pub fn tuned_defaults(self) -> bool {
        BENCHMARK_KINDS.contains(&self) && self.arity() > 0
    }

    /// Abscissae where the derivative is discontinuous; audits exclude a
    /// small neighborhood around each.
    pub fn kinks(self) -> &'static [f64] {
        match self {
            Relu | LeakyRelu | Elu | IpLu | ErfRelu => &[0.0],
            _ => &[],
        }
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One named scalar parameter with its trainability flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Param {
    pub name: &'static str,
    pub value: f64,
    pub trainable: bool,
}

/// Ordered parameter values for one activation family.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    entries: Vec<Param>,
}

impl ParamSet {
    /// Family defaults: tuned benchmark values where available, conventional
    /// values otherwise.
    pub fn defaults(kind: ActivationKind) -> Self {
        ParamSet {
            entries: kind
                .param_specs()
                .iter()
                .map(|s| Param {
                    name: s.name,
                    value: s.default,
                    trainable: s.trainable,
                })
                .collect(),
        }
    }

    /// Defaults with positional value overrides.
    pub fn with_values(kind: ActivationKind, values: &[f64]) -> Result<Self, ActivationError> {
        let specs = kind.param_specs();
        if values.len() != specs.len() {
            return Err(ActivationError::ParamMismatch {
                kind: kind.name(),
                expected: specs.iter().map(|s| s.name).collect::<Vec<_>>().join(", "),
                got: format!("{} positional values", values.len()),
            });
        }
        let mut set = Self::defaults(kind);
        for (p, &v) in set.entries.iter_mut().zip(values) {
            p.value = v;
        }
        set.check_finite(kind)?;
        Ok(set)
    }

    fn check_finite(&self, kind: ActivationKind) -> Result<(), ActivationError> {
        for p in &self.entries {
            if !p.value.is_finite() {
                return Err(ActivationError::NonFiniteParam {
                    kind: kind.name(),
                    name: p.name,
                    value: p.value,
                });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Param] {
        &self.entries
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|p| p.value).collect()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|p| p.name == name)
            .map(|p| p.value)
    }

    /// Set a parameter by name; errors on unknown names.
    pub fn set(
        &mut self,
        kind: ActivationKind,
        name: &str,
        value: f64,
    ) -> Result<(), ActivationError> {
        match self.entries.iter_mut().find(|p| p.name == name) {
            Some(p) => {
                p.value = value;
                Ok(())
            }
            None => Err(ActivationError::ParamMismatch {
                kind: kind.name(),
                expected: kind
                    .param_specs()
                    .iter()
                    .map(|s| s.name)
                    .collect::<Vec<_>>()
                    .join(", "),
                got: name.to_string(),
            }),
        }
    }

    pub fn value_at(&self, idx: usize) -> f64 {
        self.entries[idx].value
    }

    pub fn set_value_at(&mut self, idx: usize, value: f64) {
        self.entries[idx].value = value;
    }

    /// Set the trainability flag of every parameter.
    pub fn set_trainable_all(&mut self, trainable: bool) {
        for p in &mut self.entries {
            p.trainable = trainable;
        }
    }

    /// Set the trainability flag of one parameter; unknown names are ignored.
    pub fn set_trainable(&mut self, name: &str, trainable: bool) {
        if let Some(p) = self.entries.iter_mut().find(|p| p.name == name) {
            p.trainable = trainable;
        }
    }
}

/// A family together with a concrete, possibly trained, parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationInstance {
    kind: ActivationKind,
    params: ParamSet,
}

impl ActivationInstance {
    /// Build an instance, validating arity, names, finiteness, and the
    /// static parameter-domain constraints.
    pub fn new(kind: ActivationKind, params: ParamSet) -> Result<Self, ActivationError> {
        let specs = kind.param_specs();
        let ok = params.len() == specs.len()
            && params
                .entries()
                .iter()
                .zip(specs)
                .all(|(p, s)| p.name == s.name);
        if !ok {
            return Err(ActivationError::ParamMismatch {
                kind: kind.name(),
                expected: specs.iter().map(|s| s.name).collect::<Vec<_>>().join(", "),
                got: params
                    .entries()
                    .iter()
                    .map(|p| p.name)
                    .collect::<Vec<_>>()
                    .join(", "),
            });
        }
        params.check_finite(kind)?;
        let inst = ActivationInstance { kind, params };
        inst.check_domain()?;
        Ok(inst)
    }

    /// Instance with the family's default parameters.
    pub fn with_defaults(kind: ActivationKind) -> Self {
        ActivationInstance {
            kind,
            params: ParamSet::defaults(kind),
        }
    }

    pub fn kind(&self) -> ActivationKind {
        self.kind
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    /// Static (input-independent) domain constraints.
    pub(crate) fn check_domain(&self) -> Result<(), ActivationError> {
        let v = |i: usize| self.params.value_at(i);
        match self.kind {
            Saaf if v(0) <= 0.0 || v(1) <= 0.0 => Err(ActivationError::ParamDomain {
                kind: self.kind.name(),
                reason: format!(
                    "requires alpha > 0 and beta > 0, got alpha = {}, beta = {}",
                    v(0),
                    v(1)
                ),
            }),
            Pats if v(0) <= 0.0 => Err(ActivationError::ParamDomain {
                kind: self.kind.name(),
                reason: format!("requires k > 0, got k = {}", v(0)),
            }),
            _ => Ok(()),
        }
    }

    /// Forward value at a scalar input.
    pub fn forward(&self, x: f64) -> Result<f64, ActivationError> {
        self.check_domain()?;
        eval::forward(self.kind, &self.params, x)
    }

    /// Analytic derivative with respect to the input. At kink abscissae the
    /// right-hand limit is returned.
    pub fn derivative(&self, x: f64) -> Result<f64, ActivationError> {
        self.check_domain()?;
        eval::derivative(self.kind, &self.params, x)
    }

    /// Analytic gradient with respect to each named parameter, in parameter
    /// order.
    pub fn param_gradient(&self, x: f64) -> Result<Vec<f64>, ActivationError> {
        let mut out = vec![0.0; self.kind.arity()];
        self.param_gradient_into(x, &mut out)?;
        Ok(out)
    }

    /// Allocation-free form of [`Self::param_gradient`].
    pub fn param_gradient_into(&self, x: f64, out: &mut [f64]) -> Result<(), ActivationError> {
        debug_assert_eq!(out.len(), self.kind.arity());
        self.check_domain()?;
        eval::param_gradient(self.kind, &self.params, x, out)
    }

    /// Elementwise forward over a tensor; bitwise equal to mapping
    /// [`Self::forward`] over the elements.
    pub fn forward_batch(&self, xs: &Tensor) -> Result<Tensor, ActivationError> {
        self.check_domain()?;
        let mut data = Vec::with_capacity(xs.len());
        for &x in xs.data() {
            data.push(eval::forward(self.kind, &self.params, x)?);
        }
        Ok(Tensor::from_vec_unchecked(xs.shape().to_vec(), data))
    }

    /// Elementwise input derivative over a tensor.
    pub fn derivative_batch(&self, xs: &Tensor) -> Result<Tensor, ActivationError> {
        self.check_domain()?;
        let mut data = Vec::with_capacity(xs.len());
        for &x in xs.data() {
            data.push(eval::derivative(self.kind, &self.params, x)?);
        }
        Ok(Tensor::from_vec_unchecked(xs.shape().to_vec(), data))
    }

    /// Accumulate `sum_i upstream[i] * d f(xs[i]) / d p_j` for every
    /// parameter j. Used by backpropagation to produce per-layer activation
    /// parameter gradients.
    pub fn param_gradient_accumulate(
        &self,
        xs: &[f64],
        upstream: &[f64],
        acc: &mut [f64],
    ) -> Result<(), ActivationError> {
        debug_assert_eq!(xs.len(), upstream.len());
        debug_assert_eq!(acc.len(), self.kind.arity());
        if acc.is_empty() {
            return Ok(());
        }
        self.check_domain()?;
        let mut buf = [0.0; 4];
        let n = self.kind.arity();
        for (&x, &u) in xs.iter().zip(upstream) {
            eval::param_gradient(self.kind, &self.params, x, &mut buf[..n])?;
            for (a, &g) in acc.iter_mut().zip(&buf[..n]) {
                *a += u * g;
            }
        }
        Ok(())
    }
}

/// One row of the catalog listing.
#[derive(Debug, Clone)]
pub struct RegistryEntry {
    pub kind: ActivationKind,
    pub name: &'static str,
    pub params: &'static [ParamSpec],
    pub tuned_defaults: bool,
}

/// The full catalog in deterministic order.
pub fn registry_list() -> Vec<RegistryEntry> {
    ALL_KINDS
        .iter()
        .map(|&kind| RegistryEntry {
            kind,
            name: kind.name(),
            params: kind.param_specs(),
            tuned_defaults: kind.tuned_defaults(),
        })
        .collect()
}

/// Family defaults as a standalone operation.
pub fn default_params(kind: ActivationKind) -> ParamSet {
    ParamSet::defaults(kind)
}
