//! Finite-difference audit of every analytic derivative in the repository.
//!
//! The audit is the correctness contract for the catalog's derivative and
//! parameter-gradient formulas and for whole-network backpropagation.

use std::io::Write;

use crate::activations::{ActivationError, ActivationInstance};
use crate::network::{LossFn, Network, NetworkError};
use crate::tensor::Tensor;

/// Step for scalar activation audits.
pub const SCALAR_STEP: f64 = 1e-5;
/// Step for whole-network loss audits, sized for loss curvature.
pub const NETWORK_STEP: f64 = 1e-4;
/// Points closer than this to a registered kink are skipped, not audited.
pub const KINK_EXCLUSION_RADIUS: f64 = 1e-3;

/// Per-coordinate comparison between an analytic and a numeric derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct GradReport {
    /// Family + parameter name, or network coordinate.
    pub target: String,
    /// Evaluation abscissa, or flat coordinate index for network audits.
    pub point: f64,
    pub analytic: f64,
    pub numeric: f64,
    pub abs_err: f64,
    pub rel_err: f64,
    pub pass: bool,
}

impl GradReport {
    fn new(target: String, point: f64, analytic: f64, numeric: f64, tol: f64) -> Self {
        let abs_err = (analytic - numeric).abs();
        let rel_err = abs_err / 1.0_f64.max(analytic.abs()).max(numeric.abs());
        GradReport {
            target,
            point,
            analytic,
            numeric,
            abs_err,
            rel_err,
            pass: rel_err <= tol,
        }
    }
}

/// Symmetric difference quotient (f(x+h) - f(x-h)) / (2h).
pub fn central_diff<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Audit an arbitrary scalar function against a claimed derivative.
pub fn audit_scalar_fn<F, D>(
    f: F,
    df: D,
    points: &[f64],
    h: f64,
    tol: f64,
    target: &str,
) -> Vec<GradReport>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    points
        .iter()
        .map(|&x| GradReport::new(target.to_string(), x, df(x), central_diff(&f, x, h), tol))
        .collect()
}

/// Result of auditing one activation instance over a point set.
#[derive(Debug, Clone)]
pub struct ActivationAudit {
    /// One report per surviving point for the input derivative, then per
    /// point for each parameter, in parameter order.
    pub reports: Vec<GradReport>,
    /// Points dropped by the kink exclusion zone.
    pub skipped: Vec<f64>,
}

impl ActivationAudit {
    pub fn all_pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &GradReport> {
        self.reports.iter().filter(|r| !r.pass)
    }
}

/// Audit one activation's input derivative and every parameter gradient by
/// central differences with step [`SCALAR_STEP`].
pub fn audit_activation(
    inst: &ActivationInstance,
    points: &[f64],
    tol: f64,
) -> Result<ActivationAudit, ActivationError> {
    audit_activation_with_step(inst, points, tol, SCALAR_STEP)
}

/// As [`audit_activation`] with an explicit difference step.
pub fn audit_activation_with_step(
    inst: &ActivationInstance,
    points: &[f64],
    tol: f64,
    h: f64,
) -> Result<ActivationAudit, ActivationError> {
    let kind = inst.kind();
    let mut kept = Vec::with_capacity(points.len());
    let mut skipped = Vec::new();
    for &x in points {
        if kind
            .kinks()
            .iter()
            .any(|&k| (x - k).abs() <= KINK_EXCLUSION_RADIUS)
        {
            skipped.push(x);
        } else {
            kept.push(x);
        }
    }

    let mut reports = Vec::with_capacity(kept.len() * (1 + kind.arity()));
    for &x in &kept {
        let analytic = inst.derivative(x)?;
        let numeric = (inst.forward(x + h)? - inst.forward(x - h)?) / (2.0 * h);
        reports.push(GradReport::new(
            format!("{kind}/x"),
            x,
            analytic,
            numeric,
            tol,
        ));
    }
    for (pi, spec) in kind.param_specs().iter().enumerate() {
        for &x in &kept {
            let analytic = inst.param_gradient(x)?[pi];
            let base = inst.params().value_at(pi);
            let mut shifted = inst.clone();
            shifted.params_mut().set_value_at(pi, base + h);
            let up = shifted.forward(x)?;
            shifted.params_mut().set_value_at(pi, base - h);
            let down = shifted.forward(x)?;
            let numeric = (up - down) / (2.0 * h);
            reports.push(GradReport::new(
                format!("{kind}/{}", spec.name),
                x,
                analytic,
                numeric,
                tol,
            ));
        }
    }
    Ok(ActivationAudit { reports, skipped })
}

/// Audit backpropagation of a network against central differences of the
/// cross-entropy loss, coordinate by coordinate in deterministic order:
/// per layer weights row-major, then biases, then trainable activation
/// parameters.
pub fn audit_network(
    net: &Network,
    batch: &Tensor,
    labels: &[u8],
    tol: f64,
) -> Result<Vec<GradReport>, NetworkError> {
    let h = NETWORK_STEP;
    let (_, cache) = net.forward_pass(batch)?;
    let grads = net.backward_pass(&cache, labels, LossFn::CrossEntropy)?;

    let loss_at = |probe: &Network| -> Result<f64, NetworkError> {
        let (logits, _) = probe.forward_pass(batch)?;
        Network::loss(&logits, labels)
    };

    let mut probe = net.clone();
    let mut reports = Vec::new();
    let mut coord = 0usize;
    for li in 0..net.layers().len() {
        let (rows, cols) = net.layers()[li].weights.dims2()?;
        for r in 0..rows {
            for c in 0..cols {
                let idx = r * cols + c;
                let analytic = grads.layers[li].d_weights.data()[idx];
                let orig = probe.layers()[li].weights.data()[idx];
                probe.layers_mut()[li].weights.data_mut()[idx] = orig + h;
                let up = loss_at(&probe)?;
                probe.layers_mut()[li].weights.data_mut()[idx] = orig - h;
                let down = loss_at(&probe)?;
                probe.layers_mut()[li].weights.data_mut()[idx] = orig;
                let numeric = (up - down) / (2.0 * h);
                reports.push(GradReport::new(
                    format!("layer{li}/weight[{r},{c}]"),
                    coord as f64,
                    analytic,
                    numeric,
                    tol,
                ));
                coord += 1;
            }
        }
        for j in 0..rows {
            let analytic = grads.layers[li].d_bias.data()[j];
            let orig = probe.layers()[li].bias.data()[j];
            probe.layers_mut()[li].bias.data_mut()[j] = orig + h;
            let up = loss_at(&probe)?;
            probe.layers_mut()[li].bias.data_mut()[j] = orig - h;
            let down = loss_at(&probe)?;
            probe.layers_mut()[li].bias.data_mut()[j] = orig;
            let numeric = (up - down) / (2.0 * h);
            reports.push(GradReport::new(
                format!("layer{li}/bias[{j}]"),
                coord as f64,
                analytic,
                numeric,
                tol,
            ));
            coord += 1;
        }
        let specs = net.layers()[li].activation.kind().param_specs();
        for (pi, spec) in specs.iter().enumerate() {
            if !net.layers()[li].activation.params().entries()[pi].trainable {
                continue;
            }
            let analytic = grads.layers[li].d_params[pi];
            let orig = probe.layers()[li].activation.params().value_at(pi);
            probe.layers_mut()[li]
                .activation
                .params_mut()
                .set_value_at(pi, orig + h);
            let up = loss_at(&probe)?;
            probe.layers_mut()[li]
                .activation
                .params_mut()
                .set_value_at(pi, orig - h);
            let down = loss_at(&probe)?;
            probe.layers_mut()[li]
                .activation
                .params_mut()
                .set_value_at(pi, orig);
            let numeric = (up - down) / (2.0 * h);
            reports.push(GradReport::new(
                format!("layer{li}/param/{}", spec.name),
                coord as f64,
                analytic,
                numeric,
                tol,
            ));
            coord += 1;
        }
    }
    Ok(reports)
}

/// CSV header matching [`write_reports_csv`].
pub const REPORT_CSV_HEADER: &str = "target,point,analytic,numeric,abs_err,rel_err,pass";

/// Serialize reports as CSV rows: target,point,analytic,numeric,abs_err,rel_err,pass.
pub fn write_reports_csv<W: Write>(mut w: W, reports: &[GradReport]) -> std::io::Result<()> {
    writeln!(w, "{REPORT_CSV_HEADER}")?;
    for r in reports {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.target, r.point, r.analytic, r.numeric, r.abs_err, r.rel_err, r.pass
        )?;
    }
    Ok(())
}
