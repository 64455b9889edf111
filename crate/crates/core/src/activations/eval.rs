//! Closed-form forward values, input derivatives, and parameter gradients.
//!
//! Conventions shared by every arm:
//! - derivatives at kink abscissae return the right-hand limit;
//! - exponentials of data- or parameter-scaled arguments go through
//!   `exp_clamped` so every formula stays total on finite inputs;
//! - parameter gradients are written in the same declaration order as
//!   `ActivationKind::param_specs`.

use std::f64::consts::PI;

use super::{ActivationError, ActivationKind, ParamSet};
use crate::numerics::{erf, erf_derivative, exp_clamped, sech_sq, softplus, stable_sigmoid};

fn tanhsoft3_domain(delta: f64, x: f64) -> Result<(), ActivationError> {
    // ln argument 1 + e^x tanh(delta x) must stay positive; rescaled by e^-x
    // for large x this is e^-x + tanh(delta x).
    let ok = if x > 30.0 {
        exp_clamped(-x) + (delta * x).tanh() > 0.0
    } else {
        1.0 + exp_clamped(x) * (delta * x).tanh() > 0.0
    };
    if ok {
        Ok(())
    } else {
        Err(ActivationError::ParamDomain {
            kind: ActivationKind::TanhSoft3.name(),
            reason: format!("1 + e^x tanh(delta x) <= 0 at x = {x} with delta = {delta}"),
        })
    }
}

pub(super) fn forward(kind: ActivationKind, p: &ParamSet, x: f64) -> Result<f64, ActivationError> {
    use ActivationKind::*;
    let v = |i: usize| p.value_at(i);
    Ok(match kind {
        Sigmoid => stable_sigmoid(x),
        Tanh => x.tanh(),
        Relu => x.max(0.0),
        LeakyRelu => {
            if x > 0.0 {
                x
            } else {
                v(0) * x
            }
        }
        Elu => {
            if x >= 0.0 {
                x
            } else {
                v(0) * (exp_clamped(x) - 1.0)
            }
        }
        Silu => x * stable_sigmoid(x),
        Pats => x * (v(0) * PI * stable_sigmoid(x)).atan(),
        Swish => x * stable_sigmoid(v(0) * x),
        ESwish => v(0) * (x * stable_sigmoid(x)),
        Lisht => x * x.tanh(),
        Mish => x * softplus(x).tanh(),
        TanhSoft1 => (v(0) * x).tanh() * softplus(x),
        TanhSoft2 => x * (v(0) * exp_clamped(v(1) * x)).tanh(),
        TanhSoft3 => {
            tanhsoft3_domain(v(0), x)?;
            if x > 30.0 {
                x + (exp_clamped(-x) + (v(0) * x).tanh()).ln()
            } else {
                (exp_clamped(x) * (v(0) * x).tanh()).ln_1p()
            }
        }
        SinLu => (x + v(0) * (v(1) * x).sin()) * stable_sigmoid(x),
        TanhLu => v(0) * (v(2) * x).tanh() + v(1) * x,
        Saaf => {
            if x >= 0.0 {
                x / (x / v(0) + exp_clamped(-x / v(1)))
            } else {
                // rescaled by e^{x/beta} to avoid blowing up the denominator
                let w = exp_clamped(x / v(1));
                x * w / ((x / v(0)) * w + 1.0)
            }
        }
        Serf => x * erf(softplus(x)),
        ErfAct => x * erf(v(0) * exp_clamped(v(1) * x)),
        Pserf => x * erf(v(0) * softplus(v(1) * x)),
        Smish => v(0) * x * stable_sigmoid(v(1) * x).ln_1p().tanh(),
        IpLu => {
            if x >= 0.0 {
                x
            } else {
                x / (1.0 + x.abs().powf(v(0)))
            }
        }
        ErfRelu => {
            if x >= 0.0 {
                x
            } else {
                v(0) * erf(x)
            }
        }
    })
}

pub(super) fn derivative(
    kind: ActivationKind,
    p: &ParamSet,
    x: f64,
) -> Result<f64, ActivationError> {
    use ActivationKind::*;
    let v = |i: usize| p.value_at(i);
    Ok(match kind {
        Sigmoid => {
            let s = stable_sigmoid(x);
            s * (1.0 - s)
        }
        Tanh => sech_sq(x),
        Relu => {
            if x >= 0.0 {
                1.0
            } else {
                0.0
            }
        }
        LeakyRelu => {
            if x >= 0.0 {
                1.0
            } else {
                v(0)
            }
        }
        Elu => {
            if x >= 0.0 {
                1.0
            } else {
                v(0) * exp_clamped(x)
            }
        }
        Silu => {
            let s = stable_sigmoid(x);
            s + x * s * (1.0 - s)
        }
        Pats => {
            let s = stable_sigmoid(x);
            let u = v(0) * PI * s;
            u.atan() + x * v(0) * PI * s * (1.0 - s) / (1.0 + u * u)
        }
        Swish => {
            let s = stable_sigmoid(v(0) * x);
            s + x * v(0) * s * (1.0 - s)
        }
        ESwish => {
            let s = stable_sigmoid(x);
            v(0) * (s + x * s * (1.0 - s))
        }
        Lisht => x.tanh() + x * sech_sq(x),
        Mish => {
            let sp = softplus(x);
            sp.tanh() + x * sech_sq(sp) * stable_sigmoid(x)
        }
        TanhSoft1 => {
            let u = v(0) * x;
            v(0) * sech_sq(u) * softplus(x) + u.tanh() * stable_sigmoid(x)
        }
        TanhSoft2 => {
            let e = exp_clamped(v(1) * x);
            let u = v(0) * e;
            // u * sech^2(u) underflows before x can overflow the product
            u.tanh() + x * v(1) * (u * sech_sq(u))
        }
        TanhSoft3 => {
            tanhsoft3_domain(v(0), x)?;
            let t = (v(0) * x).tanh();
            (t + v(0) * sech_sq(v(0) * x)) / (exp_clamped(-x) + t)
        }
        SinLu => {
            let s = stable_sigmoid(x);
            (1.0 + v(0) * v(1) * (v(1) * x).cos()) * s
                + (x + v(0) * (v(1) * x).sin()) * s * (1.0 - s)
        }
        TanhLu => v(0) * v(2) * sech_sq(v(2) * x) + v(1),
        Saaf => {
            if x >= 0.0 {
                let e = exp_clamped(-x / v(1));
                let d = x / v(0) + e;
                e * (1.0 + x / v(1)) / (d * d)
            } else {
                let w = exp_clamped(x / v(1));
                let d = (x / v(0)) * w + 1.0;
                w * (1.0 + x / v(1)) / (d * d)
            }
        }
        Serf => {
            let sp = softplus(x);
            erf(sp) + x * erf_derivative(sp) * stable_sigmoid(x)
        }
        ErfAct => {
            let e = exp_clamped(v(1) * x);
            let u = v(0) * e;
            erf(u) + x * erf_derivative(u) * v(0) * v(1) * e
        }
        Pserf => {
            let sp = softplus(v(1) * x);
            let u = v(0) * sp;
            erf(u) + x * erf_derivative(u) * v(0) * v(1) * stable_sigmoid(v(1) * x)
        }
        Smish => {
            let s = stable_sigmoid(v(1) * x);
            let g = s.ln_1p();
            v(0) * (g.tanh() + x * sech_sq(g) * v(1) * s * (1.0 - s) / (1.0 + s))
        }
        IpLu => {
            if x >= 0.0 {
                1.0
            } else {
                let q = x.abs().powf(v(0));
                if !q.is_finite() {
                    return Ok(0.0);
                }
                let d = 1.0 + q;
                (1.0 / d + (1.0 - v(0)) * (q / d)) / d
            }
        }
        ErfRelu => {
            if x >= 0.0 {
                1.0
            } else {
                v(0) * erf_derivative(x)
            }
        }
    })
}

pub(super) fn param_gradient(
    kind: ActivationKind,
    p: &ParamSet,
    x: f64,
    out: &mut [f64],
) -> Result<(), ActivationError> {
    use ActivationKind::*;
    let v = |i: usize| p.value_at(i);
    match kind {
        Sigmoid | Tanh | Relu | Silu | Lisht | Mish | Serf => {}
        LeakyRelu => out[0] = if x > 0.0 { 0.0 } else { x },
        Elu => out[0] = if x >= 0.0 { 0.0 } else { exp_clamped(x) - 1.0 },
        Pats => {
            let s = stable_sigmoid(x);
            let u = v(0) * PI * s;
            out[0] = x * PI * s / (1.0 + u * u);
        }
        Swish => {
            let s = stable_sigmoid(v(0) * x);
            out[0] = x * x * s * (1.0 - s);
        }
        ESwish => out[0] = x * stable_sigmoid(x),
        TanhSoft1 => out[0] = x * sech_sq(v(0) * x) * softplus(x),
        TanhSoft2 => {
            let e = exp_clamped(v(1) * x);
            let sq = sech_sq(v(0) * e);
            out[0] = x * (sq * e);
            out[1] = x * (x * (sq * e)) * v(0);
        }
        TanhSoft3 => {
            tanhsoft3_domain(v(0), x)?;
            out[0] = x * sech_sq(v(0) * x) / (exp_clamped(-x) + (v(0) * x).tanh());
        }
        SinLu => {
            let s = stable_sigmoid(x);
            out[0] = (v(1) * x).sin() * s;
            out[1] = v(0) * x * (v(1) * x).cos() * s;
        }
        TanhLu => {
            out[0] = (v(2) * x).tanh();
            out[1] = x;
            out[2] = v(0) * x * sech_sq(v(2) * x);
        }
        Saaf => {
            // ratio forms: x/d and xw/d stay bounded where x^2 would overflow
            if x >= 0.0 {
                let e = exp_clamped(-x / v(1));
                let d = x / v(0) + e;
                let t = x / d;
                out[0] = (t / v(0)) * (t / v(0));
                out[1] = -(t / v(1)) * (t / v(1)) * e;
            } else {
                let w = exp_clamped(x / v(1));
                let d = (x / v(0)) * w + 1.0;
                let tw = (x * w) / d;
                out[0] = (tw / v(0)) * (tw / v(0));
                out[1] = -(tw / v(1)) * ((x / d) / v(1));
            }
        }
        ErfAct => {
            let e = exp_clamped(v(1) * x);
            let g = erf_derivative(v(0) * e);
            out[0] = x * g * e;
            out[1] = x * x * g * v(0) * e;
        }
        Pserf => {
            let sp = softplus(v(1) * x);
            let g = erf_derivative(v(0) * sp);
            out[0] = x * g * sp;
            out[1] = x * x * g * v(0) * stable_sigmoid(v(1) * x);
        }
        Smish => {
            let s = stable_sigmoid(v(1) * x);
            let g = s.ln_1p();
            out[0] = x * g.tanh();
            out[1] = v(0) * x * x * sech_sq(g) * s * (1.0 - s) / (1.0 + s);
        }
        IpLu => {
            out[0] = if x >= 0.0 {
                0.0
            } else {
                let q = x.abs().powf(v(0));
                if q.is_finite() {
                    let d = 1.0 + q;
                    (-x / d) * (q / d) * x.abs().ln()
                } else {
                    0.0
                }
            };
        }
        ErfRelu => out[0] = if x >= 0.0 { 0.0 } else { erf(x) },
    }
    Ok(())
}
