//! Scalar special functions used across the activation catalog.
//!
//! `erf` is the fast path; `erf_oracle` is an independent adaptive-Simpson
//! quadrature of the defining integral and is the sole correctness reference
//! for it. Both are kept in the library so the verification route stays
//! available to downstream tests and the CLI audit.

use std::f64::consts::{FRAC_2_SQRT_PI, PI};

/// Argument-clamped exponential. Keeps every catalog formula total on finite
/// inputs: arguments are clamped to [-700, 700] before exponentiation so no
/// intermediate overflows to infinity.
#[inline]
pub fn exp_clamped(x: f64) -> f64 {
    x.clamp(-700.0, 700.0).exp()
}

/// Gauss error function, (2/sqrt(pi)) * integral of exp(-t^2) on [0, x].
///
/// Small arguments use the non-alternating Kummer series for the lower
/// incomplete gamma function; larger arguments use the Lentz continued
/// fraction for the upper tail. Oddness is exact: the value is computed for
/// |x| and the sign of x is reapplied.
pub fn erf(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let a = x.abs();
    let v = if a * a < 1.5 {
        erf_series(a)
    } else if a < 6.0 {
        1.0 - erfc_continued_fraction(a)
    } else {
        // erfc(6) < 2.2e-17 is already below half an ulp of 1
        1.0
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

// erf(x) = (2x e^{-x^2}/sqrt(pi)) * sum_{n>=0} (2x^2)^n / (1*3*...*(2n+1)),
// all-positive terms, used for x^2 < 1.5.
fn erf_series(x: f64) -> f64 {
    let z = x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut odd = 1.0;
    for _ in 0..200 {
        odd += 2.0;
        term *= 2.0 * z / odd;
        sum += term;
        if term < sum * 1e-18 {
            break;
        }
    }
    FRAC_2_SQRT_PI * x * (-z).exp() * sum
}

// erfc(x) = Q(1/2, x^2) evaluated with the modified Lentz continued fraction
// for the regularized upper incomplete gamma function; x > 0.
fn erfc_continued_fraction(x: f64) -> f64 {
    let a = 0.5_f64;
    let z = x * x;
    const FPMIN: f64 = 1e-300;
    let mut b = z + 1.0 - a;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..300 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-17 {
            break;
        }
    }
    // Q(a, z) = z^a e^{-z} / Gamma(a) * h, with Gamma(1/2) = sqrt(pi).
    (-z).exp() * x * h / PI.sqrt()
}

/// Derivative of the error function: (2/sqrt(pi)) * exp(-x^2).
#[inline]
pub fn erf_derivative(x: f64) -> f64 {
    FRAC_2_SQRT_PI * (-x * x).exp()
}

/// Reference error function by adaptive Simpson quadrature of the defining
/// integral, absolute tolerance 1e-13 on the integral before scaling.
///
/// Deliberately independent of [`erf`]: shares no code beyond `exp`.
pub fn erf_oracle(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let a = x.abs();
    let v = FRAC_2_SQRT_PI * adaptive_simpson(|t| (-t * t).exp(), 0.0, a, 1e-13);
    if x < 0.0 {
        -v
    } else {
        v
    }
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(&f, a, b, fa, fm, fb, whole, tol, 60)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Overflow-safe softplus, ln(1 + e^x).
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Numerically stable logistic sigmoid, 1 / (1 + e^(-x)).
#[inline]
pub fn stable_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Squared hyperbolic secant, 1 - tanh^2, computed without overflow.
#[inline]
pub fn sech_sq(x: f64) -> f64 {
    let e = (-2.0 * x.abs()).exp();
    let s = 2.0 * (-x.abs()).exp() / (1.0 + e);
    s * s
}
