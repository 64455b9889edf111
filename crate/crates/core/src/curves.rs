//! Curve sampling for activation plots, with CSV and minimal SVG writers.

use std::io::Write;

use thiserror::Error;

use crate::activations::{ActivationError, ActivationInstance};

#[derive(Debug, Error)]
pub enum CurveError {
    #[error("bad range: need min < max and samples >= 2 (got [{min}, {max}] with {samples})")]
    BadRange { min: f64, max: f64, samples: usize },
    #[error(transparent)]
    Activation(#[from] ActivationError),
}

/// One sampled row: abscissa, value, derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub x: f64,
    pub f: f64,
    pub df: f64,
}

/// Sample `(x, f(x), f'(x))` on a uniform grid inclusive of both endpoints.
pub fn sample_curve(
    inst: &ActivationInstance,
    min: f64,
    max: f64,
    samples: usize,
) -> Result<Vec<CurvePoint>, CurveError> {
    if samples < 2 || !min.is_finite() || !max.is_finite() || min >= max {
        return Err(CurveError::BadRange { min, max, samples });
    }
    let mut out = Vec::with_capacity(samples);
    let step = (max - min) / (samples - 1) as f64;
    for i in 0..samples {
        let x = if i == samples - 1 {
            max
        } else {
            min + step * i as f64
        };
        out.push(CurvePoint {
            x,
            f: inst.forward(x)?,
            df: inst.derivative(x)?,
        });
    }
    Ok(out)
}

/// CSV with header `x,f,df`.
pub fn write_curve_csv<W: Write>(mut w: W, points: &[CurvePoint]) -> std::io::Result<()> {
    writeln!(w, "x,f,df")?;
    for p in points {
        writeln!(w, "{},{},{}", p.x, p.f, p.df)?;
    }
    Ok(())
}

/// Plain polyline rendering of the value and derivative curves.
pub fn write_curve_svg<W: Write>(
    mut w: W,
    title: &str,
    points: &[CurvePoint],
) -> std::io::Result<()> {
    const WIDTH: f64 = 640.0;
    const HEIGHT: f64 = 400.0;
    const PAD: f64 = 40.0;

    let xs: Vec<f64> = points.iter().map(|p| p.x).collect();
    let mut ys: Vec<f64> = points.iter().map(|p| p.f).collect();
    ys.extend(points.iter().map(|p| p.df));
    let (x_lo, x_hi) = bounds(&xs);
    let (y_lo, y_hi) = bounds(&ys);
    let sx = |x: f64| PAD + (x - x_lo) / (x_hi - x_lo).max(1e-300) * (WIDTH - 2.0 * PAD);
    let sy = |y: f64| HEIGHT - PAD - (y - y_lo) / (y_hi - y_lo).max(1e-300) * (HEIGHT - 2.0 * PAD);

    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )?;
    writeln!(w, r#"<rect width="100%" height="100%" fill="white"/>"#)?;
    writeln!(
        w,
        r#"<text x="{}" y="20" text-anchor="middle" font-family="monospace" font-size="14">{title}</text>"#,
        WIDTH / 2.0
    )?;
    // axes through zero when visible
    if y_lo < 0.0 && y_hi > 0.0 {
        writeln!(
            w,
            r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#cccccc"/>"##,
            PAD,
            sy(0.0),
            WIDTH - PAD,
            sy(0.0)
        )?;
    }
    if x_lo < 0.0 && x_hi > 0.0 {
        writeln!(
            w,
            r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#cccccc"/>"##,
            sx(0.0),
            PAD,
            sx(0.0),
            HEIGHT - PAD
        )?;
    }
    for (color, get) in [("#1f77b4", 0usize), ("#d62728", 1usize)] {
        let pts: Vec<String> = points
            .iter()
            .map(|p| {
                let y = if get == 0 { p.f } else { p.df };
                format!("{:.2},{:.2}", sx(p.x), sy(y))
            })
            .collect();
        writeln!(
            w,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        )?;
    }
    writeln!(
        w,
        r##"<text x="{}" y="{}" font-family="monospace" font-size="12" fill="#1f77b4">f</text>"##,
        WIDTH - PAD + 6.0,
        sy(points.last().map_or(0.0, |p| p.f))
    )?;
    writeln!(
        w,
        r##"<text x="{}" y="{}" font-family="monospace" font-size="12" fill="#d62728">f'</text>"##,
        WIDTH - PAD + 6.0,
        sy(points.last().map_or(0.0, |p| p.df))
    )?;
    writeln!(w, "</svg>")
}

fn bounds(vals: &[f64]) -> (f64, f64) {
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activations::ActivationKind;
    use crate::numerics::erf_oracle;

    #[test]
    fn sigmoid_grid_has_expected_middle_row() {
        let inst = ActivationInstance::with_defaults(ActivationKind::Sigmoid);
        let pts = sample_curve(&inst, -6.0, 6.0, 5).unwrap();
        assert_eq!(pts.len(), 5);
        assert_eq!(pts[2].x, 0.0);
        assert_eq!(pts[2].f, 0.5);
        assert!((pts[2].df - 0.25).abs() <= 1e-15);
        assert_eq!(pts[0].x, -6.0);
        assert_eq!(pts[4].x, 6.0);
    }

    #[test]
    fn two_samples_are_exactly_the_endpoints() {
        let inst = ActivationInstance::with_defaults(ActivationKind::Relu);
        let pts = sample_curve(&inst, -1.5, 2.5, 2).unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[0].x, -1.5);
        assert_eq!(pts[1].x, 2.5);
    }

    #[test]
    fn erfrelu_min_value_on_range() {
        let inst = ActivationInstance::with_defaults(ActivationKind::ErfRelu);
        let pts = sample_curve(&inst, -4.0, 4.0, 201).unwrap();
        let min = pts.iter().map(|p| p.f).fold(f64::INFINITY, f64::min);
        assert!((min - (-0.882267 * erf_oracle(4.0))).abs() <= 1e-6);
    }

    #[test]
    fn bad_ranges_rejected() {
        let inst = ActivationInstance::with_defaults(ActivationKind::Tanh);
        assert!(matches!(
            sample_curve(&inst, 2.0, 1.0, 10),
            Err(CurveError::BadRange { .. })
        ));
        assert!(matches!(
            sample_curve(&inst, 0.0, 1.0, 1),
            Err(CurveError::BadRange { .. })
        ));
        assert!(matches!(
            sample_curve(&inst, 0.0, 0.0, 5),
            Err(CurveError::BadRange { .. })
        ));
    }

    #[test]
    fn csv_and_svg_render() {
        let inst = ActivationInstance::with_defaults(ActivationKind::Mish);
        let pts = sample_curve(&inst, -3.0, 3.0, 7).unwrap();
        let mut csv = Vec::new();
        write_curve_csv(&mut csv, &pts).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("x,f,df\n"));
        assert_eq!(text.lines().count(), 8);

        let mut svg = Vec::new();
        write_curve_svg(&mut svg, "mish", &pts).unwrap();
        let text = String::from_utf8(svg).unwrap();
        assert!(text.starts_with("<svg"));
        assert_eq!(text.matches("<polyline").count(), 2);
        assert!(text.trim_end().ends_with("</svg>"));
    }
}
