//! Minimal self-contained SVG line plots: one panel per series, stacked.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

const WIDTH: f64 = 640.0;
const PANEL: f64 = 220.0;
const MARGIN_L: f64 = 80.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 40.0;

#[derive(Debug, Clone)]
pub struct Series {
    pub title: String,
    pub x_label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Plot `x` on a base-10 logarithmic axis.
    pub log_x: bool,
}

impl Series {
    pub fn new(title: &str, x_label: &str, x: Vec<f64>, y: Vec<f64>) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            x,
            y,
            log_x: false,
        }
    }

    pub fn log_x(mut self) -> Self {
        self.log_x = true;
        self
    }
}

fn range(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-300 {
        let pad = 0.5 * lo.abs().max(1.0);
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

fn label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.3e}")
    } else {
        format!("{v:.4}")
    }
}

/// Renders the series as one SVG document.
pub fn render(series: &[Series]) -> String {
    let height = PANEL * series.len().max(1) as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (k, ser) in series.iter().enumerate() {
        let top = PANEL * k as f64 + MARGIN_T;
        let bottom = PANEL * (k + 1) as f64 - MARGIN_B;
        let (left, right) = (MARGIN_L, WIDTH - MARGIN_R);
        let xs: Vec<f64> = ser
            .x
            .iter()
            .map(|&x| if ser.log_x { x.log10() } else { x })
            .collect();
        let (x0, x1) = range(xs.iter().copied());
        let (y0, y1) = range(ser.y.iter().copied());
        let px = |x: f64| left + (x - x0) / (x1 - x0) * (right - left);
        let py = |y: f64| bottom - (y - y0) / (y1 - y0) * (bottom - top);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{}</text>"#,
            0.5 * (left + right),
            top - 10.0,
            escape(&ser.title)
        );
        let _ = writeln!(
            s,
            r#"<path d="M{left} {top} L{left} {bottom} L{right} {bottom}" stroke="black" fill="none"/>"#
        );
        let xl = |x: f64| if ser.log_x { label(10f64.powf(x)) } else { label(x) };
        for (x, anchor) in [(x0, "start"), (x1, "end")] {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="{anchor}">{}</text>"#,
                px(x),
                bottom + 14.0,
                xl(x)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            0.5 * (left + right),
            bottom + 28.0,
            escape(&ser.x_label)
        );
        for y in [y0, y1] {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                left - 6.0,
                py(y) + 4.0,
                label(y)
            );
        }
        let mut points = String::new();
        for (&x, &y) in xs.iter().zip(&ser.y) {
            if x.is_finite() && y.is_finite() {
                let _ = write!(points, "{:.2},{:.2} ", px(x), py(y));
            }
        }
        let _ = writeln!(
            s,
            r#"<polyline points="{}" stroke="steelblue" stroke-width="1.5" fill="none"/>"#,
            points.trim_end()
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn write_svg(path: &Path, series: &[Series]) -> Result<()> {
    fs::write(path, render(series)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_polyline_per_series() {
        let a = Series::new("a", "t", vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0]);
        let b = Series::new("b <x>", "lambda", vec![1e-3, 1.0, 1e3], vec![8.0, 7.0, 6.0]).log_x();
        let svg = render(&[a, b]);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("b &lt;x&gt;"));
        assert!(svg.contains("1.000e-3"));
        assert!(!svg.contains("href"));
    }

    #[test]
    fn flat_series_does_not_divide_by_zero() {
        let svg = render(&[Series::new("c", "t", vec![0.0, 1.0], vec![2.0, 2.0])]);
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }
}
