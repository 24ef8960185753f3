use std::fmt::Write as _;

use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

use super::metrics::check_pair;
use super::EvalError;

/// Counts of `y_true − y_pred` over equal-width bins. Bins are left-closed
/// except the last, which also holds the maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

pub fn prediction_difference_histogram(
    y_true: ArrayView1<'_, f64>,
    y_pred: ArrayView1<'_, f64>,
    n_bins: usize,
) -> Result<Histogram, EvalError> {
    check_pair(y_true, y_pred)?;
    if n_bins == 0 {
        return Err(EvalError::BadBins);
    }
    let diffs: Vec<f64> = y_true.iter().zip(&y_pred).map(|(t, p)| t - p).collect();
    let lo = diffs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = diffs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Ok(Histogram {
            edges: vec![lo, hi],
            counts: vec![diffs.len()],
        });
    }
    let width = (hi - lo) / n_bins as f64;
    let mut edges: Vec<f64> = (0..n_bins).map(|i| lo + i as f64 * width).collect();
    edges.push(hi);
    let mut counts = vec![0usize; n_bins];
    for d in diffs {
        let mut i = (((d - lo) / width).floor() as usize).min(n_bins - 1);
        while i + 1 < n_bins && d >= edges[i + 1] {
            i += 1;
        }
        while i > 0 && d < edges[i] {
            i -= 1;
        }
        counts[i] += 1;
    }
    Ok(Histogram { edges, counts })
}

/// Paired points for a predicted-versus-true plot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FortyFive {
    pub y_true: Vec<f64>,
    pub y_pred: Vec<f64>,
    /// Root-mean-square perpendicular distance to the line `y_pred = y_true`.
    pub spread: f64,
}

pub fn forty_five_degree_data(
    y_true: ArrayView1<'_, f64>,
    y_pred: ArrayView1<'_, f64>,
) -> Result<FortyFive, EvalError> {
    check_pair(y_true, y_pred)?;
    let ms: f64 = y_true
        .iter()
        .zip(&y_pred)
        .map(|(t, p)| (p - t).powi(2) / 2.0)
        .sum::<f64>()
        / y_true.len() as f64;
    Ok(FortyFive {
        y_true: y_true.to_vec(),
        y_pred: y_pred.to_vec(),
        spread: ms.sqrt(),
    })
}

const W: f64 = 480.0;
const H: f64 = 360.0;
const PAD: f64 = 48.0;

fn svg_open(title: &str) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = write!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = write!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axes(s: &mut String, x_label: &str, y_label: &str) {
    let _ = write!(
        s,
        r#"<line x1="{PAD}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{b}" stroke="black"/>"#,
        b = H - PAD,
        r = W - PAD
    );
    let _ = write!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        W / 2.0,
        H - 12.0,
        escape(x_label)
    );
    let _ = write!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(y_label)
    );
}

/// Scatter of predicted against true values with the identity line.
pub fn forty_five_svg(data: &FortyFive, title: &str) -> String {
    let lo = data
        .y_true
        .iter()
        .chain(&data.y_pred)
        .copied()
        .fold(f64::INFINITY, f64::min);
    let hi = data
        .y_true
        .iter()
        .chain(&data.y_pred)
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let sx = |v: f64| PAD + (v - lo) / span * (W - 2.0 * PAD);
    let sy = |v: f64| H - PAD - (v - lo) / span * (H - 2.0 * PAD);
    let mut s = svg_open(title);
    axes(&mut s, "true", "predicted");
    let _ = write!(
        s,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="red" stroke-dasharray="4 3"/>"#,
        sx(lo),
        sy(lo),
        sx(lo + span),
        sy(lo + span)
    );
    for (t, p) in data.y_true.iter().zip(&data.y_pred) {
        let _ = write!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="1.5" fill="steelblue" fill-opacity="0.5"/>"#,
            sx(*t),
            sy(*p)
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn histogram_svg(hist: &Histogram, title: &str) -> String {
    let lo = hist.edges[0];
    let hi = *hist.edges.last().unwrap();
    let span = if hi > lo { hi - lo } else { 1.0 };
    let max = hist.counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    let sx = |v: f64| PAD + (v - lo) / span * (W - 2.0 * PAD);
    let mut s = svg_open(title);
    axes(&mut s, "y_true - y_pred", "count");
    for (i, &c) in hist.counts.iter().enumerate() {
        let x0 = sx(hist.edges[i]);
        let x1 = if hi > lo { sx(hist.edges[i + 1]) } else { W - PAD };
        let h = c as f64 / max * (H - 2.0 * PAD);
        let _ = write!(
            s,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="steelblue" stroke="white"/>"#,
            x0,
            H - PAD - h,
            (x1 - x0).max(0.5),
            h
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Bar chart of one value per labelled model, in the given order.
pub fn bar_svg(values: &[(String, f64)], title: &str, y_label: &str) -> String {
    let max = values.iter().map(|v| v.1).fold(0.0, f64::max);
    let max = if max > 0.0 { max } else { 1.0 };
    let slot = (W - 2.0 * PAD) / values.len().max(1) as f64;
    let mut s = svg_open(title);
    axes(&mut s, "model", y_label);
    for (i, (label, v)) in values.iter().enumerate() {
        let h = v / max * (H - 2.0 * PAD);
        let x = PAD + i as f64 * slot + slot * 0.15;
        let _ = write!(
            s,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="steelblue"/>"#,
            x,
            H - PAD - h,
            slot * 0.7,
            h
        );
        let _ = write!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text><text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="10">{:.3}</text>"#,
            x + slot * 0.35,
            H - PAD + 14.0,
            escape(label),
            x + slot * 0.35,
            H - PAD - h - 4.0,
            v
        );
    }
    s.push_str("</svg>\n");
    s
}
