//! Minimal SVG plot of a series, its boundary and flagged points.

use std::fmt::Write;

use autotune_core::DetectionOutcome;

const W: f64 = 960.0;
const H: f64 = 320.0;
const PAD: f64 = 16.0;

fn path(points: impl Iterator<Item = (f64, f64)>) -> String {
    let mut d = String::new();
    for (k, (x, y)) in points.enumerate() {
        let _ = write!(d, "{}{x:.1},{y:.1}", if k == 0 { "M" } else { " L" });
    }
    d
}

pub fn render(values: &[f64], out: &DetectionOutcome) -> String {
    let n = values.len().max(2);
    let all = values.iter().chain(&out.boundary.upper).chain(&out.boundary.lower).filter(|v| v.is_finite());
    let (lo, hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let px = |i: usize| PAD + (W - 2.0 * PAD) * i as f64 / (n - 1) as f64;
    let py = |v: f64| H - PAD - (H - 2.0 * PAD) * (v - lo) / span;

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (series, colour) in [(&out.boundary.upper, "#d08770"), (&out.boundary.lower, "#d08770")] {
        let d = path(series.iter().enumerate().map(|(i, &v)| (px(i), py(v))));
        let _ = writeln!(s, r#"<path d="{d}" fill="none" stroke="{colour}" stroke-width="1" stroke-dasharray="4 3"/>"#);
    }
    let d = path(values.iter().enumerate().map(|(i, &v)| (px(i), py(v))));
    let _ = writeln!(s, r##"<path d="{d}" fill="none" stroke="#4c566a" stroke-width="1.2"/>"##);
    for i in out.anomalies.indices() {
        let _ = writeln!(s, r##"<circle cx="{:.1}" cy="{:.1}" r="3" fill="#bf616a"/>"##, px(i), py(values[i]));
    }
    s.push_str("</svg>\n");
    s
}
