//! Minimal hand-written SVG: a line chart and a bar chart with error bars.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn header(out: &mut String, title: &str, x_label: &str, y_label: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + (W - LEFT - RIGHT) / 2.0,
        H - 15.0,
        escape(x_label)
    );
    let cy = TOP + (H - TOP - BOTTOM) / 2.0;
    let _ = writeln!(
        out,
        r#"<text x="18" y="{cy}" text-anchor="middle" transform="rotate(-90 18 {cy})">{}</text>"#,
        escape(y_label)
    );
}

fn y_axis(out: &mut String, lo: f64, hi: f64) {
    let bottom = H - BOTTOM;
    let _ = writeln!(out, r##"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{bottom}" stroke="#333"/>"##);
    let _ = writeln!(out, r##"<line x1="{LEFT}" y1="{bottom}" x2="{}" y2="{bottom}" stroke="#333"/>"##, W - RIGHT);
    for i in 0..=4 {
        let v = lo + (hi - lo) * i as f64 / 4.0;
        let y = scale_y(v, lo, hi);
        let _ = writeln!(out, r##"<line x1="{}" y1="{y:.1}" x2="{LEFT}" y2="{y:.1}" stroke="#333"/>"##, LEFT - 4.0);
        let _ = writeln!(out, r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#, LEFT - 7.0, y + 4.0, fmt_tick(v));
    }
}

fn fmt_tick(v: f64) -> String {
    if v.abs() >= 10.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn scale_y(v: f64, lo: f64, hi: f64) -> f64 {
    let span = if hi > lo { hi - lo } else { 1.0 };
    H - BOTTOM - (v - lo) / span * (H - TOP - BOTTOM)
}

fn legend(out: &mut String, names: &[&str]) {
    for (i, name) in names.iter().enumerate() {
        let y = TOP + 10.0 + 20.0 * i as f64;
        let x = W - RIGHT + 15.0;
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(out, r#"<rect x="{x}" y="{}" width="14" height="4" fill="{color}"/>"#, y - 4.0);
        let _ = writeln!(out, r#"<text x="{}" y="{y}">{}</text>"#, x + 20.0, escape(name));
    }
}

/// One polyline per series; point `k` sits at x = k. The y range is `[0, 1]`
/// widened to cover the data.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[(String, Vec<f64>)]) -> String {
    let finite = series.iter().flat_map(|(_, v)| v.iter().copied()).filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((0.0f64, 1.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let n = series.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
    let dx = if n > 1 { (W - LEFT - RIGHT) / (n - 1) as f64 } else { 0.0 };

    let mut out = String::new();
    header(&mut out, title, x_label, y_label);
    y_axis(&mut out, lo, hi);
    for k in 0..n {
        let x = LEFT + dx * k as f64;
        let _ = writeln!(out, r#"<text x="{x:.1}" y="{}" text-anchor="middle">{k}</text>"#, H - BOTTOM + 16.0);
    }
    for (i, (_, values)) in series.iter().enumerate() {
        let points: Vec<String> = values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .map(|(k, &v)| format!("{:.1},{:.1}", LEFT + dx * k as f64, scale_y(v, lo, hi)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{}" stroke-width="2" points="{}"/>"#,
            PALETTE[i % PALETTE.len()],
            points.join(" ")
        );
    }
    let names: Vec<&str> = series.iter().map(|(n, _)| n.as_str()).collect();
    legend(&mut out, &names);
    out.push_str("</svg>\n");
    out
}

/// A labelled bar with a symmetric error bar.
pub struct Bar {
    pub label: String,
    pub value: f64,
    pub half_width: f64,
}

/// Bars from zero with 95% interval whiskers.
pub fn bar_chart(title: &str, y_label: &str, bars: &[Bar]) -> String {
    let hi = bars
        .iter()
        .map(|b| b.value + if b.half_width.is_finite() { b.half_width } else { 0.0 })
        .filter(|v| v.is_finite())
        .fold(0.0f64, f64::max);
    let hi = if hi > 0.0 { hi * 1.1 } else { 1.0 };
    let slot = (W - LEFT - RIGHT) / bars.len().max(1) as f64;

    let mut out = String::new();
    header(&mut out, title, "", y_label);
    y_axis(&mut out, 0.0, hi);
    for (i, b) in bars.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let x = LEFT + slot * i as f64 + slot * 0.2;
        let width = slot * 0.6;
        let value = if b.value.is_finite() { b.value } else { 0.0 };
        let y = scale_y(value, 0.0, hi);
        let _ = writeln!(
            out,
            r#"<rect x="{x:.1}" y="{y:.1}" width="{width:.1}" height="{:.1}" fill="{color}"/>"#,
            H - BOTTOM - y
        );
        if b.half_width.is_finite() && b.half_width > 0.0 {
            let cx = x + width / 2.0;
            let (y0, y1) = (scale_y((value - b.half_width).max(0.0), 0.0, hi), scale_y(value + b.half_width, 0.0, hi));
            let _ = writeln!(out, r##"<line x1="{cx:.1}" y1="{y0:.1}" x2="{cx:.1}" y2="{y1:.1}" stroke="#000"/>"##);
            for yy in [y0, y1] {
                let _ = writeln!(
                    out,
                    r##"<line x1="{:.1}" y1="{yy:.1}" x2="{:.1}" y2="{yy:.1}" stroke="#000"/>"##,
                    cx - 6.0,
                    cx + 6.0
                );
            }
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
            x + width / 2.0,
            H - BOTTOM + 16.0,
            escape(&b.label)
        );
    }
    out.push_str("</svg>\n");
    out
}
