//! Minimal standalone SVG charts: line plots and bar charts.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 48.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

pub struct Series<'a> {
    pub name: &'a str,
    pub points: Vec<(f64, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Finite `(min, max)` over values, widened when degenerate.
fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn frame(out: &mut String, title: &str, x_label: &str, y_label: &str, (x0, x1): (f64, f64), (y0, y1): (f64, f64)) {
    let (w, h) = (WIDTH, HEIGHT);
    writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#).unwrap();
    writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
    writeln!(out, r#"<text x="{}" y="18" text-anchor="middle" font-size="13">{}</text>"#, w / 2.0, escape(title)).unwrap();
    let (l, r, t, b) = (MARGIN, w - MARGIN / 2.0, MARGIN / 1.5, h - MARGIN);
    writeln!(out, r#"<path d="M{l} {t}V{b}H{r}" fill="none" stroke="black"/>"#).unwrap();
    writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (l + r) / 2.0, h - 8.0, escape(x_label)).unwrap();
    writeln!(out, r#"<text x="12" y="{}" text-anchor="middle" transform="rotate(-90 12 {})">{}</text>"#, (t + b) / 2.0, (t + b) / 2.0, escape(y_label)).unwrap();
    for (v, y) in [(y0, b), (y1, t)] {
        writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, l - 4.0, y + 4.0, tick(v)).unwrap();
    }
    for (v, x) in [(x0, l), (x1, r)] {
        writeln!(out, r#"<text x="{x}" y="{}" text-anchor="middle">{}</text>"#, b + 14.0, tick(v)).unwrap();
    }
}

fn tick(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e6 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

/// Area inside the axes as `(left, right, top, bottom)`.
fn plot_area() -> (f64, f64, f64, f64) {
    (MARGIN, WIDTH - MARGIN / 2.0, MARGIN / 1.5, HEIGHT - MARGIN)
}

pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let xs = extent(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let ys = extent(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let (l, r, t, b) = plot_area();
    let sx = |x: f64| l + (x - xs.0) / (xs.1 - xs.0) * (r - l);
    let sy = |y: f64| b - (y - ys.0) / (ys.1 - ys.0) * (b - t);
    let mut out = String::new();
    frame(&mut out, title, x_label, y_label, xs, ys);
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut d = String::new();
        let mut pen_down = false;
        for &(x, y) in &s.points {
            if !(x.is_finite() && y.is_finite()) {
                pen_down = false;
                continue;
            }
            write!(d, "{}{:.2} {:.2}", if pen_down { "L" } else { "M" }, sx(x), sy(y)).unwrap();
            pen_down = true;
        }
        writeln!(out, r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.2"/>"#).unwrap();
        writeln!(out, r#"<text x="{}" y="{}" fill="{color}">{}</text>"#, r - 140.0, t + 14.0 * (i + 1) as f64, escape(s.name)).unwrap();
    }
    out.push_str("</svg>\n");
    out
}

pub fn bar_chart(title: &str, x_label: &str, y_label: &str, bars: &[(String, f64)]) -> String {
    let ys = extent(bars.iter().map(|b| b.1).chain([0.0]));
    let (l, r, t, b) = plot_area();
    let mut out = String::new();
    frame(&mut out, title, x_label, y_label, (0.0, bars.len() as f64), ys);
    let slot = (r - l) / bars.len().max(1) as f64;
    for (i, (label, v)) in bars.iter().enumerate() {
        let hgt = (v - ys.0) / (ys.1 - ys.0) * (b - t);
        let x = l + slot * i as f64;
        writeln!(out, r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#, x + slot * 0.1, b - hgt, slot * 0.8, hgt, COLORS[0]).unwrap();
        writeln!(out, r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#, x + slot / 2.0, b + 26.0, escape(label)).unwrap();
    }
    out.push_str("</svg>\n");
    out
}
