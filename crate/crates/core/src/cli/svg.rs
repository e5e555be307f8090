//! Self-contained SVG documents: line/marker charts with shaded regions, and heatmaps.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Markers,
    Dashed,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
}

#[derive(Debug, Clone, Default)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Closed polygons drawn in grey beneath the series.
    pub shaded: Vec<Vec<(f64, f64)>>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn fit(points: impl Iterator<Item = (f64, f64)>) -> Self {
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for (x, y) in points.filter(|p| p.0.is_finite() && p.1.is_finite()) {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            return Self { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 };
        }
        let pad = |a: f64, b: f64| if b > a { 0.05 * (b - a) } else { 0.5 * a.abs().max(1.0) };
        let (px, py) = (pad(x0, x1), pad(y0, y1));
        Self { x0: x0 - if x1 > x0 { 0.0 } else { px }, x1: x1 + if x1 > x0 { 0.0 } else { px }, y0: y0 - py, y1: y1 + py }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN_LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN_BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, WIDTH / 2.0, escape(title));
}

fn axes(out: &mut String, f: &Frame, x_label: &str, y_label: &str) {
    let (l, r, t, b) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT, MARGIN_TOP, HEIGHT - MARGIN_BOTTOM);
    let _ = writeln!(out, r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#, r - l, b - t);
    for k in 0..=4 {
        let x = f.x0 + (f.x1 - f.x0) * k as f64 / 4.0;
        let y = f.y0 + (f.y1 - f.y0) * k as f64 / 4.0;
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, f.px(x), b + 18.0, tick(x));
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, l - 6.0, f.py(y) + 4.0, tick(y));
    }
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, (l + r) / 2.0, HEIGHT - 16.0, escape(x_label));
    let _ = writeln!(
        out,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        (t + b) / 2.0,
        (t + b) / 2.0,
        escape(y_label)
    );
}

fn tick(v: f64) -> String {
    if v == 0.0 || (1e-3..1e4).contains(&v.abs()) {
        format!("{v:.4}")
    } else {
        format!("{v:.3e}")
    }
}

impl Chart {
    pub fn render(&self) -> String {
        let frame = Frame::fit(
            self.series.iter().flat_map(|s| s.points.iter().copied()).chain(self.shaded.iter().flatten().copied()),
        );
        let mut out = String::new();
        header(&mut out, &self.title);
        let _ = writeln!(
            out,
            r#"<clipPath id="plot"><rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{}" height="{}"/></clipPath>"#,
            WIDTH - MARGIN_LEFT - MARGIN_RIGHT,
            HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
        );
        let _ = writeln!(out, r#"<g clip-path="url(#plot)">"#);
        for poly in &self.shaded {
            let pts: Vec<String> = poly.iter().map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y))).collect();
            let _ = writeln!(out, r##"<polygon points="{}" fill="#d9d9d9" stroke="none"/>"##, pts.join(" "));
        }
        for (k, s) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            match s.style {
                Style::Markers => {
                    for &(x, y) in s.points.iter().filter(|p| p.0.is_finite() && p.1.is_finite()) {
                        let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, frame.px(x), frame.py(y));
                    }
                }
                Style::Line | Style::Dashed => {
                    let dash = if s.style == Style::Dashed { r#" stroke-dasharray="6 4""# } else { "" };
                    let pts: Vec<String> = s
                        .points
                        .iter()
                        .filter(|p| p.0.is_finite() && p.1.is_finite())
                        .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
                        .collect();
                    let _ = writeln!(
                        out,
                        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
                        pts.join(" ")
                    );
                }
            }
        }
        let _ = writeln!(out, "</g>");
        axes(&mut out, &frame, &self.x_label, &self.y_label);
        for (k, s) in self.series.iter().enumerate().take(12) {
            let y = MARGIN_TOP + 14.0 + 14.0 * k as f64;
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{y:.2}" text-anchor="end" fill="{}">{}</text>"#,
                WIDTH - MARGIN_RIGHT - 6.0,
                PALETTE[k % PALETTE.len()],
                escape(&s.name)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

/// Heatmap of `values[i][j]` over `xs[i]` (horizontal) and `ys[j]` (vertical), diverging colours.
pub fn heatmap(title: &str, x_label: &str, y_label: &str, xs: &[f64], ys: &[f64], values: &[Vec<f64>]) -> String {
    let frame = Frame {
        x0: xs.first().copied().unwrap_or(0.0),
        x1: xs.last().copied().unwrap_or(1.0) + step(xs),
        y0: ys.first().copied().unwrap_or(0.0),
        y1: ys.last().copied().unwrap_or(1.0) + step(ys),
    };
    let peak = values.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut out = String::new();
    header(&mut out, title);
    let (dx, dy) = (step(xs), step(ys));
    for (i, &x) in xs.iter().enumerate() {
        for (j, &y) in ys.iter().enumerate() {
            let v = values[i][j] / peak;
            let (r, g, b) = if v >= 0.0 {
                (255.0, 255.0 * (1.0 - v), 255.0 * (1.0 - v))
            } else {
                (255.0 * (1.0 + v), 255.0 * (1.0 + v), 255.0)
            };
            let (px0, px1) = (frame.px(x), frame.px(x + dx));
            let (py0, py1) = (frame.py(y + dy), frame.py(y));
            let _ = writeln!(
                out,
                r#"<rect x="{px0:.2}" y="{py0:.2}" width="{:.2}" height="{:.2}" fill="rgb({},{},{})"/>"#,
                px1 - px0,
                py1 - py0,
                r.round() as u8,
                g.round() as u8,
                b.round() as u8
            );
        }
    }
    axes(&mut out, &frame, x_label, y_label);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="end">max |value| = {}</text>"#,
        WIDTH - MARGIN_RIGHT,
        MARGIN_TOP - 6.0,
        tick(peak)
    );
    out.push_str("</svg>\n");
    out
}

fn step(grid: &[f64]) -> f64 {
    if grid.len() >= 2 {
        grid[1] - grid[0]
    } else {
        1.0
    }
}
