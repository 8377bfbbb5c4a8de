//! Minimal static SVG plots: line charts and heat maps.
//!
//! Output depends only on the data, so identical inputs give identical files.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 110.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

const PALETTE: [&str; 4] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728"];

pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

pub struct Marker {
    pub x: f64,
    pub y: f64,
    /// Filled circle when true, open square otherwise.
    pub filled: bool,
}

pub struct Heatmap<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub x: &'a [f64],
    pub y: &'a [f64],
    /// `values[ix][iy]`; `None` cells are drawn grey.
    pub values: &'a [Vec<Option<f64>>],
    pub markers: &'a [Marker],
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        let pad = |a: f64, b: f64| if a == b { (a - 0.5, b + 0.5) } else { (a, b) };
        let (x0, x1) = pad(x0, x1);
        let (y0, y1) = pad(y0, y1);
        Self { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn axes(out: &mut String, f: &Frame, x_label: &str, y_label: &str) {
    let (l, r, t, b) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let _ = writeln!(
        out,
        r#"<rect x="{l:.1}" y="{t:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
        r - l,
        b - t
    );
    for i in 0..=4 {
        let s = i as f64 / 4.0;
        let xv = f.x0 + s * (f.x1 - f.x0);
        let yv = f.y0 + s * (f.y1 - f.y0);
        let (xp, yp) = (f.px(xv), f.py(yv));
        let _ = writeln!(out, r#"<line x1="{xp:.1}" y1="{b:.1}" x2="{xp:.1}" y2="{:.1}" stroke="black"/>"#, b + 5.0);
        let _ = writeln!(
            out,
            r#"<text x="{xp:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            b + 18.0,
            tick_label(xv)
        );
        let _ = writeln!(out, r#"<line x1="{:.1}" y1="{yp:.1}" x2="{l:.1}" y2="{yp:.1}" stroke="black"/>"#, l - 5.0);
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            l - 8.0,
            yp + 4.0,
            tick_label(yv)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        (l + r) / 2.0,
        HEIGHT - 15.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="20" y="{:.1}" text-anchor="middle" transform="rotate(-90 20 {:.1})">{}</text>"#,
        (t + b) / 2.0,
        (t + b) / 2.0,
        escape(y_label)
    );
}

pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let finite = series
        .iter()
        .flat_map(|s| s.points.iter())
        .filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in finite {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let frame = Frame::new(x0, x1, y0.min(0.0), y1);
    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, &frame, x_label, y_label);
    for (n, s) in series.iter().enumerate() {
        let color = PALETTE[n % PALETTE.len()];
        let path: Vec<String> = s
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
            .collect();
        let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.8"{dash} points="{}"/>"#,
            path.join(" ")
        );
        let ly = TOP + 16.0 + 18.0 * n as f64;
        let lx = WIDTH - RIGHT + 10.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"{dash}/>"#,
            lx + 20.0
        );
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, lx + 25.0, ly + 4.0, escape(s.label));
    }
    out.push_str("</svg>\n");
    out
}

/// Perceptually ordered blue-to-yellow ramp.
fn color(t: f64) -> String {
    const STOPS: [(f64, f64, f64); 5] = [
        (68.0, 1.0, 84.0),
        (59.0, 82.0, 139.0),
        (33.0, 145.0, 140.0),
        (94.0, 201.0, 98.0),
        (253.0, 231.0, 37.0),
    ];
    let t = t.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let i = (t.floor() as usize).min(STOPS.len() - 2);
    let f = t - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let mix = |p: f64, q: f64| (p + (q - p) * f).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

fn edges(c: &[f64]) -> Vec<f64> {
    match c.len() {
        0 => vec![],
        1 => vec![c[0] - 0.5, c[0] + 0.5],
        n => {
            let mut e = Vec::with_capacity(n + 1);
            e.push(c[0] - (c[1] - c[0]) / 2.0);
            for w in c.windows(2) {
                e.push((w[0] + w[1]) / 2.0);
            }
            e.push(c[n - 1] + (c[n - 1] - c[n - 2]) / 2.0);
            e
        }
    }
}

pub fn heatmap(map: &Heatmap) -> String {
    let xe = edges(map.x);
    let ye = edges(map.y);
    let frame = Frame::new(
        *xe.first().unwrap_or(&0.0),
        *xe.last().unwrap_or(&1.0),
        *ye.first().unwrap_or(&0.0),
        *ye.last().unwrap_or(&1.0),
    );
    let finite: Vec<f64> = map.values.iter().flatten().flatten().copied().filter(|v| v.is_finite()).collect();
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if lo.is_finite() { (lo, if hi > lo { hi } else { lo + 1.0 }) } else { (0.0, 1.0) };
    let mut out = String::new();
    header(&mut out, map.title);
    for (ix, column) in map.values.iter().enumerate() {
        for (iy, v) in column.iter().enumerate() {
            let (x0, x1) = (frame.px(xe[ix]), frame.px(xe[ix + 1]));
            let (y0, y1) = (frame.py(ye[iy + 1]), frame.py(ye[iy]));
            let fill = match v {
                Some(v) if v.is_finite() => color((v - lo) / (hi - lo)),
                _ => "#bbbbbb".to_string(),
            };
            let _ = writeln!(
                out,
                r#"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="{fill}" stroke="{fill}" stroke-width="0.3"/>"#,
                x1 - x0,
                y1 - y0
            );
        }
    }
    for m in map.markers {
        let (x, y) = (frame.px(m.x), frame.py(m.y));
        if m.filled {
            let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="5" fill="white" stroke="black" stroke-width="1.5"/>"#);
        } else {
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="10" height="10" fill="none" stroke="white" stroke-width="2"/>"#,
                x - 5.0,
                y - 5.0
            );
        }
    }
    axes(&mut out, &frame, map.x_label, map.y_label);
    let bar_x = WIDTH - RIGHT + 20.0;
    let bar_h = HEIGHT - TOP - BOTTOM;
    let bands = 64;
    for b in 0..bands {
        let t = b as f64 / (bands - 1) as f64;
        let y = TOP + bar_h * (1.0 - (b + 1) as f64 / bands as f64);
        let _ = writeln!(
            out,
            r#"<rect x="{bar_x:.1}" y="{y:.2}" width="18" height="{:.2}" fill="{}"/>"#,
            bar_h / bands as f64 + 0.5,
            color(t)
        );
    }
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, bar_x + 22.0, TOP + 8.0, tick_label(hi));
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, bar_x + 22.0, TOP + bar_h, tick_label(lo));
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heatmap_is_deterministic_and_closed() {
        let values = vec![vec![Some(1.0), None], vec![Some(2.0), Some(3.0)]];
        let map = Heatmap {
            title: "t",
            x_label: "x",
            y_label: "y",
            x: &[1.0, 2.0],
            y: &[0.0, 1.0],
            values: &values,
            markers: &[Marker { x: 1.0, y: 0.0, filled: true }],
        };
        let a = heatmap(&map);
        assert_eq!(a, heatmap(&map));
        assert!(a.trim_end().ends_with("</svg>"));
        assert!(a.contains("#bbbbbb"));
    }

    #[test]
    fn color_ramp_endpoints() {
        assert_eq!(color(0.0), "#440154");
        assert_eq!(color(1.0), "#fde725");
    }
}
