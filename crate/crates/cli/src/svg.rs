//! Minimal standalone SVG charts: line plots, box plots and heatmaps.

use std::fmt::Write;

const W: f64 = 720.0;
const H: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

pub struct BoxStats {
    pub label: String,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl BoxStats {
    /// Quartiles by linear interpolation between order statistics.
    pub fn from_values(label: impl Into<String>, values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let pos = p * (v.len() - 1) as f64;
            let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
            v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
        };
        Some(Self { label: label.into(), min: v[0], q1: q(0.25), median: q(0.5), q3: q(0.75), max: v[v.len() - 1] })
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn header(title: &str) -> String {
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    );
    s.push_str(&format!("<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"));
    s.push_str(&format!("<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n", W / 2.0, escape(title)));
    s
}

fn fmt_tick(v: f64) -> String {
    photonopt_core::fmt::format_g(v, 3)
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn new(mut lo: f64, mut hi: f64, log: bool) -> Self {
        if log {
            lo = lo.log10();
            hi = hi.log10();
        }
        if !(hi > lo) {
            let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
            lo -= pad;
            hi += pad;
        }
        Self { lo, hi, log }
    }

    fn frac(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<f64> {
        (0..=4).map(|i| self.lo + (self.hi - self.lo) * i as f64 / 4.0).map(|t| if self.log { 10f64.powf(t) } else { t }).collect()
    }
}

fn px(a: &Axis, v: f64) -> f64 {
    LEFT + a.frac(v) * (W - LEFT - RIGHT)
}

fn py(a: &Axis, v: f64) -> f64 {
    H - BOTTOM - a.frac(v) * (H - TOP - BOTTOM)
}

fn frame(s: &mut String, xlabel: &str, ylabel: &str) {
    let (x0, x1, y0, y1) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
    let _ = writeln!(s, "<rect x=\"{x0}\" y=\"{y0}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>", x1 - x0, y1 - y0);
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>", (x0 + x1) / 2.0, H - 18.0, escape(xlabel));
    let _ = writeln!(
        s,
        "<text x=\"18\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">{}</text>",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(ylabel)
    );
}

fn y_ticks(s: &mut String, ya: &Axis) {
    for t in ya.ticks() {
        let y = py(ya, t);
        let _ = writeln!(s, "<line x1=\"{}\" y1=\"{y:.1}\" x2=\"{LEFT}\" y2=\"{y:.1}\" stroke=\"black\"/>", LEFT - 5.0);
        let _ = writeln!(s, "<text x=\"{}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>", LEFT - 8.0, y + 4.0, fmt_tick(t));
    }
}

/// Line chart. With `log_y`, non-positive values are clamped to the smallest positive one.
pub fn line_chart(title: &str, xlabel: &str, ylabel: &str, series: &[Series], log_y: bool) -> String {
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let (xmin, xmax) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let floor = series.iter().flat_map(|s| s.points.iter().map(|p| p.1)).filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min);
    let floor = if floor.is_finite() { floor } else { 1e-12 };
    let yv = |v: f64| if log_y { v.max(floor) } else { v };
    let (ymin, ymax) = series.iter().flat_map(|s| s.points.iter().map(|p| yv(p.1))).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
    let (xmin, xmax) = if xmin.is_finite() { (xmin, xmax) } else { (0.0, 1.0) };
    let (ymin, ymax) = if ymin.is_finite() { (ymin, ymax) } else { (0.0, 1.0) };
    let xa = Axis::new(xmin, xmax, false);
    let ya = Axis::new(ymin, ymax, log_y);

    let mut s = header(title);
    frame(&mut s, xlabel, ylabel);
    y_ticks(&mut s, &ya);
    for t in xa.ticks() {
        let x = px(&xa, t);
        let _ = writeln!(s, "<line x1=\"{x:.1}\" y1=\"{}\" x2=\"{x:.1}\" y2=\"{}\" stroke=\"black\"/>", H - BOTTOM, H - BOTTOM + 5.0);
        let _ = writeln!(s, "<text x=\"{x:.1}\" y=\"{}\" text-anchor=\"middle\">{}</text>", H - BOTTOM + 18.0, fmt_tick(t));
    }
    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = ser.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(&xa, x), py(&ya, yv(y)))).collect();
        let _ = writeln!(s, "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\" points=\"{}\"/>", pts.join(" "));
        let ly = TOP + 14.0 + 18.0 * i as f64;
        let lx = W - RIGHT + 12.0;
        let _ = writeln!(s, "<line x1=\"{lx}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"3\"/>", lx + 20.0);
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\">{}</text>", lx + 26.0, ly + 4.0, escape(&ser.label));
    }
    s.push_str("</svg>\n");
    s
}

pub fn box_plot(title: &str, ylabel: &str, boxes: &[BoxStats]) -> String {
    let ymin = boxes.iter().map(|b| b.min).fold(f64::INFINITY, f64::min);
    let ymax = boxes.iter().map(|b| b.max).fold(f64::NEG_INFINITY, f64::max);
    let ya = if ymin.is_finite() { Axis::new(ymin, ymax, false) } else { Axis::new(0.0, 1.0, false) };
    let mut s = header(title);
    frame(&mut s, "algorithm", ylabel);
    y_ticks(&mut s, &ya);
    let slot = (W - LEFT - RIGHT) / boxes.len().max(1) as f64;
    for (i, b) in boxes.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let cx = LEFT + slot * (i as f64 + 0.5);
        let half = (slot * 0.3).min(40.0);
        let (ymn, yq1, ymd, yq3, ymx) = (py(&ya, b.min), py(&ya, b.q1), py(&ya, b.median), py(&ya, b.q3), py(&ya, b.max));
        let _ = writeln!(s, "<line x1=\"{cx:.1}\" y1=\"{ymx:.1}\" x2=\"{cx:.1}\" y2=\"{yq3:.1}\" stroke=\"black\"/>");
        let _ = writeln!(s, "<line x1=\"{cx:.1}\" y1=\"{yq1:.1}\" x2=\"{cx:.1}\" y2=\"{ymn:.1}\" stroke=\"black\"/>");
        for y in [ymn, ymx] {
            let _ = writeln!(s, "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"black\"/>", cx - half / 2.0, cx + half / 2.0);
        }
        let _ = writeln!(
            s,
            "<rect x=\"{:.1}\" y=\"{yq3:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"{color}\" fill-opacity=\"0.35\" stroke=\"{color}\"/>",
            cx - half,
            2.0 * half,
            (yq1 - yq3).max(0.5)
        );
        let _ = writeln!(s, "<line x1=\"{:.1}\" y1=\"{ymd:.1}\" x2=\"{:.1}\" y2=\"{ymd:.1}\" stroke=\"black\" stroke-width=\"2\"/>", cx - half, cx + half);
        let _ = writeln!(s, "<text x=\"{cx:.1}\" y=\"{}\" text-anchor=\"middle\">{}</text>", H - BOTTOM + 18.0, escape(&b.label));
    }
    s.push_str("</svg>\n");
    s
}

/// Grid of colored cells, `values[row][col]`, row 0 at the bottom.
pub fn heatmap(title: &str, xlabel: &str, ylabel: &str, x_range: (f64, f64), y_range: (f64, f64), values: &[Vec<f64>]) -> String {
    let finite = values.iter().flatten().copied().filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let rows = values.len().max(1);
    let cols = values.first().map_or(1, Vec::len).max(1);
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let (cw, ch) = (pw / cols as f64, ph / rows as f64);
    let mut s = header(title);
    for (r, row) in values.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            let t = if v.is_finite() { (v - lo) / span } else { 1.0 };
            let _ = writeln!(
                s,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
                LEFT + c as f64 * cw,
                H - BOTTOM - (r + 1) as f64 * ch,
                cw + 0.3,
                ch + 0.3,
                ramp(t)
            );
        }
    }
    frame(&mut s, xlabel, ylabel);
    let xa = Axis::new(x_range.0, x_range.1, false);
    let ya = Axis::new(y_range.0, y_range.1, false);
    y_ticks(&mut s, &ya);
    for t in xa.ticks() {
        let x = px(&xa, t);
        let _ = writeln!(s, "<text x=\"{x:.1}\" y=\"{}\" text-anchor=\"middle\">{}</text>", H - BOTTOM + 18.0, fmt_tick(t));
    }
    for i in 0..=10 {
        let t = i as f64 / 10.0;
        let y = H - BOTTOM - t * ph;
        let _ = writeln!(s, "<rect x=\"{}\" y=\"{:.1}\" width=\"18\" height=\"{:.1}\" fill=\"{}\"/>", W - RIGHT + 20.0, y - ph / 10.0, ph / 10.0 + 0.3, ramp(t));
    }
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\">{}</text>", W - RIGHT + 44.0, H - BOTTOM, fmt_tick(lo));
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\">{}</text>", W - RIGHT + 44.0, TOP + 10.0, fmt_tick(hi));
    s.push_str("</svg>\n");
    s
}

/// Dark blue to yellow.
fn ramp(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let stops = [(0.0, [68.0, 1.0, 84.0]), (0.5, [33.0, 145.0, 140.0]), (1.0, [253.0, 231.0, 37.0])];
    let (a, b) = if t <= 0.5 { (stops[0], stops[1]) } else { (stops[1], stops[2]) };
    let u = (t - a.0) / (b.0 - a.0);
    let c: Vec<u8> = (0..3).map(|i| (a.1[i] + (b.1[i] - a.1[i]) * u).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}
