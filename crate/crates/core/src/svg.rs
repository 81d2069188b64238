//! Small standalone SVG line plots and histograms.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#7f7f7f"];

pub struct Series {
    pub name: String,
    /// `(x, y, y_low, y_high)`.
    pub points: Vec<(f64, f64, f64, f64)>,
}

#[derive(Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Axis {
        let vals: Vec<f64> = values.filter(|v| v.is_finite() && (!log || *v > 0.0)).collect();
        let (mut lo, mut hi) = vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        if !lo.is_finite() {
            (lo, hi) = if log { (0.1, 1.0) } else { (0.0, 1.0) };
        }
        if log {
            lo = 10f64.powf(lo.log10().floor());
            hi = 10f64.powf(hi.log10().ceil());
            if hi <= lo {
                hi = lo * 10.0;
            }
        } else if hi <= lo {
            hi = lo + 1.0;
        }
        Axis { lo, hi, log }
    }

    fn frac(&self, v: f64) -> f64 {
        if self.log {
            (v.max(self.lo).log10() - self.lo.log10()) / (self.hi.log10() - self.lo.log10())
        } else {
            (v - self.lo) / (self.hi - self.lo)
        }
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let (a, b) = (self.lo.log10().round() as i32, self.hi.log10().round() as i32);
            (a..=b).map(|e| 10f64.powi(e)).collect()
        } else {
            (0..=5).map(|i| self.lo + (self.hi - self.lo) * i as f64 / 5.0).collect()
        }
    }
}

fn px(ax: &Axis, v: f64) -> f64 {
    LEFT + ax.frac(v) * (W - LEFT - RIGHT)
}

fn py(ay: &Axis, v: f64) -> f64 {
    H - BOTTOM - ay.frac(v) * (H - TOP - BOTTOM)
}

fn label(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.0e}")
    } else {
        format!("{}", (v * 1e4).round() / 1e4)
    }
}

fn frame(s: &mut String, title: &str, xl: &str, yl: &str, ax: &Axis, ay: &Axis) {
    let _ = write!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">
<rect width="100%" height="100%" fill="white"/>
<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>
<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>
"#,
        LEFT + (W - LEFT - RIGHT) / 2.0,
        escape(title),
        W - LEFT - RIGHT,
        H - TOP - BOTTOM
    );
    for t in ax.ticks() {
        let x = px(ax, t);
        let _ = writeln!(s, r#"<line x1="{x:.1}" y1="{}" x2="{x:.1}" y2="{}" stroke="black"/>"#, H - BOTTOM, H - BOTTOM + 5.0);
        let _ = writeln!(s, r#"<text x="{x:.1}" y="{}" text-anchor="middle">{}</text>"#, H - BOTTOM + 18.0, label(t));
    }
    for t in ay.ticks() {
        let y = py(ay, t);
        let _ = writeln!(s, r#"<line x1="{}" y1="{y:.1}" x2="{LEFT}" y2="{y:.1}" stroke="black"/>"#, LEFT - 5.0);
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#, LEFT - 8.0, y + 4.0, label(t));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, LEFT + (W - LEFT - RIGHT) / 2.0, H - 12.0, escape(xl));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
        TOP + (H - TOP - BOTTOM) / 2.0,
        escape(yl)
    );
}

fn legend(s: &mut String, names: &[&str]) {
    for (i, n) in names.iter().enumerate() {
        let y = TOP + 10.0 + 18.0 * i as f64;
        let x = W - RIGHT + 12.0;
        let c = COLORS[i % COLORS.len()];
        let _ = writeln!(s, r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{c}" stroke-width="2"/>"#, x + 18.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, x + 24.0, y + 4.0, escape(n));
    }
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Curves with error bars; `marker` draws a labelled vertical line.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series], log_x: bool, log_y: bool, marker: Option<(f64, &str)>) -> String {
    let all = || series.iter().flat_map(|s| s.points.iter());
    let ax = Axis::fit(all().map(|p| p.0).chain(marker.map(|m| m.0)), log_x);
    let ay = Axis::fit(all().flat_map(|p| [p.1, p.2, p.3]), log_y);
    let mut s = String::new();
    frame(&mut s, title, x_label, y_label, &ax, &ay);
    for (i, ser) in series.iter().enumerate() {
        let c = COLORS[i % COLORS.len()];
        let pts: Vec<_> = ser.points.iter().filter(|p| !log_y || p.1 > 0.0).collect();
        let path: Vec<String> = pts.iter().map(|p| format!("{:.1},{:.1}", px(&ax, p.0), py(&ay, p.1))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="1.5"/>"#, path.join(" "));
        for p in &ser.points {
            let x = px(&ax, p.0);
            let _ = writeln!(s, r#"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="{c}"/>"#, py(&ay, p.2), py(&ay, p.3));
            if !log_y || p.1 > 0.0 {
                let _ = writeln!(s, r#"<circle cx="{x:.1}" cy="{:.1}" r="2.5" fill="{c}"/>"#, py(&ay, p.1));
            }
        }
    }
    if let Some((x, text)) = marker {
        let x = px(&ax, x);
        let _ = writeln!(s, r#"<line x1="{x:.1}" y1="{TOP}" x2="{x:.1}" y2="{}" stroke="gray" stroke-dasharray="4 3"/>"#, H - BOTTOM);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{}" fill="gray">{}</text>"#, x + 4.0, TOP + 14.0, escape(text));
    }
    legend(&mut s, &series.iter().map(|x| x.name.as_str()).collect::<Vec<_>>());
    s.push_str("</svg>\n");
    s
}

/// Step histograms over shared bins with logarithmic counts.
pub fn histogram(title: &str, x_label: &str, series: &[(String, Vec<f64>)], bins: usize) -> String {
    let all: Vec<f64> = series.iter().flat_map(|s| s.1.iter().copied()).filter(|v| v.is_finite()).collect();
    let (lo, hi) = all.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let (lo, hi) = if !lo.is_finite() { (0.0, 1.0) } else if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
    let width = (hi - lo) / bins as f64;
    let counts: Vec<Vec<usize>> = series
        .iter()
        .map(|(_, vals)| {
            let mut c = vec![0usize; bins];
            for v in vals.iter().filter(|v| v.is_finite()) {
                c[(((v - lo) / width) as usize).min(bins - 1)] += 1;
            }
            c
        })
        .collect();
    let max = counts.iter().flatten().copied().max().unwrap_or(1).max(1) as f64;
    let ax = Axis { lo, hi, log: false };
    let ay = Axis::fit([0.5, max].into_iter(), true);
    let mut s = String::new();
    frame(&mut s, title, x_label, "count", &ax, &ay);
    for (i, c) in counts.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut path = Vec::new();
        for (b, &n) in c.iter().enumerate() {
            let y = py(&ay, (n as f64).max(ay.lo));
            path.push(format!("{:.1},{y:.1} {:.1},{y:.1}", px(&ax, lo + b as f64 * width), px(&ax, lo + (b + 1) as f64 * width)));
        }
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, path.join(" "));
    }
    if lo < 0.0 && hi > 0.0 {
        let x = px(&ax, 0.0);
        let _ = writeln!(s, r#"<line x1="{x:.1}" y1="{TOP}" x2="{x:.1}" y2="{}" stroke="gray" stroke-dasharray="4 3"/>"#, H - BOTTOM);
    }
    legend(&mut s, &series.iter().map(|x| x.0.as_str()).collect::<Vec<_>>());
    s.push_str("</svg>\n");
    s
}
