//! Deterministic SVG line plots with linear or logarithmic axes.

use std::fmt::Write as _;

const WIDTH: f64 = 680.0;
const HEIGHT: f64 = 460.0;
const LEFT: f64 = 78.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 58.0;
const PALETTE: &[&str] = &["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Theory overlays are drawn dashed.
    pub dashed: bool,
}

impl Series {
    pub fn new(label: impl Into<String>, x: &[f64], y: &[f64]) -> Self {
        Series { label: label.into(), points: x.iter().copied().zip(y.iter().copied()).collect(), dashed: false }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_log: bool,
    pub y_log: bool,
    pub x_range: Option<(f64, f64)>,
    pub y_range: Option<(f64, f64)>,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool, fixed: Option<(f64, f64)>) -> Option<Axis> {
        let (lo, hi) = match fixed {
            Some(r) => r,
            None => {
                let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
                if !(lo <= hi) {
                    return None;
                }
                if log {
                    (10f64.powf(lo.log10().floor()), 10f64.powf(hi.log10().ceil()))
                } else {
                    let pad = if hi > lo { 0.0 } else { 0.5 * lo.abs().max(1.0) };
                    let step = nice_step(hi - lo + 2.0 * pad);
                    (((lo - pad) / step).floor() * step, ((hi + pad) / step).ceil() * step)
                }
            }
        };
        let (lo, hi) = if log && hi <= lo { (lo, lo * 10.0) } else { (lo, hi) };
        Some(Axis { lo, hi, log })
    }

    fn valid(&self, v: f64) -> bool {
        v.is_finite() && (!self.log || v > 0.0)
    }

    fn frac(&self, v: f64) -> f64 {
        if self.log {
            (v.log10() - self.lo.log10()) / (self.hi.log10() - self.lo.log10())
        } else {
            (v - self.lo) / (self.hi - self.lo)
        }
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let (a, b) = (self.lo.log10().round() as i32, self.hi.log10().round() as i32);
            let every = ((b - a) / 8).max(1);
            (a..=b).filter(|k| (k - a) % every == 0).map(|k| (10f64.powi(k), format!("1e{k}"))).collect()
        } else {
            let step = nice_step(self.hi - self.lo);
            let first = (self.lo / step).ceil() as i64;
            let last = (self.hi / step + 1e-9).floor() as i64;
            let decimals = (-step.log10().floor()).max(0.0) as usize;
            (first..=last)
                .map(|k| {
                    let v = k as f64 * step;
                    let label = if decimals > 4 || v.abs() >= 1e6 { format!("{v:.1e}") } else { format!("{v:.decimals$}") };
                    (v, label)
                })
                .collect()
        }
    }
}

/// A 1-2-5 step giving about five intervals over `span`.
fn nice_step(span: f64) -> f64 {
    let raw = (span / 5.0).max(f64::MIN_POSITIVE);
    let mag = 10f64.powf(raw.log10().floor());
    let r = raw / mag;
    mag * if r <= 1.0 {
        1.0
    } else if r <= 2.0 {
        2.0
    } else if r <= 5.0 {
        5.0
    } else {
        10.0
    }
}

impl Plot {
    pub fn render(&self) -> String {
        let xa = Axis::fit(self.series.iter().flat_map(|s| s.points.iter()).map(|p| p.0).filter(|&v| v.is_finite() && (!self.x_log || v > 0.0)), self.x_log, self.x_range)
            .unwrap_or(Axis { lo: 1.0, hi: 10.0, log: self.x_log });
        let ya = Axis::fit(self.series.iter().flat_map(|s| s.points.iter()).map(|p| p.1).filter(|&v| v.is_finite() && (!self.y_log || v > 0.0)), self.y_log, self.y_range)
            .unwrap_or(Axis { lo: 1.0, hi: 10.0, log: self.y_log });
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let px = |v: f64| LEFT + xa.frac(v) * pw;
        let py = |v: f64| TOP + (1.0 - ya.frac(v)) * ph;

        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#);
        let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(s, r#"<defs><clipPath id="plot"><rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}"/></clipPath></defs>"#);
        let _ = writeln!(s, r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="14">{}</text>"#, LEFT + pw / 2.0, escape(&self.title));
        for (v, label) in xa.ticks() {
            let x = px(v);
            let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#e0e0e0"/>"##, TOP + ph);
            let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#, TOP + ph + 16.0);
        }
        for (v, label) in ya.ticks() {
            let y = py(v);
            let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e0e0e0"/>"##, LEFT + pw);
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#, LEFT - 6.0, y + 4.0);
        }
        let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, HEIGHT - 16.0, escape(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        for (k, series) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let dash = if series.dashed { r#" stroke-dasharray="6 4""# } else { "" };
            // invalid points (NaN, non-positive on a log axis) break the line
            let mut runs: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
            for &(x, y) in &series.points {
                if xa.valid(x) && ya.valid(y) {
                    runs.last_mut().unwrap().push((px(x), py(y)));
                } else if !runs.last().unwrap().is_empty() {
                    runs.push(Vec::new());
                }
            }
            for run in runs.iter().filter(|r| !r.is_empty()) {
                let pts: Vec<String> = run.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                let _ = writeln!(
                    s,
                    r#"<polyline clip-path="url(#plot)" fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
                    pts.join(" ")
                );
            }
            let ly = TOP + 14.0 + 18.0 * k as f64;
            let lx = LEFT + pw + 12.0;
            let _ = writeln!(s, r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="1.5"{dash}/>"#, lx + 24.0);
            let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, lx + 30.0, ly + 4.0, escape(&series.label));
        }
        s.push_str("</svg>\n");
        s
    }
}
