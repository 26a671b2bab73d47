//! Minimal self-contained SVG charts: no fonts, scripts or external references.

use std::fmt::Write;

use crate::study::{delta_curve, ErrorRecord, Method, TimingRecord};

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 460.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 55.0;

/// Values below this are drawn on the floor of the logarithmic δ axis.
pub const DELTA_FLOOR: f64 = 1e-17;

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        let span = (self.x.1 - self.x.0).max(f64::MIN_POSITIVE);
        LEFT + (x - self.x.0) / span * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        let span = (self.y.1 - self.y.0).max(f64::MIN_POSITIVE);
        HEIGHT - BOTTOM - (y - self.y.0) / span * (HEIGHT - TOP - BOTTOM)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn open(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{}</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        escape(title)
    );
}

fn nice_ticks(lo: f64, hi: f64, integer: bool) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 7.0)
        .unwrap_or(10.0 * mag);
    let step = if integer { step.max(1.0).round() } else { step };
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + step * 1e-9 {
        out.push(t);
        t += step;
    }
    out
}

fn axes(
    out: &mut String,
    f: &Frame,
    x_label: &str,
    y_label: &str,
    x_int: bool,
    y_fmt: impl Fn(f64) -> String,
) {
    let (x0, x1) = (f.px(f.x.0), f.px(f.x.1));
    let (y0, y1) = (f.py(f.y.0), f.py(f.y.1));
    let _ = writeln!(
        out,
        r#"<rect x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y0 - y1
    );
    for t in nice_ticks(f.x.0, f.x.1, x_int) {
        let x = f.px(t);
        let label = if x_int {
            format!("{t:.0}")
        } else {
            format!("{t}")
        };
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{}" stroke="black"/><text x="{x:.2}" y="{}" text-anchor="middle">{label}</text>"#,
            y0 + 5.0,
            y0 + 18.0
        );
    }
    for t in nice_ticks(f.y.0, f.y.1, false) {
        let y = f.py(t);
        let _ = writeln!(
            out,
            r##"<line x1="{}" y1="{y:.2}" x2="{x1}" y2="{y:.2}" stroke="#e0e0e0"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"##,
            x0,
            x0 - 6.0,
            y + 4.0,
            y_fmt(t)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

/// Maps `t ∈ [0, 1]` onto a dark-blue to yellow ramp.
fn ramp(t: f64) -> String {
    let stops = [
        (0.267, 0.005, 0.329),
        (0.231, 0.322, 0.545),
        (0.129, 0.569, 0.549),
        (0.369, 0.788, 0.384),
        (0.992, 0.906, 0.145),
    ];
    let t = t.clamp(0.0, 1.0) * (stops.len() - 1) as f64;
    let i = (t.floor() as usize).min(stops.len() - 2);
    let f = t - i as f64;
    let mix = |a: f64, b: f64| ((a + (b - a) * f) * 255.0).round() as u8;
    let (a, b) = (stops[i], stops[i + 1]);
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(a.0, b.0),
        mix(a.1, b.1),
        mix(a.2, b.2)
    )
}

/// Scatter of log10(milliseconds) against problem index, coloured by max_dim;
/// circles for k-best runs and squares for the exact permanent.
pub fn timing_scatter(records: &[TimingRecord]) -> String {
    let mut ids: Vec<&str> = Vec::new();
    for r in records {
        if ids.last() != Some(&r.problem_id.as_str()) {
            ids.push(&r.problem_id);
        }
    }
    let mut index = 0usize;
    let mut last: Option<&str> = None;
    let points: Vec<(f64, f64, &TimingRecord)> = records
        .iter()
        .map(|r| {
            if last != Some(r.problem_id.as_str()) {
                if last.is_some() {
                    index += 1;
                }
                last = Some(&r.problem_id);
            }
            let ms = (r.wall_time_ns.max(1) as f64) / 1e6;
            (index as f64, ms.log10(), r)
        })
        .collect();
    let (ymin, ymax) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
            (a.min(p.1), b.max(p.1))
        });
    let (ymin, ymax) = if ymin.is_finite() {
        ((ymin - 0.2).floor(), (ymax + 0.2).ceil())
    } else {
        (-3.0, 1.0)
    };
    let dmax = records.iter().map(|r| r.max_dim).max().unwrap_or(1).max(1) as f64;
    let f = Frame {
        x: (0.0, (ids.len().max(2) - 1) as f64),
        y: (ymin, ymax),
    };
    let mut out = String::new();
    open(&mut out, "Marginal computation time per problem");
    axes(
        &mut out,
        &f,
        "problem index",
        "log10 milliseconds",
        true,
        |t| format!("{t:.1}"),
    );
    for (x, y, r) in &points {
        let color = ramp(r.max_dim as f64 / dmax);
        let (cx, cy) = (f.px(*x), f.py(*y));
        match r.method {
            Method::KBest(_) => {
                let _ = writeln!(
                    out,
                    r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="2.5" fill="{color}"/>"#
                );
            }
            Method::RyserExact => {
                let _ = writeln!(
                    out,
                    r#"<rect x="{:.2}" y="{:.2}" width="5" height="5" fill="{color}" stroke="black" stroke-width="0.5"/>"#,
                    cx - 2.5,
                    cy - 2.5
                );
            }
        }
    }
    let lx = WIDTH - RIGHT + 20.0;
    let _ = writeln!(
        out,
        r#"<text x="{lx}" y="{}">max dimension</text>"#,
        TOP + 10.0
    );
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let y = TOP + 22.0 + i as f64 * 18.0;
        let _ = writeln!(
            out,
            r#"<circle cx="{}" cy="{y}" r="4" fill="{}"/><text x="{}" y="{}">{:.0}</text>"#,
            lx + 5.0,
            ramp(t),
            lx + 15.0,
            y + 4.0,
            t * dmax
        );
    }
    let y = TOP + 130.0;
    let _ = writeln!(
        out,
        r#"<circle cx="{}" cy="{y}" r="3" fill="gray"/><text x="{}" y="{}">k-best</text>"#,
        lx + 5.0,
        lx + 15.0,
        y + 4.0
    );
    let _ = writeln!(
        out,
        r#"<rect x="{}" y="{}" width="6" height="6" fill="gray" stroke="black" stroke-width="0.5"/><text x="{}" y="{}">exact permanent</text>"#,
        lx + 2.0,
        y + 15.0,
        lx + 15.0,
        y + 22.0
    );
    out.push_str("</svg>\n");
    out
}

const SERIES: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

/// Sorted worst-case error against normalised rank, one line per K.
pub fn error_order_statistics(records: &[ErrorRecord], ks: &[usize]) -> String {
    let floor = DELTA_FLOOR.log10();
    let curves: Vec<(usize, Vec<f64>)> = ks
        .iter()
        .map(|&k| {
            let c = delta_curve(records, k)
                .into_iter()
                .map(|d| d.max(DELTA_FLOOR).log10())
                .collect();
            (k, c)
        })
        .collect();
    let f = Frame {
        x: (0.0, 1.0),
        y: (floor, 0.0),
    };
    let mut out = String::new();
    open(
        &mut out,
        "Order statistics of the worst-case marginal error",
    );
    axes(
        &mut out,
        &f,
        "normalised rank",
        "log10 worst-case error",
        false,
        |t| format!("{t:.0}"),
    );
    let lx = WIDTH - RIGHT + 20.0;
    for (i, (k, c)) in curves.iter().enumerate() {
        let color = SERIES[i % SERIES.len()];
        let n = c.len();
        if n > 0 {
            let pts: Vec<String> = c
                .iter()
                .enumerate()
                .map(|(j, y)| {
                    let x = if n > 1 {
                        j as f64 / (n - 1) as f64
                    } else {
                        0.0
                    };
                    format!("{:.2},{:.2}", f.px(x), f.py(*y))
                })
                .collect();
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                pts.join(" ")
            );
        }
        let y = TOP + 20.0 + i as f64 * 18.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">K = {k}</text>"#,
            lx + 16.0,
            lx + 22.0,
            y + 4.0
        );
    }
    out.push_str("</svg>\n");
    out
}
