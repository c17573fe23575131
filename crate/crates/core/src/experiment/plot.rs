//! Static log-scale line plots of training traces.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::{TraceRow, TrainingTrace};

pub const WIDTH: f64 = 720.0;
pub const HEIGHT: f64 = 440.0;
pub const LEFT: f64 = 80.0;
pub const RIGHT: f64 = 200.0;
pub const TOP: f64 = 24.0;
pub const BOTTOM: f64 = 56.0;

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    EnergyError,
    L2Error,
    RelChange,
}

impl PlotKind {
    pub const ALL: [PlotKind; 3] = [PlotKind::EnergyError, PlotKind::L2Error, PlotKind::RelChange];

    pub fn as_str(self) -> &'static str {
        match self {
            PlotKind::EnergyError => "energy_error",
            PlotKind::L2Error => "l2_error",
            PlotKind::RelChange => "rel_change",
        }
    }

    fn title(self) -> &'static str {
        match self {
            PlotKind::EnergyError => "|E - E_ref|",
            PlotKind::L2Error => "L2 error",
            PlotKind::RelChange => "relative energy change",
        }
    }

    fn value(self, row: &TraceRow) -> f64 {
        match self {
            PlotKind::EnergyError => row.energy_error,
            PlotKind::L2Error => row.l2_error,
            PlotKind::RelChange => row.rel_energy_change,
        }
    }
}

/// Axis ranges; the y range is in decades.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axes {
    pub x_max: f64,
    pub log_min: f64,
    pub log_max: f64,
}

impl Axes {
    pub fn px(&self, step: f64) -> f64 {
        LEFT + step / self.x_max * (WIDTH - LEFT - RIGHT)
    }

    pub fn py(&self, value: f64) -> f64 {
        let h = HEIGHT - TOP - BOTTOM;
        TOP + (self.log_max - value.log10()) / (self.log_max - self.log_min) * h
    }
}

fn plottable(kind: PlotKind, trace: &TrainingTrace) -> impl Iterator<Item = (f64, f64)> + '_ {
    trace
        .rows
        .iter()
        .map(move |r| (r.step as f64, kind.value(r)))
        .filter(|(_, v)| v.is_finite() && *v > 0.0)
}

fn axes(kind: PlotKind, series: &[(String, &TrainingTrace)]) -> Axes {
    let x_max = series
        .iter()
        .filter_map(|(_, t)| t.last().map(|r| r.step as f64))
        .fold(0.0, f64::max)
        .max(1.0);
    let (lo, hi) = series
        .iter()
        .flat_map(|(_, t)| plottable(kind, t))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, v)| {
            (lo.min(v), hi.max(v))
        });
    let (mut log_min, mut log_max) = if lo.is_finite() {
        (lo.log10().floor(), hi.log10().ceil())
    } else {
        (-16.0, 0.0)
    };
    if log_max <= log_min {
        log_min -= 1.0;
        log_max += 1.0;
    }
    Axes {
        x_max,
        log_min,
        log_max,
    }
}

/// Renders one log-y polyline per trace against the step index.
pub fn render_plot(series: &[(String, &TrainingTrace)], kind: PlotKind) -> Result<String> {
    if series.is_empty() || series.iter().any(|(_, t)| t.is_empty()) {
        return Err(Error::Config("cannot plot an empty trace".into()));
    }
    let ax = axes(kind, series);
    let (x0, x1) = (LEFT, WIDTH - RIGHT);
    let (y0, y1) = (TOP, HEIGHT - BOTTOM);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<g id="plot-area" data-x-max="{}" data-log-min="{}" data-log-max="{}" data-left="{x0}" data-right="{x1}" data-top="{y0}" data-bottom="{y1}">"#,
        ax.x_max, ax.log_min, ax.log_max
    );
    let _ = writeln!(
        s,
        r#"<rect x="{x0}" y="{y0}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y1 - y0
    );

    let decades = (ax.log_max - ax.log_min) as i64;
    let stride = (decades / 10 + 1) as usize;
    for e in (ax.log_min as i64..=ax.log_max as i64).step_by(stride) {
        let y = ax.py(10f64.powi(e as i32));
        let _ = writeln!(
            s,
            r##"<line x1="{x0}" y1="{y:.3}" x2="{x1}" y2="{y:.3}" stroke="#dddddd"/>"##
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.3}" text-anchor="end">1e{e}</text>"#,
            x0 - 6.0,
            y + 4.0
        );
    }
    for i in 0..=4 {
        let step = ax.x_max * i as f64 / 4.0;
        let x = ax.px(step);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.3}" y1="{y1}" x2="{x:.3}" y2="{}" stroke="black"/>"#,
            y1 + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.3}" y="{}" text-anchor="middle">{}</text>"#,
            y1 + 18.0,
            step.round()
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">step</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        TOP - 8.0,
        kind.title()
    );

    for (i, (label, trace)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let points: Vec<String> = plottable(kind, trace)
            .map(|(x, v)| format!("{:.3},{:.3}", ax.px(x), ax.py(v)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline data-label="{}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            escape(label),
            points.join(" ")
        );
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(s, r#"<g id="legend">"#);
    for (i, (label, _)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let y = TOP + 14.0 + 18.0 * i as f64;
        let lx = x1 + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"/>"#,
            lx + 24.0
        );
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 30.0, y + 4.0, escape(label));
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_plot(series: &[(String, &TrainingTrace)], kind: PlotKind, path: &Path) -> Result<()> {
    let svg = render_plot(series, kind)?;
    std::fs::write(path, svg)?;
    Ok(())
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(values: &[f64]) -> TrainingTrace {
        let mut t = TrainingTrace::default();
        for &v in values {
            t.push(-1, -1, 1.0 + v, v, v, 1.0, 0.0);
        }
        t
    }

    fn attr(svg: &str, name: &str) -> f64 {
        let key = format!("{name}=\"");
        let start = svg.find(&key).unwrap() + key.len();
        svg[start..].split('"').next().unwrap().parse().unwrap()
    }

    fn polylines(svg: &str) -> Vec<Vec<(f64, f64)>> {
        svg.lines()
            .filter(|l| l.starts_with("<polyline"))
            .map(|l| {
                let start = l.find("points=\"").unwrap() + 8;
                l[start..]
                    .split('"')
                    .next()
                    .unwrap()
                    .split_whitespace()
                    .map(|p| {
                        let (x, y) = p.split_once(',').unwrap();
                        (x.parse().unwrap(), y.parse().unwrap())
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn constant_trace_is_horizontal() {
        let t = trace(&[0.25; 5]);
        let svg = render_plot(&[("flat".into(), &t)], PlotKind::EnergyError).unwrap();
        let lines = polylines(&svg);
        assert_eq!(lines.len(), 1);
        assert_eq!(lines[0].len(), 5);
        assert!(lines[0].iter().all(|p| p.1 == lines[0][0].1));
    }

    #[test]
    fn one_polyline_and_legend_entry_per_trace() {
        let ts = [trace(&[1e-1, 1e-2]), trace(&[1e-2, 1e-4]), trace(&[1e-3, 1e-5])];
        let series: Vec<(String, &TrainingTrace)> =
            ts.iter().zip([7, 8, 9]).map(|(t, n)| (format!("n={n}"), t)).collect();
        let svg = render_plot(&series, PlotKind::L2Error).unwrap();
        assert_eq!(polylines(&svg).len(), 3);
        for n in [7, 8, 9] {
            assert!(svg.contains(&format!(">n={n}</text>")));
        }
    }

    #[test]
    fn log_mapping_matches_declared_range() {
        let t = trace(&[1e-1, 1e-4, 1e-6]);
        let svg = render_plot(&[("a".into(), &t)], PlotKind::EnergyError).unwrap();
        let (lo, hi) = (attr(&svg, "data-log-min"), attr(&svg, "data-log-max"));
        let (top, bottom) = (attr(&svg, "data-top"), attr(&svg, "data-bottom"));
        let (left, right) = (attr(&svg, "data-left"), attr(&svg, "data-right"));
        assert_eq!((lo, hi), (-6.0, -1.0));
        let pts = &polylines(&svg)[0];
        let expected_y = top + (hi - (-4.0)) / (hi - lo) * (bottom - top);
        assert!((pts[1].1 - expected_y).abs() < 1e-3);
        let expected_x = left + 1.0 / attr(&svg, "data-x-max") * (right - left);
        assert!((pts[1].0 - expected_x).abs() < 1e-3);
        assert!((pts[0].1 - top).abs() < 1e-3 && (pts[2].1 - bottom).abs() < 1e-3);
    }

    #[test]
    fn rendering_is_deterministic_and_rejects_empty() {
        let t = trace(&[0.5, 0.1, 0.0]);
        let a = render_plot(&[("x".into(), &t)], PlotKind::RelChange).unwrap();
        assert_eq!(a, render_plot(&[("x".into(), &t)], PlotKind::RelChange).unwrap());
        let empty = TrainingTrace::default();
        assert!(render_plot(&[("e".into(), &empty)], PlotKind::EnergyError).is_err());
        assert!(render_plot(&[], PlotKind::EnergyError).is_err());
    }
}
