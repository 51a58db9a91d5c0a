use std::fmt::Write as _;
use std::path::Path;

use super::sweep::SweepRow;
use super::write_atomic;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// One gain series per policy.
    Reward,
    /// Optimal-policy threshold.
    Threshold,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

struct Series {
    name: String,
    points: Vec<(f64, f64)>,
}

fn series(rows: &[SweepRow], kind: PlotKind) -> Vec<Series> {
    match kind {
        PlotKind::Reward => {
            let n = rows[0].outcomes.len();
            (0..n)
                .map(|j| Series {
                    name: rows[0].outcomes[j].policy.to_string(),
                    points: rows
                        .iter()
                        .map(|r| (r.sweep_value, r.outcomes[j].gain))
                        .collect(),
                })
                .collect()
        }
        PlotKind::Threshold => vec![Series {
            name: "mdp_optimal threshold".to_string(),
            points: rows
                .iter()
                .filter_map(|r| r.threshold.map(|k| (r.sweep_value, k as f64)))
                .collect(),
        }],
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    });
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        let pad = if lo.abs() > 0.0 { lo.abs() * 0.1 } else { 1.0 };
        (lo - pad, hi + pad)
    } else {
        (lo, hi)
    }
}

/// Standalone SVG line chart of a sweep.
pub fn render_svg(rows: &[SweepRow], kind: PlotKind) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::Config("no rows to plot".into()));
    }
    let all = series(rows, kind);
    let (x0, x1) = bounds(rows.iter().map(|r| r.sweep_value));
    let (y0, y1) = match kind {
        PlotKind::Reward => (
            0.0,
            1.0_f64.max(bounds(all.iter().flat_map(|s| s.points.iter().map(|p| p.1))).1),
        ),
        PlotKind::Threshold => {
            let (_, hi) = bounds(all.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
            (0.0, hi.max(1.0))
        }
    };
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * plot_w;
    let sy = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * plot_h;
    let axis = rows[0].sweep_param;
    let y_label = match kind {
        PlotKind::Reward => "average reward per packet",
        PlotKind::Threshold => "threshold (queue length)",
    };

    let mut s = String::new();
    writeln!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">
<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    )
    .unwrap();
    // Axes.
    writeln!(
        s,
        r#"<path d="M{:.2} {:.2} V{:.2} H{:.2}" stroke="black" fill="none"/>"#,
        LEFT,
        TOP,
        TOP + plot_h,
        LEFT + plot_w
    )
    .unwrap();
    for i in 0..=4 {
        let fx = x0 + (x1 - x0) * i as f64 / 4.0;
        let fy = y0 + (y1 - y0) * i as f64 / 4.0;
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{:.4}</text>"#,
            sx(fx),
            TOP + plot_h + 18.0,
            fx
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{:.3}</text>"#,
            LEFT - 6.0,
            sy(fy) + 4.0,
            fy
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0,
        axis.label()
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        y_label
    )
    .unwrap();

    for (i, ser) in all.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        if ser.points.len() > 1 {
            let pts: Vec<String> = ser
                .points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                pts.join(" ")
            )
            .unwrap();
        }
        for &(x, y) in &ser.points {
            writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                sx(x),
                sy(y)
            )
            .unwrap();
        }
        let ly = TOP + 10.0 + 18.0 * i as f64;
        writeln!(
            s,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            WIDTH - RIGHT + 12.0,
            WIDTH - RIGHT + 32.0
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            WIDTH - RIGHT + 38.0,
            ly + 4.0,
            ser.name
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_plot(rows: &[SweepRow], path: &Path, kind: PlotKind) -> Result<()> {
    write_atomic(path, render_svg(rows, kind)?.as_bytes())
}
