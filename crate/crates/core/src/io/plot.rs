//! Minimal SVG line plots of cell means with ±1 std error bars.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::runner::CellSummary;
use crate::scenario::SystemKind;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 120.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

struct Series {
    label: &'static str,
    color: &'static str,
    points: Vec<(f64, f64, f64)>,
}

fn color(system: SystemKind) -> &'static str {
    match system {
        SystemKind::Led => "#1f77b4",
        SystemKind::Vcsel => "#d62728",
    }
}

fn series(cells: &[CellSummary], value: impl Fn(&CellSummary) -> (f64, f64)) -> Vec<Series> {
    let mut systems: Vec<SystemKind> = cells.iter().map(|c| c.system).collect();
    systems.sort();
    systems.dedup();
    systems
        .into_iter()
        .map(|s| {
            let mut points: Vec<(f64, f64, f64)> = cells
                .iter()
                .filter(|c| c.system == s)
                .map(|c| {
                    let (m, sd) = value(c);
                    (c.n_users as f64, m, if sd.is_finite() { sd } else { 0.0 })
                })
                .filter(|p| p.1.is_finite())
                .collect();
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            Series {
                label: s.name(),
                color: color(s),
                points,
            }
        })
        .collect()
}

// 1-2-5 step giving roughly `target` intervals over [0, max].
fn tick_step(max: f64, target: f64) -> f64 {
    let raw = max / target;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let m = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn render(title: &str, y_label: &str, series: &[Series]) -> Result<String> {
    let all: Vec<&(f64, f64, f64)> = series.iter().flat_map(|s| &s.points).collect();
    if all.is_empty() {
        return Err(Error::InvalidInput("nothing to plot".into()));
    }
    let x_min = all.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let mut x_max = all.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    if x_max <= x_min {
        x_max = x_min + 1.0;
    }
    let y_top = all.iter().map(|p| p.1 + p.2).fold(0.0, f64::max);
    let step = tick_step(if y_top > 0.0 { y_top } else { 1.0 }, 5.0);
    let y_max = (y_top / step).ceil().max(1.0) * step;

    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x_min) / (x_max - x_min) * pw;
    let sy = |y: f64| TOP + ph - (y / y_max).clamp(0.0, 1.0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="18" text-anchor="middle">{title}</text>"#,
        LEFT + pw / 2.0
    );
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );

    let mut xs: Vec<f64> = all.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    for x in xs {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{x}</text>"#,
            sx(x),
            TOP + ph + 18.0
        );
    }
    let n_ticks = (y_max / step).round() as usize;
    for i in 0..=n_ticks {
        let y = i as f64 * step;
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{0:.1}" x2="{1:.1}" y2="{0:.1}" stroke="#dddddd"/>"##,
            sy(y),
            LEFT + pw
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            sy(y) + 4.0,
            format_tick(y, step)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">number of users</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{0:.1}" text-anchor="middle" transform="rotate(-90 16 {0:.1})">{y_label}</text>"#,
        TOP + ph / 2.0
    );

    for (k, ser) in series.iter().enumerate() {
        let pts: Vec<String> = ser
            .points
            .iter()
            .map(|p| format!("{:.1},{:.1}", sx(p.0), sy(p.1)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="2" points="{}"/>"#,
            ser.color,
            pts.join(" ")
        );
        for p in &ser.points {
            let (x, lo, hi) = (sx(p.0), sy(p.1 - p.2), sy(p.1 + p.2));
            let _ = writeln!(
                s,
                r#"<line x1="{x:.1}" y1="{lo:.1}" x2="{x:.1}" y2="{hi:.1}" stroke="{}"/>"#,
                ser.color
            );
            let _ = writeln!(
                s,
                r#"<circle cx="{x:.1}" cy="{:.1}" r="3" fill="{}"/>"#,
                sy(p.1),
                ser.color
            );
        }
        let ly = TOP + 10.0 + 18.0 * k as f64;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{}" stroke-width="2"/>"#,
            lx + 20.0,
            ser.color
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 26.0,
            ly + 4.0,
            ser.label
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn format_tick(y: f64, step: f64) -> String {
    let decimals = if step >= 1.0 {
        0
    } else {
        (-step.log10().floor()) as usize
    };
    format!("{y:.decimals$}")
}

/// Sum rate in Gb/s against number of users.
pub fn sum_rate_svg(cells: &[CellSummary]) -> Result<String> {
    let s = series(cells, |c| (c.sum_rate_mean * 1e-9, c.sum_rate_std * 1e-9));
    render("Sum rate", "sum rate (Gb/s)", &s)
}

/// Consumption factor in Gb/mJ against number of users.
pub fn cf_svg(cells: &[CellSummary]) -> Result<String> {
    let s = series(cells, |c| (c.cf_mean * 1e-12, c.cf_std * 1e-12));
    render("Consumption factor", "consumption factor (Gb/mJ)", &s)
}

/// Writes `sum_rate_vs_users.svg` and `cf_vs_users.svg` into `dir`.
pub fn render_plots(cells: &[CellSummary], dir: &Path) -> Result<Vec<PathBuf>> {
    let rate = sum_rate_svg(cells)?;
    let cf = cf_svg(cells)?;
    fs::create_dir_all(dir)?;
    let a = dir.join("sum_rate_vs_users.svg");
    let b = dir.join("cf_vs_users.svg");
    fs::write(&a, rate)?;
    fs::write(&b, cf)?;
    Ok(vec![a, b])
}
