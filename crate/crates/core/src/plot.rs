//! Plot-ready exports: long-format CSV and self-contained SVG line charts
//! of weight evolution, one curve per system.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::evaluation::{AggregateTrajectory, Trajectory};

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 540.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 180.0;
const MARGIN_TOP: f64 = 44.0;
const MARGIN_BOTTOM: f64 = 56.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

struct Series<'a> {
    label: &'a str,
    values: Vec<f64>,
    stddev: Option<Vec<f64>>,
}

/// Long-format CSV of a single run: `iteration,system_id,weight`.
pub fn write_trajectory_csv(trajectory: &Trajectory, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["iteration", "system_id", "weight"])?;
    for (t, row) in trajectory.rows().iter().enumerate() {
        for (id, weight) in trajectory.system_ids().iter().zip(row) {
            writer.write_record([(t + 1).to_string(), id.clone(), format!("{weight}")])?;
        }
    }
    writer.flush()?;
    Ok(())
}

/// Long-format CSV of a cross-run aggregate:
/// `iteration,system_id,weight,variance`.
pub fn write_aggregate_csv(aggregate: &AggregateTrajectory, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["iteration", "system_id", "weight", "variance"])?;
    for (t, (means, vars)) in aggregate
        .mean_rows()
        .iter()
        .zip(aggregate.variance_rows())
        .enumerate()
    {
        for ((id, mean), var) in aggregate.system_ids().iter().zip(means).zip(vars) {
            writer.write_record([
                (t + 1).to_string(),
                id.clone(),
                format!("{mean}"),
                format!("{var}"),
            ])?;
        }
    }
    writer.flush()?;
    Ok(())
}

/// Static SVG line chart of a single run's weight evolution.
pub fn write_trajectory_svg(trajectory: &Trajectory, title: &str, path: &Path) -> Result<()> {
    let series: Vec<Series> = trajectory
        .system_ids()
        .iter()
        .enumerate()
        .map(|(j, id)| Series {
            label: id,
            values: trajectory.rows().iter().map(|row| row[j]).collect(),
            stddev: None,
        })
        .collect();
    std::fs::write(path, render_chart(title, &series))?;
    Ok(())
}

/// Static SVG line chart of mean weights with variance whiskers.
pub fn write_aggregate_svg(
    aggregate: &AggregateTrajectory,
    title: &str,
    path: &Path,
) -> Result<()> {
    let series: Vec<Series> = aggregate
        .system_ids()
        .iter()
        .enumerate()
        .map(|(j, id)| Series {
            label: id,
            values: aggregate.mean_rows().iter().map(|row| row[j]).collect(),
            stddev: Some(
                aggregate
                    .variance_rows()
                    .iter()
                    .map(|row| row[j].sqrt())
                    .collect(),
            ),
        })
        .collect();
    std::fs::write(path, render_chart(title, &series))?;
    Ok(())
}

fn render_chart(title: &str, series: &[Series]) -> String {
    let iterations = series.first().map_or(0, |s| s.values.len());
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;

    let mut y_max: f64 = 0.0;
    for s in series {
        for (t, v) in s.values.iter().enumerate() {
            let top = v + s.stddev.as_ref().map_or(0.0, |sd| sd[t]);
            y_max = y_max.max(top);
        }
    }
    let y_max = (y_max * 1.05).max(1e-6);

    let x_of = |t: usize| -> f64 {
        if iterations <= 1 {
            MARGIN_LEFT + plot_w / 2.0
        } else {
            MARGIN_LEFT + plot_w * t as f64 / (iterations - 1) as f64
        }
    };
    let y_of = |v: f64| -> f64 { MARGIN_TOP + plot_h * (1.0 - v / y_max) };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        escape(title)
    );

    // Frame and ticks.
    let _ = writeln!(
        svg,
        r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="black" stroke-width="1"/>"#
    );
    for i in 0..=5 {
        let frac = i as f64 / 5.0;
        let y_val = y_max * frac;
        let y = y_of(y_val);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{MARGIN_LEFT}" y2="{y:.2}" stroke="black"/>"#,
            MARGIN_LEFT - 6.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{y_val:.2}</text>"#,
            MARGIN_LEFT - 9.0,
            y + 4.0
        );
        if iterations > 0 {
            let t = if iterations <= 1 {
                0
            } else {
                ((iterations - 1) as f64 * frac).round() as usize
            };
            let x = x_of(t);
            let base = MARGIN_TOP + plot_h;
            let _ = writeln!(
                svg,
                r#"<line x1="{x:.2}" y1="{base:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
                base + 6.0
            );
            let _ = writeln!(
                svg,
                r#"<text x="{x:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
                base + 20.0,
                t + 1
            );
        }
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">iteration</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 14.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.2})">weight</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    );

    // Whiskers first so the curves draw on top of them.
    let whisker_step = (iterations / 24).max(1);
    for (j, s) in series.iter().enumerate() {
        let color = PALETTE[j % PALETTE.len()];
        if let Some(stddev) = &s.stddev {
            for t in (0..iterations).step_by(whisker_step) {
                let sd = stddev[t];
                if sd <= 0.0 {
                    continue;
                }
                let x = x_of(t);
                let lo = y_of((s.values[t] - sd).max(0.0));
                let hi = y_of((s.values[t] + sd).min(y_max));
                let _ = writeln!(
                    svg,
                    r#"<line x1="{x:.2}" y1="{lo:.2}" x2="{x:.2}" y2="{hi:.2}" stroke="{color}" stroke-width="1" opacity="0.45"/>"#
                );
            }
        }
    }
    for (j, s) in series.iter().enumerate() {
        let color = PALETTE[j % PALETTE.len()];
        let points: Vec<String> = s
            .values
            .iter()
            .enumerate()
            .map(|(t, v)| format!("{:.2},{:.2}", x_of(t), y_of(*v)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            points.join(" ")
        );
    }

    // Legend.
    let legend_x = MARGIN_LEFT + plot_w + 14.0;
    for (j, s) in series.iter().enumerate() {
        let color = PALETTE[j % PALETTE.len()];
        let y = MARGIN_TOP + 10.0 + 18.0 * j as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{legend_x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"/>"#,
            legend_x + 22.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11">{}</text>"#,
            legend_x + 28.0,
            y + 4.0,
            escape(s.label)
        );
    }

    svg.push_str("</svg>\n");
    svg
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
