//! Renders a summary CSV as an SVG line chart: mean cumulative regret per agent with
//! a ±1 standard-error band. SVG is the only supported output format.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::aggregate::{read_summary_csv, write_text, SummaryRow};
use crate::error::{HarnessError, Result};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

pub fn render_svg(rows: &[SummaryRow]) -> String {
    let mut by_agent: BTreeMap<&str, Vec<&SummaryRow>> = BTreeMap::new();
    for r in rows {
        by_agent.entry(&r.agent).or_default().push(r);
    }
    let t_max = rows.iter().map(|r| r.t).max().unwrap_or(1).max(1) as f64;
    let y_max = rows
        .iter()
        .map(|r| r.mean_cum_regret + r.stderr_cum_regret)
        .fold(0.0_f64, f64::max)
        .max(1e-12);
    let x = |t: f64| MARGIN + (WIDTH - 2.0 * MARGIN) * t / t_max;
    let y = |v: f64| HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * v / y_max;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (x0, y0, x1, y1) = (x(0.0), y(0.0), x(t_max), y(y_max));
    let _ = writeln!(
        svg,
        r#"<path d="M{x0:.1},{y1:.1} L{x0:.1},{y0:.1} L{x1:.1},{y0:.1}" stroke="black" fill="none"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">round</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 20.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{x0:.1}" y="{:.1}" text-anchor="middle">0</text>"#,
        y0 + 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{x1:.1}" y="{:.1}" text-anchor="middle">{t_max}</text>"#,
        y0 + 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{y1:.1}" text-anchor="end">{y_max:.1}</text>"#,
        x0 - 5.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="15" y="{:.1}" transform="rotate(-90 15 {:.1})" text-anchor="middle">cumulative regret</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );

    for (i, (agent, series)) in by_agent.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let upper = series
            .iter()
            .map(|r| (x(r.t as f64), y(r.mean_cum_regret + r.stderr_cum_regret)));
        let lower = series
            .iter()
            .rev()
            .map(|r| (x(r.t as f64), y(r.mean_cum_regret - r.stderr_cum_regret)));
        let band: Vec<String> = upper
            .chain(lower)
            .map(|(a, b)| format!("{a:.1},{b:.1}"))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
            band.join(" ")
        );
        let line: Vec<String> = series
            .iter()
            .map(|r| format!("{:.1},{:.1}", x(r.t as f64), y(r.mean_cum_regret)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            line.join(" ")
        );
        let ly = MARGIN + 18.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<rect x="{:.1}" y="{:.1}" width="12" height="3" fill="{color}"/>"#,
            x0 + 10.0,
            ly - 4.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{ly:.1}">{agent}</text>"#,
            x0 + 28.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Reads `summary` and writes the chart to `out`, which must end in `.svg`.
pub fn plot_summary(summary: &Path, out: &Path) -> Result<()> {
    let is_svg = out
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("svg"));
    if !is_svg {
        return Err(HarnessError::Other(format!(
            "{}: only SVG output is available; the CSV files are the primary output",
            out.display()
        )));
    }
    let rows = read_summary_csv(summary)?;
    write_text(out, &render_svg(&rows))
}
