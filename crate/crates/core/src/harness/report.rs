//! CSV and SVG output for experiment rows.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::bounds::cr_limit_normalized;
use crate::error::{Error, Result};
use crate::harness::experiment::{summarize, CellSummary, ExperimentRow};

pub const CSV_HEADER: &str = "b,d,k,replicate,estimator,normalized_mse,cr_limit,lambda2,lambda_n,iterations,converged";

pub fn emit_csv(rows: &[ExperimentRow], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::InvalidParameter("no rows to write".into()));
    }
    let mut writer = csv::Writer::from_path(path)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<ExperimentRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    let rows = reader.deserialize().collect::<std::result::Result<Vec<ExperimentRow>, _>>()?;
    Ok(rows)
}

const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 320.0;
const MARGIN_L: f64 = 60.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

/// Mean normalized MSE against `log2 k`, one panel per `b`, one line per
/// `(d, estimator)`, with the Cramér-Rao limit dashed and the oracle floor
/// at 1 dotted.
pub fn emit_plot(rows: &[ExperimentRow], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::InvalidParameter("no rows to plot".into()));
    }
    fs::write(path, render_svg(rows))?;
    Ok(())
}

fn render_svg(rows: &[ExperimentRow]) -> String {
    let summaries = summarize(rows);
    let mut bs: Vec<f64> = summaries.iter().map(|s| s.b).collect();
    bs.sort_by(f64::total_cmp);
    bs.dedup();
    let mut ks: Vec<usize> = summaries.iter().map(|s| s.k).collect();
    ks.sort_unstable();
    ks.dedup();
    let (kmin, kmax) = (ks[0] as f64, *ks.last().unwrap() as f64);
    let cr = |k: usize| cr_limit_normalized(k).unwrap_or(f64::NAN);
    let ymax = summaries
        .iter()
        .map(|s| s.mean)
        .chain(ks.iter().map(|&k| cr(k)))
        .filter(|v| v.is_finite())
        .fold(1.0f64, f64::max)
        * 1.1;

    let width = PANEL_W * bs.len() as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{PANEL_H}" viewBox="0 0 {width} {PANEL_H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);

    let mut series: Vec<(usize, &str)> = summaries.iter().map(|s| (s.d, s.estimator.as_str())).collect();
    series.sort_unstable();
    series.dedup();

    for (panel, &b) in bs.iter().enumerate() {
        let x0 = panel as f64 * PANEL_W + MARGIN_L;
        let plot_w = PANEL_W - MARGIN_L - MARGIN_R;
        let plot_h = PANEL_H - MARGIN_T - MARGIN_B;
        let sx = |k: f64| {
            if kmax > kmin {
                x0 + (k.log2() - kmin.log2()) / (kmax.log2() - kmin.log2()) * plot_w
            } else {
                x0 + plot_w / 2.0
            }
        };
        let sy = |v: f64| MARGIN_T + plot_h * (1.0 - v / ymax);

        let _ = writeln!(
            svg,
            r#"<text x="{}" y="20" text-anchor="middle" font-size="13">b = {b}</text>"#,
            x0 + plot_w / 2.0
        );
        let _ = writeln!(
            svg,
            r#"<rect x="{x0}" y="{MARGIN_T}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
        );
        for &k in &ks {
            let x = sx(k as f64);
            let _ = writeln!(svg, r#"<text x="{x}" y="{}" text-anchor="middle">{k}</text>"#, MARGIN_T + plot_h + 15.0);
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">k (log2 scale)</text>"#,
            x0 + plot_w / 2.0,
            PANEL_H - 12.0
        );
        for t in 0..=4 {
            let v = ymax * t as f64 / 4.0;
            let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{v:.2}</text>"#, x0 - 5.0, sy(v) + 4.0);
        }

        let polyline = |points: &[(f64, f64)], style: &str| -> String {
            let pts: Vec<String> = points.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            format!(r#"<polyline fill="none" {style} points="{}"/>"#, pts.join(" "))
        };
        let cr_pts: Vec<(f64, f64)> = ks.iter().map(|&k| (sx(k as f64), sy(cr(k)))).collect();
        let _ = writeln!(svg, "{}", polyline(&cr_pts, r#"stroke="black" stroke-dasharray="6,4""#));
        let floor = [(sx(kmin), sy(1.0)), (sx(kmax), sy(1.0))];
        let _ = writeln!(svg, "{}", polyline(&floor, r#"stroke="gray" stroke-dasharray="2,3""#));

        for (idx, &(d, est)) in series.iter().enumerate() {
            let colour = PALETTE[idx % PALETTE.len()];
            let mut cells: Vec<&CellSummary> = summaries
                .iter()
                .filter(|s| s.b == b && s.d == d && s.estimator.as_str() == est && s.mean.is_finite())
                .collect();
            cells.sort_by_key(|s| s.k);
            if cells.is_empty() {
                continue;
            }
            let pts: Vec<(f64, f64)> = cells.iter().map(|s| (sx(s.k as f64), sy(s.mean))).collect();
            let _ = writeln!(svg, "{}", polyline(&pts, &format!(r#"stroke="{colour}" stroke-width="1.5""#)));
            for s in &cells {
                let (lo, hi) = s.band();
                let x = sx(s.k as f64);
                let _ = writeln!(svg, r#"<circle cx="{x:.2}" cy="{:.2}" r="2.5" fill="{colour}"/>"#, sy(s.mean));
                let _ = writeln!(
                    svg,
                    r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="{colour}"/>"#,
                    sy(lo.max(0.0)),
                    sy(hi.min(ymax))
                );
            }
            if panel == 0 {
                let ly = MARGIN_T + 14.0 * (idx as f64 + 1.0);
                let _ = writeln!(
                    svg,
                    r#"<text x="{}" y="{ly}" fill="{colour}">d = {d} ({est})</text>"#,
                    x0 + plot_w - 90.0
                );
            }
        }
    }
    svg.push_str("</svg>\n");
    svg
}
