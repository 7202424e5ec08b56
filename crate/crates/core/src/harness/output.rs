//! CSV and SVG writers for scenario results.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::summary::RunSummary;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub step: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub arm: String,
    pub peak_mean: f64,
    pub peak_std: f64,
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))
}

fn write_rows<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let mut w = writer(path)?;
    if rows.is_empty() {
        w.write_record(header).map_err(|e| Error::csv(path, e))?;
    }
    for r in rows {
        w.serialize(r).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| Error::csv(path, e))).collect()
}

/// `step,mean,std` in infected counts.
pub fn write_curves_csv(s: &RunSummary, path: &Path) -> Result<()> {
    let rows: Vec<CurveRow> = (0..s.mean.len())
        .map(|t| CurveRow { step: t, mean: s.mean[t], std: s.std[t] })
        .collect();
    write_rows(path, &["step", "mean", "std"], &rows)
}

pub fn read_curves_csv(path: &Path) -> Result<Vec<CurveRow>> {
    read_rows(path)
}

/// `arm,peak_mean,peak_std` as population fractions.
pub fn write_summary_csv(summaries: &[RunSummary], path: &Path) -> Result<()> {
    let rows: Vec<SummaryRow> = summaries
        .iter()
        .map(|s| SummaryRow { arm: s.arm.clone(), peak_mean: s.peak_mean, peak_std: s.peak_std })
        .collect();
    write_rows(path, &["arm", "peak_mean", "peak_std"], &rows)
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRow>> {
    read_rows(path)
}

const PALETTE: [&str; 8] = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Line chart of every arm's mean curve with a shaded ±1 std band.
///
/// Each series is exactly one `<path>`; bands are `<polygon>`s.
pub fn render_svg(title: &str, summaries: &[RunSummary]) -> String {
    let (w, h) = (800.0, 480.0);
    let (left, right, top, bottom) = (60.0, 170.0, 40.0, 50.0);
    let pw = w - left - right;
    let ph = h - top - bottom;
    let steps = summaries.iter().map(|s| s.mean.len()).max().unwrap_or(1).max(2) - 1;
    let ymax = summaries
        .iter()
        .flat_map(|s| s.mean.iter().zip(&s.std).map(|(m, d)| m + d))
        .fold(1.0f64, f64::max);
    let x = |t: usize| left + pw * t as f64 / steps as f64;
    let y = |v: f64| top + ph * (1.0 - v.clamp(0.0, ymax) / ymax);

    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(out, r#"<title>{}</title>"#, escape(title));
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<g stroke="black" stroke-width="1"><line x1="{left}" y1="{0}" x2="{1}" y2="{0}"/><line x1="{left}" y1="{top}" x2="{left}" y2="{0}"/></g>"#,
        top + ph,
        left + pw
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        left + pw / 2.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">step (0..{steps})</text>"#,
        left + pw / 2.0,
        h - 15.0
    );
    let _ = writeln!(
        out,
        r#"<text x="15" y="{}" font-family="sans-serif" font-size="11" transform="rotate(-90 15 {0})" text-anchor="middle">infected (max {ymax:.1})</text>"#,
        top + ph / 2.0
    );
    for (k, s) in summaries.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let upper = (0..s.mean.len()).map(|t| format!("{:.2},{:.2}", x(t), y(s.mean[t] + s.std[t])));
        let lower = (0..s.mean.len()).rev().map(|t| format!("{:.2},{:.2}", x(t), y(s.mean[t] - s.std[t])));
        let points: Vec<String> = upper.chain(lower).collect();
        let _ = writeln!(
            out,
            r#"<polygon points="{}" fill="{color}" fill-opacity="0.15" stroke="none"/>"#,
            points.join(" ")
        );
    }
    for (k, s) in summaries.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut d = String::new();
        for (t, &m) in s.mean.iter().enumerate() {
            let _ = write!(d, "{}{:.2},{:.2}", if t == 0 { "M" } else { " L" }, x(t), y(m));
        }
        let _ = writeln!(
            out,
            r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="2"><title>{}</title></path>"#,
            escape(&s.arm)
        );
        let ly = top + 16.0 * k as f64 + 10.0;
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{ly}" font-family="sans-serif" font-size="11" fill="{color}">{}</text>"#,
            left + pw + 10.0,
            escape(&s.arm)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn file_safe(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

pub fn curves_path(out_dir: &Path, scenario: &str, arm: &str) -> PathBuf {
    out_dir.join(format!("curves_{}_{}.csv", file_safe(scenario), file_safe(arm)))
}

pub fn summary_path(out_dir: &Path, scenario: &str) -> PathBuf {
    out_dir.join(format!("summary_{}.csv", file_safe(scenario)))
}

/// Writes one scenario's curves, summary table and chart; returns the paths.
pub fn emit_outputs(scenario: &str, summaries: &[RunSummary], out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    for s in summaries {
        let p = curves_path(out_dir, scenario, &s.arm);
        write_curves_csv(s, &p)?;
        written.push(p);
    }
    let p = summary_path(out_dir, scenario);
    write_summary_csv(summaries, &p)?;
    written.push(p);
    let p = out_dir.join(format!("{}.svg", file_safe(scenario)));
    std::fs::write(&p, render_svg(scenario, summaries)).map_err(|e| Error::io(&p, e))?;
    written.push(p);
    Ok(written)
}
