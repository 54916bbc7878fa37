//! CSV, JSON and SVG emission.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::manifest::ExperimentManifest;
use crate::runner::{ResultRow, RowDetail};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepJson {
    pub manifest: ExperimentManifest,
    pub rows: Vec<ResultRow>,
    pub details: Vec<RowDetail>,
}

pub fn write_csv(path: &Path, rows: &[ResultRow]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if rows.is_empty() {
        w.write_record(crate::runner::CSV_COLUMNS)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> anyhow::Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 56.0;

/// Scatter of `ℓ` against `log10 Λ` for `ok` rows, with the reference
/// lines `(ℓ−1)·(−log10 16πe)` and `(ℓ−1)·log10 τ_max`.
pub fn scatter_svg(rows: &[ResultRow]) -> String {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.status == "ok")
        .filter_map(|r| Some((r.ell as f64, r.log10_lambda.parse::<f64>().ok()?)))
        .collect();
    let tau_max = rows
        .iter()
        .filter(|r| r.status == "ok")
        .filter_map(|r| r.tau.parse::<f64>().ok())
        .fold(1.0f64, f64::max);
    let low_slope = -(16.0 * std::f64::consts::PI * std::f64::consts::E).log10();
    let high_slope = tau_max.log10();

    let (x0, x1) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (x0, x1) = if x0.is_finite() { (x0.min(1.0), x1.max(x0 + 1.0)) } else { (1.0, 2.0) };
    let line = |slope: f64, x: f64| slope * (x - 1.0);
    let mut ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    ys.extend([line(low_slope, x0), line(low_slope, x1), line(high_slope, x0), line(high_slope, x1)]);
    let y0 = ys.iter().copied().fold(f64::INFINITY, f64::min) - 0.5;
    let y1 = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 0.5;

    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let sy = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{m} {b} H{r} M{m} {b} V{m}" stroke="black" fill="none"/>"#,
        m = MARGIN,
        b = H - MARGIN,
        r = W - MARGIN
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="13" text-anchor="middle">ell</text>"#,
        W / 2.0,
        H - 16.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" font-size="13" transform="rotate(-90 16 {})" text-anchor="middle">log10 Lambda</text>"#,
        H / 2.0,
        H / 2.0
    );
    for x in [x0, x1] {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{x}</text>"#,
            sx(x),
            H - MARGIN + 16.0
        );
    }
    for y in [y0, y1] {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{y:.1}</text>"#,
            MARGIN - 6.0,
            sy(y) + 4.0
        );
    }
    for (slope, color) in [(low_slope, "#c0392b"), (high_slope, "#2471a3")] {
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-dasharray="6 4"/>"#,
            sx(x0),
            sy(line(slope, x0)),
            sx(x1),
            sy(line(slope, x1))
        );
    }
    for (x, y) in &pts {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="black"/>"#, sx(*x), sy(*y));
    }
    s.push_str("</svg>\n");
    s
}
