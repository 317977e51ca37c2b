//! CSV, summary, and SVG outputs. The CSV is the authoritative record; the
//! SVG is a small self-contained chart of mean ratio versus alpha.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::TrialRecord;

pub const CSV_HEADER: [&str; 14] = [
    "experiment",
    "kind",
    "n",
    "d",
    "m",
    "alpha",
    "trial",
    "f_star",
    "f_hat",
    "ratio",
    "recovery_error_inf",
    "cert_bound",
    "sketch_ms",
    "solve_ms",
];

pub fn export_csv(records: &[TrialRecord], path: impl AsRef<Path>) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path.as_ref()).map_err(csv_err)?;
    wtr.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in records {
        wtr.write_record([
            r.experiment.as_str(),
            r.kind.as_str(),
            &r.n.to_string(),
            &r.d.to_string(),
            &r.m.to_string(),
            &r.alpha.to_string(),
            &r.trial.to_string(),
            &r.f_star.to_string(),
            &r.f_hat.to_string(),
            &r.ratio.to_string(),
            &r.recovery_error_inf.to_string(),
            &r.cert_bound.to_string(),
            &r.sketch_ms.to_string(),
            &r.solve_ms.to_string(),
        ])
        .map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<TrialRecord>> {
    let mut rdr = csv::Reader::from_path(path.as_ref()).map_err(csv_err)?;
    {
        let got = rdr.headers().map_err(csv_err)?;
        if got.len() != CSV_HEADER.len() {
            return Err(Error::Parse(format!(
                "unexpected CSV header with {} columns",
                got.len()
            )));
        }
    }
    let mut out = Vec::new();
    for row in rdr.deserialize::<TrialRecord>() {
        out.push(row.map_err(csv_err)?);
    }
    Ok(out)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SummaryRow {
    pub experiment: String,
    pub kind: String,
    pub alpha: f64,
    pub count: usize,
    pub mean_ratio: f64,
    pub stderr_ratio: f64,
}

/// Per-(experiment, kind, alpha) aggregation of the ratio column. Records
/// with a NaN ratio count toward `count` but not toward the mean.
pub fn export_summary(records: &[TrialRecord]) -> Vec<SummaryRow> {
    let mut cells: BTreeMap<(String, String, u64), (usize, Vec<f64>)> = BTreeMap::new();
    for r in records {
        let key = (r.experiment.clone(), r.kind.clone(), r.alpha.to_bits());
        let cell = cells.entry(key).or_default();
        cell.0 += 1;
        if r.ratio.is_finite() {
            cell.1.push(r.ratio);
        }
    }
    cells
        .into_iter()
        .map(|((experiment, kind, bits), (count, ratios))| {
            let (mean, stderr) = if ratios.is_empty() {
                (f64::NAN, f64::NAN)
            } else {
                let n = ratios.len() as f64;
                let mean = ratios.iter().sum::<f64>() / n;
                let stderr = if ratios.len() < 2 {
                    0.0
                } else {
                    let var = ratios.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                        / (n - 1.0);
                    (var / n).sqrt()
                };
                (mean, stderr)
            };
            SummaryRow {
                experiment,
                kind,
                alpha: f64::from_bits(bits),
                count,
                mean_ratio: mean,
                stderr_ratio: stderr,
            }
        })
        .collect()
}

const SVG_COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#ff7f0e",
];

/// Minimal line chart of mean ratio versus alpha, one polyline per
/// (experiment, kind) series.
pub fn export_svg(records: &[TrialRecord], path: impl AsRef<Path>) -> Result<()> {
    let summary = export_summary(records);
    let mut series: BTreeMap<(String, String), Vec<(f64, f64)>> = BTreeMap::new();
    for row in &summary {
        if row.mean_ratio.is_finite() {
            series
                .entry((row.experiment.clone(), row.kind.clone()))
                .or_default()
                .push((row.alpha, row.mean_ratio));
        }
    }

    let (w, h) = (640.0, 420.0);
    let (ml, mr, mt, mb) = (60.0, 20.0, 30.0, 50.0);
    let mut svg = String::new();
    svg.push_str(&format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    ));
    svg.push('\n');
    svg.push_str(&format!(
        r#"<rect width="{w}" height="{h}" fill="white"/>"#
    ));
    svg.push('\n');

    if series.is_empty() {
        svg.push_str(&format!(
            r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="14">no finite ratio data</text>"#,
            w / 2.0,
            h / 2.0
        ));
    } else {
        let mut xs: Vec<f64> = Vec::new();
        let mut ys: Vec<f64> = Vec::new();
        for pts in series.values() {
            for &(x, y) in pts {
                xs.push(x);
                ys.push(y);
            }
        }
        let (x0, x1) = bounds(&xs, 0.0);
        let (y0, y1) = bounds(&ys, 0.05);
        let px = |x: f64| ml + (x - x0) / (x1 - x0) * (w - ml - mr);
        let py = |y: f64| h - mb - (y - y0) / (y1 - y0) * (h - mt - mb);

        // Axes.
        svg.push_str(&format!(
            r#"<line x1="{ml}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
            h - mb,
            w - mr,
            h - mb
        ));
        svg.push('\n');
        svg.push_str(&format!(
            r#"<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{}" stroke="black"/>"#,
            h - mb
        ));
        svg.push('\n');
        for i in 0..=4 {
            let xv = x0 + (x1 - x0) * i as f64 / 4.0;
            let yv = y0 + (y1 - y0) * i as f64 / 4.0;
            svg.push_str(&format!(
                r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="11">{:.2}</text>"#,
                px(xv),
                h - mb + 18.0,
                xv
            ));
            svg.push('\n');
            svg.push_str(&format!(
                r#"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="11">{:.3}</text>"#,
                ml - 6.0,
                py(yv) + 4.0,
                yv
            ));
            svg.push('\n');
        }
        svg.push_str(&format!(
            r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="13">alpha</text>"#,
            (ml + w - mr) / 2.0,
            h - 12.0
        ));
        svg.push('\n');
        svg.push_str(&format!(
            r#"<text x="16" y="{}" text-anchor="middle" font-family="sans-serif" font-size="13" transform="rotate(-90 16 {})">mean ratio</text>"#,
            (mt + h - mb) / 2.0,
            (mt + h - mb) / 2.0
        ));
        svg.push('\n');

        for (idx, ((experiment, kind), pts)) in series.iter().enumerate() {
            let color = SVG_COLORS[idx % SVG_COLORS.len()];
            let mut sorted = pts.clone();
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            let path_pts: Vec<String> = sorted
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
                .collect();
            svg.push_str(&format!(
                r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
                path_pts.join(" ")
            ));
            svg.push('\n');
            for &(x, y) in &sorted {
                svg.push_str(&format!(
                    r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                    px(x),
                    py(y)
                ));
                svg.push('\n');
            }
            let ly = mt + 16.0 * idx as f64 + 8.0;
            svg.push_str(&format!(
                r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
                w - mr - 150.0,
                w - mr - 130.0
            ));
            svg.push('\n');
            svg.push_str(&format!(
                r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11">{experiment}/{kind}</text>"#,
                w - mr - 124.0,
                ly + 4.0
            ));
            svg.push('\n');
        }
    }
    svg.push_str("</svg>\n");

    let mut file = std::fs::File::create(path.as_ref())?;
    file.write_all(svg.as_bytes())?;
    Ok(())
}

fn bounds(vals: &[f64], pad_frac: f64) -> (f64, f64) {
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if (hi - lo).abs() < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = (hi - lo) * pad_frac;
        (lo - pad, hi + pad)
    }
}
