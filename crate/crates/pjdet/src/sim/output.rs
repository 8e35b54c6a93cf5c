//! Result persistence: CSV (the contract), an optional self-contained SVG
//! chart (convenience), and the reproduction manifest.
//!
//! CSV schema, one row per (detector, source, point):
//! `detector,source,snr_db,n_users,m_antennas,trials,errors,ser,ci95,opcount_mean,low_confidence`
//! with `source` either `sim` or `theory`. Floats are written in Rust's
//! shortest round-trip form, so `parse(emit(x)) == x` and replayed runs are
//! byte-identical.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::TheoryCurve;
use crate::sim::config::ExperimentConfig;
use crate::sim::sweep::{RunManifest, SweepResult};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub detector: String,
    pub source: String,
    pub snr_db: f64,
    pub n_users: usize,
    pub m_antennas: usize,
    pub trials: u64,
    pub errors: u64,
    pub ser: f64,
    pub ci95: f64,
    pub opcount_mean: f64,
    pub low_confidence: bool,
}

/// Simulation rows in sweep order.
pub fn result_rows(result: &SweepResult) -> Vec<CsvRow> {
    result
        .points
        .iter()
        .map(|p| CsvRow {
            detector: p.detector.clone(),
            source: "sim".into(),
            snr_db: p.snr_db,
            n_users: p.n_users,
            m_antennas: p.m_antennas,
            trials: p.trials,
            errors: p.symbol_errors,
            ser: p.ser(),
            ci95: p.ci95_half_width(),
            opcount_mean: p.mean_total_macs(),
            low_confidence: p.low_confidence,
        })
        .collect()
}

/// Theory rows for a fixed-load experiment.
pub fn theory_rows(curves: &[TheoryCurve], n_users: usize, m_antennas: usize) -> Vec<CsvRow> {
    let mut rows = Vec::new();
    for c in curves {
        for (&snr, &ser) in c.snr_db.iter().zip(&c.ser) {
            rows.push(CsvRow {
                detector: c.detector.clone(),
                source: "theory".into(),
                snr_db: snr,
                n_users,
                m_antennas,
                trials: 0,
                errors: 0,
                ser,
                ci95: 0.0,
                opcount_mean: 0.0,
                low_confidence: false,
            });
        }
    }
    rows
}

pub fn write_csv(path: &Path, rows: &[CsvRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        rows.push(rec.map_err(csv_err)?);
    }
    Ok(rows)
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::ConfigParse(format!("csv: {other:?}")),
    }
}

/// SHA-256 over the canonical TOML form of the config.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let mut hasher = Sha256::new();
    hasher.update(cfg.to_toml_string().as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn write_manifest(path: &Path, manifest: &RunManifest) -> Result<()> {
    let text = toml::to_string_pretty(manifest)
        .map_err(|e| Error::ConfigParse(format!("manifest serialize: {e}")))?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let text = std::fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::ConfigParse(format!("manifest parse: {e}")))
}

/// Files produced by [`emit_results`].
#[derive(Clone, Debug)]
pub struct EmittedFiles {
    pub csv: PathBuf,
    pub manifest: PathBuf,
    pub svg: Option<PathBuf>,
}

/// Write `results.csv`, `manifest.toml`, and optionally `chart.svg` into
/// `dir` (created if missing).
pub fn emit_results(
    dir: &Path,
    result: &SweepResult,
    curves: &[TheoryCurve],
    manifest: &RunManifest,
    svg: bool,
) -> Result<EmittedFiles> {
    std::fs::create_dir_all(dir)?;
    let mut rows = result_rows(result);
    rows.extend(theory_rows(
        curves,
        manifest.config.channel.n,
        manifest.config.channel.m,
    ));
    let csv_path = dir.join("results.csv");
    write_csv(&csv_path, &rows)?;
    let manifest_path = dir.join("manifest.toml");
    write_manifest(&manifest_path, manifest)?;
    let svg_path = if svg {
        let path = dir.join("chart.svg");
        std::fs::write(&path, render_svg(&rows))?;
        Some(path)
    } else {
        None
    };
    Ok(EmittedFiles {
        csv: csv_path,
        manifest: manifest_path,
        svg: svg_path,
    })
}

/// Minimal self-contained SER chart: log10 SER on the y axis, Es/No (or the
/// user count, for load sweeps) on the x axis, one polyline per
/// (detector, source) series. Zero-SER points are skipped (log scale).
pub fn render_svg(rows: &[CsvRow]) -> String {
    const W: f64 = 760.0;
    const H: f64 = 520.0;
    const ML: f64 = 70.0;
    const MR: f64 = 160.0;
    const MT: f64 = 30.0;
    const MB: f64 = 60.0;
    let palette = [
        "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
    ];

    let distinct_snr: std::collections::BTreeSet<u64> =
        rows.iter().map(|r| r.snr_db.to_bits()).collect();
    let x_is_load = distinct_snr.len() <= 1;
    let x_of = |r: &CsvRow| if x_is_load { r.n_users as f64 } else { r.snr_db };
    let x_label = if x_is_load { "user antennas N" } else { "Es/No (dB)" };

    let plotted: Vec<&CsvRow> = rows.iter().filter(|r| r.ser > 0.0).collect();
    if plotted.is_empty() {
        return format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\"><text x=\"20\" y=\"40\">no positive-SER points to plot</text></svg>"
        );
    }
    let xmin = plotted.iter().map(|r| x_of(r)).fold(f64::INFINITY, f64::min);
    let xmax = plotted
        .iter()
        .map(|r| x_of(r))
        .fold(f64::NEG_INFINITY, f64::max);
    let ymin_log = plotted
        .iter()
        .map(|r| r.ser.log10())
        .fold(f64::INFINITY, f64::min)
        .floor();
    let ymax_log = plotted
        .iter()
        .map(|r| r.ser.log10())
        .fold(f64::NEG_INFINITY, f64::max)
        .ceil()
        .max(ymin_log + 1.0);
    let xspan = (xmax - xmin).max(1e-9);
    let px = |x: f64| ML + (x - xmin) / xspan * (W - ML - MR);
    let py = |ser: f64| {
        let l = ser.log10();
        MT + (ymax_log - l) / (ymax_log - ymin_log) * (H - MT - MB)
    };

    let mut series: Vec<(String, Vec<&CsvRow>)> = Vec::new();
    for r in &plotted {
        let key = format!("{} ({})", r.detector, r.source);
        match series.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r),
            None => series.push((key, vec![r])),
        }
    }

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    svg.push_str(&format!(
        "<rect x=\"{ML}\" y=\"{MT}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333\"/>\n",
        W - ML - MR,
        H - MT - MB
    ));
    // Decade gridlines and y labels.
    let mut level = ymin_log;
    while level <= ymax_log + 1e-9 {
        let y = py(10f64.powf(level));
        svg.push_str(&format!(
            "<line x1=\"{ML}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#ddd\"/>\n",
            W - MR
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">1e{level:.0}</text>\n",
            ML - 6.0,
            y + 4.0
        ));
        level += 1.0;
    }
    // X ticks at series sample positions.
    let mut xticks: Vec<f64> = plotted.iter().map(|r| x_of(r)).collect();
    xticks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xticks.dedup();
    for x in &xticks {
        let xp = px(*x);
        svg.push_str(&format!(
            "<line x1=\"{xp:.1}\" y1=\"{:.1}\" x2=\"{xp:.1}\" y2=\"{:.1}\" stroke=\"#333\"/>\n",
            H - MB,
            H - MB + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{xp:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{x}</text>\n",
            H - MB + 18.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{x_label}</text>\n",
        ML + (W - ML - MR) / 2.0,
        H - 14.0
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{:.1}\" transform=\"rotate(-90 16 {:.1})\" text-anchor=\"middle\">SER</text>\n",
        MT + (H - MT - MB) / 2.0,
        MT + (H - MT - MB) / 2.0
    ));

    for (idx, (name, pts)) in series.iter().enumerate() {
        let color = palette[idx % palette.len()];
        let dashed = name.ends_with("(theory)");
        let dash = if dashed { " stroke-dasharray=\"6 4\"" } else { "" };
        let mut sorted = pts.clone();
        sorted.sort_by(|a, b| x_of(a).partial_cmp(&x_of(b)).unwrap());
        let path: Vec<String> = sorted
            .iter()
            .map(|r| format!("{:.2},{:.2}", px(x_of(r)), py(r.ser)))
            .collect();
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.6\"{dash}/>\n",
            path.join(" ")
        ));
        if !dashed {
            for r in &sorted {
                svg.push_str(&format!(
                    "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>\n",
                    px(x_of(r)),
                    py(r.ser)
                ));
            }
        }
        let ly = MT + 16.0 + idx as f64 * 18.0;
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" stroke-width=\"1.6\"{dash}/>\n",
            W - MR + 10.0,
            W - MR + 34.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\">{name}</text>\n",
            W - MR + 40.0,
            ly + 4.0
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
