//! Summaries and deterministic CSV artifacts.
//!
//! Row files start with `#`-prefixed metadata lines (mode and the full
//! configuration as compact JSON) followed by a header and one line per
//! [`Row`], sorted by method, seed, noise, `b_train`, `b_test`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{round12, ExperimentConfig, Method};
use super::run::{Mode, Row, SweepResult};
use crate::error::{Error, Result};
use crate::metrics::{mean, population_variance};

pub const ROW_COLUMNS: [&str; 14] = [
    "method",
    "seed",
    "noise",
    "b_train",
    "b_test",
    "delta_yz",
    "f1_z",
    "f1_y",
    "r_true",
    "r_observed",
    "r_hat",
    "r_used",
    "flips",
    "degenerate",
];

/// Robustness of one method at one preliminary-noise level: the spread of
/// seed-averaged F1_y across the shift grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Robustness {
    pub method: Method,
    pub noise: f64,
    pub mean_f1_z: Option<f64>,
    pub mean_f1_y: f64,
    pub std_f1_y: f64,
    pub cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftSummary {
    pub method: Method,
    pub noise: Option<f64>,
    pub delta_yz: f64,
    pub mean_f1_y: f64,
    pub std_f1_y: f64,
    pub n: usize,
}

fn key(x: f64) -> i64 {
    (x * 1e9).round() as i64
}

fn std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        0.0
    } else {
        population_variance(xs).sqrt()
    }
}

/// Per (method, noise): mean over seeds within each shift cell, then mean
/// and population standard deviation across cells.
pub fn robustness(result: &SweepResult) -> Vec<Robustness> {
    let mut groups: BTreeMap<(Method, i64), (f64, BTreeMap<(i64, i64), Vec<f64>>, Vec<f64>)> =
        BTreeMap::new();
    for r in &result.rows {
        let g = groups
            .entry((r.method, key(r.noise)))
            .or_insert_with(|| (r.noise, BTreeMap::new(), Vec::new()));
        g.1.entry((key(r.b_train), key(r.b_test)))
            .or_default()
            .push(r.f1_y);
        if let Some(f) = r.f1_z {
            g.2.push(f);
        }
    }
    groups
        .into_iter()
        .map(|((method, _), (noise, cells, f1z))| {
            let cell_means: Vec<f64> = cells.values().map(|v| mean(v)).collect();
            Robustness {
                method,
                noise,
                mean_f1_z: (!f1z.is_empty()).then(|| mean(&f1z)),
                mean_f1_y: mean(&cell_means),
                std_f1_y: std(&cell_means),
                cells: cell_means.len(),
            }
        })
        .collect()
}

/// F1_y per (method, noise, δ) when `per_noise`, else per (method, δ)
/// pooled over noise levels.
pub fn shift_summary(result: &SweepResult, per_noise: bool) -> Vec<ShiftSummary> {
    let mut groups: BTreeMap<(Method, i64, i64), (Option<f64>, f64, Vec<f64>)> = BTreeMap::new();
    for r in &result.rows {
        let nk = if per_noise { key(r.noise) } else { 0 };
        groups
            .entry((r.method, nk, key(r.delta_yz)))
            .or_insert_with(|| (per_noise.then_some(r.noise), r.delta_yz, Vec::new()))
            .2
            .push(r.f1_y);
    }
    groups
        .into_iter()
        .map(|((method, _, _), (noise, delta_yz, v))| ShiftSummary {
            method,
            noise,
            delta_yz,
            mean_f1_y: mean(&v),
            std_f1_y: std(&v),
            n: v.len(),
        })
        .collect()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn metadata(mode: Mode, config: Option<&ExperimentConfig>) -> String {
    let mut s = format!("# confound sweep mode={}\n", mode.name());
    if let Some(cfg) = config {
        let _ = writeln!(
            s,
            "# config={}",
            serde_json::to_string(cfg).expect("config serializes")
        );
    }
    s
}

fn write_records<T: Serialize>(
    path: &Path,
    preamble: &str,
    header: &[&str],
    records: &[T],
) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.into(),
        source,
    };
    let mut out = create(path)?;
    out.write_all(preamble.as_bytes())
        .map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for r in records {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes every row of `result`, sorted, preceded by metadata lines.
pub fn emit_csv(
    result: &SweepResult,
    config: Option<&ExperimentConfig>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let mut sorted = result.clone();
    sorted.sort();
    write_records(
        path.as_ref(),
        &metadata(result.mode, config),
        &ROW_COLUMNS,
        &sorted.rows,
    )
}

/// Reads a row file written by [`emit_csv`].
pub fn read_rows(path: impl AsRef<Path>) -> Result<SweepResult> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mode = text
        .lines()
        .find_map(|l| l.strip_prefix("# confound sweep mode="))
        .map(|m| match m.trim() {
            "noise" => Mode::Noise,
            "umbrella" => Mode::Umbrella,
            _ => Mode::Heatmap,
        })
        .unwrap_or(Mode::Heatmap);
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let rows = r
        .deserialize()
        .collect::<std::result::Result<Vec<Row>, _>>()
        .map_err(|source| Error::Csv {
            path: path.into(),
            source,
        })?;
    Ok(SweepResult {
        mode,
        rows,
        skipped: Vec::new(),
    })
}

/// Writes plot-ready summaries into `dir`; returns the files written.
///
/// - `<mode>_robustness.csv`: `method,noise,mean_f1_z,mean_f1_y,std_f1_y,cells`
/// - `<mode>_shift.csv`: `method,noise,delta_yz,mean_f1_y,std_f1_y,n`
/// - `<mode>_shift_marginal.csv`: the same pooled over noise levels
/// - `<mode>_correlation.csv`: `method,seed,noise,b_train,b_test,r_true,r_observed,r_hat,r_used,flips`
pub fn emit_plotdata(
    result: &SweepResult,
    config: Option<&ExperimentConfig>,
    dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let meta = metadata(result.mode, config);
    let mode = result.mode.name();
    let mut written = Vec::new();

    let path = dir.join(format!("{mode}_robustness.csv"));
    write_records(
        &path,
        &meta,
        &["method", "noise", "mean_f1_z", "mean_f1_y", "std_f1_y", "cells"],
        &robustness(result),
    )?;
    written.push(path);

    for (name, per_noise) in [("shift", true), ("shift_marginal", false)] {
        let path = dir.join(format!("{mode}_{name}.csv"));
        write_records(
            &path,
            &meta,
            &["method", "noise", "delta_yz", "mean_f1_y", "std_f1_y", "n"],
            &shift_summary(result, per_noise),
        )?;
        written.push(path);
    }

    #[derive(Serialize)]
    struct CorrRow {
        method: Method,
        seed: u64,
        noise: f64,
        b_train: f64,
        b_test: f64,
        r_true: f64,
        r_observed: Option<f64>,
        r_hat: Option<f64>,
        r_used: Option<f64>,
        flips: Option<usize>,
    }
    let mut sorted = result.clone();
    sorted.sort();
    let corr: Vec<CorrRow> = sorted
        .rows
        .iter()
        .filter(|r| r.r_observed.is_some())
        .map(|r| CorrRow {
            method: r.method,
            seed: r.seed,
            noise: r.noise,
            b_train: r.b_train,
            b_test: r.b_test,
            r_true: r.r_true,
            r_observed: r.r_observed,
            r_hat: r.r_hat,
            r_used: r.r_used,
            flips: r.flips,
        })
        .collect();
    let path = dir.join(format!("{mode}_correlation.csv"));
    write_records(
        &path,
        &meta,
        &[
            "method",
            "seed",
            "noise",
            "b_train",
            "b_test",
            "r_true",
            "r_observed",
            "r_hat",
            "r_used",
            "flips",
        ],
        &corr,
    )?;
    written.push(path);
    Ok(written)
}

/// Plain-text robustness table: one line per noise level, one
/// standard-deviation column per method.
pub fn format_robustness_table(result: &SweepResult) -> String {
    let summary = robustness(result);
    let mut methods: Vec<Method> = summary.iter().map(|s| s.method).collect();
    methods.sort();
    methods.dedup();
    let mut by_noise: BTreeMap<i64, (f64, Vec<&Robustness>)> = BTreeMap::new();
    for s in &summary {
        by_noise
            .entry(key(s.noise))
            .or_insert_with(|| (s.noise, Vec::new()))
            .1
            .push(s);
    }
    let mut out = format!("{:>7} {:>7}", "noise", "f1_z");
    for m in &methods {
        let _ = write!(out, " {:>13}", m.name());
    }
    out.push('\n');
    for (noise, rows) in by_noise.values() {
        let f1z: Vec<f64> = rows.iter().filter_map(|r| r.mean_f1_z).collect();
        let f1z = if f1z.is_empty() {
            "-".to_string()
        } else {
            format!("{:.3}", mean(&f1z))
        };
        let _ = write!(out, "{:>7} {:>7}", round12(*noise), f1z);
        for m in &methods {
            match rows.iter().find(|r| r.method == *m) {
                Some(r) => {
                    let _ = write!(out, " {:>13.4}", r.std_f1_y);
                }
                None => {
                    let _ = write!(out, " {:>13}", "-");
                }
            }
        }
        out.push('\n');
    }
    out
}
