//! Intensity sweeps: one certified coverage radius per `(rho, replication)`.

use std::io::{self, Write};
use std::path::Path;
use std::time::Instant;

use cylcover::coverage::{coverage_radius, CertifiedRadius, RadiusOptions};
use cylcover::processes::{sample_brownian_model, sample_line_model, SeedSpec};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::{ExperimentConfig, Model};

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error("rho = {rho}, replication {replication}: {source}")]
    Model { rho: f64, replication: usize, source: cylcover::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("bad results file: {0}")]
    Parse(String),
    #[error(transparent)]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub rho: f64,
    pub replication_index: usize,
    pub radius_lower: f64,
    pub radius_upper: f64,
    /// `R_mid (rho / log rho)^{1/(d-1)}`.
    pub normalized: f64,
    pub ray_or_path_count: usize,
    pub wall_time_seconds: f64,
}

pub const CSV_HEADER: [&str; 7] = [
    "rho",
    "replication_index",
    "radius_lower",
    "radius_upper",
    "normalized",
    "ray_or_path_count",
    "wall_time_seconds",
];

#[derive(Debug, Clone, Copy)]
pub struct SweepOptions {
    /// Worker threads; does not change any output.
    pub threads: usize,
    /// Record wall-clock times. Off by default so that reruns produce
    /// identical files.
    pub timing: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { threads: 1, timing: false }
    }
}

pub fn normalize(radius: f64, rho: f64, d: usize) -> f64 {
    radius * (rho / rho.ln()).powf(1.0 / (d - 1) as f64)
}

/// Runs replication `replication` at intensity `rho`. The sample uses stream
/// `replication` of the master seed.
pub fn run_replication(
    cfg: &ExperimentConfig,
    rho: f64,
    replication: usize,
    timing: bool,
) -> Result<SweepRecord, SweepError> {
    let start = Instant::now();
    let seed = SeedSpec::new(cfg.master_seed, replication as u64);
    let opts = RadiusOptions::new(cfg.tol);
    let err = |source| SweepError::Model { rho, replication, source };
    let (radius, count) = match cfg.model {
        Model::LinesBall | Model::LinesDisk => {
            let law = cfg.law.as_ref().expect("line models carry a law");
            let s = sample_line_model(cfg.d, rho, law, seed).map_err(err)?;
            (coverage_radius(&s, cfg.model.dilation(), &opts), s.rays.len())
        }
        Model::Brownian => {
            let n_steps = cfg.n_steps.expect("brownian models carry n_steps");
            let s = sample_brownian_model(cfg.d, rho, n_steps, seed).map_err(err)?;
            (coverage_radius(&s, cfg.model.dilation(), &opts), s.paths.len())
        }
    };
    let radius = match radius {
        Ok(r) => r,
        // No trajectory: no finite radius covers the cube.
        Err(cylcover::Error::EmptyModel) => {
            CertifiedRadius { lower: f64::INFINITY, upper: f64::INFINITY, evaluations: 0 }
        }
        Err(e) => return Err(err(e)),
    };
    Ok(SweepRecord {
        rho,
        replication_index: replication,
        radius_lower: radius.lower,
        radius_upper: radius.upper,
        normalized: normalize(radius.midpoint(), rho, cfg.d),
        ray_or_path_count: count,
        wall_time_seconds: if timing { start.elapsed().as_secs_f64() } else { 0.0 },
    })
}

/// All records in `(rho, replication_index)` order.
pub fn run_sweep(cfg: &ExperimentConfig, opts: SweepOptions) -> Result<Vec<SweepRecord>, SweepError> {
    let jobs: Vec<(f64, usize)> =
        cfg.rho_list.iter().flat_map(|&rho| (0..cfg.replications).map(move |i| (rho, i))).collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(opts.threads.max(1)).build()?;
    pool.install(|| jobs.par_iter().map(|&(rho, i)| run_replication(cfg, rho, i, opts.timing)).collect())
}

/// Seventeen significant digits.
fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

pub fn write_csv<W: Write>(records: &[SweepRecord], out: W) -> Result<(), SweepError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            fmt_f64(r.rho),
            r.replication_index.to_string(),
            fmt_f64(r.radius_lower),
            fmt_f64(r.radius_upper),
            fmt_f64(r.normalized),
            r.ray_or_path_count.to_string(),
            fmt_f64(r.wall_time_seconds),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<SweepRecord>, SweepError> {
    let mut rd = csv::Reader::from_path(path)?;
    if rd.headers()?.iter().ne(CSV_HEADER) {
        return Err(SweepError::Parse("unexpected header".into()));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|e| SweepError::Parse(format!("{s:?}: {e}")));
    let int = |s: &str| s.parse::<usize>().map_err(|e| SweepError::Parse(format!("{s:?}: {e}")));
    rd.records()
        .map(|row| {
            let row = row?;
            if row.len() != CSV_HEADER.len() {
                return Err(SweepError::Parse(format!("row has {} fields", row.len())));
            }
            Ok(SweepRecord {
                rho: num(&row[0])?,
                replication_index: int(&row[1])?,
                radius_lower: num(&row[2])?,
                radius_upper: num(&row[3])?,
                normalized: num(&row[4])?,
                ray_or_path_count: int(&row[5])?,
                wall_time_seconds: num(&row[6])?,
            })
        })
        .collect()
}

/// Sample quantile with linear interpolation between order statistics
/// (Hyndman-Fan type 7) of an ascending slice.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        return sorted[lo];
    }
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq)]
pub struct RhoSummary {
    pub rho: f64,
    pub n: usize,
    pub median: f64,
    pub q05: f64,
    pub q25: f64,
    pub q75: f64,
    pub q95: f64,
    pub min: f64,
    pub max: f64,
}

/// Per-`rho` quantiles of the normalized radius, in order of first appearance.
pub fn summarize(records: &[SweepRecord]) -> Vec<RhoSummary> {
    let mut rhos: Vec<f64> = Vec::new();
    for r in records {
        if !rhos.contains(&r.rho) {
            rhos.push(r.rho);
        }
    }
    rhos.into_iter()
        .map(|rho| {
            let mut v: Vec<f64> = records.iter().filter(|r| r.rho == rho).map(|r| r.normalized).collect();
            v.sort_by(f64::total_cmp);
            RhoSummary {
                rho,
                n: v.len(),
                median: quantile(&v, 0.5),
                q05: quantile(&v, 0.05),
                q25: quantile(&v, 0.25),
                q75: quantile(&v, 0.75),
                q95: quantile(&v, 0.95),
                min: v[0],
                max: v[v.len() - 1],
            }
        })
        .collect()
}

/// JSON object keyed by `rho` (shortest round-trip decimal). Non-finite
/// values (from empty samples) are written as `null`.
pub fn summary_json(summary: &[RhoSummary]) -> Value {
    let num = |v: f64| if v.is_finite() { json!(v) } else { Value::Null };
    let mut map = Map::new();
    for s in summary {
        map.insert(
            s.rho.to_string(),
            json!({
                "n": s.n,
                "median": num(s.median),
                "q05": num(s.q05),
                "q25": num(s.q25),
                "q75": num(s.q75),
                "q95": num(s.q95),
                "min": num(s.min),
                "max": num(s.max),
            }),
        );
    }
    Value::Object(map)
}

/// Runs the sweep and writes the CSV to `cfg.output_path` and the summary
/// next to it.
pub fn run_and_write(cfg: &ExperimentConfig, opts: SweepOptions) -> Result<Vec<SweepRecord>, SweepError> {
    let records = run_sweep(cfg, opts)?;
    let mut buf = Vec::new();
    write_csv(&records, &mut buf)?;
    std::fs::write(&cfg.output_path, buf)?;
    let mut json = serde_json::to_string_pretty(&summary_json(&summarize(&records))).expect("valid json");
    json.push('\n');
    std::fs::write(cfg.summary_path(), json)?;
    Ok(records)
}
