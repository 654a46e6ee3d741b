//! Experiment harness: seeded sweeps over a size grid, JSONL/CSV output,
//! and the scaling-exponent fit.
//!
//! Reproducibility contract: a sweep's outputs are a pure function of its
//! config. Per-run seeds come from `derive_run_seed(seed_base, n, replicate)`,
//! records land in the files sorted by `(n, replicate)` regardless of worker
//! scheduling, and every field except `wall_time` is deterministic.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::process::{self, EnvelopeViolations, RunRecord};
use crate::rng::derive_run_seed;
use crate::trajectory::{EnvelopeVerdict, TrajectoryError, TrajectoryParams};

/// Version stamp carried by every JSONL record and CSV row.
pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable overriding the worker-thread count.
pub const THREADS_ENV: &str = "PACK_THREADS";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("n_grid must be non-empty")]
    EmptyGrid,
    #[error("n_grid must be strictly increasing ({prev} is not below {next})")]
    GridNotIncreasing { prev: u32, next: u32 },
    #[error("n_grid entries must be at least 1")]
    ZeroSize,
    #[error("reps must be at least 1")]
    ZeroReps,
    #[error(transparent)]
    BadParams(#[from] TrajectoryError),
    #[error("exponent fit needs at least 2 distinct sizes, got {0}")]
    FitTooFewPoints(usize),
    #[error("exponent fit needs positive medians, got {median} at n = {n}")]
    FitNonPositiveMedian { n: u32, median: f64 },
    #[error("I/O failure at {path:?} ({source}); outputs written so far: {written:?}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
        /// Partial-output manifest: files the sweep had already produced.
        written: Vec<PathBuf>,
    },
}

/// A sweep: `reps` runs at every size of `n_grid`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Sizes, strictly increasing.
    pub n_grid: Vec<u32>,
    /// Replicates per size.
    pub reps: u32,
    /// Base seed; per-run streams are mixed from `(seed_base, n, replicate)`.
    pub seed_base: u64,
    /// Fixed checkpoint stride; `None` applies `max(1, n²/600)` per size.
    pub stride: Option<u64>,
    pub params: TrajectoryParams,
    /// Directory receiving `records.jsonl` and `summary.csv`.
    pub out_dir: PathBuf,
    /// Worker threads; `None` defers to `PACK_THREADS` or hardware.
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(n_grid: Vec<u32>, reps: u32, seed_base: u64, out_dir: PathBuf) -> Self {
        ExperimentConfig {
            n_grid,
            reps,
            seed_base,
            stride: None,
            params: TrajectoryParams::default(),
            out_dir,
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.n_grid.is_empty() {
            return Err(HarnessError::EmptyGrid);
        }
        if self.n_grid.iter().any(|&n| n == 0) {
            return Err(HarnessError::ZeroSize);
        }
        for w in self.n_grid.windows(2) {
            if w[0] >= w[1] {
                return Err(HarnessError::GridNotIncreasing { prev: w[0], next: w[1] });
            }
        }
        if self.reps == 0 {
            return Err(HarnessError::ZeroReps);
        }
        self.params.validate()?;
        Ok(())
    }

    pub fn records_path(&self) -> PathBuf {
        self.out_dir.join("records.jsonl")
    }

    pub fn summary_path(&self) -> PathBuf {
        self.out_dir.join("summary.csv")
    }
}

/// Resolves the worker width: `PACK_THREADS` beats the config, which beats
/// the hardware thread count.
pub fn resolve_threads(config_threads: Option<usize>) -> usize {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        if let Ok(w) = v.trim().parse::<usize>() {
            if w >= 1 {
                return w;
            }
        }
    }
    config_threads
        .filter(|&w| w >= 1)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |p| p.get()))
}

/// Fraction of the triangle-packing upper bound a run achieved:
/// `3·steps / C(n,2) = 1 - final_edges / C(n,2)`.
pub fn packing_efficiency(record: &RunRecord) -> f64 {
    let n = u64::from(record.n);
    let pairs = n * (n - 1) / 2;
    if pairs == 0 {
        return 1.0;
    }
    (3 * record.steps) as f64 / pairs as f64
}

// ======================================================================
// Wire formats
// ======================================================================

/// One JSONL line. Field order is the serialization order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JsonRunRecord {
    pub schema_version: u32,
    pub n: u32,
    pub seed: u64,
    #[serde(rename = "M")]
    pub steps: u64,
    pub final_edges: u64,
    pub efficiency: f64,
    pub max_residual_bound: i64,
    pub snapshots: Vec<JsonSnapshot>,
    pub violations: EnvelopeViolations,
    /// Wall-clock seconds; the only nondeterministic field.
    pub wall_time: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JsonSnapshot {
    pub i: u64,
    pub t: f64,
    pub p: f64,
    #[serde(rename = "Q")]
    pub q: u64,
    pub q_ideal_n3: f64,
    pub max_y_dev: f64,
    pub verdicts: EnvelopeVerdict,
}

impl From<&RunRecord> for JsonRunRecord {
    fn from(r: &RunRecord) -> Self {
        JsonRunRecord {
            schema_version: SCHEMA_VERSION,
            n: r.n,
            seed: r.seed,
            steps: r.steps,
            final_edges: r.final_edges,
            efficiency: packing_efficiency(r),
            max_residual_bound: r.max_residual_bound,
            snapshots: r
                .snapshots
                .iter()
                .map(|s| JsonSnapshot {
                    i: s.i,
                    t: s.t(),
                    p: s.p(),
                    q: s.q_actual,
                    q_ideal_n3: s.q_ideal_n3(),
                    max_y_dev: s.max_y_dev,
                    verdicts: s.verdicts,
                })
                .collect(),
            violations: r.violations,
            wall_time: r.wall_time,
        }
    }
}

/// Serializes one record as its JSONL line (no trailing newline).
pub fn record_json_line(record: &RunRecord) -> String {
    serde_json::to_string(&JsonRunRecord::from(record)).expect("record serialization is infallible")
}

/// Rewrites a JSONL line with `wall_time` zeroed, for determinism checks
/// ("identical output" always means "identical up to wall_time").
pub fn normalize_json_line(line: &str) -> String {
    let mut v: serde_json::Value = serde_json::from_str(line).expect("line must be valid JSON");
    if let Some(w) = v.get_mut("wall_time") {
        *w = serde_json::json!(0.0);
    }
    v.to_string()
}

// ======================================================================
// Sweep
// ======================================================================

/// Per-size statistics over the replicate set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SizeStats {
    pub n: u32,
    pub reps: u32,
    pub min: u64,
    pub median: f64,
    pub mean: f64,
    pub max: u64,
    pub stddev: f64,
    pub efficiency_mean: f64,
    /// Standard error of the efficiency mean.
    pub efficiency_se: f64,
    /// Reference curve n^{3/2}.
    pub ref_n32: f64,
    /// Reference curve n^{7/4} (ln n)^{5/4}.
    pub ref_n74log: f64,
    /// median / ref_n32 and median / ref_n74log comparison ratios.
    pub median_over_n32: f64,
    pub median_over_n74log: f64,
    pub violations: EnvelopeViolations,
}

/// Least-squares fit of `ln median` against `ln n`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; 0 for an exact two-point fit.
    pub stderr: f64,
}

/// What a sweep returns (and what the CLI prints as JSON).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSummary {
    pub schema_version: u32,
    pub runs: u64,
    pub per_n: Vec<SizeStats>,
    /// Absent when the grid has fewer than 2 sizes or a median is 0.
    pub fit: Option<ExponentFit>,
    pub total_violations: EnvelopeViolations,
}

fn median_of_sorted(sorted: &[u64]) -> f64 {
    let k = sorted.len();
    debug_assert!(k > 0);
    if k % 2 == 1 {
        sorted[k / 2] as f64
    } else {
        (sorted[k / 2 - 1] as f64 + sorted[k / 2] as f64) / 2.0
    }
}

/// Reference curve `n^{7/4} (ln n)^{5/4}`.
pub fn ref_n74log(n: u32) -> f64 {
    let nf = f64::from(n);
    nf.powf(1.75) * nf.ln().powf(1.25)
}

/// Fits `ln(median) = slope · ln(n) + intercept` by least squares.
///
/// # Errors
/// Needs at least two distinct sizes and strictly positive medians.
pub fn fit_exponent(points: &[(u32, f64)]) -> Result<ExponentFit, HarnessError> {
    let mut distinct: Vec<u32> = points.iter().map(|p| p.0).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(HarnessError::FitTooFewPoints(distinct.len()));
    }
    for &(n, median) in points {
        if !(median > 0.0) {
            return Err(HarnessError::FitNonPositiveMedian { n, median });
        }
    }
    let k = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| f64::from(p.0).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let xbar = xs.iter().sum::<f64>() / k;
    let ybar = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let stderr = if points.len() > 2 {
        let rss: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (y - (intercept + slope * x)).powi(2))
            .sum();
        (rss / (k - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(ExponentFit { slope, intercept, stderr })
}

fn size_stats(n: u32, records: &[&RunRecord], params_reps: u32) -> SizeStats {
    let mut finals: Vec<u64> = records.iter().map(|r| r.final_edges).collect();
    finals.sort_unstable();
    let k = finals.len() as f64;
    let mean = finals.iter().map(|&v| v as f64).sum::<f64>() / k;
    let var = if finals.len() > 1 {
        finals.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / (k - 1.0)
    } else {
        0.0
    };
    let effs: Vec<f64> = records.iter().map(|r| packing_efficiency(r)).collect();
    let eff_mean = effs.iter().sum::<f64>() / k;
    let eff_var = if effs.len() > 1 {
        effs.iter().map(|e| (e - eff_mean).powi(2)).sum::<f64>() / (k - 1.0)
    } else {
        0.0
    };
    let mut violations = EnvelopeViolations::default();
    for r in records {
        violations.q_lower += r.violations.q_lower;
        violations.q_upper += r.violations.q_upper;
        violations.y += r.violations.y;
    }
    let median = median_of_sorted(&finals);
    let nf = f64::from(n);
    let ref32 = nf.powf(1.5);
    let ref74 = ref_n74log(n);
    SizeStats {
        n,
        reps: params_reps,
        min: finals[0],
        median,
        mean,
        max: *finals.last().unwrap(),
        stddev: var.sqrt(),
        efficiency_mean: eff_mean,
        efficiency_se: (eff_var / k).sqrt(),
        ref_n32: ref32,
        ref_n74log: ref74,
        median_over_n32: median / ref32,
        median_over_n74log: median / ref74,
        violations,
    }
}

/// Runs all `(n, replicate)` cells, writes `records.jsonl` (one record per
/// run, sorted by `(n, replicate)`) and `summary.csv` (one row per size),
/// and returns the summary.
///
/// Worker scheduling cannot affect the output: records are collected in job
/// order, and each run's stream depends only on `(seed_base, n, replicate)`.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepSummary, HarnessError> {
    config.validate()?;
    let mut written: Vec<PathBuf> = Vec::new();
    let io_err = |path: &Path, source: std::io::Error, written: &[PathBuf]| HarnessError::Io {
        path: path.to_path_buf(),
        source,
        written: written.to_vec(),
    };

    fs::create_dir_all(&config.out_dir).map_err(|e| io_err(&config.out_dir, e, &written))?;

    let jobs: Vec<(u32, u32)> = config
        .n_grid
        .iter()
        .flat_map(|&n| (0..config.reps).map(move |rep| (n, rep)))
        .collect();

    let width = resolve_threads(config.threads);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(width)
        .build()
        .expect("thread pool construction");
    let records: Vec<RunRecord> = pool.install(|| {
        jobs.par_iter()
            .map(|&(n, rep)| {
                let seed = derive_run_seed(config.seed_base, n, rep);
                process::run(n, seed, config.stride, &config.params)
            })
            .collect()
    });

    // records.jsonl — one line per run, already in (n, replicate) order.
    let records_path = config.records_path();
    let write_records = || -> std::io::Result<()> {
        let mut w = BufWriter::new(fs::File::create(&records_path)?);
        for r in &records {
            writeln!(w, "{}", record_json_line(r))?;
        }
        w.flush()
    };
    write_records().map_err(|e| io_err(&records_path, e, &written))?;
    written.push(records_path.clone());

    let per_n: Vec<SizeStats> = config
        .n_grid
        .iter()
        .map(|&n| {
            let group: Vec<&RunRecord> = records.iter().filter(|r| r.n == n).collect();
            size_stats(n, &group, config.reps)
        })
        .collect();

    // summary.csv — one row per size.
    let summary_path = config.summary_path();
    let write_summary = || -> std::io::Result<()> {
        let mut w = BufWriter::new(fs::File::create(&summary_path)?);
        writeln!(
            w,
            "schema_version,n,reps,min,median,mean,max,stddev,efficiency_mean,ref_n32,ref_n74log"
        )?;
        for s in &per_n {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{}",
                SCHEMA_VERSION,
                s.n,
                s.reps,
                s.min,
                s.median,
                s.mean,
                s.max,
                s.stddev,
                s.efficiency_mean,
                s.ref_n32,
                s.ref_n74log
            )?;
        }
        w.flush()
    };
    write_summary().map_err(|e| io_err(&summary_path, e, &written))?;
    written.push(summary_path);

    let fit = {
        let points: Vec<(u32, f64)> = per_n.iter().map(|s| (s.n, s.median)).collect();
        fit_exponent(&points).ok()
    };
    let mut total_violations = EnvelopeViolations::default();
    for s in &per_n {
        total_violations.q_lower += s.violations.q_lower;
        total_violations.q_upper += s.violations.q_upper;
        total_violations.y += s.violations.y;
    }

    Ok(SweepSummary {
        schema_version: SCHEMA_VERSION,
        runs: records.len() as u64,
        per_n,
        fit,
        total_violations,
    })
}
