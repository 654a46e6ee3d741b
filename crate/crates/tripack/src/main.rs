//! Command-line entry point.
//!
//! Exit codes: 0 = success / all checks passed, 1 = check or I/O failure,
//! 2 = usage error. The standard output stream carries machine-readable
//! data only (JSONL or CSV); human diagnostics go to standard error.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tripack::harness::{self, ExperimentConfig, HarnessError, SCHEMA_VERSION};
use tripack::process;
use tripack::trajectory::{
    self, density_threshold, envelope_horizon, TrajectoryParams,
};
use tripack::verify::{self, VerifyOptions};

#[derive(Parser)]
#[command(
    name = "tripack",
    version,
    about = "Random greedy triangle packing on K_n: simulation, verification, and scaling sweeps",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Envelope and horizon constants, exposed on every subcommand that
/// evaluates trajectories. Defaults follow the tracked formulas
/// f(t) = 5 − 30·ln p(t), i₀ = n²/6 − (5/3)·n^{7/4}(ln n)^{5/4},
/// p₀ = 10·n^{−1/4}(ln n)^{5/4}.
#[derive(Args, Debug, Clone, Copy)]
struct ParamArgs {
    /// Envelope width at t = 0.
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    envelope_base: f64,
    /// Coefficient of the −ln p(t) term of the envelope width.
    #[arg(long, default_value_t = 30.0, allow_negative_numbers = true)]
    envelope_log_coeff: f64,
    /// Multiplier on the lower triangle-count envelope's error term.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    q_lower_coeff: f64,
    /// Coefficient of the upper triangle-count envelope's slack term.
    #[arg(long, default_value_t = 1.0 / 3.0, allow_negative_numbers = true)]
    q_upper_coeff: f64,
    /// Coefficient of the n^{7/4}(ln n)^{5/4} term of the horizon i₀.
    #[arg(long, default_value_t = 5.0 / 3.0, allow_negative_numbers = true)]
    horizon_coeff: f64,
    /// Coefficient of the density threshold p₀.
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    density_threshold_coeff: f64,
}

impl ParamArgs {
    fn to_params(self) -> TrajectoryParams {
        TrajectoryParams {
            envelope_base: self.envelope_base,
            envelope_log_coeff: self.envelope_log_coeff,
            q_lower_coeff: self.q_lower_coeff,
            q_upper_coeff: self.q_upper_coeff,
            horizon_coeff: self.horizon_coeff,
            density_threshold_coeff: self.density_threshold_coeff,
        }
    }
}

/// Strictly increasing, duplicate-free size grid parsed from "N1,N2,...".
#[derive(Debug, Clone)]
struct GridArg(Vec<u32>);

fn parse_grid(raw: &str) -> Result<GridArg, String> {
    let mut grid = Vec::new();
    for part in raw.split(',') {
        let part = part.trim();
        if part.is_empty() {
            return Err("grid entries must be non-empty".into());
        }
        let n: u32 = part.parse().map_err(|_| format!("invalid grid entry '{part}'"))?;
        if n == 0 {
            return Err("grid entries must be at least 1".into());
        }
        if let Some(&last) = grid.last() {
            if n == last {
                return Err(format!("duplicate grid entry {n}"));
            }
            if n < last {
                return Err(format!("grid must be strictly increasing ({last} before {n})"));
            }
        }
        grid.push(n);
    }
    Ok(GridArg(grid))
}

#[derive(Subcommand)]
enum Command {
    /// Run the process once and emit the run record as one JSONL line.
    Run {
        /// Vertex count.
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..=65_536))]
        n: u32,
        /// Stream seed (used verbatim, not re-derived).
        #[arg(long)]
        seed: u64,
        /// Checkpoint stride in steps; defaults to max(1, n²/600).
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        stride: Option<u64>,
        /// Write the record here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Run a seeded sweep over a size grid; writes records.jsonl and
    /// summary.csv into --out and prints the summary as JSON.
    Sweep {
        /// Comma-separated sizes, strictly increasing (e.g. 256,512,1024).
        #[arg(long, value_parser = parse_grid)]
        grid: GridArg,
        /// Replicates per size.
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        reps: u32,
        /// Base seed; run streams derive from (seed_base, n, replicate).
        #[arg(long, default_value_t = 0)]
        seed_base: u64,
        /// Output directory for records.jsonl and summary.csv.
        #[arg(long)]
        out: PathBuf,
        /// Checkpoint stride in steps; defaults to max(1, n²/600) per size.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        stride: Option<u64>,
        /// Worker threads (PACK_THREADS overrides; defaults to hardware).
        #[arg(long, value_parser = clap::value_parser!(usize))]
        threads: Option<usize>,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Run the self-check battery; exits 0 only if every check passes.
    Verify {
        /// Size cap for the exhaustive per-step suites; also gates the K10
        /// uniformity (needs ≥ 10) and distribution (needs ≥ 6) checks.
        #[arg(long, default_value_t = 12, value_parser = clap::value_parser!(u32).range(5..=64))]
        n_max: u32,
        /// Draws for the K10 uniformity check.
        #[arg(long, default_value_t = 120_000, value_parser = clap::value_parser!(u64).range(600..))]
        samples: u64,
        /// Runs per engine per size for the distribution comparison.
        #[arg(long, default_value_t = 20_000, value_parser = clap::value_parser!(u32).range(100..))]
        dist_runs: u32,
    },
    /// Tabulate the ideal curves t, p, y, q, f plus the horizon i₀ and
    /// density threshold p₀ as CSV.
    Curves {
        /// Vertex count the horizon and threshold are evaluated at.
        #[arg(long, value_parser = clap::value_parser!(u32).range(2..=65_536))]
        n: u32,
        /// Number of rows; the first row is t = 0, the last is p = 0.01.
        #[arg(long, default_value_t = 101, value_parser = clap::value_parser!(u32).range(2..=1_000_000))]
        points: u32,
        /// Write the table here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        params: ParamArgs,
    },
}

/// Validates trajectory constants coming off the flag set; bad values are
/// usage errors (exit 2) just like out-of-range built-in flags.
fn params_or_usage_error(args: ParamArgs) -> Result<TrajectoryParams, ExitCode> {
    let params = args.to_params();
    if let Err(e) = params.validate() {
        eprintln!("error: {e}");
        return Err(ExitCode::from(2));
    }
    Ok(params)
}

fn emit(out: Option<&PathBuf>, payload: &str) -> std::io::Result<()> {
    match out {
        Some(path) => fs::write(path, payload),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(payload.as_bytes())?;
            stdout.flush()
        }
    }
}

fn cmd_run(
    n: u32,
    seed: u64,
    stride: Option<u64>,
    out: Option<PathBuf>,
    params: ParamArgs,
) -> ExitCode {
    let params = match params_or_usage_error(params) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let record = process::run(n, seed, stride, &params);
    let line = harness::record_json_line(&record);
    eprintln!(
        "run n={n} seed={seed}: M={} final_edges={} in {:.3}s",
        record.steps, record.final_edges, record.wall_time
    );
    match emit(out.as_ref(), &format!("{line}\n")) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: writing record: {e}");
            ExitCode::FAILURE
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    grid: GridArg,
    reps: u32,
    seed_base: u64,
    out: PathBuf,
    stride: Option<u64>,
    threads: Option<usize>,
    params: ParamArgs,
) -> ExitCode {
    let params = match params_or_usage_error(params) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let config = ExperimentConfig {
        n_grid: grid.0,
        reps,
        seed_base,
        stride,
        params,
        out_dir: out,
        threads,
    };
    if let Err(e) = config.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match harness::run_sweep(&config) {
        Ok(summary) => {
            eprintln!(
                "sweep complete: {} runs, records at {}, summary at {}",
                summary.runs,
                config.records_path().display(),
                config.summary_path().display()
            );
            if let Some(fit) = &summary.fit {
                eprintln!("fitted exponent: {:.4} ± {:.4}", fit.slope, fit.stderr);
            }
            let json = serde_json::to_string(&summary).expect("summary serializes");
            println!("{json}");
            ExitCode::SUCCESS
        }
        Err(e @ HarnessError::Io { .. }) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
        Err(e) => {
            // Config-shaped problems that slipped past validate().
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn cmd_verify(n_max: u32, samples: u64, dist_runs: u32) -> ExitCode {
    let opts = VerifyOptions { n_max, samples, dist_runs };
    if let Err(e) = opts.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let reports = verify::run_all(&opts);
    let mut all_pass = true;
    let mut stdout = std::io::stdout().lock();
    for r in &reports {
        all_pass &= r.pass;
        let line = serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "check": r.name,
            "pass": r.pass,
            "detail": r.detail,
        });
        if writeln!(stdout, "{line}").is_err() {
            return ExitCode::FAILURE;
        }
        eprintln!("{} {} — {}", if r.pass { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    drop(stdout);
    if all_pass {
        eprintln!("all {} checks passed", reports.len());
        ExitCode::SUCCESS
    } else {
        eprintln!("verification failed");
        ExitCode::FAILURE
    }
}

fn cmd_curves(n: u32, points: u32, out: Option<PathBuf>, params: ParamArgs) -> ExitCode {
    let params = match params_or_usage_error(params) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let horizon = envelope_horizon(u64::from(n), &params);
    let p0 = density_threshold(u64::from(n), &params);
    let mut table = String::from("schema_version,n,t,p,y,q,f,i0,p0\n");
    // Rows evenly spaced in density from 1 down to 0.01 (t from 0 towards
    // the depletion point 1/6, which f(t) diverges at and is excluded).
    const P_END: f64 = 0.01;
    for k in 0..points {
        let frac = f64::from(k) / f64::from(points - 1);
        let p = 1.0 - (1.0 - P_END) * frac;
        let t = (1.0 - p) / 6.0;
        let curves = trajectory::ideal_curves(t, &params).expect("p stays positive");
        table.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            SCHEMA_VERSION,
            n,
            t,
            curves.density,
            curves.codegree_density,
            curves.triangle_density,
            curves.envelope_width,
            horizon,
            p0
        ));
    }
    eprintln!("curves n={n}: i0={horizon}, p0={p0:.6}, {points} rows");
    match emit(out.as_ref(), &table) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: writing table: {e}");
            ExitCode::FAILURE
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { n, seed, stride, out, params } => cmd_run(n, seed, stride, out, params),
        Command::Sweep { grid, reps, seed_base, out, stride, threads, params } => {
            cmd_sweep(grid, reps, seed_base, out, stride, threads, params)
        }
        Command::Verify { n_max, samples, dist_runs } => cmd_verify(n_max, samples, dist_runs),
        Command::Curves { n, points, out, params } => cmd_curves(n, points, out, params),
    }
}
