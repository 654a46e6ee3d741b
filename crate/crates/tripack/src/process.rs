//! The random greedy triangle-removal process.
//!
//! Starting from `K_n`, each step removes the three edges of a uniformly
//! random triangle of the current graph; the process stops when the graph is
//! triangle-free. A run records trajectory snapshots every
//! `checkpoint_stride` steps (default `max(1, n²/600)`, about a hundred per
//! run) plus the initial and terminal states.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::graph::{GraphError, GraphState, RemovalReceipt};
use crate::rng::RandomStream;
use crate::trajectory::{TrajectoryParams, TrajectorySnapshot, Verdict};

/// Result of one removal step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutcome {
    pub receipt: RemovalReceipt,
    /// Steps performed after this one.
    pub i: u64,
    /// Triangles remaining after this one.
    pub q: u64,
}

/// Violated-verdict counts across a run's checkpoints, per envelope.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvelopeViolations {
    pub q_lower: u64,
    pub q_upper: u64,
    pub y: u64,
}

impl EnvelopeViolations {
    pub fn tally(&mut self, v: &crate::trajectory::EnvelopeVerdict) {
        if v.q_lower == Verdict::Violated {
            self.q_lower += 1;
        }
        if v.q_upper == Verdict::Violated {
            self.q_upper += 1;
        }
        if v.y == Verdict::Violated {
            self.y += 1;
        }
    }

    pub fn total(&self) -> u64 {
        self.q_lower + self.q_upper + self.y
    }
}

/// Everything one run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub n: u32,
    /// Stream seed the run consumed (already mixed for sweep cells).
    pub seed: u64,
    /// Total removal steps (the packing size).
    pub steps: u64,
    /// Edges left when the graph went triangle-free; `C(n,2) - 3·steps`.
    pub final_edges: u64,
    pub snapshots: Vec<TrajectorySnapshot>,
    pub violations: EnvelopeViolations,
    /// Max over checkpoints of `edges - 3Q`, a lower bound on `final_edges`.
    pub max_residual_bound: i64,
    /// Wall-clock seconds; the only nondeterministic field of a record.
    pub wall_time: f64,
}

/// Default checkpoint stride: `max(1, n²/600)`, ≈100 snapshots per run.
pub fn default_stride(n: u32) -> u64 {
    (u64::from(n) * u64::from(n) / 600).max(1)
}

/// Lower bound on the final edge count from the current state:
/// `|E| - 3Q` (each future step destroys at least one triangle and exactly
/// three edges, so at most `3Q` more edges can ever leave).
pub fn residual_lower_bound(state: &GraphState) -> i64 {
    state.edge_count() as i64 - 3 * state.triangle_count() as i64
}

/// Samples one uniform triangle and removes it.
///
/// # Errors
/// [`GraphError::ProcessTerminated`] if the graph is already triangle-free.
pub fn step(state: &mut GraphState, rng: &mut RandomStream) -> Result<StepOutcome, GraphError> {
    let t = state.sample_uniform_triangle(rng)?;
    let receipt = state.remove_triangle(t)?;
    Ok(StepOutcome { receipt, i: state.step_count(), q: state.triangle_count() })
}

/// Runs the process to termination. See [`run_with_observer`].
pub fn run(n: u32, seed: u64, stride: Option<u64>, params: &TrajectoryParams) -> RunRecord {
    run_with_observer(n, seed, stride, params, |_, _| {})
}

/// Runs the process to termination, invoking `observer` at every checkpoint
/// (after the snapshot is recorded) with the live state — the hook the
/// deep-verification paths use to cross-check bookkeeping mid-run.
///
/// `n = 1` and `n = 2` terminate immediately with zero steps.
///
/// # Panics
/// Panics if `n == 0` (there is no graph to run on).
pub fn run_with_observer<F>(
    n: u32,
    seed: u64,
    stride: Option<u64>,
    params: &TrajectoryParams,
    mut observer: F,
) -> RunRecord
where
    F: FnMut(&GraphState, &TrajectorySnapshot),
{
    assert!(n >= 1, "run needs at least one vertex");
    let start = Instant::now();
    let stride = stride.unwrap_or_else(|| default_stride(n)).max(1);
    let mut state = GraphState::init_complete(n as usize).expect("n validated above");
    let mut rng = RandomStream::from_seed(seed);

    let mut snapshots = Vec::new();
    let mut violations = EnvelopeViolations::default();
    let mut checkpoint =
        |state: &GraphState, snapshots: &mut Vec<TrajectorySnapshot>, violations: &mut EnvelopeViolations| {
            let snap = TrajectorySnapshot::take(state, params);
            violations.tally(&snap.verdicts);
            snapshots.push(snap);
            observer(state, snapshots.last().unwrap());
        };

    checkpoint(&state, &mut snapshots, &mut violations);
    while state.triangle_count() > 0 {
        let t = state
            .sample_uniform_triangle(&mut rng)
            .expect("loop guard keeps Q positive");
        state.remove_triangle(t).expect("sampled triangles are present");
        if state.step_count() % stride == 0 {
            checkpoint(&state, &mut snapshots, &mut violations);
        }
    }
    if snapshots.last().map(|s| s.i) != Some(state.step_count()) {
        checkpoint(&state, &mut snapshots, &mut violations);
    }

    let steps = state.step_count();
    let final_edges = state.edge_count();
    debug_assert_eq!(
        final_edges,
        u64::from(n) * (u64::from(n) - 1) / 2 - 3 * steps,
        "edge ledger out of balance"
    );
    let max_residual_bound =
        snapshots.iter().map(|s| s.residual).max().expect("at least one snapshot");

    RunRecord {
        n,
        seed,
        steps,
        final_edges,
        snapshots,
        violations,
        max_residual_bound,
        wall_time: start.elapsed().as_secs_f64(),
    }
}
