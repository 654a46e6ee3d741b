//! Slow, independent reference implementations used to validate the engine.
//!
//! Nothing here reads the engine's incremental bookkeeping: triangles are
//! enumerated from adjacency bits alone, and [`naive_run`] maintains its own
//! graph, re-enumerating all triangles from scratch each step (O(n³)) before
//! picking one uniformly. The naive engine is capped at 64 vertices, which
//! keeps its adjacency rows single machine words and its runtime tractable.

use thiserror::Error;

use crate::graph::{GraphState, Triangle};
use crate::process::{EnvelopeViolations, RunRecord};
use crate::rng::RandomStream;
use crate::trajectory::{TrajectoryParams, TrajectorySnapshot};

/// Vertex cap of the naive engine (adjacency rows are single `u64` words).
pub const NAIVE_CAP: usize = 64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("naive engine supports at most {cap} vertices, got {n}")]
    CapExceeded { n: usize, cap: usize },
    #[error("vertex count must be at least 1")]
    ZeroVertices,
}

/// Triangles sorted lexicographically by (a, b, c).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriangleList {
    pub triangles: Vec<Triangle>,
}

impl TriangleList {
    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// Lexicographic rank of a triangle, if present.
    pub fn rank(&self, t: &Triangle) -> Option<usize> {
        self.triangles.binary_search(t).ok()
    }
}

/// Enumerates all triangles of the engine state's adjacency structure.
///
/// Ascending outer loops plus ascending bit scans produce lexicographic
/// order directly; no sort is needed.
pub fn enumerate_triangles(state: &GraphState) -> TriangleList {
    let n = state.vertex_count();
    let mut triangles = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            if !state.has_edge(a, b) {
                continue;
            }
            for c in (b + 1)..n {
                if state.has_edge(a, c) && state.has_edge(b, c) {
                    triangles.push(Triangle::new(a as u32, b as u32, c as u32));
                }
            }
        }
    }
    TriangleList { triangles }
}

/// Minimal standalone graph for the naive engine: one `u64` row per vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NaiveGraph {
    n: usize,
    rows: Vec<u64>,
}

impl NaiveGraph {
    pub fn complete(n: usize) -> Result<Self, OracleError> {
        if n == 0 {
            return Err(OracleError::ZeroVertices);
        }
        if n > NAIVE_CAP {
            return Err(OracleError::CapExceeded { n, cap: NAIVE_CAP });
        }
        let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        let rows = (0..n).map(|u| full & !(1u64 << u)).collect();
        Ok(NaiveGraph { n, rows })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u != v && (self.rows[u] >> v) & 1 == 1
    }

    pub fn remove_edge(&mut self, u: usize, v: usize) {
        debug_assert!(self.has_edge(u, v));
        self.rows[u] &= !(1u64 << v);
        self.rows[v] &= !(1u64 << u);
    }

    pub fn edge_count(&self) -> u64 {
        self.rows.iter().map(|r| u64::from(r.count_ones())).sum::<u64>() / 2
    }

    pub fn codegree(&self, u: usize, v: usize) -> u32 {
        (self.rows[u] & self.rows[v]).count_ones()
    }

    /// From-scratch triangle enumeration in lexicographic order.
    pub fn triangles(&self) -> TriangleList {
        let mut triangles = Vec::new();
        for a in 0..self.n {
            for b in (a + 1)..self.n {
                if !self.has_edge(a, b) {
                    continue;
                }
                // Common neighbors above b, in ascending bit order.
                let mut common = self.rows[a] & self.rows[b] & !((1u64 << (b + 1)) - 1);
                while common != 0 {
                    let c = common.trailing_zeros();
                    common &= common - 1;
                    triangles.push(Triangle::new(a as u32, b as u32, c));
                }
            }
        }
        TriangleList { triangles }
    }

    fn snapshot(&self, i: u64, params: &TrajectoryParams) -> TrajectorySnapshot {
        let q = self.triangles().len() as u64;
        let mut min_y = u32::MAX;
        let mut max_y = 0u32;
        let mut pair_count = 0u64;
        for u in 0..self.n {
            for v in (u + 1)..self.n {
                let y = self.codegree(u, v);
                min_y = min_y.min(y);
                max_y = max_y.max(y);
                pair_count += 1;
            }
        }
        if pair_count == 0 {
            min_y = 0;
        }
        TrajectorySnapshot::from_scan(
            self.n as u32,
            i,
            q,
            self.edge_count(),
            min_y,
            max_y,
            pair_count,
            params,
        )
    }
}

/// Reference run: re-enumerates all triangles each step and removes a
/// uniformly random one. Emits the same record shape as the fast engine, so
/// the two can be compared field by field.
///
/// # Errors
/// Rejects `n = 0` and `n > NAIVE_CAP`.
pub fn naive_run(
    n: usize,
    seed: u64,
    stride: Option<u64>,
    params: &TrajectoryParams,
) -> Result<RunRecord, OracleError> {
    let start = std::time::Instant::now();
    let stride = stride.unwrap_or_else(|| crate::process::default_stride(n as u32)).max(1);
    let mut g = NaiveGraph::complete(n)?;
    let mut rng = RandomStream::from_seed(seed);

    let mut snapshots = Vec::new();
    let mut violations = EnvelopeViolations::default();
    let record_checkpoint = |g: &NaiveGraph, i: u64, snapshots: &mut Vec<TrajectorySnapshot>, violations: &mut EnvelopeViolations| {
        let snap = g.snapshot(i, params);
        violations.tally(&snap.verdicts);
        snapshots.push(snap);
    };

    let mut i = 0u64;
    record_checkpoint(&g, i, &mut snapshots, &mut violations);
    loop {
        let list = g.triangles();
        if list.is_empty() {
            break;
        }
        let t = list.triangles[rng.below(list.len() as u64) as usize];
        for (u, v) in t.edges() {
            g.remove_edge(u as usize, v as usize);
        }
        i += 1;
        if i % stride == 0 {
            record_checkpoint(&g, i, &mut snapshots, &mut violations);
        }
    }
    if snapshots.last().map(|s| s.i) != Some(i) {
        record_checkpoint(&g, i, &mut snapshots, &mut violations);
    }

    let final_edges = g.edge_count();
    debug_assert_eq!(final_edges, (n as u64) * (n as u64 - 1) / 2 - 3 * i);
    let max_residual_bound =
        snapshots.iter().map(|s| s.residual).max().expect("at least one snapshot");

    Ok(RunRecord {
        n: n as u32,
        seed,
        steps: i,
        final_edges,
        snapshots,
        violations,
        max_residual_bound,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process;

    fn defaults() -> TrajectoryParams {
        TrajectoryParams::default()
    }

    #[test]
    fn complete_graph_triangle_counts() {
        for n in 1..=30usize {
            let want = if n >= 3 { n * (n - 1) * (n - 2) / 6 } else { 0 };
            let g = NaiveGraph::complete(n).unwrap();
            assert_eq!(g.triangles().len(), want, "K_{n}");
            let s = GraphState::init_complete(n).unwrap();
            assert_eq!(enumerate_triangles(&s).len(), want);
        }
    }

    #[test]
    fn enumeration_is_lexicographic() {
        let g = NaiveGraph::complete(6).unwrap();
        let ts = g.triangles().triangles;
        let mut sorted = ts.clone();
        sorted.sort();
        assert_eq!(ts, sorted);
        assert_eq!(ts[0], Triangle::new(0, 1, 2));
        assert_eq!(*ts.last().unwrap(), Triangle::new(3, 4, 5));
    }

    #[test]
    fn enumeration_after_removal() {
        let mut g = NaiveGraph::complete(5).unwrap();
        for (u, v) in Triangle::new(0, 1, 2).edges() {
            g.remove_edge(u as usize, v as usize);
        }
        assert_eq!(
            g.triangles().triangles,
            vec![Triangle::new(0, 3, 4), Triangle::new(1, 3, 4), Triangle::new(2, 3, 4)]
        );
    }

    #[test]
    fn triangle_free_graph_enumerates_empty() {
        let mut g = NaiveGraph::complete(4).unwrap();
        for (u, v) in Triangle::new(0, 1, 2).edges() {
            g.remove_edge(u as usize, v as usize);
        }
        assert!(g.triangles().is_empty());
    }

    #[test]
    fn cap_is_enforced() {
        assert_eq!(NaiveGraph::complete(65).unwrap_err(), OracleError::CapExceeded { n: 65, cap: 64 });
        assert!(naive_run(65, 1, None, &defaults()).is_err());
        assert!(NaiveGraph::complete(64).is_ok());
        assert_eq!(NaiveGraph::complete(0).unwrap_err(), OracleError::ZeroVertices);
    }

    #[test]
    fn naive_run_forced_outcomes() {
        for seed in 0..50 {
            let r3 = naive_run(3, seed, None, &defaults()).unwrap();
            assert_eq!((r3.steps, r3.final_edges), (1, 0));
            let r4 = naive_run(4, seed, None, &defaults()).unwrap();
            assert_eq!((r4.steps, r4.final_edges), (1, 3));
            let r5 = naive_run(5, seed, None, &defaults()).unwrap();
            assert_eq!((r5.steps, r5.final_edges), (2, 4));
        }
    }

    #[test]
    fn naive_run_is_deterministic() {
        let a = naive_run(12, 99, Some(3), &defaults()).unwrap();
        let b = naive_run(12, 99, Some(3), &defaults()).unwrap();
        assert_eq!(a.steps, b.steps);
        assert_eq!(a.snapshots, b.snapshots);
    }

    // Replay the fast engine's trajectory and recount triangles from scratch
    // after every step: the engine's Q must match exactly.
    #[test]
    fn fast_engine_q_matches_recount_along_runs() {
        for seed in [1u64, 2, 3] {
            let mut state = GraphState::init_complete(12).unwrap();
            let mut rng = RandomStream::from_seed(seed);
            loop {
                assert_eq!(enumerate_triangles(&state).len() as u64, state.triangle_count());
                if state.triangle_count() == 0 {
                    break;
                }
                process::step(&mut state, &mut rng).unwrap();
            }
        }
    }

    #[test]
    fn naive_and_fast_agree_on_forced_instances() {
        for n in [3u32, 4, 5] {
            for seed in 0..20 {
                let fast = process::run(n, seed, None, &defaults());
                let naive = naive_run(n as usize, seed, None, &defaults()).unwrap();
                assert_eq!(fast.steps, naive.steps);
                assert_eq!(fast.final_edges, naive.final_edges);
            }
        }
    }
}
