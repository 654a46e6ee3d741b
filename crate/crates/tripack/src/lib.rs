//! Random greedy triangle packing on the complete graph.
//!
//! The process starts from K_n and repeatedly removes the three edges of a
//! triangle chosen uniformly at random among all remaining triangles, until
//! the graph is triangle-free. This crate simulates that process at scale
//! (exact uniform sampling in ~O(√(n²)) per draw, O(1) bookkeeping per
//! co-degree update), verifies the tracked identities and trajectory
//! envelopes at checkpoints, and estimates how the terminal edge count
//! scales with n via seeded Monte Carlo sweeps.
//!
//! Module map:
//! * [`graph`] — the evolving graph state: adjacency bit rows, per-pair
//!   co-degrees, and the weighted index that makes uniform triangle
//!   sampling exact and fast.
//! * [`process`] — drives a run from K_n to termination with reproducible
//!   randomness and checkpoint snapshots.
//! * [`trajectory`] — idealized curves p(t), y(t), q(t), the envelope width
//!   f(t), and the three-valued envelope verdicts.
//! * [`oracle`] — brute-force reference engine (explicit triangle
//!   enumeration, ≤ 64 vertices) the fast engine is validated against.
//! * [`stats`] — chi-square machinery for the uniformity and
//!   distribution-equivalence tests.
//! * [`harness`] — sweeps over a size grid, JSONL/CSV serialization, and
//!   the scaling-exponent fit.
//! * [`verify`] — the self-check battery behind `tripack verify`.
//! * [`rng`] — seeded random streams and the sweep seed-derivation scheme.

pub mod graph;
pub mod harness;
pub mod oracle;
pub mod process;
pub mod rng;
pub mod stats;
pub mod trajectory;
pub mod verify;
