//! Evolving graph state for the random greedy triangle-removal process.
//!
//! The state tracks, for every unordered vertex pair, the co-degree
//! `Y(u,v) = |N(u) ∩ N(v)|` (over all pairs, present edge or not), and keeps a
//! weighted index over pairs in which a present edge's slot carries weight
//! `Y(u,v)` and an absent pair carries 0. The index root therefore equals
//! `Σ_E Y_e = 3Q`, where `Q` is the number of triangles in the current graph,
//! and uniform triangle sampling is two-stage: draw an edge with probability
//! `Y_e / 3Q`, then a uniform common neighbor of its endpoints — each triangle
//! comes out with probability exactly `1/Q`.
//!
//! Layout notes, because the removal loop dominates entire runs:
//! * pair slots are row-major over `u < v` and never compacted, so slot
//!   indices are stable for the lifetime of a state;
//! * each slot packs co-degree (high 16 bits) and sampling weight (low 16
//!   bits) into one `u32`, halving random memory traffic in the update loop;
//! * the weight index is a depth-2 prefix-sum tree (leaf weights, block
//!   partial sums, root total): updates are O(1), draws are O(√P), and a run
//!   performs ~n³/2 updates but only one draw per step.

use thiserror::Error;

use crate::rng::RandomStream;

/// Hard cap so co-degrees fit the 16-bit pair fields (`Y ≤ n - 2`).
pub const MAX_VERTICES: usize = 65_536;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("vertex count must be at least 1")]
    ZeroVertices,
    #[error("vertex count {n} exceeds the supported maximum {max}")]
    TooManyVertices { n: usize, max: usize },
    #[error("process terminated: the graph is triangle-free")]
    ProcessTerminated,
    #[error("invalid triangle ({a}, {b}, {c}): edge ({u}, {v}) is not present")]
    InvalidTriangle { a: u32, b: u32, c: u32, u: u32, v: u32 },
    #[error("vertex pair must be distinct, got ({0}, {0})")]
    NotDistinct(u32),
    #[error("vertex {v} out of range for {n} vertices")]
    VertexOutOfRange { v: u32, n: usize },
    #[error("state inconsistency: {0}")]
    InvariantViolation(String),
}

/// A triangle with vertices kept sorted ascending.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triangle {
    a: u32,
    b: u32,
    c: u32,
}

impl Triangle {
    /// Sorts the vertices; panics if they are not pairwise distinct.
    pub fn new(x: u32, y: u32, z: u32) -> Self {
        let mut v = [x, y, z];
        v.sort_unstable();
        assert!(v[0] < v[1] && v[1] < v[2], "triangle vertices must be distinct");
        Triangle { a: v[0], b: v[1], c: v[2] }
    }

    pub fn a(&self) -> u32 {
        self.a
    }
    pub fn b(&self) -> u32 {
        self.b
    }
    pub fn c(&self) -> u32 {
        self.c
    }

    /// The three edges as sorted pairs.
    pub fn edges(&self) -> [(u32, u32); 3] {
        [(self.a, self.b), (self.b, self.c), (self.a, self.c)]
    }
}

/// What one removal did, with co-degrees captured *before* any edge left.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RemovalReceipt {
    pub triangle: Triangle,
    pub y_ab: u32,
    pub y_bc: u32,
    pub y_ac: u32,
    /// Change in the triangle count: `-(y_ab + y_bc + y_ac - 2)`. The three
    /// co-degrees double-count the removed triangle twice, hence the +2.
    pub dq: i64,
}

const WEIGHT_MASK: u32 = 0xFFFF;
const CODEGREE_UNIT: u32 = 1 << 16;

/// Graph state of the triangle-removal process on `n` vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphState {
    n: usize,
    /// Words per adjacency row.
    words: usize,
    /// Row-major adjacency bit rows, `n * words` words.
    adj: Vec<u64>,
    /// Presence bit per pair slot.
    edge_present: Vec<u64>,
    /// Per pair slot: co-degree in the high 16 bits, sampling weight in the
    /// low 16 bits (co-degree if the edge is present, else 0).
    pairs: Vec<u32>,
    /// Block partial sums of the weights; blocks are `1 << shift` slots.
    block: Vec<u64>,
    shift: u32,
    /// Root of the weight index: `Σ_E Y_e = 3Q`.
    total: u64,
    /// First slot of each row, plus a terminal sentinel.
    row_offset: Vec<usize>,
    /// Triangles currently present.
    q: u64,
    /// Removal steps performed.
    i: u64,
    /// Present edges.
    edges: u64,
}

impl GraphState {
    /// Builds the complete graph `K_n` with every pair at co-degree `n - 2`.
    pub fn init_complete(n: usize) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::ZeroVertices);
        }
        if n > MAX_VERTICES {
            return Err(GraphError::TooManyVertices { n, max: MAX_VERTICES });
        }
        let words = n.div_ceil(64);
        let slots = n * (n - 1) / 2;
        let y0 = (n as u32).saturating_sub(2);

        let mut adj = vec![u64::MAX; n * words];
        let tail = n % 64;
        for u in 0..n {
            let row = &mut adj[u * words..(u + 1) * words];
            if tail != 0 {
                *row.last_mut().unwrap() = (1u64 << tail) - 1;
            }
            row[u / 64] &= !(1u64 << (u % 64));
        }

        let mut edge_present = vec![u64::MAX; slots.div_ceil(64)];
        if slots % 64 != 0 {
            if let Some(last) = edge_present.last_mut() {
                *last = (1u64 << (slots % 64)) - 1;
            }
        }

        let pairs = vec![(y0 << 16) | y0; slots];

        // Block size ~ √slots keeps draw cost and block count balanced.
        let shift = if slots <= 1 {
            6
        } else {
            ((slots.ilog2() + 1) / 2).clamp(6, 16)
        };
        let bs = 1usize << shift;
        let nblocks = slots.div_ceil(bs).max(1);
        let mut block = vec![0u64; nblocks];
        for (b, sum) in block.iter_mut().enumerate() {
            let len = bs.min(slots - (b << shift).min(slots));
            *sum = len as u64 * u64::from(y0);
        }
        let total: u64 = block.iter().sum();

        let mut row_offset = Vec::with_capacity(n + 1);
        let mut off = 0usize;
        for u in 0..n {
            row_offset.push(off);
            off += n - 1 - u;
        }
        row_offset.push(off);
        debug_assert_eq!(off, slots);

        let nn = n as u128;
        let q = (nn * nn.saturating_sub(1) * nn.saturating_sub(2) / 6) as u64;
        debug_assert_eq!(total, 3 * q);

        Ok(GraphState {
            n,
            words,
            adj,
            edge_present,
            pairs,
            block,
            shift,
            total,
            row_offset,
            q,
            i: 0,
            edges: slots as u64,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    /// Removal steps performed so far.
    pub fn step_count(&self) -> u64 {
        self.i
    }

    /// Number of triangles in the current graph.
    pub fn triangle_count(&self) -> u64 {
        self.q
    }

    pub fn edge_count(&self) -> u64 {
        self.edges
    }

    /// Root of the weight index; equals `3 * triangle_count()` at all times.
    pub fn weight_total(&self) -> u64 {
        self.total
    }

    /// Canonical slot of pair `u < v`.
    #[inline]
    fn slot(&self, u: usize, v: usize) -> usize {
        debug_assert!(u < v && v < self.n);
        self.row_offset[u] + v - u - 1
    }

    #[inline]
    fn slot_unordered(&self, a: usize, b: usize) -> usize {
        if a < b {
            self.slot(a, b)
        } else {
            self.slot(b, a)
        }
    }

    /// Inverse of `slot`: the pair `(u, v)` with `u < v` stored at `s`.
    fn pair_of_slot(&self, s: usize) -> (usize, usize) {
        debug_assert!(s < *self.row_offset.last().unwrap());
        let u = self.row_offset.partition_point(|&off| off <= s) - 1;
        (u, u + 1 + s - self.row_offset[u])
    }

    #[inline]
    fn adj_bit(&self, u: usize, v: usize) -> bool {
        (self.adj[u * self.words + v / 64] >> (v % 64)) & 1 == 1
    }

    /// True iff edge `{u, v}` is present. `u == v` is never an edge.
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        assert!(u < self.n && v < self.n, "vertex out of range");
        u != v && self.adj_bit(u, v)
    }

    /// Co-degree of the pair (defined for all pairs, not just edges).
    pub fn codegree(&self, u: usize, v: usize) -> Result<u32, GraphError> {
        if u >= self.n {
            return Err(GraphError::VertexOutOfRange { v: u as u32, n: self.n });
        }
        if v >= self.n {
            return Err(GraphError::VertexOutOfRange { v: v as u32, n: self.n });
        }
        if u == v {
            return Err(GraphError::NotDistinct(u as u32));
        }
        Ok(self.pairs[self.slot_unordered(u, v)] >> 16)
    }

    /// Sampling weight currently stored for the pair's slot.
    pub fn slot_weight(&self, u: usize, v: usize) -> u32 {
        self.pairs[self.slot_unordered(u, v)] & WEIGHT_MASK
    }

    /// Copies all pair co-degrees out in slot order (instrumentation hook).
    pub fn copy_codegrees(&self, out: &mut Vec<u16>) {
        out.clear();
        out.extend(self.pairs.iter().map(|&p| (p >> 16) as u16));
    }

    /// Min and max co-degree over all pairs; `(0, 0)` when `n < 2`.
    pub fn codegree_extremes(&self) -> (u32, u32) {
        if self.pairs.is_empty() {
            return (0, 0);
        }
        let mut lo = u32::MAX;
        let mut hi = 0u32;
        for &p in &self.pairs {
            let y = p >> 16;
            lo = lo.min(y);
            hi = hi.max(y);
        }
        (lo, hi)
    }

    /// `Σ_E Y_e`, recomputed from the slots; equals `3 * triangle_count()`.
    pub fn sum_edge_codegrees(&self) -> u64 {
        self.pairs.iter().map(|&p| u64::from(p & WEIGHT_MASK)).sum()
    }

    /// Expected one-step change of the triangle count under uniform sampling:
    /// `E[ΔQ] = 2 - (1/Q) Σ_E Y_e²`.
    pub fn expected_delta_q(&self) -> Result<f64, GraphError> {
        if self.q == 0 {
            return Err(GraphError::ProcessTerminated);
        }
        let sum_sq: u128 = self
            .pairs
            .iter()
            .map(|&p| {
                let w = u128::from(p & WEIGHT_MASK);
                w * w
            })
            .sum();
        Ok(2.0 - (sum_sq as f64) / (self.q as f64))
    }

    /// Slot holding the `r`-th unit of weight (`r < weight_total()`).
    fn find_weight(&self, r: u64) -> usize {
        debug_assert!(r < self.total);
        let mut acc = 0u64;
        let mut b = 0usize;
        loop {
            let next = acc + self.block[b];
            if r < next {
                break;
            }
            acc = next;
            b += 1;
        }
        let mut rem = r - acc;
        let start = b << self.shift;
        let end = (start + (1 << self.shift)).min(self.pairs.len());
        for s in start..end {
            let w = u64::from(self.pairs[s] & WEIGHT_MASK);
            if rem < w {
                return s;
            }
            rem -= w;
        }
        unreachable!("block sums out of sync with slot weights");
    }

    /// `k`-th set bit (ascending) of `row(u) & row(v)`; `k` < co-degree.
    fn kth_common_neighbor(&self, u: usize, v: usize, mut k: usize) -> usize {
        let ru = &self.adj[u * self.words..(u + 1) * self.words];
        let rv = &self.adj[v * self.words..(v + 1) * self.words];
        for (w, (&a, &b)) in ru.iter().zip(rv).enumerate() {
            let mut word = a & b;
            let c = word.count_ones() as usize;
            if k < c {
                for _ in 0..k {
                    word &= word - 1;
                }
                return w * 64 + word.trailing_zeros() as usize;
            }
            k -= c;
        }
        unreachable!("co-degree out of sync with adjacency rows");
    }

    /// Draws a uniformly random triangle of the current graph.
    ///
    /// Two-stage: an edge with probability `Y_e / 3Q`, then a uniform common
    /// neighbor of its endpoints. The state is not modified.
    ///
    /// # Errors
    /// [`GraphError::ProcessTerminated`] once the graph is triangle-free.
    pub fn sample_uniform_triangle(
        &self,
        rng: &mut RandomStream,
    ) -> Result<Triangle, GraphError> {
        if self.q == 0 {
            return Err(GraphError::ProcessTerminated);
        }
        let r = rng.below(self.total);
        let s = self.find_weight(r);
        let (u, v) = self.pair_of_slot(s);
        let y = u64::from(self.pairs[s] & WEIGHT_MASK);
        debug_assert!(y > 0);
        let k = rng.below(y) as usize;
        let x = self.kth_common_neighbor(u, v, k);
        Ok(Triangle::new(u as u32, v as u32, x as u32))
    }

    /// Removes the triangle's three edges and updates every affected pair.
    ///
    /// All three edges are validated before anything mutates, so an invalid
    /// triangle leaves the state untouched.
    pub fn remove_triangle(&mut self, t: Triangle) -> Result<RemovalReceipt, GraphError> {
        let (a, b, c) = (t.a() as usize, t.b() as usize, t.c() as usize);
        if c >= self.n {
            return Err(GraphError::VertexOutOfRange { v: t.c(), n: self.n });
        }
        for (u, v) in t.edges() {
            if !self.adj_bit(u as usize, v as usize) {
                return Err(GraphError::InvalidTriangle { a: t.a(), b: t.b(), c: t.c(), u, v });
            }
        }

        let y_ab = self.pairs[self.slot(a, b)] >> 16;
        let y_bc = self.pairs[self.slot(b, c)] >> 16;
        let y_ac = self.pairs[self.slot(a, c)] >> 16;
        let dq = 2 - i64::from(y_ab) - i64::from(y_bc) - i64::from(y_ac);

        self.delete_edge(a, b);
        self.delete_edge(b, c);
        self.delete_edge(a, c);

        let q = self.q as i64 + dq;
        assert!(q >= 0, "triangle count went negative");
        self.q = q as u64;
        self.i += 1;
        debug_assert_eq!(self.total, 3 * self.q, "weight root diverged from 3Q");

        Ok(RemovalReceipt { triangle: t, y_ab, y_bc, y_ac, dq })
    }

    /// Deletes one present edge and maintains co-degrees and weights:
    /// the deleted slot is zeroed, and for each `w` still adjacent to one
    /// endpoint the pair with the other endpoint loses one common neighbor.
    fn delete_edge(&mut self, u: usize, v: usize) {
        debug_assert!(u != v && self.adj_bit(u, v));
        let s = self.slot_unordered(u, v);
        let w = u64::from(self.pairs[s] & WEIGHT_MASK);
        self.pairs[s] &= !WEIGHT_MASK;
        self.block[s >> self.shift] -= w;
        self.total -= w;
        self.edge_present[s / 64] &= !(1u64 << (s % 64));
        self.adj[u * self.words + v / 64] &= !(1u64 << (v % 64));
        self.adj[v * self.words + u / 64] &= !(1u64 << (u % 64));
        self.edges -= 1;
        self.decrement_pairs(u, v);
        self.decrement_pairs(v, u);
    }

    /// For every `w ∈ N(other)`: pair `{anchor, w}` loses one common
    /// neighbor (namely `other`). Called after the edge's adjacency bits are
    /// cleared, so `anchor ∉ N(other)` and the deleted slot is skipped.
    fn decrement_pairs(&mut self, anchor: usize, other: usize) {
        let shift = self.shift;
        for k in 0..self.words {
            let row_o = self.adj[other * self.words + k];
            if row_o == 0 {
                continue;
            }
            let row_a = self.adj[anchor * self.words + k];
            let base = k * 64;
            // Pairs that are present edges update weight, block and root too.
            let mut both = row_o & row_a;
            while both != 0 {
                let w = base + both.trailing_zeros() as usize;
                both &= both - 1;
                let s = self.slot_unordered(anchor, w);
                self.pairs[s] -= CODEGREE_UNIT | 1;
                self.block[s >> shift] -= 1;
                self.total -= 1;
            }
            let mut only = row_o & !row_a;
            while only != 0 {
                let w = base + only.trailing_zeros() as usize;
                only &= only - 1;
                let s = self.slot_unordered(anchor, w);
                self.pairs[s] -= CODEGREE_UNIT;
            }
        }
    }

    /// Recomputes the co-degree of one pair from the adjacency rows.
    pub fn recompute_codegree(&self, u: usize, v: usize) -> u32 {
        let ru = &self.adj[u * self.words..(u + 1) * self.words];
        let rv = &self.adj[v * self.words..(v + 1) * self.words];
        ru.iter().zip(rv).map(|(&a, &b)| (a & b).count_ones()).sum()
    }

    /// Cross-checks the incremental bookkeeping against from-scratch scans.
    ///
    /// Always checked: edge count vs. `C(n,2) - 3i` and adjacency popcounts,
    /// presence bits vs. adjacency, weight/co-degree slot consistency, block
    /// sums, and root = `3Q`. With `deep`, every pair's co-degree is
    /// recomputed from the adjacency rows (O(n² · n/64)).
    pub fn check_invariants(&self, deep: bool) -> Result<(), GraphError> {
        let fail = |msg: String| Err(GraphError::InvariantViolation(msg));
        let nn = self.n as u64;
        let expect_edges = nn * (nn - 1) / 2 - 3 * self.i;
        if self.edges != expect_edges {
            return fail(format!("edge count {} != C(n,2) - 3i = {}", self.edges, expect_edges));
        }
        let bit_count: u64 = self.adj.iter().map(|w| u64::from(w.count_ones())).sum();
        if bit_count != 2 * self.edges {
            return fail(format!("adjacency popcount {bit_count} != 2 * {}", self.edges));
        }
        let mut sum_weights = 0u64;
        for s in 0..self.pairs.len() {
            let (u, v) = self.pair_of_slot(s);
            let present = self.adj_bit(u, v);
            if present != ((self.edge_present[s / 64] >> (s % 64)) & 1 == 1) {
                return fail(format!("presence bit of slot {s} disagrees with adjacency"));
            }
            if self.adj_bit(u, v) != self.adj_bit(v, u) {
                return fail(format!("asymmetric adjacency at ({u}, {v})"));
            }
            let cg = self.pairs[s] >> 16;
            let w = self.pairs[s] & WEIGHT_MASK;
            let expect_w = if present { cg } else { 0 };
            if w != expect_w {
                return fail(format!("slot {s} weight {w} != expected {expect_w}"));
            }
            sum_weights += u64::from(w);
            if deep {
                let true_cg = self.recompute_codegree(u, v);
                if cg != true_cg {
                    return fail(format!("pair ({u}, {v}) co-degree {cg} != recomputed {true_cg}"));
                }
            }
        }
        if sum_weights != self.total {
            return fail(format!("slot weights sum {sum_weights} != root {}", self.total));
        }
        if self.total != 3 * self.q {
            return fail(format!("root {} != 3Q = {}", self.total, 3 * self.q));
        }
        let bs = 1usize << self.shift;
        for (b, &sum) in self.block.iter().enumerate() {
            let start = b * bs;
            let end = (start + bs).min(self.pairs.len());
            let leafs: u64 =
                self.pairs[start..end].iter().map(|&p| u64::from(p & WEIGHT_MASK)).sum();
            if leafs != sum {
                return fail(format!("block {b} sum {sum} != leaf sum {leafs}"));
            }
        }
        Ok(())
    }

    /// Popcount-verifies `count` randomly chosen pairs (cheap spot check for
    /// large states where a full deep scan is too slow to run per checkpoint).
    pub fn verify_sampled_pairs(
        &self,
        rng: &mut RandomStream,
        count: usize,
    ) -> Result<(), GraphError> {
        if self.pairs.is_empty() {
            return Ok(());
        }
        for _ in 0..count {
            let s = rng.below(self.pairs.len() as u64) as usize;
            let (u, v) = self.pair_of_slot(s);
            let stored = self.pairs[s] >> 16;
            let actual = self.recompute_codegree(u, v);
            if stored != actual {
                return Err(GraphError::InvariantViolation(format!(
                    "pair ({u}, {v}) co-degree {stored} != recomputed {actual}"
                )));
            }
        }
        Ok(())
    }

    /// Bytes held by the state's allocations (documented memory constant:
    /// 4 B per pair for the slot table plus adjacency and presence bits,
    /// ≈ 2.2 n² bytes total).
    pub fn memory_bytes(&self) -> usize {
        std::mem::size_of::<Self>()
            + self.adj.capacity() * 8
            + self.edge_present.capacity() * 8
            + self.pairs.capacity() * 4
            + self.block.capacity() * 8
            + self.row_offset.capacity() * std::mem::size_of::<usize>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;

    fn complete(n: usize) -> GraphState {
        GraphState::init_complete(n).unwrap()
    }

    #[test]
    fn init_rejects_degenerate_sizes() {
        assert_eq!(GraphState::init_complete(0), Err(GraphError::ZeroVertices));
        assert!(GraphState::init_complete(MAX_VERTICES + 1).is_err());
    }

    #[test]
    fn init_small_complete_graphs() {
        let g = complete(5);
        assert_eq!(g.triangle_count(), 10);
        assert_eq!(g.edge_count(), 10);
        assert_eq!(g.weight_total(), 30);
        for u in 0..5 {
            for v in (u + 1)..5 {
                assert_eq!(g.codegree(u, v).unwrap(), 3);
                assert!(g.has_edge(u, v));
            }
        }
        assert_eq!(complete(3).triangle_count(), 1);
        assert_eq!(complete(2).triangle_count(), 0);
        assert_eq!(complete(2).codegree(0, 1).unwrap(), 0);
        assert_eq!(complete(1).edge_count(), 0);
        complete(1).check_invariants(true).unwrap();
        complete(2).check_invariants(true).unwrap();
    }

    #[test]
    fn codegree_rejects_equal_vertices() {
        let g = complete(4);
        assert_eq!(g.codegree(2, 2), Err(GraphError::NotDistinct(2)));
        assert!(matches!(g.codegree(0, 9), Err(GraphError::VertexOutOfRange { .. })));
    }

    #[test]
    fn slot_roundtrip() {
        for n in [2usize, 3, 5, 17, 64, 130] {
            let g = complete(n);
            let mut s = 0;
            for u in 0..n {
                for v in (u + 1)..n {
                    assert_eq!(g.slot(u, v), s);
                    assert_eq!(g.pair_of_slot(s), (u, v));
                    s += 1;
                }
            }
            assert_eq!(s, n * (n - 1) / 2);
        }
    }

    #[test]
    fn sampling_k3_gives_the_only_triangle() {
        let g = complete(3);
        let mut rng = RandomStream::from_seed(1);
        for _ in 0..20 {
            assert_eq!(g.sample_uniform_triangle(&mut rng).unwrap(), Triangle::new(0, 1, 2));
        }
    }

    #[test]
    fn sampling_terminated_state_errors_and_leaves_state_alone() {
        let g = complete(2);
        let before = g.clone();
        let mut rng = RandomStream::from_seed(1);
        assert_eq!(g.sample_uniform_triangle(&mut rng), Err(GraphError::ProcessTerminated));
        assert_eq!(g, before);
    }

    #[test]
    fn sampling_does_not_mutate_state() {
        let mut g = complete(6);
        let mut rng = RandomStream::from_seed(7);
        let t = g.sample_uniform_triangle(&mut rng).unwrap();
        g.remove_triangle(t).unwrap();
        let before = g.clone();
        for _ in 0..200 {
            g.sample_uniform_triangle(&mut rng).unwrap();
        }
        assert_eq!(g, before);
    }

    #[test]
    fn removal_from_k4_leaves_a_star() {
        let mut g = complete(4);
        let receipt = g.remove_triangle(Triangle::new(0, 1, 2)).unwrap();
        assert_eq!((receipt.y_ab, receipt.y_bc, receipt.y_ac), (2, 2, 2));
        assert_eq!(receipt.dq, -4);
        assert_eq!(g.triangle_count(), 0);
        assert_eq!(g.edge_count(), 3);
        for v in 0..3 {
            assert!(g.has_edge(v, 3), "spoke ({v}, 3) must survive");
        }
        assert!(!g.has_edge(0, 1) && !g.has_edge(1, 2) && !g.has_edge(0, 2));
        assert_eq!(g.codegree(0, 3).unwrap(), 0);
        assert_eq!(g.codegree(0, 1).unwrap(), 1);
        g.check_invariants(true).unwrap();
    }

    #[test]
    fn removal_from_k5_leaves_three_triangles_sharing_an_edge() {
        let mut g = complete(5);
        g.remove_triangle(Triangle::new(0, 1, 2)).unwrap();
        assert_eq!(g.triangle_count(), 3);
        assert_eq!(g.weight_total(), 9);
        let ts = oracle::enumerate_triangles(&g).triangles;
        assert_eq!(
            ts,
            vec![Triangle::new(0, 3, 4), Triangle::new(1, 3, 4), Triangle::new(2, 3, 4)]
        );
        // Every survivor shares edge (3, 4); removing any one ends the process.
        let mut g2 = g.clone();
        g2.remove_triangle(Triangle::new(1, 3, 4)).unwrap();
        assert_eq!(g2.triangle_count(), 0);
        assert_eq!(g2.edge_count(), 4);
        g2.check_invariants(true).unwrap();
    }

    #[test]
    fn invalid_triangle_leaves_state_untouched() {
        let mut g = complete(4);
        g.remove_triangle(Triangle::new(0, 1, 2)).unwrap();
        let before = g.clone();
        let err = g.remove_triangle(Triangle::new(0, 1, 3)).unwrap_err();
        assert_eq!(err, GraphError::InvalidTriangle { a: 0, b: 1, c: 3, u: 0, v: 1 });
        assert_eq!(g, before);
        assert!(matches!(
            g.remove_triangle(Triangle::new(0, 1, 9)),
            Err(GraphError::VertexOutOfRange { .. })
        ));
        assert_eq!(g, before);
    }

    #[test]
    fn expected_delta_q_on_complete_graphs() {
        assert_eq!(complete(4).expected_delta_q().unwrap(), -4.0);
        assert_eq!(complete(5).expected_delta_q().unwrap(), -7.0);
        assert_eq!(complete(2).expected_delta_q(), Err(GraphError::ProcessTerminated));
    }

    #[test]
    fn expected_delta_q_matches_exhaustive_average() {
        // E[ΔQ] must equal the mean of dq over all current triangles.
        let mut g = complete(9);
        let mut rng = RandomStream::from_seed(3);
        for _ in 0..4 {
            let t = g.sample_uniform_triangle(&mut rng).unwrap();
            g.remove_triangle(t).unwrap();
        }
        let ts = oracle::enumerate_triangles(&g).triangles;
        assert_eq!(ts.len() as u64, g.triangle_count());
        let mut sum_dq = 0i64;
        for t in &ts {
            let y: i64 = t
                .edges()
                .iter()
                .map(|&(u, v)| i64::from(g.codegree(u as usize, v as usize).unwrap()))
                .sum();
            sum_dq += 2 - y;
        }
        let oracle_avg = sum_dq as f64 / ts.len() as f64;
        let got = g.expected_delta_q().unwrap();
        assert!((got - oracle_avg).abs() <= 1e-9 * (1.0 + got.abs()));
    }

    #[test]
    fn sum_edge_codegrees_tracks_3q() {
        let mut g = complete(5);
        assert_eq!(g.sum_edge_codegrees(), 30);
        g.remove_triangle(Triangle::new(0, 1, 2)).unwrap();
        assert_eq!(g.sum_edge_codegrees(), 9);
        assert_eq!(g.sum_edge_codegrees(), 3 * g.triangle_count());
    }

    #[test]
    fn weight_search_agrees_with_linear_scan() {
        let mut g = complete(6);
        let mut rng = RandomStream::from_seed(11);
        let t = g.sample_uniform_triangle(&mut rng).unwrap();
        g.remove_triangle(t).unwrap();
        for r in 0..g.weight_total() {
            let s = g.find_weight(r);
            // Linear-scan oracle over slot weights.
            let mut rem = r;
            let mut expect = usize::MAX;
            for (idx, &p) in g.pairs.iter().enumerate() {
                let w = u64::from(p & WEIGHT_MASK);
                if rem < w {
                    expect = idx;
                    break;
                }
                rem -= w;
            }
            assert_eq!(s, expect, "search disagrees at r = {r}");
        }
    }

    #[test]
    fn two_stage_probability_is_one_over_q_per_triangle() {
        let mut g = complete(7);
        let mut rng = RandomStream::from_seed(5);
        for _ in 0..2 {
            let t = g.sample_uniform_triangle(&mut rng).unwrap();
            g.remove_triangle(t).unwrap();
        }
        let q = g.triangle_count() as f64;
        let total = g.weight_total() as f64;
        for t in oracle::enumerate_triangles(&g).triangles {
            let mut p = 0.0;
            for (u, v) in t.edges() {
                let w = f64::from(g.slot_weight(u as usize, v as usize));
                let y = f64::from(g.codegree(u as usize, v as usize).unwrap());
                assert_eq!(w, y, "edge weight must equal co-degree on present edges");
                p += (w / total) * (1.0 / y);
            }
            assert!((p - 1.0 / q).abs() < 1e-12);
        }
    }

    // Drive seeded runs and cross-check every step against from-scratch
    // recomputation; also checks per-pair co-degree monotonicity.
    #[test]
    fn incremental_state_matches_recomputation_along_runs() {
        for &(n, seed) in &[(8usize, 1u64), (16, 2), (40, 3), (64, 4)] {
            let mut g = complete(n);
            let mut rng = RandomStream::from_seed(seed);
            let mut prev = Vec::new();
            g.copy_codegrees(&mut prev);
            while g.triangle_count() > 0 {
                let t = g.sample_uniform_triangle(&mut rng).unwrap();
                g.remove_triangle(t).unwrap();
                g.check_invariants(true).unwrap();
                let mut now = Vec::new();
                g.copy_codegrees(&mut now);
                assert!(
                    prev.iter().zip(&now).all(|(&a, &b)| b <= a),
                    "co-degree increased at n = {n}"
                );
                prev = now;
            }
            assert_eq!(g.weight_total(), 0);
            assert!(oracle::enumerate_triangles(&g).triangles.is_empty());
        }
    }

    #[test]
    fn memory_accounting_stays_within_documented_constant() {
        for &n in &[64usize, 256, 1024] {
            let g = complete(n);
            assert!(
                g.memory_bytes() <= 5 * n * n + 4096,
                "state for n = {n} uses {} bytes",
                g.memory_bytes()
            );
        }
    }
}
