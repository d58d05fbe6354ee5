//! Checkable properties of the auxiliary graph, run against real subgrids.
//!
//! Each check enumerates the actual reachability edges of every block of a
//! decomposed grid and tests one structural fact exhaustively: crossing
//! symmetry and reverse-invariance, the swapped-endpoint edges implied by
//! a crossing pair, the closer-crossing implication, and the two-part
//! maximality of the non-crossing filter. The crossing predicate is a
//! parameter so a deliberately corrupted one can prove the checks have
//! teeth.

use crate::aux::{enumerate_block_edges, indices_cross, Block, Decomp};
use crate::grid::{GridGraph, VertexId};

/// Index-pair crossing predicate (positions from a common anchor).
pub type CrossFn = fn((u32, u32), (u32, u32)) -> bool;

/// Outcome of one lemma check over one grid's blocks.
#[derive(Clone, Debug)]
pub struct LemmaReport {
    pub name: &'static str,
    pub checked: u64,
    pub violations: u64,
    pub first_failure: Option<String>,
}

impl LemmaReport {
    fn new(name: &'static str) -> Self {
        LemmaReport {
            name,
            checked: 0,
            violations: 0,
            first_failure: None,
        }
    }

    pub fn ok(&self) -> bool {
        self.violations == 0
    }

    fn fail(&mut self, msg: String) {
        self.violations += 1;
        if self.first_failure.is_none() {
            self.first_failure = Some(msg);
        }
    }
}

/// Edges of one block as ccw position pairs, plus bit rows for O(1) edge
/// probes and word-parallel neighborhood tests.
struct BlockEdges {
    block: Block,
    pairs: Vec<(u32, u32)>,
    in_rows: Vec<u64>,
    out_rows: Vec<u64>,
    perim: usize,
    wpr: usize,
}

impl BlockEdges {
    fn collect(g: &GridGraph, block: Block) -> BlockEdges {
        let perim = block.perimeter_len() as usize;
        let wpr = perim.div_ceil(64);
        let members: Vec<VertexId> = (0..perim as u32).map(|p| block.vertex_at(p)).collect();
        let mut in_rows = vec![0u64; perim * wpr];
        let mut out_rows = vec![0u64; perim * wpr];
        let mut pairs = Vec::new();
        for (u, v) in enumerate_block_edges(g, &block, &members) {
            let p = block.position(u).unwrap() as usize;
            let q = block.position(v).unwrap() as usize;
            out_rows[p * wpr + (q >> 6)] |= 1u64 << (q & 63);
            in_rows[q * wpr + (p >> 6)] |= 1u64 << (p & 63);
            pairs.push((p as u32, q as u32));
        }
        BlockEdges {
            block,
            pairs,
            in_rows,
            out_rows,
            perim,
            wpr,
        }
    }

    #[inline]
    fn edge(&self, p: u32, q: u32) -> bool {
        self.out_rows[p as usize * self.wpr + (q as usize >> 6)] & (1u64 << (q & 63)) != 0
    }

    #[inline]
    fn in_row(&self, q: u32) -> &[u64] {
        &self.in_rows[q as usize * self.wpr..(q as usize + 1) * self.wpr]
    }
}

fn blocks_of_grid(g: &GridGraph, t: u32) -> Vec<Block> {
    Decomp::with_block_side(g.m(), t).blocks().collect()
}

/// Crossing is symmetric and invariant under edge reversal.
pub fn check_crossing_symmetry(g: &GridGraph, t: u32, cross: CrossFn) -> LemmaReport {
    let mut rep = LemmaReport::new("crossing symmetry/reverse-invariance");
    for block in blocks_of_grid(g, t) {
        let be = BlockEdges::collect(g, block);
        for (i, &e) in be.pairs.iter().enumerate() {
            for &f in &be.pairs[i + 1..] {
                rep.checked += 1;
                let c = cross(e, f);
                if c != cross(f, e)
                    || c != cross(e, (f.1, f.0))
                    || c != cross((e.1, e.0), f)
                {
                    rep.fail(format!(
                        "block ({},{}) edges {:?} {:?}: crossing not symmetric/reverse-invariant",
                        block.i, block.j, e, f
                    ));
                }
            }
        }
    }
    rep
}

/// When two real edges (u1,v1), (u2,v2) cross, the swapped edges (u1,v2)
/// and (u2,v1) exist as well.
pub fn check_swap_lemma(g: &GridGraph, t: u32, cross: CrossFn) -> LemmaReport {
    let mut rep = LemmaReport::new("crossing pair implies swapped edges");
    for block in blocks_of_grid(g, t) {
        let be = BlockEdges::collect(g, block);
        for (i, &(u1, v1)) in be.pairs.iter().enumerate() {
            for &(u2, v2) in &be.pairs[i + 1..] {
                if !cross((u1, v1), (u2, v2)) {
                    continue;
                }
                rep.checked += 1;
                if !be.edge(u1, v2) || !be.edge(u2, v1) {
                    rep.fail(format!(
                        "block ({},{}): ({u1},{v1}) x ({u2},{v2}) but a swapped edge is missing",
                        block.i, block.j
                    ));
                }
            }
        }
    }
    rep
}

/// When e1 and e2 both cross f = (x,y) and e1 is closer to x, the edge
/// (tail(e1), head(e2)) exists. Checked per f with prefix tail masks: the
/// tails of all strictly-closer crossers must be in-neighbors of every
/// later crosser's head.
pub fn check_closer_lemma(g: &GridGraph, t: u32, cross: CrossFn) -> LemmaReport {
    let mut rep = LemmaReport::new("closer-crossing implication");
    for block in blocks_of_grid(g, t) {
        let be = BlockEdges::collect(g, block);
        let perim = be.perim as u32;
        let wpr = be.wpr;
        let mut tails = vec![0u64; wpr];
        let mut missing = vec![0u64; wpr];
        for &(x, y) in &be.pairs {
            let f = (x, y);
            let rel = |p: u32| (p + perim - x) % perim;
            let mut crossers: Vec<(u32, u32, u32)> = be
                .pairs
                .iter()
                .copied()
                .filter(|&e| e != f && cross(e, f))
                .map(|(u, v)| (rel(u).min(rel(v)), u, v))
                .collect();
            crossers.sort_unstable();
            tails.iter_mut().for_each(|w| *w = 0);
            let mut i = 0;
            while i < crossers.len() {
                let c = crossers[i].0;
                let group_end = crossers[i..]
                    .iter()
                    .position(|&(cc, _, _)| cc != c)
                    .map_or(crossers.len(), |off| i + off);
                for &(_, _, v2) in &crossers[i..group_end] {
                    rep.checked += 1;
                    // every strictly-closer tail must reach v2 (u1 == v2
                    // holds trivially)
                    let in_row = be.in_row(v2);
                    let mut any = 0u64;
                    for wi in 0..wpr {
                        missing[wi] = tails[wi] & !in_row[wi];
                        any |= missing[wi];
                    }
                    if any != 0 {
                        for wi in 0..wpr {
                            let mut w = missing[wi];
                            while w != 0 {
                                let u1 = ((wi << 6) + w.trailing_zeros() as usize) as u32;
                                w &= w - 1;
                                if u1 != v2 {
                                    rep.fail(format!(
                                        "block ({},{}): closer crosser tail {u1} of f=({x},{y}) \
                                         has no edge to {v2}",
                                        block.i, block.j
                                    ));
                                }
                            }
                        }
                    }
                }
                for &(_, u1, _) in &crossers[i..group_end] {
                    tails[u1 as usize >> 6] |= 1u64 << (u1 & 63);
                }
                i = group_end;
            }
        }
    }
    rep
}

/// The minimal-index filter as an independent oracle: sweep undirected
/// intervals by ascending minimum index and keep an interval iff no
/// already-kept interval with a smaller minimum interleaves it.
pub fn greedy_noncrossing(pairs: &[(u32, u32)]) -> Vec<(u32, u32)> {
    let mut intervals: Vec<(u32, u32)> = pairs
        .iter()
        .map(|&(a, b)| (a.min(b), a.max(b)))
        .collect();
    intervals.sort_unstable();
    intervals.dedup();
    let mut kept: Vec<(u32, u32)> = Vec::new();
    for &(lo, hi) in &intervals {
        if !kept
            .iter()
            .any(|&(a, b)| a < lo && lo < b && b < hi)
        {
            kept.push((lo, hi));
        }
    }
    kept
}

/// Two-part maximality of the non-crossing filter: the kept set contains
/// no crossing pair, and every dropped edge is crossed by a kept edge.
pub fn check_mxplanar(g: &GridGraph, t: u32, cross: CrossFn) -> LemmaReport {
    let mut rep = LemmaReport::new("non-crossing filter maximality");
    for block in blocks_of_grid(g, t) {
        let be = BlockEdges::collect(g, block);
        let kept_edges = greedy_noncrossing(&be.pairs);
        let is_kept = |e: (u32, u32)| {
            let key = (e.0.min(e.1), e.0.max(e.1));
            kept_edges.binary_search(&key).is_ok()
        };
        for (i, &e) in kept_edges.iter().enumerate() {
            for &f in &kept_edges[i + 1..] {
                rep.checked += 1;
                if cross(e, f) {
                    rep.fail(format!(
                        "block ({},{}): kept edges {e:?} and {f:?} cross",
                        block.i, block.j
                    ));
                }
            }
        }
        for &e in &be.pairs {
            if is_kept(e) {
                continue;
            }
            rep.checked += 1;
            if !kept_edges.iter().any(|&f| cross(e, f)) {
                rep.fail(format!(
                    "block ({},{}): dropped edge {e:?} crossed by no kept edge",
                    block.i, block.j
                ));
            }
        }
    }
    rep
}

/// The honest crossing predicate.
pub fn real_cross(e: (u32, u32), f: (u32, u32)) -> bool {
    indices_cross(e, f)
}

/// A corrupted predicate for proving the checks can fail: skews the
/// answer by the tails' order, which breaks symmetry.
pub fn corrupted_cross(e: (u32, u32), f: (u32, u32)) -> bool {
    indices_cross(e, f) ^ (e.0 < f.0)
}
