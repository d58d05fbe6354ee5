//! Pseudoseparators: maximal non-crossing subgraph, per-block
//! triangulation, separator vertices, shadow edges, and the strip /
//! component machinery that makes the divide step work.
//!
//! A pseudoseparator of a vertex-induced subgraph `H` of the auxiliary
//! graph is a subgraph `C` such that deleting `C`'s vertices and every
//! edge crossing an edge of `C` leaves only small connected components.
//! Unlike an ordinary separator, `C`'s edges do the heavy lifting: an edge
//! with a large crossing set slices through the non-planar bundle of
//! parallel reachability edges inside a block.

use std::collections::BTreeMap;
use std::rc::Rc;

use thiserror::Error;

use crate::aux::{AuxId, Block, Decomp, Membership};
use crate::backend::{BlockMatrix, EdgeBackend};
use crate::bits::BitSet;
use crate::grid::VertexId;
use crate::meter::Channel;
use crate::sep::{planar_separator, SepGraph};

#[derive(Debug, Error)]
pub enum PsepError {
    #[error(
        "pseudoseparator bound violated after repair: component of {witness} has {size} vertices (bound {bound:.1})"
    )]
    BoundViolated {
        witness: VertexId,
        size: u64,
        bound: f64,
    },
    #[error(transparent)]
    Sep(#[from] crate::sep::SepError),
}

/// Shared mutable run state: the metered workspace plus query counters.
#[derive(Default)]
pub struct RunCtx {
    pub ws: crate::meter::Workspace,
    pub queries: u64,
    pub aux_depth_max: u32,
    pub grid_depth_max: u32,
    /// Internal work counters (not part of the metrics schema).
    pub n_prepares: u64,
    pub n_markings: u64,
    pub n_sweeps: u64,
    pub n_batches: u64,
    pub n_block_solves: u64,
    pub n_window_reach: u64,
}

/// Per-block working data for one frame (one vertex-induced subgraph `H`):
/// the solved boundary matrix, the member positions, and the straddle-min
/// table backing the maximal non-crossing filter. Charged to the `Conn`
/// channel as implicit-graph access state.
pub struct BlockCtx {
    pub block: Block,
    pub perim: u32,
    pub wpr: usize,
    pub mat: Rc<BlockMatrix>,
    /// Member-masked adjacency rows (out and in), one row per position.
    masked_out: Vec<u64>,
    masked_in: Vec<u64>,
    /// Sorted ccw positions of frame members on this block's perimeter.
    pub mpos: Vec<u32>,
    /// Bit mask over positions of the members.
    pub mmask: Vec<u64>,
    /// For each position a: the smallest b such that some frame edge
    /// {x, b} has x < a < b, or u32::MAX. An edge (lo, hi) is kept by
    /// the non-crossing filter iff farr[lo] >= hi.
    pub farr: Vec<u32>,
    /// Aux id per perimeter position.
    pub ids: Vec<u32>,
}

impl BlockCtx {
    /// Undirected H-partners of position `p` (out ∪ in, members only).
    pub fn partners_into(&self, p: u32, dst: &mut Vec<u64>) {
        dst.clear();
        dst.extend_from_slice(self.out_partners(p));
        for (d, i) in dst.iter_mut().zip(self.in_partners(p)) {
            *d |= i;
        }
    }

    /// Member-masked out-row of `p`.
    #[inline]
    pub fn out_partners(&self, p: u32) -> &[u64] {
        &self.masked_out[p as usize * self.wpr..(p as usize + 1) * self.wpr]
    }

    /// Member-masked in-row of `p`.
    #[inline]
    pub fn in_partners(&self, p: u32) -> &[u64] {
        &self.masked_in[p as usize * self.wpr..(p as usize + 1) * self.wpr]
    }

    pub fn out_partners_into(&self, p: u32, dst: &mut Vec<u64>) {
        dst.clear();
        dst.extend_from_slice(self.out_partners(p));
    }

    pub fn in_partners_into(&self, p: u32, dst: &mut Vec<u64>) {
        dst.clear();
        dst.extend_from_slice(self.in_partners(p));
    }

    #[inline]
    pub fn is_member(&self, p: u32) -> bool {
        self.mmask[p as usize >> 6] & (1u64 << (p & 63)) != 0
    }

    /// Maximal non-crossing filter: whether the undirected edge between
    /// positions `lo < hi` survives (no kept edge with a strictly smaller
    /// minimum index crosses it). Filtering against kept edges rather
    /// than all edges makes the set maximal: every dropped edge is crossed
    /// by a kept one.
    #[inline]
    pub fn kept(&self, a: u32, b: u32) -> bool {
        let (lo, hi) = (a.min(b), a.max(b));
        self.farr[lo as usize] >= hi
    }

    /// Member following `p` counter-clockwise (cyclic), when >= 2 members.
    pub fn next_member(&self, p: u32) -> Option<u32> {
        if self.mpos.len() < 2 {
            return None;
        }
        match self.mpos.binary_search(&p) {
            Ok(i) => Some(self.mpos[(i + 1) % self.mpos.len()]),
            Err(_) => None,
        }
    }

    fn words(&self) -> usize {
        self.mpos.len() + self.mmask.len() + self.farr.len() + self.ids.len()
            + self.masked_out.len() + self.masked_in.len()
    }
}

/// Frame-wide block contexts, built eagerly for every block holding at
/// least one member.
pub struct FrameCtx {
    per_block: BTreeMap<(u32, u32), BlockCtx>,
    charged: usize,
}

impl FrameCtx {
    pub fn build(
        decomp: &Decomp,
        members: &Membership,
        be: &mut dyn EdgeBackend,
        rc: &mut RunCtx,
    ) -> FrameCtx {
        let mut per_block = BTreeMap::new();
        let mut charged = 0usize;
        for block in decomp.blocks() {
            let perim = block.perimeter_len();
            let ids = decomp.block_pos_ids(block.i, block.j);
            let mut mpos: Vec<u32> = Vec::new();
            for p in 0..perim {
                if members.contains(AuxId(ids[p as usize])) {
                    mpos.push(p);
                }
            }
            if mpos.is_empty() {
                continue;
            }
            let mat = be.matrix(&block, rc);
            rc.queries += 1;
            let wpr = mat.words_per_row;
            let mut mmask = vec![0u64; wpr];
            for &p in &mpos {
                mmask[p as usize >> 6] |= 1u64 << (p & 63);
            }
            let np = perim as usize;
            let mut masked_out = vec![0u64; np * wpr];
            let mut masked_in = vec![0u64; np * wpr];
            for &p in &mpos {
                let p = p as usize;
                for wi in 0..wpr {
                    masked_out[p * wpr + wi] = mat.out_row(p as u32)[wi] & mmask[wi];
                    masked_in[p * wpr + wi] = mat.in_row(p as u32)[wi] & mmask[wi];
                }
            }
            let farr = straddle_table(&masked_out, &masked_in, &mmask, &mpos, perim);
            let ctx = BlockCtx {
                block,
                perim,
                wpr,
                mat,
                masked_out,
                masked_in,
                mpos,
                mmask,
                farr,
                ids: ids.to_vec(),
            };
            charged += ctx.words();
            per_block.insert((block.i, block.j), ctx);
        }
        rc.ws.charge(charged, Channel::Conn);
        FrameCtx { per_block, charged }
    }

    pub fn ctx(&self, bi: u32, bj: u32) -> Option<&BlockCtx> {
        self.per_block.get(&(bi, bj))
    }

    pub fn blocks(&self) -> impl Iterator<Item = &BlockCtx> {
        self.per_block.values()
    }

    pub fn release(self, rc: &mut RunCtx) {
        rc.ws.release(self.charged, Channel::Conn);
    }
}

/// Sweep-computed straddle minima: farr[a] = min over member edges {x, y}
/// (either direction, x < a < y) of y.
fn straddle_table(
    masked_out: &[u64],
    masked_in: &[u64],
    mmask: &[u64],
    mpos: &[u32],
    perim: u32,
) -> Vec<u32> {
    let n = perim as usize;
    let mut farr = vec![u32::MAX; n];
    if mpos.len() < 2 {
        return farr;
    }
    let mut refcnt = vec![0u32; n];
    let mut active = BitSet::new(n);
    let wpr = mmask.len();
    let mut row = vec![0u64; wpr];
    for lo in 0..n {
        if lo > 0 {
            let a = lo - 1;
            if mmask[a >> 6] & (1u64 << (a & 63)) != 0 {
                // open kept edges whose minimum endpoint is a; dropped
                // edges never suppress anything, which is what makes the
                // kept set maximal
                row.copy_from_slice(&masked_out[a * wpr..(a + 1) * wpr]);
                for (d, i) in row.iter_mut().zip(&masked_in[a * wpr..(a + 1) * wpr]) {
                    *d |= i;
                }
                for wi in 0..wpr {
                    let mut w = row[wi];
                    while w != 0 {
                        let b = (wi << 6) + w.trailing_zeros() as usize;
                        w &= w - 1;
                        if b > lo && farr[lo - 1] >= b as u32 {
                            if refcnt[b] == 0 {
                                active.set(b);
                            }
                            refcnt[b] += 1;
                        }
                    }
                }
            }
        }
        // edges ending here are no longer open
        if refcnt[lo] > 0 {
            refcnt[lo] = 0;
            active.clear_bit(lo);
        }
        if let Some(b) = active.next_set_bit(lo + 1) {
            farr[lo] = b as u32;
        }
    }
    farr
}

/// Per-block triangulated disk: the kept (real) chords plus hull
/// completions and fan edges, all as undirected position pairs.
#[derive(Clone, Debug, Default)]
pub struct BlockSkeleton {
    pub real: Vec<(u32, u32)>,
    pub tri: Vec<(u32, u32)>,
}

/// Whole-frame skeleton, one triangulated disk per occupied block.
pub struct PlanarSkeleton {
    pub blocks: Vec<(Block, BlockSkeleton)>,
}

/// Kept chords of one block (undirected, deduplicated, min-position
/// first), in ascending order.
pub fn block_real_edges(ctx: &BlockCtx) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    let mut row = Vec::new();
    for &a in &ctx.mpos {
        ctx.partners_into(a, &mut row);
        for wi in 0..row.len() {
            let mut w = row[wi];
            while w != 0 {
                let b = ((wi << 6) + w.trailing_zeros() as usize) as u32;
                w &= w - 1;
                if b > a && ctx.kept(a, b) {
                    out.push((a, b));
                }
            }
        }
    }
    out
}

/// Triangulate one block's disk: close the boundary cycle between
/// consecutive members, then fan every interior face of size > 3 from its
/// lowest-position vertex. Faces with fewer than three distinct vertices
/// are left alone.
pub fn triangulate_block(ctx: &BlockCtx) -> BlockSkeleton {
    let mut sk = BlockSkeleton {
        real: block_real_edges(ctx),
        tri: Vec::new(),
    };
    let k = ctx.mpos.len();
    if k < 2 {
        return sk;
    }
    let real_set: std::collections::BTreeSet<(u32, u32)> = sk.real.iter().copied().collect();
    // boundary cycle: v to the next member of H counter-clockwise
    let hull_pairs: Vec<(u32, u32)> = (0..k)
        .map(|i| {
            let a = ctx.mpos[i];
            let b = ctx.mpos[(i + 1) % k];
            (a.min(b), a.max(b))
        })
        .collect();
    for &(a, b) in hull_pairs.iter().take(if k == 2 { 1 } else { k }) {
        if !real_set.contains(&(a, b)) && !sk.tri.contains(&(a, b)) {
            sk.tri.push((a, b));
        }
    }
    if k < 4 {
        return sk;
    }

    // face walk over hull + chords; members in convex position
    let rank: BTreeMap<u32, u32> = ctx.mpos.iter().enumerate().map(|(r, &p)| (p, r as u32)).collect();
    let mut und: Vec<(u32, u32)> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for &(a, b) in hull_pairs.iter().chain(sk.real.iter()) {
        let ra = rank[&a.min(b)];
        let rb = rank[&a.max(b)];
        if ra != rb && seen.insert((ra.min(rb), ra.max(rb))) {
            und.push((ra.min(rb), ra.max(rb)));
        }
    }
    // rotation: neighbors of r sorted by (nb - r) mod k, darts indexed
    let mut rot: Vec<Vec<(u32, u32, u32)>> = vec![Vec::new(); k]; // (relpos, nb, dart)
    let mut darts: Vec<(u32, u32)> = Vec::with_capacity(2 * und.len());
    for &(ra, rb) in &und {
        let d0 = darts.len() as u32;
        darts.push((ra, rb));
        darts.push((rb, ra));
        rot[ra as usize].push(((rb + k as u32 - ra) % k as u32, rb, d0));
        rot[rb as usize].push(((ra + k as u32 - rb) % k as u32, ra, d0 + 1));
    }
    for r in rot.iter_mut() {
        r.sort_unstable();
    }

    let mut visited = vec![false; darts.len()];
    for start in 0..darts.len() as u32 {
        if visited[start as usize] {
            continue;
        }
        let mut face: Vec<u32> = Vec::new();
        let mut d = start;
        loop {
            visited[d as usize] = true;
            let (u, v) = darts[d as usize];
            face.push(u);
            // successor: from v, take the neighbor just before u in ccw order
            let list = &rot[v as usize];
            let relu = (u + k as u32 - v) % k as u32;
            let i = list
                .binary_search_by_key(&relu, |e| e.0)
                .expect("dart present in rotation");
            let j = (i + list.len() - 1) % list.len();
            d = list[j].2;
            if d == start {
                break;
            }
        }
        if face.len() < 3 {
            continue;
        }
        // interior faces traverse ranks ccw: exactly one cyclic descent
        let descents = face
            .iter()
            .zip(face.iter().cycle().skip(1))
            .filter(|(a, b)| a > b)
            .count();
        if descents != 1 {
            continue; // outer face
        }
        if face.len() == 3 {
            continue;
        }
        let (mi, _) = face
            .iter()
            .enumerate()
            .min_by_key(|(_, &r)| r)
            .expect("nonempty face");
        let fl = face.len();
        for off in 2..fl - 1 {
            let a = face[mi];
            let b = face[(mi + off) % fl];
            let pa = ctx.mpos[a as usize];
            let pb = ctx.mpos[b as usize];
            sk.tri.push((pa.min(pb), pa.max(pb)));
        }
    }
    sk.tri.sort_unstable();
    sk.tri.dedup();
    sk
}

/// Triangulated skeleton of the whole frame.
pub fn triangulate(fctx: &FrameCtx) -> PlanarSkeleton {
    PlanarSkeleton {
        blocks: fctx
            .blocks()
            .map(|ctx| (ctx.block, triangulate_block(ctx)))
            .collect(),
    }
}

/// One directed pseudoseparator edge, block-local.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CEdge {
    pub bi: u32,
    pub bj: u32,
    pub u_pos: u32,
    pub v_pos: u32,
    pub shadow: bool,
}

impl CEdge {
    #[inline]
    pub fn interval(&self) -> (u32, u32) {
        (self.u_pos.min(self.v_pos), self.u_pos.max(self.v_pos))
    }
}

/// The pseudoseparator `C`: separator vertices plus shadow vertices, and
/// the separator-induced / shadow edges. Vertices inserted later by the
/// engine (query endpoints) join as isolated vertices.
pub struct Pseudoseparator {
    pub verts: Vec<AuxId>,
    pub vset: BitSet,
    pub edges: Vec<CEdge>,
    /// Crossing intervals per block, for strip tests.
    pub intervals: BTreeMap<(u32, u32), Vec<(u32, u32)>>,
    pub sep_size: usize,
    pub n_shadows: usize,
    charged: usize,
}

impl Pseudoseparator {
    pub fn size(&self) -> usize {
        self.verts.len() + self.edges.len()
    }

    pub fn contains(&self, id: AuxId) -> bool {
        self.vset.get(id.0 as usize)
    }

    pub fn add_isolated(&mut self, id: AuxId) {
        if !self.contains(id) {
            self.vset.set(id.0 as usize);
            self.verts.push(id);
        }
    }

    /// Does the undirected edge (a,b) in block (bi,bj) cross some C-edge?
    pub fn edge_crossed(&self, bi: u32, bj: u32, a: u32, b: u32) -> bool {
        let (lo, hi) = (a.min(b), a.max(b));
        match self.intervals.get(&(bi, bj)) {
            None => false,
            Some(iv) => iv
                .iter()
                .any(|&(x, y)| (x < lo && lo < y && y < hi) || (lo < x && x < hi && hi < y)),
        }
    }

    pub fn core_words(&self) -> usize {
        self.verts.len() + self.edges.len() * 2 + self.vset.word_count()
    }

    /// Charge the finished structure (after endpoint insertion) to core.
    pub fn charge_core(&mut self, rc: &mut RunCtx) {
        debug_assert_eq!(self.charged, 0);
        self.charged = self.core_words();
        rc.ws.charge(self.charged, Channel::Core);
    }

    pub fn release(self, rc: &mut RunCtx) {
        rc.ws.release(self.charged, Channel::Core);
    }
}

/// Separator view: boundary-cycle links plus kept chords. Fan edges are
/// omitted here; they only reconnect vertices of one face, and the builder
/// re-verifies component sizes(and repairs) after the fact.
struct SkeletonView<'a> {
    decomp: &'a Decomp,
    members: &'a Membership,
    fctx: &'a FrameCtx,
    restrict: Option<&'a BitSet>,
    n: usize,
}

impl<'a> SepGraph for SkeletonView<'a> {
    fn len(&self) -> usize {
        self.n
    }

    fn is_vertex(&self, v: usize) -> bool {
        let id = AuxId(v as u32);
        self.members.contains(id) && self.restrict.map_or(true, |r| r.get(v))
    }

    fn neighbors(&self, v: usize, f: &mut dyn FnMut(usize)) {
        let vert = self.decomp.vertex_of(AuxId(v as u32));
        let mut row = Vec::new();
        for block in self.decomp.blocks_of(vert) {
            let Some(ctx) = self.fctx.ctx(block.i, block.j) else {
                continue;
            };
            let p = block.position(vert).expect("perimeter vertex");
            if !ctx.is_member(p) {
                continue;
            }
            if let Some(np) = ctx.next_member(p) {
                f(ctx.ids[np as usize] as usize);
            }
            if let Ok(i) = ctx.mpos.binary_search(&p) {
                let prev = ctx.mpos[(i + ctx.mpos.len() - 1) % ctx.mpos.len()];
                if prev != p {
                    f(ctx.ids[prev as usize] as usize);
                }
            }
            ctx.partners_into(p, &mut row);
            for wi in 0..row.len() {
                let mut w = row[wi];
                while w != 0 {
                    let b = ((wi << 6) + w.trailing_zeros() as usize) as u32;
                    w &= w - 1;
                    if b != p && ctx.kept(p, b) {
                        f(ctx.ids[b as usize] as usize);
                    }
                }
            }
        }
    }
}

/// Strip adjacency: H-edges minus everything crossing `C`, among
/// non-`C` members.
pub fn strip_neighbors(
    decomp: &Decomp,
    _members: &Membership,
    c: &Pseudoseparator,
    fctx: &FrameCtx,
    id: AuxId,
    f: &mut dyn FnMut(AuxId),
) {
    let vert = decomp.vertex_of(id);
    let mut row = Vec::new();
    for block in decomp.blocks_of(vert) {
        let Some(ctx) = fctx.ctx(block.i, block.j) else {
            continue;
        };
        let p = match block.position(vert) {
            Ok(p) if ctx.is_member(p) => p,
            _ => continue,
        };
        ctx.partners_into(p, &mut row);
        for wi in 0..row.len() {
            let mut w = row[wi];
            while w != 0 {
                let b = ((wi << 6) + w.trailing_zeros() as usize) as u32;
                w &= w - 1;
                if b == p {
                    continue;
                }
                let nb = AuxId(ctx.ids[b as usize]);
                if c.contains(nb) || c.edge_crossed(block.i, block.j, p, b) {
                    continue;
                }
                f(nb);
            }
        }
    }
}

/// Connected components of the strip, each labeled by its lowest vertex
/// (row-major order). Conn-channel state.
pub struct StripLabels {
    /// Component index per aux id; u32::MAX outside the strip.
    pub label: Vec<u32>,
    /// Lowest vertex of each component.
    pub lowest: Vec<VertexId>,
    pub sizes: Vec<u32>,
    /// Members per component.
    pub comp_members: Vec<Vec<AuxId>>,
    charged: usize,
}

impl StripLabels {
    pub fn component_of(&self, id: AuxId) -> Option<u32> {
        match self.label[id.0 as usize] {
            u32::MAX => None,
            l => Some(l),
        }
    }

    pub fn release(self, rc: &mut RunCtx) {
        rc.ws.release(self.charged, Channel::Conn);
    }
}

/// Label the components of `strip(H, C)` by BFS over the strip adjacency.
pub fn label_strip_components(
    decomp: &Decomp,
    members: &Membership,
    c: &Pseudoseparator,
    fctx: &FrameCtx,
    rc: &mut RunCtx,
) -> StripLabels {
    let n = decomp.aux_count() as usize;
    let mut label = vec![u32::MAX; n];
    let mut lowest: Vec<VertexId> = Vec::new();
    let mut sizes: Vec<u32> = Vec::new();
    let mut comp_members: Vec<Vec<AuxId>> = Vec::new();
    let mut queue: Vec<AuxId> = Vec::new();

    let in_strip = |id: AuxId, members: &Membership, c: &Pseudoseparator| {
        members.contains(id) && !c.contains(id)
    };

    for start in 0..n as u32 {
        let sid = AuxId(start);
        if label[start as usize] != u32::MAX || !in_strip(sid, members, c) {
            continue;
        }
        let comp = lowest.len() as u32;
        let mut low = decomp.vertex_of(sid);
        let mut count = 0u32;
        let mut mem: Vec<AuxId> = Vec::new();
        queue.clear();
        queue.push(sid);
        label[start as usize] = comp;
        while let Some(v) = queue.pop() {
            count += 1;
            let vv = decomp.vertex_of(v);
            if vv < low {
                low = vv;
            }
            mem.push(v);
            strip_neighbors(decomp, members, c, fctx, v, &mut |nb| {
                if label[nb.0 as usize] == u32::MAX {
                    label[nb.0 as usize] = comp;
                    queue.push(nb);
                }
            });
        }
        lowest.push(low);
        sizes.push(count);
        comp_members.push(mem);
    }
    let charged = n + lowest.len() * 2 + sizes.len() + comp_members.iter().map(|m| m.len()).sum::<usize>();
    rc.ws.charge(charged, Channel::Conn);
    StripLabels {
        label,
        lowest,
        sizes,
        comp_members,
        charged,
    }
}

/// Scan for the up-to-four shadow edges around a triangulation edge
/// (a, b) of a block: the nearest member H-edges flanking the virtual
/// edge at both endpoints.
fn add_shadows(
    _decomp: &Decomp,
    ctx: &BlockCtx,
    a: u32,
    b: u32,
    verts: &mut Vec<AuxId>,
    vset: &mut BitSet,
    edges: &mut Vec<CEdge>,
    n_shadows: &mut usize,
) {
    let perim = ctx.perim;
    let mut row = Vec::new();
    for (v, w) in [(a, b), (b, a)] {
        // indices measured counter-clockwise from v; the tri edge sits at p
        let p = (w + perim - v) % perim;
        ctx.partners_into(v, &mut row);
        let mut best_lo: Option<u32> = None; // largest rel < p
        let mut best_hi: Option<u32> = None; // smallest rel > p
        for wi in 0..row.len() {
            let mut word = row[wi];
            while word != 0 {
                let x = ((wi << 6) + word.trailing_zeros() as usize) as u32;
                word &= word - 1;
                if x == v {
                    continue;
                }
                let rel = (x + perim - v) % perim;
                if rel < p && best_lo.map_or(true, |r| rel > r) {
                    best_lo = Some(rel);
                }
                if rel > p && best_hi.map_or(true, |r| rel < r) {
                    best_hi = Some(rel);
                }
            }
        }
        for rel in [best_lo, best_hi].into_iter().flatten() {
            let x = (v + rel) % perim;
            let xid = AuxId(ctx.ids[x as usize]);
            if !vset.get(xid.0 as usize) {
                vset.set(xid.0 as usize);
                verts.push(xid);
            }
            for (s, t) in [(v, x), (x, v)] {
                if ctx.mat.edge(s, t) {
                    let e = CEdge {
                        bi: ctx.block.i,
                        bj: ctx.block.j,
                        u_pos: s,
                        v_pos: t,
                        shadow: true,
                    };
                    if !edges.contains(&e) {
                        edges.push(e);
                        *n_shadows += 1;
                    }
                }
            }
        }
    }
}

/// Assemble `C` from a separator vertex set: the kept H-edges of the
/// triangulated skeleton induced on `S`, plus shadows for its
/// triangulation-only edges.
fn assemble(
    decomp: &Decomp,
    fctx: &FrameCtx,
    sep: &[u32],
    n: usize,
) -> (Vec<AuxId>, BitSet, Vec<CEdge>, usize) {
    let mut vset = BitSet::new(n);
    let mut verts: Vec<AuxId> = Vec::with_capacity(sep.len());
    for &v in sep {
        vset.set(v as usize);
        verts.push(AuxId(v));
    }
    let mut edges: Vec<CEdge> = Vec::new();
    let mut n_shadows = 0usize;

    for ctx in fctx.blocks() {
        // separator members on this block
        let spos: Vec<u32> = ctx
            .mpos
            .iter()
            .copied()
            .filter(|&p| sep.binary_search(&ctx.ids[p as usize]).is_ok())
            .collect();
        if spos.len() < 2 {
            continue;
        }
        let sset: std::collections::BTreeSet<u32> = spos.iter().copied().collect();
        let sk = triangulate_block(ctx);
        for &(x, y) in &sk.real {
            if sset.contains(&x) && sset.contains(&y) {
                for (s, t) in [(x, y), (y, x)] {
                    if ctx.mat.edge(s, t) {
                        edges.push(CEdge {
                            bi: ctx.block.i,
                            bj: ctx.block.j,
                            u_pos: s,
                            v_pos: t,
                            shadow: false,
                        });
                    }
                }
            }
        }
        for &(x, y) in &sk.tri {
            if sset.contains(&x) && sset.contains(&y) {
                add_shadows(decomp, ctx, x, y, &mut verts, &mut vset, &mut edges, &mut n_shadows);
            }
        }
    }
    (verts, vset, edges, n_shadows)
}

fn build_intervals(edges: &[CEdge]) -> BTreeMap<(u32, u32), Vec<(u32, u32)>> {
    let mut intervals: BTreeMap<(u32, u32), Vec<(u32, u32)>> = BTreeMap::new();
    for e in edges {
        let iv = e.interval();
        let entry = intervals.entry((e.bi, e.bj)).or_default();
        if !entry.contains(&iv) {
            entry.push(iv);
        }
    }
    intervals
}

/// Build an `h^(1-beta)`-pseudoseparator of the frame. The separator is
/// cut on the block-disk skeleton; the result is then verified against the
/// strip components and repaired (by cutting oversized components
/// directly) until the bound holds.
pub fn build_pseudoseparator(
    decomp: &Decomp,
    members: &Membership,
    h: u64,
    beta: f64,
    fctx: &FrameCtx,
    rc: &mut RunCtx,
) -> Result<Pseudoseparator, PsepError> {
    let n = decomp.aux_count() as usize;
    let bound = (h as f64).powf(1.0 - beta);
    let sep_target = ((bound / 2.0).floor() as usize).max(1);

    let view = SkeletonView {
        decomp,
        members,
        fctx,
        restrict: None,
        n,
    };
    let mut sep = planar_separator(&view, sep_target, &mut rc.ws)?;
    let mut sep_rounds = 0usize;

    loop {
        let (verts, vset, edges, n_shadows) = assemble(decomp, fctx, &sep, n);
        let c = Pseudoseparator {
            sep_size: sep.len(),
            n_shadows,
            intervals: build_intervals(&edges),
            verts,
            vset,
            edges,
            charged: 0,
        };
        let labels = label_strip_components(decomp, members, &c, fctx, rc);
        let worst = labels
            .sizes
            .iter()
            .enumerate()
            .max_by_key(|(_, &s)| s)
            .map(|(i, &s)| (i, s));
        match worst {
            Some((wi, ws_)) if (ws_ as f64) > bound => {
                if sep_rounds >= 8 {
                    let witness = labels.lowest[wi];
                    labels.release(rc);
                    return Err(PsepError::BoundViolated {
                        witness,
                        size: ws_ as u64,
                        bound,
                    });
                }
                // cut every oversized strip component directly
                let mut extra: Vec<u32> = Vec::new();
                for (ci, &size) in labels.sizes.iter().enumerate() {
                    if (size as f64) > bound {
                        let mut restrict = BitSet::new(n);
                        for id in &labels.comp_members[ci] {
                            restrict.set(id.0 as usize);
                        }
                        let sv = StripRepairView {
                            decomp,
                            members,
                            c: &c,
                            fctx,
                            restrict,
                            n,
                        };
                        extra.extend(planar_separator(&sv, sep_target, &mut rc.ws)?);
                    }
                }
                labels.release(rc);
                if extra.is_empty() {
                    // cannot happen: an oversized component always yields a cut
                    sep_rounds = 8;
                    continue;
                }
                sep.extend(extra);
                sep.sort_unstable();
                sep.dedup();
                sep_rounds += 1;
            }
            _ => {
                labels.release(rc);
                return Ok(c);
            }
        }
    }
}

/// Repair view: the strip adjacency restricted to one oversized
/// component. Cutting here always makes progress.
struct StripRepairView<'a> {
    decomp: &'a Decomp,
    members: &'a Membership,
    c: &'a Pseudoseparator,
    fctx: &'a FrameCtx,
    restrict: BitSet,
    n: usize,
}

impl<'a> SepGraph for StripRepairView<'a> {
    fn len(&self) -> usize {
        self.n
    }
    fn is_vertex(&self, v: usize) -> bool {
        self.restrict.get(v)
    }
    fn neighbors(&self, v: usize, f: &mut dyn FnMut(usize)) {
        strip_neighbors(self.decomp, self.members, self.c, self.fctx, AuxId(v as u32), &mut |nb| {
            f(nb.0 as usize)
        });
    }
}

/// Verification report for one (H, C, bound) triple.
#[derive(Clone, Debug, serde::Serialize)]
pub struct PsepReport {
    pub h: u64,
    pub c_size: usize,
    pub sep_size: usize,
    pub n_shadows: usize,
    pub max_component: u64,
    pub bound: f64,
    pub pass: bool,
    pub component_violations: usize,
    pub edge_violations: usize,
    pub witness: Option<String>,
}

/// Check (a) every strip component has at most `bound` vertices, and
/// (b) every H-edge joining two distinct components crosses a C-edge or
/// touches C.
pub fn verify_pseudoseparator(
    decomp: &Decomp,
    members: &Membership,
    c: &Pseudoseparator,
    bound: f64,
    fctx: &FrameCtx,
    rc: &mut RunCtx,
) -> PsepReport {
    let labels = label_strip_components(decomp, members, c, fctx, rc);
    let max_component = labels.sizes.iter().copied().max().unwrap_or(0) as u64;
    let mut component_violations = 0usize;
    let mut witness = None;
    for (i, &s) in labels.sizes.iter().enumerate() {
        if (s as f64) > bound {
            component_violations += 1;
            if witness.is_none() {
                witness = Some(format!(
                    "component of {} has {} vertices",
                    labels.lowest[i], s
                ));
            }
        }
    }
    // every H-edge between distinct surviving components must cross C
    let mut edge_violations = 0usize;
    let mut row = Vec::new();
    for ctx in fctx.blocks() {
        for &a in &ctx.mpos {
            let aid = AuxId(ctx.ids[a as usize]);
            let Some(la) = labels.component_of(aid) else {
                continue;
            };
            ctx.out_partners_into(a, &mut row);
            for wi in 0..row.len() {
                let mut w = row[wi];
                while w != 0 {
                    let b = ((wi << 6) + w.trailing_zeros() as usize) as u32;
                    w &= w - 1;
                    if b == a {
                        continue;
                    }
                    let bid = AuxId(ctx.ids[b as usize]);
                    let Some(lb) = labels.component_of(bid) else {
                        continue;
                    };
                    if la != lb && !c.edge_crossed(ctx.block.i, ctx.block.j, a, b) {
                        edge_violations += 1;
                        if witness.is_none() {
                            witness = Some(format!(
                                "edge {} -> {} joins two components uncrossed",
                                decomp.vertex_of(aid),
                                decomp.vertex_of(bid)
                            ));
                        }
                    }
                }
            }
        }
    }
    labels.release(rc);
    PsepReport {
        h: members.count(decomp),
        c_size: c.size(),
        sep_size: c.sep_size,
        n_shadows: c.n_shadows,
        max_component,
        bound,
        pass: component_violations == 0 && edge_violations == 0,
        component_violations,
        edge_violations,
        witness,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{EdgeBackend, OracleBackend};
    use crate::grid::{generate_random, GridGraph};

    fn full_frame(g: &GridGraph, t: u32) -> (Decomp, Membership) {
        (Decomp::with_block_side(g.m(), t), Membership::All)
    }

    fn with_fctx<R>(
        g: &GridGraph,
        t: u32,
        f: impl FnOnce(&Decomp, &Membership, &FrameCtx, &mut RunCtx) -> R,
    ) -> R {
        let (d, members) = full_frame(g, t);
        let mut rc = RunCtx::default();
        let mut be = OracleBackend::new(g);
        let fctx = FrameCtx::build(&d, &members, &mut be, &mut rc);
        let r = f(&d, &members, &fctx, &mut rc);
        fctx.release(&mut rc);
        be.release(&mut rc);
        assert_eq!(rc.ws.live(crate::meter::Channel::Conn), 0);
        r
    }

    /// All directed edges of a block as position pairs (test-side).
    fn block_pairs(ctx: &BlockCtx) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        let mut row = Vec::new();
        for &a in &ctx.mpos {
            ctx.out_partners_into(a, &mut row);
            for wi in 0..row.len() {
                let mut w = row[wi];
                while w != 0 {
                    let b = ((wi << 6) + w.trailing_zeros() as usize) as u32;
                    w &= w - 1;
                    if b != a {
                        out.push((a, b));
                    }
                }
            }
        }
        out
    }

    #[test]
    fn kept_filter_matches_brute_force() {
        for seed in 0..20u64 {
            let g = generate_random(16, 0.45 + 0.02 * (seed % 5) as f64, seed);
            for t in [4u32, 8] {
                with_fctx(&g, t, |_d, _m, fctx, _rc| {
                    for ctx in fctx.blocks() {
                        let pairs = block_pairs(ctx);
                        let oracle = crate::lemmas::greedy_noncrossing(&pairs);
                        for &(p, q) in &pairs {
                            let key = (p.min(q), p.max(q));
                            let brute = oracle.binary_search(&key).is_ok();
                            assert_eq!(
                                ctx.kept(p, q),
                                brute,
                                "seed {seed} t={t} block ({},{}) edge ({p},{q})",
                                ctx.block.i,
                                ctx.block.j
                            );
                        }
                    }
                });
            }
        }
    }

    #[test]
    fn no_crossing_pair_all_kept() {
        // two disjoint arcs on the bottom side: nothing interleaves
        let mut g = GridGraph::new(8);
        g.add_edge(crate::grid::VertexId::new(0, 0), crate::grid::Direction::East);
        g.add_edge(crate::grid::VertexId::new(3, 0), crate::grid::Direction::East);
        with_fctx(&g, 8, |_d, _m, fctx, _rc| {
            let ctx = fctx.ctx(0, 0).unwrap();
            let pairs = block_pairs(ctx);
            assert_eq!(pairs.len(), 2);
            for &(p, q) in &pairs {
                assert!(ctx.kept(p, q));
            }
        });
    }

    /// Independent face walk over a disk given as chords among circle
    /// positions; returns the length of every interior face.
    fn interior_face_lengths(k: usize, und: &[(u32, u32)]) -> Vec<usize> {
        let mut rot: Vec<Vec<(u32, u32, u32)>> = vec![Vec::new(); k];
        let mut darts: Vec<(u32, u32)> = Vec::new();
        for &(a, b) in und {
            let d0 = darts.len() as u32;
            darts.push((a, b));
            darts.push((b, a));
            rot[a as usize].push(((b + k as u32 - a) % k as u32, b, d0));
            rot[b as usize].push(((a + k as u32 - b) % k as u32, a, d0 + 1));
        }
        for r in rot.iter_mut() {
            r.sort_unstable();
        }
        let mut seen = vec![false; darts.len()];
        let mut lens = Vec::new();
        for s in 0..darts.len() as u32 {
            if seen[s as usize] {
                continue;
            }
            let mut face = Vec::new();
            let mut d = s;
            loop {
                seen[d as usize] = true;
                let (u, v) = darts[d as usize];
                face.push(u);
                let list = &rot[v as usize];
                let relu = (u + k as u32 - v) % k as u32;
                let i = list.binary_search_by_key(&relu, |e| e.0).unwrap();
                d = list[(i + list.len() - 1) % list.len()].2;
                if d == s {
                    break;
                }
            }
            let descents = face
                .iter()
                .zip(face.iter().cycle().skip(1))
                .filter(|(a, b)| a > b)
                .count();
            if descents == 1 {
                lens.push(face.len());
            }
        }
        lens
    }

    #[test]
    fn triangulation_faces_and_euler() {
        for seed in 0..20u64 {
            let g = generate_random(16, 0.5, seed + 40);
            for t in [4u32, 8] {
                with_fctx(&g, t, |_d, _m, fctx, _rc| {
                    for ctx in fctx.blocks() {
                        let sk = triangulate_block(ctx);
                        let k = ctx.mpos.len();
                        if k < 3 {
                            continue;
                        }
                        let rank: BTreeMap<u32, u32> = ctx
                            .mpos
                            .iter()
                            .enumerate()
                            .map(|(r, &p)| (p, r as u32))
                            .collect();
                        let mut und: Vec<(u32, u32)> = Vec::new();
                        let mut seen = std::collections::BTreeSet::new();
                        for &(a, b) in sk.real.iter().chain(sk.tri.iter()) {
                            let (ra, rb) = (rank[&a], rank[&b]);
                            let key = (ra.min(rb), ra.max(rb));
                            if seen.insert(key) {
                                und.push(key);
                            }
                        }
                        // no two disk edges may cross
                        for (i, &(a, b)) in und.iter().enumerate() {
                            for &(c, d) in &und[i + 1..] {
                                assert!(
                                    !crate::aux::indices_cross((a, b), (c, d)),
                                    "seed {seed} t={t}: crossing disk edges"
                                );
                            }
                        }
                        // planar edge bound
                        assert!(und.len() <= 3 * k.saturating_sub(2));
                        if k >= 3 {
                            assert!(und.len() <= 3 * k - 6 + k); // chords + hull
                        }
                        // every interior face is a triangle
                        for len in interior_face_lengths(k, &und) {
                            assert_eq!(len, 3, "seed {seed} t={t} k={k}");
                        }
                    }
                });
            }
        }
    }

    #[test]
    fn boundary_cycle_added_for_chordless_block() {
        // members with no internal edges: triangulation closes the hull
        // and fans the polygon
        let g = GridGraph::new(8);
        with_fctx(&g, 4, |_d, _m, fctx, _rc| {
            let ctx = fctx.ctx(0, 0).unwrap();
            let sk = triangulate_block(ctx);
            assert!(sk.real.is_empty());
            let k = ctx.mpos.len();
            assert_eq!(k, 16);
            // hull (16) + fan of the 16-gon (13)
            assert_eq!(sk.tri.len(), 16 + 13);
        });
    }

    #[test]
    fn strip_and_components_against_union_find() {
        for seed in 0..15u64 {
            let g = generate_random(16, 0.5, seed + 7);
            with_fctx(&g, 4, |d, m, fctx, rc| {
                let c = build_pseudoseparator(d, m, d.aux_count(), 0.3, fctx, rc).unwrap();
                let labels = label_strip_components(d, m, &c, fctx, rc);

                // independent union-find over explicitly enumerated strip edges
                let n = d.aux_count() as usize;
                let mut parent: Vec<u32> = (0..n as u32).collect();
                fn find(p: &mut Vec<u32>, x: u32) -> u32 {
                    let mut r = x;
                    while p[r as usize] != r {
                        r = p[r as usize];
                    }
                    let mut c = x;
                    while p[c as usize] != c {
                        let nx = p[c as usize];
                        p[c as usize] = r;
                        c = nx;
                    }
                    r
                }
                for ctx in fctx.blocks() {
                    for (a, b) in block_pairs(ctx) {
                        let ia = d.aux_id(ctx.block.vertex_at(a)).unwrap();
                        let ib = d.aux_id(ctx.block.vertex_at(b)).unwrap();
                        if c.contains(ia)
                            || c.contains(ib)
                            || c.edge_crossed(ctx.block.i, ctx.block.j, a, b)
                        {
                            continue;
                        }
                        let (ra, rb) = (find(&mut parent, ia.0), find(&mut parent, ib.0));
                        if ra != rb {
                            parent[ra as usize] = rb;
                        }
                    }
                }
                for v in 0..n as u32 {
                    let id = AuxId(v);
                    if !m.contains(id) || c.contains(id) {
                        assert_eq!(labels.component_of(id), None);
                        continue;
                    }
                    let l = labels.component_of(id).expect("strip vertex labeled");
                    // same component iff same union-find root
                    for w in 0..n as u32 {
                        let wid = AuxId(w);
                        if w > v && m.contains(wid) && !c.contains(wid) {
                            let same_uf = find(&mut parent, v) == find(&mut parent, w);
                            let same_lbl = labels.component_of(wid) == Some(l);
                            assert_eq!(same_uf, same_lbl, "seed {seed} {v} {w}");
                        }
                    }
                }
                labels.release(rc);
                c.release(rc);
            });
        }
    }

    #[test]
    fn empty_separator_on_connected_frame_fails_verify() {
        // C = empty on a well-connected aux graph: one giant component
        let g = generate_random(12, 0.9, 5);
        with_fctx(&g, 4, |d, m, fctx, rc| {
            let c = Pseudoseparator {
                verts: Vec::new(),
                vset: BitSet::new(d.aux_count() as usize),
                edges: Vec::new(),
                intervals: BTreeMap::new(),
                sep_size: 0,
                n_shadows: 0,
                charged: 0,
            };
            let rep = verify_pseudoseparator(d, m, &c, 4.0, fctx, rc);
            assert!(!rep.pass);
            assert!(rep.component_violations > 0);
            assert!(rep.witness.is_some());
        });
    }

    #[test]
    fn full_separator_passes_vacuously() {
        let g = generate_random(12, 0.6, 9);
        with_fctx(&g, 4, |d, m, fctx, rc| {
            let n = d.aux_count() as usize;
            let mut vset = BitSet::new(n);
            let mut verts = Vec::new();
            for v in 0..n as u32 {
                vset.set(v as usize);
                verts.push(AuxId(v));
            }
            let c = Pseudoseparator {
                verts,
                vset,
                edges: Vec::new(),
                intervals: BTreeMap::new(),
                sep_size: n,
                n_shadows: 0,
                charged: 0,
            };
            let rep = verify_pseudoseparator(d, m, &c, 1.0, fctx, rc);
            assert!(rep.pass);
            assert_eq!(rep.max_component, 0);
        });
    }

    #[test]
    fn built_pseudoseparator_verifies_on_fuzz() {
        let beta = 0.2f64;
        for seed in 0..30u64 {
            let m = 12 + (seed % 3) as u32 * 6;
            let p = [0.4, 0.55, 0.7][(seed % 3) as usize];
            let g = generate_random(m, p, seed);
            let t = (m as f64).powf(0.8).round() as u32;
            with_fctx(&g, t, |d, mm, fctx, rc| {
                let h = d.aux_count();
                let bound = (h as f64).powf(1.0 - beta);
                let c = build_pseudoseparator(d, mm, h, beta, fctx, rc).unwrap();
                let rep = verify_pseudoseparator(d, mm, &c, bound, fctx, rc);
                assert!(
                    rep.pass,
                    "seed {seed} m={m} p={p}: {:?}",
                    rep.witness
                );
                c.release(rc);
            });
        }
    }

    #[test]
    fn shadows_have_anchored_endpoints() {
        for seed in 0..10u64 {
            let g = generate_random(18, 0.6, seed + 70);
            with_fctx(&g, 6, |d, mm, fctx, rc| {
                let h = d.aux_count();
                let c = build_pseudoseparator(d, mm, h, 0.25, fctx, rc).unwrap();
                for e in c.edges.iter().filter(|e| e.shadow) {
                    let block = d.block(e.bi, e.bj);
                    let u = d.aux_id(block.vertex_at(e.u_pos)).unwrap();
                    let v = d.aux_id(block.vertex_at(e.v_pos)).unwrap();
                    assert!(c.contains(u) && c.contains(v));
                }
                c.release(rc);
            });
        }
    }
}
