//! The reachability engine: the marking loop over a pseudoseparator with
//! recursion over strip components, and the grid-level recursion that
//! answers implicit edge queries.
//!
//! `aux_multi` is the workhorse. Given a vertex-induced subgraph of the
//! auxiliary graph, a set of initially-marked vertices and a set of
//! targets, it builds a pseudoseparator `C` (plus the endpoints as
//! isolated vertices), keeps a visited table over `C`, and sweeps: a
//! `C`-vertex is marked when some marked vertex reaches it through a
//! single strip component; a `C`-edge cell stores the tail of the closest
//! confirmed edge crossing it. Reachability checks inside a component
//! recurse on the component plus the relevant marked vertices and targets.
//! Sub-queries against one component are batched into a single
//! multi-source, multi-target recursive call per sweep; this marks a
//! superset of the per-witness formulation each sweep, which is sound
//! (only reachable vertices are ever marked) and reaches the same
//! fixpoint.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::rc::Rc;

use thiserror::Error;

use crate::aux::{AuxId, Decomp, Membership};
use crate::backend::{solve_block_by_dfs, BlockMatrix, EdgeBackend, OracleBackend};
use crate::bits::BitSet;
use crate::grid::{GridError, GridGraph, GridView, VertexId, DIRECTIONS};
use crate::meter::{Channel, Metrics};
use crate::psep::{build_pseudoseparator, label_strip_components, FrameCtx, PsepError, RunCtx};

/// Practical floors under the analytical base-case thresholds: below these
/// sizes the recursion cannot shrink and direct search is free anyway.
const AUX_BASE_FLOOR: u64 = 96;
const GRID_BASE_FLOOR: u32 = 8;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("recursion depth {depth} exceeds configured max_depth {max}; check alpha/beta/max_depth")]
    DepthExceeded { depth: u32, max: u32 },
    #[error(transparent)]
    Psep(#[from] PsepError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BackendKind {
    Oracle,
    Recursive,
}

#[derive(Clone, Copy, Debug)]
pub struct EngineConfig {
    /// Decomposition exponent: block side is about m^(1-alpha).
    pub alpha: f64,
    /// Separator exponent: components shrink to h^(1-beta).
    pub beta: f64,
    /// Base-case threshold exponent (h or side <= m^base_exponent).
    pub base_exponent: f64,
    pub backend: BackendKind,
    pub early_exit: bool,
    /// Guard on the component-recursion depth.
    pub max_depth: u32,
}

/// Analytical depth bound: ceil(3 / log2(1/(1-beta))).
pub fn depth_bound(beta: f64) -> u32 {
    (3.0 / (1.0 / (1.0 - beta)).log2()).ceil() as u32
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            alpha: 0.2,
            beta: 0.2,
            base_exponent: 0.125,
            backend: BackendKind::Oracle,
            early_exit: true,
            max_depth: depth_bound(0.2),
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(format!("alpha must be in (0,1), got {}", self.alpha));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(format!("beta must be in (0,1), got {}", self.beta));
        }
        let need = depth_bound(self.beta);
        if self.max_depth < need {
            return Err(format!(
                "max_depth {} below the analytical bound {need}",
                self.max_depth
            ));
        }
        Ok(())
    }

    fn aux_base_threshold(&self, global_m: u32) -> u64 {
        ((global_m as f64).powf(self.base_exponent).ceil() as u64).max(AUX_BASE_FLOOR)
    }

    fn grid_base_side(&self, global_m: u32) -> u32 {
        ((global_m as f64).powf(self.base_exponent).ceil() as u32).max(GRID_BASE_FLOOR)
    }
}

/// Immutable per-query environment at one grid level.
pub struct AuxEnv<'g> {
    pub grid: &'g GridGraph,
    pub decomp: Decomp,
    pub cfg: EngineConfig,
    /// Side of the original top-level grid (base-case thresholds use it).
    pub global_m: u32,
}

// ---------------------------------------------------------------------------
// aux_multi: Algorithm 1 generalized to marked-set sources and target sets
// ---------------------------------------------------------------------------

/// Frame state reusable across queries on the same subgraph: block
/// contexts, the pseudoseparator, and the strip component labels. Query
/// endpoints join the visited table as extra cells per run; they are left
/// in the strip, which can only mark more (soundly) per sweep and reaches
/// the same fixpoint.
pub enum PreparedAux {
    /// Below the base threshold: queries run as direct searches.
    Base,
    Frame(Box<PreparedFrame>),
}

pub struct PreparedFrame {
    fctx: FrameCtx,
    c: crate::psep::Pseudoseparator,
    labels: crate::psep::StripLabels,
    cverts: Vec<AuxId>,
    h: u64,
    /// Sub-frames per strip component, prepared lazily on first use and
    /// reused across sweeps and queries. A sub-frame covers the component
    /// plus every target ever batched to it; it is rebuilt when a new
    /// target falls outside.
    comp_frames: std::cell::RefCell<BTreeMap<u32, CompFrame>>,
    /// Candidate components per probed vertex (frame-constant).
    cand_memo: std::cell::RefCell<BTreeMap<AuxId, Rc<Vec<u32>>>>,
    /// Crossing candidates per C-edge in closeness order, grown on
    /// demand; frame-constant, so scans become bit tests over a prefix.
    edge_cands: std::cell::RefCell<Vec<EdgeCands>>,
    cand_words: std::cell::Cell<usize>,
}

#[derive(Default)]
struct EdgeCands {
    /// (closeness, tail) in scan order.
    list: Vec<(u32, AuxId)>,
    /// Closeness bound the list is complete up to (exclusive).
    scanned_to: u32,
}

struct CompFrame {
    bits: Rc<BitSet>,
    targets: BTreeSet<AuxId>,
    /// Sorted target list the memoized flag vectors are indexed by.
    tvec: Vec<AuxId>,
    prep: PreparedAux,
    /// Per-entry transit results: which targets one in-frame source
    /// reaches. Batch answers are unions of these.
    entry_memo: BTreeMap<AuxId, Rc<Vec<bool>>>,
    memo_words: usize,
}

pub fn prepare_aux(
    env: &AuxEnv<'_>,
    be: &mut dyn EdgeBackend,
    rc: &mut RunCtx,
    members: &Membership,
    h: u64,
) -> Result<PreparedAux, EngineError> {
    if h <= env.cfg.aux_base_threshold(env.global_m) {
        return Ok(PreparedAux::Base);
    }
    rc.n_prepares += 1;
    let fctx = FrameCtx::build(&env.decomp, members, be, rc);
    let mut c = build_pseudoseparator(&env.decomp, members, h, env.cfg.beta, &fctx, rc)?;
    c.charge_core(rc);
    let labels = label_strip_components(&env.decomp, members, &c, &fctx, rc);
    let mut cverts = c.verts.clone();
    cverts.sort_unstable();
    cverts.dedup();
    rc.ws.charge(cverts.len(), Channel::Core);
    Ok(PreparedAux::Frame(Box::new(PreparedFrame {
        fctx,
        c,
        labels,
        cverts,
        h,
        comp_frames: std::cell::RefCell::new(BTreeMap::new()),
        cand_memo: std::cell::RefCell::new(BTreeMap::new()),
        edge_cands: std::cell::RefCell::new(Vec::new()),
        cand_words: std::cell::Cell::new(0),
    })))
}

pub fn release_aux(prep: PreparedAux, rc: &mut RunCtx) {
    if let PreparedAux::Frame(f) = prep {
        for (_, cf) in f.comp_frames.into_inner() {
            rc.ws.release(
                cf.bits.word_count() + 2 * cf.targets.len() + cf.memo_words,
                Channel::Conn,
            );
            release_aux(cf.prep, rc);
        }
        rc.ws.release(f.cand_words.get(), Channel::Conn);
        rc.ws.release(f.cverts.len(), Channel::Core);
        f.labels.release(rc);
        f.c.release(rc);
        f.fctx.release(rc);
    }
}

/// One-shot convenience wrapper: prepare, run, release.
#[allow(clippy::too_many_arguments)]
pub fn aux_multi(
    env: &AuxEnv<'_>,
    be: &mut dyn EdgeBackend,
    rc: &mut RunCtx,
    members: &Membership,
    h: u64,
    init: &[AuxId],
    targets: &[AuxId],
    depth: u32,
) -> Result<Vec<bool>, EngineError> {
    let prep = prepare_aux(env, be, rc, members, h)?;
    let out = run_marking(env, be, rc, members, &prep, init, targets, depth, env.cfg.early_exit);
    release_aux(prep, rc);
    out
}

/// The marking loop of one query against a prepared frame. `early_exit`
/// governs this loop only: the fixpoint-equivalence toggle applies to the
/// loop whose verdict is read, while inner subroutine loops always stop
/// at their fixpoint.
#[allow(clippy::too_many_arguments)]
pub fn run_marking(
    env: &AuxEnv<'_>,
    be: &mut dyn EdgeBackend,
    rc: &mut RunCtx,
    members: &Membership,
    prep: &PreparedAux,
    init: &[AuxId],
    targets: &[AuxId],
    depth: u32,
    early_exit: bool,
) -> Result<Vec<bool>, EngineError> {
    rc.aux_depth_max = rc.aux_depth_max.max(depth);
    if depth > env.cfg.max_depth {
        return Err(EngineError::DepthExceeded {
            depth,
            max: env.cfg.max_depth,
        });
    }
    let frame = match prep {
        PreparedAux::Base => return Ok(base_dfs_multi(env, be, rc, members, init, targets)),
        PreparedAux::Frame(f) => f,
    };
    let (fctx, c, h) = (&frame.fctx, &frame.c, frame.h);
    let n = env.decomp.aux_count() as usize;

    // visited table: separator vertices plus the query endpoints
    let mut cverts: Vec<AuxId> = frame
        .cverts
        .iter()
        .copied()
        .chain(init.iter().copied())
        .chain(targets.iter().copied())
        .collect();
    cverts.sort_unstable();
    cverts.dedup();
    let cidx = |verts: &[AuxId], id: AuxId| verts.binary_search(&id).ok();
    let mut vflag = BitSet::new(cverts.len());
    let mut marked = BitSet::new(n);
    let mut ecell: Vec<Option<(u32, AuxId)>> = vec![None; c.edges.len()];
    let table_words = cverts.len() + vflag.word_count() + marked.word_count() + 2 * ecell.len();
    rc.ws.charge(table_words, Channel::Core);

    for &s in init {
        if let Some(i) = cidx(&cverts, s) {
            vflag.set(i);
        }
        marked.set(s.0 as usize);
    }

    // per-component memo of resolved batches: (marks version, targets, flags)
    let mut batch_memo: BTreeMap<u32, (u64, Vec<AuxId>, Vec<bool>)> = BTreeMap::new();
    let mut memo_words = 0usize;
    let mut version: u64 = 0;

    rc.n_markings += 1;
    let mut pend_seen = BitSet::new(n);
    rc.ws.charge(pend_seen.word_count(), Channel::Core);
    for _sweep in 0..h {
        rc.n_sweeps += 1;
        let mut changed = false;

        // Phase 1: probe against current marks, batch the rest per component.
        let mut pend_tails: Vec<AuxId> = Vec::new();
        pend_seen.clear();
        for (vi, &v) in cverts.iter().enumerate() {
            if vflag.get(vi) {
                continue;
            }
            if has_marked_in_neighbor(env, fctx, &marked, v) {
                vflag.set(vi);
                marked.set(v.0 as usize);
                version += 1;
                changed = true;
            } else if !pend_seen.get(v.0 as usize) {
                pend_seen.set(v.0 as usize);
                pend_tails.push(v);
            }
        }
        for (ei, e) in c.edges.iter().enumerate() {
            let cur = ecell[ei].map_or(u32::MAX, |(cl, _)| cl);
            let found = scan_crossing_candidates(frame, rc, ei, e, cur, |r, tail| {
                if marked.get(tail.0 as usize) {
                    CandidateVerdict::Confirmed(r, tail)
                } else {
                    CandidateVerdict::Unknown
                }
            });
            match found {
                ScanOutcome::Confirmed(r, tail) => {
                    if r < cur {
                        ecell[ei] = Some((r, tail));
                        marked.set(tail.0 as usize);
                        version += 1;
                        changed = true;
                    }
                }
                ScanOutcome::Pending(cands) => {
                    for (_, tail) in cands {
                        if !pend_seen.get(tail.0 as usize) {
                            pend_seen.set(tail.0 as usize);
                            pend_tails.push(tail);
                        }
                    }
                }
            }
        }
        let mut pending: BTreeMap<u32, Vec<AuxId>> = BTreeMap::new();
        for &tail in &pend_tails {
            for &comp in candidate_comps(env, frame, tail).iter() {
                pending.entry(comp).or_default().push(tail);
            }
        }

        // Phase 2: one recursive multi-source multi-target call per component.
        let mut reached = BitSet::new(n);
        rc.ws.charge(reached.word_count(), Channel::Core);
        for (&comp, tset) in &pending {
            let mut tlist: Vec<AuxId> = tset.clone();
            tlist.sort_unstable();
            if let Some((ver, tl, flags)) = batch_memo.get(&comp) {
                if *ver == version && *tl == tlist {
                    for (t, &ok) in tlist.iter().zip(flags) {
                        if ok {
                            reached.set(t.0 as usize);
                        }
                    }
                    continue;
                }
            }
            rc.n_batches += 1;
            let flags = resolve_batch(env, be, rc, frame, comp, &marked, &tlist, depth)?;
            for (t, &ok) in tlist.iter().zip(&flags) {
                if ok {
                    reached.set(t.0 as usize);
                }
            }
            let words = tlist.len() + flags.len().div_ceil(8);
            memo_words += words;
            rc.ws.charge(words, Channel::Conn);
            batch_memo.insert(comp, (version, tlist, flags));
        }

        // Phase 3: apply batch results.
        for (vi, &v) in cverts.iter().enumerate() {
            if !vflag.get(vi) && reached.get(v.0 as usize) {
                vflag.set(vi);
                marked.set(v.0 as usize);
                version += 1;
                changed = true;
            }
        }
        for (ei, e) in c.edges.iter().enumerate() {
            let cur = ecell[ei].map_or(u32::MAX, |(cl, _)| cl);
            let found = scan_crossing_candidates(frame, rc, ei, e, cur, |r, tail| {
                if marked.get(tail.0 as usize) || reached.get(tail.0 as usize) {
                    CandidateVerdict::Confirmed(r, tail)
                } else {
                    CandidateVerdict::Unknown
                }
            });
            if let ScanOutcome::Confirmed(r, tail) = found {
                if r < cur {
                    ecell[ei] = Some((r, tail));
                    marked.set(tail.0 as usize);
                    version += 1;
                    changed = true;
                }
            }
        }
        rc.ws.release(reached.word_count(), Channel::Core);

        if early_exit && !changed {
            break;
        }
    }

    let out: Vec<bool> = targets
        .iter()
        .map(|&t| {
            cidx(&cverts, t).is_some_and(|i| vflag.get(i)) || marked.get(t.0 as usize)
        })
        .collect();

    rc.ws.release(table_words + pend_seen.word_count(), Channel::Core);
    rc.ws.release(memo_words, Channel::Conn);
    Ok(out)
}

fn has_marked_in_neighbor(env: &AuxEnv<'_>, fctx: &FrameCtx, marked: &BitSet, v: AuxId) -> bool {
    let vert = env.decomp.vertex_of(v);
    for block in env.decomp.blocks_of(vert) {
        let Some(ctx) = fctx.ctx(block.i, block.j) else {
            continue;
        };
        let Ok(p) = block.position(vert) else { continue };
        if !ctx.is_member(p) {
            continue;
        }
        let row = ctx.in_partners(p);
        for (wi, &word) in row.iter().enumerate() {
            let mut w = word;
            while w != 0 {
                let b = ((wi << 6) + w.trailing_zeros() as usize) as u32;
                w &= w - 1;
                if b == p {
                    continue;
                }
                if marked.get(ctx.ids[b as usize] as usize) {
                    return true;
                }
            }
        }
    }
    false
}

/// Components through which `target` might be reached: its own strip
/// component plus the components of its in-neighbors. Frame-constant, so
/// memoized on the prepared frame.
fn candidate_comps(env: &AuxEnv<'_>, frame: &PreparedFrame, target: AuxId) -> Rc<Vec<u32>> {
    if let Some(hit) = frame.cand_memo.borrow().get(&target) {
        return Rc::clone(hit);
    }
    let (fctx, labels) = (&frame.fctx, &frame.labels);
    let mut comps = BTreeSet::new();
    if let Some(l) = labels.component_of(target) {
        comps.insert(l);
    }
    let vert = env.decomp.vertex_of(target);
    for block in env.decomp.blocks_of(vert) {
        let Some(ctx) = fctx.ctx(block.i, block.j) else {
            continue;
        };
        let Ok(p) = block.position(vert) else { continue };
        if !ctx.is_member(p) {
            continue;
        }
        let row = ctx.in_partners(p);
        for (wi, &word) in row.iter().enumerate() {
            let mut w = word;
            while w != 0 {
                let b = ((wi << 6) + w.trailing_zeros() as usize) as u32;
                w &= w - 1;
                if b == p {
                    continue;
                }
                if let Some(l) = labels.component_of(AuxId(ctx.ids[b as usize])) {
                    comps.insert(l);
                }
            }
        }
    }
    let out = Rc::new(comps.into_iter().collect::<Vec<u32>>());
    frame
        .cand_memo
        .borrow_mut()
        .insert(target, Rc::clone(&out));
    out
}

enum CandidateVerdict {
    Confirmed(u32, AuxId),
    Unknown,
}

enum ScanOutcome {
    Confirmed(u32, AuxId),
    Pending(Vec<(u32, AuxId)>),
}

/// Enumerate the edges crossing a C-edge in order of closeness to its
/// tail, stopping at the first confirmed candidate. Candidates closer than
/// both the stored witness and the first confirmed one are reported for
/// batching.
fn scan_crossing_candidates(
    frame: &PreparedFrame,
    rc: &mut RunCtx,
    ei: usize,
    e: &crate::psep::CEdge,
    cur: u32,
    mut verdict: impl FnMut(u32, AuxId) -> CandidateVerdict,
) -> ScanOutcome {
    let Some(ctx) = frame.fctx.ctx(e.bi, e.bj) else {
        return ScanOutcome::Pending(Vec::new());
    };
    let perim = ctx.perim;
    let pv = (e.v_pos + perim - e.u_pos) % perim;
    let stop = cur.min(pv);

    let mut cands = frame.edge_cands.borrow_mut();
    if cands.is_empty() {
        cands.resize_with(frame.c.edges.len(), EdgeCands::default);
    }
    let ec = &mut cands[ei];
    if ec.scanned_to < stop {
        let before = ec.list.len();
        for r in ec.scanned_to.max(1)..stop {
            let a = (e.u_pos + r) % perim;
            if !ctx.is_member(a) {
                continue;
            }
            // tails: a for out-edges (a -> b), b for in-edges (b -> a)
            for tail_is_a in [true, false] {
                let buf = if tail_is_a { ctx.out_partners(a) } else { ctx.in_partners(a) };
                for (wi, &word) in buf.iter().enumerate() {
                    let mut w = word;
                    while w != 0 {
                        let b = ((wi << 6) + w.trailing_zeros() as usize) as u32;
                        w &= w - 1;
                        let rb = (b + perim - e.u_pos) % perim;
                        if rb <= pv || rb <= r {
                            continue; // not crossing, or handled at a smaller r
                        }
                        let tail_pos = if tail_is_a { a } else { b };
                        ec.list.push((r, AuxId(ctx.ids[tail_pos as usize])));
                    }
                }
            }
        }
        ec.scanned_to = stop;
        let grew = 2 * (ec.list.len() - before);
        rc.ws.charge(grew, Channel::Conn);
        frame.cand_words.set(frame.cand_words.get() + grew);
    }

    let mut pend: Vec<(u32, AuxId)> = Vec::new();
    for &(r, tail) in ec.list.iter().take_while(|&&(r, _)| r < stop) {
        match verdict(r, tail) {
            CandidateVerdict::Confirmed(r, t) => return ScanOutcome::Confirmed(r, t),
            CandidateVerdict::Unknown => pend.push((r, tail)),
        }
    }
    ScanOutcome::Pending(pend)
}

/// Recursive check: which of `tlist` are reachable from the marked set
/// through component `comp`. The sub-frame (component plus accumulated
/// targets) is prepared once and cached on the parent; sources enter as
/// the in-frame successors of marked vertices — the first vertex of any
/// path leaving a marked vertex into the component lies in the frame.
#[allow(clippy::too_many_arguments)]
fn resolve_batch(
    env: &AuxEnv<'_>,
    be: &mut dyn EdgeBackend,
    rc: &mut RunCtx,
    parent: &PreparedFrame,
    comp: u32,
    marked: &BitSet,
    tlist: &[AuxId],
    depth: u32,
) -> Result<Vec<bool>, EngineError> {
    let n = env.decomp.aux_count() as usize;
    let mut frames = parent.comp_frames.borrow_mut();
    let needs_build = match frames.get(&comp) {
        None => true,
        Some(cf) => tlist.iter().any(|t| !cf.targets.contains(t)),
    };
    if needs_build {
        let mut targets: BTreeSet<AuxId> = BTreeSet::new();
        if let Some(cf) = frames.remove(&comp) {
            targets = cf.targets;
            rc.ws
                .release(cf.bits.word_count() + 2 * targets.len() + cf.memo_words, Channel::Conn);
            release_aux(cf.prep, rc);
        }
        targets.extend(tlist.iter().copied());
        let mut bits = BitSet::new(n);
        for id in &parent.labels.comp_members[comp as usize] {
            bits.set(id.0 as usize);
        }
        for t in &targets {
            bits.set(t.0 as usize);
        }
        let h2 = bits.count_ones() as u64;
        let bits = Rc::new(bits);
        rc.ws.charge(bits.word_count() + 2 * targets.len(), Channel::Conn);
        let prep = if h2 >= parent.h {
            // no shrink against the parent: settle queries directly
            PreparedAux::Base
        } else {
            prepare_aux(env, be, rc, &Membership::Bits(Rc::clone(&bits)), h2)?
        };
        let tvec: Vec<AuxId> = targets.iter().copied().collect();
        frames.insert(
            comp,
            CompFrame {
                bits,
                targets,
                tvec,
                prep,
                entry_memo: BTreeMap::new(),
                memo_words: 0,
            },
        );
    }
    let cf = frames.get_mut(&comp).expect("just ensured");

    // entries: marked vertices inside the frame plus in-frame successors
    // of marked vertices outside it
    let mut entries: Vec<AuxId> = Vec::new();
    for w in marked.iter_ones() {
        if cf.bits.get(w) {
            entries.push(AuxId(w as u32));
            continue;
        }
        let vert = env.decomp.vertex_of(AuxId(w as u32));
        for block in env.decomp.blocks_of(vert) {
            let Some(ctx) = parent.fctx.ctx(block.i, block.j) else {
                continue;
            };
            let Ok(p) = block.position(vert) else { continue };
            if !ctx.is_member(p) {
                continue;
            }
            let row = ctx.out_partners(p);
            for (wi, &word) in row.iter().enumerate() {
                let mut wrd = word;
                while wrd != 0 {
                    let b = ((wi << 6) + wrd.trailing_zeros() as usize) as u32;
                    wrd &= wrd - 1;
                    let nb = AuxId(ctx.ids[b as usize]);
                    if cf.bits.get(nb.0 as usize) {
                        entries.push(nb);
                    }
                }
            }
        }
    }
    entries.sort_unstable();
    entries.dedup();

    // reach-from-a-set is the union of reach-from-each: resolve each new
    // entry once against the full target list and reuse forever
    let membership = Membership::Bits(Rc::clone(&cf.bits));
    let child_depth = depth + 1;
    let mut acc = vec![false; cf.tvec.len()];
    for e in entries {
        if !cf.entry_memo.contains_key(&e) {
            let flags = if matches!(cf.prep, PreparedAux::Frame(_))
                && child_depth >= env.cfg.max_depth
            {
                // bottom out at the depth cap with a direct search
                rc.aux_depth_max = rc.aux_depth_max.max(child_depth);
                base_dfs_multi(env, be, rc, &membership, &[e], &cf.tvec)
            } else {
                run_marking(env, be, rc, &membership, &cf.prep, &[e], &cf.tvec, child_depth, true)?
            };
            let words = 1 + flags.len().div_ceil(8);
            cf.memo_words += words;
            rc.ws.charge(words, Channel::Conn);
            cf.entry_memo.insert(e, Rc::new(flags));
        }
        let flags = &cf.entry_memo[&e];
        for (a, &f) in acc.iter_mut().zip(flags.iter()) {
            *a |= f;
        }
    }
    Ok(tlist
        .iter()
        .map(|t| {
            let i = cf.tvec.binary_search(t).expect("target in frame");
            acc[i]
        })
        .collect())
}

/// Multi-source DFS over the implicit auxiliary edges of a frame.
fn base_dfs_multi(
    env: &AuxEnv<'_>,
    be: &mut dyn EdgeBackend,
    rc: &mut RunCtx,
    members: &Membership,
    init: &[AuxId],
    targets: &[AuxId],
) -> Vec<bool> {
    let n = env.decomp.aux_count() as usize;
    let mut visited = BitSet::new(n);
    let mut stack: Vec<AuxId> = Vec::new();
    rc.ws.charge(visited.word_count() + init.len().max(16), Channel::Core);
    let mut charged_stack = init.len().max(16);
    for &s in init {
        if members.contains(s) && !visited.get(s.0 as usize) {
            visited.set(s.0 as usize);
            stack.push(s);
        }
    }
    let mut row = Vec::new();
    while let Some(v) = stack.pop() {
        let vert = env.decomp.vertex_of(v);
        for block in env.decomp.blocks_of(vert) {
            let Ok(p) = block.position(vert) else { continue };
            let mat = be.matrix(&block, rc);
            rc.queries += 1;
            row.clear();
            row.extend_from_slice(mat.out_row(p));
            let ids = env.decomp.block_pos_ids(block.i, block.j);
            for wi in 0..row.len() {
                let mut w = row[wi];
                while w != 0 {
                    let b = ((wi << 6) + w.trailing_zeros() as usize) as u32;
                    w &= w - 1;
                    if b == p {
                        continue;
                    }
                    let nb = AuxId(ids[b as usize]);
                    if members.contains(nb) && !visited.get(nb.0 as usize) {
                        visited.set(nb.0 as usize);
                        if stack.len() + 1 > charged_stack {
                            rc.ws.charge(1, Channel::Core);
                            charged_stack += 1;
                        }
                        stack.push(nb);
                    }
                }
            }
        }
    }
    let out = targets.iter().map(|t| visited.get(t.0 as usize)).collect();
    rc.ws.release(visited.word_count() + charged_stack, Channel::Core);
    out
}

// ---------------------------------------------------------------------------
// In-block reachability as word-parallel fixpoint (endpoint promotion)
// ---------------------------------------------------------------------------

/// Reachable cell set inside a window from a set of source cells, computed
/// with per-direction edge bit-planes. `reversed` answers "which cells
/// reach the sources". Working space is a handful of window-sized bitsets.
struct WindowPlanes {
    x0: u32,
    y0: u32,
    w: usize,
    h: usize,
    row_words: usize,
    planes: [Vec<u64>; 4],
}

impl WindowPlanes {
    fn build(view: &GridView<'_>, reversed: bool) -> WindowPlanes {
        let (x0, y0, _, _) = view.bounds();
        let w = view.width() as usize;
        let h = view.height() as usize;
        let rw = (w + 1).div_ceil(64);
        let words = (h + 1) * rw;
        let cell = |v: VertexId| {
            let lx = (v.x - x0) as usize;
            let ly = (v.y - y0) as usize;
            (ly * rw + (lx >> 6), 1u64 << (lx & 63))
        };
        // direction planes: bit set at v when the step v -> dir exists
        let mut planes = [
            vec![0u64; words],
            vec![0u64; words],
            vec![0u64; words],
            vec![0u64; words],
        ];
        for y in 0..=h as u32 {
            for x in 0..=w as u32 {
                let v = VertexId::new(x0 + x, y0 + y);
                for (di, d) in DIRECTIONS.into_iter().enumerate() {
                    let present = if reversed {
                        view.step(v, d).is_some_and(|u| view.has_out(u, d.opposite()))
                    } else {
                        view.has_out(v, d)
                    };
                    if present {
                        let (wi, b) = cell(v);
                        planes[di][wi] |= b;
                    }
                }
            }
        }
        WindowPlanes {
            x0,
            y0,
            w,
            h,
            row_words: rw,
            planes,
        }
    }

    fn words(&self) -> usize {
        self.planes[0].len() * 4
    }
}

struct WindowReach {
    w: usize,
    h: usize,
    row_words: usize,
    reached: Vec<u64>,
}

impl WindowReach {
    fn words(w: usize, h: usize) -> usize {
        let rw = (w + 1).div_ceil(64);
        (h + 1) * rw * 6
    }

    fn compute(view: &GridView<'_>, sources: &[VertexId], reversed: bool) -> WindowReach {
        let planes = WindowPlanes::build(view, reversed);
        WindowReach::from_planes(&planes, sources)
    }

    fn from_planes(wp: &WindowPlanes, sources: &[VertexId]) -> WindowReach {
        let (x0, y0, w, h, rw) = (wp.x0, wp.y0, wp.w, wp.h, wp.row_words);
        let words = (h + 1) * rw;
        let planes = &wp.planes;
        let cell = |v: VertexId| {
            let lx = (v.x - x0) as usize;
            let ly = (v.y - y0) as usize;
            (ly * rw + (lx >> 6), 1u64 << (lx & 63))
        };
        let mut reached = vec![0u64; words];
        for &s in sources {
            let (wi, b) = cell(s);
            reached[wi] |= b;
        }
        let mut scratch = vec![0u64; words];
        let row_mask_last = if (w + 1) % 64 == 0 {
            !0u64
        } else {
            (1u64 << ((w + 1) % 64)) - 1
        };
        loop {
            let mut grew = false;
            // east: x+1 within a row
            for y in 0..=h {
                let base = y * rw;
                let mut carry = 0u64;
                for i in 0..rw {
                    let src = reached[base + i] & planes[0][base + i];
                    scratch[base + i] = (src << 1) | carry;
                    carry = src >> 63;
                }
                scratch[base + rw - 1] &= row_mask_last;
            }
            grew |= or_into(&mut reached, &scratch);
            // north: y+1
            scratch.iter_mut().for_each(|v| *v = 0);
            for y in 0..h {
                let base = y * rw;
                for i in 0..rw {
                    scratch[base + rw + i] = reached[base + i] & planes[1][base + i];
                }
            }
            grew |= or_into(&mut reached, &scratch);
            // west: x-1
            for y in 0..=h {
                let base = y * rw;
                let mut carry = 0u64;
                for i in (0..rw).rev() {
                    let src = reached[base + i] & planes[2][base + i];
                    scratch[base + i] = (src >> 1) | carry;
                    carry = src << 63;
                }
            }
            grew |= or_into(&mut reached, &scratch);
            // south: y-1
            scratch.iter_mut().for_each(|v| *v = 0);
            for y in 1..=h {
                let base = y * rw;
                for i in 0..rw {
                    scratch[base - rw + i] = reached[base + i] & planes[3][base + i];
                }
            }
            grew |= or_into(&mut reached, &scratch);
            if !grew {
                break;
            }
        }
        WindowReach {
            w,
            h,
            row_words: rw,
            reached,
        }
    }

    fn get(&self, view: &GridView<'_>, v: VertexId) -> bool {
        let (x0, y0, _, _) = view.bounds();
        let lx = (v.x - x0) as usize;
        let ly = (v.y - y0) as usize;
        debug_assert!(lx <= self.w && ly <= self.h);
        self.reached[ly * self.row_words + (lx >> 6)] & (1u64 << (lx & 63)) != 0
    }
}

fn or_into(dst: &mut [u64], src: &[u64]) -> bool {
    let mut grew = false;
    for (d, s) in dst.iter_mut().zip(src) {
        let n = *d | *s;
        grew |= n != *d;
        *d = n;
    }
    grew
}

impl crate::grid::Direction {
    fn opposite(self) -> Self {
        use crate::grid::Direction::*;
        match self {
            East => West,
            North => South,
            West => East,
            South => North,
        }
    }
}

// ---------------------------------------------------------------------------
// Grid-level recursion (GridReach)
// ---------------------------------------------------------------------------

/// Reachability from `s` to each of `targets` in one grid, via the
/// auxiliary-graph engine with endpoint promotion: `s` is expanded to the
/// boundary vertices of its block it reaches, each target contracts to the
/// boundary vertices that reach it.
pub fn grid_multi_reach(
    grid: &GridGraph,
    global_m: u32,
    cfg: &EngineConfig,
    be: &mut dyn EdgeBackend,
    rc: &mut RunCtx,
    grid_level: u32,
    s: VertexId,
    targets: &[VertexId],
) -> Result<Vec<bool>, EngineError> {
    rc.grid_depth_max = rc.grid_depth_max.max(grid_level);
    let m = grid.m();
    if m <= cfg.grid_base_side(global_m) {
        // base case: direct search, the whole window is small
        let view = grid.full_view();
        let wr_words = WindowReach::words(m as usize, m as usize);
        rc.ws.charge(wr_words, Channel::Core);
        let wr = WindowReach::compute(&view, &[s], false);
        let out = targets.iter().map(|&t| wr.get(&view, t)).collect();
        rc.ws.release(wr_words, Channel::Core);
        return Ok(out);
    }

    let decomp = Decomp::new(m, cfg.alpha);
    let env = AuxEnv {
        grid,
        decomp,
        cfg: *cfg,
        global_m,
    };

    // promote s: boundary vertices of its block reachable from s
    let sblock = env.decomp.block_containing(s);
    let sview = grid.subgrid_view(sblock.subgrid_ref())?;
    let wr_words = WindowReach::words(sview.width() as usize, sview.height() as usize);
    rc.ws.charge(wr_words, Channel::Core);
    let sreach = WindowReach::compute(&sview, &[s], false);
    let mut init: Vec<AuxId> = Vec::new();
    for p in 0..sblock.perimeter_len() {
        let v = sblock.vertex_at(p);
        if sreach.get(&sview, v) {
            init.push(env.decomp.aux_id(v).expect("perimeter is aux"));
        }
    }
    init.sort_unstable();
    init.dedup();

    // same-block direct answers
    let mut direct = vec![false; targets.len()];
    for (ti, &t) in targets.iter().enumerate() {
        if sview.contains(t) {
            direct[ti] = sreach.get(&sview, t);
        }
    }
    rc.ws.release(wr_words, Channel::Core);

    // contract targets: boundary vertices that reach them
    let mut per_target: Vec<Vec<AuxId>> = Vec::with_capacity(targets.len());
    let mut all_targets: BTreeSet<AuxId> = BTreeSet::new();
    for &t in targets {
        let tblock = env.decomp.block_containing(t);
        let tview = grid.subgrid_view(tblock.subgrid_ref())?;
        let words = WindowReach::words(tview.width() as usize, tview.height() as usize);
        rc.ws.charge(words, Channel::Core);
        let treach = WindowReach::compute(&tview, &[t], true);
        let mut t0: Vec<AuxId> = Vec::new();
        for p in 0..tblock.perimeter_len() {
            let v = tblock.vertex_at(p);
            if treach.get(&tview, v) {
                t0.push(env.decomp.aux_id(v).expect("perimeter is aux"));
            }
        }
        rc.ws.release(words, Channel::Core);
        t0.sort_unstable();
        t0.dedup();
        all_targets.extend(t0.iter().copied());
        per_target.push(t0);
    }

    let mut out = direct;
    if !init.is_empty() && !all_targets.is_empty() {
        let tlist: Vec<AuxId> = all_targets.into_iter().collect();
        let h = env.decomp.aux_count();
        let flags = aux_multi(&env, be, rc, &Membership::All, h, &init, &tlist, 1)?;
        let flag_of = |id: AuxId| {
            tlist
                .binary_search(&id)
                .ok()
                .map(|i| flags[i])
                .unwrap_or(false)
        };
        for (ti, t0) in per_target.iter().enumerate() {
            if !out[ti] {
                out[ti] = t0.iter().any(|&id| flag_of(id));
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Recursive backend: block matrices solved by nested engines
// ---------------------------------------------------------------------------

/// Answers implicit edge queries by recursing into the subgrid with the
/// full engine, as the grid-level algorithm prescribes. Each block is
/// solved once per enclosing query — one nested multi-target run per
/// boundary source, sharing one sub-block memo — and cached.
pub struct RecursiveBackend<'g> {
    grid: &'g GridGraph,
    global_m: u32,
    cfg: EngineConfig,
    grid_level: u32,
    memo: HashMap<(u32, u32, u32), Rc<BlockMatrix>>,
    solves: u64,
}

impl<'g> RecursiveBackend<'g> {
    pub fn new(grid: &'g GridGraph, global_m: u32, cfg: EngineConfig) -> Self {
        Self::at_level(grid, global_m, cfg, 0)
    }

    fn at_level(grid: &'g GridGraph, global_m: u32, cfg: EngineConfig, grid_level: u32) -> Self {
        RecursiveBackend {
            grid,
            global_m,
            cfg,
            grid_level,
            memo: HashMap::new(),
            solves: 0,
        }
    }

    fn solve(&self, block: &crate::aux::Block, rc: &mut RunCtx) -> Result<BlockMatrix, EngineError> {
        let (x0, y0, x1, y1) = block.bounds();
        let side = (x1 - x0).max(y1 - y0);
        if side <= self.cfg.grid_base_side(self.global_m) {
            return Ok(solve_block_by_dfs(self.grid, block, &mut rc.ws));
        }
        rc.grid_depth_max = rc.grid_depth_max.max(self.grid_level + 1);
        // copy the block's window into a local grid (backend scratch)
        let view = self.grid.subgrid_view(block.subgrid_ref())?;
        let mut local = GridGraph::new(side);
        for x in x0..=x1 {
            for y in y0..=y1 {
                let v = VertexId::new(x, y);
                for d in DIRECTIONS {
                    if view.has_out(v, d) {
                        local.add_edge(VertexId::new(x - x0, y - y0), d);
                    }
                }
            }
        }
        let local_words = (local.vertex_count() as usize).div_ceil(8);
        rc.ws.charge(local_words, Channel::Conn);

        let perim = block.perimeter_len();
        let local_of = |p: u32| {
            let v = block.vertex_at(p);
            VertexId::new(v.x - x0, v.y - y0)
        };
        let mut mat = BlockMatrix::new(perim as usize);
        let mut child =
            RecursiveBackend::at_level(&local, self.global_m, self.cfg, self.grid_level + 1);
        let decomp = Decomp::new(side, self.cfg.alpha);
        let env = AuxEnv {
            grid: &local,
            decomp,
            cfg: self.cfg,
            global_m: self.global_m,
        };

        // contract every boundary target once: the aux vertices that
        // reach it within its containing block; reverse planes shared per
        // block across targets
        let mut plane_cache: HashMap<(u32, u32, bool), Rc<WindowPlanes>> = HashMap::new();
        let mut plane_words = 0usize;
        let mut per_target: Vec<Vec<AuxId>> = Vec::with_capacity(perim as usize);
        let mut all_targets: BTreeSet<AuxId> = BTreeSet::new();
        for q in 0..perim {
            let t = local_of(q);
            let tblock = env.decomp.block_containing(t);
            let tview = local.subgrid_view(tblock.subgrid_ref())?;
            let wp = plane_cache
                .entry((tblock.i, tblock.j, true))
                .or_insert_with(|| {
                    let wp = Rc::new(WindowPlanes::build(&tview, true));
                    plane_words += wp.words();
                    wp
                })
                .clone();
            let words = WindowReach::words(tview.width() as usize, tview.height() as usize);
            rc.ws.charge(words, Channel::Core);
            let treach = WindowReach::from_planes(&wp, &[t]);
            let ids = env.decomp.block_pos_ids(tblock.i, tblock.j);
            let mut t0 = Vec::new();
            for bp in 0..tblock.perimeter_len() {
                let b = tblock.vertex_at(bp);
                if treach.get(&tview, b) {
                    t0.push(AuxId(ids[bp as usize]));
                }
            }
            rc.ws.release(words, Channel::Core);
            t0.sort_unstable();
            t0.dedup();
            all_targets.extend(t0.iter().copied());
            per_target.push(t0);
        }
        rc.ws.charge(plane_words, Channel::Conn);
        let tlist: Vec<AuxId> = all_targets.into_iter().collect();

        let h = env.decomp.aux_count();
        let prep = prepare_aux(&env, &mut child, rc, &Membership::All, h)?;
        for p in 0..perim {
            let src = local_of(p);
            let sblock = env.decomp.block_containing(src);
            let sview = local.subgrid_view(sblock.subgrid_ref())?;
            let wp = plane_cache
                .entry((sblock.i, sblock.j, false))
                .or_insert_with(|| {
                    let wp = Rc::new(WindowPlanes::build(&sview, false));
                    plane_words += wp.words();
                    rc.ws.charge(wp.words(), Channel::Conn);
                    wp
                })
                .clone();
            let words = WindowReach::words(sview.width() as usize, sview.height() as usize);
            rc.ws.charge(words, Channel::Core);
            let sreach = WindowReach::from_planes(&wp, &[src]);
            let sids = env.decomp.block_pos_ids(sblock.i, sblock.j);
            let mut init = Vec::new();
            for bp in 0..sblock.perimeter_len() {
                let b = sblock.vertex_at(bp);
                if sreach.get(&sview, b) {
                    init.push(AuxId(sids[bp as usize]));
                }
            }
            init.sort_unstable();
            init.dedup();
            // same-block direct hits
            for q in 0..perim {
                let t = local_of(q);
                if q != p && sview.contains(t) && sreach.get(&sview, t) {
                    mat.set_edge(p, q);
                }
            }
            rc.ws.release(words, Channel::Core);
            if !init.is_empty() && !tlist.is_empty() {
                let flags = run_marking(
                    &env, &mut child, rc, &Membership::All, &prep, &init, &tlist, 1, true,
                )?;
                let flag_of = |id: AuxId| {
                    tlist.binary_search(&id).ok().map(|i| flags[i]).unwrap_or(false)
                };
                for q in 0..perim {
                    if q != p && !mat.edge(p, q) && per_target[q as usize].iter().any(|&id| flag_of(id))
                    {
                        mat.set_edge(p, q);
                    }
                }
            }
        }
        release_aux(prep, rc);
        child.release(rc);
        drop(plane_cache);
        rc.ws.release(plane_words, Channel::Conn);
        rc.ws.release(local_words, Channel::Conn);
        Ok(mat)
    }
}

impl<'g> EdgeBackend for RecursiveBackend<'g> {
    fn matrix(&mut self, block: &crate::aux::Block, rc: &mut RunCtx) -> Rc<BlockMatrix> {
        let key = (block.i, block.j, block.t);
        if !self.memo.contains_key(&key) {
            let mat = self
                .solve(block, rc)
                .expect("block windows are valid subgrids");
            rc.ws.charge(mat.words(), Channel::Conn);
            self.solves += 1;
            self.memo.insert(key, Rc::new(mat));
        }
        Rc::clone(self.memo.get(&key).unwrap())
    }

    fn block_solves(&self) -> u64 {
        self.solves
    }

    fn release(&mut self, rc: &mut RunCtx) {
        for (_, m) in self.memo.drain() {
            rc.ws.release(m.words(), Channel::Conn);
        }
    }
}

// ---------------------------------------------------------------------------
// Public entry points
// ---------------------------------------------------------------------------

fn check_vertices(grid: &GridGraph, s: VertexId, t: VertexId) -> Result<(), EngineError> {
    for v in [s, t] {
        if !grid.contains(v) {
            return Err(EngineError::Grid(GridError::VertexOutside { v, m: grid.m() }));
        }
    }
    Ok(())
}

fn finish_metrics(
    grid: &GridGraph,
    cfg: &EngineConfig,
    mode: &str,
    rc: &RunCtx,
    started: std::time::Instant,
) -> Metrics {
    Metrics {
        n: grid.vertex_count(),
        m: grid.m(),
        alpha: cfg.alpha,
        beta: cfg.beta,
        mode: mode.to_owned(),
        peak_core: rc.ws.peak(Channel::Core) as u64,
        peak_conn: rc.ws.peak(Channel::Conn) as u64,
        queries: rc.queries,
        depth: rc.aux_depth_max,
        ms: started.elapsed().as_secs_f64() * 1e3,
    }
}

/// Linear-space baseline: metered DFS over the whole grid.
pub fn reach_dfs(grid: &GridGraph, s: VertexId, t: VertexId) -> Result<(bool, Metrics), EngineError> {
    check_vertices(grid, s, t)?;
    let started = std::time::Instant::now();
    let mut rc = RunCtx::default();
    let n = grid.vertex_count() as usize;
    let side = grid.m() as usize + 1;
    let mut visited = BitSet::new(n);
    rc.ws.charge(visited.word_count(), Channel::Core);
    let mut stack: Vec<VertexId> = vec![s];
    rc.ws.charge(1, Channel::Core);
    let mut charged_stack = 1usize;
    visited.set(s.y as usize * side + s.x as usize);
    let mut found = s == t;
    while let Some(v) = stack.pop() {
        if found {
            break;
        }
        for d in DIRECTIONS {
            if grid.has_out(v, d) {
                let u = grid.step(v, d).unwrap();
                if u == t {
                    found = true;
                    break;
                }
                let ui = u.y as usize * side + u.x as usize;
                if !visited.get(ui) {
                    visited.set(ui);
                    if stack.len() + 1 > charged_stack {
                        rc.ws.charge(1, Channel::Core);
                        charged_stack += 1;
                    }
                    stack.push(u);
                }
            }
        }
    }
    rc.ws.release(visited.word_count() + charged_stack, Channel::Core);
    let metrics = finish_metrics(grid, &EngineConfig::default(), "dfs", &rc, started);
    Ok((found, metrics))
}

/// Divide-and-conquer reachability over the implicit auxiliary graph.
pub fn reach_aux(
    grid: &GridGraph,
    s: VertexId,
    t: VertexId,
    cfg: &EngineConfig,
) -> Result<(bool, Metrics), EngineError> {
    check_vertices(grid, s, t)?;
    let started = std::time::Instant::now();
    let mut rc = RunCtx::default();
    let m = grid.m();
    let ans = match cfg.backend {
        BackendKind::Oracle => {
            let mut be = OracleBackend::new(grid);
            let r = grid_multi_reach(grid, m, cfg, &mut be, &mut rc, 0, s, &[t])?[0];
            be.release(&mut rc);
            r
        }
        BackendKind::Recursive => {
            let mut be = RecursiveBackend::new(grid, m, *cfg);
            let r = grid_multi_reach(grid, m, cfg, &mut be, &mut rc, 0, s, &[t])?[0];
            be.release(&mut rc);
            r
        }
    };
    let metrics = finish_metrics(grid, cfg, "aux", &rc, started);
    Ok((ans, metrics))
}

/// Reachability between two auxiliary vertices of the top decomposition,
/// with implicit edges answered by the configured backend.
pub fn implicit_aux_reach(
    grid: &GridGraph,
    s: VertexId,
    t: VertexId,
    cfg: &EngineConfig,
) -> Result<(bool, Metrics), EngineError> {
    check_vertices(grid, s, t)?;
    let started = std::time::Instant::now();
    let mut rc = RunCtx::default();
    let m = grid.m();
    let decomp = Decomp::new(m, cfg.alpha);
    let sid = decomp.aux_id(s).expect("s must lie on a block boundary");
    let tid = decomp.aux_id(t).expect("t must lie on a block boundary");
    let env = AuxEnv {
        grid,
        decomp,
        cfg: *cfg,
        global_m: m,
    };
    let h = env.decomp.aux_count();
    let ans = match cfg.backend {
        BackendKind::Oracle => {
            let mut be = OracleBackend::new(grid);
            let r = aux_multi(&env, &mut be, &mut rc, &Membership::All, h, &[sid], &[tid], 1)?[0];
            be.release(&mut rc);
            r
        }
        BackendKind::Recursive => {
            let mut be = RecursiveBackend::new(grid, m, *cfg);
            let r = aux_multi(&env, &mut be, &mut rc, &Membership::All, h, &[sid], &[tid], 1)?[0];
            be.release(&mut rc);
            r
        }
    };
    let metrics = finish_metrics(grid, cfg, "aux", &rc, started);
    Ok((ans, metrics))
}

/// Component id (lowest vertex) of a surviving vertex in the strip of the
/// top-level frame, for cross-checking against the component labeler.
pub fn component_of(
    grid: &GridGraph,
    cfg: &EngineConfig,
    c: &crate::psep::Pseudoseparator,
    fctx: &FrameCtx,
    labels: &crate::psep::StripLabels,
    v: VertexId,
) -> Result<VertexId, EngineError> {
    let decomp = Decomp::new(grid.m(), cfg.alpha);
    let id = decomp.aux_id(v).expect("aux vertex");
    let _ = (c, fctx);
    match labels.component_of(id) {
        Some(l) => Ok(labels.lowest[l as usize]),
        None => Err(EngineError::Grid(GridError::VertexOutside { v, m: grid.m() })),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{generate_random, oracle_reach, parse_grid};

    fn fig1() -> GridGraph {
        let text = std::fs::read_to_string(
            std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/fig1.grid"),
        )
        .unwrap();
        parse_grid(&text).unwrap()
    }

    #[test]
    fn depth_bound_examples() {
        assert_eq!(depth_bound(0.2), 10);
        assert!(depth_bound(0.5) == 3);
    }

    #[test]
    fn window_reach_forward_and_reverse() {
        let g = parse_grid("grid 2\n0 0 1 0\n1 0 1 1\n2 2 1 2\n").unwrap();
        let view = g.full_view();
        let f = WindowReach::compute(&view, &[VertexId::new(0, 0)], false);
        assert!(f.get(&view, VertexId::new(1, 1)));
        assert!(!f.get(&view, VertexId::new(2, 2)));
        let r = WindowReach::compute(&view, &[VertexId::new(1, 2)], true);
        assert!(r.get(&view, VertexId::new(2, 2)));
        assert!(!r.get(&view, VertexId::new(0, 0)));
    }

    #[test]
    fn window_reach_matches_oracle_fuzz() {
        for seed in 0..30u64 {
            let g = generate_random(9, 0.45, seed);
            let view = g.full_view();
            let s = VertexId::new(seed as u32 % 10, (seed as u32 / 3) % 10);
            let f = WindowReach::compute(&view, &[s], false);
            for x in 0..=9 {
                for y in 0..=9 {
                    let t = VertexId::new(x, y);
                    assert_eq!(
                        f.get(&view, t),
                        oracle_reach(&view, s, t).unwrap(),
                        "seed {seed} {s}->{t}"
                    );
                }
            }
        }
    }

    #[test]
    fn trivial_cases() {
        let g = generate_random(8, 0.5, 1);
        let cfg = EngineConfig::default();
        let s = VertexId::new(3, 3);
        assert!(reach_aux(&g, s, s, &cfg).unwrap().0);
        let empty = GridGraph::new(8);
        assert!(!reach_aux(&empty, s, VertexId::new(4, 4), &cfg).unwrap().0);
    }

    #[test]
    fn dfs_branch_small_grid() {
        let g = parse_grid("grid 2\n0 0 1 0\n").unwrap();
        let cfg = EngineConfig::default();
        let (ans, _) = reach_aux(&g, VertexId::new(0, 0), VertexId::new(1, 0), &cfg).unwrap();
        assert!(ans);
        let (no, _) = reach_aux(&g, VertexId::new(1, 0), VertexId::new(0, 0), &cfg).unwrap();
        assert!(!no);
    }

    #[test]
    fn figure1_grid_reach() {
        let g = fig1();
        let cfg = EngineConfig::default();
        // pre-validate against the oracle, then check the engine
        let view = g.full_view();
        let s = VertexId::new(0, 1);
        assert!(oracle_reach(&view, s, VertexId::new(12, 11)).unwrap());
        assert!(!oracle_reach(&view, s, VertexId::new(0, 12)).unwrap());
        assert!(reach_aux(&g, s, VertexId::new(12, 11), &cfg).unwrap().0);
        assert!(!reach_aux(&g, s, VertexId::new(0, 12), &cfg).unwrap().0);
        let mut rcfg = cfg;
        rcfg.backend = BackendKind::Recursive;
        assert!(reach_aux(&g, s, VertexId::new(12, 11), &rcfg).unwrap().0);
        assert!(!reach_aux(&g, s, VertexId::new(0, 12), &rcfg).unwrap().0);
    }

    #[test]
    fn figure1_aux_path() {
        let g = fig1();
        let cfg = EngineConfig::default();
        // hops traced along drawn auxiliary edges
        let (ans, _) = implicit_aux_reach(&g, VertexId::new(0, 1), VertexId::new(12, 11), &cfg).unwrap();
        assert!(ans);
    }

    #[test]
    fn agreement_with_oracle_small_fuzz() {
        let cfg = EngineConfig::default();
        let mut checked = 0u32;
        for seed in 0..60u64 {
            let m = 8 + (seed % 3) as u32 * 4;
            let p = [0.3, 0.5, 0.7][(seed % 3) as usize];
            let g = generate_random(m, p, seed);
            let view = g.full_view();
            let s = VertexId::new(seed as u32 % (m + 1), (seed as u32 / 7) % (m + 1));
            let t = VertexId::new((seed as u32 / 3) % (m + 1), (seed as u32 / 11) % (m + 1));
            let want = oracle_reach(&view, s, t).unwrap();
            let (got, metrics) = reach_aux(&g, s, t, &cfg).unwrap();
            assert_eq!(got, want, "seed {seed} m={m} p={p} {s}->{t}");
            assert!(metrics.depth <= cfg.max_depth);
            checked += 1;
        }
        assert_eq!(checked, 60);
    }

    #[test]
    fn backend_swap_equivalence_small() {
        let mut ocfg = EngineConfig::default();
        ocfg.backend = BackendKind::Oracle;
        let mut rcfg = ocfg;
        rcfg.backend = BackendKind::Recursive;
        for seed in 0..20u64 {
            let m = 9 + (seed % 2) as u32 * 5;
            let g = generate_random(m, 0.5, seed);
            let s = VertexId::new(0, 0);
            let t = VertexId::new(m, m);
            let a = reach_aux(&g, s, t, &ocfg).unwrap().0;
            let b = reach_aux(&g, s, t, &rcfg).unwrap().0;
            assert_eq!(a, b, "seed {seed}");
        }
    }

    #[test]
    fn early_exit_equivalence_small() {
        let mut on = EngineConfig::default();
        on.early_exit = true;
        let mut off = on;
        off.early_exit = false;
        for seed in 0..12u64 {
            let g = generate_random(10, 0.5, seed + 100);
            let s = VertexId::new(1, 0);
            let t = VertexId::new(9, 10);
            assert_eq!(
                reach_aux(&g, s, t, &on).unwrap().0,
                reach_aux(&g, s, t, &off).unwrap().0,
                "seed {seed}"
            );
        }
    }

    #[test]
    fn single_block_degenerate_matches_direct() {
        // alpha -> 0: one block spanning the whole grid
        for seed in 0..10u64 {
            let g = generate_random(6, 0.5, seed);
            let d = Decomp::with_block_side(6, 6);
            assert_eq!(d.blocks_per_side, 1);
            let mut rc = RunCtx::default();
            let mut be = OracleBackend::new(&g);
            let env = AuxEnv {
                grid: &g,
                decomp: d,
                cfg: EngineConfig::default(),
                global_m: 6,
            };
            let view = g.full_view();
            for (s, t) in [
                (VertexId::new(0, 0), VertexId::new(6, 6)),
                (VertexId::new(0, 3), VertexId::new(6, 3)),
            ] {
                let sid = env.decomp.aux_id(s).unwrap();
                let tid = env.decomp.aux_id(t).unwrap();
                let h = env.decomp.aux_count();
                let got =
                    aux_multi(&env, &mut be, &mut rc, &Membership::All, h, &[sid], &[tid], 1)
                        .unwrap()[0];
                assert_eq!(got, oracle_reach(&view, s, t).unwrap(), "seed {seed} {s}->{t}");
            }
            be.release(&mut rc);
        }
    }

    #[test]
    fn workspace_balances_to_zero() {
        let g = generate_random(16, 0.5, 7);
        let cfg = EngineConfig::default();
        let s = VertexId::new(0, 0);
        let t = VertexId::new(16, 16);
        let mut rc = RunCtx::default();
        let mut be = OracleBackend::new(&g);
        let _ = grid_multi_reach(&g, 16, &cfg, &mut be, &mut rc, 0, s, &[t]).unwrap();
        be.release(&mut rc);
        assert_eq!(rc.ws.live(Channel::Core), 0);
        assert_eq!(rc.ws.live(Channel::Conn), 0);
    }
}

