//! Implicit-edge access for the auxiliary graph.
//!
//! The auxiliary graph is never stored; an [`EdgeBackend`] answers
//! "which perimeter vertices of this block are reachable from this one
//! inside the block's subgrid". A backend solves each block lazily, once,
//! into a boundary-pair bit matrix and serves all later queries from it.
//! Backend storage and scratch are charged to the [`Channel::Conn`]
//! workspace channel: like the connectivity labeler, the backend stands in
//! for machinery the space analysis accounts separately from the core
//! divide-and-conquer state.
//!
//! Two backends exist: the oracle backend here (per-source DFS over the
//! subgrid view) and the recursive backend in [`crate::engine`], which
//! solves each block with a nested instance of the full engine.

use std::collections::HashMap;
use std::rc::Rc;

use crate::aux::Block;
use crate::grid::{GridGraph, VertexId, DIRECTIONS};
use crate::meter::{Channel, Workspace};
use crate::psep::RunCtx;

/// Boundary-to-boundary reachability of one block. Row `p` holds the set
/// of perimeter positions reachable from position `p` (diagonal clear);
/// the transpose is kept for in-neighbor scans.
pub struct BlockMatrix {
    pub perim: usize,
    pub words_per_row: usize,
    out_rows: Vec<u64>,
    in_rows: Vec<u64>,
}

impl BlockMatrix {
    pub fn new(perim: usize) -> Self {
        let wpr = perim.div_ceil(64);
        BlockMatrix {
            perim,
            words_per_row: wpr,
            out_rows: vec![0u64; perim * wpr],
            in_rows: vec![0u64; perim * wpr],
        }
    }

    #[inline]
    pub fn out_row(&self, p: u32) -> &[u64] {
        let w = self.words_per_row;
        &self.out_rows[p as usize * w..(p as usize + 1) * w]
    }

    #[inline]
    pub fn in_row(&self, p: u32) -> &[u64] {
        let w = self.words_per_row;
        &self.in_rows[p as usize * w..(p as usize + 1) * w]
    }

    #[inline]
    pub fn edge(&self, up: u32, vp: u32) -> bool {
        self.out_row(up)[vp as usize >> 6] & (1u64 << (vp & 63)) != 0
    }

    pub fn set_edge(&mut self, up: u32, vp: u32) {
        let w = self.words_per_row;
        self.out_rows[up as usize * w + (vp as usize >> 6)] |= 1u64 << (vp & 63);
        self.in_rows[vp as usize * w + (up as usize >> 6)] |= 1u64 << (up & 63);
    }

    /// Words of backing storage, for space accounting.
    pub fn words(&self) -> usize {
        self.out_rows.len() + self.in_rows.len()
    }
}

/// Access to the implicit edges of the auxiliary graph. Matrices are
/// reference-counted so callers can hold several blocks at once.
pub trait EdgeBackend {
    /// Solved matrix of a block (lazily computed and memoized).
    fn matrix(&mut self, block: &Block, rc: &mut RunCtx) -> Rc<BlockMatrix>;

    /// Directed edge query by perimeter positions.
    fn edge(&mut self, block: &Block, up: u32, vp: u32, rc: &mut RunCtx) -> bool {
        rc.queries += 1;
        self.matrix(block, rc).edge(up, vp)
    }

    /// Blocks solved so far.
    fn block_solves(&self) -> u64;

    /// Release all memoized storage from the workspace.
    fn release(&mut self, rc: &mut RunCtx);
}

/// Per-source DFS over the block's subgrid view.
pub struct OracleBackend<'g> {
    grid: &'g GridGraph,
    memo: HashMap<(u32, u32, u32), Rc<BlockMatrix>>,
    solves: u64,
}

impl<'g> OracleBackend<'g> {
    pub fn new(grid: &'g GridGraph) -> Self {
        OracleBackend {
            grid,
            memo: HashMap::new(),
            solves: 0,
        }
    }
}

/// Solve a block with one DFS per perimeter source. Scratch is charged to
/// `Conn` for the duration of the solve.
pub fn solve_block_by_dfs(grid: &GridGraph, block: &Block, ws: &mut Workspace) -> BlockMatrix {
    let view = grid.subgrid_view(block.subgrid_ref()).expect("block in range");
    let (x0, y0, _, _) = view.bounds();
    let w = view.width() as usize + 1;
    let h = view.height() as usize + 1;
    let cells = w * h;
    let perim = block.perimeter_len() as usize;
    let mut mat = BlockMatrix::new(perim);

    let scratch_words = cells.div_ceil(8) + cells + perim;
    ws.charge(scratch_words, Channel::Conn);
    let mut seen = vec![0u8; cells];
    let mut stack: Vec<VertexId> = Vec::with_capacity(cells);
    // cell index -> perimeter position (or NONE)
    let mut cell_pos = vec![u32::MAX; cells];
    for p in 0..perim as u32 {
        let v = block.vertex_at(p);
        cell_pos[(v.y - y0) as usize * w + (v.x - x0) as usize] = p;
    }

    for p in 0..perim as u32 {
        let src = block.vertex_at(p);
        seen.iter_mut().for_each(|s| *s = 0);
        stack.clear();
        stack.push(src);
        seen[(src.y - y0) as usize * w + (src.x - x0) as usize] = 1;
        while let Some(v) = stack.pop() {
            for d in DIRECTIONS {
                if view.has_out(v, d) {
                    let nb = view.step(v, d).unwrap();
                    let ci = (nb.y - y0) as usize * w + (nb.x - x0) as usize;
                    if seen[ci] == 0 {
                        seen[ci] = 1;
                        let q = cell_pos[ci];
                        if q != u32::MAX && q != p {
                            mat.set_edge(p, q);
                        }
                        stack.push(nb);
                    }
                }
            }
        }
    }
    ws.release(scratch_words, Channel::Conn);
    mat
}

impl<'g> EdgeBackend for OracleBackend<'g> {
    fn matrix(&mut self, block: &Block, rc: &mut RunCtx) -> Rc<BlockMatrix> {
        let key = (block.i, block.j, block.t);
        if !self.memo.contains_key(&key) {
            let mat = solve_block_by_dfs(self.grid, block, &mut rc.ws);
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
