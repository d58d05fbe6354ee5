//! Directed grid graphs: representation, text format, random generation,
//! subgrid views and the DFS reachability oracle.
//!
//! A grid graph of side `m` has vertices at every lattice point of
//! `[0,m] x [0,m]` and directed edges only between horizontal or vertical
//! neighbors at distance one. Edges are stored as four outgoing-direction
//! flags per vertex, so edge queries and window views cost nothing beyond
//! the flag lookup.

use std::fmt::Write as _;

use thiserror::Error;

/// A lattice point of the grid. Ordered row-major: `(y, x)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct VertexId {
    pub x: u32,
    pub y: u32,
}

impl VertexId {
    pub fn new(x: u32, y: u32) -> Self {
        VertexId { x, y }
    }
}

impl PartialOrd for VertexId {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for VertexId {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.y, self.x).cmp(&(other.y, other.x))
    }
}

impl std::fmt::Display for VertexId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// Outgoing edge direction. The numeric order (E, N, W, S) is the
/// tie-break order of the canonical serialization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
#[repr(u8)]
pub enum Direction {
    East = 0,
    North = 1,
    West = 2,
    South = 3,
}

pub const DIRECTIONS: [Direction; 4] = [
    Direction::East,
    Direction::North,
    Direction::West,
    Direction::South,
];

impl Direction {
    #[inline]
    pub fn delta(self) -> (i64, i64) {
        match self {
            Direction::East => (1, 0),
            Direction::North => (0, 1),
            Direction::West => (-1, 0),
            Direction::South => (0, -1),
        }
    }

    /// Direction of the unit step from `a` to `b`, if they are lattice
    /// neighbors.
    pub fn between(a: VertexId, b: VertexId) -> Option<Direction> {
        let dx = b.x as i64 - a.x as i64;
        let dy = b.y as i64 - a.y as i64;
        match (dx, dy) {
            (1, 0) => Some(Direction::East),
            (0, 1) => Some(Direction::North),
            (-1, 0) => Some(Direction::West),
            (0, -1) => Some(Direction::South),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum GridError {
    #[error("line {line}: malformed header, expected `grid <m>`")]
    BadHeader { line: usize },
    #[error("line {line}: expected four integers `<x1> <y1> <x2> <y2>`")]
    BadEdgeLine { line: usize },
    #[error("line {line}: coordinate out of range for m={m}")]
    OutOfRange { line: usize, m: u32 },
    #[error("line {line}: edge endpoints are not at unit distance")]
    NonUnitEdge { line: usize },
    #[error("line {line}: duplicate edge")]
    DuplicateEdge { line: usize },
    #[error("vertex {v} outside grid of side {m}")]
    VertexOutside { v: VertexId, m: u32 },
    #[error("subgrid window ({i},{j}) with block side {t} out of range for m={m}")]
    WindowOutOfRange { i: u32, j: u32, t: u32, m: u32 },
}

/// Directed grid graph on `(m+1)^2` vertices with bit-packed outgoing
/// edge flags (one nibble per vertex, bit k = direction k present).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridGraph {
    m: u32,
    flags: Vec<u8>,
}

impl GridGraph {
    pub fn new(m: u32) -> Self {
        let side = m as usize + 1;
        GridGraph {
            m,
            flags: vec![0u8; side * side],
        }
    }

    #[inline]
    pub fn m(&self) -> u32 {
        self.m
    }

    /// Number of vertices, `(m+1)^2`.
    #[inline]
    pub fn vertex_count(&self) -> u64 {
        let s = self.m as u64 + 1;
        s * s
    }

    #[inline]
    fn idx(&self, v: VertexId) -> usize {
        debug_assert!(v.x <= self.m && v.y <= self.m);
        v.y as usize * (self.m as usize + 1) + v.x as usize
    }

    #[inline]
    pub fn contains(&self, v: VertexId) -> bool {
        v.x <= self.m && v.y <= self.m
    }

    /// Endpoint of the unit step from `v` in `dir`, if it stays on the
    /// lattice.
    #[inline]
    pub fn step(&self, v: VertexId, dir: Direction) -> Option<VertexId> {
        let (dx, dy) = dir.delta();
        let x = v.x as i64 + dx;
        let y = v.y as i64 + dy;
        if x < 0 || y < 0 || x > self.m as i64 || y > self.m as i64 {
            None
        } else {
            Some(VertexId::new(x as u32, y as u32))
        }
    }

    #[inline]
    pub fn has_out(&self, v: VertexId, dir: Direction) -> bool {
        self.flags[self.idx(v)] & (1 << dir as u8) != 0
    }

    /// Insert the directed edge `v -> step(v, dir)`. Returns false if the
    /// target would leave the lattice (edge not added) and true otherwise.
    pub fn add_edge(&mut self, v: VertexId, dir: Direction) -> bool {
        if self.step(v, dir).is_none() {
            return false;
        }
        let i = self.idx(v);
        self.flags[i] |= 1 << dir as u8;
        true
    }

    pub fn has_edge(&self, a: VertexId, b: VertexId) -> bool {
        match Direction::between(a, b) {
            Some(d) => self.has_out(a, d),
            None => false,
        }
    }

    pub fn edge_count(&self) -> u64 {
        self.flags.iter().map(|f| f.count_ones() as u64).sum()
    }

    /// All directed edges in canonical `(x, y, direction)` order.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        let m = self.m;
        (0..=m).flat_map(move |x| {
            (0..=m).flat_map(move |y| {
                let v = VertexId::new(x, y);
                DIRECTIONS.into_iter().filter_map(move |d| {
                    if self.has_out(v, d) {
                        Some((v, self.step(v, d).unwrap()))
                    } else {
                        None
                    }
                })
            })
        })
    }

    pub fn full_view(&self) -> GridView<'_> {
        GridView {
            g: self,
            x0: 0,
            y0: 0,
            x1: self.m,
            y1: self.m,
        }
    }

    /// Read-only induced-subgraph view of the block window of `r`.
    pub fn subgrid_view(&self, r: SubgridRef) -> Result<GridView<'_>, GridError> {
        let x0 = r.i as u64 * r.t as u64;
        let y0 = r.j as u64 * r.t as u64;
        if r.t == 0 || x0 >= self.m as u64 || y0 >= self.m as u64 {
            return Err(GridError::WindowOutOfRange {
                i: r.i,
                j: r.j,
                t: r.t,
                m: self.m,
            });
        }
        let x1 = ((r.i as u64 + 1) * r.t as u64).min(self.m as u64);
        let y1 = ((r.j as u64 + 1) * r.t as u64).min(self.m as u64);
        Ok(GridView {
            g: self,
            x0: x0 as u32,
            y0: y0 as u32,
            x1: x1 as u32,
            y1: y1 as u32,
        })
    }
}

/// Reference to the `(i,j)`-th block of a decomposition with block side
/// `t`: the vertex window `[i*t, (i+1)*t] x [j*t, (j+1)*t]`, clamped to
/// the parent grid (the last row/column of blocks may be smaller).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SubgridRef {
    pub i: u32,
    pub j: u32,
    pub t: u32,
}

/// Window view of a grid. Exposes exactly the vertices inside the window
/// and the edges of the parent with both endpoints inside; no edge data is
/// copied.
#[derive(Clone, Copy, Debug)]
pub struct GridView<'a> {
    g: &'a GridGraph,
    x0: u32,
    y0: u32,
    x1: u32,
    y1: u32,
}

impl<'a> GridView<'a> {
    pub fn bounds(&self) -> (u32, u32, u32, u32) {
        (self.x0, self.y0, self.x1, self.y1)
    }

    #[inline]
    pub fn contains(&self, v: VertexId) -> bool {
        v.x >= self.x0 && v.x <= self.x1 && v.y >= self.y0 && v.y <= self.y1
    }

    #[inline]
    pub fn width(&self) -> u32 {
        self.x1 - self.x0
    }

    #[inline]
    pub fn height(&self) -> u32 {
        self.y1 - self.y0
    }

    pub fn vertex_count(&self) -> u64 {
        (self.width() as u64 + 1) * (self.height() as u64 + 1)
    }

    #[inline]
    pub fn has_out(&self, v: VertexId, dir: Direction) -> bool {
        if !self.contains(v) || !self.g.has_out(v, dir) {
            return false;
        }
        // target stays on the lattice whenever the flag is set
        self.contains(self.g.step(v, dir).unwrap())
    }

    #[inline]
    pub fn step(&self, v: VertexId, dir: Direction) -> Option<VertexId> {
        self.g.step(v, dir).filter(|t| self.contains(*t))
    }

    pub fn edges(&self) -> Vec<(VertexId, VertexId)> {
        let mut out = Vec::new();
        for x in self.x0..=self.x1 {
            for y in self.y0..=self.y1 {
                let v = VertexId::new(x, y);
                for d in DIRECTIONS {
                    if self.has_out(v, d) {
                        out.push((v, self.g.step(v, d).unwrap()));
                    }
                }
            }
        }
        out
    }
}

/// Parse the canonical grid format. Line 1 is `grid <m>`; every further
/// non-comment, non-blank line is `<x1> <y1> <x2> <y2>` for one directed
/// unit edge. `#` starts a comment.
pub fn parse_grid(text: &str) -> Result<GridGraph, GridError> {
    let mut lines = text.lines().enumerate();
    let (mut lineno, mut header) = (0usize, None);
    for (n, raw) in lines.by_ref() {
        lineno = n + 1;
        let s = strip_comment(raw).trim();
        if s.is_empty() {
            continue;
        }
        header = Some(s.to_owned());
        break;
    }
    let header = header.ok_or(GridError::BadHeader { line: lineno.max(1) })?;
    let mut parts = header.split_whitespace();
    let m = match (parts.next(), parts.next(), parts.next()) {
        (Some("grid"), Some(ms), None) => ms
            .parse::<u32>()
            .map_err(|_| GridError::BadHeader { line: lineno })?,
        _ => return Err(GridError::BadHeader { line: lineno }),
    };
    let mut g = GridGraph::new(m);
    for (n, raw) in lines {
        let line = n + 1;
        let s = strip_comment(raw).trim();
        if s.is_empty() {
            continue;
        }
        let nums: Vec<&str> = s.split_whitespace().collect();
        if nums.len() != 4 {
            return Err(GridError::BadEdgeLine { line });
        }
        let vals: Vec<u64> = nums
            .iter()
            .map(|t| t.parse::<u64>())
            .collect::<Result<_, _>>()
            .map_err(|_| GridError::BadEdgeLine { line })?;
        if vals.iter().any(|&v| v > m as u64) {
            return Err(GridError::OutOfRange { line, m });
        }
        let a = VertexId::new(vals[0] as u32, vals[1] as u32);
        let b = VertexId::new(vals[2] as u32, vals[3] as u32);
        let dir = Direction::between(a, b).ok_or(GridError::NonUnitEdge { line })?;
        if g.has_out(a, dir) {
            return Err(GridError::DuplicateEdge { line });
        }
        g.add_edge(a, dir);
    }
    Ok(g)
}

fn strip_comment(s: &str) -> &str {
    match s.find('#') {
        Some(i) => &s[..i],
        None => s,
    }
}

/// Serialize to the canonical format: header, then edges sorted by
/// `(x, y, direction)`. Deterministic and byte-stable.
pub fn serialize_grid(g: &GridGraph) -> String {
    let mut out = String::new();
    writeln!(out, "grid {}", g.m()).unwrap();
    for (a, b) in g.edges() {
        writeln!(out, "{} {} {} {}", a.x, a.y, b.x, b.y).unwrap();
    }
    out
}

/// Random grid: every candidate directed unit edge present independently
/// with probability `p`, deterministically per `(m, p, seed)`.
pub fn generate_random(m: u32, p: f64, seed: u64) -> GridGraph {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut g = GridGraph::new(m);
    for x in 0..=m {
        for y in 0..=m {
            let v = VertexId::new(x, y);
            for d in DIRECTIONS {
                if g.step(v, d).is_some() && rng.gen::<f64>() < p {
                    g.add_edge(v, d);
                }
            }
        }
    }
    g
}

/// DFS reachability oracle: true iff a directed path `s -> t` exists in
/// the (sub)grid. This is the base case of the divide-and-conquer engine
/// and the ground truth everywhere else.
pub fn oracle_reach(view: &GridView<'_>, s: VertexId, t: VertexId) -> Result<bool, GridError> {
    if !view.contains(s) {
        return Err(GridError::VertexOutside { v: s, m: view.x1 });
    }
    if !view.contains(t) {
        return Err(GridError::VertexOutside { v: t, m: view.x1 });
    }
    if s == t {
        return Ok(true);
    }
    let w = view.width() as usize + 1;
    let h = view.height() as usize + 1;
    let local = |v: VertexId| (v.y - view.y0) as usize * w + (v.x - view.x0) as usize;
    let mut seen = vec![false; w * h];
    let mut stack = vec![s];
    seen[local(s)] = true;
    while let Some(v) = stack.pop() {
        for d in DIRECTIONS {
            if view.has_out(v, d) {
                let u = view.step(v, d).unwrap();
                if u == t {
                    return Ok(true);
                }
                let li = local(u);
                if !seen[li] {
                    seen[li] = true;
                    stack.push(u);
                }
            }
        }
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_grid_roundtrip() {
        let g = parse_grid("grid 1\n0 0 1 0\n").unwrap();
        assert_eq!(g.m(), 1);
        assert_eq!(g.edge_count(), 1);
        assert!(g.has_edge(VertexId::new(0, 0), VertexId::new(1, 0)));
        assert_eq!(serialize_grid(&g), "grid 1\n0 0 1 0\n");
    }

    #[test]
    fn non_unit_edge_rejected() {
        let err = parse_grid("grid 2\n0 0 2 0\n").unwrap_err();
        assert!(matches!(err, GridError::NonUnitEdge { line: 2 }));
    }

    #[test]
    fn parse_errors_name_lines() {
        assert!(matches!(
            parse_grid("grid x\n"),
            Err(GridError::BadHeader { line: 1 })
        ));
        assert!(matches!(
            parse_grid("grid 2\n# c\n0 0 1\n"),
            Err(GridError::BadEdgeLine { line: 3 })
        ));
        assert!(matches!(
            parse_grid("grid 2\n0 0 0 3\n"),
            Err(GridError::OutOfRange { line: 2, m: 2 })
        ));
        assert!(matches!(
            parse_grid("grid 2\n0 0 1 0\n0 0 1 0\n"),
            Err(GridError::DuplicateEdge { line: 3 })
        ));
    }

    #[test]
    fn empty_grid_serializes_to_header_only() {
        assert_eq!(serialize_grid(&GridGraph::new(0)), "grid 0\n");
    }

    #[test]
    fn generate_p0_p1() {
        let g0 = generate_random(5, 0.0, 7);
        assert_eq!(g0.edge_count(), 0);
        let g1 = generate_random(5, 1.0, 7);
        assert_eq!(g1.edge_count(), 4 * 5 * 6); // 4*m*(m+1)
    }

    #[test]
    fn generate_deterministic() {
        let a = generate_random(9, 0.4, 123);
        let b = generate_random(9, 0.4, 123);
        assert_eq!(a, b);
        let c = generate_random(9, 0.4, 124);
        assert_ne!(a, c);
    }

    #[test]
    fn serialize_deterministic() {
        let g = generate_random(6, 0.5, 42);
        assert_eq!(serialize_grid(&g), serialize_grid(&g));
    }

    #[test]
    fn subgrid_window_and_filter() {
        // m=12, t=4, block (0,0) is the 5x5-vertex window [0,4]^2
        let g = generate_random(12, 0.6, 1);
        let v = g.subgrid_view(SubgridRef { i: 0, j: 0, t: 4 }).unwrap();
        assert_eq!(v.bounds(), (0, 0, 4, 4));
        assert_eq!(v.vertex_count(), 25);
        let from_view = v.edges();
        let filtered: Vec<_> = g
            .edges()
            .filter(|(a, b)| v.contains(*a) && v.contains(*b))
            .collect();
        let mut a = from_view.clone();
        let mut b = filtered;
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn ragged_last_block() {
        let g = GridGraph::new(10);
        let v = g.subgrid_view(SubgridRef { i: 2, j: 0, t: 4 }).unwrap();
        assert_eq!(v.bounds(), (8, 0, 10, 4));
        assert!(g.subgrid_view(SubgridRef { i: 3, j: 0, t: 4 }).is_err());
    }

    #[test]
    fn full_window_view_equals_graph() {
        let g = generate_random(8, 0.5, 3);
        let full = g.subgrid_view(SubgridRef { i: 0, j: 0, t: 8 }).unwrap();
        assert_eq!(full.bounds(), (0, 0, 8, 8));
        assert_eq!(full.edges().len() as u64, g.edge_count());
    }

    #[test]
    fn oracle_reflexive_and_basic() {
        let g = parse_grid("grid 2\n0 0 1 0\n1 0 1 1\n").unwrap();
        let v = g.full_view();
        let s = VertexId::new(0, 0);
        assert!(oracle_reach(&v, s, s).unwrap());
        assert!(oracle_reach(&v, s, VertexId::new(1, 1)).unwrap());
        assert!(!oracle_reach(&v, VertexId::new(1, 1), s).unwrap());
        assert!(oracle_reach(&v, s, VertexId::new(9, 9)).is_err());
    }

    #[test]
    fn vertex_order_is_row_major() {
        assert!(VertexId::new(5, 0) < VertexId::new(0, 1));
        assert!(VertexId::new(0, 1) < VertexId::new(1, 1));
    }
}
