//! Reachability in directed grid graphs with sublinear working memory.
//!
//! The engine decomposes the grid into blocks, works on the implicit
//! auxiliary graph of block-boundary vertices, and divides that graph with
//! pseudoseparators: subgraphs whose vertex removal plus crossing-edge
//! removal leaves only small components. A brute-force DFS oracle, a
//! verifying pseudoseparator builder and a counted-memory workspace sit
//! alongside so every claim the engine makes is checkable.

pub mod aux;
pub mod backend;
pub mod bits;
pub mod engine;
pub mod grid;
pub mod lemmas;
pub mod meter;
pub mod psep;
pub mod sep;

pub use aux::{
    aux_edge_exists, ccw_index, ccw_next, closer, crosses, AuxEdge, AuxId, Block, Decomp,
    Membership,
};
pub use engine::{
    depth_bound, grid_multi_reach, implicit_aux_reach, reach_aux, reach_dfs, AuxEnv, BackendKind,
    EngineConfig, EngineError, RecursiveBackend,
};
pub use grid::{
    generate_random, oracle_reach, parse_grid, serialize_grid, GridError, GridGraph, GridView,
    SubgridRef, VertexId,
};
pub use meter::{fit_scaling, Channel, Metrics, ScalingFit, Workspace};
pub use psep::{build_pseudoseparator, verify_pseudoseparator, FrameCtx, PsepReport, RunCtx};
