use gridreach::*;
use std::time::Instant;

fn main() {
    // run m=64 recursive repeatedly for sampling
    let g = generate_random(64, 0.5, 42);
    let s = VertexId::new(0, 0);
    let t = VertexId::new(64, 64);
    let mut cfg = EngineConfig::default();
    cfg.backend = BackendKind::Recursive;
    let t0 = Instant::now();
    for _ in 0..3 {
        let _ = reach_aux(&g, s, t, &cfg).unwrap();
    }
    println!("{:?}", t0.elapsed());
}
