use gridreach::aux::Membership;
use gridreach::backend::{EdgeBackend, OracleBackend};
use gridreach::engine::*;
use gridreach::psep::*;
use gridreach::*;

fn main() {
    let cfg = EngineConfig::default();
    for n_exp in [10u32, 12, 15, 17, 20] {
        let n = 1u64 << n_exp;
        let m = ((n as f64).sqrt().round() as u32).saturating_sub(1).max(8);
        let g = generate_random(m, 0.5, 7);
        let decomp = Decomp::new(m, cfg.alpha);
        let env = AuxEnv { grid: &g, decomp, cfg, global_m: m };
        let mut rc = RunCtx::default();
        let mut be = OracleBackend::new(&g);
        let members = Membership::All;
        let h = env.decomp.aux_count();
        let fctx = FrameCtx::build(&env.decomp, &members, &mut be, &mut rc);
        let c = build_pseudoseparator(&env.decomp, &members, h, cfg.beta, &fctx, &mut rc).unwrap();
        let hh = h as f64;
        println!(
            "n=2^{n_exp} m={m} t={} h={h}: |S|={} C_v={} C_e={} shadows={} size={} (h^0.6={:.0}, c={:.1}) target={:.0}",
            env.decomp.t, c.sep_size, c.verts.len(), c.edges.len(), c.n_shadows, c.size(),
            hh.powf(0.6), c.size() as f64 / hh.powf(0.6), hh.powf(0.8)
        );
        c.release(&mut rc);
        fctx.release(&mut rc);
        be.release(&mut rc);
    }
}
