//! Decay of an initially excited cloud, compared with the single-emitter rate `2 g^2`.

use collective_emission::cli::{prepare, RunConfig};

fn main() -> collective_emission::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.discretization.t_final = 100.0;
    cfg.discretization.n_steps = 200;
    let g = cfg.physics.g;
    for p in [1, 7] {
        let prep = prepare(&cfg, p, None)?;
        let (traj, stats, _) = prep.solve(&cfg, cfg.grid()?)?;
        println!("p = {p}: window {} steps, {} exponentials", stats.window, stats.n_exponentials);
        for t in [5.0, 12.5, 25.0, 50.0, 100.0] {
            let pa = traj.atomic_probability(t)?;
            println!("  t = {t:>5}: P_a = {pa:.6e}   e^(-2g^2 t) = {:.6e}", (-2.0 * g * g * t).exp());
        }
    }
    Ok(())
}
