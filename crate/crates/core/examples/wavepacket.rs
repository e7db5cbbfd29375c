//! Excitation of the cloud by an incoming Gaussian pulse at three carrier frequencies.

use collective_emission::cli::{prepare, RunConfig, ScenarioKind};

fn main() -> collective_emission::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.discretization.t_final = 200.0;
    cfg.discretization.n_steps = 400;
    cfg.scenario.kind = ScenarioKind::Wavepacket;
    // off resonance the packet is too broadband for exact free translation
    cfg.scenario.wavepacket.translation_tolerance = Some(1e-4);
    for xi0 in [0.4, 1.0, 1.6] {
        cfg.scenario.wavepacket.xi0 = xi0;
        let prep = prepare(&cfg, 1, None)?;
        let (traj, _, _) = prep.solve(&cfg, cfg.grid()?)?;
        let (t_peak, peak) = traj
            .probability_series()
            .into_iter()
            .fold((0.0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
        println!("xi0 = {xi0}: max P_a = {peak:.4e} at t = {t_peak:.1}, P_a(T) = {:.4e}", traj.atomic_probability(200.0)?);
    }
    Ok(())
}
