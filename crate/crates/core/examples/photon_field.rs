//! Photon field radiated by an excited atom and the probability budget `P_a + P_u`.

use collective_emission::cli::{prepare, RunConfig};
use collective_emission::photon::{field_grid, photon_probability, symmetric_grid, write_field_csv};

fn main() -> collective_emission::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.discretization.t_final = 20.0;
    cfg.discretization.n_steps = 200;
    let prep = prepare(&cfg, 1, None)?;
    let (traj, _, _) = prep.solve(&cfg, cfg.grid()?)?;
    let times = [5.0, 10.0, 20.0];
    let grid = field_grid(&traj, &prep.bank, &prep.source, &symmetric_grid(200.0, 8001), &times)?;
    for (i, &t) in times.iter().enumerate() {
        let pu = photon_probability(&grid, i);
        let pa = traj.atomic_probability(t)?;
        println!("t = {t:>4}: P_a = {pa:.6}, P_u = {:.6}, sum = {:.8}", pu.value, pa + pu.value);
    }
    let path = std::env::temp_dir().join("photon_field.csv");
    write_field_csv(&grid, &path)?;
    println!("field written to {}", path.display());
    Ok(())
}
