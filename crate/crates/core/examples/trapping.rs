//! Growing the mode count until the late-time excitation settles.

use collective_emission::cli::{search_p, RunConfig};

fn main() -> collective_emission::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.discretization.t_final = 200.0;
    cfg.discretization.n_steps = 400;
    cfg.p_search.enabled = true;
    let (steps, p) = search_p(&cfg, None)?;
    for s in &steps {
        println!("p = {:>2}: P_a(200) = {:.6e}", s.p, s.final_probability);
    }
    println!("settled at p = {p}");
    Ok(())
}
