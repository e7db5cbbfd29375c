//! Compressed history against the dense reference: agreement and cost.

use collective_emission::cli::{prepare, RunConfig};
use collective_emission::collocation::{build_grid, Window};
use collective_emission::oracle::{direct_solve, timing_probe};

fn main() -> collective_emission::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.physics.p = 3;
    let prep = prepare(&cfg, 3, None)?;
    let disc = build_grid(50.0, 120, 4)?;
    let (fast, _, _) = prep.solve(&cfg, disc.clone())?;
    let (dense, _) = direct_solve(&prep.bank, &prep.phys, disc, &prep.source)?;
    println!("max node difference: {:.2e}", fast.max_node_difference(&dense)?);

    let window = Window::Auto {
        delta: cfg.soe.delta,
        t_max: cfg.soe.t_max,
    };
    println!("{:>6} {:>12} {:>12} {:>10} {:>10}", "N", "fast (s)", "dense (s)", "fast mem", "dense mem");
    for n in [250, 500, 1000, 2000] {
        let disc = build_grid(0.5 * n as f64, n, 4)?;
        let t = timing_probe(&prep.bank, &prep.soe, &prep.phys, &disc, &prep.source, window, 3)?;
        println!(
            "{n:>6} {:>12.4e} {:>12.4e} {:>10} {:>10}",
            t.fast, t.direct, t.fast_history_values, t.direct_history_values
        );
    }
    Ok(())
}
