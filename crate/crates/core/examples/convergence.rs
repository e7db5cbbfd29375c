//! Observed order of the fourth- and eighth-order schemes.

use collective_emission::cli::{converge, RunConfig};

fn main() -> collective_emission::Result<()> {
    for (q, n_list) in [(4, vec![25, 50, 100, 200, 400]), (8, vec![20, 40, 80, 160])] {
        let mut cfg = RunConfig::default();
        cfg.discretization.q = q;
        cfg.converge.t_star = Some(100.0);
        cfg.converge.n_list = n_list;
        cfg.converge.reference_n = 3200;
        let rep = converge(&cfg, None, None)?;
        println!("q = {q}");
        for (pt, ord) in rep.points.iter().zip(std::iter::once(&f64::NAN).chain(&rep.pairwise)) {
            println!("  dt = {:.4}  E = {:.3e}  order {ord:.2}", pt.dt, pt.error);
        }
        println!("  fitted order {:?} over {} points", rep.order, rep.fitted_points);
    }
    Ok(())
}
