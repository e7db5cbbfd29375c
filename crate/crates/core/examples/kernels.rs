//! Tabulated and exponential-sum kernels against direct quadrature.

use collective_emission::kernels::{build_kernel_bank, reference::jn_reference, Physics};
use collective_emission::soe::{validation_error, validation_times};

fn main() -> collective_emission::Result<()> {
    let bank = build_kernel_bank(&Physics::default(), 8)?;
    println!("Chebyshev nodes per table: {:?}", bank.j_node_counts());
    println!("{:>4} {:>10} {:>28} {:>10}", "n", "t", "j_n(t)", "error");
    for n in [0, 3, 8] {
        for t in [0.5, 5.0, 19.9, 20.1, 400.0, 1e5] {
            let v = bank.eval_jn(n, t)?;
            let e = (v - jn_reference(n, t)?).norm();
            println!("{n:>4} {t:>10.1} {:>13.6e} {:>+13.6e}i {e:>10.2e}", v.re, v.im);
        }
    }
    let soe = bank.soe_j();
    let times = validation_times(bank.delta(), bank.t_max(), 60);
    println!(
        "{} exponentials on [{}, {:e}], error {:.2e} on a 60-point sweep",
        soe.n_modes(),
        bank.delta(),
        bank.t_max(),
        validation_error(soe, &times)?
    );
    Ok(())
}
