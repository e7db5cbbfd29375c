//! Reference solver with the local window stretched back to `t = 0`.
//!
//! It shares the kernel evaluators with the fast solver, so agreement between the two
//! checks the exponential-sum history and its recurrence, not the kernels themselves.

use serde::Serialize;

use crate::collocation::{CollocationScheme, Discretization, ModalKernel, Window};
use crate::error::{Error, Result};
use crate::kernels::Physics;
use crate::soe::SoeK;
use crate::sources::Forcing;
use crate::stepper::{march, solve, MarchStats, NullSink, Trajectory};

/// Largest step count accepted by the quadratic-cost solver.
pub const DENSE_STEP_LIMIT: usize = 2000;

pub fn direct_scheme<K: ModalKernel + ?Sized>(
    kernel: &K,
    phys: &Physics,
    disc: Discretization,
) -> Result<CollocationScheme> {
    if disc.n_steps > DENSE_STEP_LIMIT {
        return Err(Error::Discretization(format!(
            "dense history needs N <= {DENSE_STEP_LIMIT}, got {}",
            disc.n_steps
        )));
    }
    CollocationScheme::build(kernel, None, phys, disc, Window::Dense)
}

pub fn direct_solve<K, F>(kernel: &K, phys: &Physics, disc: Discretization, forcing: &F) -> Result<(Trajectory, MarchStats)>
where
    K: ModalKernel + ?Sized,
    F: Forcing + ?Sized,
{
    let scheme = direct_scheme(kernel, phys, disc)?;
    solve(&scheme, forcing)
}

/// Marching wall times of both solvers on one grid.
#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub n_steps: usize,
    pub fast: f64,
    pub direct: f64,
    pub fast_window: usize,
    pub fast_history_values: usize,
    pub direct_history_values: usize,
}

/// Times the marching loops only; array construction is excluded. Each solver is run
/// `repeats` times and the fastest run kept.
pub fn timing_probe<K, F>(
    kernel: &K,
    soe: &SoeK,
    phys: &Physics,
    disc: &Discretization,
    forcing: &F,
    window: Window,
    repeats: usize,
) -> Result<Timing>
where
    K: ModalKernel + ?Sized,
    F: Forcing + ?Sized,
{
    let fast = CollocationScheme::build(kernel, Some(soe), phys, disc.clone(), window)?;
    let direct = direct_scheme(kernel, phys, disc.clone())?;
    let best = |s: &CollocationScheme| -> Result<MarchStats> {
        let mut best: Option<MarchStats> = None;
        for _ in 0..repeats.max(1) {
            let st = march(s, forcing, &mut NullSink, false)?;
            if best.as_ref().is_none_or(|b| st.marching_seconds < b.marching_seconds) {
                best = Some(st);
            }
        }
        Ok(best.expect("at least one run"))
    };
    let f = best(&fast)?;
    let d = best(&direct)?;
    Ok(Timing {
        n_steps: disc.n_steps,
        fast: f.marching_seconds,
        direct: d.marching_seconds,
        fast_window: f.window,
        fast_history_values: f.history_values,
        direct_history_values: d.history_values,
    })
}
