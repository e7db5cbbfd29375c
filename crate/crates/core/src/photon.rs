//! Photon amplitude from the modal trajectory.
//!
//! The scattered part is
//! `u - U = -(i g / 2 pi sigma) sum_n c_n int_0^t a_n(s) [j_n(2(c(t-s) - x)/sigma)
//! + (-1)^n j_n(2(c(t-s) + x)/sigma)] ds`
//! with `c_n` from [`photon_prefactor`]. The `s` integral runs step by step over the
//! trajectory's own Legendre representation; each step is cut into panels across which the
//! kernel argument moves by at most [`PANEL_SPAN`].

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::kernels::{photon_prefactor, KernelBank};
use crate::numkit::{cheb_fit, gauss_legendre, ChebInterpolant};
use crate::numkit::legendre::legendre_all;
use crate::sources::SourceTerm;
use crate::stepper::Trajectory;

/// Largest change of the kernel argument across one quadrature panel.
pub const PANEL_SPAN: f64 = 2.0;

/// `u - U` at `(x, t)` with `2q` Gauss nodes per panel.
pub fn reconstruct_scattered(traj: &Trajectory, bank: &KernelBank, x: f64, t: f64) -> Result<Complex64> {
    reconstruct_scattered_with(traj, bank, x, t, 2 * traj.disc.q)
}

pub fn reconstruct_scattered_with(
    traj: &Trajectory,
    bank: &KernelBank,
    x: f64,
    t: f64,
    nodes: usize,
) -> Result<Complex64> {
    scattered(traj, &|n, t| bank.eval_jn(n, t), x, t, nodes)
}

fn scattered<J>(traj: &Trajectory, jn: &J, x: f64, t: f64, nodes: usize) -> Result<Complex64>
where
    J: Fn(usize, f64) -> Result<Complex64> + ?Sized,
{
    let ph = &traj.phys;
    let disc = &traj.disc;
    let t_end = traj.steps() as f64 * disc.dt;
    if !(t >= 0.0 && t <= t_end * (1.0 + 1e-14)) {
        return Err(Error::BeyondTrajectory { t, t_final: t_end });
    }
    if t == 0.0 || ph.g == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let (p, q) = (ph.p, disc.q);
    let unit = gauss_legendre(nodes, 0.0, 1.0)?;
    let cpref: Vec<Complex64> = (0..p).map(photon_prefactor).collect();
    let rate = 2.0 * ph.c / ph.sigma;
    let mut pl = vec![0.0; q];
    let mut total = Complex64::new(0.0, 0.0);
    let last = (((t / disc.dt).ceil() as usize).max(1)).min(traj.steps());
    for i in 0..last {
        let lo = disc.step_start(i);
        let hi = (lo + disc.dt).min(t);
        if hi <= lo {
            continue;
        }
        let coefs: Vec<Vec<Complex64>> = (0..p).map(|n| traj.coefficients(n, i)).collect();
        let panels = ((rate * (hi - lo) / PANEL_SPAN).ceil() as usize).max(1);
        let h = (hi - lo) / panels as f64;
        for k in 0..panels {
            let a = lo + k as f64 * h;
            for (&u, &w) in unit.nodes.iter().zip(&unit.weights) {
                let s = a + u * h;
                legendre_all(q, s - lo, disc.dt, &mut pl);
                let phase = Complex64::from_polar(1.0, -ph.omega * s);
                let back = 2.0 * (ph.c * (t - s) - x) / ph.sigma;
                let fwd = 2.0 * (ph.c * (t - s) + x) / ph.sigma;
                for n in 0..p {
                    let alpha: Complex64 = coefs[n].iter().zip(&pl).map(|(c, v)| c * v).sum();
                    if alpha == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                    let kern = jn(n, back)? + jn(n, fwd)? * sign;
                    total += alpha * phase * cpref[n] * kern * (w * h);
                }
            }
        }
    }
    Ok(total * Complex64::new(0.0, -ph.g / (2.0 * PI * ph.sigma)))
}

/// Nodes per dyadic panel of [`FarTables`].
const FAR_NODES: usize = 32;

/// `j_n` on `[delta, hi]` as Chebyshev interpolants over dyadic panels `[delta 2^k, delta 2^{k+1}]`,
/// sampled from the bank. Evaluation is a short barycentric sum instead of the full
/// exponential sum, which matters when many field points are reconstructed.
pub struct FarTables<'a> {
    bank: &'a KernelBank,
    panels: Vec<Vec<ChebInterpolant>>,
}

impl<'a> FarTables<'a> {
    pub fn build(bank: &'a KernelBank, p: usize, hi: f64) -> Result<Self> {
        let delta = bank.delta();
        let hi = hi.min(bank.t_max());
        let count = if hi > delta { (hi / delta).log2().ceil() as usize } else { 0 };
        let panels = (0..p)
            .into_par_iter()
            .map(|n| {
                (0..count)
                    .map(|k| {
                        let a = delta * 2f64.powi(k as i32);
                        cheb_fit(|t| bank.eval_jn(n, t), a, (2.0 * a).min(bank.t_max()), FAR_NODES)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { bank, panels })
    }

    pub fn eval(&self, n: usize, t: f64) -> Result<Complex64> {
        if t < 0.0 {
            return Ok(self.eval(n, -t)?.conj());
        }
        let delta = self.bank.delta();
        if t > delta {
            let k = ((t / delta).log2().floor() as usize).min(self.panels[n].len().saturating_sub(1));
            if let Some(panel) = self.panels.get(n).and_then(|v| v.get(k)) {
                if t <= panel.hi * (1.0 + 1e-15) {
                    return Ok(panel.eval(t));
                }
            }
        }
        self.bank.eval_jn(n, t)
    }
}

/// `u = U + (u - U)`.
pub fn total_field(traj: &Trajectory, bank: &KernelBank, source: &SourceTerm, x: f64, t: f64) -> Result<Complex64> {
    Ok(source.free_field(x, t)? + reconstruct_scattered(traj, bank, x, t)?)
}

/// `u` and `u - U` on a tensor grid, `[it * xs.len() + ix]`.
#[derive(Debug, Clone, Serialize)]
pub struct FieldGrid {
    pub xs: Vec<f64>,
    pub times: Vec<f64>,
    pub total: Vec<Complex64>,
    pub scattered: Vec<Complex64>,
}

pub fn field_grid(
    traj: &Trajectory,
    bank: &KernelBank,
    source: &SourceTerm,
    xs: &[f64],
    times: &[f64],
) -> Result<FieldGrid> {
    let nx = xs.len();
    let reach = times.iter().fold(0.0f64, |a, t| a.max(*t)) * traj.phys.c + xs.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let far = FarTables::build(bank, traj.phys.p, 2.0 * reach / traj.phys.sigma * (1.0 + 1e-12))?;
    let jn = |n: usize, t: f64| far.eval(n, t);
    let pairs: Vec<(Complex64, Complex64)> = (0..times.len() * nx)
        .into_par_iter()
        .map(|i| {
            let (t, x) = (times[i / nx], xs[i % nx]);
            let sc = scattered(traj, &jn, x, t, 2 * traj.disc.q)?;
            Ok((source.free_field(x, t)? + sc, sc))
        })
        .collect::<Result<_>>()?;
    let (total, scattered) = pairs.into_iter().unzip();
    Ok(FieldGrid {
        xs: xs.to_vec(),
        times: times.to_vec(),
        total,
        scattered,
    })
}

/// `n` evenly spaced points on `[-radius, radius]`.
pub fn symmetric_grid(radius: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n).map(|i| -radius + 2.0 * radius * i as f64 / (n - 1) as f64).collect()
}

/// `P_u` over a truncated grid.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PhotonProbability {
    pub value: f64,
    /// Half-width of the grid actually integrated.
    pub radius: f64,
    /// Largest `|u|^2` at the two grid ends.
    pub edge_density: f64,
    /// Set when the edge density suggests mass beyond the grid.
    pub truncated: bool,
}

/// Edge density above which a photon probability is flagged as truncated.
pub const EDGE_DENSITY_LIMIT: f64 = 1e-8;

/// Trapezoid integral of `|u|^2` at output time `it`.
pub fn photon_probability(grid: &FieldGrid, it: usize) -> PhotonProbability {
    let nx = grid.xs.len();
    let row = &grid.total[it * nx..(it + 1) * nx];
    let value = grid
        .xs
        .windows(2)
        .zip(row.windows(2))
        .map(|(x, u)| 0.5 * (x[1] - x[0]) * (u[0].norm_sqr() + u[1].norm_sqr()))
        .sum();
    let edge_density = match (row.first(), row.last()) {
        (Some(a), Some(b)) => a.norm_sqr().max(b.norm_sqr()),
        _ => 0.0,
    };
    let radius = grid.xs.iter().fold(0.0f64, |r, x| r.max(x.abs()));
    PhotonProbability {
        value,
        radius,
        edge_density,
        truncated: edge_density > EDGE_DENSITY_LIMIT,
    }
}

/// CSV with columns `x, t, re_u, im_u, re_scattered, im_scattered`.
pub fn write_field_csv(grid: &FieldGrid, path: &Path) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "x,t,re_u,im_u,re_scattered,im_scattered")?;
    let nx = grid.xs.len();
    for (it, t) in grid.times.iter().enumerate() {
        for (ix, x) in grid.xs.iter().enumerate() {
            let u = grid.total[it * nx + ix];
            let s = grid.scattered[it * nx + ix];
            writeln!(w, "{x:e},{t:e},{:e},{:e},{:e},{:e}", u.re, u.im, s.re, s.im)?;
        }
    }
    w.flush()?;
    Ok(())
}
