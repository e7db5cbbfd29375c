//! Time marching of the collocation equations.
//!
//! At step `j` the right-hand side is `f - (g^2/2 pi c) sum_n (L + H)`, where `L` sums the
//! `M - 1` most recent steps through the local arrays and `H` contracts the compressed
//! history `h_{n,k,mu}` with the exponential weights. The history absorbs step `j - M` at
//! the start of step `j`, so the ring buffer never holds more than `M` steps.

use num_complex::Complex64;
use serde::Serialize;
use std::collections::VecDeque;
use std::time::Instant;

use crate::collocation::{CollocationScheme, Discretization};
use crate::error::{Error, Result};
use crate::kernels::Physics;
use crate::numkit::legendre::legendre_all;
use crate::sources::Forcing;

/// Steps whose forcing values are evaluated together.
const FORCING_CHUNK: usize = 32;

/// Receives each completed step.
pub trait TrajectorySink {
    /// `alpha[m*q + k]` at the nodes `times[k]` of step `j` (0-based).
    fn record(&mut self, j: usize, times: &[f64], alpha: &[Complex64]) -> Result<()>;
}

/// Discards everything; for timing runs.
#[derive(Debug, Default)]
pub struct NullSink;

impl TrajectorySink for NullSink {
    fn record(&mut self, _j: usize, _times: &[f64], _alpha: &[Complex64]) -> Result<()> {
        Ok(())
    }
}

/// Marching state: the last `M` steps and the history coefficients.
#[derive(Debug, Clone)]
pub struct SolverState {
    /// Index of the next step to take.
    pub j: usize,
    pub ring: VecDeque<Vec<Complex64>>,
    /// `h[(n*q + k)*n_e + mu]`.
    pub h: Vec<Complex64>,
    depth: usize,
}

impl SolverState {
    pub fn new(scheme: &CollocationScheme) -> Self {
        let (p, q) = (scheme.phys.p, scheme.disc.q);
        Self {
            j: 0,
            ring: VecDeque::with_capacity(scheme.window),
            h: vec![Complex64::new(0.0, 0.0); p * q * scheme.n_exponentials()],
            depth: scheme.window,
        }
    }

    /// Complex numbers held between steps.
    pub fn stored_values(&self, scheme: &CollocationScheme) -> usize {
        self.depth * scheme.phys.p * scheme.disc.q + self.h.len()
    }

    /// `h <- d_mu h + sum_l H_{k,l,mu} alpha_{n,j-M,l}`.
    pub fn update_history(&mut self, scheme: &CollocationScheme, oldest: &[Complex64]) {
        let Some(hist) = &scheme.history else { return };
        let (p, q, n_e) = (scheme.phys.p, scheme.disc.q, hist.n_e);
        for n in 0..p {
            let a = &oldest[n * q..(n + 1) * q];
            for k in 0..q {
                let h = &mut self.h[(n * q + k) * n_e..(n * q + k + 1) * n_e];
                for (hm, d) in h.iter_mut().zip(&hist.damping) {
                    *hm *= d;
                }
                for (l, al) in a.iter().enumerate() {
                    let row = &hist.update[(k * q + l) * n_e..(k * q + l + 1) * n_e];
                    for (hm, u) in h.iter_mut().zip(row) {
                        *hm += u * al;
                    }
                }
            }
        }
    }

    /// Take step `self.j` with forcing `f[k*p + m]` at its nodes; returns `alpha[m*q + k]`
    /// and the number of multiply-adds spent on the right-hand side.
    pub fn step(&mut self, scheme: &CollocationScheme, f: &[Complex64]) -> Result<(Vec<Complex64>, usize)> {
        let (p, q) = (scheme.phys.p, scheme.disc.q);
        let m_win = scheme.window;
        let mut work = 0;
        if self.j >= m_win && scheme.history.is_some() {
            let oldest = self.ring.pop_front().expect("ring holds M steps");
            self.update_history(scheme, &oldest);
            work += p * q * q * scheme.n_exponentials();
        } else if self.ring.len() == m_win {
            self.ring.pop_front();
        }
        let mut acc = vec![Complex64::new(0.0, 0.0); p * q];
        let lags = self.ring.len().min(m_win - 1);
        for d in 1..=lags {
            let prev = &self.ring[self.ring.len() - d];
            for m in 0..p {
                for n in (m % 2..p).step_by(2) {
                    let pref = scheme.prefactors[m * p + n];
                    let block = &scheme.local[d - 1][(m + n) / 2];
                    let a = &prev[n * q..(n + 1) * q];
                    for k in 0..q {
                        let s: Complex64 = block[k * q..(k + 1) * q].iter().zip(a).map(|(b, x)| b * x).sum();
                        acc[m * q + k] += s * pref;
                        work += q;
                    }
                }
            }
        }
        if let Some(hist) = &scheme.history {
            if self.j >= m_win {
                let n_e = hist.n_e;
                for m in 0..p {
                    for n in (m % 2..p).step_by(2) {
                        let pref = scheme.prefactors[m * p + n];
                        let w = &hist.weights[(m + n) / 2];
                        for k in 0..q {
                            let h = &self.h[(n * q + k) * n_e..(n * q + k + 1) * n_e];
                            let s: Complex64 = w.iter().zip(h).map(|(a, b)| a * b).sum();
                            acc[m * q + k] += s * pref;
                            work += n_e;
                        }
                    }
                }
            }
        }
        let coupling = scheme.phys.coupling();
        let mut b: Vec<Complex64> = (0..p * q)
            .map(|i| f[(i % q) * p + i / q] - acc[i] * coupling)
            .collect();
        scheme.lu.solve_in_place(&mut b)?;
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular {
                pivot: self.j,
                modulus: f64::NAN,
            });
        }
        self.ring.push_back(b.clone());
        self.j += 1;
        Ok((b, work))
    }
}

/// Bookkeeping of one march.
#[derive(Debug, Clone, Default, Serialize)]
pub struct MarchStats {
    pub steps: usize,
    pub window: usize,
    pub n_exponentials: usize,
    /// Wall time of the marching loop alone.
    pub marching_seconds: f64,
    /// Complex values carried between steps (ring buffer plus history).
    pub history_values: usize,
    /// Right-hand-side multiply-adds per step, when requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub work_per_step: Option<Vec<usize>>,
}

impl MarchStats {
    pub fn history_bytes(&self) -> usize {
        self.history_values * std::mem::size_of::<Complex64>()
    }
}

/// March all `N` steps, passing each to `sink`.
pub fn march<F, S>(scheme: &CollocationScheme, forcing: &F, sink: &mut S, record_work: bool) -> Result<MarchStats>
where
    F: Forcing + ?Sized,
    S: TrajectorySink + ?Sized,
{
    let (p, q) = (scheme.phys.p, scheme.disc.q);
    if forcing.p() != p {
        return Err(Error::InvalidArgument(format!(
            "forcing has {} modes, scheme has {p}",
            forcing.p()
        )));
    }
    let disc = &scheme.disc;
    let n = disc.n_steps;
    let mut state = SolverState::new(scheme);
    let mut work = record_work.then(|| Vec::with_capacity(n));
    let mut fbuf = vec![Complex64::new(0.0, 0.0); FORCING_CHUNK * q * p];
    let mut times = Vec::with_capacity(FORCING_CHUNK * q);
    let start = Instant::now();
    for chunk in (0..n).step_by(FORCING_CHUNK) {
        let end = (chunk + FORCING_CHUNK).min(n);
        times.clear();
        times.extend((chunk..end).flat_map(|j| (0..q).map(move |k| disc.node(j, k))));
        forcing.eval_many(&times, &mut fbuf[..times.len() * p])?;
        for j in chunk..end {
            let off = (j - chunk) * q;
            let (alpha, w) = state.step(scheme, &fbuf[off * p..(off + q) * p])?;
            if let Some(v) = work.as_mut() {
                v.push(w);
            }
            sink.record(j, &times[off..off + q], &alpha)?;
        }
    }
    Ok(MarchStats {
        steps: n,
        window: scheme.window,
        n_exponentials: scheme.n_exponentials(),
        marching_seconds: start.elapsed().as_secs_f64(),
        history_values: state.stored_values(scheme),
        work_per_step: work,
    })
}

/// March and keep everything.
pub fn solve<F: Forcing + ?Sized>(scheme: &CollocationScheme, forcing: &F) -> Result<(Trajectory, MarchStats)> {
    let mut traj = Trajectory::new(&scheme.phys, &scheme.disc);
    let stats = march(scheme, forcing, &mut traj, false)?;
    Ok((traj, stats))
}

/// All grid values of a run, `alpha[(j*p + m)*q + k]`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub phys: Physics,
    pub disc: Discretization,
    pub alpha: Vec<Complex64>,
}

impl TrajectorySink for Trajectory {
    fn record(&mut self, j: usize, _times: &[f64], alpha: &[Complex64]) -> Result<()> {
        let len = self.phys.p * self.disc.q;
        if self.alpha.len() != j * len {
            return Err(Error::InvalidArgument(format!("step {j} recorded out of order")));
        }
        self.alpha.extend_from_slice(alpha);
        Ok(())
    }
}

impl Trajectory {
    pub fn new(phys: &Physics, disc: &Discretization) -> Self {
        Self {
            phys: *phys,
            disc: disc.clone(),
            alpha: Vec::with_capacity(phys.p * disc.node_count()),
        }
    }

    pub fn p(&self) -> usize {
        self.phys.p
    }

    pub fn steps(&self) -> usize {
        self.alpha.len() / (self.phys.p * self.disc.q)
    }

    /// `alpha_m` at node `k` of step `j`.
    pub fn node_value(&self, m: usize, j: usize, k: usize) -> Complex64 {
        self.alpha[(j * self.phys.p + m) * self.disc.q + k]
    }

    /// Grid values of step `j`, `[m*q + k]`.
    pub fn step_values(&self, j: usize) -> &[Complex64] {
        let len = self.phys.p * self.disc.q;
        &self.alpha[j * len..(j + 1) * len]
    }

    /// Legendre coefficients of `alpha_m` on step `j`.
    pub fn coefficients(&self, m: usize, j: usize) -> Vec<Complex64> {
        let q = self.disc.q;
        let v = &self.step_values(j)[m * q..(m + 1) * q];
        self.disc.transform.coefficients(v)
    }

    fn locate(&self, t: f64) -> Result<(usize, f64)> {
        let t_end = self.steps() as f64 * self.disc.dt;
        if !(0.0..=t_end * (1.0 + 1e-14)).contains(&t) || self.steps() == 0 {
            return Err(Error::BeyondTrajectory { t, t_final: t_end });
        }
        let j = ((t / self.disc.dt).floor() as usize).min(self.steps() - 1);
        Ok((j, (t - self.disc.step_start(j)).clamp(0.0, self.disc.dt)))
    }

    /// `alpha_m(t)` for all `m`, by Legendre interpolation on the step containing `t`.
    pub fn alpha_at(&self, t: f64) -> Result<Vec<Complex64>> {
        let (j, s) = self.locate(t)?;
        let q = self.disc.q;
        let mut pl = vec![0.0; q];
        legendre_all(q, s, self.disc.dt, &mut pl);
        Ok((0..self.p())
            .map(|m| self.coefficients(m, j).iter().zip(&pl).map(|(c, p)| c * p).sum())
            .collect())
    }

    /// `a_m(t) = e^{-i Omega t} alpha_m(t)`.
    pub fn amplitudes_at(&self, t: f64) -> Result<Vec<Complex64>> {
        let phase = Complex64::from_polar(1.0, -self.phys.omega * t);
        Ok(self.alpha_at(t)?.into_iter().map(|a| a * phase).collect())
    }

    /// `P_a = sum_n |alpha_n|^2` at an arbitrary time.
    pub fn atomic_probability(&self, t: f64) -> Result<f64> {
        Ok(self.alpha_at(t)?.iter().map(|a| a.norm_sqr()).sum())
    }

    /// `(t_jk, P_a(t_jk))` over all nodes.
    pub fn probability_series(&self) -> Vec<(f64, f64)> {
        let (p, q) = (self.p(), self.disc.q);
        (0..self.steps())
            .flat_map(|j| (0..q).map(move |k| (j, k)))
            .map(|(j, k)| {
                let pa = (0..p).map(|m| self.node_value(m, j, k).norm_sqr()).sum();
                (self.disc.node(j, k), pa)
            })
            .collect()
    }

    /// Largest `|alpha_m|` over all nodes.
    pub fn max_abs_mode(&self, m: usize) -> f64 {
        (0..self.steps())
            .flat_map(|j| (0..self.disc.q).map(move |k| (j, k)))
            .map(|(j, k)| self.node_value(m, j, k).norm())
            .fold(0.0, f64::max)
    }

    /// Max-norm difference over all nodes of two runs on the same grid.
    pub fn max_node_difference(&self, other: &Trajectory) -> Result<f64> {
        if self.alpha.len() != other.alpha.len() || self.disc.q != other.disc.q || self.p() != other.p() {
            return Err(Error::InvalidArgument("trajectories live on different grids".into()));
        }
        Ok(self
            .alpha
            .iter()
            .zip(&other.alpha)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}

/// `E(t) = sqrt(sum_n |alpha_n(t) - alpha_n^ref(t)|^2)`; the shorter mode list is padded with zeros.
pub fn error_e(traj: &Trajectory, reference: &Trajectory, t: f64) -> Result<f64> {
    let a = traj.alpha_at(t)?;
    let b = reference.alpha_at(t)?;
    let zero = Complex64::new(0.0, 0.0);
    Ok((0..a.len().max(b.len()))
        .map(|n| (a.get(n).unwrap_or(&zero) - b.get(n).unwrap_or(&zero)).norm_sqr())
        .sum::<f64>()
        .sqrt())
}
