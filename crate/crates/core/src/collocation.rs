//! Time grid, precomputed quadrature arrays and the per-step linear system.
//!
//! Unknowns of one step are flattened mode-major: row `m*q + k` holds `alpha_m` at node
//! `tau_k`. Modes are indexed `0..p`.
//!
//! The local window is stored by lag: `local[d-1]` couples step `j` to step `j-d` for
//! `d = 1..M-1`, which is the array written `L_{.,.,.,.,nu}` with `nu = M-1-d`.

use num_complex::Complex64;
use rayon::prelude::*;
use std::cell::RefCell;
use std::ops::RangeInclusive;
use std::sync::atomic::{AtomicUsize, Ordering};

use crate::error::{Error, Result};
use crate::kernels::{kmn_prefactor, KernelBank, Physics};
use crate::numkit::legendre::legendre_all;
use crate::numkit::{legendre_transform_pair, lu_factor, AdaptiveQuad, CMatrix, DenseLU, LegendreTransform};
use crate::soe::SoeK;

/// Uniform grid of `n_steps` subintervals of `[0, t_final]` with `q` Gauss nodes each.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub t_final: f64,
    pub n_steps: usize,
    pub dt: f64,
    pub q: usize,
    pub transform: LegendreTransform,
}

pub fn build_grid(t_final: f64, n_steps: usize, q: usize) -> Result<Discretization> {
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::Discretization(format!("final time must be positive, got {t_final}")));
    }
    if n_steps == 0 {
        return Err(Error::Discretization("need at least one time step".into()));
    }
    if q == 0 {
        return Err(Error::Discretization("need at least one node per step".into()));
    }
    let dt = t_final / n_steps as f64;
    Ok(Discretization {
        t_final,
        n_steps,
        dt,
        q,
        transform: legendre_transform_pair(q, dt)?,
    })
}

impl Discretization {
    pub fn tau(&self) -> &[f64] {
        &self.transform.rule.nodes
    }

    /// Start of step `j` (0-based).
    pub fn step_start(&self, j: usize) -> f64 {
        j as f64 * self.dt
    }

    /// Node `k` of step `j` (0-based).
    pub fn node(&self, j: usize, k: usize) -> f64 {
        self.step_start(j) + self.tau()[k]
    }

    pub fn node_count(&self) -> usize {
        self.n_steps * self.q
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_steps)
            .flat_map(|j| (0..self.q).map(move |k| (j, k)))
            .map(|(j, k)| self.node(j, k))
            .collect()
    }

    /// Smallest `M` with `(M-1) dt >= sigma delta / (sqrt 2 c)`.
    pub fn window_length(&self, phys: &Physics, delta: f64) -> usize {
        let reach = phys.sigma * delta / (std::f64::consts::SQRT_2 * phys.c);
        let mut m = (reach / self.dt).ceil().max(0.0) as usize + 1;
        while m > 1 && (m - 2) as f64 * self.dt >= reach {
            m -= 1;
        }
        while ((m - 1) as f64 * self.dt) < reach {
            m += 1;
        }
        m
    }
}

/// Range of `nu` used at step `j` (1-based), `max(0, M-j)..=M-2`; empty for `j = 1`.
pub fn local_nu_range(window: usize, j: usize) -> Option<RangeInclusive<usize>> {
    if window < 2 || j < 2 {
        return None;
    }
    Some(window.saturating_sub(j)..=window - 2)
}

/// Source of the modal kernels: `K_mn(t) = prefactor(m, n) * eval_k(m + n, t)`.
pub trait ModalKernel: Sync {
    fn n_max(&self) -> usize;
    fn eval_k(&self, n: usize, t: f64) -> Result<Complex64>;
    fn prefactor(&self, m: usize, n: usize) -> f64 {
        kmn_prefactor(m, n)
    }
}

impl ModalKernel for KernelBank {
    fn n_max(&self) -> usize {
        KernelBank::n_max(self)
    }

    fn eval_k(&self, n: usize, t: f64) -> Result<Complex64> {
        self.eval_kn(n, t)
    }
}

/// Counts of scalar quadratures performed while building each array.
#[derive(Debug, Default)]
pub struct QuadratureCounts {
    pub current: AtomicUsize,
    pub local: AtomicUsize,
    pub history: AtomicUsize,
}

impl QuadratureCounts {
    pub fn snapshot(&self) -> (usize, usize, usize) {
        (
            self.current.load(Ordering::Relaxed),
            self.local.load(Ordering::Relaxed),
            self.history.load(Ordering::Relaxed),
        )
    }
}

/// `q x q` blocks (row-major in `(k, l)`) for each even `n' = m + n`, index `n'/2`.
pub type ModeBlocks = Vec<Vec<Complex64>>;

fn quad_for(dt: f64) -> AdaptiveQuad {
    AdaptiveQuad {
        abs_tol: 1e-15 * dt.max(1e-300),
        rel_tol: 1e-13,
        max_panels: 4000,
    }
}

/// `int_{lo}^{hi} k_{n'}(c (shift - s) / sigma) P_l(s) ds` for all even `n' < 2p` and `l < q`,
/// Legendre-transformed to grid form. Returns blocks indexed `n'/2`, entry `k*q + l`
/// filled for the given node `k` only.
fn kernel_moments<K: ModalKernel + ?Sized>(
    kernel: &K,
    phys: &Physics,
    disc: &Discretization,
    hi: f64,
    shift: f64,
) -> Result<Vec<Vec<Complex64>>> {
    let q = disc.q;
    let p = phys.p;
    let scale = phys.c / phys.sigma;
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let mut leg = vec![0.0; q];
    let leg = RefCell::new(&mut leg);
    let moments = quad_for(disc.dt).integrate_vec(
        |s, out| {
            let mut pl = leg.borrow_mut();
            legendre_all(q, s, disc.dt, &mut pl);
            let arg = scale * (shift - s);
            for i in 0..p {
                let kv = match kernel.eval_k(2 * i, arg.max(0.0)) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.borrow_mut().get_or_insert(e);
                        Complex64::new(0.0, 0.0)
                    }
                };
                for l in 0..q {
                    out[i * q + l] = kv * pl[l];
                }
            }
        },
        p * q,
        0.0,
        hi,
    )?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    // coefficient form -> grid form: row_k . Tinv
    let tinv = &disc.transform.inverse;
    Ok((0..p)
        .map(|i| {
            (0..q)
                .map(|l2| (0..q).map(|l| moments[i * q + l] * tinv.get(l, l2)).sum())
                .collect()
        })
        .collect())
}

fn check_kernel_range<K: ModalKernel + ?Sized>(kernel: &K, phys: &Physics) -> Result<()> {
    if kernel.n_max() < phys.n_max() {
        return Err(Error::OutOfRange {
            what: "kernel order",
            index: phys.n_max(),
            limit: kernel.n_max(),
        });
    }
    Ok(())
}

/// Current-time array: `C[n'/2][k*q + l]`.
pub fn precompute_c<K: ModalKernel + ?Sized>(
    kernel: &K,
    disc: &Discretization,
    phys: &Physics,
    counts: &QuadratureCounts,
) -> Result<ModeBlocks> {
    check_kernel_range(kernel, phys)?;
    let (p, q) = (phys.p, disc.q);
    let rows = (0..q)
        .into_par_iter()
        .map(|k| {
            let tau = disc.tau()[k];
            counts.current.fetch_add(p * q, Ordering::Relaxed);
            kernel_moments(kernel, phys, disc, tau, tau)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(rows, p, q))
}

fn assemble(rows: Vec<Vec<Vec<Complex64>>>, p: usize, q: usize) -> ModeBlocks {
    let mut blocks = vec![vec![Complex64::new(0.0, 0.0); q * q]; p];
    for (k, row) in rows.into_iter().enumerate() {
        for (i, r) in row.into_iter().enumerate() {
            blocks[i][k * q..(k + 1) * q].copy_from_slice(&r);
        }
    }
    blocks
}

/// Local arrays for lags `d = 1..=max_lag`: `L[d-1][n'/2][k*q + l]`.
pub fn precompute_l<K: ModalKernel + ?Sized>(
    kernel: &K,
    disc: &Discretization,
    phys: &Physics,
    max_lag: usize,
    counts: &QuadratureCounts,
) -> Result<Vec<ModeBlocks>> {
    check_kernel_range(kernel, phys)?;
    let (p, q) = (phys.p, disc.q);
    let jobs: Vec<(usize, usize)> = (1..=max_lag).flat_map(|d| (0..q).map(move |k| (d, k))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(d, k)| {
            counts.local.fetch_add(p * q, Ordering::Relaxed);
            kernel_moments(kernel, phys, disc, disc.dt, d as f64 * disc.dt + disc.tau()[k])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut it = rows.into_iter();
    Ok((1..=max_lag)
        .map(|_| assemble(it.by_ref().take(q).collect(), p, q))
        .collect())
}

/// Arrays of the compressed history term.
#[derive(Debug, Clone)]
pub struct HistoryArrays {
    /// Number of exponentials.
    pub n_e: usize,
    /// Per-step damping `e^{-c lambda_mu dt / sigma}`.
    pub damping: Vec<Complex64>,
    /// `H[(k*q + l)*n_e + mu]`, grid form.
    pub update: Vec<Complex64>,
    /// `W[n'/2][mu]`, the weights before the `(m, n)` prefactor.
    pub weights: Vec<Vec<Complex64>>,
}

/// `H_{k,l,mu} = int_0^dt e^{-c lambda_mu (M dt + tau_k - s)/sigma} P_l(s) ds`, grid form.
pub fn precompute_h(
    lambdas: &[Complex64],
    disc: &Discretization,
    phys: &Physics,
    window: usize,
    counts: &QuadratureCounts,
) -> Result<Vec<Complex64>> {
    let q = disc.q;
    let n_e = lambdas.len();
    let scale = phys.c / phys.sigma;
    let dt = disc.dt;
    // with u = dt - s the integrand is e^{-kappa ((M-1) dt + tau_k)} e^{-kappa u} P_l(dt - u)
    let moments = lambdas
        .par_iter()
        .map(|&lam| {
            let kappa = lam * scale;
            counts.history.fetch_add(q, Ordering::Relaxed);
            if kappa.norm() == 0.0 {
                let mut v = vec![Complex64::new(0.0, 0.0); q];
                v[0] = Complex64::new(dt, 0.0);
                return Ok(v);
            }
            let mut leg = vec![0.0; q];
            let leg = RefCell::new(&mut leg);
            let quad = AdaptiveQuad {
                abs_tol: 0.0,
                rel_tol: 1e-14,
                max_panels: 4000,
            };
            quad.integrate_vec(
                |u, out| {
                    let mut pl = leg.borrow_mut();
                    legendre_all(q, dt - u, dt, &mut pl);
                    let e = (-kappa * u).exp();
                    for l in 0..q {
                        out[l] = e * pl[l];
                    }
                },
                q,
                0.0,
                dt,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let tinv = &disc.transform.inverse;
    let mut out = vec![Complex64::new(0.0, 0.0); q * q * n_e];
    for (mu, &lam) in lambdas.iter().enumerate() {
        let kappa = lam * scale;
        for k in 0..q {
            let lead = (-kappa * ((window - 1) as f64 * dt + disc.tau()[k])).exp();
            let lead = if lead.is_finite() { lead } else { Complex64::new(0.0, 0.0) };
            for l2 in 0..q {
                let v: Complex64 = (0..q).map(|l| moments[mu][l] * tinv.get(l, l2)).sum();
                out[(k * q + l2) * n_e + mu] = lead * v;
            }
        }
    }
    Ok(out)
}

/// LU of `I + (g^2 / 2 pi c) C` with rows `m*q + k` and columns `n*q + l`.
pub fn build_system<K: ModalKernel + ?Sized>(
    kernel: &K,
    c_blocks: &ModeBlocks,
    phys: &Physics,
    disc: &Discretization,
) -> Result<(CMatrix, DenseLU)> {
    let (p, q) = (phys.p, disc.q);
    let coupling = phys.coupling();
    let mut a = CMatrix::identity(p * q);
    for m in 0..p {
        for n in 0..p {
            let pref = kernel.prefactor(m, n);
            if pref == 0.0 {
                continue;
            }
            let block = &c_blocks[(m + n) / 2];
            for k in 0..q {
                for l in 0..q {
                    let i = m * q + k;
                    let j = n * q + l;
                    a.set(i, j, a.get(i, j) + block[k * q + l] * (pref * coupling));
                }
            }
        }
    }
    let lu = lu_factor(&a)?;
    Ok((a, lu))
}

/// How the local window is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Window {
    /// Shortest window for which the exponential sums are valid.
    Auto { delta: f64, t_max: f64 },
    /// Every past step is local: the dense-history reference.
    Dense,
    /// A fixed `M` (at least 1); history is compressed beyond it.
    Fixed(usize),
}

/// Everything needed to march: grid, arrays and the factorized step matrix.
#[derive(Debug)]
pub struct CollocationScheme {
    pub phys: Physics,
    pub disc: Discretization,
    /// `M`; steps `j-1 .. j-M+1` are local.
    pub window: usize,
    /// `(m, n)` prefactors, `p x p` row-major.
    pub prefactors: Vec<f64>,
    pub current: ModeBlocks,
    pub local: Vec<ModeBlocks>,
    pub history: Option<HistoryArrays>,
    pub system: CMatrix,
    pub lu: DenseLU,
    pub counts: QuadratureCounts,
}

impl CollocationScheme {
    pub fn build<K: ModalKernel + ?Sized>(
        kernel: &K,
        soe: Option<&SoeK>,
        phys: &Physics,
        disc: Discretization,
        window: Window,
    ) -> Result<Self> {
        phys.validate()?;
        let n = disc.n_steps;
        let window = match window {
            Window::Auto { delta, t_max } => {
                let limit = phys.sigma * t_max / (std::f64::consts::SQRT_2 * phys.c);
                if disc.t_final > limit {
                    return Err(Error::Discretization(format!(
                        "final time {} exceeds sigma t_max / (sqrt 2 c) = {limit}; rebuild the kernels with a larger t_max",
                        disc.t_final
                    )));
                }
                disc.window_length(phys, delta).min(n)
            }
            Window::Dense => n,
            Window::Fixed(m) => {
                if m == 0 {
                    return Err(Error::Discretization("window length must be at least 1".into()));
                }
                m.min(n)
            }
        };
        let counts = QuadratureCounts::default();
        let current = precompute_c(kernel, &disc, phys, &counts)?;
        let local = precompute_l(kernel, &disc, phys, window - 1, &counts)?;
        let history = if window < n {
            let soe = soe.ok_or_else(|| {
                Error::Discretization("history compression requested without an exponential sum".into())
            })?;
            if soe.weights.len() <= phys.n_max() {
                return Err(Error::OutOfRange {
                    what: "exponential-sum order",
                    index: phys.n_max(),
                    limit: soe.weights.len() - 1,
                });
            }
            let scale = phys.c / phys.sigma;
            Some(HistoryArrays {
                n_e: soe.n_modes(),
                damping: soe.lambdas.iter().map(|l| (-l * scale * disc.dt).exp()).collect(),
                update: precompute_h(&soe.lambdas, &disc, phys, window, &counts)?,
                weights: (0..phys.p).map(|i| soe.weights[2 * i].clone()).collect(),
            })
        } else {
            None
        };
        let (system, lu) = build_system(kernel, &current, phys, &disc)?;
        let p = phys.p;
        let prefactors = (0..p * p).map(|i| kernel.prefactor(i / p, i % p)).collect();
        Ok(Self {
            phys: *phys,
            disc,
            window,
            prefactors,
            current,
            local,
            history,
            system,
            lu,
            counts,
        })
    }

    /// `C_{m,n,k,l}` including the `(m, n)` prefactor.
    pub fn c_entry(&self, m: usize, n: usize, k: usize, l: usize) -> Complex64 {
        let pref = self.prefactors[m * self.phys.p + n];
        if pref == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        self.current[(m + n) / 2][k * self.disc.q + l] * pref
    }

    /// Local entry for lag `d` (`nu = M - 1 - d`) including the prefactor.
    pub fn l_entry(&self, m: usize, n: usize, k: usize, l: usize, lag: usize) -> Complex64 {
        let pref = self.prefactors[m * self.phys.p + n];
        if pref == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        self.local[lag - 1][(m + n) / 2][k * self.disc.q + l] * pref
    }

    pub fn n_exponentials(&self) -> usize {
        self.history.as_ref().map_or(0, |h| h.n_e)
    }
}


#[cfg(test)]
mod tests {
    use super::stubs::*;
    use super::*;
    use crate::kernels::build_kernel_bank;

    fn phys(p: usize) -> Physics {
        Physics {
            p,
            ..Physics::default()
        }
    }

    #[test]
    fn grid_nodes() {
        let d = build_grid(1.0, 1, 2).unwrap();
        let s = 1.0 / (2.0 * 3f64.sqrt());
        assert!((d.node(0, 0) - (0.5 - s)).abs() < 1e-15);
        assert!((d.node(0, 1) - (0.5 + s)).abs() < 1e-15);
        let d = build_grid(3.0, 7, 4).unwrap();
        let nodes = d.nodes();
        assert_eq!(nodes.len(), 28);
        assert!(nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(*nodes.last().unwrap() < 3.0);
        assert!(build_grid(1.0, 0, 2).is_err());
        assert!(build_grid(-1.0, 3, 2).is_err());
        assert!(build_grid(1.0, 3, 0).is_err());
    }

    #[test]
    fn window_is_minimal() {
        let p = phys(1);
        for n in [10, 37, 100, 1000] {
            let d = build_grid(50.0, n, 4).unwrap();
            let m = d.window_length(&p, 20.0);
            let reach = 0.1 * 20.0 / std::f64::consts::SQRT_2;
            assert!((m - 1) as f64 * d.dt >= reach);
            assert!(m == 1 || ((m - 2) as f64 * d.dt) < reach);
        }
    }

    #[test]
    fn nu_range() {
        assert_eq!(local_nu_range(5, 1), None);
        assert_eq!(local_nu_range(5, 2), Some(3..=3));
        assert_eq!(local_nu_range(5, 4), Some(1..=3));
        assert_eq!(local_nu_range(5, 9), Some(0..=3));
    }

    fn poly(t: f64) -> f64 {
        0.3 - 1.1 * t + 0.7 * t * t - 0.2 * t * t * t
    }

    fn poly_integral(a: f64, b: f64) -> f64 {
        let f = |t: f64| 0.3 * t - 0.55 * t * t + 0.7 / 3.0 * t.powi(3) - 0.05 * t.powi(4);
        f(b) - f(a)
    }

    #[test]
    fn unit_kernel_integrates_polynomials() {
        let ph = phys(3);
        let d = build_grid(2.0, 5, 4).unwrap();
        let counts = QuadratureCounts::default();
        let c = precompute_c(&Unit, &d, &ph, &counts).unwrap();
        let l = precompute_l(&Unit, &d, &ph, 3, &counts).unwrap();
        assert_eq!(counts.snapshot().0, ph.p * d.q * d.q);
        assert_eq!(counts.snapshot().1, 3 * ph.p * d.q * d.q);
        let q = d.q;
        // samples of v on step 0, integrate over [0, tau_k]
        let v: Vec<f64> = d.tau().iter().map(|&t| poly(t)).collect();
        for k in 0..q {
            let got: Complex64 = (0..q).map(|l| c[1][k * q + l] * v[l]).sum();
            assert!((got.re - poly_integral(0.0, d.tau()[k])).abs() < 1e-13);
            assert!(got.im.abs() < 1e-15);
        }
        // every lag integrates a full step: sum over lags of constant history = (M-1) dt
        let ones = vec![1.0; q];
        let total: Complex64 = (0..3)
            .map(|lag| (0..q).map(|i| l[lag][0][i] * ones[i]).sum::<Complex64>())
            .sum();
        assert!((total.re - 3.0 * d.dt).abs() < 1e-13);
    }

    #[test]
    fn constant_mode_history_array() {
        let ph = phys(1);
        let d = build_grid(1.0, 4, 3).unwrap();
        let counts = QuadratureCounts::default();
        let h = precompute_h(&[Complex64::new(0.0, 0.0)], &d, &ph, 2, &counts).unwrap();
        for k in 0..d.q {
            let s: Complex64 = (0..d.q).map(|l| h[k * d.q + l]).sum();
            assert!((s.re - d.dt).abs() < 1e-14);
        }
    }

    #[test]
    fn history_array_modulus_bound() {
        let ph = phys(1);
        let d = build_grid(4.0, 8, 4).unwrap();
        let counts = QuadratureCounts::default();
        let lambdas = [Complex64::new(0.3, -0.1), Complex64::new(2.0, 0.4), Complex64::new(0.01, 0.0)];
        let window = 3;
        let h = precompute_h(&lambdas, &d, &ph, window, &counts).unwrap();
        // coefficient form: undo the transform by applying T
        let q = d.q;
        for (mu, lam) in lambdas.iter().enumerate() {
            for k in 0..q {
                for l in 0..q {
                    let hat: Complex64 = (0..q)
                        .map(|l2| h[(k * q + l2) * lambdas.len() + mu] * d.transform.forward.get(l2, l))
                        .sum();
                    let bound = d.dt * (-10.0 * lam.re * ((window - 1) as f64 * d.dt + d.tau()[k])).exp();
                    assert!(hat.norm() <= bound * (1.0 + 1e-12), "mu={mu} k={k} l={l}");
                }
            }
        }
    }

    #[test]
    fn parity_blocks_and_symmetry() {
        let ph = phys(3);
        let bank = build_kernel_bank(&ph, ph.n_max()).unwrap();
        let d = build_grid(5.0, 10, 4).unwrap();
        let s = CollocationScheme::build(&bank, None, &ph, d, Window::Dense).unwrap();
        for k in 0..4 {
            for l in 0..4 {
                assert_eq!(s.c_entry(0, 1, k, l), Complex64::new(0.0, 0.0));
                assert_eq!(s.l_entry(1, 2, k, l, 3), Complex64::new(0.0, 0.0));
                assert_eq!(s.c_entry(0, 2, k, l), s.c_entry(2, 0, k, l));
                assert_eq!(s.system.get(k, 4 + l), Complex64::new(0.0, 0.0));
            }
        }
        let (c, l, h) = s.counts.snapshot();
        assert_eq!(c, 3 * 16);
        assert_eq!(l, 9 * 3 * 16);
        assert_eq!(h, 0);
    }

    #[test]
    fn arrays_independent_of_origin() {
        // the arrays only see dt and tau; two grids with equal dt give identical arrays
        let ph = phys(2);
        let bank = build_kernel_bank(&ph, ph.n_max()).unwrap();
        let a = CollocationScheme::build(&bank, None, &ph, build_grid(2.0, 8, 3).unwrap(), Window::Dense).unwrap();
        let b = CollocationScheme::build(&bank, None, &ph, build_grid(1.0, 4, 3).unwrap(), Window::Dense).unwrap();
        assert_eq!(a.current, b.current);
        assert_eq!(a.local[..3], b.local[..]);
        // a short window needs compressed history, which needs an exponential sum
        let c = CollocationScheme::build(&bank, None, &ph, build_grid(2.0, 8, 3).unwrap(), Window::Fixed(4));
        assert!(c.is_err());
    }

    #[test]
    fn system_collapses() {
        let ph = Physics {
            g: 0.0,
            p: 2,
            ..Physics::default()
        };
        let bank = build_kernel_bank(&ph, ph.n_max()).unwrap();
        let s = CollocationScheme::build(&bank, None, &ph, build_grid(1.0, 2, 3).unwrap(), Window::Dense).unwrap();
        let b: Vec<Complex64> = (0..6).map(|i| Complex64::new(i as f64, 1.0)).collect();
        assert_eq!(s.lu.solve(&b).unwrap(), b);

        let ph = Physics { p: 1, ..Physics::default() };
        let s = CollocationScheme::build(&bank, None, &ph, build_grid(1.0, 2, 1).unwrap(), Window::Dense).unwrap();
        let want = Complex64::new(1.0, 0.0) + s.c_entry(0, 0, 0, 0) * ph.coupling();
        assert_eq!(s.system.get(0, 0), want);
    }

    #[test]
    fn solve_residual() {
        use rand::{Rng, SeedableRng};
        let ph = Physics { p: 4, g: 0.5, ..Physics::default() };
        let bank = build_kernel_bank(&ph, ph.n_max()).unwrap();
        let s = CollocationScheme::build(&bank, None, &ph, build_grid(3.0, 3, 5).unwrap(), Window::Dense).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let b: Vec<Complex64> = (0..20).map(|_| Complex64::new(rng.gen(), rng.gen())).collect();
        let x = s.lu.solve(&b).unwrap();
        let r: f64 = s.system.mul_vec(&x).iter().zip(&b).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        assert!(r <= 1e-12 * nb);
    }

    #[test]
    fn time_limit_enforced() {
        let ph = phys(1);
        let bank = build_kernel_bank(&ph, 0).unwrap();
        let d = build_grid(1e6, 100, 2).unwrap();
        let err = CollocationScheme::build(&bank, None, &ph, d, Window::Auto { delta: 20.0, t_max: 1e7 });
        assert!(matches!(err, Err(Error::Discretization(_))));
        let _ = SingleExp(Complex64::new(1.0, 0.0)).soe(2);
    }
}
