//! The kernels `j_n`, `k_n` and `K_mn`.
//!
//! `j_n` is tabulated by Chebyshev interpolation on `[0, delta]` and represented by a sum
//! of exponentials beyond. `k_n(t) = int_0^t e^{i Omega sigma s / c} j_n(sqrt 2 s) ds` is
//! tabulated on `[0, delta/sqrt 2]` by spectral integration and continued analytically,
//! term by term, from the exponential sum.

pub mod reference;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::SQRT_2;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::numkit::special::{ln_factorial, ln_gamma_half};
use crate::numkit::{cheb_points, ChebInterpolant};
use crate::soe::{shared_soe_j, SoeJ, SoeParams};

/// Model constants: wave speed `c`, resonance `omega`, cloud width `sigma`, coupling `g`
/// and Hermite mode count `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Physics {
    pub c: f64,
    pub omega: f64,
    pub sigma: f64,
    pub g: f64,
    pub p: usize,
}

impl Default for Physics {
    fn default() -> Self {
        Self {
            c: 1.0,
            omega: 1.0,
            sigma: 0.1,
            g: 0.2,
            p: 1,
        }
    }
}

impl Physics {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidArgument(format!("c must be positive, got {}", self.c)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !self.omega.is_finite() || !self.g.is_finite() {
            return Err(Error::InvalidArgument("omega and g must be finite".into()));
        }
        if self.p == 0 {
            return Err(Error::InvalidArgument("p must be at least 1".into()));
        }
        Ok(())
    }

    /// `Omega sigma / c`, the oscillation rate of `k_n` in kernel time.
    pub fn omega_ratio(&self) -> f64 {
        self.omega * self.sigma / self.c
    }

    /// Coupling prefactor `g^2 / (2 pi c)` of the integral operator.
    pub fn coupling(&self) -> f64 {
        self.g * self.g / (2.0 * std::f64::consts::PI * self.c)
    }

    pub fn n_max(&self) -> usize {
        2 * (self.p - 1)
    }
}

/// `(-1)^m (-i)^{m+n} Gamma((m+n+1)/2) / sqrt(m! n! / 2)`, real for even `m + n` and zero
/// otherwise.
pub fn kmn_prefactor(m: usize, n: usize) -> f64 {
    if (m + n) % 2 == 1 {
        return 0.0;
    }
    let sign_m = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    let sign_i = if ((m + n) / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
    let mag = ln_gamma_half(m + n + 1) - 0.5 * (ln_factorial(m) + ln_factorial(n) - std::f64::consts::LN_2);
    sign_m * sign_i * mag.exp()
}

/// `(-i)^n 2^{n/2} Gamma((n+1)/2) / sqrt(n!)`, the modal weight in the photon amplitude.
pub fn photon_prefactor(n: usize) -> Complex64 {
    let mag = (0.5 * n as f64 * std::f64::consts::LN_2 + ln_gamma_half(n + 1) - 0.5 * ln_factorial(n)).exp();
    let phase = match n % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    };
    phase * mag
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelOptions {
    pub delta: f64,
    pub soe: SoeParams,
    /// Target self-consistency of the Chebyshev tables.
    pub table_tol: f64,
    /// Interval count of the first table attempt; doubled until `table_tol` is met.
    pub initial_intervals: usize,
    /// Directory for the JSON table cache; nothing is written when absent.
    pub cache_dir: Option<PathBuf>,
}

impl Default for KernelOptions {
    fn default() -> Self {
        Self {
            delta: 20.0,
            soe: SoeParams::default(),
            table_tol: 1e-13,
            initial_intervals: 60,
            cache_dir: None,
        }
    }
}

/// Chebyshev tables of `j_0..j_{n_max}` on `[0, delta]`; independent of the physics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JTables {
    pub delta: f64,
    pub table_tol: f64,
    pub tables: Vec<ChebInterpolant>,
}

const QUAD_TOL: f64 = 1e-15;
const MAX_INTERVALS: usize = 7680;

fn build_j_table(n: usize, delta: f64, tol: f64, initial: usize) -> Result<ChebInterpolant> {
    let sample = |x: f64| {
        if x == 0.0 {
            // the normalization, exactly
            Ok(Complex64::new(1.0, 0.0))
        } else {
            reference::jn_real_axis(n, x, QUAD_TOL)
        }
    };
    let mut m = initial.max(2);
    let mut coarse = cheb_points(m + 1, 0.0, delta)
        .into_iter()
        .map(sample)
        .collect::<Result<Vec<_>>>()?;
    loop {
        let interp = ChebInterpolant::from_samples(0.0, delta, coarse.clone())?;
        let fine_nodes = cheb_points(2 * m + 1, 0.0, delta);
        let mut fine = Vec::with_capacity(2 * m + 1);
        let mut err: f64 = 0.0;
        for (i, &x) in fine_nodes.iter().enumerate() {
            if i % 2 == 0 {
                fine.push(coarse[i / 2]);
            } else {
                let v = sample(x)?;
                err = err.max((interp.eval(x) - v).norm());
                fine.push(v);
            }
        }
        if err < tol {
            return ChebInterpolant::from_samples(0.0, delta, fine);
        }
        m *= 2;
        if m > MAX_INTERVALS {
            return Err(Error::InvalidArgument(format!(
                "Chebyshev table for j_{n} did not reach self-error {tol:e} (last {err:e})"
            )));
        }
        coarse = fine;
    }
}

impl JTables {
    pub fn build(n_max: usize, delta: f64, table_tol: f64, initial: usize) -> Result<Self> {
        let tables = (0..=n_max)
            .into_par_iter()
            .map(|n| build_j_table(n, delta, table_tol, initial))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            delta,
            table_tol,
            tables,
        })
    }

    fn cache_file(dir: &Path, n_max: usize, delta: f64, table_tol: f64, initial: usize) -> PathBuf {
        dir.join(format!(
            "jtables_n{n_max}_d{:016x}_t{:016x}_m{initial}.json",
            delta.to_bits(),
            table_tol.to_bits()
        ))
    }

    fn load(path: &Path, n_max: usize, delta: f64, table_tol: f64) -> Option<Self> {
        let text = std::fs::read_to_string(path).ok()?;
        let raw: JTables = serde_json::from_str(&text).ok()?;
        if raw.delta != delta || raw.table_tol != table_tol || raw.tables.len() != n_max + 1 {
            return None;
        }
        let tables = raw
            .tables
            .into_iter()
            .map(|t| t.restore())
            .collect::<Result<Vec<_>>>()
            .ok()?;
        Some(Self {
            delta,
            table_tol,
            tables,
        })
    }

    /// Node counts of each table.
    pub fn node_counts(&self) -> Vec<usize> {
        self.tables.iter().map(|t| t.len()).collect()
    }
}

/// Tables are memoized process-wide and optionally cached on disk; a request for fewer
/// modes reuses a larger table set.
fn shared_j_tables(n_max: usize, opts: &KernelOptions) -> Result<Arc<JTables>> {
    type Key = (u64, u64, usize);
    static CACHE: OnceLock<Mutex<HashMap<Key, Arc<JTables>>>> = OnceLock::new();
    let key = (opts.delta.to_bits(), opts.table_tol.to_bits(), opts.initial_intervals);
    let cache = CACHE.get_or_init(Default::default);
    if let Some(t) = cache.lock().expect("table cache poisoned").get(&key) {
        if t.tables.len() > n_max {
            return Ok(t.clone());
        }
    }
    let file = opts
        .cache_dir
        .as_ref()
        .map(|d| JTables::cache_file(d, n_max, opts.delta, opts.table_tol, opts.initial_intervals));
    let loaded = file
        .as_ref()
        .and_then(|f| JTables::load(f, n_max, opts.delta, opts.table_tol));
    let tables = match loaded {
        Some(t) => t,
        None => {
            let t = JTables::build(n_max, opts.delta, opts.table_tol, opts.initial_intervals)?;
            if let (Some(dir), Some(f)) = (&opts.cache_dir, &file) {
                std::fs::create_dir_all(dir)?;
                std::fs::write(f, serde_json::to_string(&t)?)?;
            }
            t
        }
    };
    let tables = Arc::new(tables);
    let mut guard = cache.lock().expect("table cache poisoned");
    let keep = match guard.get(&key) {
        Some(old) if old.tables.len() >= tables.tables.len() => old.clone(),
        _ => {
            guard.insert(key, tables.clone());
            tables
        }
    };
    Ok(keep)
}

/// Evaluators for `j_n`, `k_n` and `K_mn`, `n <= n_max`.
#[derive(Debug, Clone)]
pub struct KernelBank {
    delta: f64,
    n_max: usize,
    omega: f64,
    j_tables: Arc<JTables>,
    k_tables: Vec<ChebInterpolant>,
    soe: Arc<SoeJ>,
    /// `k_n(delta/sqrt 2)` and the coefficients `w_{n,mu}/(i omega - sqrt 2 lambda_mu)`.
    k_split: Vec<Complex64>,
    k_coef: Vec<Vec<Complex64>>,
    /// `i omega - sqrt 2 lambda_mu`
    k_rates: Vec<Complex64>,
    t_max: f64,
}

/// `e^z - 1` without cancellation for small `|z|`.
fn expm1_c(z: Complex64) -> Complex64 {
    let (s, c) = z.im.sin_cos();
    let half = (0.5 * z.im).sin();
    Complex64::new(z.re.exp_m1() * c - 2.0 * half * half, z.re.exp() * s)
}

pub fn build_kernel_bank(phys: &Physics, n_max: usize) -> Result<KernelBank> {
    KernelBank::build(phys, n_max, &KernelOptions::default())
}

impl KernelBank {
    pub fn build(phys: &Physics, n_max: usize, opts: &KernelOptions) -> Result<Self> {
        phys.validate()?;
        if opts.delta != opts.soe.delta {
            return Err(Error::InvalidArgument(format!(
                "table split {} differs from the exponential-sum lower bound {}",
                opts.delta, opts.soe.delta
            )));
        }
        let delta = opts.delta;
        let j_tables = shared_j_tables(n_max, opts)?;
        let soe = shared_soe_j(&opts.soe)?;
        let omega = phys.omega_ratio();
        let split = delta / SQRT_2;
        let dense = if omega.abs() > 5.0 {
            (omega.abs() / 5.0).ceil() as usize
        } else {
            1
        };
        let k_tables = (0..=n_max)
            .into_par_iter()
            .map(|n| {
                let jt = &j_tables.tables[n];
                let count = (jt.len() - 1) * dense + 1;
                let samples = cheb_points(count, 0.0, split)
                    .into_iter()
                    .map(|s| Complex64::from_polar(1.0, omega * s) * jt.eval((SQRT_2 * s).min(delta)))
                    .collect();
                Ok(ChebInterpolant::from_samples(0.0, split, samples)?.spectral_integrate())
            })
            .collect::<Result<Vec<_>>>()?;
        let k_rates: Vec<Complex64> = soe
            .lambdas
            .iter()
            .map(|&l| Complex64::new(-SQRT_2 * l, omega))
            .collect();
        let k_coef = (0..=n_max)
            .map(|n| {
                (0..soe.n_modes())
                    .map(|mu| soe.weight(n, mu) / k_rates[mu])
                    .collect()
            })
            .collect();
        let k_split = k_tables.iter().map(|t| t.eval(split)).collect();
        Ok(Self {
            delta,
            n_max,
            omega,
            t_max: opts.soe.t_max,
            j_tables,
            k_tables,
            soe,
            k_split,
            k_coef,
            k_rates,
        })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn soe_j(&self) -> &SoeJ {
        &self.soe
    }

    pub fn j_node_counts(&self) -> Vec<usize> {
        self.j_tables.tables[..=self.n_max].iter().map(|t| t.len()).collect()
    }

    fn check_n(&self, n: usize) -> Result<()> {
        if n > self.n_max {
            return Err(Error::OutOfRange {
                what: "kernel index n",
                index: n,
                limit: self.n_max,
            });
        }
        Ok(())
    }

    /// `j_n(t)` for any real `|t| <= t_max`; negative times through conjugation.
    pub fn eval_jn(&self, n: usize, t: f64) -> Result<Complex64> {
        self.check_n(n)?;
        if t < 0.0 {
            return Ok(self.eval_jn(n, -t)?.conj());
        }
        if t <= self.delta {
            Ok(self.j_tables.tables[n].eval(t))
        } else if t <= self.t_max {
            Ok(self.soe.eval(n, t))
        } else {
            Err(Error::OutsideWindow {
                arg: t,
                lo: -self.t_max,
                hi: self.t_max,
            })
        }
    }

    /// `k_n(t)` for `0 <= t <= t_max/sqrt 2`.
    pub fn eval_kn(&self, n: usize, t: f64) -> Result<Complex64> {
        self.check_n(n)?;
        let split = self.delta / SQRT_2;
        let hi = self.t_max / SQRT_2;
        if !(t >= 0.0 && t <= hi) {
            return Err(Error::OutsideWindow { arg: t, lo: 0.0, hi });
        }
        if t <= split {
            return Ok(self.k_tables[n].eval(t));
        }
        let dt = t - split;
        let tail: Complex64 = self.k_coef[n]
            .iter()
            .zip(&self.k_rates)
            .map(|(w, r)| w * (r * split).exp() * expm1_c(r * dt))
            .sum();
        Ok(self.k_split[n] + tail)
    }

    /// `K_mn(t)`; zero for odd `m + n`.
    pub fn eval_kmn(&self, m: usize, n: usize, t: f64) -> Result<Complex64> {
        let p = self.n_max / 2 + 1;
        for (what, i) in [("mode index m", m), ("mode index n", n)] {
            if i >= p {
                return Err(Error::OutOfRange {
                    what,
                    index: i,
                    limit: p - 1,
                });
            }
        }
        let pref = kmn_prefactor(m, n);
        if pref == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        Ok(self.eval_kn(m + n, t)? * pref)
    }

    /// `Omega sigma / c` the bank was built for.
    pub fn omega_ratio(&self) -> f64 {
        self.omega
    }
}
