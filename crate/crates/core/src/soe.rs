//! Sum-of-exponentials representation of the kernels `j_n` for large times, and its lift
//! to the modal kernels `K_mn`.
//!
//! Deforming the defining contour of `j_n` to the segment `[0, -ia]` followed by a
//! horizontal ray splits `j_n = j_n^(1) + j_n^(2)`. The second piece is bounded by
//! [`jn2_bound`] and is dropped for `t >= delta`; the first is a Laplace-type integral
//! `2(-i)^{n+1}/Gamma((n+1)/2) int_0^a eta^n e^{eta^2 - eta t} d eta` that a quadrature in
//! `eta` turns into a sum of decaying exponentials in `t`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::kernels::{kmn_prefactor, reference, KernelBank, Physics};
use crate::numkit::gauss_legendre;
use crate::numkit::special::ln_gamma_half;

/// Highest `n` with nonzero weights; beyond it `|j_n(t)|` is below double precision for
/// every `t > 20`.
pub const N_SOE_MAX: usize = 23;

/// Bound on the discarded part of the deformed contour integral.
pub fn jn2_bound(a: f64, t: f64) -> f64 {
    14.0 * (2.0 * a * a - a * t).exp()
}

/// The constant in the bound, `2^{n/2} sqrt(n+1) / Gamma((n+1)/2)`.
pub fn jn2_constant(n: usize) -> f64 {
    (0.5 * n as f64 * std::f64::consts::LN_2 + 0.5 * ((n + 1) as f64).ln() - ln_gamma_half(n + 1)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SoeParams {
    pub delta: f64,
    pub t_max: f64,
    pub a: f64,
    pub tol: f64,
    /// Gauss-Legendre nodes per dyadic panel.
    pub panel_order: usize,
}

impl Default for SoeParams {
    fn default() -> Self {
        Self {
            delta: 20.0,
            t_max: 1e7,
            a: 5.0,
            tol: 1e-12,
            panel_order: 16,
        }
    }
}

impl SoeParams {
    fn key(&self) -> [u64; 5] {
        [
            self.delta.to_bits(),
            self.t_max.to_bits(),
            self.a.to_bits(),
            self.tol.to_bits(),
            self.panel_order as u64,
        ]
    }
}

/// `j_n(t) ~ sum_mu w_{n,mu} e^{-lambda_mu t}` for `t` in `[delta, t_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoeJ {
    pub params: SoeParams,
    /// Real exponents in `(0, a]`, ascending.
    pub lambdas: Vec<f64>,
    /// `weights[n][mu]` for `n <= N_SOE_MAX`.
    pub weights: Vec<Vec<Complex64>>,
    /// Largest absolute error seen in the validation sweep.
    pub achieved_error: f64,
}

impl SoeJ {
    pub fn n_modes(&self) -> usize {
        self.lambdas.len()
    }

    /// Zero for `n > N_SOE_MAX`.
    pub fn eval(&self, n: usize, t: f64) -> Complex64 {
        if n > N_SOE_MAX {
            return Complex64::new(0.0, 0.0);
        }
        self.weights[n]
            .iter()
            .zip(&self.lambdas)
            .map(|(w, &l)| w * (-l * t).exp())
            .sum()
    }

    pub fn weight(&self, n: usize, mu: usize) -> Complex64 {
        if n > N_SOE_MAX {
            Complex64::new(0.0, 0.0)
        } else {
            self.weights[n][mu]
        }
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// Validation points: log-spaced on `[delta, t_max]`, endpoints included.
pub fn validation_times(delta: f64, t_max: f64, count: usize) -> Vec<f64> {
    let (l0, l1) = (delta.ln(), t_max.ln());
    (0..count)
        .map(|i| {
            if i == 0 {
                delta
            } else if i + 1 == count {
                t_max
            } else {
                (l0 + (l1 - l0) * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}

/// Build without the validation sweep (the sweep is the expensive part).
fn construct(params: &SoeParams) -> Result<SoeJ> {
    let SoeParams {
        delta,
        t_max,
        a,
        tol,
        panel_order,
    } = *params;
    if !(delta > 0.0 && t_max > delta && a > 0.0 && tol > 0.0 && panel_order > 0) {
        return Err(Error::InvalidArgument(format!("bad SOE parameters {params:?}")));
    }
    let bound = jn2_bound(a, delta);
    if bound >= tol {
        return Err(Error::InvalidArgument(format!(
            "contour height a = {a} and split delta = {delta} leave a discarded tail of {bound:e} >= tol {tol:e}"
        )));
    }
    let levels = (a * t_max / delta).log2().ceil().max(0.0) as i32;
    let mut panels: Vec<(f64, f64)> = (0..=levels)
        .map(|k| (a * 0.5f64.powi(k + 1), a * 0.5f64.powi(k)))
        .collect();
    // the last dyadic panel stops short of the origin; close the gap
    panels.push((0.0, a * 0.5f64.powi(levels + 1)));

    let mut nodes = Vec::new();
    let mut qweights = Vec::new();
    for &(lo, hi) in &panels {
        let rule = gauss_legendre(panel_order, lo, hi)?;
        nodes.extend_from_slice(&rule.nodes);
        qweights.extend_from_slice(&rule.weights);
    }

    // |w_{n,mu}| in log space: ln omega + ln 2 + n ln eta + eta^2 - ln Gamma((n+1)/2)
    let log_weight = |n: usize, mu: usize| {
        let eta = nodes[mu];
        qweights[mu].ln() + std::f64::consts::LN_2 + n as f64 * eta.ln() + eta * eta - ln_gamma_half(n + 1)
    };
    // the largest contribution of each mode anywhere in [delta, t_max]
    let mut contributions: Vec<(usize, f64)> = (0..nodes.len())
        .map(|mu| {
            let c = (0..=N_SOE_MAX)
                .map(|n| (log_weight(n, mu) - nodes[mu] * delta).exp())
                .fold(0.0, f64::max);
            (mu, c)
        })
        .collect();
    contributions.sort_by(|x, y| x.1.total_cmp(&y.1));
    let mut dropped = 0.0;
    let mut keep = vec![true; nodes.len()];
    for &(mu, c) in &contributions {
        if dropped + c >= tol / 10.0 {
            break;
        }
        dropped += c;
        keep[mu] = false;
    }

    let mut kept: Vec<usize> = (0..nodes.len()).filter(|&mu| keep[mu]).collect();
    kept.sort_by(|&x, &y| nodes[x].total_cmp(&nodes[y]));
    let lambdas: Vec<f64> = kept.iter().map(|&mu| nodes[mu]).collect();
    let weights = (0..=N_SOE_MAX)
        .map(|n| {
            // 2 (-i)^{n+1}
            let phase = match (n + 1) % 4 {
                0 => Complex64::new(1.0, 0.0),
                1 => Complex64::new(0.0, -1.0),
                2 => Complex64::new(-1.0, 0.0),
                _ => Complex64::new(0.0, 1.0),
            };
            kept.iter().map(|&mu| phase * log_weight(n, mu).exp()).collect()
        })
        .collect();
    Ok(SoeJ {
        params: *params,
        lambdas,
        weights,
        achieved_error: f64::NAN,
    })
}

/// Largest absolute error over `n <= N_SOE_MAX` and the given times, against direct
/// quadrature of the defining integral.
pub fn validation_error(soe: &SoeJ, times: &[f64]) -> Result<f64> {
    let errs = times
        .par_iter()
        .map(|&t| {
            let mut worst: f64 = 0.0;
            for n in 0..=N_SOE_MAX {
                let exact = reference::jn_reference(n, t)?;
                worst = worst.max((soe.eval(n, t) - exact).norm());
            }
            Ok(worst)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(errs.into_iter().fold(0.0, f64::max))
}

/// Build and validate on 400 log-spaced times in `[delta, t_max]`.
pub fn build_soe_j(params: &SoeParams) -> Result<SoeJ> {
    let mut soe = construct(params)?;
    let times = validation_times(params.delta, params.t_max, 400);
    let err = validation_error(&soe, &times)?;
    if !(err <= params.tol) {
        return Err(Error::SoeAccuracy {
            achieved: err,
            tol: params.tol,
        });
    }
    soe.achieved_error = err;
    Ok(soe)
}

/// Process-wide memo of validated representations; they depend only on `params`.
pub fn shared_soe_j(params: &SoeParams) -> Result<Arc<SoeJ>> {
    static CACHE: OnceLock<Mutex<HashMap<[u64; 5], Arc<SoeJ>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(s) = cache.lock().expect("soe cache poisoned").get(&params.key()) {
        return Ok(s.clone());
    }
    let soe = Arc::new(build_soe_j(params)?);
    cache
        .lock()
        .expect("soe cache poisoned")
        .insert(params.key(), soe.clone());
    Ok(soe)
}

/// `K_mn(t) = pref(m,n) sum_mu W_{m+n,mu} e^{-lambda_mu t}` for `t >= delta/sqrt 2`; the
/// last exponent is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoeK {
    pub lambdas: Vec<Complex64>,
    /// `weights[n'][mu]` indexed by `n' = m + n`, before the `(m, n)` prefactor.
    pub weights: Vec<Vec<Complex64>>,
    pub split: f64,
}

impl SoeK {
    pub fn n_modes(&self) -> usize {
        self.lambdas.len()
    }

    /// Weight `w_{m,n,mu}`.
    pub fn weight(&self, m: usize, n: usize, mu: usize) -> Complex64 {
        self.weights[m + n][mu] * kmn_prefactor(m, n)
    }

    pub fn eval(&self, m: usize, n: usize, t: f64) -> Complex64 {
        let pref = kmn_prefactor(m, n);
        if pref == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let s: Complex64 = self.weights[m + n]
            .iter()
            .zip(&self.lambdas)
            .map(|(w, l)| w * (-l * t).exp())
            .sum();
        s * pref
    }
}

/// Lift the `j_n` representation to `K_mn` for `n' = m + n <= bank.n_max()`.
pub fn lift_soe_to_k(bank: &KernelBank, phys: &Physics) -> Result<SoeK> {
    let soe = bank.soe_j();
    let omega = phys.omega_ratio();
    let split = bank.delta() / std::f64::consts::SQRT_2;
    let mut lambdas: Vec<Complex64> = soe
        .lambdas
        .iter()
        .map(|&l| Complex64::new(std::f64::consts::SQRT_2 * l, -omega))
        .collect();
    let mut weights = Vec::with_capacity(bank.n_max() + 1);
    for np in 0..=bank.n_max() {
        let mut row: Vec<Complex64> = (0..soe.n_modes())
            .map(|mu| soe.weight(np, mu) / (-lambdas[mu]))
            .collect();
        let tail: Complex64 = row
            .iter()
            .zip(&lambdas)
            .map(|(w, l)| w * (-l * split).exp())
            .sum();
        row.push(bank.eval_kn(np, split)? - tail);
        weights.push(row);
    }
    lambdas.push(Complex64::new(0.0, 0.0));
    Ok(SoeK {
        lambdas,
        weights,
        split,
    })
}
