//! Shifted Legendre polynomials on `[0, dt]` and the discrete Legendre transform.

use super::quad::{gauss_legendre, QuadRule};
use crate::error::{Error, Result};

/// Legendre polynomial of degree `l` on `[0, dt]`, normalized so that `P_l(dt) = 1`.
pub fn legendre_eval(l: usize, tau: f64, dt: f64) -> f64 {
    let x = 2.0 * tau / dt - 1.0;
    legendre_std(l, x)
}

/// All degrees `0..n` at once.
pub fn legendre_all(n: usize, tau: f64, dt: f64, out: &mut [f64]) {
    let x = 2.0 * tau / dt - 1.0;
    if n == 0 {
        return;
    }
    out[0] = 1.0;
    if n > 1 {
        out[1] = x;
    }
    for k in 2..n {
        let kf = k as f64;
        out[k] = ((2.0 * kf - 1.0) * x * out[k - 1] - (kf - 1.0) * out[k - 2]) / kf;
    }
}

fn legendre_std(l: usize, x: f64) -> f64 {
    match l {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=l {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            p1
        }
    }
}

/// Row-major `q x q` real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Square {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Square {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn matmul(&self, other: &Square) -> Square {
        let n = self.n;
        let mut out = Square::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                for j in 0..n {
                    out.data[i * n + j] += a * other.get(k, j);
                }
            }
        }
        out
    }
}

/// The pair `(T, T^{-1})` with `T[k][l] = P_l(tau_k)` at the `q` Gauss-Legendre nodes of
/// `[0, dt]`. `T^{-1}` maps grid values to Legendre coefficients.
#[derive(Debug, Clone)]
pub struct LegendreTransform {
    pub rule: QuadRule,
    pub forward: Square,
    pub inverse: Square,
}

pub fn legendre_transform_pair(q: usize, dt: f64) -> Result<LegendreTransform> {
    let rule = gauss_legendre(q, 0.0, dt)?;
    let mut forward = Square::zeros(q);
    let mut inverse = Square::zeros(q);
    let mut row = vec![0.0; q];
    for k in 0..q {
        legendre_all(q, rule.nodes[k], dt, &mut row);
        for l in 0..q {
            forward.set(k, l, row[l]);
            // discrete orthogonality: sum_k w_k P_l P_l' = dt/(2l+1) delta_ll'
            inverse.set(l, k, (2 * l + 1) as f64 / dt * rule.weights[k] * row[l]);
        }
    }
    let prod = forward.matmul(&inverse);
    let mut residual: f64 = 0.0;
    for i in 0..q {
        for j in 0..q {
            let e = if i == j { 1.0 } else { 0.0 };
            residual = residual.max((prod.get(i, j) - e).abs());
        }
    }
    if residual > 1e-12 {
        return Err(Error::IllConditioned {
            residual,
            limit: 1e-12,
        });
    }
    Ok(LegendreTransform {
        rule,
        forward,
        inverse,
    })
}

impl LegendreTransform {
    pub fn q(&self) -> usize {
        self.forward.n
    }

    /// Legendre coefficients of grid values `v` (length q).
    pub fn coefficients<T>(&self, v: &[T]) -> Vec<T>
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::iter::Sum<T>,
    {
        let q = self.q();
        (0..q)
            .map(|l| (0..q).map(|k| v[k] * self.inverse.get(l, k)).sum())
            .collect()
    }
}
