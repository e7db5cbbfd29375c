//! Chebyshev interpolation at second-kind points (endpoints included), barycentric
//! evaluation and spectral integration.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebInterpolant {
    pub lo: f64,
    pub hi: f64,
    /// Values at `cheb_points(n, lo, hi)`, ordered from `hi` down to `lo`.
    pub samples: Vec<Complex64>,
    #[serde(skip)]
    nodes: Vec<f64>,
    #[serde(skip)]
    weights: Vec<f64>,
}

/// Second-kind Chebyshev points `x_j = cos(j pi/(n-1))` mapped to `[lo, hi]`, `j = 0..n`.
pub fn cheb_points(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    let m = (n - 1) as f64;
    (0..n)
        .map(|j| {
            if j == 0 {
                hi
            } else if j == n - 1 {
                lo
            } else {
                // sin form is symmetric to the last bit
                mid + half * (PI * (m - 2.0 * j as f64) / (2.0 * m)).sin()
            }
        })
        .collect()
}

fn bary_weights(n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| {
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == n - 1 {
                0.5 * s
            } else {
                s
            }
        })
        .collect()
}

/// Sample `f` at `n_nodes` Chebyshev points on `[lo, hi]`.
pub fn cheb_fit<F>(f: F, lo: f64, hi: f64, n_nodes: usize) -> Result<ChebInterpolant>
where
    F: Fn(f64) -> Result<Complex64>,
{
    if n_nodes < 2 {
        return Err(Error::InvalidArgument("Chebyshev interpolant needs at least 2 nodes".into()));
    }
    let samples = cheb_points(n_nodes, lo, hi)
        .into_iter()
        .map(f)
        .collect::<Result<Vec<_>>>()?;
    ChebInterpolant::from_samples(lo, hi, samples)
}

impl ChebInterpolant {
    pub fn from_samples(lo: f64, hi: f64, samples: Vec<Complex64>) -> Result<Self> {
        let n = samples.len();
        if n < 2 {
            return Err(Error::InvalidArgument("Chebyshev interpolant needs at least 2 nodes".into()));
        }
        if !(lo < hi) {
            return Err(Error::InvalidArgument(format!("empty interval [{lo}, {hi}]")));
        }
        Ok(Self {
            lo,
            hi,
            nodes: cheb_points(n, lo, hi),
            weights: bary_weights(n),
            samples,
        })
    }

    /// Rebuild the derived node and weight tables after deserialization.
    pub fn restore(self) -> Result<Self> {
        Self::from_samples(self.lo, self.hi, self.samples)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Barycentric evaluation; exact at the nodes.
    pub fn eval(&self, x: f64) -> Complex64 {
        let mut num = Complex64::new(0.0, 0.0);
        let mut den = 0.0;
        for ((&xj, &wj), &fj) in self.nodes.iter().zip(&self.weights).zip(&self.samples) {
            let d = x - xj;
            if d == 0.0 {
                return fj;
            }
            let c = wj / d;
            num += fj * c;
            den += c;
        }
        num / den
    }

    /// Chebyshev coefficients `c_k` with `f = sum_k c_k T_k` on the mapped interval.
    pub fn coefficients(&self) -> Vec<Complex64> {
        let n = self.len();
        let m = n - 1;
        // cos(k j pi / m) through a table indexed by (k j) mod 2m
        let table: Vec<f64> = (0..2 * m).map(|i| (PI * i as f64 / m as f64).cos()).collect();
        (0..n)
            .map(|k| {
                let mut s = Complex64::new(0.0, 0.0);
                for (j, &fj) in self.samples.iter().enumerate() {
                    let w = if j == 0 || j == m { 0.5 } else { 1.0 };
                    s += fj * (w * table[(k * j) % (2 * m)]);
                }
                let scale = if k == 0 || k == m { 1.0 } else { 2.0 };
                s * (scale / m as f64)
            })
            .collect()
    }

    /// Interpolant of the running integral `F(x) = int_lo^x f`, on the same nodes.
    pub fn spectral_integrate(&self) -> ChebInterpolant {
        let c = self.coefficients();
        let n = c.len();
        let at = |k: usize| if k < n { c[k] } else { Complex64::new(0.0, 0.0) };
        let mut big = vec![Complex64::new(0.0, 0.0); n + 1];
        for k in 1..=n {
            big[k] = if k == 1 {
                at(0) - at(2) * 0.5
            } else {
                (at(k - 1) - at(k + 1)) / (2.0 * k as f64)
            };
        }
        // F(-1) = 0
        let mut s = Complex64::new(0.0, 0.0);
        for (k, v) in big.iter().enumerate().skip(1) {
            if k % 2 == 0 {
                s += v;
            } else {
                s -= v;
            }
        }
        big[0] = -s;
        let half = 0.5 * (self.hi - self.lo);
        let samples: Vec<Complex64> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(j, &x)| {
                if j == n - 1 {
                    return Complex64::new(0.0, 0.0);
                }
                let u = (2.0 * x - self.lo - self.hi) / (self.hi - self.lo);
                clenshaw(&big, u) * half
            })
            .collect();
        ChebInterpolant {
            lo: self.lo,
            hi: self.hi,
            nodes: self.nodes.clone(),
            weights: self.weights.clone(),
            samples,
        }
    }
}

fn clenshaw(c: &[Complex64], x: f64) -> Complex64 {
    let mut b1 = Complex64::new(0.0, 0.0);
    let mut b2 = Complex64::new(0.0, 0.0);
    for &ck in c.iter().skip(1).rev() {
        let b0 = ck + b1 * (2.0 * x) - b2;
        b2 = b1;
        b1 = b0;
    }
    c[0] + b1 * x - b2
}
