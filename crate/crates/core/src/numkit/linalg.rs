//! Dense complex LU with partial pivoting.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Row-major square complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    pub n: usize,
    pub data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.n + j] = v;
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .map(|i| {
                self.data[i * self.n..(i + 1) * self.n]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }
}

/// LU factors of a square complex matrix with row-pivot permutation.
#[derive(Debug, Clone)]
pub struct DenseLU {
    lu: nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
    n: usize,
}

/// Pivots smaller than this fraction of the largest matrix entry count as singular.
const PIVOT_FLOOR: f64 = 1e3 * f64::EPSILON * f64::EPSILON;

pub fn lu_factor(a: &CMatrix) -> Result<DenseLU> {
    let n = a.n;
    if a.data.len() != n * n {
        return Err(Error::InvalidArgument("matrix is not square".into()));
    }
    let scale = a.data.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let m = DMatrix::from_row_slice(n, n, &a.data);
    let lu = m.lu();
    let u = lu.u();
    for i in 0..n {
        let modulus = u[(i, i)].norm();
        if !(modulus > PIVOT_FLOOR * scale) || scale == 0.0 {
            return Err(Error::Singular { pivot: i, modulus });
        }
    }
    Ok(DenseLU { lu, n })
}

impl DenseLU {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }

    pub fn solve_in_place(&self, b: &mut [Complex64]) -> Result<()> {
        if b.len() != self.n {
            return Err(Error::InvalidArgument(format!(
                "right-hand side has length {}, expected {}",
                b.len(),
                self.n
            )));
        }
        let mut v = DVector::from_column_slice(b);
        if !self.lu.solve_mut(&mut v) {
            return Err(Error::Singular {
                pivot: 0,
                modulus: 0.0,
            });
        }
        b.copy_from_slice(v.as_slice());
        Ok(())
    }
}

pub fn lu_solve(lu: &DenseLU, b: &[Complex64]) -> Result<Vec<Complex64>> {
    lu.solve(b)
}
