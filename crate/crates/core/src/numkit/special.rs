//! Gamma function, the complex error-function family and normalized Hermite functions.

use errorfunctions::ComplexErrorFunctions;
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Largest value of `Re(exponent)` accepted before `e^{exponent}` is declared an overflow.
pub const EXP_OVERFLOW: f64 = 700.0;

/// Gamma function for `x > 0`. Integers and half-integers (the only values the solver
/// needs) go through exact products; everything else through a Lanczos approximation.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::InvalidArgument(format!("gamma_fn requires x > 0, got {x}")));
    }
    let twice = 2.0 * x;
    if twice.fract() == 0.0 && twice <= 340.0 {
        return Ok(gamma_half_integer(twice as usize));
    }
    Ok(statrs::function::gamma::gamma(x))
}

/// `Gamma(k/2)` for `k >= 1`.
fn gamma_half_integer(k: usize) -> f64 {
    if k.is_multiple_of(2) {
        (1..k / 2).fold(1.0, |acc, i| acc * i as f64)
    } else {
        (0..(k - 1) / 2).fold(PI.sqrt(), |acc, i| acc * (i as f64 + 0.5))
    }
}

/// `ln Gamma(k/2)` for `k >= 1`, summed in log space so it never overflows.
pub fn ln_gamma_half(k: usize) -> f64 {
    assert!(k >= 1, "ln_gamma_half needs k >= 1");
    if k.is_multiple_of(2) {
        (1..k / 2).map(|i| (i as f64).ln()).sum()
    } else {
        0.5 * PI.ln() + (0..(k - 1) / 2).map(|i| (i as f64 + 0.5).ln()).sum::<f64>()
    }
}

/// `ln n!`.
pub fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

/// Faddeeva function `w(z) = e^{-z^2} erfc(-iz)`.
pub fn faddeeva_w(z: Complex64) -> Complex64 {
    z.w()
}

/// `erf`, `erfc` and `erfi` evaluated at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorFunctions {
    pub erf: Complex64,
    pub erfc: Complex64,
    pub erfi: Complex64,
}

/// `erf(z)`. Overflows once `Im(z)^2 - Re(z)^2` exceeds [`EXP_OVERFLOW`]; in particular the
/// whole strip `|Im z| <= 10` is safe.
pub fn erf(z: Complex64) -> Result<Complex64> {
    if z.im * z.im - z.re * z.re > EXP_OVERFLOW {
        return Err(Error::Overflow {
            function: "erf",
            re: z.re,
            im: z.im,
        });
    }
    Ok(z.erf())
}

pub fn erfc(z: Complex64) -> Result<Complex64> {
    if z.im * z.im - z.re * z.re > EXP_OVERFLOW {
        return Err(Error::Overflow {
            function: "erfc",
            re: z.re,
            im: z.im,
        });
    }
    Ok(z.erfc())
}

/// `erfi(z) = -i erf(iz)`. Overflows once `Re(z)^2 - Im(z)^2` exceeds [`EXP_OVERFLOW`].
pub fn erfi(z: Complex64) -> Result<Complex64> {
    if z.re * z.re - z.im * z.im > EXP_OVERFLOW {
        return Err(Error::Overflow {
            function: "erfi",
            re: z.re,
            im: z.im,
        });
    }
    Ok(z.erfi())
}

pub fn faddeeva_related(z: Complex64) -> Result<ErrorFunctions> {
    Ok(ErrorFunctions {
        erf: erf(z)?,
        erfc: erfc(z)?,
        erfi: erfi(z)?,
    })
}

/// `e^{-Re(z)^2} (erfi(z) + i)`, which stays finite wherever `erfi` itself overflows.
///
/// Uses `erfi(z) = -i + i e^{z^2} w(-z)` and the reflection `w(-z) = 2e^{-z^2} - w(z)` when
/// `Im(-z) < 0`.
pub fn scaled_erfi_shifted(z: Complex64) -> Complex64 {
    let a = z.re;
    let b = -z.im;
    // e^{-a^2} e^{z^2} = e^{-b^2 - 2iab}
    let phase = Complex64::new(-b * b, -2.0 * a * b).exp();
    let minus_z = -z;
    let term = if minus_z.im >= 0.0 {
        phase * faddeeva_w(minus_z)
    } else {
        Complex64::new(2.0 * (-a * a).exp(), 0.0) - phase * faddeeva_w(z)
    };
    Complex64::i() * term
}

/// Normalized Hermite functions `f_n(x) = H_n(x)/sqrt(2^n n!)` for `n = 0..=n_max`.
pub fn hermite_f(n_max: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; n_max + 1];
    hermite_f_into(x, &mut out);
    out
}

pub fn hermite_f_into(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = std::f64::consts::SQRT_2 * x;
    }
    for m in 1..out.len() - 1 {
        let mf = m as f64;
        out[m + 1] = (x * out[m] - (mf / 2.0).sqrt() * out[m - 1]) / ((mf + 1.0) / 2.0).sqrt();
    }
}
