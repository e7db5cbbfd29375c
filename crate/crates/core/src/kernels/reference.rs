//! Direct quadrature of the kernel integral
//! `j_n(t) = 2/Gamma((n+1)/2) int_0^inf xi^n e^{-xi^2 - i xi t} dxi`.
//!
//! Two routes are provided. [`jn_real_axis`] integrates along the real axis and is what
//! the Chebyshev tables are sampled from; it becomes expensive once `t` is large, since the
//! integrand then oscillates many times before the Gaussian cuts it off. [`jn_rotated_ray`]
//! integrates along `xi = r e^{-i theta}` with `theta = pi/6` (or `pi/4` for `t >= 20`),
//! where the factor `e^{-i xi t}` decays like `e^{-r t sin theta}`. It stays cheap for any
//! `t > 0` and is the reference used to check both the tables and the exponential sums.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::Result;
use crate::numkit::special::ln_gamma_half;
use crate::numkit::AdaptiveQuad;

/// Integrand cut-off, relative to `j_n(0) = 1`.
const LOG_CUT: f64 = -43.0;

fn log_norm(n: usize) -> f64 {
    std::f64::consts::LN_2 - ln_gamma_half(n + 1)
}

/// March outward from `start` until `log_mag` stays below [`LOG_CUT`].
fn cutoff(log_mag: impl Fn(f64) -> f64, start: f64) -> f64 {
    let mut r = start.max(1e-300);
    let mut guard = 0;
    while (log_mag(r) > LOG_CUT || log_mag(1.2 * r) > LOG_CUT) && guard < 200 {
        r *= 1.2;
        guard += 1;
    }
    r
}

/// `j_n(t)` by adaptive quadrature along the real axis.
pub fn jn_real_axis(n: usize, t: f64, tol: f64) -> Result<Complex64> {
    let ln_c = log_norm(n);
    let nf = n as f64;
    let log_mag = move |x: f64| {
        if x <= 0.0 {
            if n == 0 {
                ln_c
            } else {
                f64::NEG_INFINITY
            }
        } else {
            nf * x.ln() - x * x + ln_c
        }
    };
    let hi = cutoff(log_mag, (nf / 2.0).sqrt().max(0.5));
    let f = move |x: f64| {
        let m = log_mag(x);
        if m == f64::NEG_INFINITY {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::from_polar(m.exp(), -x * t)
    };
    AdaptiveQuad::absolute(tol).integrate(f, 0.0, hi)
}

/// `j_n(t)` for `t >= 0` by adaptive quadrature along a ray in the lower half plane.
pub fn jn_rotated_ray(n: usize, t: f64, tol: f64) -> Result<Complex64> {
    let theta = if t >= 20.0 { PI / 4.0 } else { PI / 6.0 };
    let (s, c) = theta.sin_cos();
    let (s2, c2) = (2.0 * theta).sin_cos();
    let ln_c = log_norm(n);
    let nf = n as f64;
    // |xi^n e^{-xi^2 - i xi t}| = r^n e^{-r^2 cos 2theta - r t sin theta}
    let log_mag = move |r: f64| {
        if r <= 0.0 {
            if n == 0 {
                ln_c
            } else {
                f64::NEG_INFINITY
            }
        } else {
            nf * r.ln() - r * r * c2 - r * t * s + ln_c
        }
    };
    let peak = if c2 < 1e-12 {
        nf / (t * s)
    } else if t > 0.0 {
        // maximiser of n ln r - r^2 c2 - r t s
        (-t * s + (t * t * s * s + 8.0 * c2 * nf).sqrt()) / (4.0 * c2)
    } else {
        (nf / (2.0 * c2)).sqrt()
    };
    let hi = cutoff(log_mag, peak.max(1e-300) * 2.0 + 1.0 / (1.0 + t));
    // phase: arg(e^{-i theta}) + n arg(r e^{-i theta}) + Im(-r^2 e^{-2i theta}) + Im(-i r e^{-i theta} t)
    let f = move |r: f64| {
        let m = log_mag(r);
        if m == f64::NEG_INFINITY {
            return Complex64::new(0.0, 0.0);
        }
        let phase = -theta - nf * theta + r * r * s2 - r * t * c;
        Complex64::from_polar(m.exp(), phase)
    };
    let quad = AdaptiveQuad {
        abs_tol: tol,
        rel_tol: 1e-14,
        max_panels: 4000,
    };
    quad.integrate(f, 0.0, hi)
}

/// Reference value for any real `t`, using conjugate symmetry for `t < 0`.
pub fn jn_reference(n: usize, t: f64) -> Result<Complex64> {
    if t < 0.0 {
        return Ok(jn_reference(n, -t)?.conj());
    }
    jn_rotated_ray(n, t, 1e-16)
}
