//! Initial data and the source term `f_m(t) = a_m(0) - i g int_0^t e^{i Omega s} U_m(s) ds`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::kernels::Physics;
use crate::numkit::special::{hermite_f_into, scaled_erfi_shifted};
use crate::numkit::{erfc, AdaptiveQuad};

/// Half-width, in units of `sigma`, of the atomic density support used in projections.
pub const SUPPORT: f64 = 8.0;

/// The known right-hand side of the modal equations.
pub trait Forcing: Sync {
    fn p(&self) -> usize;

    /// `f_m(t)` for `m < p`.
    fn eval(&self, t: f64, out: &mut [Complex64]) -> Result<()>;

    /// `f_m` at several times; `out[i*p + m]`.
    fn eval_many(&self, times: &[f64], out: &mut [Complex64]) -> Result<()> {
        let p = self.p();
        for (i, &t) in times.iter().enumerate() {
            self.eval(t, &mut out[i * p..(i + 1) * p])?;
        }
        Ok(())
    }
}

/// Gaussian pulse `u_0(x) = (2/(pi beta^2))^{1/4} e^{-(x-x0)^2/beta^2} e^{i xi0 x}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Wavepacket {
    pub x0: f64,
    pub beta: f64,
    pub xi0: f64,
    /// Largest accepted error of the free-translation approximation. `None` demands the
    /// packet be narrow-band enough for the error to be below double precision.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub translation_tolerance: Option<f64>,
}

impl Default for Wavepacket {
    fn default() -> Self {
        Self::new(-80.0, 12.0, 1.0)
    }
}

impl Wavepacket {
    pub fn new(x0: f64, beta: f64, xi0: f64) -> Self {
        Self {
            x0,
            beta,
            xi0,
            translation_tolerance: None,
        }
    }

    /// Size of the backward-travelling component neglected by pure translation,
    /// `erfc(beta xi0 / 2) / (8 pi beta^2)^{1/4}`.
    pub fn translation_error(&self) -> f64 {
        let e = erfc(Complex64::new(self.beta * self.xi0 / 2.0, 0.0)).map_or(2.0, |v| v.re);
        e / (8.0 * PI * self.beta * self.beta).powf(0.25)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite() && self.x0.is_finite() && self.xi0.is_finite()) {
            return Err(Error::Wavepacket(format!("non-physical parameters {self:?}")));
        }
        let err = self.translation_error();
        match self.translation_tolerance {
            None => {
                if self.xi0 * self.beta >= 12.0 && self.beta >= 1.0 {
                    Ok(())
                } else {
                    Err(Error::Wavepacket(format!(
                        "xi0 beta = {} (needs >= 12) and beta = {} (needs >= 1); translation error {err:e}",
                        self.xi0 * self.beta,
                        self.beta
                    )))
                }
            }
            Some(tol) if err <= tol => Ok(()),
            Some(tol) => Err(Error::Wavepacket(format!(
                "translation error {err:e} exceeds the accepted {tol:e}"
            ))),
        }
    }

    fn amplitude(&self) -> f64 {
        (2.0 / (PI * self.beta * self.beta)).powf(0.25)
    }

    pub fn initial(&self, x: f64) -> Complex64 {
        let y = (x - self.x0) / self.beta;
        Complex64::from_polar(self.amplitude() * (-y * y).exp(), self.xi0 * x)
    }
}

/// `U(x, t) = u_0(x - ct)`.
pub fn free_field(wp: &Wavepacket, phys: &Physics, x: f64, t: f64) -> Result<Complex64> {
    wp.validate()?;
    Ok(wp.initial(x - phys.c * t))
}

/// `int_0^t e^{i Omega s} u_0(x - cs) ds` in closed form.
///
/// The erfi difference carries the prefactor `e^{-beta^2 kappa^2/(4c^2)}`; both arguments
/// share the real part `beta kappa/(2c)`, so the pair is evaluated through the scaled form
/// `e^{-Re(z)^2}(erfi(z) + i)`, which never overflows.
pub fn time_integral_u(wp: &Wavepacket, phys: &Physics, x: f64, t: f64) -> Result<Complex64> {
    if t == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let c = phys.c;
    let beta = wp.beta;
    let kappa = phys.omega - wp.xi0 * c;
    let re = beta * kappa / (2.0 * c);
    let z = |s: f64| Complex64::new(re, -(x - wp.x0 - c * s) / beta);
    let diff = scaled_erfi_shifted(z(t)) - scaled_erfi_shifted(z(0.0));
    if !diff.is_finite() {
        return Err(Error::Overflow {
            function: "erfi",
            re,
            im: -(x - wp.x0) / beta,
        });
    }
    let pref = PI.powf(0.25) * beta.sqrt() / (2f64.powf(0.75) * c);
    let phase = Complex64::from_polar(1.0, wp.xi0 * wp.x0 + phys.omega * (x - wp.x0) / c);
    Ok(-Complex64::i() * pref * phase * diff)
}

/// An atom initially in the ground mode of the cloud, no photon.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitedAtom {
    pub p: usize,
}

pub fn excited_atom_source(p: usize) -> ExcitedAtom {
    ExcitedAtom { p }
}

impl ExcitedAtom {
    pub fn initial_coefficients(&self) -> Vec<Complex64> {
        let mut a = vec![Complex64::new(0.0, 0.0); self.p];
        a[0] = Complex64::new(1.0, 0.0);
        a
    }
}

impl Forcing for ExcitedAtom {
    fn p(&self) -> usize {
        self.p
    }

    fn eval(&self, _t: f64, out: &mut [Complex64]) -> Result<()> {
        out.fill(Complex64::new(0.0, 0.0));
        out[0] = Complex64::new(1.0, 0.0);
        Ok(())
    }
}

/// An unexcited atom driven by an incoming pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct WavepacketSource {
    pub wavepacket: Wavepacket,
    pub phys: Physics,
    pub tol: f64,
}

pub fn wavepacket_source(wp: &Wavepacket, phys: &Physics) -> Result<WavepacketSource> {
    wp.validate()?;
    phys.validate()?;
    Ok(WavepacketSource {
        wavepacket: *wp,
        phys: *phys,
        tol: 1e-13,
    })
}

impl WavepacketSource {
    /// `U_m`-projection of the time integral: `int rho(y) f_m(y) I(sigma y, t) dy`, all `m`.
    pub fn projected_integral(&self, t: f64) -> Result<Vec<Complex64>> {
        let p = self.phys.p;
        if t == 0.0 {
            return Ok(vec![Complex64::new(0.0, 0.0); p]);
        }
        let failure = std::cell::RefCell::new(None);
        let herm = std::cell::RefCell::new(vec![0.0; p]);
        let v = AdaptiveQuad::absolute(self.tol).integrate_vec(
            |y, out| {
                let mut h = herm.borrow_mut();
                hermite_f_into(y, &mut h);
                let w = (-y * y).exp() / PI.sqrt();
                let i = match time_integral_u(&self.wavepacket, &self.phys, self.phys.sigma * y, t) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.borrow_mut().get_or_insert(e);
                        Complex64::new(0.0, 0.0)
                    }
                };
                for m in 0..p {
                    out[m] = i * (w * h[m]);
                }
            },
            p,
            -SUPPORT,
            SUPPORT,
        )?;
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        Ok(v)
    }
}

impl Forcing for WavepacketSource {
    fn p(&self) -> usize {
        self.phys.p
    }

    fn eval(&self, t: f64, out: &mut [Complex64]) -> Result<()> {
        let v = self.projected_integral(t)?;
        let scale = Complex64::new(0.0, -self.phys.g);
        for (o, x) in out.iter_mut().zip(v) {
            *o = scale * x;
        }
        Ok(())
    }

    fn eval_many(&self, times: &[f64], out: &mut [Complex64]) -> Result<()> {
        let p = self.phys.p;
        let rows = times
            .par_iter()
            .map(|&t| {
                let mut row = vec![Complex64::new(0.0, 0.0); p];
                self.eval(t, &mut row)?;
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;
        for (i, row) in rows.into_iter().enumerate() {
            out[i * p..(i + 1) * p].copy_from_slice(&row);
        }
        Ok(())
    }
}

/// Either scenario behind one type, for configuration-driven runs.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceTerm {
    ExcitedAtom(ExcitedAtom),
    Wavepacket(WavepacketSource),
}

impl SourceTerm {
    /// Incoming free field `U(x, t)`; zero without a pulse.
    pub fn free_field(&self, x: f64, t: f64) -> Result<Complex64> {
        match self {
            SourceTerm::ExcitedAtom(_) => Ok(Complex64::new(0.0, 0.0)),
            SourceTerm::Wavepacket(w) => free_field(&w.wavepacket, &w.phys, x, t),
        }
    }

    pub fn initial_coefficients(&self) -> Vec<Complex64> {
        match self {
            SourceTerm::ExcitedAtom(e) => e.initial_coefficients(),
            SourceTerm::Wavepacket(w) => vec![Complex64::new(0.0, 0.0); w.phys.p],
        }
    }
}

impl Forcing for SourceTerm {
    fn p(&self) -> usize {
        match self {
            SourceTerm::ExcitedAtom(e) => e.p(),
            SourceTerm::Wavepacket(w) => w.p(),
        }
    }

    fn eval(&self, t: f64, out: &mut [Complex64]) -> Result<()> {
        match self {
            SourceTerm::ExcitedAtom(e) => e.eval(t, out),
            SourceTerm::Wavepacket(w) => w.eval(t, out),
        }
    }

    fn eval_many(&self, times: &[f64], out: &mut [Complex64]) -> Result<()> {
        match self {
            SourceTerm::ExcitedAtom(e) => e.eval_many(times, out),
            SourceTerm::Wavepacket(w) => w.eval_many(times, out),
        }
    }
}
