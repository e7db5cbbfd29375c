//! Gauss-Legendre rules and globally adaptive Gauss-Kronrod integration.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A quadrature rule on a finite interval.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    pub lo: f64,
    pub hi: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    pub fn integrate_complex<F: Fn(f64) -> Complex64>(&self, f: F) -> Complex64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| f(x) * w)
            .sum()
    }
}

/// `q`-point Gauss-Legendre rule on `[lo, hi]`, nodes ascending.
pub fn gauss_legendre(q: usize, lo: f64, hi: f64) -> Result<QuadRule> {
    if q == 0 {
        return Err(Error::InvalidArgument("Gauss-Legendre order must be >= 1".into()));
    }
    if !(lo < hi) {
        return Err(Error::InvalidArgument(format!(
            "Gauss-Legendre interval [{lo}, {hi}] is empty"
        )));
    }
    let (x, w) = gauss_legendre_reference(q);
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    Ok(QuadRule {
        lo,
        hi,
        nodes: x.iter().map(|&t| mid + half * t).collect(),
        weights: w.iter().map(|&v| v * half).collect(),
    })
}

/// Nodes and weights on [-1, 1] by Newton iteration on the three-term recurrence.
fn gauss_legendre_reference(q: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    let qf = q as f64;
    for i in 0..q.div_ceil(2) {
        // i-th largest root
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (qf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(q, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1e-300) {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(q, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[q - 1 - i] = x;
        weights[q - 1 - i] = w;
        nodes[i] = -x;
        weights[i] = w;
    }
    if q % 2 == 1 {
        nodes[q / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(q: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if q == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=q {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = q as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21).
#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

struct Panel {
    lo: f64,
    hi: f64,
    value: Vec<Complex64>,
    err: f64,
    l1: f64,
}

/// Globally adaptive Gauss-Kronrod (10/21) integrator for complex vector integrands.
///
/// Converges when the summed error estimate is below `max(abs_tol, rel_tol * L1)`, where
/// `L1` is the integral of the componentwise modulus. The relative form is what makes
/// strongly damped integrands (whose values sit far below any absolute floor) come out
/// with full relative accuracy.
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveQuad {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for AdaptiveQuad {
    fn default() -> Self {
        Self {
            abs_tol: 1e-13,
            rel_tol: 0.0,
            max_panels: 4000,
        }
    }
}

impl AdaptiveQuad {
    pub fn absolute(tol: f64) -> Self {
        Self {
            abs_tol: tol,
            ..Self::default()
        }
    }

    pub fn relative(tol: f64) -> Self {
        Self {
            abs_tol: 0.0,
            rel_tol: tol,
            ..Self::default()
        }
    }

    pub fn integrate<F>(&self, f: F, lo: f64, hi: f64) -> Result<Complex64>
    where
        F: Fn(f64) -> Complex64,
    {
        let v = self.integrate_vec(|x, out| out[0] = f(x), 1, lo, hi)?;
        Ok(v[0])
    }

    /// Integrate over `[lo, +inf)`, truncating once the integrand has fallen below
    /// `1e-2 * tol` (all integrands here carry a Gaussian factor).
    pub fn integrate_to_inf<F>(&self, f: F, lo: f64) -> Result<Complex64>
    where
        F: Fn(f64) -> Complex64,
    {
        let hi = self.truncation_point(&f, lo);
        self.integrate(f, lo, hi)
    }

    fn truncation_point<F: Fn(f64) -> Complex64>(&self, f: &F, lo: f64) -> f64 {
        let tol = self.abs_tol.max(1e-300).max(self.rel_tol * 1e-3);
        let cut = tol * 1e-2;
        let mut hi = lo + (-(cut.max(1e-300)).ln()).sqrt();
        let small = |x: f64| f(x).norm() * x.abs().max(1.0) < cut;
        let mut guard = 0;
        while !(small(hi) && small(1.25 * hi - 0.25 * lo) && small(1.5 * hi - 0.5 * lo)) && guard < 60 {
            hi = lo + 1.5 * (hi - lo);
            guard += 1;
        }
        hi
    }

    pub fn integrate_vec<F>(&self, f: F, dim: usize, lo: f64, hi: f64) -> Result<Vec<Complex64>>
    where
        F: Fn(f64, &mut [Complex64]),
    {
        if lo == hi {
            return Ok(vec![Complex64::new(0.0, 0.0); dim]);
        }
        let mut scratch = Scratch::new(dim);
        let mut panels = vec![kronrod_panel(&f, lo, hi, &mut scratch)];
        loop {
            let err: f64 = panels.iter().map(|p| p.err).sum();
            let l1: f64 = panels.iter().map(|p| p.l1).sum();
            let target = self.abs_tol.max(self.rel_tol * l1);
            if err <= target {
                break;
            }
            if panels.len() >= self.max_panels {
                return Err(Error::QuadratureNonConvergence {
                    lo,
                    hi,
                    estimate: err,
                    tol: target,
                });
            }
            let (worst, _) = panels
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.err.total_cmp(&b.1.err))
                .expect("at least one panel");
            let p = panels.swap_remove(worst);
            let mid = 0.5 * (p.lo + p.hi);
            if !(p.lo < mid && mid < p.hi) {
                // cannot bisect further; rounding floor reached
                panels.push(Panel { err: 0.0, ..p });
                continue;
            }
            panels.push(kronrod_panel(&f, p.lo, mid, &mut scratch));
            panels.push(kronrod_panel(&f, mid, p.hi, &mut scratch));
        }
        panels.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let mut out = vec![Complex64::new(0.0, 0.0); dim];
        for p in &panels {
            for (o, v) in out.iter_mut().zip(&p.value) {
                *o += v;
            }
        }
        Ok(out)
    }
}

struct Scratch {
    fx: Vec<Vec<Complex64>>,
}

impl Scratch {
    fn new(dim: usize) -> Self {
        Self {
            fx: vec![vec![Complex64::new(0.0, 0.0); dim]; 21],
        }
    }
}

fn kronrod_panel<F>(f: &F, lo: f64, hi: f64, scratch: &mut Scratch) -> Panel
where
    F: Fn(f64, &mut [Complex64]),
{
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    // sample layout: index 2*j -> mid - half*XGK[j], 2*j+1 -> mid + half*XGK[j], 20 -> centre
    for j in 0..10 {
        let a = half * XGK[j];
        f(mid - a, &mut scratch.fx[2 * j]);
        f(mid + a, &mut scratch.fx[2 * j + 1]);
    }
    f(mid, &mut scratch.fx[20]);

    let dim = scratch.fx[0].len();
    let mut value = Vec::with_capacity(dim);
    let mut err_max: f64 = 0.0;
    let mut l1_max: f64 = 0.0;
    for c in 0..dim {
        let fc = scratch.fx[20][c];
        let mut kron = fc * WGK[10];
        let mut gauss = Complex64::new(0.0, 0.0);
        let mut resabs = fc.norm() * WGK[10];
        for j in 0..10 {
            let s = scratch.fx[2 * j][c] + scratch.fx[2 * j + 1][c];
            kron += s * WGK[j];
            resabs += WGK[j] * (scratch.fx[2 * j][c].norm() + scratch.fx[2 * j + 1][c].norm());
            if j % 2 == 1 {
                gauss += s * WG[j / 2];
            }
        }
        let mean = kron * 0.5;
        let mut resasc = WGK[10] * (fc - mean).norm();
        for j in 0..10 {
            resasc += WGK[j]
                * ((scratch.fx[2 * j][c] - mean).norm() + (scratch.fx[2 * j + 1][c] - mean).norm());
        }
        let aw = half.abs();
        let err = rescale_error(((kron - gauss) * half).norm(), resabs * aw, resasc * aw);
        value.push(kron * half);
        err_max = err_max.max(err);
        l1_max = l1_max.max(resabs * aw);
    }
    Panel {
        lo,
        hi,
        value,
        err: err_max,
        l1: l1_max,
    }
}

fn rescale_error(err: f64, resabs: f64, resasc: f64) -> f64 {
    let mut e = err;
    if resasc != 0.0 && e != 0.0 {
        let scale = (200.0 * e / resasc).powf(1.5);
        e = if scale < 1.0 { resasc * scale } else { resasc };
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        // below this the estimate is dominated by rounding of the panel sum
        let floor = 50.0 * f64::EPSILON * resabs;
        if e < floor {
            e = 0.0;
        }
    }
    e
}

/// Integrate `f` over `[lo, hi]` to absolute tolerance `tol`; `hi` may be `f64::INFINITY`.
pub fn adaptive_quad<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("quadrature tolerance must be positive, got {tol}")));
    }
    let q = AdaptiveQuad::absolute(tol);
    if hi.is_infinite() && hi > 0.0 {
        q.integrate_to_inf(f, lo)
    } else {
        q.integrate(f, lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn midpoint_rule_for_single_node() {
        let r = gauss_legendre(1, 0.0, 1.0).unwrap();
        assert_eq!(r.nodes, vec![0.5]);
        assert_eq!(r.weights, vec![1.0]);
    }

    #[test]
    fn two_point_rule_matches_legendre_roots() {
        // roots of P2(x) = (3x^2 - 1)/2 mapped to [0, 1]
        let root = (1.0f64 / 3.0).sqrt();
        let r = gauss_legendre(2, 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(r.nodes[0], 0.5 - 0.5 * root, epsilon = 1e-15);
        assert_abs_diff_eq!(r.nodes[1], 0.5 + 0.5 * root, epsilon = 1e-15);
        assert_abs_diff_eq!(r.nodes[0], 0.5 - 1.0 / (2.0 * 3f64.sqrt()), epsilon = 1e-15);
    }

    #[test]
    fn rejects_zero_order() {
        assert!(gauss_legendre(0, 0.0, 1.0).is_err());
        assert!(gauss_legendre(3, 1.0, 1.0).is_err());
    }

    #[test]
    fn weights_sum_to_interval_length() {
        for q in [1, 2, 3, 7, 16, 40, 101] {
            let r = gauss_legendre(q, 0.0, 0.37).unwrap();
            let s: f64 = r.weights.iter().sum();
            assert_abs_diff_eq!(s, 0.37, epsilon = 1e-14);
            assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
            assert!(r.nodes[0] > 0.0 && r.nodes[q - 1] < 0.37);
            assert!(r.weights.iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn exact_for_monomials_up_to_degree_2q_minus_1() {
        for q in [1usize, 2, 4, 8, 16] {
            let (lo, hi) = (-0.3, 1.9);
            let r = gauss_legendre(q, lo, hi).unwrap();
            for d in 0..(2 * q) as i32 {
                let exact = (hi.powi(d + 1) - lo.powi(d + 1)) / (d + 1) as f64;
                let got = r.integrate(|x| x.powi(d));
                assert!(
                    (got - exact).abs() <= 1e-13 * exact.abs().max(1.0),
                    "q={q} d={d} got {got} exact {exact}"
                );
            }
        }
    }

    #[test]
    fn gaussian_half_line() {
        let v = adaptive_quad(|x| c((-x * x).exp()), 0.0, f64::INFINITY, 1e-14).unwrap();
        assert_abs_diff_eq!(v.re, std::f64::consts::PI.sqrt() / 2.0, epsilon = 1e-13);
        let v = adaptive_quad(|x| c(x * (-x * x).exp()), 0.0, f64::INFINITY, 1e-14).unwrap();
        assert_abs_diff_eq!(v.re, 0.5, epsilon = 1e-13);
    }

    #[test]
    fn zero_integrand() {
        let v = adaptive_quad(|_| c(0.0), 0.0, 1.0, 1e-12).unwrap();
        assert_eq!(v, c(0.0));
    }

    #[test]
    fn oscillatory_integrand() {
        // int_0^20 cos(30 x) dx = sin(600)/30
        let v = adaptive_quad(|x| c((30.0 * x).cos()), 0.0, 20.0, 1e-13).unwrap();
        assert_abs_diff_eq!(v.re, (600.0f64).sin() / 30.0, epsilon = 1e-13);
    }

    #[test]
    fn relative_mode_resolves_tiny_damped_integrals() {
        // int_0^1 e^{-300 - 80 s} ds, far below any sensible absolute tolerance
        let exact = (-300.0f64).exp() * (1.0 - (-80.0f64).exp()) / 80.0;
        let v = AdaptiveQuad::relative(1e-14)
            .integrate(|s| c((-300.0 - 80.0 * s).exp()), 0.0, 1.0)
            .unwrap();
        assert!((v.re - exact).abs() <= 1e-13 * exact);
    }

    #[test]
    fn vector_integrand_components_are_independent() {
        let v = AdaptiveQuad::absolute(1e-14)
            .integrate_vec(
                |x, out| {
                    out[0] = c(x);
                    out[1] = Complex64::new(0.0, x.sin());
                },
                2,
                0.0,
                2.0,
            )
            .unwrap();
        assert_abs_diff_eq!(v[0].re, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(v[1].im, 1.0 - 2f64.cos(), epsilon = 1e-14);
    }

    #[test]
    fn reports_non_convergence() {
        let q = AdaptiveQuad {
            abs_tol: 1e-15,
            rel_tol: 0.0,
            max_panels: 3,
        };
        let r = q.integrate(|x| c((1.0 / (x + 1e-9)).sin()), 0.0, 1.0);
        assert!(matches!(r, Err(Error::QuadratureNonConvergence { .. })));
    }
}
