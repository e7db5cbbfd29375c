//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Failing criteria are reported but do not fail `cargo test`; set
//! `ACCEPTANCE_STRICT=1` to turn any FAIL into a non-zero exit. `ACCEPTANCE_ONLY=3,5`
//! runs a subset.

use std::f64::consts::PI;
use std::time::Instant;

use collective_emission::cli::{self, RunConfig, ScenarioKind};
use collective_emission::collocation::{build_grid, CollocationScheme, Window};
use collective_emission::kernels::{build_kernel_bank, Physics};
use collective_emission::numkit::gauss_legendre;
use collective_emission::oracle::direct_solve;
use collective_emission::photon::{field_grid, photon_probability, symmetric_grid};
use collective_emission::soe::{jn2_bound, N_SOE_MAX};
use collective_emission::stepper::{march, NullSink};
use collective_emission::{Complex64, Result};
use statrs::function::gamma::ln_gamma;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome {
        pass,
        detail: detail.into(),
    })
}

fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// `j_n(t) = 2/Gamma((n+1)/2) int_0^inf xi^n e^{-xi^2 - i xi t} dxi` along the ray
/// `xi = r e^{-i theta}`, by adaptive Gauss-Legendre bisection.
fn jn_oracle(n: usize, t: f64) -> Complex64 {
    let theta = if t >= 5.0 { PI / 4.0 } else { PI / 8.0 };
    let (s, c) = theta.sin_cos();
    let (s2, c2) = (2.0 * theta).sin_cos();
    let nf = n as f64;
    let ln_norm = 2f64.ln() - ln_gamma((nf + 1.0) / 2.0);
    let log_mag = |r: f64| nf * r.ln() - r * r * c2 - r * t * s + ln_norm;
    let f = |r: f64| {
        if r == 0.0 {
            let v = if n == 0 { ln_norm.exp() } else { 0.0 };
            return Complex64::from_polar(v, -theta);
        }
        Complex64::from_polar(log_mag(r).exp(), -(nf + 1.0) * theta + r * r * s2 - r * t * c)
    };
    let peak = if c2.abs() < 1e-12 {
        nf / (t * s)
    } else {
        (-t * s + (t * t * s * s + 8.0 * c2 * nf).sqrt()) / (4.0 * c2)
    };
    let mut hi = 2.0 * peak + 1.0 / (t * s + 1.0);
    while log_mag(hi) > -48.0 {
        hi *= 1.25;
    }
    let rule = gauss_legendre(20, -1.0, 1.0).expect("rule");
    let panel = |a: f64, b: f64| -> Complex64 {
        let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
        rule.nodes.iter().zip(&rule.weights).map(|(x, w)| f(m + h * x) * (w * h)).sum()
    };
    let mut total = Complex64::new(0.0, 0.0);
    let mut stack = vec![(0.0, hi, panel(0.0, hi), 0)];
    while let Some((a, b, whole, depth)) = stack.pop() {
        let m = 0.5 * (a + b);
        let (l, r) = (panel(a, m), panel(m, b));
        if (l + r - whole).norm() <= 1e-14 * (b - a) / hi + 1e-15 * (l + r).norm() || depth > 30 {
            total += l + r;
        } else {
            stack.push((a, m, l, depth + 1));
            stack.push((m, b, r, depth + 1));
        }
    }
    total
}

fn kernel_fidelity() -> Result<Outcome> {
    let bank = build_kernel_bank(&Physics::default(), 8)?;
    let mut worst: f64 = 0.0;
    let mut at = (0, 0.0);
    let mut exact_zero = true;
    for n in 0..=8 {
        exact_zero &= bank.eval_jn(n, 0.0)? == Complex64::new(1.0, 0.0);
        for &t in &log_spaced(1e-3, 1e5, 200) {
            let e = (bank.eval_jn(n, t)? - jn_oracle(n, t)).norm();
            if e > worst {
                worst = e;
                at = (n, t);
            }
        }
    }
    outcome(
        worst <= 1e-11 && exact_zero,
        format!("max |error| {worst:.2e} at n={}, t={:.3e}; j_n(0) = 1 exactly: {exact_zero}", at.0, at.1),
    )
}

fn soe_validity() -> Result<Outcome> {
    let bank = build_kernel_bank(&Physics::default(), 30)?;
    let soe = bank.soe_j();
    let mut worst: f64 = 0.0;
    for n in 0..=N_SOE_MAX {
        for &t in &log_spaced(20.0, 1e7, 400) {
            worst = worst.max((soe.eval(n, t) - jn_oracle(n, t)).norm());
        }
    }
    let zero_tail = (N_SOE_MAX + 1..=30).all(|n| (0..soe.n_modes()).all(|mu| soe.weight(n, mu) == Complex64::new(0.0, 0.0)))
        && soe.weights.len() == N_SOE_MAX + 1;
    let guard = jn2_bound(5.0, 20.0);
    let guard_ok = ((guard - 14.0 * (-50f64).exp()) / guard).abs() < 1e-12 && (guard - 2.7e-21).abs() < 0.01e-21;
    outcome(
        worst <= 1e-10 && zero_tail && guard_ok,
        format!(
            "{} modes, max |error| {worst:.2e} for n <= {N_SOE_MAX}; weights zero for n > {N_SOE_MAX}: {zero_tail}; bound at a=5, t=20: {guard:.4e}",
            soe.n_modes()
        ),
    )
}

fn scenario(p: usize, g: f64, t_final: f64, n_steps: usize, q: usize) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.physics.p = p;
    cfg.physics.g = g;
    cfg.discretization.t_final = t_final;
    cfg.discretization.n_steps = n_steps;
    cfg.discretization.q = q;
    cfg
}

fn compression_correctness() -> Result<Outcome> {
    let cfg = scenario(3, 0.2, 50.0, 120, 4);
    let prep = cli::prepare(&cfg, 3, None)?;
    let (fast, stats, _) = prep.solve(&cfg, cfg.grid()?)?;
    let (dense, _) = direct_solve(&prep.bank, &prep.phys, cfg.grid()?, &prep.source)?;
    let diff = fast.max_node_difference(&dense)?;
    outcome(
        diff <= 1e-10 && stats.n_exponentials > 0 && stats.window < 120,
        format!("max node difference {diff:.2e} (window {}, {} exponentials)", stats.window, stats.n_exponentials),
    )
}

fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn wigner_weisskopf() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for g in [0.1, 0.2, 0.3] {
        let t_end = 0.5 / (g * g);
        let cfg = scenario(1, g, t_end, (t_end / 0.25).ceil() as usize, 4);
        let prep = cli::prepare(&cfg, 1, None)?;
        let (traj, _, _) = prep.solve(&cfg, cfg.grid()?)?;
        let pts: Vec<(f64, f64)> = traj.probability_series().into_iter().map(|(t, pa)| (t, pa.ln())).collect();
        let s = slope(&pts);
        let rel = (s + 2.0 * g * g).abs() / (2.0 * g * g);
        pass &= rel <= 0.1;
        parts.push(format!("g={g}: slope {s:.5} vs {:.5} ({:.1}%)", -2.0 * g * g, 100.0 * rel));
    }
    outcome(pass, parts.join("; "))
}

fn convergence_order() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (q, n_list, lo, hi) in [(4, vec![25, 50, 100, 200, 400], 3.5, 4.5), (8, vec![10, 20, 40, 80, 160], 7.0, f64::INFINITY)] {
        let mut cfg = scenario(1, 0.2, 100.0, 200, q);
        cfg.converge.t_star = Some(100.0);
        cfg.converge.n_list = n_list;
        cfg.converge.reference_n = 3200;
        cfg.converge.floor = 1e-10;
        let rep = cli::converge(&cfg, None, None)?;
        let ok = rep.order.is_some_and(|o| o >= lo && o <= hi);
        pass &= ok;
        let errs: Vec<String> = rep.points.iter().map(|p| format!("{:.1e}", p.error)).collect();
        let pair: Vec<String> = rep.pairwise.iter().map(|o| format!("{o:.2}")).collect();
        parts.push(format!(
            "q={q}: order {} over {} points above 1e-10 (E = [{}], pairwise [{}])",
            rep.order.map_or("n/a".into(), |o| format!("{o:.2}")),
            rep.fitted_points,
            errs.join(", "),
            pair.join(", ")
        ));
    }
    outcome(pass, parts.join("; "))
}

fn parity_nullity() -> Result<Outcome> {
    let cfg = scenario(8, 0.2, 100.0, 200, 4);
    let prep = cli::prepare(&cfg, 8, None)?;
    let (traj, _, _) = prep.solve(&cfg, cfg.grid()?)?;
    let odd = (1..8).step_by(2).map(|m| traj.max_abs_mode(m)).fold(0.0, f64::max);
    let even = (0..8).step_by(2).map(|m| traj.max_abs_mode(m)).fold(0.0, f64::max);
    outcome(odd <= 1e-12 && even > 0.0, format!("max odd |alpha_n| {odd:.2e}, max even {even:.3}"))
}

fn resonance_response() -> Result<Outcome> {
    let mut peaks = Vec::new();
    for xi0 in [0.4, 1.0, 1.6] {
        let mut cfg = scenario(1, 0.2, 200.0, 400, 4);
        cfg.scenario.kind = ScenarioKind::Wavepacket;
        cfg.scenario.wavepacket.x0 = -80.0;
        cfg.scenario.wavepacket.beta = 12.0;
        cfg.scenario.wavepacket.xi0 = xi0;
        cfg.scenario.wavepacket.translation_tolerance = Some(1e-4);
        let prep = cli::prepare(&cfg, 1, None)?;
        let (traj, _, _) = prep.solve(&cfg, cfg.grid()?)?;
        let peak = traj.probability_series().iter().map(|p| p.1).fold(0.0, f64::max);
        peaks.push(peak);
    }
    outcome(
        peaks[1] > peaks[0] && peaks[1] > peaks[2],
        format!(
            "max P_a: xi0=0.4 {:.4e}, xi0=1 {:.4e}, xi0=1.6 {:.4e}",
            peaks[0], peaks[1], peaks[2]
        ),
    )
}

fn trapping() -> Result<Outcome> {
    let mut cfg = scenario(1, 0.2, 200.0, 400, 4);
    cfg.p_search.enabled = true;
    cfg.p_search.threshold = 1e-8;
    let (steps, p) = cli::search_p(&cfg, None)?;
    let one = steps[0].final_probability;
    let big = steps.last().expect("one step").final_probability;
    let settled = steps.len() >= 2 && (steps[steps.len() - 2].final_probability - big).abs() < 1e-8;
    outcome(
        settled && big >= 2.0 * one,
        format!("P_a(200): p=1 {one:.4e}, p={p} {big:.4e} (ratio {:.3e}, settled: {settled})", big / one),
    )
}

fn conservation() -> Result<Outcome> {
    let cfg = scenario(1, 0.2, 5.0, 100, 4);
    let prep = cli::prepare(&cfg, 1, None)?;
    let (traj, _, _) = prep.solve(&cfg, cfg.grid()?)?;
    let grid = field_grid(&traj, &prep.bank, &prep.source, &symmetric_grid(200.0, 8001), &[5.0])?;
    let pu = photon_probability(&grid, 0);
    let pa = traj.atomic_probability(5.0)?;
    let total = pa + pu.value;
    outcome(
        (0.99..=1.01).contains(&total),
        format!("P_a {pa:.6} + P_u {:.6} = {total:.8} (edge density {:.1e})", pu.value, pu.edge_density),
    )
}

fn complexity() -> Result<Outcome> {
    // fixed dt = 0.5, so doubling N doubles T and keeps the local window
    let cfg = scenario(8, 0.2, 1000.0, 2000, 4);
    let prep = cli::prepare(&cfg, 8, None)?;
    let window = Window::Auto {
        delta: cfg.soe.delta,
        t_max: cfg.soe.t_max,
    };
    let mut fast = Vec::new();
    let mut dense = Vec::new();
    for n in [1000usize, 2000] {
        let disc = build_grid(0.5 * n as f64, n, 4)?;
        fast.push(CollocationScheme::build(&prep.bank, Some(&prep.soe), &prep.phys, disc.clone(), window)?);
        dense.push(CollocationScheme::build(&prep.bank, None, &prep.phys, disc, Window::Dense)?);
    }
    let mut best = [[f64::INFINITY; 2]; 2];
    let mut memory = [0usize; 2];
    for _ in 0..5 {
        for i in 0..2 {
            let f = march(&fast[i], &prep.source, &mut NullSink, false)?;
            let d = march(&dense[i], &prep.source, &mut NullSink, false)?;
            best[0][i] = best[0][i].min(f.marching_seconds);
            best[1][i] = best[1][i].min(d.marching_seconds);
            memory[i] = f.history_values;
        }
    }
    let rf = best[0][1] / best[0][0];
    let rd = best[1][1] / best[1][0];
    outcome(
        (1.8..=2.6).contains(&rf) && (3.0..=6.0).contains(&rd) && memory[0] == memory[1],
        format!(
            "N 1000 -> 2000: fast {:.3e} -> {:.3e} s (x{rf:.2}), dense {:.3e} -> {:.3e} s (x{rd:.2}); fast history values {} and {}",
            best[0][0], best[0][1], best[1][0], best[1][1], memory[0], memory[1]
        ),
    )
}

type Criterion = (&'static str, fn() -> Result<Outcome>);

fn main() {
    let criteria: [Criterion; 10] = [
        ("kernel fidelity", kernel_fidelity),
        ("SOE validity", soe_validity),
        ("compression correctness", compression_correctness),
        ("Wigner-Weisskopf decay", wigner_weisskopf),
        ("convergence order", convergence_order),
        ("parity nullity", parity_nullity),
        ("resonance response", resonance_response),
        ("trapping", trapping),
        ("short-time conservation", conservation),
        ("complexity", complexity),
    ];
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let mut failed = 0;
    let mut ran = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if only.as_ref().is_some_and(|o| !o.contains(&(i + 1))) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {name}: {} | {detail} [{:.1} s]",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {}/{ran} passed", ran - failed);
    if failed > 0 && std::env::var_os("ACCEPTANCE_STRICT").is_some_and(|v| v != "0") {
        std::process::exit(1);
    }
}
