//! Scenario runner behind the `emission-sim` binary: build, solve, reconstruct, write.

pub mod config;

pub use config::{
    BenchConfig, ConvergeConfig, DiscretizationConfig, FieldSpec, KernelConfig, OutputConfig, PSearchConfig,
    RunConfig, ScenarioConfig, ScenarioKind,
};

use log::info;
use num_complex::Complex64;
use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::collocation::{build_grid, CollocationScheme, Discretization, Window};
use crate::error::{Error, Result};
use crate::kernels::{KernelBank, Physics};
use crate::oracle::{timing_probe, DENSE_STEP_LIMIT};
use crate::photon::{field_grid, photon_probability, symmetric_grid, write_field_csv, PhotonProbability};
use crate::soe::{lift_soe_to_k, SoeK};
use crate::sources::{excited_atom_source, wavepacket_source, SourceTerm};
use crate::stepper::{error_e, march, MarchStats, NullSink, Trajectory, TrajectorySink};

pub const MANIFEST_VERSION: u32 = 1;

/// Exit status for an error: 2 for configuration problems, 3 for numerical failures,
/// 1 for I/O.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. }
        | Error::Json(_)
        | Error::InvalidArgument(_)
        | Error::Wavepacket(_)
        | Error::Discretization(_) => 2,
        Error::Io(_) => 1,
        _ => 3,
    }
}

/// Kernels, exponential sums and the source for one value of `p`.
pub struct Prepared {
    pub phys: Physics,
    pub bank: KernelBank,
    pub soe: SoeK,
    pub source: SourceTerm,
    pub seconds: f64,
}

pub fn prepare(cfg: &RunConfig, p: usize, cache: Option<&Path>) -> Result<Prepared> {
    let start = Instant::now();
    let phys = Physics { p, ..cfg.physics };
    let bank = KernelBank::build(&phys, phys.n_max(), &cfg.kernel_options(cache.map(Path::to_path_buf)))?;
    let soe = lift_soe_to_k(&bank, &phys)?;
    let source = match cfg.wavepacket() {
        None => SourceTerm::ExcitedAtom(excited_atom_source(p)),
        Some(wp) => SourceTerm::Wavepacket(wavepacket_source(&wp, &phys)?),
    };
    Ok(Prepared {
        phys,
        bank,
        soe,
        source,
        seconds: start.elapsed().as_secs_f64(),
    })
}

impl Prepared {
    pub fn scheme(&self, cfg: &RunConfig, disc: Discretization) -> Result<CollocationScheme> {
        let window = Window::Auto {
            delta: cfg.soe.delta,
            t_max: cfg.soe.t_max,
        };
        CollocationScheme::build(&self.bank, Some(&self.soe), &self.phys, disc, window)
    }

    /// Build the arrays for `disc` and march into `sink`; returns array-build seconds too.
    pub fn solve_into<S: TrajectorySink + ?Sized>(
        &self,
        cfg: &RunConfig,
        disc: Discretization,
        sink: &mut S,
    ) -> Result<(MarchStats, f64)> {
        let start = Instant::now();
        let scheme = self.scheme(cfg, disc)?;
        let arrays = start.elapsed().as_secs_f64();
        let stats = march(&scheme, &self.source, sink, false)?;
        Ok((stats, arrays))
    }

    pub fn solve(&self, cfg: &RunConfig, disc: Discretization) -> Result<(Trajectory, MarchStats, f64)> {
        let mut traj = Trajectory::new(&self.phys, &disc);
        let (stats, arrays) = self.solve_into(cfg, disc, &mut traj)?;
        Ok((traj, stats, arrays))
    }
}

/// Streams `t, step, node, re_alpha_m, im_alpha_m ..., p_a` rows.
pub struct CsvSink<W: Write> {
    out: W,
    p: usize,
    q: usize,
}

impl<W: Write> CsvSink<W> {
    pub fn new(mut out: W, p: usize, q: usize) -> Result<Self> {
        write!(out, "t,step,node")?;
        for m in 0..p {
            write!(out, ",re_alpha_{m},im_alpha_{m}")?;
        }
        writeln!(out, ",p_a")?;
        Ok(Self { out, p, q })
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

impl<W: Write> TrajectorySink for CsvSink<W> {
    fn record(&mut self, j: usize, times: &[f64], alpha: &[Complex64]) -> Result<()> {
        for (k, t) in times.iter().enumerate() {
            write!(self.out, "{t:e},{j},{k}")?;
            let mut pa = 0.0;
            for m in 0..self.p {
                let a = alpha[m * self.q + k];
                pa += a.norm_sqr();
                write!(self.out, ",{:e},{:e}", a.re, a.im)?;
            }
            writeln!(self.out, ",{pa:e}")?;
        }
        Ok(())
    }
}

/// Forwards every step to two sinks.
pub struct Tee<'a, A: ?Sized, B: ?Sized>(pub &'a mut A, pub &'a mut B);

impl<A: TrajectorySink + ?Sized, B: TrajectorySink + ?Sized> TrajectorySink for Tee<'_, A, B> {
    fn record(&mut self, j: usize, times: &[f64], alpha: &[Complex64]) -> Result<()> {
        self.0.record(j, times, alpha)?;
        self.1.record(j, times, alpha)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Timings {
    pub kernels: f64,
    pub arrays: f64,
    pub marching: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PSearchStep {
    pub p: usize,
    pub final_probability: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhotonSummary {
    pub t: f64,
    pub atomic: f64,
    pub photonic: PhotonProbability,
    pub total: f64,
}

/// Written next to the data files; enough to rerun the same computation.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub manifest_version: u32,
    pub command: String,
    pub crate_version: String,
    pub config: RunConfig,
    pub p: usize,
    pub window: usize,
    pub n_exponentials: usize,
    pub soe_modes: usize,
    pub soe_validation_error: f64,
    pub history_values: usize,
    pub final_time: f64,
    pub final_probability: f64,
    pub timings: Timings,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub p_search: Vec<PSearchStep>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub photon: Vec<PhotonSummary>,
}

pub struct RunOutput {
    pub manifest: Manifest,
    pub trajectory: Trajectory,
    pub prepared: Prepared,
}

fn create(dir: &Path, name: &str) -> Result<(BufWriter<File>, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    Ok((BufWriter::new(File::create(&path)?), path))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let (mut w, path) = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(path)
}

/// Grow `p` from the configured value until `P_a(T)` moves by less than the threshold.
///
/// An excited atom only ever populates even modes, so there the number of even modes is
/// doubled (`p -> 2p + 1`); a plain doubling from `p = 1` would add a mode that stays zero
/// and stop at once.
pub fn search_p(cfg: &RunConfig, cache: Option<&Path>) -> Result<(Vec<PSearchStep>, usize)> {
    let s = &cfg.p_search;
    let mut steps: Vec<PSearchStep> = Vec::new();
    let mut p = cfg.physics.p;
    loop {
        let prep = prepare(cfg, p, cache)?;
        let (traj, _, _) = prep.solve(cfg, cfg.grid()?)?;
        let pa = traj.atomic_probability(cfg.discretization.t_final)?;
        info!("p = {p}: P_a(T) = {pa:e}");
        let settled = steps.last().is_some_and(|prev| (prev.final_probability - pa).abs() < s.threshold);
        steps.push(PSearchStep {
            p,
            final_probability: pa,
        });
        if settled || p >= s.p_max {
            return Ok((steps, p));
        }
        let next = match cfg.scenario.kind {
            ScenarioKind::ExcitedAtom => 2 * p + 1,
            ScenarioKind::Wavepacket => 2 * p,
        };
        p = next.min(s.p_max);
    }
}

/// Solve and write the trajectory CSV and manifest; with `field` set, also the photon field.
pub fn run(cfg: &RunConfig, out: &Path, cache: Option<&Path>, command: &str) -> Result<RunOutput> {
    let (p_search, p) = if cfg.p_search.enabled {
        search_p(cfg, cache)?
    } else {
        (Vec::new(), cfg.physics.p)
    };
    let prepared = prepare(cfg, p, cache)?;
    let disc = cfg.grid()?;
    let (w, traj_path) = create(out, &cfg.outputs.trajectory)?;
    let mut csv = CsvSink::new(w, p, disc.q)?;
    let mut trajectory = Trajectory::new(&prepared.phys, &disc);
    let (stats, arrays) = prepared.solve_into(cfg, disc, &mut Tee(&mut trajectory, &mut csv))?;
    csv.finish()?;
    let mut outputs = vec![traj_path.display().to_string()];
    let t_final = cfg.discretization.t_final;
    let mut timings = Timings {
        kernels: prepared.seconds,
        arrays,
        marching: stats.marching_seconds,
        field: None,
    };
    let mut photon = Vec::new();
    if let Some(spec) = &cfg.outputs.field {
        let start = Instant::now();
        photon = write_field(spec, &trajectory, &prepared, t_final, out, &mut outputs)?;
        timings.field = Some(start.elapsed().as_secs_f64());
    }
    let soe_j = prepared.bank.soe_j();
    let manifest = Manifest {
        manifest_version: MANIFEST_VERSION,
        command: command.into(),
        crate_version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.clone(),
        p,
        window: stats.window,
        n_exponentials: stats.n_exponentials,
        soe_modes: soe_j.n_modes(),
        soe_validation_error: soe_j.achieved_error,
        history_values: stats.history_values,
        final_time: t_final,
        final_probability: trajectory.atomic_probability(t_final)?,
        timings,
        outputs,
        p_search,
        photon,
    };
    write_json(out, &cfg.outputs.manifest, &manifest)?;
    Ok(RunOutput {
        manifest,
        trajectory,
        prepared,
    })
}

fn write_field(
    spec: &FieldSpec,
    traj: &Trajectory,
    prep: &Prepared,
    t_final: f64,
    out: &Path,
    outputs: &mut Vec<String>,
) -> Result<Vec<PhotonSummary>> {
    let times = if spec.times.is_empty() { vec![t_final] } else { spec.times.clone() };
    let xs = symmetric_grid(spec.radius, spec.points);
    let grid = field_grid(traj, &prep.bank, &prep.source, &xs, &times)?;
    std::fs::create_dir_all(out)?;
    let path = out.join(&spec.path);
    write_field_csv(&grid, &path)?;
    outputs.push(path.display().to_string());
    let (mut w, ppath) = create(out, &spec.probability)?;
    writeln!(w, "t,p_a,p_u,total,radius,edge_density,truncated")?;
    let mut rows = Vec::with_capacity(times.len());
    for (it, &t) in times.iter().enumerate() {
        let pu = photon_probability(&grid, it);
        let pa = traj.atomic_probability(t)?;
        writeln!(
            w,
            "{t:e},{pa:e},{:e},{:e},{:e},{:e},{}",
            pu.value,
            pa + pu.value,
            pu.radius,
            pu.edge_density,
            pu.truncated
        )?;
        rows.push(PhotonSummary {
            t,
            atomic: pa,
            photonic: pu,
            total: pa + pu.value,
        });
    }
    w.flush()?;
    outputs.push(ppath.display().to_string());
    Ok(rows)
}

/// `run` with a field grid even when the config has none.
pub fn field(cfg: &RunConfig, out: &Path, cache: Option<&Path>) -> Result<RunOutput> {
    let mut cfg = cfg.clone();
    if cfg.outputs.field.is_none() {
        cfg.outputs.field = Some(FieldSpec::default());
    }
    cfg.validate()?;
    run(&cfg, out, cache, "field")
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConvergencePoint {
    pub n: usize,
    pub dt: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub t_star: f64,
    pub q: usize,
    pub p: usize,
    pub reference_n: usize,
    pub points: Vec<ConvergencePoint>,
    /// Least-squares slope of `log E` against `log dt` over points above the floor.
    pub order: Option<f64>,
    /// Orders between consecutive points.
    pub pairwise: Vec<f64>,
    /// Smallest error seen.
    pub floor: f64,
    pub fitted_points: usize,
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Errors at `t*` for each `N` against a run with `reference_n` steps. Every run ends at
/// `t*`, so the measurement time is a subinterval boundary for all of them.
pub fn converge(cfg: &RunConfig, out: Option<&Path>, cache: Option<&Path>) -> Result<ConvergenceReport> {
    let c = &cfg.converge;
    let t_star = c.t_star.unwrap_or(cfg.discretization.t_final);
    let q = cfg.discretization.q;
    let prep = prepare(cfg, cfg.physics.p, cache)?;
    let (reference, _, _) = prep.solve(cfg, build_grid(t_star, c.reference_n, q)?)?;
    let mut points = Vec::with_capacity(c.n_list.len());
    for &n in &c.n_list {
        let (traj, _, _) = prep.solve(cfg, build_grid(t_star, n, q)?)?;
        let error = error_e(&traj, &reference, t_star)?;
        info!("N = {n}: E = {error:e}");
        points.push(ConvergencePoint {
            n,
            dt: t_star / n as f64,
            error,
        });
    }
    let fit: Vec<(f64, f64)> = points.iter().filter(|p| p.error > c.floor).map(|p| (p.dt, p.error)).collect();
    let pairwise = points
        .windows(2)
        .map(|w| (w[0].error / w[1].error).ln() / (w[0].dt / w[1].dt).ln())
        .collect();
    let report = ConvergenceReport {
        t_star,
        q,
        p: cfg.physics.p,
        reference_n: c.reference_n,
        order: log_slope(&fit),
        fitted_points: fit.len(),
        pairwise,
        floor: points.iter().map(|p| p.error).fold(f64::INFINITY, f64::min),
        points,
    };
    if let Some(dir) = out {
        let (mut w, _) = create(dir, "convergence.csv")?;
        writeln!(w, "n,dt,error")?;
        for p in &report.points {
            writeln!(w, "{},{:e},{:e}", p.n, p.dt, p.error)?;
        }
        w.flush()?;
        write_json(dir, "convergence.json", &report)?;
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub t_final: f64,
    pub dt: f64,
    pub fast_seconds: f64,
    /// Absent above the dense-solver step limit.
    pub direct_seconds: Option<f64>,
    pub window: usize,
    pub fast_history_values: usize,
    pub direct_history_values: Option<usize>,
}

/// Marching times of both solvers over `bench.n_list`, at fixed `dt` or fixed `T`.
pub fn bench(cfg: &RunConfig, out: Option<&Path>, cache: Option<&Path>) -> Result<Vec<BenchRow>> {
    let prep = prepare(cfg, cfg.physics.p, cache)?;
    let d = &cfg.discretization;
    let window = Window::Auto {
        delta: cfg.soe.delta,
        t_max: cfg.soe.t_max,
    };
    let repeats = cfg.bench.repeats.max(1);
    let mut rows = Vec::new();
    let base_dt = d.t_final / d.n_steps as f64;
    for &n in &cfg.bench.n_list {
        let t_final = if cfg.bench.fixed_step { base_dt * n as f64 } else { d.t_final };
        let disc = build_grid(t_final, n, d.q)?;
        let row = if n <= DENSE_STEP_LIMIT {
            let t = timing_probe(&prep.bank, &prep.soe, &prep.phys, &disc, &prep.source, window, repeats)?;
            BenchRow {
                n,
                t_final,
                dt: disc.dt,
                fast_seconds: t.fast,
                direct_seconds: Some(t.direct),
                window: t.fast_window,
                fast_history_values: t.fast_history_values,
                direct_history_values: Some(t.direct_history_values),
            }
        } else {
            let scheme = prep.scheme(cfg, disc.clone())?;
            let best = (0..repeats)
                .map(|_| march(&scheme, &prep.source, &mut NullSink, false))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .min_by(|a, b| a.marching_seconds.total_cmp(&b.marching_seconds))
                .expect("at least one repeat");
            BenchRow {
                n,
                t_final,
                dt: disc.dt,
                fast_seconds: best.marching_seconds,
                direct_seconds: None,
                window: best.window,
                fast_history_values: best.history_values,
                direct_history_values: None,
            }
        };
        info!("N = {n}: fast {:.3e} s, direct {:?} s", row.fast_seconds, row.direct_seconds);
        rows.push(row);
    }
    if let Some(dir) = out {
        let (mut w, _) = create(dir, "bench.csv")?;
        writeln!(w, "n,t_final,dt,fast_seconds,direct_seconds,window,fast_history_values,direct_history_values")?;
        for r in &rows {
            let ds = r.direct_seconds.map_or(String::new(), |v| format!("{v:e}"));
            let dh = r.direct_history_values.map_or(String::new(), |v| v.to_string());
            writeln!(
                w,
                "{},{:e},{:e},{:e},{ds},{},{},{dh}",
                r.n, r.t_final, r.dt, r.fast_seconds, r.window, r.fast_history_values
            )?;
        }
        w.flush()?;
    }
    Ok(rows)
}
