use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use collective_emission::cli::{self, RunConfig};
use collective_emission::{Error, Result};

#[derive(Parser)]
#[command(version, about = "Single-photon emission from a Gaussian atomic cloud")]
struct Args {
    #[command(subcommand)]
    verb: Verb,
    /// TOML or JSON run configuration; a run manifest works too. Defaults apply when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Directory for cached kernel tables.
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    /// Worker threads; all cores by default.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Verb {
    /// Solve and write the trajectory.
    Run,
    /// Error against a refined reference over the configured step counts.
    Converge,
    /// Marching time of the fast and dense solvers.
    Bench,
    /// Solve and reconstruct the photon field.
    Field,
}

fn execute(args: &Args) -> Result<()> {
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::config("--threads", e.to_string()))?;
    }
    let cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let cache = args.cache.as_deref();
    match args.verb {
        Verb::Run => {
            let r = cli::run(&cfg, &args.out, cache, "run")?;
            println!(
                "P_a({}) = {:.6e}; wrote {}",
                r.manifest.final_time,
                r.manifest.final_probability,
                r.manifest.outputs.join(", ")
            );
        }
        Verb::Field => {
            let r = cli::field(&cfg, &args.out, cache)?;
            for s in &r.manifest.photon {
                println!(
                    "t = {}: P_a = {:.6e}, P_u = {:.6e} (|x| <= {}{}), sum = {:.8}",
                    s.t,
                    s.atomic,
                    s.photonic.value,
                    s.photonic.radius,
                    if s.photonic.truncated { ", truncated" } else { "" },
                    s.total
                );
            }
        }
        Verb::Converge => {
            let rep = cli::converge(&cfg, Some(&args.out), cache)?;
            for p in &rep.points {
                println!("N = {:>6}  dt = {:.4e}  E = {:.3e}", p.n, p.dt, p.error);
            }
            match rep.order {
                Some(o) => println!("observed order {o:.2} over {} points", rep.fitted_points),
                None => println!("too few points above the floor to fit an order"),
            }
        }
        Verb::Bench => {
            for r in cli::bench(&cfg, Some(&args.out), cache)? {
                let direct = r.direct_seconds.map_or("-".to_string(), |d| format!("{d:.3e}"));
                println!(
                    "N = {:>6}  fast {:.3e} s  direct {direct} s  history values {}",
                    r.n, r.fast_seconds, r.fast_history_values
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
