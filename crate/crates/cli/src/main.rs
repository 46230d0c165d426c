use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use qem_core::experiments::{
    crossing_lambda, run_multi_step, run_noise_sweep, run_reconstruction, run_selftest, run_single_step, run_vqe,
    write_manifest, ExperimentConfig,
};
use qem_core::QemError;

#[derive(Parser)]
#[command(name = "qem", version, about = "Error-mitigated Fourier moments on a simulated noisy device")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON experiment config; defaults are used for missing keys
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Shots per circuit (overrides the config)
    #[arg(long, global = true)]
    shots: Option<u64>,
    /// Worker threads; defaults to all cores
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Estimator error against noise strength
    NoiseSweep,
    /// Moments from one double Trotter step per j
    SingleStep,
    /// Diagnostics against circuit depth
    MultiStep,
    /// Response function from moments
    Reconstruct,
    /// Optimize the ground-state ansatz
    Vqe,
    /// Quick structural checks
    Selftest,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::NoiseSweep => "noise-sweep",
            Command::SingleStep => "single-step",
            Command::MultiStep => "multi-step",
            Command::Reconstruct => "reconstruct",
            Command::Vqe => "vqe",
            Command::Selftest => "selftest",
        }
    }
}

fn load(cli: &Cli) -> Result<ExperimentConfig, QemError> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::from_json(&std::fs::read_to_string(p)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(o) = &cli.out {
        cfg.out_dir = o.clone();
    }
    if let Some(s) = cli.seed {
        cfg = cfg.with_seed(s);
    }
    if let Some(s) = cli.shots {
        cfg.mitigation.shots = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli, cfg: &ExperimentConfig) -> Result<bool, QemError> {
    let started = Instant::now();
    let mut ok = true;
    let files = match cli.command {
        Command::NoiseSweep => {
            let out = run_noise_sweep(cfg)?;
            for m in &cfg.mitigation.estimators {
                match crossing_lambda(&out.rows, *m) {
                    Some(l) => println!("{}: crosses the shot-noise barrier at lambda = {l:.3e}", m.name()),
                    None => println!("{}: stays below the shot-noise barrier", m.name()),
                }
            }
            vec![out.csv, out.svg]
        }
        Command::SingleStep => {
            let out = run_single_step(cfg)?;
            for z in &out.zscores {
                println!("{}: z2 re {:.3}, im {:.3}, max deviation {:.2} sigma", z.estimator.name(), z.z2_re, z.z2_im, z.max_dev);
            }
            out.files
        }
        Command::MultiStep => {
            let out = run_multi_step(cfg)?;
            println!("renormalization factor ~ {:.3} exp(-{:.3} d), R2 = {:.4}", out.fit.amplitude, out.fit.rate, out.fit.r2);
            out.files
        }
        Command::Reconstruct => {
            let out = run_reconstruction(cfg)?;
            println!(
                "N = {}, exact-moment deviation {:.2}% of peak, {} curve within 3 sigma at {:.1}% of points",
                out.kernel.n,
                100.0 * out.exact_deviation / out.peak,
                cfg.kernel.estimator.name(),
                100.0 * out.fraction_within
            );
            out.files
        }
        Command::Vqe => {
            let (r, path) = run_vqe(cfg)?;
            println!(
                "theta = ({:.6}, {:.6}), energy {:.6} after {} evaluations",
                r.params.theta0, r.params.theta1, r.energy, r.evaluations
            );
            vec![path]
        }
        Command::Selftest => {
            let rows = run_selftest(cfg)?;
            for r in &rows {
                println!("{} {}: {}", if r.pass { "PASS" } else { "FAIL" }, r.check, r.detail);
                ok &= r.pass;
            }
            vec![cfg.out_dir.join("selftest.csv")]
        }
    };
    let manifest = write_manifest(cfg, cli.command.name(), &files, started)?;
    println!("wrote {} files and {}", files.len(), manifest.display());
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        pool = pool.num_threads(t);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match pool.install(|| run(&cli, &cfg)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

