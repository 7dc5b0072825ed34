use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spectral_limits::eig::EigenSpectrum;
use spectral_limits::experiments::{
    emit_density_profile, histogram, run_edge_experiment, run_gap_experiment, run_lsd_experiment, run_qf_experiment,
    simulate_spectrum, support_path, ExperimentConfig, ExperimentReport,
};
use spectral_limits::model::{filter_spectrum, ModelSpec};
use spectral_limits::par::{with_workers, Execution};
use spectral_limits::stieltjes::{solve_companion, AspectRatio, SolverOptions, SpectralMeasure, UpperHalfPoint};
use spectral_limits::support::find_support;
use spectral_limits::{Error, Result};

const HISTOGRAM_BIN_WIDTH: f64 = 0.05;

#[derive(Parser, Debug)]
#[command(name = "spectral-limits", version, about = "Limiting spectra of sample covariance matrices")]
struct Cli {
    /// Experiment or model config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for data files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: number of logical processors).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Base seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

/// Limit-law inputs given directly on the command line.
#[derive(Args, Debug)]
struct Problem {
    /// Aspect ratio p/n.
    #[arg(long)]
    c: Option<f64>,
    /// Population spectrum as `t:w,t:w,...`.
    #[arg(long, default_value = "1:1")]
    population: String,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print m(z) and the companion transform at z = u + iv.
    Solve {
        #[arg(long, allow_hyphen_values = true)]
        u: f64,
        #[arg(long)]
        v: f64,
        #[command(flatten)]
        problem: Problem,
    },
    /// Write the limit density profile and its support endpoints.
    Density {
        #[arg(long, default_value_t = 512)]
        points: usize,
        #[command(flatten)]
        problem: Problem,
    },
    /// Print the support intervals of the limit law.
    Support {
        #[command(flatten)]
        problem: Problem,
    },
    /// Draw one ensemble; write its spectrum and a normalized histogram.
    Simulate,
    /// KS distance of the ESD to the limit law, per size.
    VerifyLsd,
    /// Count eigenvalues inside a predicted spectral gap.
    VerifyGap,
    /// Largest eigenvalue against the right support edge.
    VerifyEdge,
    /// Growth of quadratic form deviations with n.
    VerifyQf,
}

enum Outcome {
    Pass,
    Fail,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    let workers = cli.workers;
    match with_workers(workers, || run(&cli)) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(2)
        }
    }
}

fn out_dir(cli: &Cli) -> Result<PathBuf> {
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Error::Config("this subcommand needs --config".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

/// `(c, H)` from the flags, or from the largest size of `--config`.
fn resolve_problem(cli: &Cli, problem: &Problem) -> Result<(AspectRatio, SpectralMeasure)> {
    match (problem.c, &cli.config) {
        (Some(c), _) => Ok((AspectRatio::new(c)?, problem.population.parse()?)),
        (None, Some(_)) => {
            let cfg = load_config(cli)?;
            let (p, n) = cfg.sizes[cfg.largest_size_index()];
            Ok((AspectRatio::from_dims(p, n)?, filter_spectrum(&cfg.filter_spec(p))?))
        }
        (None, None) => Err(Error::Config("give --c (and --population) or --config".into())),
    }
}

/// A bare model spec, or the largest size of an experiment config.
fn load_model(cli: &Cli) -> Result<ModelSpec> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Error::Config("simulate needs --config".into()))?;
    let text = std::fs::read_to_string(path)?;
    let mut model = match serde_json::from_str::<ModelSpec>(&text) {
        Ok(m) => m,
        Err(_) => {
            let cfg = ExperimentConfig::from_json(&text)?;
            cfg.model(cfg.largest_size_index(), 0)
        }
    };
    if let Some(seed) = cli.seed {
        model.seed = seed;
    }
    Ok(model)
}

fn run(cli: &Cli) -> Result<Outcome> {
    let exec = Execution::default();
    let opts = SolverOptions::default();
    match &cli.command {
        Command::Solve { u, v, problem } => {
            let (c, h) = resolve_problem(cli, problem)?;
            let z = UpperHalfPoint::new(*u, *v)?;
            let pair = solve_companion(z, c, &h, &opts)?;
            println!("z = {} + {}i", z.re(), z.im());
            println!("m = {} + {}i", pair.m.re, pair.m.im);
            println!("m_companion = {} + {}i", pair.m_companion.re, pair.m_companion.im);
            println!("residual = {:e}", pair.residual);
            Ok(Outcome::Pass)
        }
        Command::Density { points, problem } => {
            let (c, h) = resolve_problem(cli, problem)?;
            let path = out_dir(cli)?.join("density.txt");
            let profile = emit_density_profile(c, &h, *points, &path)?;
            log::info!(
                "wrote {} and {} (total mass {:.6})",
                path.display(),
                support_path(&path).display(),
                profile.total_mass()
            );
            Ok(Outcome::Pass)
        }
        Command::Support { problem } => {
            let (c, h) = resolve_problem(cli, problem)?;
            let support = find_support(c, &h)?;
            for (l, r) in support.intervals() {
                println!("{l:.12} {r:.12}");
            }
            if support.lsd_zero_atom_weight() > 0.0 {
                println!("# zero atom {}", support.lsd_zero_atom_weight());
            }
            Ok(Outcome::Pass)
        }
        Command::Simulate => {
            let model = load_model(cli)?;
            let spectrum = simulate_spectrum(&model)?;
            let dir = out_dir(cli)?;
            write_spectrum(&spectrum, &dir.join("spectrum.txt"))?;
            write_histogram(&spectrum, &dir.join("histogram.txt"))?;
            log::info!(
                "p = {}, n = {}, seed = {}: λ_max = {:.6}, wrote {}",
                model.p(),
                model.n,
                model.seed,
                spectrum.max().unwrap_or(f64::NAN),
                dir.display()
            );
            Ok(Outcome::Pass)
        }
        Command::VerifyLsd => verify(cli, |cfg| run_lsd_experiment(cfg, exec)),
        Command::VerifyGap => verify(cli, |cfg| run_gap_experiment(cfg, exec)),
        Command::VerifyEdge => verify(cli, |cfg| run_edge_experiment(cfg, exec)),
        Command::VerifyQf => verify(cli, |cfg| run_qf_experiment(cfg, exec)),
    }
}

fn verify(cli: &Cli, runner: impl FnOnce(&ExperimentConfig) -> Result<ExperimentReport>) -> Result<Outcome> {
    let cfg = load_config(cli)?;
    let report = runner(&cfg)?;
    let (records, summary) = cfg.output_paths(cli.out.as_deref());
    report.write(&records, &summary)?;
    let verdict = &report.summary.verdict;
    for (k, v) in &verdict.metrics {
        log::info!("{k} = {v}");
    }
    log::info!(
        "{}: {} ({})",
        cfg.experiment.name(),
        if verdict.passed { "PASS" } else { "FAIL" },
        verdict.criterion
    );
    log::info!("records: {}, summary: {}", records.display(), summary.display());
    Ok(if verdict.passed { Outcome::Pass } else { Outcome::Fail })
}

fn write_spectrum(spectrum: &EigenSpectrum, path: &Path) -> Result<()> {
    let mut out = String::from("# eigenvalue\n");
    for v in spectrum.values() {
        writeln!(out, "{v:.12e}").expect("write to String");
    }
    Ok(std::fs::write(path, out)?)
}

fn write_histogram(spectrum: &EigenSpectrum, path: &Path) -> Result<()> {
    let mut out = String::from("# bin_centre density\n");
    for (x, d) in histogram(spectrum.values(), HISTOGRAM_BIN_WIDTH) {
        writeln!(out, "{x:.6} {d:.12e}").expect("write to String");
    }
    Ok(std::fs::write(path, out)?)
}
