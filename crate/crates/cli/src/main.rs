use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use torlab::lab::{self, Experiment, ExperimentConfig};
use torlab::Error;

/// Homological entropy and dynamics experiments on tori.
#[derive(Parser)]
#[command(name = "torlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact homological entropy of an integer matrix.
    Homology(Common),
    /// Estimators against the exact values of a hyperbolic automorphism.
    Baseline(Common),
    /// Component checks for the skew product over an Anosov base.
    ThmB(Common),
    /// Component checks for the derived-from-Anosov map with a pasted horseshoe.
    ThmC(Common),
    /// Volume growth of unstable disks against log sp of the exterior power.
    Volume(Common),
    /// Lyapunov spectrum along sampled orbits.
    Lyapunov(Common),
    /// Cone-field check of partial hyperbolicity.
    Cones(Common),
    /// Print the configuration keys of an experiment with their defaults.
    Keys { experiment: String },
}

#[derive(Args)]
struct Common {
    /// key = value config file with [section] headers.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for report.json and tables/.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the full report as JSON instead of the summary.
    #[arg(long)]
    json: bool,
    /// Grid points per dimension.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Inline matrix such as "2,1;1,1".
    #[arg(long)]
    matrix: Option<String>,
    /// Override any config key.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn build_config(exp: Experiment, c: &Common) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::from_path(exp, p)?,
        None => ExperimentConfig::defaults(exp),
    };
    if let Some(s) = c.seed {
        cfg.set("seed", &s.to_string())?;
    }
    if let Some(o) = &c.out {
        cfg.set("out", &o.to_string_lossy())?;
    }
    if let Some(g) = c.grid {
        cfg.set("grid", &g.to_string())?;
    }
    if let Some(t) = c.tol {
        cfg.set("tol", &t.to_string())?;
    }
    if let Some(m) = &c.matrix {
        cfg.set("matrix", m)?;
    }
    for kv in &c.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| Error::Input(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k.trim(), v)?;
    }
    Ok(cfg)
}

fn run(exp: Experiment, c: &Common) -> Result<bool, Error> {
    let cfg = build_config(exp, c)?;
    let report = lab::run(&cfg)?;
    report.write_outputs(&PathBuf::from(cfg.str("out")))?;
    if c.json {
        println!("{}", report.to_json());
    } else {
        print!("{}", report.summary());
    }
    Ok(report.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (exp, common) = match &cli.command {
        Command::Homology(c) => (Experiment::Homology, c),
        Command::Baseline(c) => (Experiment::Baseline, c),
        Command::ThmB(c) => (Experiment::ThmB, c),
        Command::ThmC(c) => (Experiment::ThmC, c),
        Command::Volume(c) => (Experiment::Volume, c),
        Command::Lyapunov(c) => (Experiment::Lyapunov, c),
        Command::Cones(c) => (Experiment::Cones, c),
        Command::Keys { experiment } => {
            return match experiment.parse::<Experiment>() {
                Ok(e) => {
                    for k in e.keys() {
                        println!("{:<20} = {:<12} # {}", k.key, k.default, k.doc);
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            };
        }
    };
    match run(exp, common) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
