//! `netgames`: simulate network games, learn graphs from actions, run
//! sweeps, score learned graphs and cluster them.
//!
//! Every subcommand reads an optional JSON config and then applies
//! `--key=value` overrides for any config field.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use netgames::baselines::ScoreMatrix;
use netgames::eval::{evaluate, spectral_cluster};
use netgames::experiment::{
    export_learned, learn_real, run_sweep, simulate_to_dir, write_sweep, ExperimentConfig, LearnGrid, Mode,
};
use netgames::io::{
    read_actions_csv, read_benefits_csv, read_graph_csv, read_matrix_csv, write_json, write_labels_csv,
};
use netgames::{Error, SolverParams};

#[derive(Parser)]
#[command(name = "netgames", version, about = "Network game simulation and structure learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a graph, benefits and equilibrium actions.
    Simulate(Run),
    /// Learn a graph and benefits from an action CSV.
    Learn(Run),
    /// Run a grid sweep over synthetic data.
    Sweep(Run),
    /// Score a learned graph against a ground-truth graph.
    Evaluate(Run),
    /// Spectral clustering of a graph CSV.
    Cluster(Run),
}

#[derive(Args)]
struct Run {
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Field overrides, `--key=value`. Lists take `a,b,c`.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--key=value")]
    overrides: Vec<String>,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Parameter { .. } => EXIT_CONFIG,
        Error::Parse(_) | Error::Io(_) | Error::Dimension(_) | Error::NotSymmetric(_) => EXIT_DATA,
        Error::SpectralRadius { .. } | Error::EmptyGraph(_) | Error::Numerical(_) | Error::UndefinedMetric(_) => {
            EXIT_NUMERICAL
        }
    }
}

fn load_config(run: &Run, mode: Mode) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &run.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.mode = mode;
    for raw in &run.overrides {
        let Some((key, value)) = raw.strip_prefix("--").and_then(|s| s.split_once('=')) else {
            return Err(Error::Config(format!("expected `--key=value`, got `{raw}`")));
        };
        cfg.apply_override(key, value)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn required<'a>(path: &'a Option<PathBuf>, field: &str) -> Result<&'a Path, Error> {
    path.as_deref()
        .ok_or_else(|| Error::Config(format!("`{field}` is required in this mode")))
}

fn simulate(cfg: &ExperimentConfig) -> Result<(), Error> {
    let meta = simulate_to_dir(cfg, &cfg.output)?;
    println!(
        "simulated {} graph, N={}, K={}, beta={:.6} -> {}",
        meta.model,
        meta.n,
        meta.k,
        meta.beta,
        cfg.output.display()
    );
    Ok(())
}

fn learn(cfg: &ExperimentConfig) -> Result<(), Error> {
    let actions = read_actions_csv(required(&cfg.actions, "actions")?)?;
    let truth = cfg.truth.as_ref().map(read_graph_csv).transpose()?;
    let grid = LearnGrid::from_config(cfg)?;
    let base = SolverParams {
        seed: cfg.seed,
        restarts: cfg.restarts,
        ..Default::default()
    };
    let out = learn_real(&actions, truth.as_ref(), cfg.algorithms[0], &grid, &base)?;
    export_learned(&cfg.output, &out)?;
    let flagged = out.points.iter().filter(|p| !p.stable).count();
    print!(
        "{}: beta={} theta1={} theta2={} objective={:.6}",
        out.algorithm,
        out.params.beta,
        out.params.theta1,
        out.params.theta2,
        out.model.objective()
    );
    if let Some(r) = out.report {
        print!(" auc={:.4}", r.auc);
    }
    println!(" ({} grid points, {flagged} flagged) -> {}", out.points.len(), cfg.output.display());
    Ok(())
}

fn sweep(cfg: &ExperimentConfig) -> Result<(), Error> {
    let out = run_sweep(cfg)?;
    write_sweep(&cfg.output, &out)?;
    for b in &out.summary.best {
        println!(
            "{} {} rho={} noise_std={} best mean AUC {:.4}",
            b.model,
            b.algorithm,
            b.rho,
            b.noise_std,
            b.auc_mean.unwrap_or(f64::NAN)
        );
    }
    println!("{} rows -> {}", out.rows.len(), cfg.output.display());
    Ok(())
}

fn evaluate_cmd(cfg: &ExperimentConfig) -> Result<(), Error> {
    let learned: DMatrix<f64> = read_matrix_csv(required(&cfg.graph, "graph")?)?;
    let scores = ScoreMatrix::new(learned)?;
    let truth = read_graph_csv(required(&cfg.truth, "truth")?)?;
    let benefits = match (&cfg.benefits, &cfg.learned_benefits) {
        (Some(t), Some(l)) => Some((read_benefits_csv(t)?, read_benefits_csv(l)?)),
        (None, None) => None,
        _ => {
            return Err(Error::Config(
                "`benefits` and `learned_benefits` must be given together".into(),
            ))
        }
    };
    let report = evaluate(&scores, &truth, benefits.as_ref().map(|(t, l)| (t, l)))?;
    std::fs::create_dir_all(&cfg.output)?;
    write_json(cfg.output.join("report.json"), &report)?;
    match report.r2 {
        Some(r2) => println!("auc={:.4} r2={r2:.4}", report.auc),
        None => println!("auc={:.4}", report.auc),
    }
    Ok(())
}

fn cluster(cfg: &ExperimentConfig) -> Result<(), Error> {
    let graph = read_graph_csv(required(&cfg.graph, "graph")?)?;
    let labels = spectral_cluster(&graph, cfg.clusters, cfg.seed)?;
    std::fs::create_dir_all(&cfg.output)?;
    write_labels_csv(cfg.output.join("labels.csv"), &labels)?;
    println!("{} nodes in {} clusters -> {}", labels.len(), cfg.clusters, cfg.output.display());
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    let (run, mode) = match &cli.command {
        Command::Simulate(r) => (r, Mode::Simulate),
        Command::Learn(r) => (r, Mode::Learn),
        Command::Sweep(r) => (r, Mode::Sweep),
        Command::Evaluate(r) => (r, Mode::Evaluate),
        Command::Cluster(r) => (r, Mode::Cluster),
    };
    let cfg = load_config(run, mode)?;
    match mode {
        Mode::Simulate => simulate(&cfg),
        Mode::Learn => learn(&cfg),
        Mode::Sweep => sweep(&cfg),
        Mode::Evaluate => evaluate_cmd(&cfg),
        Mode::Cluster => cluster(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
