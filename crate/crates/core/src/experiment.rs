//! Config-driven experiments: simulation, grid sweeps over synthetic data,
//! and hyperparameter search on observed actions.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::baselines::{graphical_lasso, sample_correlation, GlassoParams};
use crate::error::{Error, Result};
use crate::eval::{auc_edges, evaluate, r2_benefits, EvalReport};
use crate::games::{simulate_dataset, ActionMatrix, BenefitKind, BenefitRegime, SimulatedDataset};
use crate::graphs::{spectral_radius, BetaSign, Graph, GraphModel, GraphModelParams};
use crate::inference::{solve_homophilous, solve_independent, LearnedModel, SolverParams};
use crate::io::{write_json, write_matrix_csv};
use crate::seed::{self, stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Simulate,
    Learn,
    #[default]
    Sweep,
    Evaluate,
    Cluster,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Alg1,
    Alg2,
    Correlation,
    Glasso,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Alg1 => "alg1",
            Algorithm::Alg2 => "alg2",
            Algorithm::Correlation => "correlation",
            Algorithm::Glasso => "glasso",
        }
    }

    fn is_learner(self) -> bool {
        matches!(self, Algorithm::Alg1 | Algorithm::Alg2)
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegimeName {
    #[default]
    Independent,
    Homophilous,
    Bandlimited,
}

/// Everything a run needs. Grids for `theta1`, `theta2` and `lambda` hold
/// base-2 exponents; `beta` holds plain values and, when absent, synthetic
/// runs use the generating `beta` rescaled to the learner's graph
/// normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub models: Vec<GraphModel>,
    pub n: usize,
    /// Edge probability (ER) or rewiring probability (WS).
    pub p: f64,
    /// WS ring degree; `None` uses the default for `n`.
    pub ring_degree: Option<usize>,
    /// BA attachments per new node.
    pub attach: usize,
    /// Number of games `K`.
    pub games: usize,
    pub rho: Vec<f64>,
    pub sign: BetaSign,
    pub regime: RegimeName,
    /// `[lo, hi]`, bandlimited regime only.
    pub band: Option<[usize; 2]>,
    pub noise_std: Vec<f64>,
    pub algorithms: Vec<Algorithm>,
    pub theta1_log2: Vec<f64>,
    pub theta2_log2: Vec<f64>,
    pub lambda_log2: Vec<f64>,
    pub beta: Option<Vec<f64>>,
    pub repeats: usize,
    pub seed: u64,
    pub restarts: usize,
    /// Cluster count for `cluster` mode.
    pub clusters: usize,
    pub actions: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub graph: Option<PathBuf>,
    pub benefits: Option<PathBuf>,
    pub learned_benefits: Option<PathBuf>,
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mode: Mode::Sweep,
            models: vec![GraphModel::Er, GraphModel::Ws, GraphModel::Ba],
            n: 20,
            p: 0.2,
            ring_degree: None,
            attach: 1,
            games: 50,
            rho: vec![0.6],
            sign: BetaSign::Complement,
            regime: RegimeName::Independent,
            band: None,
            noise_std: vec![0.1f64.sqrt()],
            algorithms: vec![Algorithm::Alg1],
            theta1_log2: vec![-4.0, -2.0, 0.0, 2.0, 4.0],
            theta2_log2: vec![-6.0, -4.0, -2.0, 0.0, 2.0],
            lambda_log2: vec![-10.0, -8.0, -6.0, -4.0, -2.0, 0.0],
            beta: None,
            repeats: 20,
            seed: 0,
            restarts: 1,
            clusters: 2,
            actions: None,
            truth: None,
            graph: None,
            benefits: None,
            learned_benefits: None,
            output: PathBuf::from("out"),
        }
    }
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Applies a `key=value` override. The value is read as JSON when it
    /// parses, otherwise as a string; list fields also accept `a,b,c`.
    pub fn apply_override(&mut self, key: &str, raw: &str) -> Result<()> {
        let mut doc = serde_json::to_value(&*self).map_err(|e| Error::Config(e.to_string()))?;
        let obj = doc.as_object_mut().expect("config serializes to an object");
        let Some(current) = obj.get(key) else {
            return Err(Error::Config(format!("unknown config key `{key}`")));
        };
        let scalar = |s: &str| serde_json::from_str::<Value>(s).unwrap_or_else(|_| Value::String(s.to_string()));
        let list_field = current.is_array() || key == "beta" || key == "band";
        let parsed = scalar(raw);
        let value = if list_field && !parsed.is_array() && !parsed.is_null() {
            Value::Array(raw.split(',').map(|s| scalar(s.trim())).collect())
        } else {
            parsed
        };
        obj.insert(key.to_string(), value);
        *self = serde_json::from_value(doc)
            .map_err(|e| Error::Config(format!("`{key}={raw}`: {e}")))?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(Error::param("models", "must list at least one graph model"));
        }
        for &model in &self.models {
            self.graph_params(model, 0).validate()?;
        }
        if self.games == 0 {
            return Err(Error::param("games", "must be >= 1"));
        }
        if self.rho.is_empty() {
            return Err(Error::param("rho", "grid is empty"));
        }
        if let Some(r) = self.rho.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
            return Err(Error::param("rho", format!("{r} is not in (0, 1)")));
        }
        if self.noise_std.is_empty() {
            return Err(Error::param("noise_std", "grid is empty"));
        }
        for &noise in &self.noise_std {
            self.regime(noise)?.validate(self.n)?;
        }
        if self.algorithms.is_empty() {
            return Err(Error::param("algorithms", "must list at least one algorithm"));
        }
        let learner = self.algorithms.iter().any(|a| a.is_learner());
        if learner && (self.theta1_log2.is_empty() || !all_finite(&self.theta1_log2)) {
            return Err(Error::param("theta1_log2", "grid is empty or not finite"));
        }
        if learner && (self.theta2_log2.is_empty() || !all_finite(&self.theta2_log2)) {
            return Err(Error::param("theta2_log2", "grid is empty or not finite"));
        }
        if self.algorithms.contains(&Algorithm::Glasso)
            && (self.lambda_log2.is_empty() || !all_finite(&self.lambda_log2))
        {
            return Err(Error::param("lambda_log2", "grid is empty or not finite"));
        }
        if let Some(b) = &self.beta {
            if b.is_empty() || !all_finite(b) {
                return Err(Error::param("beta", "grid is empty or not finite"));
            }
        }
        if self.repeats == 0 {
            return Err(Error::param("repeats", "must be >= 1"));
        }
        if self.restarts == 0 {
            return Err(Error::param("restarts", "must be >= 1"));
        }
        if self.clusters < 2 {
            return Err(Error::param("clusters", "must be >= 2"));
        }
        Ok(())
    }

    pub fn graph_params(&self, model: GraphModel, seed: u64) -> GraphModelParams {
        GraphModelParams {
            model,
            n: self.n,
            p: self.p,
            k: self.ring_degree,
            m: self.attach,
            seed,
        }
    }

    pub fn regime(&self, noise_std: f64) -> Result<BenefitRegime> {
        let kind = match (self.regime, self.band) {
            (RegimeName::Independent, _) => BenefitKind::Independent,
            (RegimeName::Homophilous, _) => BenefitKind::Homophilous,
            (RegimeName::Bandlimited, Some([lo, hi])) => BenefitKind::Bandlimited { lo, hi },
            (RegimeName::Bandlimited, None) => {
                return Err(Error::param("band", "required for the bandlimited regime"))
            }
        };
        Ok(BenefitRegime { kind, noise_std })
    }

    fn solver_params(&self, beta: f64, theta1: f64, theta2: f64, seed: u64) -> SolverParams {
        SolverParams {
            seed,
            restarts: self.restarts,
            ..SolverParams::new(beta, theta1, theta2)
        }
    }
}

/// One hyperparameter setting of one algorithm. `beta = None` means the
/// generating value is used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub algorithm: Algorithm,
    pub theta1: Option<f64>,
    pub theta2: Option<f64>,
    pub lambda: Option<f64>,
    pub beta: Option<f64>,
}

pub fn grid_points(cfg: &ExperimentConfig) -> Vec<GridPoint> {
    let pow2 = |v: &[f64]| v.iter().map(|e| e.exp2()).collect::<Vec<f64>>();
    let betas: Vec<Option<f64>> = match &cfg.beta {
        Some(b) => b.iter().map(|&v| Some(v)).collect(),
        None => vec![None],
    };
    let mut points = Vec::new();
    for &algorithm in &cfg.algorithms {
        let none = GridPoint {
            algorithm,
            theta1: None,
            theta2: None,
            lambda: None,
            beta: None,
        };
        match algorithm {
            Algorithm::Alg1 | Algorithm::Alg2 => {
                for &beta in &betas {
                    for t1 in pow2(&cfg.theta1_log2) {
                        for t2 in pow2(&cfg.theta2_log2) {
                            points.push(GridPoint {
                                theta1: Some(t1),
                                theta2: Some(t2),
                                beta,
                                ..none
                            });
                        }
                    }
                }
            }
            Algorithm::Correlation => points.push(none),
            Algorithm::Glasso => {
                for lambda in pow2(&cfg.lambda_log2) {
                    points.push(GridPoint {
                        lambda: Some(lambda),
                        ..none
                    });
                }
            }
        }
    }
    points
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResultRow {
    pub model: GraphModel,
    pub algorithm: Algorithm,
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub rho: f64,
    pub noise_std: f64,
    pub theta1: Option<f64>,
    pub theta2: Option<f64>,
    pub lambda: Option<f64>,
    /// The `beta` passed to the learner.
    pub beta: Option<f64>,
    /// Repeat index.
    pub seed: u64,
    pub auc: Option<f64>,
    pub r2: Option<f64>,
    pub objective: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub runtime_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub model: GraphModel,
    pub algorithm: Algorithm,
    pub rho: f64,
    pub noise_std: f64,
    pub theta1: Option<f64>,
    pub theta2: Option<f64>,
    pub lambda: Option<f64>,
    /// Grid `beta`; absent when the generating value was used.
    pub beta: Option<f64>,
    pub runs: usize,
    pub failed: usize,
    pub auc_mean: Option<f64>,
    pub auc_median: Option<f64>,
    pub auc_q25: Option<f64>,
    pub auc_q75: Option<f64>,
    pub r2_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub points: Vec<PointSummary>,
    /// Highest mean AUC per (model, algorithm, rho, noise_std).
    pub best: Vec<PointSummary>,
}

impl SweepSummary {
    pub fn best_for(&self, model: GraphModel, algorithm: Algorithm, rho: f64, noise_std: f64) -> Option<&PointSummary> {
        self.best.iter().find(|p| {
            p.model == model && p.algorithm == algorithm && p.rho == rho && p.noise_std == noise_std
        })
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub rows: Vec<SweepResultRow>,
    pub summary: SweepSummary,
}

struct Record {
    row: SweepResultRow,
    point: GridPoint,
}

fn opt_cmp(a: Option<f64>, b: Option<f64>) -> Ordering {
    match (a, b) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        (a, b) => a.is_some().cmp(&b.is_some()),
    }
}

fn point_cmp(a: &GridPoint, b: &GridPoint) -> Ordering {
    a.algorithm
        .cmp(&b.algorithm)
        .then(opt_cmp(a.theta1, b.theta1))
        .then(opt_cmp(a.theta2, b.theta2))
        .then(opt_cmp(a.lambda, b.lambda))
        .then(opt_cmp(a.beta, b.beta))
}

fn cell_cmp(a: &SweepResultRow, b: &SweepResultRow) -> Ordering {
    a.model
        .as_str()
        .cmp(b.model.as_str())
        .then(a.rho.total_cmp(&b.rho))
        .then(a.noise_std.total_cmp(&b.noise_std))
}

/// Data seeds for one repeat: the graph depends only on the repeat, so
/// different `rho` and noise levels see the same graphs.
pub fn repeat_seeds(master: u64, repeat: usize) -> (u64, u64, u64) {
    let r = repeat as u64;
    (
        seed::derive(master, &[r, stream::GRAPH]),
        seed::derive(master, &[r, stream::BENEFITS]),
        seed::derive(master, &[r, stream::INIT]),
    )
}

/// Generates the dataset of one repeat.
pub fn simulate_repeat(
    cfg: &ExperimentConfig,
    model: GraphModel,
    rho: f64,
    noise_std: f64,
    repeat: usize,
) -> Result<SimulatedDataset> {
    let (graph_seed, benefit_seed, _) = repeat_seeds(cfg.seed, repeat);
    let params = cfg.graph_params(model, graph_seed);
    simulate_dataset(&params, cfg.games, rho, cfg.sign, &cfg.regime(noise_std)?, benefit_seed)
}

/// `beta` expressed for a graph rescaled to entry sum `N`, so that `beta G`
/// is unchanged.
pub fn normalized_beta(data: &SimulatedDataset) -> f64 {
    data.beta * data.graph.volume() / data.graph.n() as f64
}

struct PointRun {
    auc: Option<f64>,
    r2: Option<f64>,
    objective: Option<f64>,
    iterations: usize,
    converged: bool,
}

fn run_point(point: &GridPoint, data: &SimulatedDataset, cfg: &ExperimentConfig, init_seed: u64) -> Result<PointRun> {
    match point.algorithm {
        Algorithm::Alg1 | Algorithm::Alg2 => {
            let beta = point.beta.unwrap_or_else(|| normalized_beta(data));
            let params = cfg.solver_params(beta, point.theta1.unwrap_or(1.0), point.theta2.unwrap_or(1.0), init_seed);
            let model = if point.algorithm == Algorithm::Alg1 {
                solve_independent(&data.actions, &params)?
            } else {
                solve_homophilous(&data.actions, &params)?
            };
            Ok(PointRun {
                auc: Some(auc_edges(&model.graph, &data.graph)?),
                r2: r2_benefits(&data.benefits, &model.benefits).ok(),
                objective: Some(model.objective()),
                iterations: model.iterations,
                converged: model.converged,
            })
        }
        Algorithm::Correlation => {
            let c = sample_correlation(&data.actions)?;
            Ok(PointRun {
                auc: Some(auc_edges(&c.scores, &data.graph)?),
                r2: None,
                objective: None,
                iterations: 0,
                converged: true,
            })
        }
        Algorithm::Glasso => {
            let out = graphical_lasso(&data.actions, &GlassoParams::with_lambda(point.lambda.unwrap_or(0.1)))?;
            Ok(PointRun {
                auc: Some(auc_edges(&out.scores, &data.graph)?),
                r2: None,
                objective: out.objective_trace.last().copied(),
                iterations: out.iterations,
                converged: out.converged,
            })
        }
    }
}

/// Runs every grid point on every repeat of every (model, rho, noise) cell.
/// Failures are recorded as rows with `converged = false`.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepOutcome> {
    cfg.validate()?;
    let points = grid_points(cfg);
    let mut tasks = Vec::new();
    for &model in &cfg.models {
        for &rho in &cfg.rho {
            for &noise in &cfg.noise_std {
                for repeat in 0..cfg.repeats {
                    tasks.push((model, rho, noise, repeat));
                }
            }
        }
    }

    let mut records: Vec<Record> = tasks
        .par_iter()
        .flat_map_iter(|&(model, rho, noise, repeat)| {
            let data = simulate_repeat(cfg, model, rho, noise, repeat);
            let (_, _, init_seed) = repeat_seeds(cfg.seed, repeat);
            points
                .iter()
                .map(|point| {
                    let start = Instant::now();
                    let run = data.as_ref().map_err(|e| e.to_string()).and_then(|d| {
                        run_point(point, d, cfg, init_seed)
                            .map(|r| (r, point.beta.or(point.algorithm.is_learner().then(|| normalized_beta(d)))))
                            .map_err(|e| e.to_string())
                    });
                    let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
                    let mut row = SweepResultRow {
                        model,
                        algorithm: point.algorithm,
                        n: cfg.n,
                        k: cfg.games,
                        rho,
                        noise_std: noise,
                        theta1: point.theta1,
                        theta2: point.theta2,
                        lambda: point.lambda,
                        beta: point.beta,
                        seed: repeat as u64,
                        auc: None,
                        r2: None,
                        objective: None,
                        iterations: 0,
                        converged: false,
                        runtime_ms,
                    };
                    match run {
                        Ok((r, beta)) => {
                            row.auc = r.auc;
                            row.r2 = r.r2;
                            row.objective = r.objective;
                            row.iterations = r.iterations;
                            row.converged = r.converged;
                            row.beta = beta;
                        }
                        Err(e) => log::warn!("{model} rho={rho} repeat {repeat} {}: {e}", point.algorithm),
                    }
                    Record { row, point: *point }
                })
                .collect::<Vec<_>>()
        })
        .collect();

    records.sort_by(|a, b| {
        cell_cmp(&a.row, &b.row)
            .then(point_cmp(&a.point, &b.point))
            .then(a.row.seed.cmp(&b.row.seed))
    });
    let summary = summarize(&records);
    Ok(SweepOutcome {
        rows: records.into_iter().map(|r| r.row).collect(),
        summary,
    })
}

/// Quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn summarize(records: &[Record]) -> SweepSummary {
    let mut points: Vec<PointSummary> = Vec::new();
    for group in records.chunk_by(|a, b| {
        cell_cmp(&a.row, &b.row).is_eq() && point_cmp(&a.point, &b.point).is_eq()
    }) {
        let first = &group[0];
        let mut aucs: Vec<f64> = group.iter().filter_map(|r| r.row.auc).collect();
        aucs.sort_by(f64::total_cmp);
        let r2s: Vec<f64> = group.iter().filter_map(|r| r.row.r2).collect();
        let q = |p| (!aucs.is_empty()).then(|| quantile(&aucs, p));
        points.push(PointSummary {
            model: first.row.model,
            algorithm: first.point.algorithm,
            rho: first.row.rho,
            noise_std: first.row.noise_std,
            theta1: first.point.theta1,
            theta2: first.point.theta2,
            lambda: first.point.lambda,
            beta: first.point.beta,
            runs: group.len(),
            failed: group.iter().filter(|r| r.row.auc.is_none()).count(),
            auc_mean: mean(&aucs),
            auc_median: q(0.5),
            auc_q25: q(0.25),
            auc_q75: q(0.75),
            r2_mean: mean(&r2s),
        });
    }

    let mut best: BTreeMap<(String, Algorithm, u64, u64), PointSummary> = BTreeMap::new();
    for p in &points {
        let Some(m) = p.auc_mean else { continue };
        let key = (p.model.as_str().to_string(), p.algorithm, p.rho.to_bits(), p.noise_std.to_bits());
        let better = best.get(&key).is_none_or(|b| b.auc_mean.is_none_or(|bm| m > bm));
        if better {
            best.insert(key, p.clone());
        }
    }
    let mut best: Vec<PointSummary> = best.into_values().collect();
    best.sort_by(|a, b| {
        a.model
            .as_str()
            .cmp(b.model.as_str())
            .then(a.rho.total_cmp(&b.rho))
            .then(a.noise_std.total_cmp(&b.noise_std))
            .then(a.algorithm.cmp(&b.algorithm))
    });
    SweepSummary { points, best }
}

pub fn write_results_csv(path: impl AsRef<Path>, rows: &[SweepResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(File::create(path)?);
    for row in rows {
        w.serialize(row).map_err(|e| Error::Parse(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `results.csv` and `summary.json` into `dir`.
pub fn write_sweep(dir: impl AsRef<Path>, outcome: &SweepOutcome) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    write_results_csv(dir.join("results.csv"), &outcome.rows)?;
    write_json(dir.join("summary.json"), &outcome.summary)
}

/// Hyperparameter grid for [`learn_real`], in plain (not log) values.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnGrid {
    pub beta: Vec<f64>,
    pub theta1: Vec<f64>,
    pub theta2: Vec<f64>,
}

impl LearnGrid {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let beta = cfg
            .beta
            .clone()
            .ok_or_else(|| Error::param("beta", "learn mode needs a beta grid"))?;
        Ok(LearnGrid {
            beta,
            theta1: cfg.theta1_log2.iter().map(|e| e.exp2()).collect(),
            theta2: cfg.theta2_log2.iter().map(|e| e.exp2()).collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnPoint {
    pub beta: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub objective: Option<f64>,
    pub auc: Option<f64>,
    pub converged: bool,
    /// `rho(beta G)` of the learned graph.
    pub spectral_radius: Option<f64>,
    /// False when the learned graph violates `rho(beta G) < 1`.
    pub stable: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct LearnRealOutcome {
    pub algorithm: Algorithm,
    pub model: LearnedModel,
    pub params: SolverParams,
    /// Scores against the supplied ground truth.
    pub report: Option<EvalReport>,
    pub selected_by: &'static str,
    pub points: Vec<LearnPoint>,
}

/// Grid search over `beta` and the `theta`s. With a ground-truth graph the
/// point with the highest AUC wins, otherwise the lowest final objective.
/// Points whose learned graph has `rho(beta G) >= 1` are flagged and only
/// chosen when no stable point exists.
pub fn learn_real(
    actions: &ActionMatrix,
    truth: Option<&Graph>,
    algorithm: Algorithm,
    grid: &LearnGrid,
    base: &SolverParams,
) -> Result<LearnRealOutcome> {
    if !algorithm.is_learner() {
        return Err(Error::param("algorithms", format!("`{algorithm}` does not learn benefits")));
    }
    if grid.beta.is_empty() || grid.theta1.is_empty() || grid.theta2.is_empty() {
        return Err(Error::param("beta", "learn grid is empty"));
    }
    if let Some(t) = truth {
        if t.n() != actions.n() {
            return Err(Error::Dimension(format!(
                "truth graph has {} nodes, actions have {} rows",
                t.n(),
                actions.n()
            )));
        }
    }
    let mut points = Vec::new();
    let mut best: Option<(LearnedModel, SolverParams, bool, f64)> = None;
    for &beta in &grid.beta {
        for &theta1 in &grid.theta1 {
            for &theta2 in &grid.theta2 {
                let params = SolverParams {
                    beta,
                    theta1,
                    theta2,
                    ..base.clone()
                };
                let mut point = LearnPoint {
                    beta,
                    theta1,
                    theta2,
                    objective: None,
                    auc: None,
                    converged: false,
                    spectral_radius: None,
                    stable: false,
                    error: None,
                };
                let fitted = if algorithm == Algorithm::Alg1 {
                    solve_independent(actions, &params)
                } else {
                    solve_homophilous(actions, &params)
                };
                let model = match fitted {
                    Ok(m) => m,
                    Err(e) => {
                        point.error = Some(e.to_string());
                        points.push(point);
                        continue;
                    }
                };
                let rho = spectral_radius(model.graph.weights()).map(|r| r * beta.abs()).ok();
                point.spectral_radius = rho;
                point.stable = rho.is_some_and(|r| r < 1.0);
                point.objective = Some(model.objective());
                point.converged = model.converged;
                if let Some(t) = truth {
                    point.auc = auc_edges(&model.graph, t).ok();
                }
                let score = match truth {
                    Some(_) => point.auc.unwrap_or(f64::NEG_INFINITY),
                    None => -model.objective(),
                };
                let better = match &best {
                    None => true,
                    Some((_, _, stable, s)) => (point.stable, score) > (*stable, *s),
                };
                if better {
                    best = Some((model, params, point.stable, score));
                }
                points.push(point);
            }
        }
    }
    let Some((model, params, stable, _)) = best else {
        return Err(Error::Numerical("every grid point failed".into()));
    };
    if !stable {
        log::warn!("no grid point satisfies rho(beta G) < 1; selected point is flagged");
    }
    let report = truth.map(|t| evaluate(&model.graph, t, None)).transpose()?;
    Ok(LearnRealOutcome {
        algorithm,
        model,
        params,
        report,
        selected_by: if truth.is_some() { "auc" } else { "objective" },
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnedMetadata {
    pub algorithm: Algorithm,
    pub beta: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub spectral_radius: Option<f64>,
    pub selected_by: String,
    pub objective_trace: Vec<f64>,
    pub report: Option<EvalReport>,
    pub grid: Vec<LearnPoint>,
}

/// Writes `graph.csv`, `benefits.csv` and `metadata.json` into `dir`.
pub fn export_learned(dir: impl AsRef<Path>, outcome: &LearnRealOutcome) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let m = &outcome.model;
    write_matrix_csv(dir.join("graph.csv"), m.graph.weights())?;
    write_matrix_csv(dir.join("benefits.csv"), m.benefits.values())?;
    let meta = LearnedMetadata {
        algorithm: outcome.algorithm,
        beta: outcome.params.beta,
        theta1: outcome.params.theta1,
        theta2: outcome.params.theta2,
        objective: m.objective(),
        iterations: m.iterations,
        converged: m.converged,
        spectral_radius: spectral_radius(m.graph.weights()).ok().map(|r| r * outcome.params.beta.abs()),
        selected_by: outcome.selected_by.to_string(),
        objective_trace: m.objective_trace.clone(),
        report: outcome.report,
        grid: outcome.points.clone(),
    };
    write_json(dir.join("metadata.json"), &meta)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationMetadata {
    pub model: GraphModel,
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub rho: f64,
    pub sign: BetaSign,
    pub beta: f64,
    /// `beta` for the graph rescaled to entry sum `N`.
    pub normalized_beta: f64,
    pub regime: BenefitRegime,
    pub seed: u64,
}

/// Simulates one dataset from the first model, `rho` and noise level of the
/// config and writes `graph.csv`, `benefits.csv`, `actions.csv` and
/// `simulation.json` into `dir`.
pub fn simulate_to_dir(cfg: &ExperimentConfig, dir: impl AsRef<Path>) -> Result<SimulationMetadata> {
    cfg.validate()?;
    let (model, rho, noise) = (cfg.models[0], cfg.rho[0], cfg.noise_std[0]);
    let data = simulate_repeat(cfg, model, rho, noise, 0)?;
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    write_matrix_csv(dir.join("graph.csv"), data.graph.weights())?;
    write_matrix_csv(dir.join("benefits.csv"), data.benefits.values())?;
    write_matrix_csv(dir.join("actions.csv"), data.actions.values())?;
    let meta = SimulationMetadata {
        model,
        n: cfg.n,
        k: cfg.games,
        rho,
        sign: cfg.sign,
        beta: data.beta,
        normalized_beta: normalized_beta(&data),
        regime: cfg.regime(noise)?,
        seed: cfg.seed,
    };
    write_json(dir.join("simulation.json"), &meta)?;
    Ok(meta)
}
