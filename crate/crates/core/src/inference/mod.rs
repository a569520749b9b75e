//! Learning the interaction graph and marginal benefits from observed
//! equilibrium actions.
//!
//! Two learners share one constrained QP engine ([`qp::GraphQp`]):
//!
//! * [`solve_independent`] minimizes
//!   `f(G, B) = ||(I - beta G) A - B||^2 + theta1 ||G||^2 + theta2 ||B||^2`.
//!   For fixed `G` the optimal `B` is `(I - beta G) A / (1 + theta2)`, which
//!   leaves `theta2 / (1 + theta2) ||(I - beta G) A||^2 + theta1 ||G||^2`
//!   to minimize over graphs. The problem is jointly convex, so this is exact.
//! * [`solve_homophilous`] minimizes
//!   `h(G, B) = ||(I - beta G) A - B||^2 + theta1 ||G||^2 + theta2 tr(B^T L B)`
//!   by block coordinate descent: a QP in `G`, then the closed form
//!   `B = (I + theta2 L)^-1 (I - beta G) A`.
//!
//! The graph is constrained to be symmetric, nonnegative, zero-diagonal and
//! to have entry sum `N`.

mod projection;
pub mod qp;

pub use projection::{project_feasible, project_simplex, uniform_upper};

use nalgebra::{Cholesky, DMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::{ActionMatrix, BenefitMatrix};
use crate::graphs::{graph_laplacian, upper_pairs, Graph};
use crate::seed;
use qp::{GraphQp, QpOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverParams {
    /// Network-effect strength; positive for complements.
    pub beta: f64,
    /// Frobenius penalty on the graph.
    pub theta1: f64,
    /// Benefit penalty (independent) or smoothness weight (homophilous).
    pub theta2: f64,
    /// Relative objective change that ends the inner QP.
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    /// Absolute objective change that ends block coordinate descent.
    pub bcd_tol: f64,
    pub bcd_max_iter: usize,
    /// Seed for the random initial benefits of the homophilous learner.
    pub seed: u64,
    /// Independent homophilous runs; the lowest final objective wins.
    pub restarts: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            beta: 0.0,
            theta1: 1.0,
            theta2: 1.0,
            inner_tol: 1e-8,
            inner_max_iter: 20_000,
            bcd_tol: 1e-4,
            bcd_max_iter: 50,
            seed: 0,
            restarts: 1,
        }
    }
}

impl SolverParams {
    pub fn new(beta: f64, theta1: f64, theta2: f64) -> Self {
        SolverParams {
            beta,
            theta1,
            theta2,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.beta.is_finite() {
            return Err(Error::param("beta", "must be finite"));
        }
        if !(self.theta1 >= 0.0 && self.theta1.is_finite()) {
            return Err(Error::param("theta1", format!("{} is not >= 0", self.theta1)));
        }
        if !(self.theta2 >= 0.0 && self.theta2.is_finite()) {
            return Err(Error::param("theta2", format!("{} is not >= 0", self.theta2)));
        }
        if !(self.inner_tol > 0.0) {
            return Err(Error::param("inner_tol", "must be > 0"));
        }
        if !(self.bcd_tol > 0.0) {
            return Err(Error::param("bcd_tol", "must be > 0"));
        }
        if self.inner_max_iter == 0 {
            return Err(Error::param("inner_max_iter", "must be >= 1"));
        }
        if self.bcd_max_iter == 0 {
            return Err(Error::param("bcd_max_iter", "must be >= 1"));
        }
        if self.restarts == 0 {
            return Err(Error::param("restarts", "must be >= 1"));
        }
        Ok(())
    }

    fn qp_options(&self) -> QpOptions {
        QpOptions {
            tol: self.inner_tol,
            max_iter: self.inner_max_iter,
        }
    }
}

/// A recovered graph and benefits with solver diagnostics.
#[derive(Debug, Clone)]
pub struct LearnedModel {
    pub graph: Graph,
    pub benefits: BenefitMatrix,
    /// Independent learner: objective after each accepted inner step.
    /// Homophilous learner: objective after each outer iteration.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

impl LearnedModel {
    pub fn objective(&self) -> f64 {
        self.objective_trace.last().copied().unwrap_or(f64::NAN)
    }
}

fn check_dims(g: &Graph, b: &BenefitMatrix, a: &ActionMatrix) -> Result<()> {
    if a.n() != g.n() || b.n() != g.n() || a.games() != b.games() {
        return Err(Error::Dimension(format!(
            "graph has {} nodes, benefits are {}x{}, actions are {}x{}",
            g.n(),
            b.n(),
            b.games(),
            a.n(),
            a.games()
        )));
    }
    Ok(())
}

/// `(I - beta G) A`
fn equilibrium_residual_base(g: &Graph, beta: f64, a: &DMatrix<f64>) -> DMatrix<f64> {
    a - g.weights() * a * beta
}

/// Independent-benefits objective `f(G, B)`.
pub fn objective_f(g: &Graph, b: &BenefitMatrix, a: &ActionMatrix, params: &SolverParams) -> Result<f64> {
    check_dims(g, b, a)?;
    let fit = (equilibrium_residual_base(g, params.beta, a.values()) - b.values()).norm_squared();
    Ok(fit + params.theta1 * g.weights().norm_squared() + params.theta2 * b.values().norm_squared())
}

/// Homophilous objective `h(G, B)`.
pub fn objective_h(g: &Graph, b: &BenefitMatrix, a: &ActionMatrix, params: &SolverParams) -> Result<f64> {
    check_dims(g, b, a)?;
    let fit = (equilibrium_residual_base(g, params.beta, a.values()) - b.values()).norm_squared();
    let smooth = laplacian_energy(g, b.values());
    Ok(fit + params.theta1 * g.weights().norm_squared() + params.theta2 * smooth)
}

/// `tr(B^T L B)`
pub fn laplacian_energy(g: &Graph, b: &DMatrix<f64>) -> f64 {
    let l = graph_laplacian(g);
    (&l * b).component_mul(b).sum()
}

/// Exact minimizer of `h(G, .)`: `B = (I + theta2 L)^-1 (I - beta G) A`.
pub fn benefits_closed_form(g: &Graph, a: &ActionMatrix, params: &SolverParams) -> Result<BenefitMatrix> {
    if a.n() != g.n() {
        return Err(Error::Dimension(format!(
            "graph has {} nodes, actions have {} rows",
            g.n(),
            a.n()
        )));
    }
    if !(params.theta2 >= 0.0) {
        return Err(Error::param("theta2", "must be >= 0"));
    }
    let rhs = equilibrium_residual_base(g, params.beta, a.values());
    if params.theta2 == 0.0 {
        return Ok(BenefitMatrix::new(rhs));
    }
    let n = g.n();
    let system = DMatrix::identity(n, n) + graph_laplacian(g) * params.theta2;
    let chol = Cholesky::new(system)
        .ok_or_else(|| Error::Numerical("I + theta2 L is not positive definite".into()))?;
    Ok(BenefitMatrix::new(chol.solve(&rhs)))
}

fn check_inputs(a: &ActionMatrix, params: &SolverParams) -> Result<()> {
    params.validate()?;
    if a.n() < 2 {
        return Err(Error::param("actions", "need at least two players"));
    }
    if a.games() < 1 {
        return Err(Error::param("actions", "need at least one game"));
    }
    Ok(())
}

/// The graph QP left after eliminating `B` from the independent objective.
/// Its value equals `f(G, B*(G))`.
pub fn independent_qp(a: &ActionMatrix, params: &SolverParams) -> GraphQp {
    let w = params.theta2 / (1.0 + params.theta2);
    GraphQp::new(a.values(), a.values(), w, params.beta, params.theta1, None, 0.0)
}

/// The graph step of the homophilous learner with `B` held fixed. Its value
/// equals `h(G, B)`.
pub fn homophilous_graph_qp(a: &ActionMatrix, b: &BenefitMatrix, params: &SolverParams) -> GraphQp {
    let bv = b.values();
    let target = a.values() - bv;
    // tr(B^T L B) = sum_{i<j} G_ij ||B_i - B_j||^2
    let linear: Vec<f64> = upper_pairs(a.n())
        .map(|(i, j)| params.theta2 * (bv.row(i) - bv.row(j)).norm_squared())
        .collect();
    GraphQp::new(a.values(), &target, 1.0, params.beta, params.theta1, Some(linear), 0.0)
}

/// Learns a graph and benefits under independent marginal benefits.
pub fn solve_independent(a: &ActionMatrix, params: &SolverParams) -> Result<LearnedModel> {
    check_inputs(a, params)?;
    let n = a.n();
    let qp = independent_qp(a, params);
    let out = qp.solve(uniform_upper(n), params.qp_options());
    let graph = Graph::from_upper(n, &out.x)?;
    let benefits = BenefitMatrix::new(equilibrium_residual_base(&graph, params.beta, a.values()) / (1.0 + params.theta2));
    Ok(LearnedModel {
        graph,
        benefits,
        objective_trace: out.trace,
        converged: out.converged,
        iterations: out.iterations,
    })
}

/// Learns a graph and benefits under homophilous marginal benefits by block
/// coordinate descent. With `restarts > 1` the run with the lowest final
/// objective is returned.
pub fn solve_homophilous(a: &ActionMatrix, params: &SolverParams) -> Result<LearnedModel> {
    check_inputs(a, params)?;
    let mut best: Option<LearnedModel> = None;
    for r in 0..params.restarts {
        let init_seed = if r == 0 {
            params.seed
        } else {
            seed::derive(params.seed, &[r as u64])
        };
        let run = homophilous_run(a, params, init_seed)?;
        if best.as_ref().is_none_or(|b| run.objective() < b.objective()) {
            best = Some(run);
        }
    }
    Ok(best.expect("restarts >= 1"))
}

fn homophilous_run(a: &ActionMatrix, params: &SolverParams, init_seed: u64) -> Result<LearnedModel> {
    let n = a.n();
    let k = a.games();
    let mut rng = ChaCha8Rng::seed_from_u64(init_seed);
    let mut benefits = BenefitMatrix::new(DMatrix::from_fn(n, k, |_, _| StandardNormal.sample(&mut rng)));

    let mut x = uniform_upper(n);
    let mut trace: Vec<f64> = Vec::new();
    let mut inner_ok = true;
    let mut converged = false;
    let mut iterations = 0;
    let mut graph = Graph::from_upper(n, &x)?;

    while iterations < params.bcd_max_iter {
        iterations += 1;
        // warm start from the previous graph so the G-step cannot increase h
        let qp = homophilous_graph_qp(a, &benefits, params);
        let out = qp.solve(x, params.qp_options());
        inner_ok &= out.converged;
        x = out.x;
        graph = Graph::from_upper(n, &x)?;
        benefits = benefits_closed_form(&graph, a, params)?;
        let h = objective_h(&graph, &benefits, a, params)?;
        let delta = trace.last().map(|prev| (prev - h).abs());
        trace.push(h);
        if delta.is_some_and(|d| d < params.bcd_tol) {
            converged = true;
            break;
        }
    }

    Ok(LearnedModel {
        graph,
        benefits,
        objective_trace: trace,
        converged: converged && inner_ok,
        iterations,
    })
}
