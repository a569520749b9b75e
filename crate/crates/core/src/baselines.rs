//! Comparison methods that score edges without the game model: Pearson
//! correlation between players' actions and the graphical Lasso precision.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::ActionMatrix;
use crate::graphs::max_asymmetry;

/// Symmetric edge scores; larger means a more likely edge. The diagonal is
/// zero and ignored by every consumer.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix(DMatrix<f64>);

impl ScoreMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() != values.ncols() {
            return Err(Error::Dimension(format!(
                "score matrix must be square, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("scores", "entries must be finite"));
        }
        let asym = max_asymmetry(&values);
        if asym > 1e-9 {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(ScoreMatrix(values))
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }
}

#[derive(Debug, Clone)]
pub struct CorrelationScores {
    pub scores: ScoreMatrix,
    /// Rows with zero variance; their scores are set to 0.
    pub constant_rows: Vec<usize>,
}

/// Pearson correlation between every pair of players' action rows.
pub fn sample_correlation(a: &ActionMatrix) -> Result<CorrelationScores> {
    let n = a.n();
    let k = a.games();
    if k < 2 {
        return Err(Error::param("actions", "correlation needs at least two games"));
    }
    let av = a.values();
    let mut centered = av.clone();
    let mut norms = vec![0.0; n];
    let mut constant_rows = Vec::new();
    for i in 0..n {
        let mean = av.row(i).mean();
        for c in 0..k {
            centered[(i, c)] -= mean;
        }
        norms[i] = centered.row(i).norm();
        if norms[i] == 0.0 {
            constant_rows.push(i);
        }
    }
    if !constant_rows.is_empty() {
        log::warn!("constant action rows {constant_rows:?}: their correlation scores are set to 0");
    }
    let mut scores = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            if norms[i] == 0.0 || norms[j] == 0.0 {
                continue;
            }
            let r = (centered.row(i).dot(&centered.row(j)) / (norms[i] * norms[j])).clamp(-1.0, 1.0);
            scores[(i, j)] = r;
            scores[(j, i)] = r;
        }
    }
    Ok(CorrelationScores {
        scores: ScoreMatrix::new(scores)?,
        constant_rows,
    })
}

/// Maximum-likelihood covariance of the rows of `A` (games are samples).
pub fn empirical_covariance(a: &DMatrix<f64>) -> DMatrix<f64> {
    let k = a.ncols() as f64;
    let mut centered = a.clone();
    for mut row in centered.row_iter_mut() {
        let mean = row.mean();
        row.add_scalar_mut(-mean);
    }
    &centered * centered.transpose() / k
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GlassoParams {
    /// Off-diagonal l1 penalty.
    pub lambda: f64,
    /// Relative change of the precision that ends the iteration.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for GlassoParams {
    fn default() -> Self {
        GlassoParams {
            lambda: 0.1,
            tol: 1e-8,
            max_iter: 10_000,
        }
    }
}

impl GlassoParams {
    pub fn with_lambda(lambda: f64) -> Self {
        GlassoParams {
            lambda,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct GlassoOutput {
    /// Positive-definite precision estimate.
    pub precision: DMatrix<f64>,
    /// `|Theta_ij|` off the diagonal, zero diagonal.
    pub scores: ScoreMatrix,
    /// Penalized negative log-likelihood of the initial point and of every
    /// accepted iterate.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn off_diagonal_l1(theta: &DMatrix<f64>) -> f64 {
    let n = theta.nrows();
    let mut l1 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                l1 += theta[(i, j)].abs();
            }
        }
    }
    l1
}

/// `tr(S Theta) - log det Theta`, with the inverse, or `None` if `theta` is
/// not positive definite.
fn smooth_part(s: &DMatrix<f64>, theta: &DMatrix<f64>) -> Option<(f64, DMatrix<f64>)> {
    let chol = theta.clone().cholesky()?;
    let logdet = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    Some((s.component_mul(theta).sum() - logdet, chol.inverse()))
}

/// `tr(S Theta) - log det Theta + lambda sum_{i != j} |Theta_ij|`; infinite
/// if `theta` is not positive definite.
pub fn glasso_objective(s: &DMatrix<f64>, theta: &DMatrix<f64>, lambda: f64) -> f64 {
    match smooth_part(s, theta) {
        Some((f, _)) => f + lambda * off_diagonal_l1(theta),
        None => f64::INFINITY,
    }
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    v.signum() * (v.abs() - t).max(0.0)
}

/// Graphical Lasso on the covariance of the action rows, shrunk by
/// `1e-6 tr(S) / N` on the diagonal.
pub fn graphical_lasso(a: &ActionMatrix, params: &GlassoParams) -> Result<GlassoOutput> {
    if a.games() < 2 {
        return Err(Error::param("actions", "graphical Lasso needs at least two games"));
    }
    let n = a.n();
    let mut s = empirical_covariance(a.values());
    let shrink = 1e-6 * s.trace() / n as f64;
    for i in 0..n {
        s[(i, i)] += shrink;
    }
    glasso_ista(&s, params)
}

const MIN_STEP: f64 = 1e-14;

/// Proximal gradient with Barzilai-Borwein steps and backtracking. A step is
/// accepted only if the iterate stays positive definite and the quadratic
/// upper bound holds, so the objective never increases.
pub fn glasso_ista(s: &DMatrix<f64>, params: &GlassoParams) -> Result<GlassoOutput> {
    if !(params.lambda >= 0.0 && params.lambda.is_finite()) {
        return Err(Error::param("lambda", format!("{} is not >= 0", params.lambda)));
    }
    let n = s.nrows();
    if (0..n).any(|i| !(s[(i, i)] > 0.0)) {
        return Err(Error::Numerical("covariance has a non-positive diagonal entry".into()));
    }
    let lambda = params.lambda;
    let mut theta = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 / s[(i, i)] } else { 0.0 });
    let (mut f, mut w) = smooth_part(s, &theta)
        .ok_or_else(|| Error::Numerical("initial precision is not positive definite".into()))?;
    let mut trace = vec![f + lambda * off_diagonal_l1(&theta)];
    let mut step = theta.iter().fold(0.0f64, |m, v| m.max(v.abs())).recip().min(1.0);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < params.max_iter {
        iterations += 1;
        let grad = s - &w;
        let mut t = step;
        let accepted = loop {
            let moved = &theta - &grad * t;
            let cand = DMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    moved[(i, j)]
                } else {
                    soft_threshold(0.5 * (moved[(i, j)] + moved[(j, i)]), t * lambda)
                }
            });
            let delta = &cand - &theta;
            if let Some((f_new, w_new)) = smooth_part(s, &cand) {
                let bound = f + grad.component_mul(&delta).sum() + delta.norm_squared() / (2.0 * t);
                if f_new <= bound {
                    break Some((cand, f_new, w_new, delta));
                }
            }
            t *= 0.5;
            if t < MIN_STEP {
                break None;
            }
        };
        let Some((cand, f_new, w_new, delta)) = accepted else {
            log::warn!("graphical Lasso step size underflowed after {iterations} iterations");
            break;
        };
        let grad_change = (&w - &w_new).component_mul(&delta).sum();
        let change = delta.norm();
        theta = cand;
        f = f_new;
        w = w_new;
        trace.push(f + lambda * off_diagonal_l1(&theta));
        if change <= params.tol * theta.norm() {
            converged = true;
            break;
        }
        step = if grad_change > 0.0 {
            delta.norm_squared() / grad_change
        } else {
            t
        };
    }
    if !converged {
        log::warn!("graphical Lasso stopped after {iterations} iterations without converging");
    }

    let scores = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { theta[(i, j)].abs() });
    let scores = ScoreMatrix::new((&scores + scores.transpose()) * 0.5)?;
    Ok(GlassoOutput {
        precision: theta,
        scores,
        objective_trace: trace,
        iterations,
        converged,
    })
}
