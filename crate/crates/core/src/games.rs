//! Forward model of the linear-quadratic network game: payoffs, Nash
//! equilibria and synthetic marginal benefits.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphs::{
    beta_for_rho, generate_graph, graph_laplacian, spectral_radius, symmetric_eigen, BetaSign,
    Graph, GraphModelParams,
};

/// Laplacian eigenvalues at or below this are treated as null space.
pub const NULL_SPACE_CUTOFF: f64 = 1e-9;

/// Marginal benefits, one column per game.
#[derive(Debug, Clone, PartialEq)]
pub struct BenefitMatrix(DMatrix<f64>);

/// Equilibrium actions, one column per game.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionMatrix(DMatrix<f64>);

impl BenefitMatrix {
    pub fn new(values: DMatrix<f64>) -> Self {
        BenefitMatrix(values)
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn games(&self) -> usize {
        self.0.ncols()
    }
}

impl ActionMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("actions", "entries must be finite"));
        }
        Ok(ActionMatrix(values))
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn games(&self) -> usize {
        self.0.ncols()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BenefitKind {
    /// `b ~ N(0, I)`.
    Independent,
    /// `b ~ N(0, L^+)` for the Laplacian `L` of the interaction graph.
    Homophilous,
    /// Unit-norm combination of Laplacian eigenvectors `lo..=hi` (1-based,
    /// ascending eigenvalue order).
    Bandlimited { lo: usize, hi: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenefitRegime {
    #[serde(flatten)]
    pub kind: BenefitKind,
    #[serde(default)]
    pub noise_std: f64,
}

impl BenefitRegime {
    pub fn independent(noise_std: f64) -> Self {
        BenefitRegime {
            kind: BenefitKind::Independent,
            noise_std,
        }
    }

    pub fn homophilous(noise_std: f64) -> Self {
        BenefitRegime {
            kind: BenefitKind::Homophilous,
            noise_std,
        }
    }

    pub fn bandlimited(lo: usize, hi: usize, noise_std: f64) -> Self {
        BenefitRegime {
            kind: BenefitKind::Bandlimited { lo, hi },
            noise_std,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::param("noise_std", format!("{} is not >= 0", self.noise_std)));
        }
        if let BenefitKind::Bandlimited { lo, hi } = self.kind {
            if lo < 1 || lo > hi || hi > n {
                return Err(Error::param(
                    "band",
                    format!("[{lo}, {hi}] is not within [1, {n}]"),
                ));
            }
        }
        Ok(())
    }
}

fn check_len(what: &str, got: usize, n: usize) -> Result<()> {
    if got != n {
        return Err(Error::Dimension(format!("{what} has length {got}, graph has {n} nodes")));
    }
    Ok(())
}

/// Per-player payoff `u_i = b_i a_i - a_i^2 / 2 + beta a_i (G a)_i`.
pub fn payoff(g: &Graph, beta: f64, b: &DVector<f64>, a: &DVector<f64>) -> Result<DVector<f64>> {
    let n = g.n();
    check_len("b", b.len(), n)?;
    check_len("a", a.len(), n)?;
    let ga = g.weights() * a;
    Ok(DVector::from_fn(n, |i, _| {
        b[i] * a[i] - 0.5 * a[i] * a[i] + beta * a[i] * ga[i]
    }))
}

/// Factorization of `I - beta G` shared across games.
pub struct EquilibriumSolver {
    chol: Cholesky<f64, Dyn>,
    n: usize,
}

impl EquilibriumSolver {
    /// Fails with [`Error::SpectralRadius`] unless `rho(beta G) < 1`.
    pub fn new(g: &Graph, beta: f64) -> Result<Self> {
        let n = g.n();
        let scaled = g.weights() * beta;
        let rho = spectral_radius(&scaled)?;
        if rho >= 1.0 {
            return Err(Error::SpectralRadius { rho });
        }
        let system = DMatrix::identity(n, n) - scaled;
        // rho < 1 makes I - beta G symmetric positive definite
        let chol = Cholesky::new(system)
            .ok_or_else(|| Error::Numerical("I - beta G is not positive definite".into()))?;
        Ok(EquilibriumSolver { chol, n })
    }

    pub fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        check_len("b", b.len(), self.n)?;
        Ok(self.chol.solve(b))
    }

    pub fn solve_all(&self, b: &BenefitMatrix) -> Result<ActionMatrix> {
        check_len("benefit columns", b.n(), self.n)?;
        ActionMatrix::new(self.chol.solve(b.values()))
    }
}

/// Nash equilibrium actions solving `(I - beta G) a = b`.
pub fn equilibrium(g: &Graph, beta: f64, b: &DVector<f64>) -> Result<DVector<f64>> {
    EquilibriumSolver::new(g, beta)?.solve(b)
}

/// Column-wise equilibrium for `K` games on one graph.
pub fn equilibrium_actions(g: &Graph, beta: f64, b: &BenefitMatrix) -> Result<ActionMatrix> {
    EquilibriumSolver::new(g, beta)?.solve_all(b)
}

/// Draws `k` marginal-benefit vectors under `regime`. Deterministic in `seed`.
pub fn sample_benefits(g: &Graph, k: usize, regime: &BenefitRegime, seed: u64) -> Result<BenefitMatrix> {
    let n = g.n();
    regime.validate(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = move || -> f64 { StandardNormal.sample(&mut rng) };

    let mut b = match regime.kind {
        BenefitKind::Independent => DMatrix::from_fn(n, k, |_, _| normal()),
        BenefitKind::Homophilous => {
            let spec = symmetric_eigen(&graph_laplacian(g))?;
            let scales: Vec<f64> = spec
                .eigenvalues
                .iter()
                .map(|&l| if l > NULL_SPACE_CUTOFF { 1.0 / l.sqrt() } else { 0.0 })
                .collect();
            let mut b = DMatrix::zeros(n, k);
            for col in 0..k {
                let coeffs = DVector::from_fn(n, |i, _| {
                    let z = normal();
                    z * scales[i]
                });
                b.set_column(col, &(&spec.eigenvectors * coeffs));
            }
            b
        }
        BenefitKind::Bandlimited { lo, hi } => {
            let spec = symmetric_eigen(&graph_laplacian(g))?;
            let basis = spec.eigenvectors.columns(lo - 1, hi - lo + 1);
            let mut b = DMatrix::zeros(n, k);
            for col in 0..k {
                let coeffs = DVector::from_fn(hi - lo + 1, |_, _| normal());
                let mut v = &basis * coeffs;
                let norm = v.norm();
                if norm > 0.0 {
                    v /= norm;
                }
                b.set_column(col, &v);
            }
            b
        }
    };

    if regime.noise_std > 0.0 {
        for v in b.iter_mut() {
            *v += regime.noise_std * normal();
        }
    }
    Ok(BenefitMatrix(b))
}

/// One synthetic instance: graph, `beta`, benefits and equilibrium actions.
#[derive(Debug, Clone)]
pub struct SimulatedDataset {
    pub graph: Graph,
    pub beta: f64,
    pub benefits: BenefitMatrix,
    pub actions: ActionMatrix,
}

/// Generates a graph, scales `beta` to `target_rho`, samples `k` games and
/// solves each for its equilibrium. The graph comes from `params.seed`, the
/// benefits from `seed`.
pub fn simulate_dataset(
    params: &GraphModelParams,
    k: usize,
    target_rho: f64,
    sign: BetaSign,
    regime: &BenefitRegime,
    seed: u64,
) -> Result<SimulatedDataset> {
    let graph = generate_graph(params)?;
    let beta = beta_for_rho(&graph, target_rho, sign)?;
    let benefits = sample_benefits(&graph, k, regime, seed)?;
    let actions = equilibrium_actions(&graph, beta, &benefits)?;
    Ok(SimulatedDataset {
        graph,
        beta,
        benefits,
        actions,
    })
}
