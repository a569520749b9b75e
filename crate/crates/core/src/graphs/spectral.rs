use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{max_asymmetry, Graph};
use crate::error::{Error, Result};

/// Eigendecomposition of a symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SpectralInfo {
    pub eigenvalues: DVector<f64>,
    /// Column `i` pairs with `eigenvalues[i]`.
    pub eigenvectors: DMatrix<f64>,
}

/// Whether the game has strategic complements (`beta > 0`) or substitutes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BetaSign {
    Complement,
    Substitute,
}

impl BetaSign {
    pub fn factor(self) -> f64 {
        match self {
            BetaSign::Complement => 1.0,
            BetaSign::Substitute => -1.0,
        }
    }
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = 1.0 + m.amax();
    let asym = max_asymmetry(m);
    if asym > 1e-12 * scale {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(())
}

pub fn symmetric_eigen(m: &DMatrix<f64>) -> Result<SpectralInfo> {
    check_symmetric(m)?;
    let n = m.nrows();
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(SpectralInfo {
        eigenvalues,
        eigenvectors,
    })
}

/// Combinatorial Laplacian `L = D - G`.
pub fn graph_laplacian(g: &Graph) -> DMatrix<f64> {
    let w = g.weights();
    let n = g.n();
    let mut l = -w.clone();
    for i in 0..n {
        // summing the negated row keeps L * 1 exactly zero
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| l[(i, j)]).sum();
        l[(i, i)] = -off;
    }
    l
}

/// Largest eigenvalue magnitude of a symmetric matrix.
pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    check_symmetric(m)?;
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    let values = SymmetricEigen::new(m.clone()).eigenvalues;
    Ok(values.iter().fold(0.0f64, |acc, v| acc.max(v.abs())))
}

/// The `beta` with `rho(beta G) = target_rho`, signed by `sign`.
pub fn beta_for_rho(g: &Graph, target_rho: f64, sign: BetaSign) -> Result<f64> {
    if !(target_rho > 0.0 && target_rho < 1.0) {
        return Err(Error::param(
            "target_rho",
            format!("{target_rho} is not in (0, 1)"),
        ));
    }
    if g.edge_count() == 0 {
        return Err(Error::EmptyGraph("beta is undefined for a zero spectral radius"));
    }
    let rho = spectral_radius(g.weights())?;
    Ok(sign.factor() * target_rho / rho)
}
