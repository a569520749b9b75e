//! Weighted undirected graphs stored as dense symmetric adjacency matrices,
//! random graph models, Laplacians and spectral utilities.

mod generate;
mod spectral;

pub use generate::{generate_graph, GraphModel, GraphModelParams};
pub use spectral::{
    beta_for_rho, graph_laplacian, spectral_radius, symmetric_eigen, BetaSign, SpectralInfo,
};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Symmetric, nonnegative, zero-diagonal adjacency matrix.
///
/// The invariants are enforced at construction; symmetry is bit-exact.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    weights: DMatrix<f64>,
}

impl Graph {
    /// Graph with `n` nodes and no edges.
    pub fn empty(n: usize) -> Self {
        Graph {
            weights: DMatrix::zeros(n, n),
        }
    }

    /// Validates a weight matrix. Symmetry must be exact.
    pub fn from_weights(weights: DMatrix<f64>) -> Result<Self> {
        if weights.nrows() != weights.ncols() {
            return Err(Error::Dimension(format!(
                "adjacency must be square, got {}x{}",
                weights.nrows(),
                weights.ncols()
            )));
        }
        let n = weights.nrows();
        let mut asym = 0.0f64;
        for i in 0..n {
            if weights[(i, i)] != 0.0 {
                return Err(Error::param("weights", format!("diagonal entry {i} is nonzero")));
            }
            for j in 0..n {
                let w = weights[(i, j)];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::param(
                        "weights",
                        format!("entry ({i},{j}) = {w} is not a finite nonnegative weight"),
                    ));
                }
                asym = asym.max((w - weights[(j, i)]).abs());
            }
        }
        if asym > 0.0 {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(Graph { weights })
    }

    /// Averages `m` with its transpose, clamps tiny negatives from round-off
    /// and zeroes the diagonal. Fails if `m` is asymmetric beyond `tol`.
    pub fn symmetrized(m: &DMatrix<f64>, tol: f64) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Dimension(format!(
                "adjacency must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = m.nrows();
        let asym = max_asymmetry(m);
        if asym > tol {
            return Err(Error::NotSymmetric(asym));
        }
        let mut w = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                if v < 0.0 {
                    return Err(Error::param(
                        "weights",
                        format!("entry ({i},{j}) = {v} is negative"),
                    ));
                }
                w[(i, j)] = v;
                w[(j, i)] = v;
            }
        }
        Ok(Graph { weights: w })
    }

    /// Builds a graph from its strictly-upper-triangular entries in row-major
    /// order, `(0,1), (0,2), ..., (n-2,n-1)`.
    pub fn from_upper(n: usize, upper: &[f64]) -> Result<Self> {
        if upper.len() != n * n.saturating_sub(1) / 2 {
            return Err(Error::Dimension(format!(
                "expected {} upper-triangular entries for n = {n}, got {}",
                n * n.saturating_sub(1) / 2,
                upper.len()
            )));
        }
        let mut w = DMatrix::zeros(n, n);
        for ((i, j), &v) in upper_pairs(n).zip(upper) {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::param(
                    "weights",
                    format!("entry ({i},{j}) = {v} is not a finite nonnegative weight"),
                ));
            }
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
        Ok(Graph { weights: w })
    }

    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn into_weights(self) -> DMatrix<f64> {
        self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }

    /// Strictly-upper-triangular entries in row-major order.
    pub fn upper(&self) -> Vec<f64> {
        upper_pairs(self.n()).map(|(i, j)| self.weights[(i, j)]).collect()
    }

    /// Number of pairs with positive weight.
    pub fn edge_count(&self) -> usize {
        upper_pairs(self.n())
            .filter(|&(i, j)| self.weights[(i, j)] > 0.0)
            .count()
    }

    /// Sum of all matrix entries (twice the total edge weight).
    pub fn volume(&self) -> f64 {
        self.weights.sum()
    }

    pub fn degrees(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.weights.row(i).sum()).collect()
    }

    /// Connected components over positive-weight edges, labelled in order of
    /// their smallest node.
    pub fn components(&self) -> Vec<usize> {
        let n = self.n();
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            let mut stack = vec![start];
            label[start] = next;
            while let Some(u) = stack.pop() {
                for v in 0..n {
                    if label[v] == usize::MAX && self.weights[(u, v)] > 0.0 {
                        label[v] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        label
    }

    pub fn component_count(&self) -> usize {
        self.components().into_iter().max().map_or(0, |m| m + 1)
    }
}

/// Iterator over the strictly-upper-triangular index pairs of an `n x n`
/// matrix, row-major.
pub fn upper_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| ((i + 1)..n).map(move |j| (i, j)))
}

pub(crate) fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut asym = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            asym = asym.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    asym
}
