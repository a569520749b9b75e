use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graphs::{max_asymmetry, upper_pairs, Graph};

/// Euclidean projection of `v` onto `{x >= 0, sum(x) = total}`.
///
/// Sort-based: with `u` sorted descending, the threshold is
/// `tau = (sum(u[..r]) - total) / r` for the largest `r` where
/// `u[r-1] > tau`.
pub fn project_simplex(v: &[f64], total: f64) -> Vec<f64> {
    if v.is_empty() {
        return Vec::new();
    }
    let mut u = v.to_vec();
    u.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - total) / (j + 1) as f64;
        if uj - t > 0.0 {
            tau = t;
        } else {
            break;
        }
    }
    v.iter().map(|&x| (x - tau).max(0.0)).collect()
}

/// Upper-triangular entries of the constant feasible graph on `n` nodes.
pub fn uniform_upper(n: usize) -> Vec<f64> {
    let m = n * (n - 1) / 2;
    vec![1.0 / (n - 1) as f64; m]
}

/// Free-entry sum that makes the full matrix sum to `n`.
pub(crate) fn upper_total(n: usize) -> f64 {
    n as f64 / 2.0
}

/// Projects a square matrix onto the feasible graph set: symmetric,
/// nonnegative, zero diagonal, entry sum `n`. Asymmetric input is first
/// averaged with its transpose.
pub fn project_feasible(candidate: &DMatrix<f64>) -> Result<Graph> {
    if candidate.nrows() != candidate.ncols() {
        return Err(Error::Dimension(format!(
            "candidate must be square, got {}x{}",
            candidate.nrows(),
            candidate.ncols()
        )));
    }
    let n = candidate.nrows();
    if n < 2 {
        return Err(Error::param("n", "the feasible set needs at least two nodes"));
    }
    let symmetric = max_asymmetry(candidate) == 0.0;
    let upper: Vec<f64> = upper_pairs(n)
        .map(|(i, j)| {
            if symmetric {
                candidate[(i, j)]
            } else {
                0.5 * (candidate[(i, j)] + candidate[(j, i)])
            }
        })
        .collect();
    Graph::from_upper(n, &project_simplex(&upper, upper_total(n)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_node_shift() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]);
        let g = project_feasible(&m).unwrap();
        assert_eq!(g.weight(0, 1), 1.0);
        assert_eq!(g.weight(1, 0), 1.0);
    }

    #[test]
    fn three_node_kkt_example() {
        let x = project_simplex(&[3.0, -1.0, 0.0], 1.5);
        assert_eq!(x, vec![1.5, 0.0, 0.0]);
        let m = DMatrix::from_row_slice(3, 3, &[0.0, 3.0, -1.0, 3.0, 0.0, 0.0, -1.0, 0.0, 0.0]);
        let g = project_feasible(&m).unwrap();
        assert_eq!(g.upper(), vec![1.5, 0.0, 0.0]);
    }

    #[test]
    fn rejects_single_node() {
        assert!(project_feasible(&DMatrix::zeros(1, 1)).is_err());
    }

    #[test]
    fn feasible_input_is_fixed_point() {
        let g = Graph::from_upper(4, &[0.5, 0.25, 0.0, 0.75, 0.25, 0.25]).unwrap();
        let p = project_feasible(g.weights()).unwrap();
        for (a, b) in p.upper().iter().zip(g.upper()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    // Brute-force oracle: the projection is the unique point x in the set
    // with <v - x, y - x> <= 0 for every y in the set; checking the simplex
    // vertices suffices.
    proptest! {
        #[test]
        fn projection_satisfies_variational_inequality(
            v in prop::collection::vec(-5.0f64..5.0, 1..30),
            total in 0.1f64..10.0,
        ) {
            let x = project_simplex(&v, total);
            let s: f64 = x.iter().sum();
            prop_assert!((s - total).abs() <= 1e-9 * (1.0 + total));
            prop_assert!(x.iter().all(|&xi| xi >= 0.0));
            for k in 0..v.len() {
                let mut inner = 0.0;
                for i in 0..v.len() {
                    let y = if i == k { total } else { 0.0 };
                    inner += (v[i] - x[i]) * (y - x[i]);
                }
                prop_assert!(inner <= 1e-9 * (1.0 + total * total));
            }
        }

        #[test]
        fn projected_graph_is_feasible(vals in prop::collection::vec(-3.0f64..3.0, 36)) {
            let m = DMatrix::from_row_slice(6, 6, &vals);
            let g = project_feasible(&m).unwrap();
            prop_assert!((g.volume() - 6.0).abs() <= 1e-9);
            for i in 0..6 {
                prop_assert_eq!(g.weight(i, i), 0.0);
                for j in 0..6 {
                    prop_assert_eq!(g.weight(i, j), g.weight(j, i));
                    prop_assert!(g.weight(i, j) >= 0.0);
                }
            }
        }
    }
}
