//! Convex quadratic programs over the feasible graph set, solved by
//! accelerated projected gradient.
//!
//! Both learners reduce their graph step to
//!
//! ```text
//! phi(G) = w ||M - beta G A||_F^2 + theta1 ||G||_F^2 + <lin, x> + const
//! ```
//!
//! over the strictly-upper-triangular entries `x` of `G`, subject to
//! `x >= 0` and `sum(x) = n / 2`. Every free entry appears twice in `G`, which
//! the gradient accounts for. The data enter only through the Gram matrices
//! `S = A A^T` and `P = M A^T`, so one evaluation costs `O(n^3)` regardless of
//! the number of games.

use nalgebra::{DMatrix, DVector};

use super::projection::{project_simplex, upper_total};
use crate::graphs::upper_pairs;

/// Above this many free entries the dense active-set polish is skipped.
const POLISH_MAX_ENTRIES: usize = 1500;
const POLISH_MAX_ROUNDS: usize = 50;

#[derive(Debug, Clone)]
pub struct GraphQp {
    n: usize,
    pairs: Vec<(usize, usize)>,
    /// `A A^T`
    gram: DMatrix<f64>,
    /// `P + P^T` on the free entries, with `P = M A^T`.
    cross: Vec<f64>,
    weight: f64,
    beta: f64,
    theta1: f64,
    linear: Vec<f64>,
    /// `w ||M||^2` plus any caller constant.
    constant: f64,
}

#[derive(Debug, Clone)]
pub struct QpOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    /// Objective after every accepted step, starting with the initial point.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct QpOptions {
    /// Relative objective change below which the solver may stop.
    pub tol: f64,
    pub max_iter: usize,
}

impl GraphQp {
    /// `w ||M - beta G A||^2 + theta1 ||G||^2 + <lin, x> + constant`.
    pub fn new(
        actions: &DMatrix<f64>,
        target: &DMatrix<f64>,
        weight: f64,
        beta: f64,
        theta1: f64,
        linear: Option<Vec<f64>>,
        constant: f64,
    ) -> Self {
        let n = actions.nrows();
        let pairs: Vec<_> = upper_pairs(n).collect();
        let gram = actions * actions.transpose();
        let p = target * actions.transpose();
        let cross = pairs.iter().map(|&(i, j)| p[(i, j)] + p[(j, i)]).collect();
        let linear = linear.unwrap_or_else(|| vec![0.0; pairs.len()]);
        assert_eq!(linear.len(), pairs.len());
        GraphQp {
            n,
            pairs,
            gram,
            cross,
            weight,
            beta,
            theta1,
            linear,
            constant: constant + weight * target.norm_squared(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.pairs.len()
    }

    fn matrix(&self, x: &[f64]) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.n, self.n);
        for (&(i, j), &v) in self.pairs.iter().zip(x) {
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
        g
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let g = self.matrix(x);
        let gs = &g * &self.gram;
        let quad = gs.component_mul(&g).sum();
        let cross: f64 = self.cross.iter().zip(x).map(|(c, v)| c * v).sum();
        let lin: f64 = self.linear.iter().zip(x).map(|(c, v)| c * v).sum();
        let sq: f64 = x.iter().map(|v| v * v).sum();
        self.constant
            + self.weight * (self.beta * self.beta * quad - 2.0 * self.beta * cross)
            + 2.0 * self.theta1 * sq
            + lin
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut grad = self.hessian_apply(x);
        for ((g, c), l) in grad.iter_mut().zip(&self.cross).zip(&self.linear) {
            *g += -2.0 * self.weight * self.beta * c + l;
        }
        grad
    }

    /// Product with the (constant) Hessian.
    pub fn hessian_apply(&self, v: &[f64]) -> Vec<f64> {
        let g = self.matrix(v);
        let gs = &g * &self.gram;
        let c = 2.0 * self.weight * self.beta * self.beta;
        self.pairs
            .iter()
            .zip(v)
            .map(|(&(i, j), &vi)| c * (gs[(i, j)] + gs[(j, i)]) + 4.0 * self.theta1 * vi)
            .collect()
    }

    fn hessian_dense(&self) -> DMatrix<f64> {
        let m = self.dim();
        let s = &self.gram;
        let c = 2.0 * self.weight * self.beta * self.beta;
        let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        DMatrix::from_fn(m, m, |r, q| {
            let (i, j) = self.pairs[r];
            let (k, l) = self.pairs[q];
            let coupling = delta(i, k) * s[(l, j)]
                + delta(i, l) * s[(k, j)]
                + s[(i, k)] * delta(l, j)
                + s[(i, l)] * delta(k, j);
            c * coupling + 4.0 * self.theta1 * delta(r, q)
        })
    }

    /// Power-iteration estimate of the largest Hessian eigenvalue.
    pub fn lipschitz(&self) -> f64 {
        let m = self.dim();
        let mut v: Vec<f64> = (0..m).map(|i| 1.0 + (i % 7) as f64 * 0.1).collect();
        let mut est = 0.0;
        for _ in 0..50 {
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm == 0.0 {
                break;
            }
            v.iter_mut().for_each(|a| *a /= norm);
            let hv = self.hessian_apply(&v);
            let next = hv.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
            let converged = (next - est).abs() <= 1e-6 * next.abs();
            est = next;
            v = hv;
            if converged {
                break;
            }
        }
        est.max(1e-12)
    }

    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        project_simplex(v, upper_total(self.n))
    }

    /// `||x - P(x - eta grad)|| / eta`, the norm of the gradient mapping.
    pub fn residual(&self, x: &[f64], eta: f64) -> f64 {
        let grad = self.gradient(x);
        let step: Vec<f64> = x.iter().zip(&grad).map(|(a, g)| a - eta * g).collect();
        let p = self.project(&step);
        x.iter()
            .zip(&p)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
            / eta
    }

    /// Accelerated projected gradient from the feasible point `x0`, with
    /// backtracking and function-value restart, followed by an active-set
    /// refinement on small problems. Accepted iterates never increase the
    /// objective.
    pub fn solve(&self, x0: Vec<f64>, opts: QpOptions) -> QpOutcome {
        let mut x = x0;
        let mut fx = self.value(&x);
        let mut trace = vec![fx];
        if self.dim() <= 1 {
            return QpOutcome {
                x,
                value: fx,
                trace,
                iterations: 0,
                converged: true,
            };
        }
        let mut lip = self.lipschitz();
        let mut y = x.clone();
        let mut t = 1.0f64;
        let mut converged = false;
        let mut iterations = 0;

        while iterations < opts.max_iter {
            iterations += 1;
            let fy = self.value(&y);
            let grad = self.gradient(&y);
            let (z, fz) = loop {
                let step: Vec<f64> = y.iter().zip(&grad).map(|(a, g)| a - g / lip).collect();
                let z = self.project(&step);
                let fz = self.value(&z);
                let mut lin = 0.0;
                let mut sq = 0.0;
                for ((zi, yi), gi) in z.iter().zip(&y).zip(&grad) {
                    let d = zi - yi;
                    lin += gi * d;
                    sq += d * d;
                }
                let slack = 1e-12 * (1.0 + fy.abs());
                if fz <= fy + lin + 0.5 * lip * sq + slack || lip > 1e30 {
                    break (z, fz);
                }
                lip *= 2.0;
            };
            let mapping = lip
                * z.iter()
                    .zip(&y)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();

            if fz > fx {
                if t == 1.0 {
                    // plain projected-gradient step from x failed to descend:
                    // we are at the floating-point optimum
                    converged = true;
                    break;
                }
                y.clone_from(&x);
                t = 1.0;
                continue;
            }

            let rel = (fx - fz) / fz.abs().max(1.0);
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let momentum = (t - 1.0) / t_next;
            y = z
                .iter()
                .zip(&x)
                .map(|(zi, xi)| zi + momentum * (zi - xi))
                .collect();
            x = z;
            fx = fz;
            t = t_next;
            trace.push(fx);

            let grad_scale = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if rel < opts.tol && mapping <= 1e-6 * grad_scale.max(1.0) {
                converged = true;
                break;
            }
        }

        if self.dim() <= POLISH_MAX_ENTRIES {
            if let Some((xp, fp)) = self.polish(&x) {
                if fp <= fx {
                    x = xp;
                    fx = fp;
                    trace.push(fx);
                    converged = true;
                }
            }
        }

        QpOutcome {
            x,
            value: fx,
            trace,
            iterations,
            converged,
        }
    }

    /// Primal active-set refinement seeded with the support of `x`: solves the
    /// equality-constrained problem on the support exactly and adjusts the
    /// support until the KKT conditions hold.
    fn polish(&self, x: &[f64]) -> Option<(Vec<f64>, f64)> {
        let m = self.dim();
        let hess = self.hessian_dense();
        let zero = vec![0.0; m];
        let lin0 = self.gradient(&zero);
        let total = upper_total(self.n);
        let mut support: Vec<bool> = x.iter().map(|&v| v > 0.0).collect();

        for _ in 0..POLISH_MAX_ROUNDS {
            let idx: Vec<usize> = (0..m).filter(|&i| support[i]).collect();
            let s = idx.len();
            if s == 0 {
                return None;
            }
            let mut kkt = DMatrix::zeros(s + 1, s + 1);
            let mut rhs = DVector::zeros(s + 1);
            for (a, &i) in idx.iter().enumerate() {
                for (b, &j) in idx.iter().enumerate() {
                    kkt[(a, b)] = hess[(i, j)];
                }
                kkt[(a, s)] = -1.0;
                kkt[(s, a)] = 1.0;
                rhs[a] = -lin0[i];
            }
            rhs[s] = total;
            let sol = kkt.lu().solve(&rhs)?;
            if sol.iter().any(|v| !v.is_finite()) {
                return None;
            }

            let mut cand = vec![0.0; m];
            for (a, &i) in idx.iter().enumerate() {
                cand[i] = sol[a];
            }
            let negatives: Vec<usize> = idx.iter().copied().filter(|&i| cand[i] < 0.0).collect();
            if !negatives.is_empty() {
                for i in negatives {
                    support[i] = false;
                }
                continue;
            }

            let nu = sol[s];
            let grad = self.gradient(&cand);
            let scale = 1e-10 * (1.0 + grad.iter().fold(0.0f64, |a, g| a.max(g.abs())));
            let worst = (0..m)
                .filter(|&i| !support[i])
                .map(|i| (i, grad[i] - nu))
                .filter(|&(_, d)| d < -scale)
                .min_by(|a, b| a.1.total_cmp(&b.1));
            match worst {
                Some((i, _)) => support[i] = true,
                None => {
                    let fixed = self.project(&cand);
                    let f = self.value(&fixed);
                    return Some((fixed, f));
                }
            }
        }
        None
    }
}
