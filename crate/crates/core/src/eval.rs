//! Scoring learned structure and benefits, and clustering learned graphs.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::ScoreMatrix;
use crate::error::{Error, Result};
use crate::games::BenefitMatrix;
use crate::graphs::{symmetric_eigen, upper_pairs, Graph};

/// Anything that assigns a score to every node pair.
pub trait EdgeScores {
    fn score_matrix(&self) -> &DMatrix<f64>;
}

impl EdgeScores for Graph {
    fn score_matrix(&self) -> &DMatrix<f64> {
        self.weights()
    }
}

impl EdgeScores for ScoreMatrix {
    fn score_matrix(&self) -> &DMatrix<f64> {
        self.values()
    }
}

impl EdgeScores for DMatrix<f64> {
    fn score_matrix(&self) -> &DMatrix<f64> {
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub auc: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r2: Option<f64>,
    pub n_pos: usize,
    pub n_neg: usize,
}

fn labelled_pairs(scores: &DMatrix<f64>, truth: &Graph) -> Result<(Vec<f64>, Vec<bool>)> {
    let n = truth.n();
    if scores.nrows() != n || scores.ncols() != n {
        return Err(Error::Dimension(format!(
            "scores are {}x{}, truth graph has {n} nodes",
            scores.nrows(),
            scores.ncols()
        )));
    }
    Ok(upper_pairs(n)
        .map(|(i, j)| (scores[(i, j)], truth.weight(i, j) > 0.0))
        .unzip())
}

/// Mann–Whitney AUC from average ranks (ties share their mean rank).
pub fn auc_from_labels(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric("AUC needs both positive and negative pairs"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // ranks start+1 ..= end share their average
        let avg = (start + 1 + end) as f64 / 2.0;
        let pos_in_group = order[start..end].iter().filter(|&&i| labels[i]).count();
        rank_sum_pos += avg * pos_in_group as f64;
        start = end;
    }
    let np = n_pos as f64;
    Ok((rank_sum_pos - np * (np + 1.0) / 2.0) / (np * n_neg as f64))
}

/// AUC of `scores` at separating edges (`truth > 0`) from non-edges over the
/// unordered off-diagonal pairs.
pub fn auc_edges(scores: &impl EdgeScores, truth: &Graph) -> Result<f64> {
    let (s, l) = labelled_pairs(scores.score_matrix(), truth)?;
    auc_from_labels(&s, &l)
}

/// Squared Pearson correlation of the vectorized benefit matrices, i.e. the
/// R² of regressing the truth on the learned values.
pub fn r2_benefits(truth: &BenefitMatrix, learned: &BenefitMatrix) -> Result<f64> {
    if truth.values().shape() != learned.values().shape() {
        return Err(Error::Dimension(format!(
            "truth is {:?}, learned is {:?}",
            truth.values().shape(),
            learned.values().shape()
        )));
    }
    let x = learned.values();
    let y = truth.values();
    let len = x.len() as f64;
    let mx = x.sum() / len;
    let my = y.sum() / len;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y.iter()) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 {
        return Err(Error::UndefinedMetric("learned benefits are constant"));
    }
    if syy == 0.0 {
        return Err(Error::UndefinedMetric("true benefits are constant"));
    }
    Ok(sxy * sxy / (sxx * syy))
}

/// Edge AUC plus, when both benefit matrices are given, benefit R².
pub fn evaluate(
    scores: &impl EdgeScores,
    truth: &Graph,
    benefits: Option<(&BenefitMatrix, &BenefitMatrix)>,
) -> Result<EvalReport> {
    let (s, l) = labelled_pairs(scores.score_matrix(), truth)?;
    let auc = auc_from_labels(&s, &l)?;
    let n_pos = l.iter().filter(|&&v| v).count();
    let r2 = benefits.map(|(t, learned)| r2_benefits(t, learned)).transpose()?;
    Ok(EvalReport {
        auc,
        r2,
        n_pos,
        n_neg: l.len() - n_pos,
    })
}

/// `D^-1/2 (D - G) D^-1/2`; isolated nodes get zero rows.
pub fn normalized_laplacian(g: &Graph) -> DMatrix<f64> {
    let n = g.n();
    let inv_sqrt: Vec<f64> = g
        .degrees()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect();
    DMatrix::from_fn(n, n, |i, j| {
        let diag = if i == j && inv_sqrt[i] > 0.0 { 1.0 } else { 0.0 };
        diag - inv_sqrt[i] * g.weight(i, j) * inv_sqrt[j]
    })
}

const KMEANS_RESTARTS: usize = 20;
const KMEANS_MAX_ITER: usize = 300;

/// Spectral clustering: the `k` lowest eigenvectors of the normalized
/// Laplacian, row-normalized, clustered by k-means with the best of 20
/// seeded k-means++ restarts. Labels are renumbered by first appearance.
pub fn spectral_cluster(g: &Graph, k: usize, seed: u64) -> Result<Vec<usize>> {
    let n = g.n();
    if k < 2 || k > n {
        return Err(Error::param("k", format!("{k} clusters for {n} nodes; need 2 <= k <= n")));
    }
    let spec = symmetric_eigen(&normalized_laplacian(g))?;
    let mut points: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..k).map(|c| spec.eigenvectors[(i, c)]).collect())
        .collect();
    for p in &mut points {
        let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            p.iter_mut().for_each(|v| *v /= norm);
        }
    }
    let labels = kmeans(&points, k, seed);
    Ok(canonical_labels(&labels))
}

fn canonical_labels(labels: &[usize]) -> Vec<usize> {
    let mut map: Vec<Option<usize>> = vec![None; labels.iter().max().map_or(0, |m| m + 1)];
    let mut next = 0;
    labels
        .iter()
        .map(|&l| {
            *map[l].get_or_insert_with(|| {
                next += 1;
                next - 1
            })
        })
        .collect()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Best-inertia k-means over seeded k-means++ restarts.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..KMEANS_RESTARTS {
        let (inertia, labels) = lloyd(points, plus_plus_init(points, k, &mut rng));
        if best.as_ref().is_none_or(|(b, _)| inertia < *b) {
            best = Some((inertia, labels));
        }
    }
    best.map(|(_, l)| l).unwrap_or_default()
}

fn plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centers = vec![points[rng.random_range(0..n)].clone()];
    while centers.len() < k {
        let d: Vec<f64> = points
            .iter()
            .map(|p| centers.iter().map(|c| sq_dist(p, c)).fold(f64::INFINITY, f64::min))
            .collect();
        let total: f64 = d.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut idx = n - 1;
            for (i, &di) in d.iter().enumerate() {
                if target < di {
                    idx = i;
                    break;
                }
                target -= di;
            }
            idx
        } else {
            rng.random_range(0..n)
        };
        centers.push(points[pick].clone());
    }
    centers
}

fn lloyd(points: &[Vec<f64>], mut centers: Vec<Vec<f64>>, ) -> (f64, Vec<usize>) {
    let k = centers.len();
    let dim = points[0].len();
    let mut labels = vec![usize::MAX; points.len()];
    for _ in 0..KMEANS_MAX_ITER {
        let mut changed = false;
        for (p, label) in points.iter().zip(labels.iter_mut()) {
            let nearest = (0..k)
                .min_by(|&a, &b| sq_dist(p, &centers[a]).total_cmp(&sq_dist(p, &centers[b])))
                .unwrap_or(0);
            if *label != nearest {
                *label = nearest;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            // empty clusters keep their previous center
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
    }
    let inertia = points
        .iter()
        .zip(&labels)
        .map(|(p, &l)| sq_dist(p, &centers[l]))
        .sum();
    (inertia, labels)
}
