use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GraphModel {
    /// Erdős–Rényi: independent edges with probability `p`.
    #[serde(rename = "ER", alias = "er")]
    Er,
    /// Watts–Strogatz: ring lattice of degree `k`, edges rewired with probability `p`.
    #[serde(rename = "WS", alias = "ws")]
    Ws,
    /// Barabási–Albert: preferential attachment with `m` edges per new node.
    #[serde(rename = "BA", alias = "ba")]
    Ba,
}

impl GraphModel {
    pub fn as_str(self) -> &'static str {
        match self {
            GraphModel::Er => "ER",
            GraphModel::Ws => "WS",
            GraphModel::Ba => "BA",
        }
    }
}

impl std::fmt::Display for GraphModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for GraphModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "ER" => Ok(GraphModel::Er),
            "WS" => Ok(GraphModel::Ws),
            "BA" => Ok(GraphModel::Ba),
            _ => Err(Error::param("model", format!("unknown graph model `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphModelParams {
    pub model: GraphModel,
    pub n: usize,
    /// Edge probability (ER) or rewiring probability (WS).
    #[serde(default = "default_p")]
    pub p: f64,
    /// Ring degree for WS. `None` selects [`GraphModelParams::default_ring_degree`].
    #[serde(default)]
    pub k: Option<usize>,
    /// Attachments per new node for BA.
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_p() -> f64 {
    0.2
}

fn default_m() -> usize {
    1
}

impl GraphModelParams {
    pub fn er(n: usize, p: f64, seed: u64) -> Self {
        GraphModelParams {
            model: GraphModel::Er,
            n,
            p,
            k: None,
            m: default_m(),
            seed,
        }
    }

    pub fn ws(n: usize, k: usize, p: f64, seed: u64) -> Self {
        GraphModelParams {
            model: GraphModel::Ws,
            n,
            p,
            k: Some(k),
            m: default_m(),
            seed,
        }
    }

    pub fn ba(n: usize, m: usize, seed: u64) -> Self {
        GraphModelParams {
            model: GraphModel::Ba,
            n,
            p: default_p(),
            k: None,
            m,
            seed,
        }
    }

    /// The standard synthetic setup for `model` on `n` nodes: ER with
    /// `p = 0.2`, WS with the default ring degree and `p = 0.2`, BA with `m = 1`.
    pub fn standard(model: GraphModel, n: usize, seed: u64) -> Self {
        GraphModelParams {
            model,
            n,
            p: default_p(),
            k: None,
            m: default_m(),
            seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        GraphModelParams {
            seed,
            ..self.clone()
        }
    }

    /// `floor(log2 n)`, rounded down to an even number, at least 2.
    pub fn default_ring_degree(n: usize) -> usize {
        let k = if n < 2 { 0 } else { n.ilog2() as usize };
        (k - k % 2).max(2)
    }

    pub fn ring_degree(&self) -> usize {
        self.k.unwrap_or_else(|| Self::default_ring_degree(self.n))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::param("n", "graph needs at least one node"));
        }
        match self.model {
            GraphModel::Er | GraphModel::Ws if !(0.0..=1.0).contains(&self.p) => {
                return Err(Error::param("p", format!("{} is not in [0, 1]", self.p)));
            }
            _ => {}
        }
        match self.model {
            GraphModel::Er => {}
            GraphModel::Ws => {
                let k = self.ring_degree();
                if k < 2 || k % 2 != 0 {
                    return Err(Error::param("k", format!("ring degree {k} must be even and >= 2")));
                }
                if k >= self.n {
                    return Err(Error::param("k", format!("ring degree {k} must be < n = {}", self.n)));
                }
            }
            GraphModel::Ba => {
                if self.n < 2 {
                    return Err(Error::param("n", "BA needs at least the two seed nodes"));
                }
                if self.m == 0 || self.m >= self.n {
                    return Err(Error::param("m", format!("{} must be in [1, n)", self.m)));
                }
            }
        }
        Ok(())
    }
}

/// Samples a unit-weight graph. Deterministic in `params.seed`.
pub fn generate_graph(params: &GraphModelParams) -> Result<Graph> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n = params.n;
    let mut adj = vec![vec![false; n]; n];
    match params.model {
        GraphModel::Er => {
            for i in 0..n {
                for j in (i + 1)..n {
                    if rng.random::<f64>() < params.p {
                        adj[i][j] = true;
                        adj[j][i] = true;
                    }
                }
            }
        }
        GraphModel::Ws => watts_strogatz(&mut adj, params.ring_degree(), params.p, &mut rng),
        GraphModel::Ba => barabasi_albert(&mut adj, params.m, &mut rng),
    }
    let w = DMatrix::from_fn(n, n, |i, j| if adj[i][j] { 1.0 } else { 0.0 });
    Graph::from_weights(w)
}

fn set_edge(adj: &mut [Vec<bool>], i: usize, j: usize, on: bool) {
    adj[i][j] = on;
    adj[j][i] = on;
}

// Single-endpoint rewiring: (u, u+j) becomes (u, w) for a uniformly drawn w
// that is neither u nor a current neighbour.
fn watts_strogatz(adj: &mut [Vec<bool>], k: usize, p: f64, rng: &mut ChaCha8Rng) {
    let n = adj.len();
    for j in 1..=k / 2 {
        for u in 0..n {
            set_edge(adj, u, (u + j) % n, true);
        }
    }
    for j in 1..=k / 2 {
        for u in 0..n {
            let v = (u + j) % n;
            if !adj[u][v] || rng.random::<f64>() >= p {
                continue;
            }
            let degree = adj[u].iter().filter(|&&e| e).count();
            if degree >= n - 1 {
                continue;
            }
            let mut w = rng.random_range(0..n);
            while w == u || adj[u][w] {
                w = rng.random_range(0..n);
            }
            set_edge(adj, u, v, false);
            set_edge(adj, u, w, true);
        }
    }
}

fn barabasi_albert(adj: &mut [Vec<bool>], m: usize, rng: &mut ChaCha8Rng) {
    let n = adj.len();
    // every edge contributes both endpoints, so a uniform draw from this list
    // is degree-proportional
    let mut endpoints: Vec<usize> = vec![0, 1];
    set_edge(adj, 0, 1, true);
    for v in 2..n {
        let mut targets: Vec<usize> = Vec::with_capacity(m);
        if v == 2 || v <= m {
            targets.extend(0..m.min(v));
        } else {
            while targets.len() < m {
                let t = endpoints[rng.random_range(0..endpoints.len())];
                if !targets.contains(&t) {
                    targets.push(t);
                }
            }
        }
        for t in targets {
            set_edge(adj, v, t, true);
            endpoints.push(v);
            endpoints.push(t);
        }
    }
}
