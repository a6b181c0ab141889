//! λ-natural reversible random walks as conductance networks on augmented trees.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hypergraph::AugmentedTree;
use crate::linalg::WeightedGraph;
use crate::partition::ROOT;

// log-conductances beyond this magnitude trigger a global rescaling
const LOG_RANGE: f64 = 600.0;

/// Conductances `c(x,x⁻) = λ^{−|x|} μ(Φ(x))` and, on horizontal edges, the
/// harmonic mean of the two vertical conductances.
///
/// Linear conductances are stored divided by `exp(log_shift)`; transition
/// probabilities, potentials and resistance ratios are unaffected by the shift.
#[derive(Clone, Debug)]
pub struct Network {
    pub tree: Arc<AugmentedTree>,
    pub lambda: f64,
    pub log_shift: f64,
    log_vertical: Vec<f64>,
    graph: WeightedGraph,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IsoperimetryFamily {
    LevelTruncations,
    SingleCells,
    RandomConnected { count: usize, size: usize, seed: u64 },
}

pub fn log_add(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

impl Network {
    pub fn build(tree: Arc<AugmentedTree>, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::InvalidParameter(format!("lambda = {lambda} is not in (0,1)")));
        }
        let t = &tree.tree;
        let n = t.vertex_count();
        let ll = lambda.ln();
        let log_vertical: Vec<f64> = (0..n)
            .map(|v| {
                if v == ROOT {
                    f64::NAN
                } else {
                    -(t.level[v] as f64) * ll + t.measure[v].ln()
                }
            })
            .collect();
        let mut logs: Vec<(usize, usize, f64)> = Vec::new();
        for v in 1..n {
            logs.push((v, t.parent[v], log_vertical[v]));
        }
        for (_, x, y) in tree.horizontal_edges() {
            let (a, b) = (log_vertical[x], log_vertical[y]);
            logs.push((x, y, a + b - log_add(a, b)));
        }
        let (lo, hi) = logs
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| (lo.min(e.2), hi.max(e.2)));
        let log_shift = if hi > LOG_RANGE || lo < -LOG_RANGE {
            (hi - LOG_RANGE / 2.0).max(lo + LOG_RANGE / 2.0).min(hi)
        } else {
            0.0
        };
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let vertical = |v: usize| lambda.powi(-(t.level[v] as i32)) * t.measure[v];
        for &(a, b, l) in &logs {
            let w = if log_shift != 0.0 {
                (l - log_shift).exp()
            } else if b == t.parent[a] {
                vertical(a)
            } else {
                let (ca, cb) = (vertical(a), vertical(b));
                ca * cb / (ca + cb)
            };
            adj[a].push((b, w));
            adj[b].push((a, w));
        }
        Ok(Network {
            log_shift,
            lambda,
            log_vertical,
            graph: WeightedGraph::from_adjacency(adj),
            tree,
        })
    }

    pub fn trunc_level(&self) -> usize {
        self.tree.tree.depth()
    }

    pub fn vertex_count(&self) -> usize {
        self.graph.vertex_count()
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    /// The network restricted to `X_n` (vertex ids are unchanged).
    pub fn truncated_graph(&self, n: usize) -> WeightedGraph {
        let end = self.tree.tree.level_start[n + 1];
        let adj = (0..end)
            .map(|v| self.graph.neighbors(v).filter(|&(t, _)| t < end).collect())
            .collect();
        WeightedGraph::from_adjacency(adj)
    }

    /// Horizontal edges of level `n` only, on local indices of `𝒥_n`.
    pub fn level_graph(&self, n: usize) -> WeightedGraph {
        let range = self.tree.tree.level_range(n);
        let adj = range
            .clone()
            .map(|v| {
                self.graph
                    .neighbors(v)
                    .filter(|(t, _)| range.contains(t))
                    .map(|(t, w)| (t - range.start, w))
                    .collect()
            })
            .collect();
        WeightedGraph::from_adjacency(adj)
    }

    /// Stored (shifted) conductance, 0 for non-edges.
    pub fn conductance(&self, x: usize, y: usize) -> f64 {
        self.graph.weight(x, y)
    }

    pub fn log_conductance(&self, x: usize, y: usize) -> Option<f64> {
        let w = self.graph.weight(x, y);
        (w > 0.0).then(|| {
            let t = &self.tree.tree;
            if y != ROOT && t.parent[y] == x {
                self.log_vertical[y]
            } else if x != ROOT && t.parent[x] == y {
                self.log_vertical[x]
            } else {
                let (a, b) = (self.log_vertical[x], self.log_vertical[y]);
                a + b - log_add(a, b)
            }
        })
    }

    /// Conductance without the global shift.
    pub fn true_conductance(&self, x: usize, y: usize) -> f64 {
        self.conductance(x, y) * self.log_shift.exp()
    }

    pub fn total(&self, x: usize) -> f64 {
        self.graph.total(x)
    }

    pub fn transition_prob(&self, x: usize, y: usize) -> f64 {
        self.conductance(x, y) / self.total(x)
    }

    /// `c(x,x⁻) / Σ_{y⁻ = x} c(x,y)`
    pub fn return_ratio(&self, x: usize) -> Result<f64> {
        let t = &self.tree.tree;
        if x == ROOT {
            return Err(Error::InvalidParameter("the root has no parent".into()));
        }
        if t.child_count[x] == 0 {
            return Err(Error::InvalidParameter(format!(
                "vertex {x} has no children in the truncation"
            )));
        }
        let down: f64 = t.children(x).map(|c| self.conductance(x, c)).sum();
        Ok(self.conductance(x, t.parent[x]) / down)
    }

    /// Multiplies one stored conductance; used for negative controls.
    pub fn scale_edge(&mut self, x: usize, y: usize, factor: f64) {
        let mut adj: Vec<Vec<(usize, f64)>> = (0..self.vertex_count())
            .map(|v| self.graph.neighbors(v).collect())
            .collect();
        for (a, b) in [(x, y), (y, x)] {
            for e in adj[a].iter_mut() {
                if e.0 == b {
                    e.1 *= factor;
                }
            }
        }
        self.graph = WeightedGraph::from_adjacency(adj);
    }

    /// `m(F) / c(∂F)` for every member of a family of finite sets. Sets that
    /// contain a vertex of the truncation level are skipped.
    pub fn isoperimetry_profile(&self, family: IsoperimetryFamily) -> Vec<f64> {
        let t = &self.tree.tree;
        let n_top = self.trunc_level();
        let sets: Vec<Vec<usize>> = match family {
            IsoperimetryFamily::LevelTruncations => (0..=n_top)
                .map(|k| (0..t.level_start[k + 1]).collect())
                .collect(),
            IsoperimetryFamily::SingleCells => (0..t.vertex_count()).map(|v| vec![v]).collect(),
            IsoperimetryFamily::RandomConnected { count, size, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let interior = t.level_start[n_top];
                (0..count)
                    .map(|_| {
                        let mut set = vec![rng.gen_range(0..interior.max(1))];
                        while set.len() < size {
                            let v = set[rng.gen_range(0..set.len())];
                            let nbrs: Vec<usize> = self
                                .graph
                                .neighbors(v)
                                .map(|e| e.0)
                                .filter(|u| !set.contains(u))
                                .collect();
                            if nbrs.is_empty() {
                                break;
                            }
                            set.push(nbrs[rng.gen_range(0..nbrs.len())]);
                        }
                        set.sort_unstable();
                        set
                    })
                    .collect()
            }
        };
        let mut out = Vec::new();
        for set in sets {
            if set.iter().any(|&v| t.level[v] >= n_top) {
                log::warn!("isoperimetry: skipping a set that reaches the truncation level");
                continue;
            }
            let mut inside = std::collections::HashSet::with_capacity(set.len());
            inside.extend(set.iter().copied());
            let mut mass = 0.0;
            let mut cut = 0.0;
            for &v in &set {
                for (u, w) in self.graph.neighbors(v) {
                    mass += w;
                    if !inside.contains(&u) {
                        cut += w;
                    }
                }
            }
            if cut > 0.0 {
                out.push(mass / cut);
            }
        }
        out
    }

    /// Smallest transition probability over all edges of `X_{n-1}` towards `X_n`.
    pub fn min_transition_prob(&self, n: usize) -> f64 {
        let end = self.tree.tree.level_start[n];
        (0..end)
            .flat_map(|v| {
                let m = self.total(v);
                self.graph.neighbors(v).map(move |(_, w)| w / m)
            })
            .fold(1.0, f64::min)
    }
}

/// Summary row for the edge list export.
#[derive(Clone, Debug, Serialize)]
pub struct EdgeRow {
    pub x: usize,
    pub y: usize,
    pub conductance: f64,
}

impl Network {
    pub fn edge_rows(&self) -> Vec<EdgeRow> {
        self.graph
            .edges()
            .map(|(x, y, _)| EdgeRow {
                x,
                y,
                conductance: self.true_conductance(x, y),
            })
            .collect()
    }
}
