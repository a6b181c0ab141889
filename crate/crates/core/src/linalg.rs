//! Weighted graphs and Dirichlet problems for their Laplacians.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

use crate::error::{Error, Result};

/// Undirected graph with positive edge weights in compressed adjacency form.
/// Rows are sorted by neighbour index; parallel edges are merged.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedGraph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
}

impl WeightedGraph {
    /// Builds a graph from undirected edges. Self loops are ignored, parallel
    /// edges are summed.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(a, b, w) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge ({a}, {b}) out of range for {n} vertices"
                )));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "edge ({a}, {b}) has non-positive weight {w}"
                )));
            }
            if a == b {
                continue;
            }
            adj[a].push((b, w));
            adj[b].push((a, w));
        }
        Ok(Self::from_adjacency(adj))
    }

    pub(crate) fn from_adjacency(mut adj: Vec<Vec<(usize, f64)>>) -> Self {
        let mut offsets = Vec::with_capacity(adj.len() + 1);
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        offsets.push(0);
        for row in adj.iter_mut() {
            row.sort_by_key(|e| e.0);
            let mut last = usize::MAX;
            for &(t, w) in row.iter() {
                if t == last {
                    *weights.last_mut().unwrap() += w;
                } else {
                    targets.push(t);
                    weights.push(w);
                    last = t;
                }
            }
            offsets.push(targets.len());
        }
        WeightedGraph {
            offsets,
            targets,
            weights,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[v]..self.offsets[v + 1];
        self.targets[r.clone()]
            .iter()
            .copied()
            .zip(self.weights[r].iter().copied())
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn weight(&self, a: usize, b: usize) -> f64 {
        let r = self.offsets[a]..self.offsets[a + 1];
        match self.targets[r.clone()].binary_search(&b) {
            Ok(i) => self.weights[r.start + i],
            Err(_) => 0.0,
        }
    }

    pub fn total(&self, v: usize) -> f64 {
        self.neighbors(v).map(|(_, w)| w).sum()
    }

    /// Each undirected edge once, as `(a, b, w)` with `a < b`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.vertex_count())
            .flat_map(move |a| self.neighbors(a).map(move |(b, w)| (a, b, w)))
            .filter(|&(a, b, _)| a < b)
    }

    /// `Σ_{edges} w (f(a) - f(b))²`
    pub fn energy(&self, f: &[f64]) -> f64 {
        self.edges().map(|(a, b, w)| w * (f[a] - f[b]).powi(2)).sum()
    }

    /// Vertices reachable from `sources`.
    pub fn reachable(&self, sources: &[usize]) -> Vec<bool> {
        let mut seen = vec![false; self.vertex_count()];
        let mut stack: Vec<usize> = Vec::new();
        for &s in sources {
            if !seen[s] {
                seen[s] = true;
                stack.push(s);
            }
        }
        while let Some(v) = stack.pop() {
            for (t, _) in self.neighbors(v) {
                if !seen[t] {
                    seen[t] = true;
                    stack.push(t);
                }
            }
        }
        seen
    }
}

/// Factorised Dirichlet problem `L_ff u = -L_fb g` for a fixed set of free vertices.
///
/// Free vertices in components that never touch the boundary are dropped;
/// their values are reported as 0 and they carry no energy.
pub struct DirichletProblem {
    graph: WeightedGraph,
    index: Vec<usize>,
    free: Vec<usize>,
    scale: Vec<f64>,
    llt: Option<faer::sparse::linalg::solvers::Llt<usize, f64>>,
}

const NOT_FREE: usize = usize::MAX;
const REFINE_TOL: f64 = 1e-13;
const REFINE_STEPS: usize = 4;

impl DirichletProblem {
    pub fn new(graph: &WeightedGraph, is_free: &[bool]) -> Result<Self> {
        let n = graph.vertex_count();
        if is_free.len() != n {
            return Err(Error::InvalidParameter("free mask has wrong length".into()));
        }
        let boundary: Vec<usize> = (0..n).filter(|&v| !is_free[v]).collect();
        let touching = graph.reachable(&boundary);

        let mut index = vec![NOT_FREE; n];
        let mut free = Vec::new();
        for v in 0..n {
            if is_free[v] && touching[v] {
                index[v] = free.len();
                free.push(v);
            }
        }
        let scale: Vec<f64> = free.iter().map(|&v| 1.0 / graph.total(v).sqrt()).collect();

        let llt = if free.is_empty() {
            None
        } else {
            let mut trip = Vec::new();
            for (i, &v) in free.iter().enumerate() {
                trip.push(Triplet {
                    row: i,
                    col: i,
                    val: 1.0,
                });
                for (t, w) in graph.neighbors(v) {
                    let j = index[t];
                    if j != NOT_FREE && j < i {
                        trip.push(Triplet {
                            row: i,
                            col: j,
                            val: -w * scale[i] * scale[j],
                        });
                    }
                }
            }
            let m = free.len();
            let mat = SparseColMat::<usize, f64>::try_new_from_triplets(m, m, &trip)
                .map_err(|e| Error::Numerical(format!("sparse assembly failed: {e:?}")))?;
            Some(
                mat.sp_cholesky(Side::Lower)
                    .map_err(|e| Error::Singular(format!("Cholesky failed: {e:?}")))?,
            )
        };
        Ok(DirichletProblem {
            graph: graph.clone(),
            index,
            free,
            scale,
            llt,
        })
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    pub fn is_free(&self, v: usize) -> bool {
        self.index[v] != NOT_FREE
    }

    pub fn free_vertices(&self) -> &[usize] {
        &self.free
    }

    /// Solves `L_ff x = b` (b indexed by free position) with iterative refinement.
    fn solve_free(&self, b: &[f64]) -> Result<Vec<f64>> {
        let Some(llt) = &self.llt else {
            return Ok(Vec::new());
        };
        let m = self.free.len();
        // scaled system: (S L S) y = S b, x = S y
        let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut x = vec![0.0; m];
        let mut r: Vec<f64> = b.to_vec();
        for _ in 0..REFINE_STEPS {
            let mut rhs = Mat::from_fn(m, 1, |i, _| r[i] * self.scale[i]);
            llt.solve_in_place(rhs.as_mut());
            for i in 0..m {
                x[i] += rhs[(i, 0)] * self.scale[i];
            }
            r = self.residual(&x, b);
            let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !rnorm.is_finite() {
                return Err(Error::Numerical("non-finite residual".into()));
            }
            if rnorm <= REFINE_TOL * bnorm.max(f64::MIN_POSITIVE) {
                break;
            }
        }
        Ok(x)
    }

    fn residual(&self, x: &[f64], b: &[f64]) -> Vec<f64> {
        self.free
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let mut lx = 0.0;
                for (t, w) in self.graph.neighbors(v) {
                    lx += w * x[i];
                    let j = self.index[t];
                    if j != NOT_FREE {
                        lx -= w * x[j];
                    }
                }
                b[i] - lx
            })
            .collect()
    }

    /// Harmonic function on the free vertices with the given values elsewhere.
    /// `values` is read only at non-free vertices.
    pub fn solve(&self, values: &[f64]) -> Result<Vec<f64>> {
        let n = self.graph.vertex_count();
        let b: Vec<f64> = self
            .free
            .iter()
            .map(|&v| {
                self.graph
                    .neighbors(v)
                    .filter(|&(t, _)| self.index[t] == NOT_FREE)
                    .map(|(t, w)| w * values[t])
                    .sum()
            })
            .collect();
        let x = self.solve_free(&b)?;
        let mut out = vec![0.0; n];
        for v in 0..n {
            if self.index[v] == NOT_FREE {
                out[v] = values[v];
            }
        }
        // free vertices cut off from the boundary stay 0
        for (i, &v) in self.free.iter().enumerate() {
            out[v] = x[i];
        }
        Ok(out)
    }

    /// Solves `L_ff x = s` for a source `s` supported on free vertices,
    /// returning `x` on all vertices (0 off the free set).
    pub fn solve_source(&self, source: &[(usize, f64)]) -> Result<Vec<f64>> {
        let mut b = vec![0.0; self.free.len()];
        for &(v, s) in source {
            let i = self.index[v];
            if i == NOT_FREE {
                return Err(Error::InvalidParameter(format!(
                    "source vertex {v} is not free"
                )));
            }
            b[i] += s;
        }
        let x = self.solve_free(&b)?;
        let mut out = vec![0.0; self.graph.vertex_count()];
        for (i, &v) in self.free.iter().enumerate() {
            out[v] = x[i];
        }
        Ok(out)
    }
}
