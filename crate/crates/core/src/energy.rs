//! Graph energy, harmonic extension and trace, the discrete Besov seminorm,
//! and the comparison between the two energies across levels.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hypergraph::AugmentedTree;
use crate::linalg::{DirichletProblem, WeightedGraph};
use crate::model::{distance, IfsModel};
use crate::network::Network;
use crate::partition::IndexTree;
use crate::potential::with_thread_pool;

/// `Σ_{edges} c (f(x) − f(y))²`
pub fn graph_energy(g: &WeightedGraph, f: &[f64]) -> f64 {
    g.energy(f)
}

/// Graph energy of `f` on `X_n` with the network's unscaled conductances.
pub fn network_energy(net: &Network, n: usize, f: &[f64]) -> Result<f64> {
    let g = net.truncated_graph(n);
    if f.len() != g.vertex_count() {
        return Err(Error::InvalidParameter(format!(
            "function has {} values, X_{n} has {} vertices",
            f.len(),
            g.vertex_count()
        )));
    }
    Ok(g.energy(f) * net.log_shift.exp())
}

/// The function on `X_n` that is harmonic on `X_{n−1}` and equals `boundary`
/// (indexed by position in `𝒥_n`) on `𝒥_n`.
pub fn harmonic_extension(net: &Network, n: usize, boundary: &[f64]) -> Result<Vec<f64>> {
    let t = &net.tree.tree;
    if n < 1 || n > net.trunc_level() {
        return Err(Error::InvalidParameter(format!("level {n} outside 1..={}", net.trunc_level())));
    }
    if boundary.len() != t.level_size(n) || boundary.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "boundary data must be {} finite values",
            t.level_size(n)
        )));
    }
    let g = net.truncated_graph(n);
    let start = t.level_start[n];
    let free: Vec<bool> = (0..g.vertex_count()).map(|v| v < start).collect();
    let mut values = vec![0.0; g.vertex_count()];
    values[start..].copy_from_slice(boundary);
    DirichletProblem::new(&g, &free)?.solve(&values)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TraceValue {
    pub value: f64,
    /// Oscillation of `f` over the last three vertices of the descent chain.
    pub oscillation: f64,
}

/// `f(x_n)` at the deepest cell of the descent chain of `ξ` on which `f` is defined.
pub fn trace(tree: &IndexTree, f: &[f64], xi: &[f64]) -> Result<TraceValue> {
    let depth = (0..=tree.depth())
        .rev()
        .find(|&m| tree.level_start[m + 1] <= f.len())
        .ok_or_else(|| Error::InvalidParameter("function is not defined at the root".into()))?;
    let chain = tree.descend(xi, depth)?;
    let tail = &chain[chain.len().saturating_sub(3)..];
    let vals: Vec<f64> = tail.iter().map(|&v| f[v]).collect();
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(TraceValue {
        value: f[*chain.last().unwrap()],
        oscillation: hi - lo,
    })
}

/// Per-cell sorted distance and cumulative-measure tables of one level, for
/// the ball volumes `V̂(x, y) = μ(B(ξ_x, ρ(ξ_x, ξ_y)))`.
pub struct VolumeTable {
    start: usize,
    dist: Vec<Vec<f64>>,
    cumulative: Vec<Vec<f64>>,
}

impl VolumeTable {
    pub fn new(tree: &IndexTree, n: usize) -> Self {
        let range = tree.level_range(n);
        let (dist, cumulative) = range
            .clone()
            .map(|x| {
                let mut d: Vec<(f64, f64)> = range
                    .clone()
                    .map(|z| (distance(tree.rep_point(x), tree.rep_point(z)), tree.measure[z]))
                    .collect();
                d.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut acc = 0.0;
                let cum = d
                    .iter()
                    .map(|e| {
                        acc += e.1;
                        acc
                    })
                    .collect();
                (d.into_iter().map(|e| e.0).collect(), cum)
            })
            .unzip();
        VolumeTable {
            start: range.start,
            dist,
            cumulative,
        }
    }

    /// Measure of the level cells within distance `r` of the representative of `x`.
    pub fn volume(&self, x: usize, r: f64) -> f64 {
        let i = x - self.start;
        let k = self.dist[i].partition_point(|&d| d <= r * (1.0 + 1e-12));
        if k == 0 {
            0.0
        } else {
            self.cumulative[i][k - 1]
        }
    }
}

/// `Σ_{x≠y ∈ 𝒥_n} |u_x − u_y|² μ(x) μ(y) / (V̂(x,y) ρ(ξ_x,ξ_y)^β)`, with `u`
/// indexed by position within the level.
pub fn besov_seminorm(tree: &IndexTree, n: usize, u: &[f64], beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!("beta = {beta} must be positive")));
    }
    if n > tree.depth() || u.len() != tree.level_size(n) {
        return Err(Error::InvalidParameter(format!("u must have one value per cell of level {n}")));
    }
    let table = VolumeTable::new(tree, n);
    let start = tree.level_start[n];
    let size = u.len();
    let rows: Vec<(f64, usize)> = with_thread_pool(|| {
        (0..size)
            .into_par_iter()
            .map(|i| {
                let x = start + i;
                let mut sum = 0.0;
                let mut skipped = 0;
                for j in 0..size {
                    if i == j {
                        continue;
                    }
                    let y = start + j;
                    let du = u[i] - u[j];
                    if du == 0.0 {
                        continue;
                    }
                    let rho = distance(tree.rep_point(x), tree.rep_point(y));
                    if rho == 0.0 {
                        skipped += 1;
                        continue;
                    }
                    let v = table.volume(x, rho);
                    sum += du * du * tree.measure[x] * tree.measure[y] / (v * rho.powf(beta));
                }
                (sum, skipped)
            })
            .collect()
    });
    let skipped: usize = rows.iter().map(|r| r.1).sum();
    if skipped > 0 {
        log::warn!("besov seminorm: skipped {skipped} pairs with coincident representatives");
    }
    Ok(rows.iter().map(|r| r.0).sum())
}

/// `d̄_μ = max_i log p_i / log r0` for an IFS with a common ratio.
pub fn upper_dimension(ifs: &IfsModel) -> Result<f64> {
    if !ifs.has_uniform_ratio() {
        return Err(Error::Unsupported("upper dimension needs a common contraction ratio".into()));
    }
    let r0 = ifs.r0();
    Ok(ifs
        .weights
        .iter()
        .map(|p| p.ln() / r0.ln())
        .fold(f64::NEG_INFINITY, f64::max))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum TestFunction {
    /// `u(ξ) = ξ_1`
    Linear,
    /// Indicator of `{ξ_1 < 1/2}`.
    Indicator,
    /// `u(ξ) = |ξ − c|`
    Distance(Vec<f64>),
}

impl TestFunction {
    pub fn parse(text: &str) -> Result<Self> {
        match text.trim() {
            "linear" => Ok(TestFunction::Linear),
            "indicator" => Ok(TestFunction::Indicator),
            other => {
                let c = other
                    .strip_prefix("distance:")
                    .ok_or_else(|| Error::InvalidParameter(format!("unknown test function `{other}`")))?;
                let centre = c
                    .split(',')
                    .map(|v| {
                        v.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::InvalidParameter(format!("bad coordinate `{v}`")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(TestFunction::Distance(centre))
            }
        }
    }

    pub fn eval(&self, p: &[f64]) -> f64 {
        match self {
            TestFunction::Linear => p[0],
            TestFunction::Indicator => f64::from(p[0] < 0.5),
            TestFunction::Distance(c) => {
                let mut c = c.clone();
                c.resize(p.len(), 0.0);
                distance(p, &c)
            }
        }
    }

    /// Values at the representative points of level `n`.
    pub fn sample(&self, tree: &IndexTree, n: usize) -> Vec<f64> {
        tree.level_range(n).map(|v| self.eval(tree.rep_point(v))).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyReport {
    pub level: usize,
    pub graph_energy: f64,
    pub besov: f64,
    /// `graph_energy / besov`; `None` when the Besov sum vanishes.
    pub ratio: Option<f64>,
    pub beta: f64,
}

/// Graph energy of the harmonic extension against the Besov sum, level by level.
pub fn comparability_report(
    tree: Arc<AugmentedTree>,
    lambda: f64,
    u: &TestFunction,
    levels: &[usize],
) -> Result<Vec<EnergyReport>> {
    let beta = crate::resistance::beta_from_lambda(lambda, tree.tree.r0)?;
    let net = Network::build(tree, lambda)?;
    let t = &net.tree.tree;
    levels
        .iter()
        .map(|&n| {
            let data = u.sample(t, n);
            let ext = harmonic_extension(&net, n, &data)?;
            let e = network_energy(&net, n, &ext)?;
            let b = besov_seminorm(t, n, &data, beta)?;
            Ok(EnergyReport {
                level: n,
                graph_energy: e,
                besov: b,
                ratio: (b > 0.0).then(|| e / b),
                beta,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::build_augmented_tree;
    use crate::model::{gasket, rotated_interval, unit_interval, ModelSpec};
    use crate::partition::build_tree;

    fn net(spec: &ModelSpec, levels: usize, lambda: f64) -> Network {
        let t = build_augmented_tree(build_tree(spec, levels).unwrap(), 0.25).unwrap();
        Network::build(Arc::new(t), lambda).unwrap()
    }

    #[test]
    fn two_node_energy() {
        let g = WeightedGraph::from_edges(2, &[(0, 1, 3.5)]).unwrap();
        assert_eq!(graph_energy(&g, &[1.0, 0.0]), 3.5);
        assert_eq!(graph_energy(&g, &[2.0, 2.0]), 0.0);
    }

    #[test]
    fn extension_of_linear_data_is_centred() {
        let n = net(&unit_interval(0.5), 4, 0.25);
        let data = TestFunction::Linear.sample(&n.tree.tree, 4);
        let ext = harmonic_extension(&n, 4, &data).unwrap();
        assert!((ext[0] - 0.5).abs() < 1e-9);
        let lo = data.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(ext.iter().all(|&v| v >= lo - 1e-12 && v <= hi + 1e-12));
        let c = harmonic_extension(&n, 4, &vec![0.7; 16]).unwrap();
        assert!(c.iter().all(|&v| (v - 0.7).abs() < 1e-12));
    }

    #[test]
    fn trace_reads_the_boundary_row() {
        let n = net(&unit_interval(0.5), 6, 0.25);
        let t = &n.tree.tree;
        let data = TestFunction::Linear.sample(t, 6);
        let ext = harmonic_extension(&n, 6, &data).unwrap();
        let tr = trace(t, &ext, &[0.3]).unwrap();
        let cell = *t.descend(&[0.3], 6).unwrap().last().unwrap();
        assert_eq!(tr.value, data[cell - t.level_start[6]]);
        let flat = trace(t, &vec![2.0; t.vertex_count()], &[0.3]).unwrap();
        assert_eq!((flat.value, flat.oscillation), (2.0, 0.0));
    }

    #[test]
    fn upper_dimensions() {
        let d = |s: ModelSpec| upper_dimension(s.as_ifs().unwrap()).unwrap();
        assert!((d(unit_interval(0.5)) - 1.0).abs() < 1e-15);
        assert!((d(rotated_interval(1.0 / 3.0)) - 3f64.ln() / 2f64.ln()).abs() < 1e-15);
        assert!((d(gasket()) - 3f64.ln() / 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn besov_is_quadratic_and_vanishes_on_constants() {
        let t = build_tree(&unit_interval(0.5), 5).unwrap();
        let u = TestFunction::Linear.sample(&t, 5);
        let b = besov_seminorm(&t, 5, &u, 2.0).unwrap();
        let u3: Vec<f64> = u.iter().map(|v| 3.0 * v).collect();
        assert!((besov_seminorm(&t, 5, &u3, 2.0).unwrap() - 9.0 * b).abs() <= 1e-12 * b);
        assert_eq!(besov_seminorm(&t, 5, &vec![1.0; 32], 2.0).unwrap(), 0.0);
    }

    #[test]
    fn test_function_parsing() {
        assert_eq!(TestFunction::parse("linear").unwrap(), TestFunction::Linear);
        assert_eq!(
            TestFunction::parse("distance:0.5,0.25").unwrap(),
            TestFunction::Distance(vec![0.5, 0.25])
        );
        assert!(TestFunction::parse("cubic").is_err());
    }
}
