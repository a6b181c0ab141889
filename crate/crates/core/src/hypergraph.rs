//! Augmented trees: index trees with horizontal edges between nearby cells of
//! the same level, and the hyperbolic geometry of the resulting graph.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::distance;
use crate::partition::{IndexTree, ROOT};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentedTree {
    pub tree: IndexTree,
    pub gamma: f64,
    /// Sorted horizontal neighbours of every vertex.
    pub horizontal: Vec<Vec<usize>>,
}

/// Geodesic `x = u_0 … u_a` (up), horizontal run, then down to `y`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GeodesicPath {
    pub vertices: Vec<usize>,
    pub up_len: usize,
    pub horiz_len: usize,
    pub down_len: usize,
    pub horiz_level: usize,
}

impl GeodesicPath {
    pub fn len(&self) -> usize {
        self.up_len + self.horiz_len + self.down_len
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.len() <= 1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HyperbolicityReport {
    /// Longest horizontal geodesic segment with both ends at level `m`, indexed by `m`.
    pub per_level: Vec<usize>,
    /// Running maximum of `per_level`.
    pub max_horiz_geodesic: Vec<usize>,
    pub delta_sample: f64,
    pub levels_scanned: usize,
}

/// Default horizontal threshold `γ = r0 / 2`.
pub fn default_gamma(r0: f64) -> f64 {
    0.5 * r0
}

/// Adds horizontal edges `dist(Φ(x), Φ(y)) ≤ γ r0^m` and checks that every
/// horizontal edge has equal or adjacent parents.
pub fn build_augmented_tree(tree: IndexTree, gamma: f64) -> Result<AugmentedTree> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!("gamma = {gamma} must be positive")));
    }
    let n = tree.vertex_count();
    let dim = tree.dim;
    let mut horizontal: Vec<Vec<usize>> = vec![Vec::new(); n];

    // bounding boxes
    let mut lo = vec![f64::INFINITY; n * dim];
    let mut hi = vec![f64::NEG_INFINITY; n * dim];
    for v in 0..n {
        for p in tree.sample_points(v) {
            for k in 0..dim {
                lo[v * dim + k] = lo[v * dim + k].min(p[k]);
                hi[v * dim + k] = hi[v * dim + k].max(p[k]);
            }
        }
    }

    for m in 1..=tree.depth() {
        let thr = gamma * tree.r0.powi(m as i32);
        let range = tree.level_range(m);
        let extent = range
            .clone()
            .flat_map(|v| (0..dim).map(move |k| (v, k)))
            .map(|(v, k)| hi[v * dim + k] - lo[v * dim + k])
            .fold(0.0, f64::max);
        let width = (extent + thr).max(1e-300);
        let key = |v: usize| -> Vec<i64> {
            (0..dim)
                .map(|k| (lo[v * dim + k] / width).floor() as i64)
                .collect()
        };
        let mut grid: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        for v in range.clone() {
            grid.entry(key(v)).or_default().push(v);
        }
        let offsets = neighbour_offsets(dim);
        for x in range.clone() {
            let kx = key(x);
            for off in &offsets {
                let cell: Vec<i64> = kx.iter().zip(off).map(|(a, b)| a + b).collect();
                let Some(bucket) = grid.get(&cell) else { continue };
                for &y in bucket {
                    if y <= x {
                        continue;
                    }
                    let gap = (0..dim)
                        .map(|k| {
                            let g = (lo[y * dim + k] - hi[x * dim + k])
                                .max(lo[x * dim + k] - hi[y * dim + k])
                                .max(0.0);
                            g * g
                        })
                        .sum::<f64>()
                        .sqrt();
                    if gap > thr * (1.0 + 1e-9) + 1e-12 {
                        continue;
                    }
                    if tree.set_distance(x, y) <= thr * (1.0 + 1e-9) + 1e-12 {
                        horizontal[x].push(y);
                        horizontal[y].push(x);
                    }
                }
            }
        }
    }
    for row in horizontal.iter_mut() {
        row.sort_unstable();
    }
    let t = AugmentedTree {
        tree,
        gamma,
        horizontal,
    };
    t.check_pre_augmented()?;
    Ok(t)
}

fn neighbour_offsets(dim: usize) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|o| {
                (-1..=1).map(move |d| {
                    let mut v = o.clone();
                    v.push(d);
                    v
                })
            })
            .collect();
    }
    out
}

impl AugmentedTree {
    pub fn level(&self, v: usize) -> usize {
        self.tree.level[v]
    }

    pub fn is_horizontal_edge(&self, x: usize, y: usize) -> bool {
        self.horizontal[x].binary_search(&y).is_ok()
    }

    pub fn horizontal_edge_count(&self, m: usize) -> usize {
        self.tree
            .level_range(m)
            .map(|v| self.horizontal[v].len())
            .sum::<usize>()
            / 2
    }

    /// Horizontal edges `(m, x, y)` with `x < y`.
    pub fn horizontal_edges(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..self.tree.vertex_count()).flat_map(move |x| {
            self.horizontal[x]
                .iter()
                .filter(move |&&y| y > x)
                .map(move |&y| (self.tree.level[x], x, y))
        })
    }

    /// Total degree (parent, children, horizontal neighbours).
    pub fn degree(&self, v: usize) -> usize {
        usize::from(v != ROOT) + self.tree.child_count[v] + self.horizontal[v].len()
    }

    fn check_pre_augmented(&self) -> Result<()> {
        for (level, x, y) in self.horizontal_edges() {
            let (px, py) = (self.tree.parent[x], self.tree.parent[y]);
            if px != py && !self.is_horizontal_edge(px, py) {
                return Err(Error::NotPreAugmented { level, x, y });
            }
        }
        Ok(())
    }

    /// Breadth-first search inside one level, radius at most `limit`.
    /// Layers are expanded in increasing vertex order so that each vertex
    /// records the lowest-id predecessor.
    fn horizontal_bfs(&self, a: usize, b: usize, limit: usize) -> Option<Vec<usize>> {
        if a == b {
            return Some(vec![a]);
        }
        let mut pred: HashMap<usize, usize> = HashMap::new();
        pred.insert(a, a);
        let mut layer = vec![a];
        for _ in 0..limit {
            let mut next = Vec::new();
            for &u in &layer {
                for &w in &self.horizontal[u] {
                    if let std::collections::hash_map::Entry::Vacant(e) = pred.entry(w) {
                        e.insert(u);
                        next.push(w);
                    }
                }
            }
            if pred.contains_key(&b) {
                let mut path = vec![b];
                let mut cur = b;
                while cur != a {
                    cur = pred[&cur];
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            if next.is_empty() {
                return None;
            }
            next.sort_unstable();
            layer = next;
        }
        None
    }

    /// Canonical geodesic: minimal length, then smallest horizontal level.
    pub fn canonical_geodesic(&self, x: usize, y: usize) -> GeodesicPath {
        let t = &self.tree;
        let (lx, ly) = (t.level[x], t.level[y]);
        let mut best: Option<(usize, usize, Vec<usize>)> = None; // (length, level, horizontal run)
        let mut l = lx.min(ly) as isize;
        while l >= 0 {
            let lu = l as usize;
            let vertical = lx + ly - 2 * lu;
            if let Some((len, _, _)) = &best {
                if vertical > *len {
                    break;
                }
            }
            let xa = t.ancestor(x, lu);
            let ya = t.ancestor(y, lu);
            if xa == ya {
                if best.as_ref().map_or(true, |b| vertical <= b.0) {
                    best = Some((vertical, lu, vec![xa]));
                }
                break;
            }
            let limit = best.as_ref().map_or(usize::MAX, |b| b.0 - vertical);
            if limit > 0 {
                if let Some(run) = self.horizontal_bfs(xa, ya, limit) {
                    let len = vertical + run.len() - 1;
                    if best.as_ref().map_or(true, |b| len <= b.0) {
                        best = Some((len, lu, run));
                    }
                }
            }
            l -= 1;
        }
        let (_, lvl, run) = best.expect("the root joins every pair");
        let mut vertices = Vec::new();
        let mut v = x;
        while t.level[v] > lvl {
            vertices.push(v);
            v = t.parent[v];
        }
        let up_len = vertices.len();
        vertices.extend_from_slice(&run);
        let mut down = Vec::new();
        let mut v = y;
        while t.level[v] > lvl {
            down.push(v);
            v = t.parent[v];
        }
        let down_len = down.len();
        down.reverse();
        vertices.extend(down);
        GeodesicPath {
            vertices,
            up_len,
            horiz_len: run.len() - 1,
            down_len,
            horiz_level: lvl,
        }
    }

    pub fn graph_distance(&self, x: usize, y: usize) -> usize {
        self.canonical_geodesic(x, y).len()
    }

    /// `(x|y) = (|x| + |y| − d(x,y)) / 2`
    pub fn gromov_product(&self, x: usize, y: usize) -> f64 {
        let d = self.graph_distance(x, y);
        (self.level(x) + self.level(y)) as f64 / 2.0 - d as f64 / 2.0
    }

    /// `(x_n | y_n)` for the depth-`n` cells of the descent chains of `ξ`, `η`.
    pub fn boundary_gromov_product(&self, xi: &[f64], eta: &[f64], depth: usize) -> Result<f64> {
        let a = *self.tree.descend(xi, depth)?.last().unwrap();
        let b = *self.tree.descend(eta, depth)?.last().unwrap();
        Ok(self.gromov_product(a, b))
    }

    /// `ϱ_a(x, y) = exp(−a (x|y))`, 0 on the diagonal.
    pub fn gromov_metric(&self, a: f64, x: usize, y: usize) -> f64 {
        if x == y {
            0.0
        } else {
            (-a * self.gromov_product(x, y)).exp()
        }
    }

    /// Largest cell measure along the canonical geodesic.
    pub fn p_mu(&self, x: usize, y: usize) -> f64 {
        self.canonical_geodesic(x, y)
            .vertices
            .iter()
            .map(|&v| self.tree.measure[v])
            .fold(0.0, f64::max)
    }

    /// `μ(B(ξ, r))` approximated by level-`resolution` cells whose
    /// representative point lies within `r` of `ξ`.
    pub fn ball_volume(&self, xi: &[f64], r: f64, resolution: usize) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::InvalidParameter(format!("radius {r} must be positive")));
        }
        if resolution > self.tree.depth() {
            return Err(Error::InvalidParameter(format!(
                "resolution level {resolution} exceeds tree depth {}",
                self.tree.depth()
            )));
        }
        Ok(self
            .tree
            .level_range(resolution)
            .filter(|&v| distance(self.tree.rep_point(v), xi) <= r * (1.0 + 1e-12))
            .map(|v| self.tree.measure[v])
            .sum())
    }

    /// Longest horizontal geodesic segments per level and a sampled δ.
    pub fn hyperbolicity_report(&self, max_level: usize, sample_size: usize, seed: u64) -> Result<HyperbolicityReport> {
        if max_level > self.tree.depth() {
            return Err(Error::InvalidParameter(format!(
                "max_level {max_level} exceeds tree depth {}",
                self.tree.depth()
            )));
        }
        let mut per_level = vec![0usize];
        // d(u, v) for same-level pairs at the previous level
        let mut prev: HashMap<(usize, usize), usize> = HashMap::new();
        for m in 1..=max_level {
            let mut longest = 0;
            let mut cur: HashMap<(usize, usize), usize> = HashMap::new();
            for u in self.tree.level_range(m) {
                // BFS outwards while some vertex on the frontier is still joined to u by a
                // horizontal geodesic; subpaths of geodesics are geodesics, so nothing lies beyond
                let mut dist: HashMap<usize, usize> = HashMap::new();
                dist.insert(u, 0);
                let mut layer = vec![u];
                let mut r = 0;
                loop {
                    r += 1;
                    let mut next = Vec::new();
                    for &a in &layer {
                        for &b in &self.horizontal[a] {
                            if !dist.contains_key(&b) {
                                dist.insert(b, r);
                                next.push(b);
                            }
                        }
                    }
                    next.sort_unstable();
                    let mut geodesic = Vec::new();
                    for &v in &next {
                        let pu = self.tree.parent[u];
                        let pv = self.tree.parent[v];
                        let dp = if pu == pv {
                            0
                        } else {
                            match prev.get(&(pu.min(pv), pu.max(pv))) {
                                Some(&d) => d,
                                None => self.graph_distance(pu, pv),
                            }
                        };
                        if r <= 2 + dp {
                            geodesic.push(v);
                        }
                        let key = (u.min(v), u.max(v));
                        cur.insert(key, r.min(2 + dp));
                    }
                    if geodesic.is_empty() {
                        break;
                    }
                    longest = longest.max(r);
                    layer = next;
                }
            }
            per_level.push(longest);
            prev = cur;
        }
        let mut running = 0;
        let max_horiz_geodesic = per_level
            .iter()
            .map(|&v| {
                running = running.max(v);
                running
            })
            .collect();
        let delta_sample = self.sample_delta(max_level, sample_size, seed);
        Ok(HyperbolicityReport {
            per_level,
            max_horiz_geodesic,
            delta_sample,
            levels_scanned: max_level,
        })
    }

    /// Largest `min{(x|z), (z|y)} − (x|y)` over sampled triples (and their permutations).
    pub fn sample_delta(&self, max_level: usize, samples: usize, seed: u64) -> f64 {
        let n = self.tree.level_start[max_level + 1];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut delta: f64 = 0.0;
        for _ in 0..samples {
            let v = [rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n)];
            let g = |a: usize, b: usize| self.gromov_product(v[a], v[b]);
            let (xy, xz, yz) = (g(0, 1), g(0, 2), g(1, 2));
            delta = delta
                .max(xz.min(yz) - xy)
                .max(xy.min(yz) - xz)
                .max(xy.min(xz) - yz);
        }
        delta
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{gasket, unit_interval, ModelSpec};
    use crate::partition::build_tree;

    fn aug(spec: &ModelSpec, levels: usize, gamma: f64) -> AugmentedTree {
        build_augmented_tree(build_tree(spec, levels).unwrap(), gamma).unwrap()
    }

    #[test]
    fn interval_edges_are_touching_neighbours() {
        let t = aug(&unit_interval(0.5), 6, 0.5);
        for m in 1..=6 {
            assert_eq!(t.horizontal_edge_count(m), (1 << m) - 1);
            for (_, x, y) in t.horizontal_edges().filter(|e| e.0 == m) {
                let gap = (t.tree.rep_point(x)[0] - t.tree.rep_point(y)[0]).abs();
                assert!((gap - 0.5f64.powi(m as i32)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gasket_first_level_is_a_triangle() {
        let t = aug(&gasket(), 3, 0.5);
        assert_eq!(t.horizontal_edge_count(1), 3);
    }

    #[test]
    fn large_gamma_gives_complete_levels() {
        let t = aug(&gasket(), 2, 10.0);
        assert_eq!(t.horizontal_edge_count(2), 9 * 8 / 2);
    }

    #[test]
    fn interval_distances_and_geodesic() {
        let t = aug(&unit_interval(0.5), 4, 0.5);
        let x = t.tree.find_label("11").unwrap();
        let y = t.tree.find_label("22").unwrap();
        assert_eq!(t.graph_distance(x, y), 3);
        let g = t.canonical_geodesic(x, y);
        assert_eq!(g.horiz_level, 1);
        let labels: Vec<String> = g.vertices.iter().map(|&v| t.tree.label_string(v)).collect();
        assert_eq!(labels, vec!["11", "1", "2", "22"]);
        assert_eq!(t.gromov_product(x, y), 0.5);
        assert_eq!(t.p_mu(x, y), 0.5);
        assert_eq!(t.graph_distance(x, x), 0);
        assert_eq!(t.gromov_product(x, x), 2.0);
        let deep = t.tree.find_label("1212").unwrap();
        assert_eq!(t.graph_distance(ROOT, deep), 4);
        assert_eq!(t.canonical_geodesic(ROOT, deep).horiz_len, 0);
        assert_eq!(t.gromov_metric(1.0, ROOT, deep), 1.0);
    }

    #[test]
    fn ball_volume_of_the_middle_half() {
        let t = aug(&unit_interval(0.5), 8, 0.25);
        let v = t.ball_volume(&[0.5], 0.25, 8).unwrap();
        assert!((v - 0.5).abs() <= 2f64.powi(-7));
        assert_eq!(t.ball_volume(&[0.2], 1.0, 8).unwrap(), 1.0);
        assert!(t.ball_volume(&[0.2], 1.0, 9).is_err());
    }

    #[test]
    fn tree_without_horizontal_edges_is_zero_hyperbolic() {
        let t = aug(&unit_interval(0.5), 5, 1e-9);
        // touching cells still connect at distance 0
        let stripped = AugmentedTree {
            horizontal: vec![Vec::new(); t.tree.vertex_count()],
            ..t
        };
        let r = stripped.hyperbolicity_report(5, 200, 1).unwrap();
        assert!(r.per_level.iter().all(|&v| v == 0));
        assert_eq!(r.delta_sample, 0.0);
    }
}
