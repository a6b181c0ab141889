//! Index trees: nested partitions of `K` into cells with measures and
//! representative points, built from an IFS or from nets of a point cloud.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{distance, Affine, IfsModel, ModelSpec, PointCloudModel};

/// Word depth of the base sample used to realise IFS cells.
pub const BASE_SAMPLE_DEPTH: usize = 3;

const RATIO_TOL: f64 = 1e-12;
const DEFECT_TOL: f64 = 1e-9;

/// Vertex label: the IFS word (0-based symbols) or the index of the net point.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    Word(Vec<u16>),
    Net(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TreeKind {
    Ifs,
    Net,
}

/// Leveled tree of cells. Vertex ids are level-major with the root at 0 and
/// the children of every vertex stored contiguously.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexTree {
    pub kind: TreeKind,
    pub dim: usize,
    pub r0: f64,
    /// `level_start[m]..level_start[m+1]` are the ids of `𝒥_m`.
    pub level_start: Vec<usize>,
    pub level: Vec<usize>,
    /// `usize::MAX` at the root.
    pub parent: Vec<usize>,
    pub first_child: Vec<usize>,
    pub child_count: Vec<usize>,
    pub label: Vec<Label>,
    pub measure: Vec<f64>,
    /// `r_x` for IFS cells, `r0^|x|` for net cells.
    pub scale: Vec<f64>,
    /// Representative points, `dim` coordinates per vertex.
    pub rep: Vec<f64>,
    pub sample_offsets: Vec<usize>,
    pub samples: Vec<f64>,
    /// Net trees: max distance from a representative to its assigned points, over `r0^m`.
    pub cell_constant: f64,
}

pub const ROOT: usize = 0;

impl IndexTree {
    pub fn vertex_count(&self) -> usize {
        self.parent.len()
    }

    pub fn depth(&self) -> usize {
        self.level_start.len() - 2
    }

    pub fn level_range(&self, m: usize) -> std::ops::Range<usize> {
        self.level_start[m]..self.level_start[m + 1]
    }

    pub fn level_size(&self, m: usize) -> usize {
        self.level_start[m + 1] - self.level_start[m]
    }

    pub fn parent_of(&self, v: usize) -> Option<usize> {
        (v != ROOT).then(|| self.parent[v])
    }

    pub fn children(&self, v: usize) -> std::ops::Range<usize> {
        self.first_child[v]..self.first_child[v] + self.child_count[v]
    }

    pub fn rep_point(&self, v: usize) -> &[f64] {
        &self.rep[v * self.dim..(v + 1) * self.dim]
    }

    pub fn sample_count(&self, v: usize) -> usize {
        (self.sample_offsets[v + 1] - self.sample_offsets[v]) / self.dim
    }

    pub fn sample_points(&self, v: usize) -> impl Iterator<Item = &[f64]> {
        self.samples[self.sample_offsets[v]..self.sample_offsets[v + 1]].chunks(self.dim)
    }

    /// Ancestor of `v` at level `m ≤ |v|`.
    pub fn ancestor(&self, mut v: usize, m: usize) -> usize {
        while self.level[v] > m {
            v = self.parent[v];
        }
        v
    }

    /// Distance between the sample sets of two cells.
    pub fn set_distance(&self, a: usize, b: usize) -> f64 {
        let mut best = f64::INFINITY;
        for p in self.sample_points(a) {
            for q in self.sample_points(b) {
                best = best.min(distance(p, q));
            }
        }
        best
    }

    /// Distance from a point to the sample set of a cell.
    pub fn point_distance(&self, v: usize, p: &[f64]) -> f64 {
        self.sample_points(v)
            .map(|q| distance(p, q))
            .fold(f64::INFINITY, f64::min)
    }

    /// Human-readable label: 1-based digits for words, `n<index>` for nets.
    pub fn label_string(&self, v: usize) -> String {
        match &self.label[v] {
            Label::Word(w) if w.is_empty() => String::from("o"),
            Label::Word(w) => {
                let wide = w.iter().any(|&s| s >= 9);
                let mut s = String::new();
                for (i, &d) in w.iter().enumerate() {
                    if wide && i > 0 {
                        s.push('.');
                    }
                    let _ = write!(s, "{}", d + 1);
                }
                s
            }
            Label::Net(i) => format!("n{i}"),
        }
    }

    /// Shallowest vertex whose label prints as `text`.
    pub fn find_label(&self, text: &str) -> Option<usize> {
        (0..self.vertex_count()).find(|&v| self.label_string(v) == text)
    }

    /// Resolves a vertex given as a numeric id or a label.
    pub fn resolve_vertex(&self, text: &str) -> Result<usize> {
        let text = text.trim();
        if let Some(id) = text.strip_prefix('#') {
            let v: usize = id
                .parse()
                .map_err(|_| Error::UnknownVertex(text.to_string()))?;
            return if v < self.vertex_count() {
                Ok(v)
            } else {
                Err(Error::UnknownVertex(text.to_string()))
            };
        }
        self.find_label(text)
            .ok_or_else(|| Error::UnknownVertex(text.to_string()))
    }

    /// Chain of cells `root = x_0, x_1, …, x_depth` containing `p`, choosing at
    /// every step the child whose sample set is nearest (ties to the nearer
    /// representative, then the lowest id).
    pub fn descend(&self, p: &[f64], depth: usize) -> Result<Vec<usize>> {
        if depth > self.depth() {
            return Err(Error::InvalidParameter(format!(
                "depth {depth} exceeds tree depth {}",
                self.depth()
            )));
        }
        if p.len() != self.dim || p.iter().any(|c| !c.is_finite()) {
            return Err(Error::Unresolvable(p.to_vec()));
        }
        let mut chain = vec![ROOT];
        let mut v = ROOT;
        if self.point_distance(ROOT, p) > self.tolerance(ROOT) {
            return Err(Error::Unresolvable(p.to_vec()));
        }
        for _ in 0..depth {
            // nearest sample set; shared boundary samples are split by the
            // distance to the representative, then by id
            let mut best = (f64::INFINITY, f64::INFINITY, usize::MAX);
            for c in self.children(v) {
                let d = self.point_distance(c, p);
                let r = distance(self.rep_point(c), p);
                let tie = 1e-12 * self.scale[c];
                if d < best.0 - tie || (d <= best.0 + tie && r < best.1 - tie) {
                    best = (d, r, c);
                }
            }
            let best = (best.0, best.2);
            if best.1 == usize::MAX || best.0 > self.tolerance(best.1) {
                return Err(Error::Unresolvable(p.to_vec()));
            }
            v = best.1;
            chain.push(v);
        }
        Ok(chain)
    }

    // Slack allowed between a resolvable point and the sample set of its cell.
    fn tolerance(&self, v: usize) -> f64 {
        match self.kind {
            TreeKind::Ifs => self.scale[v],
            TreeKind::Net => self.scale[v] * self.cell_constant.max(1.0),
        }
    }

    /// Level-`m` cells below `v` (or the ancestor of `v` if `m < |v|`).
    pub fn cells_at_level(&self, v: usize, m: usize) -> Vec<usize> {
        if m <= self.level[v] {
            return vec![self.ancestor(v, m)];
        }
        let mut cur = vec![v];
        for _ in self.level[v]..m {
            cur = cur.iter().flat_map(|&x| self.children(x)).collect();
        }
        cur
    }
}

/// Builds the index tree of an IFS up to `max_level`.
pub fn build_ifs_tree(spec: &IfsModel, max_level: usize) -> Result<IndexTree> {
    spec.validate()?;
    if max_level < 1 {
        return Err(Error::InvalidParameter("max_level must be at least 1".into()));
    }
    let dim = spec.dim();
    let r0 = spec.r0();
    let maps: Vec<Affine> = spec.maps.iter().map(|m| m.affine()).collect();
    let base = base_sample(spec, &maps);
    let z0 = central_point(&base, dim);

    struct Cell {
        word: Vec<u16>,
        map: Affine,
        ratio: f64,
        measure: f64,
    }

    let root = Cell {
        word: Vec::new(),
        map: Affine::identity(dim),
        ratio: 1.0,
        measure: 1.0,
    };
    let mut levels: Vec<Vec<Cell>> = vec![vec![root]];
    let mut parents: Vec<Vec<usize>> = vec![vec![usize::MAX]];
    for m in 1..=max_level {
        let threshold = r0.powi(m as i32) * (1.0 + RATIO_TOL);
        let mut next = Vec::new();
        let mut next_parent = Vec::new();
        for (pi, cell) in levels[m - 1].iter().enumerate() {
            // depth-first expansion keeps children in lexicographic order
            let mut stack = vec![(cell.word.clone(), cell.map.clone(), cell.ratio, cell.measure)];
            let mut out = Vec::new();
            while let Some((word, map, ratio, measure)) = stack.pop() {
                if ratio <= threshold {
                    out.push(Cell {
                        word,
                        map,
                        ratio,
                        measure,
                    });
                    continue;
                }
                for i in (0..maps.len()).rev() {
                    let mut w = word.clone();
                    w.push(i as u16);
                    stack.push((
                        w,
                        map.compose(&maps[i]),
                        ratio * spec.maps[i].ratio,
                        measure * spec.weights[i],
                    ));
                }
            }
            for c in out {
                next.push(c);
                next_parent.push(pi);
            }
        }
        levels.push(next);
        parents.push(next_parent);
    }

    let mut b = TreeBuilder::new(TreeKind::Ifs, dim, r0);
    for (m, cells) in levels.iter().enumerate() {
        let offset_prev = if m == 0 { 0 } else { b.level_start[m - 1] };
        b.begin_level();
        for (i, c) in cells.iter().enumerate() {
            let parent = if m == 0 { usize::MAX } else { offset_prev + parents[m][i] };
            let samples: Vec<f64> = base.chunks(dim).flat_map(|p| c.map.apply(p)).collect();
            b.push(
                parent,
                Label::Word(c.word.clone()),
                c.measure,
                c.ratio,
                &c.map.apply(&z0),
                &samples,
            );
        }
    }
    let mut tree = b.finish();
    tree.cell_constant = (0..tree.vertex_count())
        .map(|v| {
            tree.sample_points(v)
                .map(|q| distance(q, tree.rep_point(v)))
                .fold(0.0, f64::max)
                / tree.scale[v]
        })
        .fold(0.0, f64::max);
    Ok(tree)
}

// { S_w(f) : |w| = BASE_SAMPLE_DEPTH, f a fixed point }, deduplicated, flattened.
fn base_sample(spec: &IfsModel, maps: &[Affine]) -> Vec<f64> {
    let mut pts: Vec<Vec<f64>> = spec.fixed_points();
    for _ in 0..BASE_SAMPLE_DEPTH {
        let mut next = Vec::with_capacity(pts.len() * maps.len());
        for m in maps {
            for p in &pts {
                next.push(m.apply(p));
            }
        }
        pts = dedup_points(next);
    }
    pts.into_iter().flatten().collect()
}

fn dedup_points(mut pts: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let key = |p: &Vec<f64>| -> Vec<i64> { p.iter().map(|c| (c * 1e10).round() as i64).collect() };
    pts.sort_by(|a, b| key(a).cmp(&key(b)));
    pts.dedup_by(|a, b| key(a) == key(b));
    pts
}

// Sample point closest to the sample mean (first one on ties).
fn central_point(flat: &[f64], dim: usize) -> Vec<f64> {
    let n = flat.len() / dim;
    let mut mean = vec![0.0; dim];
    for p in flat.chunks(dim) {
        for k in 0..dim {
            mean[k] += p[k] / n as f64;
        }
    }
    let mut best = (f64::INFINITY, 0);
    for (i, p) in flat.chunks(dim).enumerate() {
        let d = distance(p, &mean);
        if d < best.0 - 1e-12 {
            best = (d, i);
        }
    }
    flat[best.1 * dim..(best.1 + 1) * dim].to_vec()
}

/// `C³ r0 / (1 − C r0) + C² b ≤ 1/2`
pub fn net_parameters_admissible(c_rho: f64, r0: f64, b: f64) -> bool {
    r0 > 0.0
        && r0 < 1.0
        && b > 0.0
        && c_rho * r0 < 1.0
        && c_rho.powi(3) * r0 / (1.0 - c_rho * r0) + c_rho * c_rho * b <= 0.5
}

/// Builds the index tree of a point cloud from nested greedy `r0^m`-nets.
pub fn build_net_tree(spec: &PointCloudModel, r0: f64, b: f64, max_level: usize) -> Result<IndexTree> {
    spec.validate()?;
    if max_level < 1 {
        return Err(Error::InvalidParameter("max_level must be at least 1".into()));
    }
    if !net_parameters_admissible(spec.c_rho, r0, b) {
        return Err(Error::InvalidParameter(format!(
            "(r0, b) = ({r0}, {b}) violates C^3 r0/(1 - C r0) + C^2 b <= 1/2 with C = {}",
            spec.c_rho
        )));
    }
    let pts = &spec.points;
    let n = pts.len();
    let dim = spec.dim();

    let mut b_ = TreeBuilder::new(TreeKind::Net, dim, r0);
    b_.begin_level();
    let all: Vec<f64> = pts.iter().flatten().copied().collect();
    b_.push(usize::MAX, Label::Net(0), 1.0, 1.0, &pts[0], &all);

    let mut cell_of = vec![ROOT; n];
    let mut selected = vec![false; n];
    selected[0] = true;
    let mut net: Vec<usize> = vec![0];
    let mut worst: f64 = pts.iter().map(|p| distance(p, &pts[0])).fold(0.0, f64::max);

    for m in 1..=max_level {
        let eps = r0.powi(m as i32);
        for p in 0..n {
            if !selected[p] && net.iter().all(|&q| distance(&pts[p], &pts[q]) >= eps) {
                selected[p] = true;
                net.push(p);
            }
        }
        let prev = b_.level_start[m - 1]..b_.len();
        // children of each previous cell: its net points in index order
        let mut kids: Vec<Vec<usize>> = vec![Vec::new(); prev.len()];
        let mut sorted_net = net.clone();
        sorted_net.sort_unstable();
        for &q in &sorted_net {
            kids[cell_of[q] - prev.start].push(q);
        }
        let level_base = b_.len();
        let mut vertex_of_point = vec![usize::MAX; n];
        let mut id = level_base;
        for group in &kids {
            for &q in group {
                vertex_of_point[q] = id;
                id += 1;
            }
        }
        // descent assignment
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); id - level_base];
        let mut new_cell = vec![0; n];
        for p in 0..n {
            let group = &kids[cell_of[p] - prev.start];
            let mut best = (f64::INFINITY, usize::MAX);
            for &q in group {
                let d = distance(&pts[p], &pts[q]);
                if d < best.0 {
                    best = (d, q);
                }
            }
            let v = vertex_of_point[best.1];
            new_cell[p] = v;
            members[v - level_base].push(p);
        }
        b_.begin_level();
        for (pi, group) in kids.iter().enumerate() {
            for &q in group {
                let v = vertex_of_point[q];
                let mem = &members[v - level_base];
                let mass: f64 = mem.iter().map(|&p| spec.masses[p]).sum();
                if !(mass > 0.0) {
                    return Err(Error::InvalidModel(format!(
                        "level {m}: cell of net point {q} has zero measure"
                    )));
                }
                let samples: Vec<f64> = mem.iter().flat_map(|&p| pts[p].iter().copied()).collect();
                for &p in mem {
                    worst = worst.max(distance(&pts[p], &pts[q]) / eps);
                }
                b_.push(prev.start + pi, Label::Net(q), mass, eps, &pts[q], &samples);
            }
        }
        cell_of = new_cell;
    }
    let mut tree = b_.finish();
    tree.cell_constant = worst;
    Ok(tree)
}

/// Builds the index tree of any model. `r0`/`b` default to the values stored
/// in a point-cloud spec.
pub fn build_tree(spec: &ModelSpec, max_level: usize) -> Result<IndexTree> {
    match spec {
        ModelSpec::Ifs(m) => build_ifs_tree(m, max_level),
        ModelSpec::Pointcloud(pc) => {
            let r0 = pc.r0.unwrap_or(0.125);
            let b = pc.b.unwrap_or_else(|| {
                let c = pc.c_rho;
                ((0.5 - c.powi(3) * r0 / (1.0 - c * r0)) / (c * c)).max(f64::MIN_POSITIVE)
            });
            build_net_tree(pc, r0, b, max_level)
        }
    }
}

struct TreeBuilder {
    t: IndexTree,
    level_start: Vec<usize>,
}

impl TreeBuilder {
    fn new(kind: TreeKind, dim: usize, r0: f64) -> Self {
        TreeBuilder {
            t: IndexTree {
                kind,
                dim,
                r0,
                level_start: Vec::new(),
                level: Vec::new(),
                parent: Vec::new(),
                first_child: Vec::new(),
                child_count: Vec::new(),
                label: Vec::new(),
                measure: Vec::new(),
                scale: Vec::new(),
                rep: Vec::new(),
                sample_offsets: vec![0],
                samples: Vec::new(),
                cell_constant: 0.0,
            },
            level_start: Vec::new(),
        }
    }

    fn len(&self) -> usize {
        self.t.parent.len()
    }

    fn begin_level(&mut self) {
        self.level_start.push(self.len());
    }

    fn push(&mut self, parent: usize, label: Label, measure: f64, scale: f64, rep: &[f64], samples: &[f64]) {
        let id = self.len();
        let level = self.level_start.len() - 1;
        if parent != usize::MAX {
            if self.t.child_count[parent] == 0 {
                self.t.first_child[parent] = id;
            }
            self.t.child_count[parent] += 1;
        }
        self.t.parent.push(parent);
        self.t.level.push(level);
        self.t.first_child.push(0);
        self.t.child_count.push(0);
        self.t.label.push(label);
        self.t.measure.push(measure);
        self.t.scale.push(scale);
        self.t.rep.extend_from_slice(rep);
        self.t.samples.extend_from_slice(samples);
        self.t.sample_offsets.push(self.t.samples.len());
    }

    fn finish(mut self) -> IndexTree {
        let n = self.len();
        for v in 0..n {
            if self.t.child_count[v] == 0 {
                self.t.first_child[v] = n;
            }
        }
        self.level_start.push(n);
        self.t.level_start = self.level_start;
        self.t
    }
}

/// Diagnostics of the partition axioms.
#[derive(Clone, Debug, Serialize)]
pub struct PartitionReport {
    pub child_sum_defect: f64,
    pub max_radius_ratio: f64,
    pub violations: Vec<String>,
}

impl PartitionReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn verify_partition(tree: &IndexTree) -> PartitionReport {
    let mut violations = Vec::new();
    if (tree.measure[ROOT] - 1.0).abs() > DEFECT_TOL {
        violations.push(format!("root measure {} != 1", tree.measure[ROOT]));
    }
    let mut defect: f64 = 0.0;
    let mut radius: f64 = 0.0;
    for v in 0..tree.vertex_count() {
        let mu = tree.measure[v];
        if !(mu > 0.0 && mu <= 1.0 + DEFECT_TOL) {
            violations.push(format!("vertex {v}: measure {mu} outside (0,1]"));
        }
        if v != ROOT && tree.level[tree.parent[v]] + 1 != tree.level[v] {
            violations.push(format!("vertex {v}: parent is not one level up"));
        }
        if tree.child_count[v] > 0 {
            let s: f64 = tree.children(v).map(|c| tree.measure[c]).sum();
            let d = (s - mu).abs();
            defect = defect.max(d);
            if d > DEFECT_TOL {
                violations.push(format!("vertex {v}: children carry {s}, cell carries {mu}"));
            }
        } else if tree.level[v] < tree.depth() {
            violations.push(format!("vertex {v}: interior vertex without children"));
        }
        let rep = tree.rep_point(v);
        let r = tree
            .sample_points(v)
            .map(|q| distance(q, rep))
            .fold(0.0, f64::max);
        radius = radius.max(r / tree.r0.powi(tree.level[v] as i32));
        if tree.kind == TreeKind::Ifs {
            let mut diam: f64 = 0.0;
            let pts: Vec<&[f64]> = tree.sample_points(v).collect();
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    diam = diam.max(distance(pts[i], pts[j]));
                }
            }
            if diam > tree.scale[v] * (1.0 + DEFECT_TOL) + DEFECT_TOL {
                violations.push(format!("vertex {v}: diameter {diam} exceeds r_x = {}", tree.scale[v]));
            }
        }
    }
    PartitionReport {
        child_sum_defect: defect,
        max_radius_ratio: radius,
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{gasket, rotated_interval, unit_interval, uniform_grid};

    fn ifs(spec: &ModelSpec) -> &IfsModel {
        spec.as_ifs().unwrap()
    }

    #[test]
    fn dyadic_interval_levels() {
        let spec = unit_interval(0.5);
        let t = build_ifs_tree(ifs(&spec), 2).unwrap();
        assert_eq!(t.level_size(1), 2);
        assert_eq!(t.level_size(2), 4);
        for v in t.level_range(2) {
            assert_eq!(t.measure[v], 0.25);
        }
        // midpoints as representatives
        let reps: Vec<f64> = t.level_range(2).map(|v| t.rep_point(v)[0]).collect();
        assert_eq!(reps, vec![0.125, 0.375, 0.625, 0.875]);
    }

    #[test]
    fn rotated_interval_word_measure() {
        let spec = rotated_interval(1.0 / 3.0);
        let t = build_ifs_tree(ifs(&spec), 2).unwrap();
        let v = t.find_label("12").unwrap();
        let w = &spec.as_ifs().unwrap().weights;
        assert_eq!(t.measure[v], w[0] * w[1]);
        assert!((t.measure[v] - 2.0 / 9.0).abs() < 1e-16);
        assert_eq!(t.level[v], 2);
    }

    #[test]
    fn gasket_level_three() {
        let spec = gasket();
        let t = build_ifs_tree(ifs(&spec), 3).unwrap();
        assert_eq!(t.level_size(3), 27);
        for v in t.level_range(3) {
            assert!((t.measure[v] - 1.0 / 27.0).abs() < 1e-15);
        }
        let rep = verify_partition(&t);
        assert!(rep.is_ok(), "{:?}", rep.violations);
    }

    #[test]
    fn rejects_zero_levels() {
        assert!(build_ifs_tree(ifs(&unit_interval(0.5)), 0).is_err());
    }

    #[test]
    fn nonuniform_ratios_give_single_child_chains() {
        let spec = IfsModel {
            maps: vec![
                crate::model::Similitude { ratio: 0.25, matrix: vec![vec![1.0]], offset: vec![0.0] },
                crate::model::Similitude { ratio: 0.75, matrix: vec![vec![1.0]], offset: vec![0.25] },
            ],
            weights: vec![0.5, 0.5],
            gamma: None,
        };
        let t = build_ifs_tree(&spec, 3).unwrap();
        let r = verify_partition(&t);
        assert!(r.is_ok(), "{:?}", r.violations);
        for m in 1..=3 {
            for v in t.level_range(m) {
                assert!(t.scale[v] <= 0.25f64.powi(m as i32) * (1.0 + 1e-12));
                assert!(t.scale[v] > 0.25f64.powi(m as i32 + 1));
            }
        }
    }

    #[test]
    fn three_point_cloud() {
        let pc = PointCloudModel {
            points: vec![vec![0.0], vec![0.5], vec![1.0]],
            masses: vec![1.0 / 3.0; 3],
            c_rho: 1.0,
            gamma: None,
            r0: None,
            b: None,
        };
        let t = build_net_tree(&pc, 0.25, 0.1, 1).unwrap();
        assert_eq!(t.level_size(1), 3);
        for v in t.level_range(1) {
            assert!((t.measure[v] - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn net_constraint_is_enforced() {
        let ModelSpec::Pointcloud(pc) = uniform_grid(5) else { unreachable!() };
        assert!(build_net_tree(&pc, 0.45, 0.3, 2).is_err());
    }

    #[test]
    fn corrupted_measure_is_flagged() {
        let spec = unit_interval(0.5);
        let mut t = build_ifs_tree(ifs(&spec), 3).unwrap();
        assert_eq!(verify_partition(&t).child_sum_defect, 0.0);
        t.measure[5] += 1e-3;
        assert!(!verify_partition(&t).is_ok());
    }

    #[test]
    fn descent_resolves_endpoints() {
        let spec = unit_interval(0.5);
        let t = build_ifs_tree(ifs(&spec), 4).unwrap();
        let c0 = t.descend(&[0.0], 4).unwrap();
        assert_eq!(t.label_string(*c0.last().unwrap()), "1111");
        let c1 = t.descend(&[1.0], 4).unwrap();
        assert_eq!(t.label_string(*c1.last().unwrap()), "2222");
        let mid = t.descend(&[0.5], 1).unwrap();
        assert_eq!(t.label_string(mid[1]), "1");
        assert!(t.descend(&[3.0], 2).is_err());
    }
}
