//! Effective resistances on truncations, level-n and limit resistances, and
//! the bisection search for the critical values of λ.

pub mod exact;

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hypergraph::AugmentedTree;
use crate::linalg::{DirichletProblem, WeightedGraph};
use crate::model::IfsModel;
use crate::network::Network;
use crate::partition::IndexTree;
use crate::potential::with_thread_pool;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResistanceSolution {
    pub resistance: f64,
    /// Energy of the minimiser, `1 / resistance`.
    pub energy: f64,
    /// Minimiser: 1 on `F`, 0 on `G`, harmonic elsewhere.
    pub potential: Vec<f64>,
}

/// `R(F, G) = 1 / min{ℰ[f] : f = 1 on F, f = 0 on G}`.
pub fn effective_resistance(g: &WeightedGraph, f: &[usize], gset: &[usize]) -> Result<ResistanceSolution> {
    let n = g.vertex_count();
    if f.is_empty() || gset.is_empty() {
        return Err(Error::InvalidParameter("terminal sets must be nonempty".into()));
    }
    if let Some(&v) = f.iter().chain(gset).find(|&&v| v >= n) {
        return Err(Error::UnknownVertex(format!("#{v}")));
    }
    let mut values = vec![0.0; n];
    let mut free = vec![true; n];
    for &v in f {
        values[v] = 1.0;
        free[v] = false;
    }
    if gset.iter().any(|&v| !free[v]) {
        return Ok(ResistanceSolution {
            resistance: 0.0,
            energy: f64::INFINITY,
            potential: values,
        });
    }
    for &v in gset {
        free[v] = false;
    }
    let reach = g.reachable(f);
    if !gset.iter().any(|&v| reach[v]) {
        return Err(Error::Disconnected);
    }
    let potential = DirichletProblem::new(g, &free)?.solve(&values)?;
    let energy = g.energy(&potential);
    if !(energy > 0.0 && energy.is_finite()) {
        return Err(Error::Numerical(format!("minimal energy {energy}")));
    }
    Ok(ResistanceSolution {
        resistance: 1.0 / energy,
        energy,
        potential,
    })
}

/// Harmonic minimiser with boundary values 1 on `F` and 0 on `G`.
pub fn variational_minimizer(g: &WeightedGraph, f: &[usize], gset: &[usize]) -> Result<Vec<f64>> {
    Ok(effective_resistance(g, f, gset)?.potential)
}

/// Closed set of `K` given by points, a cell label or a vertex id.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum SetDescriptor {
    Points(Vec<Vec<f64>>),
    Cell(String),
    Vertex(usize),
}

impl SetDescriptor {
    /// `w:<label>`, `#<id>`, or points joined by `+` with coordinates joined by `,`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if let Some(w) = text.strip_prefix("w:") {
            return Ok(SetDescriptor::Cell(w.to_string()));
        }
        if let Some(id) = text.strip_prefix('#') {
            return id
                .parse()
                .map(SetDescriptor::Vertex)
                .map_err(|_| Error::InvalidParameter(format!("bad vertex id `{text}`")));
        }
        let pts = text
            .split('+')
            .map(|p| {
                p.split(',')
                    .map(|c| {
                        c.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::InvalidParameter(format!("bad coordinate `{c}`")))
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SetDescriptor::Points(pts))
    }

    pub fn point(p: &[f64]) -> Self {
        SetDescriptor::Points(vec![p.to_vec()])
    }

    /// `κ_n(A)`: the level-`n` cells realising the set.
    pub fn resolve(&self, tree: &IndexTree, n: usize) -> Result<Vec<usize>> {
        let mut out = match self {
            SetDescriptor::Points(pts) => pts
                .iter()
                .map(|p| tree.descend(p, n).map(|c| *c.last().unwrap()))
                .collect::<Result<Vec<_>>>()?,
            SetDescriptor::Cell(w) => {
                let v = tree
                    .find_label(w)
                    .ok_or_else(|| Error::UnknownVertex(w.clone()))?;
                tree.cells_at_level(v, n)
            }
            SetDescriptor::Vertex(v) => {
                if *v >= tree.vertex_count() {
                    return Err(Error::UnknownVertex(format!("#{v}")));
                }
                tree.cells_at_level(*v, n)
            }
        };
        out.sort_unstable();
        out.dedup();
        if out.is_empty() {
            return Err(Error::InvalidParameter(format!("{self:?} resolves to no cells")));
        }
        Ok(out)
    }
}

/// Splits `A;B`, or `a,b` for one-dimensional single points.
pub fn parse_pair(text: &str) -> Result<(SetDescriptor, SetDescriptor)> {
    let (a, b) = match text.split_once(';') {
        Some(p) => p,
        None => text
            .split_once(',')
            .ok_or_else(|| Error::InvalidParameter(format!("cannot split pair `{text}`")))?,
    };
    Ok((SetDescriptor::parse(a)?, SetDescriptor::parse(b)?))
}

/// `R_n^{(λ)}(A, B)` on `X_n`, in unscaled units.
pub fn level_resistance(net: &Network, n: usize, a: &SetDescriptor, b: &SetDescriptor) -> Result<f64> {
    if n > net.trunc_level() {
        return Err(Error::InvalidParameter(format!(
            "level {n} exceeds truncation {}",
            net.trunc_level()
        )));
    }
    let t = &net.tree.tree;
    let fa = a.resolve(t, n)?;
    let fb = b.resolve(t, n)?;
    let g = net.truncated_graph(n);
    let r = effective_resistance(&g, &fa, &fb)?.resistance;
    Ok(r * (-net.log_shift).exp())
}

/// Resistance between `κ_n(A)` and `κ_n(B)` using only the horizontal edges of
/// level `n`; infinite if they are not connected there.
pub fn horizontal_resistance(net: &Network, n: usize, a: &SetDescriptor, b: &SetDescriptor) -> Result<f64> {
    let t = &net.tree.tree;
    let start = t.level_start[n];
    let fa: Vec<usize> = a.resolve(t, n)?.into_iter().map(|v| v - start).collect();
    let fb: Vec<usize> = b.resolve(t, n)?.into_iter().map(|v| v - start).collect();
    let g = net.level_graph(n);
    match effective_resistance(&g, &fa, &fb) {
        Ok(s) => Ok(s.resistance * (-net.log_shift).exp()),
        Err(Error::Disconnected) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Positive,
    Vanishing,
    Undecided,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub n: usize,
    pub resistance: f64,
    pub horizontal: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResistanceCurve {
    pub lambda: f64,
    pub pair: (SetDescriptor, SetDescriptor),
    pub values: Vec<CurvePoint>,
    /// Last `R_{n+1} / R_n`.
    pub decay_ratio: Option<f64>,
    /// Extrapolated growth factor of the level-`n` horizontal resistance.
    pub growth: Option<f64>,
    pub classification: Classification,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClassifyOptions {
    pub tol: f64,
    pub floor: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions { tol: 0.02, floor: 0.0 }
    }
}

/// Limit of a ratio sequence from its last three terms, assuming geometric
/// convergence of the differences; the last term when that assumption fails.
pub fn extrapolate_ratio(ratios: &[f64]) -> Option<f64> {
    let k = ratios.len();
    if k < 3 {
        return None;
    }
    let (a, b, c) = (ratios[k - 3], ratios[k - 2], ratios[k - 1]);
    if !(a.is_finite() && b.is_finite() && c.is_finite()) {
        return None;
    }
    let (d1, d2) = (b - a, c - b);
    if d1 * d2 > 0.0 && d2.abs() < d1.abs() {
        let rho = d2 / d1;
        Some(c + d2 * rho / (1.0 - rho))
    } else {
        Some(c)
    }
}

/// Classification from the curve values alone.
pub fn classify(values: &[CurvePoint], opts: ClassifyOptions) -> (Option<f64>, Classification) {
    let Some(last) = values.last() else {
        return (None, Classification::Undecided);
    };
    if last.resistance == 0.0 {
        return (Some(0.0), Classification::Vanishing);
    }
    let tail = &values[values.len().saturating_sub(4)..];
    let use_h = tail.iter().all(|p| p.horizontal.is_finite() && p.horizontal > 0.0);
    let series: Vec<f64> = tail
        .iter()
        .map(|p| if use_h { p.horizontal } else { p.resistance })
        .collect();
    let ratios: Vec<f64> = series.windows(2).map(|w| w[1] / w[0]).collect();
    let growth = extrapolate_ratio(&ratios);
    let class = match growth {
        Some(s) if s < 1.0 - opts.tol => Classification::Vanishing,
        Some(s) if s > 1.0 + opts.tol && last.resistance > opts.floor => Classification::Positive,
        _ => Classification::Undecided,
    };
    (growth, class)
}

/// `R_n` and the horizontal resistances for `n = 1..=n_max` on an existing network.
pub fn resistance_curve(
    net: &Network,
    a: &SetDescriptor,
    b: &SetDescriptor,
    n_max: usize,
    opts: ClassifyOptions,
) -> Result<ResistanceCurve> {
    if n_max > net.trunc_level() || n_max < 1 {
        return Err(Error::InvalidParameter(format!(
            "n_max = {n_max} outside 1..={}",
            net.trunc_level()
        )));
    }
    let mut values = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        values.push(CurvePoint {
            n,
            resistance: level_resistance(net, n, a, b)?,
            horizontal: horizontal_resistance(net, n, a, b)?,
        });
    }
    let decay_ratio = (values.len() >= 2)
        .then(|| values[values.len() - 1].resistance / values[values.len() - 2].resistance);
    let (growth, classification) = classify(&values, opts);
    Ok(ResistanceCurve {
        lambda: net.lambda,
        pair: (a.clone(), b.clone()),
        values,
        decay_ratio,
        growth,
        classification,
    })
}

/// Builds the λ-network on `tree` and computes the resistance curve.
pub fn limit_resistance(
    tree: Arc<AugmentedTree>,
    lambda: f64,
    a: &SetDescriptor,
    b: &SetDescriptor,
    n_max: usize,
    opts: ClassifyOptions,
) -> Result<ResistanceCurve> {
    let net = Network::build(tree, lambda)?;
    resistance_curve(&net, a, b, n_max, opts)
}

/// `β = log λ / log r0`
pub fn beta_from_lambda(lambda: f64, r0: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 1.0 && r0 > 0.0 && r0 < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "beta needs lambda, r0 in (0,1), got ({lambda}, {r0})"
        )));
    }
    Ok(lambda.ln() / r0.ln())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CriticalMode {
    /// `λ*`: all pairs of `V_0` at positive resistance.
    Star,
    /// `λ♯`: all pairs of fixed points at vanishing resistance.
    Sharp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Below,
    Above,
    Undecided,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Evaluation {
    pub lambda: f64,
    pub side: Side,
    pub classifications: Vec<Classification>,
    pub growth: Vec<Option<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalSearchResult {
    pub mode: CriticalMode,
    pub lambda_bracket: [f64; 2],
    pub beta_bracket: [f64; 2],
    pub r0: f64,
    pub pairs_tested: Vec<(Vec<f64>, Vec<f64>)>,
    pub evaluations: Vec<Evaluation>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CriticalOptions {
    pub n_max: usize,
    pub iters: usize,
    pub classify: ClassifyOptions,
    /// Search interval; defaults to `(0.01 u, 0.99 u)` with `u = r0^{d̄_μ}`.
    pub bracket: Option<(f64, f64)>,
}

impl Default for CriticalOptions {
    fn default() -> Self {
        CriticalOptions {
            n_max: 8,
            iters: 12,
            classify: ClassifyOptions::default(),
            bracket: None,
        }
    }
}

/// Pairs of distinct fixed points `(i^∞, j^∞)`.
pub fn fixed_point_pairs(ifs: &IfsModel) -> Vec<(Vec<f64>, Vec<f64>)> {
    pairs_of(&ifs.fixed_points())
}

fn pairs_of(points: &[Vec<f64>]) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut out = Vec::new();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if crate::model::distance(&points[i], &points[j]) > 1e-12 {
                out.push((points[i].clone(), points[j].clone()));
            }
        }
    }
    out
}

/// Default `V_0`: vertices of the convex hull of the root sample (one or two
/// dimensions). Matches the post-critical boundary of the built-in models.
pub fn hull_boundary(tree: &IndexTree) -> Result<Vec<Vec<f64>>> {
    let pts: Vec<Vec<f64>> = tree.sample_points(crate::partition::ROOT).map(<[f64]>::to_vec).collect();
    match tree.dim {
        1 => {
            let lo = pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
            let hi = pts.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
            Ok(vec![vec![lo], vec![hi]])
        }
        2 => Ok(convex_hull(pts)),
        d => Err(Error::Unsupported(format!(
            "boundary set must be supplied in dimension {d}"
        ))),
    }
}

// Andrew's monotone chain, collinear points dropped.
fn convex_hull(mut pts: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: &[f64], a: &[f64], b: &[f64]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut hull: Vec<Vec<f64>> = Vec::new();
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Vec<f64>>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for p in iter {
            while hull.len() >= start + 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 1e-12 {
                hull.pop();
            }
            hull.push(p.clone());
        }
        hull.pop();
    }
    hull
}

fn side_of(mode: CriticalMode, classes: &[Classification]) -> Side {
    use Classification::*;
    match mode {
        CriticalMode::Sharp => {
            if classes.iter().all(|&c| c == Vanishing) {
                Side::Below
            } else if classes.iter().any(|&c| c == Positive) {
                Side::Above
            } else {
                Side::Undecided
            }
        }
        CriticalMode::Star => {
            if classes.iter().all(|&c| c == Positive) {
                Side::Above
            } else if classes.iter().any(|&c| c == Vanishing) {
                Side::Below
            } else {
                Side::Undecided
            }
        }
    }
}

/// Bisection for the critical value of λ separating vanishing from positive
/// limit resistances over the given pairs.
pub fn critical_search(
    tree: Arc<AugmentedTree>,
    mode: CriticalMode,
    pairs: Vec<(Vec<f64>, Vec<f64>)>,
    upper: f64,
    opts: CriticalOptions,
) -> Result<CriticalSearchResult> {
    if pairs.is_empty() {
        return Err(Error::InvalidParameter("no terminal pairs to test".into()));
    }
    if opts.n_max < 4 {
        return Err(Error::InvalidParameter("n_max must be at least 4".into()));
    }
    let r0 = tree.tree.r0;
    let (mut lo, mut hi) = opts.bracket.unwrap_or((0.01 * upper, 0.99 * upper));
    if !(0.0 < lo && lo < hi && hi < 1.0) {
        return Err(Error::InvalidParameter(format!("bad bracket ({lo}, {hi})")));
    }
    let descriptors: Vec<(SetDescriptor, SetDescriptor)> = pairs
        .iter()
        .map(|(a, b)| (SetDescriptor::point(a), SetDescriptor::point(b)))
        .collect();
    let mut evaluations = Vec::new();
    let mut evaluate = |lambda: f64| -> Result<Side> {
        let net = Network::build(tree.clone(), lambda)?;
        let curves: Vec<ResistanceCurve> = with_thread_pool(|| {
            descriptors
                .par_iter()
                .map(|(a, b)| resistance_curve(&net, a, b, opts.n_max, opts.classify))
                .collect::<Result<Vec<_>>>()
        })?;
        let classifications: Vec<Classification> = curves.iter().map(|c| c.classification).collect();
        let side = side_of(mode, &classifications);
        log::debug!("lambda {lambda}: {side:?} {classifications:?}");
        evaluations.push(Evaluation {
            lambda,
            side,
            classifications,
            growth: curves.iter().map(|c| c.growth).collect(),
        });
        Ok(side)
    };

    if evaluate(lo)? != Side::Below {
        return Err(Error::Numerical(format!(
            "lower end {lo} of the search interval is not below the critical value"
        )));
    }
    if evaluate(hi)? != Side::Above {
        return Err(Error::Numerical(format!(
            "upper end {hi} of the search interval is not above the critical value"
        )));
    }
    for _ in 0..opts.iters {
        let mid = 0.5 * (lo + hi);
        match evaluate(mid)? {
            Side::Below => lo = mid,
            Side::Above => hi = mid,
            Side::Undecided => {
                let mut moved = false;
                let left = 0.5 * (lo + mid);
                if evaluate(left)? == Side::Below {
                    lo = left;
                    moved = true;
                }
                let right = 0.5 * (mid + hi);
                if evaluate(right)? == Side::Above {
                    hi = right;
                    moved = true;
                }
                if !moved {
                    break;
                }
            }
        }
    }
    Ok(CriticalSearchResult {
        mode,
        lambda_bracket: [lo, hi],
        beta_bracket: [beta_from_lambda(hi, r0)?, beta_from_lambda(lo, r0)?],
        r0,
        pairs_tested: pairs,
        evaluations,
    })
}

/// `λ♯` over all pairs of fixed points.
pub fn critical_lambda_sharp(tree: Arc<AugmentedTree>, ifs: &IfsModel, opts: CriticalOptions) -> Result<CriticalSearchResult> {
    let upper = search_ceiling(ifs)?;
    critical_search(tree, CriticalMode::Sharp, fixed_point_pairs(ifs), upper, opts)
}

/// `λ*` over all pairs of the boundary set `v0`.
pub fn critical_lambda_star(
    tree: Arc<AugmentedTree>,
    ifs: &IfsModel,
    v0: &[Vec<f64>],
    opts: CriticalOptions,
) -> Result<CriticalSearchResult> {
    let upper = search_ceiling(ifs)?;
    critical_search(tree, CriticalMode::Star, pairs_of(v0), upper, opts)
}

/// `r0^{d̄_μ}`
pub fn search_ceiling(ifs: &IfsModel) -> Result<f64> {
    let d = crate::energy::upper_dimension(ifs)?;
    Ok(ifs.r0().powf(d))
}
