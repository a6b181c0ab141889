//! Hitting distributions, ever-visiting probabilities, Green, Martin and Naïm
//! kernels on truncations, and Monte Carlo simulation of the walk.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::DirichletProblem;
use crate::network::Network;
use crate::partition::ROOT;

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "AUGTREE_THREADS";

/// Runs `f` on a pool sized by `AUGTREE_THREADS` when it is set.
pub fn with_thread_pool<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    let threads = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0);
    match threads.and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}

/// Law of the first hit of `𝒥_m` by the walk started at the root, indexed by
/// position within the level.
pub fn hitting_distribution(net: &Network, m: usize) -> Result<Vec<f64>> {
    let t = &net.tree.tree;
    if m > net.trunc_level() {
        return Err(Error::InvalidParameter(format!(
            "level {m} exceeds truncation {}",
            net.trunc_level()
        )));
    }
    if m == 0 {
        return Ok(vec![1.0]);
    }
    let g = net.truncated_graph(m);
    let free: Vec<bool> = (0..g.vertex_count()).map(|v| t.level[v] < m).collect();
    let problem = DirichletProblem::new(&g, &free)?;
    // w = L⁻¹ e_root, so G(root, z) = w(z) m(z) and ν(x) = Σ_z w(z) c(z, x)
    let w = problem.solve_source(&[(ROOT, 1.0)])?;
    Ok(t.level_range(m)
        .map(|x| g.neighbors(x).filter(|&(z, _)| free[z]).map(|(z, c)| w[z] * c).sum())
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KernelEstimate {
    pub value: f64,
    pub trunc_level: usize,
    /// `|value_N − value_{N−1}|`, infinite when level `N − 1` cannot host the query.
    pub convergence_gap: f64,
}

/// Killed Laplacian of `X_{N−1}` (absorption at `𝒥_N`) with cached columns
/// of its inverse; every kernel on the truncation is a ratio of entries.
pub struct TruncatedKernels {
    trunc: usize,
    limit: usize,
    totals: Vec<f64>,
    problem: DirichletProblem,
    columns: Mutex<HashMap<usize, Arc<Vec<f64>>>>,
}

impl TruncatedKernels {
    pub fn new(net: &Network, trunc: usize) -> Result<Self> {
        if trunc < 1 || trunc > net.trunc_level() {
            return Err(Error::InvalidParameter(format!(
                "truncation {trunc} outside 1..={}",
                net.trunc_level()
            )));
        }
        let t = &net.tree.tree;
        let g = net.truncated_graph(trunc);
        let limit = t.level_start[trunc];
        let free: Vec<bool> = (0..g.vertex_count()).map(|v| v < limit).collect();
        let totals = (0..limit).map(|v| g.total(v)).collect();
        Ok(TruncatedKernels {
            trunc,
            limit,
            totals,
            problem: DirichletProblem::new(&g, &free)?,
            columns: Mutex::new(HashMap::new()),
        })
    }

    pub fn trunc_level(&self) -> usize {
        self.trunc
    }

    fn check(&self, v: usize) -> Result<()> {
        if v < self.limit {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "vertex {v} is not inside the truncation at level {}",
                self.trunc
            )))
        }
    }

    fn column(&self, y: usize) -> Result<Arc<Vec<f64>>> {
        self.check(y)?;
        if let Some(c) = self.columns.lock().unwrap().get(&y) {
            return Ok(c.clone());
        }
        let c = Arc::new(self.problem.solve_source(&[(y, 1.0)])?);
        if !(c[y] > 0.0) {
            return Err(Error::Numerical(format!("degenerate Green column at {y}")));
        }
        self.columns.lock().unwrap().insert(y, c.clone());
        Ok(c)
    }

    /// Probability of ever visiting `y` from `x` before absorption.
    pub fn ever_visit(&self, x: usize, y: usize) -> Result<f64> {
        self.check(x)?;
        if x == y {
            return Ok(1.0);
        }
        let c = self.column(y)?;
        Ok(c[x] / c[y])
    }

    pub fn green(&self, x: usize, y: usize) -> Result<f64> {
        self.check(x)?;
        let c = self.column(y)?;
        Ok(c[x] * self.totals[y])
    }

    pub fn martin(&self, x: usize, y: usize) -> Result<f64> {
        self.check(x)?;
        let c = self.column(y)?;
        let d = c[ROOT];
        if !(d > 0.0) {
            return Err(Error::Numerical(format!("G(root, {y}) underflows")));
        }
        Ok(c[x] / d)
    }

    /// `F(x,y) / (F(x,ϑ) G(ϑ,ϑ) F(ϑ,y))`
    pub fn naim(&self, x: usize, y: usize) -> Result<f64> {
        if x == ROOT || y == ROOT {
            return Err(Error::InvalidParameter("Naïm kernel needs non-root vertices".into()));
        }
        let fxy = self.ever_visit(x, y)?;
        let fxo = self.ever_visit(x, ROOT)?;
        let goo = self.green(ROOT, ROOT)?;
        let foy = self.ever_visit(ROOT, y)?;
        Ok(fxy / (fxo * goo * foy))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kernel {
    EverVisit,
    Green,
    Martin,
    Naim,
}

/// Kernels at truncations `N` and `N − 1`, reporting the gap between them.
pub struct KernelPair {
    pub current: TruncatedKernels,
    pub previous: Option<TruncatedKernels>,
}

impl KernelPair {
    pub fn new(net: &Network, trunc: usize) -> Result<Self> {
        let current = TruncatedKernels::new(net, trunc)?;
        let previous = if trunc >= 2 {
            Some(TruncatedKernels::new(net, trunc - 1)?)
        } else {
            None
        };
        Ok(KernelPair { current, previous })
    }

    pub fn estimate(&self, kernel: Kernel, x: usize, y: usize) -> Result<KernelEstimate> {
        let eval = |k: &TruncatedKernels| match kernel {
            Kernel::EverVisit => k.ever_visit(x, y),
            Kernel::Green => k.green(x, y),
            Kernel::Martin => k.martin(x, y),
            Kernel::Naim => k.naim(x, y),
        };
        let value = eval(&self.current)?;
        let gap = match &self.previous {
            Some(p) => match eval(p) {
                Ok(v) => (value - v).abs(),
                Err(_) => f64::INFINITY,
            },
            None => f64::INFINITY,
        };
        Ok(KernelEstimate {
            value,
            trunc_level: self.current.trunc,
            convergence_gap: gap,
        })
    }
}

pub fn ever_visit(net: &Network, x: usize, y: usize, trunc: usize) -> Result<KernelEstimate> {
    KernelPair::new(net, trunc)?.estimate(Kernel::EverVisit, x, y)
}

pub fn green(net: &Network, x: usize, y: usize, trunc: usize) -> Result<KernelEstimate> {
    KernelPair::new(net, trunc)?.estimate(Kernel::Green, x, y)
}

pub fn martin_kernel(net: &Network, x: usize, y: usize, trunc: usize) -> Result<KernelEstimate> {
    KernelPair::new(net, trunc)?.estimate(Kernel::Martin, x, y)
}

pub fn naim_kernel(net: &Network, x: usize, y: usize, trunc: usize) -> Result<KernelEstimate> {
    KernelPair::new(net, trunc)?.estimate(Kernel::Naim, x, y)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stop {
    Level(usize),
    Steps(usize),
}

/// What happens when the walk reaches the truncation level.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    Absorb,
    /// The truncated network is used as is; level-`N` vertices only step back up or sideways.
    Reflect,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    HitLevel,
    MaxSteps,
    Truncation,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WalkPath {
    pub states: Vec<usize>,
    pub seed: u64,
    pub stopped_reason: StopReason,
}

fn step(net: &Network, x: usize, rng: &mut impl Rng) -> usize {
    let g = net.graph();
    let u = rng.gen::<f64>() * net.total(x);
    let mut acc = 0.0;
    let mut last = x;
    for (y, w) in g.neighbors(x) {
        acc += w;
        last = y;
        if u < acc {
            return y;
        }
    }
    last
}

fn run_walk(
    net: &Network,
    x0: usize,
    stop: Stop,
    max_steps: usize,
    boundary: Boundary,
    rng: &mut impl Rng,
    mut visit: impl FnMut(usize),
) -> (usize, StopReason) {
    let t = &net.tree.tree;
    let n_top = net.trunc_level();
    let mut x = x0;
    visit(x);
    let budget = match stop {
        Stop::Steps(s) => s.min(max_steps),
        Stop::Level(_) => max_steps,
    };
    if let Stop::Level(m) = stop {
        if t.level[x] == m {
            return (x, StopReason::HitLevel);
        }
    }
    for _ in 0..budget {
        x = step(net, x, rng);
        visit(x);
        if let Stop::Level(m) = stop {
            if t.level[x] == m {
                return (x, StopReason::HitLevel);
            }
        }
        if boundary == Boundary::Absorb && t.level[x] == n_top {
            return (x, StopReason::Truncation);
        }
    }
    let reason = match stop {
        Stop::Steps(s) if s <= max_steps => StopReason::HitLevel,
        _ => StopReason::MaxSteps,
    };
    (x, reason)
}

/// One trajectory of the walk. With `Stop::Steps` the walk that completes its
/// steps reports `MaxSteps`.
pub fn simulate_walk(
    net: &Network,
    x0: usize,
    stop: Stop,
    max_steps: usize,
    boundary: Boundary,
    seed: u64,
) -> Result<WalkPath> {
    if x0 >= net.vertex_count() {
        return Err(Error::UnknownVertex(format!("#{x0}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut states = Vec::new();
    let (_, reason) = run_walk(net, x0, stop, max_steps, boundary, &mut rng, |v| states.push(v));
    let stopped_reason = match (stop, reason) {
        (Stop::Steps(_), StopReason::HitLevel) => StopReason::MaxSteps,
        (_, r) => r,
    };
    Ok(WalkPath {
        states,
        seed,
        stopped_reason,
    })
}

/// RNG of trial `i`: independent of scheduling.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Empirical law of the first level-`m` vertex hit from `x0`, indexed by
/// position within the level.
pub fn monte_carlo_hitting(net: &Network, x0: usize, m: usize, trials: usize, seed: u64) -> Result<Vec<f64>> {
    let t = &net.tree.tree;
    if m > net.trunc_level() {
        return Err(Error::InvalidParameter(format!(
            "level {m} exceeds truncation {}",
            net.trunc_level()
        )));
    }
    if x0 >= net.vertex_count() {
        return Err(Error::UnknownVertex(format!("#{x0}")));
    }
    let start = t.level_start[m];
    let size = t.level_size(m);
    const MAX_STEPS: usize = 100_000_000;
    let hits: Vec<Option<usize>> = with_thread_pool(|| {
        (0..trials as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = trial_rng(seed, i);
                let (x, reason) = run_walk(net, x0, Stop::Level(m), MAX_STEPS, Boundary::Reflect, &mut rng, |_| {});
                (reason == StopReason::HitLevel).then_some(x - start)
            })
            .collect()
    });
    let mut counts = vec![0.0; size];
    for h in hits {
        let i = h.ok_or_else(|| Error::Numerical("walk exceeded its step budget".into()))?;
        counts[i] += 1.0;
    }
    for c in counts.iter_mut() {
        *c /= trials as f64;
    }
    Ok(counts)
}

/// Fraction of time spent at each vertex by a reflected walk of `steps` steps.
pub fn occupation_frequencies(net: &Network, x0: usize, steps: usize, seed: u64) -> Result<Vec<f64>> {
    let path = simulate_walk(net, x0, Stop::Steps(steps), steps, Boundary::Reflect, seed)?;
    let mut freq = vec![0.0; net.vertex_count()];
    for &v in &path.states[1..] {
        freq[v] += 1.0;
    }
    let total = (path.states.len() - 1).max(1) as f64;
    for f in freq.iter_mut() {
        *f /= total;
    }
    Ok(freq)
}

/// `½ Σ |p − q|`
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}
