//! Exact effective resistances in rational arithmetic: series and parallel
//! merges, dangling-vertex removal, Y-Δ and star-mesh elimination, with an
//! independent Gaussian elimination of the Laplacian as cross-check.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Exact rational value of a finite float.
pub fn rational_from_f64(x: f64) -> Result<Rational> {
    Rational::from_float(x).ok_or_else(|| Error::InvalidParameter(format!("{x} is not a finite rational")))
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Δ (resistances `r_ab, r_bc, r_ca`) to the equivalent Y `(r_a, r_b, r_c)`.
pub fn delta_to_wye(r_ab: &Rational, r_bc: &Rational, r_ca: &Rational) -> (Rational, Rational, Rational) {
    let s = r_ab + r_bc + r_ca;
    (
        r_ab * r_ca / &s,
        r_ab * r_bc / &s,
        r_bc * r_ca / &s,
    )
}

/// Y (resistances `r_a, r_b, r_c`) to the equivalent Δ `(r_ab, r_bc, r_ca)`.
pub fn wye_to_delta(r_a: &Rational, r_b: &Rational, r_c: &Rational) -> (Rational, Rational, Rational) {
    let p = r_a * r_b + r_b * r_c + r_c * r_a;
    (&p / r_c, &p / r_a, &p / r_b)
}

type Adjacency = BTreeMap<usize, BTreeMap<usize, Rational>>;

// Terminals merged into two nodes; `None` when F and G overlap.
fn merged(
    n: usize,
    edges: &[(usize, usize, Rational)],
    f: &[usize],
    g: &[usize],
) -> Result<Option<(Adjacency, usize, usize)>> {
    if f.is_empty() || g.is_empty() {
        return Err(Error::InvalidParameter("terminal sets must be nonempty".into()));
    }
    if f.iter().any(|v| g.contains(v)) {
        return Ok(None);
    }
    let s = *f.iter().min().unwrap();
    let t = *g.iter().min().unwrap();
    let rename = |v: usize| {
        if f.contains(&v) {
            s
        } else if g.contains(&v) {
            t
        } else {
            v
        }
    };
    let mut adj: Adjacency = BTreeMap::new();
    for v in 0..n {
        adj.entry(rename(v)).or_default();
    }
    for (a, b, c) in edges {
        if *a >= n || *b >= n {
            return Err(Error::UnknownVertex(format!("#{}", a.max(b))));
        }
        if !c.is_positive() {
            return Err(Error::InvalidParameter("conductances must be positive".into()));
        }
        let (a, b) = (rename(*a), rename(*b));
        if a != b {
            add_edge(&mut adj, a, b, c.clone());
        }
    }
    Ok(Some((adj, s, t)))
}

fn add_edge(adj: &mut Adjacency, a: usize, b: usize, c: Rational) {
    *adj.get_mut(&a).unwrap().entry(b).or_insert_with(Rational::zero) += &c;
    *adj.get_mut(&b).unwrap().entry(a).or_insert_with(Rational::zero) += c;
}

fn remove_vertex(adj: &mut Adjacency, v: usize) -> BTreeMap<usize, Rational> {
    let nb = adj.remove(&v).unwrap_or_default();
    for u in nb.keys() {
        adj.get_mut(u).unwrap().remove(&v);
    }
    nb
}

/// Exact `R(F, G)` for a graph with rational conductances.
pub fn reduce_network(n: usize, edges: &[(usize, usize, Rational)], f: &[usize], g: &[usize]) -> Result<Rational> {
    let Some((mut adj, s, t)) = merged(n, edges, f, g)? else {
        return Ok(Rational::zero());
    };
    loop {
        // internal vertex of least degree, lowest id first
        let next = adj
            .iter()
            .filter(|(v, _)| **v != s && **v != t)
            .min_by_key(|(v, nb)| (nb.len(), **v))
            .map(|(v, _)| *v);
        let Some(v) = next else { break };
        let nb = remove_vertex(&mut adj, v);
        match nb.len() {
            // isolated or dangling: carries no current
            0 | 1 => {}
            // series
            2 => {
                let mut it = nb.into_iter();
                let (a, ca) = it.next().unwrap();
                let (b, cb) = it.next().unwrap();
                let c = &ca * &cb / (&ca + &cb);
                add_edge(&mut adj, a, b, c);
            }
            // Y-Δ, and star-mesh beyond degree three
            _ => {
                let total: Rational = nb.values().sum();
                let list: Vec<(usize, Rational)> = nb.into_iter().collect();
                for i in 0..list.len() {
                    for j in i + 1..list.len() {
                        let c = &list[i].1 * &list[j].1 / &total;
                        add_edge(&mut adj, list[i].0, list[j].0, c);
                    }
                }
            }
        }
    }
    match adj.get(&s).and_then(|nb| nb.get(&t)) {
        Some(c) if c.is_positive() => Ok(c.recip()),
        _ => Err(Error::Disconnected),
    }
}

/// Float conductances converted exactly to rationals.
pub fn reduce_network_f64(n: usize, edges: &[(usize, usize, f64)], f: &[usize], g: &[usize]) -> Result<Rational> {
    let edges = edges
        .iter()
        .map(|&(a, b, c)| Ok((a, b, rational_from_f64(c)?)))
        .collect::<Result<Vec<_>>>()?;
    reduce_network(n, &edges, f, g)
}

/// Exact `R(F, G)` by Gaussian elimination of the internal block of the Laplacian.
pub fn gaussian_resistance(n: usize, edges: &[(usize, usize, Rational)], f: &[usize], g: &[usize]) -> Result<Rational> {
    let Some((adj, s, t)) = merged(n, edges, f, g)? else {
        return Ok(Rational::zero());
    };
    // only the component of s matters
    let mut comp = vec![s];
    let mut seen = std::collections::BTreeSet::from([s]);
    let mut i = 0;
    while i < comp.len() {
        for u in adj[&comp[i]].keys() {
            if seen.insert(*u) {
                comp.push(*u);
            }
        }
        i += 1;
    }
    if !seen.contains(&t) {
        return Err(Error::Disconnected);
    }
    let mut order: Vec<usize> = comp.iter().copied().filter(|&v| v != s && v != t).collect();
    order.sort_unstable();
    order.push(s);
    order.push(t);
    let pos: BTreeMap<usize, usize> = order.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let m = order.len();
    let mut lap = vec![vec![Rational::zero(); m]; m];
    for &v in &order {
        let i = pos[&v];
        for (u, c) in &adj[&v] {
            let j = pos[u];
            lap[i][j] -= c;
            lap[i][i] += c;
        }
    }
    for k in 0..m - 2 {
        let piv = lap[k][k].clone();
        if piv.is_zero() {
            return Err(Error::Singular(format!("zero pivot at internal vertex {}", order[k])));
        }
        for i in k + 1..m {
            if lap[i][k].is_zero() {
                continue;
            }
            let factor = &lap[i][k] / &piv;
            for j in k..m {
                let delta = &factor * &lap[k][j];
                lap[i][j] -= delta;
            }
        }
    }
    let c = -lap[m - 2][m - 1].clone();
    if !c.is_positive() {
        return Err(Error::Disconnected);
    }
    Ok(Rational::one() / c)
}
