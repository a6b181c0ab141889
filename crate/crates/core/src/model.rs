//! Model specifications: iterated function systems of similitudes and
//! finite point clouds, plus the built-in registry used by the CLI.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const WEIGHT_TOL: f64 = 1e-9;
const ORTHO_TOL: f64 = 1e-9;

/// A contractive similitude `S(ξ) = ratio · matrix · ξ + offset` with `matrix` orthogonal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Similitude {
    pub ratio: f64,
    pub matrix: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
}

impl Similitude {
    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        self.affine().apply(p)
    }

    pub fn affine(&self) -> Affine {
        let d = self.dim();
        let mut linear = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                linear[i * d + j] = self.ratio * self.matrix[i][j];
            }
        }
        Affine {
            dim: d,
            linear,
            offset: self.offset.clone(),
        }
    }

    /// The unique fixed point of the map.
    pub fn fixed_point(&self) -> Vec<f64> {
        let d = self.dim();
        // (I - rA) z = b
        let mut a = vec![vec![0.0; d + 1]; d];
        for i in 0..d {
            for j in 0..d {
                a[i][j] = if i == j { 1.0 } else { 0.0 } - self.ratio * self.matrix[i][j];
            }
            a[i][d] = self.offset[i];
        }
        solve_small(a)
    }
}

/// Affine map `p ↦ linear · p + offset` in row-major layout.
#[derive(Clone, Debug, PartialEq)]
pub struct Affine {
    pub dim: usize,
    pub linear: Vec<f64>,
    pub offset: Vec<f64>,
}

impl Affine {
    pub fn identity(dim: usize) -> Self {
        let mut linear = vec![0.0; dim * dim];
        for i in 0..dim {
            linear[i * dim + i] = 1.0;
        }
        Affine {
            dim,
            linear,
            offset: vec![0.0; dim],
        }
    }

    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d)
            .map(|i| {
                let row = &self.linear[i * d..(i + 1) * d];
                row.iter().zip(p).map(|(a, b)| a * b).sum::<f64>() + self.offset[i]
            })
            .collect()
    }

    /// `self ∘ other`
    pub fn compose(&self, other: &Affine) -> Affine {
        let d = self.dim;
        let mut linear = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                linear[i * d + j] = (0..d)
                    .map(|k| self.linear[i * d + k] * other.linear[k * d + j])
                    .sum();
            }
        }
        Affine {
            dim: d,
            linear,
            offset: self.apply(&other.offset),
        }
    }
}

// Gaussian elimination with partial pivoting on an augmented d×(d+1) system.
fn solve_small(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let d = a.len();
    for col in 0..d {
        let piv = (col..d)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        for row in 0..d {
            if row != col {
                let f = a[row][col] / a[col][col];
                for k in col..=d {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
    }
    (0..d).map(|i| a[i][d] / a[i][i]).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IfsModel {
    pub maps: Vec<Similitude>,
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointCloudModel {
    pub points: Vec<Vec<f64>>,
    pub masses: Vec<f64>,
    #[serde(default = "default_c_rho")]
    pub c_rho: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
}

fn default_c_rho() -> f64 {
    1.0
}

/// A compact metric-measure model `(K, ρ, μ)` with `diam(K) = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelSpec {
    Ifs(IfsModel),
    Pointcloud(PointCloudModel),
}

impl IfsModel {
    pub fn dim(&self) -> usize {
        self.maps.first().map_or(0, Similitude::dim)
    }

    /// Minimal contraction ratio.
    pub fn r0(&self) -> f64 {
        self.maps.iter().map(|m| m.ratio).fold(f64::INFINITY, f64::min)
    }

    pub fn fixed_points(&self) -> Vec<Vec<f64>> {
        self.maps.iter().map(Similitude::fixed_point).collect()
    }

    pub fn has_uniform_ratio(&self) -> bool {
        let r = self.r0();
        self.maps.iter().all(|m| (m.ratio - r).abs() <= 1e-12)
    }

    pub fn validate(&self) -> Result<()> {
        if self.maps.is_empty() {
            return Err(Error::InvalidModel("IFS has no maps".into()));
        }
        let d = self.dim();
        if d == 0 {
            return Err(Error::InvalidModel("ambient dimension must be positive".into()));
        }
        for (i, m) in self.maps.iter().enumerate() {
            if !(m.ratio > 0.0 && m.ratio < 1.0) {
                return Err(Error::InvalidModel(format!(
                    "map {i}: ratio {} is not in (0,1)",
                    m.ratio
                )));
            }
            if m.offset.len() != d || m.matrix.len() != d || m.matrix.iter().any(|r| r.len() != d) {
                return Err(Error::InvalidModel(format!("map {i}: dimension mismatch")));
            }
            for a in 0..d {
                for b in 0..d {
                    let dot: f64 = (0..d).map(|k| m.matrix[a][k] * m.matrix[b][k]).sum();
                    let want = if a == b { 1.0 } else { 0.0 };
                    if (dot - want).abs() > ORTHO_TOL {
                        return Err(Error::InvalidModel(format!(
                            "map {i}: matrix is not orthogonal"
                        )));
                    }
                }
            }
        }
        if self.weights.len() != self.maps.len() {
            return Err(Error::InvalidModel(format!(
                "{} weights for {} maps",
                self.weights.len(),
                self.maps.len()
            )));
        }
        if self.weights.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::InvalidModel("weights must be positive".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidModel(format!("weights sum to {total}, not 1")));
        }
        check_gamma(self.gamma)
    }
}

impl PointCloudModel {
    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::InvalidModel("point cloud is empty".into()));
        }
        let d = self.dim();
        if d == 0 || self.points.iter().any(|p| p.len() != d) {
            return Err(Error::InvalidModel("inconsistent point dimensions".into()));
        }
        if self.masses.len() != self.points.len() {
            return Err(Error::InvalidModel(format!(
                "{} masses for {} points",
                self.masses.len(),
                self.points.len()
            )));
        }
        if self.masses.iter().any(|&m| !(m >= 0.0)) {
            return Err(Error::InvalidModel("masses must be nonnegative".into()));
        }
        let total: f64 = self.masses.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidModel(format!("masses sum to {total}, not 1")));
        }
        if !(self.c_rho >= 1.0) {
            return Err(Error::InvalidModel(format!("c_rho = {} < 1", self.c_rho)));
        }
        check_gamma(self.gamma)
    }
}

fn check_gamma(gamma: Option<f64>) -> Result<()> {
    match gamma {
        Some(g) if !(g > 0.0 && g.is_finite()) => {
            Err(Error::InvalidModel(format!("gamma = {g} must be positive")))
        }
        _ => Ok(()),
    }
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::Ifs(m) => m.validate(),
            ModelSpec::Pointcloud(m) => m.validate(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ModelSpec::Ifs(m) => m.dim(),
            ModelSpec::Pointcloud(m) => m.dim(),
        }
    }

    pub fn gamma(&self) -> Option<f64> {
        match self {
            ModelSpec::Ifs(m) => m.gamma,
            ModelSpec::Pointcloud(m) => m.gamma,
        }
    }

    pub fn as_ifs(&self) -> Option<&IfsModel> {
        match self {
            ModelSpec::Ifs(m) => Some(m),
            ModelSpec::Pointcloud(_) => None,
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let spec: ModelSpec = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    /// Resolves `builtin:<name>` through the registry, otherwise reads a JSON file.
    pub fn load(source: &str) -> Result<Self> {
        match source.strip_prefix("builtin:") {
            Some(name) => builtin(name),
            None => Self::from_path(source),
        }
    }
}

fn similitude_1d(ratio: f64, sign: f64, offset: f64) -> Similitude {
    Similitude {
        ratio,
        matrix: vec![vec![sign]],
        offset: vec![offset],
    }
}

/// `[0,1]` generated by `ξ/2` and `(ξ+1)/2` with weights `(p, 1-p)`.
pub fn unit_interval(p: f64) -> ModelSpec {
    ModelSpec::Ifs(IfsModel {
        maps: vec![similitude_1d(0.5, 1.0, 0.0), similitude_1d(0.5, 1.0, 0.5)],
        weights: vec![p, 1.0 - p],
        gamma: Some(0.25),
    })
}

/// `[0,1]` generated by `ξ/2` and `1 - ξ/2` with weights `(p, 1-p)`.
pub fn rotated_interval(p: f64) -> ModelSpec {
    ModelSpec::Ifs(IfsModel {
        maps: vec![similitude_1d(0.5, 1.0, 0.0), similitude_1d(0.5, -1.0, 1.0)],
        weights: vec![p, 1.0 - p],
        gamma: Some(0.25),
    })
}

/// Sierpiński gasket on the unit triangle with uniform weights.
pub fn gasket() -> ModelSpec {
    let h = 3f64.sqrt() / 2.0;
    let corners = [[0.0, 0.0], [1.0, 0.0], [0.5, h]];
    let maps = corners
        .iter()
        .map(|c| Similitude {
            ratio: 0.5,
            matrix: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            offset: vec![c[0] / 2.0, c[1] / 2.0],
        })
        .collect();
    ModelSpec::Ifs(IfsModel {
        maps,
        weights: vec![1.0 / 3.0; 3],
        gamma: Some(0.25),
    })
}

/// `n` equally spaced points on `[0,1]` with uniform masses.
pub fn uniform_grid(n: usize) -> ModelSpec {
    let step = if n > 1 { 1.0 / (n - 1) as f64 } else { 0.0 };
    ModelSpec::Pointcloud(PointCloudModel {
        points: (0..n).map(|i| vec![i as f64 * step]).collect(),
        masses: vec![1.0 / n as f64; n],
        c_rho: 1.0,
        gamma: None,
        r0: Some(0.125),
        b: Some(0.25),
    })
}

/// Registry behind the `builtin:` prefix.
pub fn builtin(name: &str) -> Result<ModelSpec> {
    let mut parts = name.split(':');
    let head = parts.next().unwrap_or_default();
    let param = |key: &str, default: f64| -> Result<f64> {
        let mut value = default;
        for kv in name.split(':').skip(1) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::InvalidModel(format!("malformed builtin parameter `{kv}`")))?;
            if k != key {
                return Err(Error::InvalidModel(format!("unknown builtin parameter `{k}`")));
            }
            value = v
                .parse()
                .map_err(|_| Error::InvalidModel(format!("bad value `{v}` for `{k}`")))?;
        }
        Ok(value)
    };
    let spec = match head {
        "interval" => unit_interval(param("p", 0.5)?),
        "rotated-interval" => rotated_interval(param("p", 0.5)?),
        "gasket" => {
            if parts.next().is_some() {
                return Err(Error::InvalidModel("builtin:gasket takes no parameters".into()));
            }
            gasket()
        }
        "grid" => {
            let n = parts
                .next()
                .and_then(|s| s.parse::<usize>().ok())
                .ok_or_else(|| Error::InvalidModel("builtin:grid:<N> needs a point count".into()))?;
            uniform_grid(n)
        }
        other => return Err(Error::InvalidModel(format!("unknown builtin model `{other}`"))),
    };
    spec.validate()?;
    Ok(spec)
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_points_of_builtins() {
        let rot = rotated_interval(0.5);
        let fp = rot.as_ifs().unwrap().fixed_points();
        assert!((fp[0][0] - 0.0).abs() < 1e-15);
        assert!((fp[1][0] - 2.0 / 3.0).abs() < 1e-15);
        let g = gasket();
        let fp = g.as_ifs().unwrap().fixed_points();
        assert!((fp[2][1] - 3f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_models() {
        let mut m = unit_interval(0.5);
        if let ModelSpec::Ifs(ifs) = &mut m {
            ifs.maps[0].ratio = 1.0;
        }
        assert!(m.validate().is_err());

        let mut m = unit_interval(0.5);
        if let ModelSpec::Ifs(ifs) = &mut m {
            ifs.maps.clear();
            ifs.weights.clear();
        }
        assert!(m.validate().is_err());

        assert!(builtin("interval:p=0.7").is_ok());
        assert!(builtin("interval:q=0.7").is_err());
        assert!(builtin("carpet").is_err());

        let mut cloud = uniform_grid(4);
        if let ModelSpec::Pointcloud(pc) = &mut cloud {
            pc.c_rho = 0.5;
        }
        assert!(cloud.validate().is_err());
    }

    #[test]
    fn json_round_trip_preserves_gasket() {
        let g = gasket();
        let text = serde_json::to_string(&g).unwrap();
        assert_eq!(ModelSpec::from_json_str(&text).unwrap(), g);
    }

    #[test]
    fn affine_composition_matches_nested_application() {
        let rot = rotated_interval(0.5);
        let maps = &rot.as_ifs().unwrap().maps;
        let comp = maps[1].affine().compose(&maps[0].affine());
        let p = [0.3];
        assert_eq!(comp.apply(&p), maps[1].apply(&maps[0].apply(&p)));
    }
}
