use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::FrameSpec;
use crate::sum::{self, CompensatedSum};
use crate::transform::path::Path;

/// Which band filters each layer branches over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Width {
    /// `P[M]`, the members with `0 < |p|_inf <= M`.
    Truncated(usize),
    /// Every band filter of the periodised frame.
    Full,
}

impl fmt::Display for Width {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Width::Truncated(m) => write!(f, "{m}"),
            Width::Full => f.write_str("full"),
        }
    }
}

impl FromStr for Width {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "full" {
            return Ok(Width::Full);
        }
        s.parse()
            .map(Width::Truncated)
            .map_err(|_| Error::config(format!("width must be an integer or \"full\", got {s:?}")))
    }
}

impl Serialize for Width {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Width::Truncated(m) => s.serialize_u64(*m as u64),
            Width::Full => s.serialize_str("full"),
        }
    }
}

impl<'de> Deserialize<'de> for Width {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(usize),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(m) => Ok(Width::Truncated(m)),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// How coefficient signals are kept in the tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode", content = "factor")]
pub enum CoefficientStorage {
    /// Full-resolution arrays.
    Full,
    /// Every `factor`-th sample per axis. Storage only; never used for checks.
    Downsampled(usize),
    /// Energies only.
    EnergyOnly,
}

/// Parameters of one scattering run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterConfig {
    pub width: Width,
    pub depth: usize,
    pub prune_eps: f64,
    pub mirror_halving: bool,
    pub storage: CoefficientStorage,
    /// Record `sum_q ||U[p]f * f_q||^2` for leaves (needed for the layer
    /// `K+1` energy); costs a full forward transform per leaf.
    pub frontier_energy: bool,
}

impl ScatterConfig {
    pub fn new(width: Width, depth: usize) -> Self {
        Self {
            width,
            depth,
            prune_eps: 0.0,
            mirror_halving: false,
            storage: CoefficientStorage::Full,
            frontier_energy: true,
        }
    }

    pub fn with_prune_eps(mut self, eps: f64) -> Self {
        self.prune_eps = eps;
        self
    }

    pub fn with_mirror_halving(mut self, on: bool) -> Self {
        self.mirror_halving = on;
        self
    }

    pub fn with_storage(mut self, storage: CoefficientStorage) -> Self {
        self.storage = storage;
        self
    }

    pub fn with_frontier_energy(mut self, on: bool) -> Self {
        self.frontier_energy = on;
        self
    }
}

/// Coefficient array `U[p]f * f_0`.
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient {
    Real {
        dims: Vec<usize>,
        data: Arc<[f64]>,
    },
    Complex {
        dims: Vec<usize>,
        data: Arc<[Complex64]>,
    },
}

impl Coefficient {
    pub fn dims(&self) -> &[usize] {
        match self {
            Coefficient::Real { dims, .. } | Coefficient::Complex { dims, .. } => dims,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Coefficient::Real { data, .. } => data.len(),
            Coefficient::Complex { data, .. } => data.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_complex(&self) -> bool {
        matches!(self, Coefficient::Complex { .. })
    }

    /// Sample `i` as a complex number.
    pub fn get(&self, i: usize) -> Complex64 {
        match self {
            Coefficient::Real { data, .. } => Complex64::new(data[i], 0.0),
            Coefficient::Complex { data, .. } => data[i],
        }
    }

    pub fn norm_sq(&self) -> f64 {
        match self {
            Coefficient::Real { data, .. } => sum::sum(data.iter().map(|v| v * v)),
            Coefficient::Complex { data, .. } => sum::sum(data.iter().map(|v| v.norm_sqr())),
        }
    }

    /// `||self - other||^2`, shapes must agree.
    pub fn distance_sq(&self, other: &Coefficient) -> Result<f64> {
        if self.dims() != other.dims() {
            return Err(Error::ShapeMismatch {
                expected: self.dims().to_vec(),
                actual: other.dims().to_vec(),
            });
        }
        Ok(match (self, other) {
            (Coefficient::Real { data: a, .. }, Coefficient::Real { data: b, .. }) => {
                sum::sum(a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)))
            }
            _ => sum::sum((0..self.len()).map(|i| (self.get(i) - other.get(i)).norm_sqr())),
        })
    }

    /// Largest sample-wise absolute difference.
    pub fn max_abs_diff(&self, other: &Coefficient) -> f64 {
        (0..self.len().min(other.len()))
            .map(|i| (self.get(i) - other.get(i)).norm())
            .fold(0.0, f64::max)
    }
}

/// One path of the scattering tree.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringNode {
    pub path: Path,
    /// `||U[p]f||^2`.
    pub node_energy: f64,
    /// `||U[p]f * f_0||^2`.
    pub coefficient_energy: f64,
    /// `sum_{q in width} ||U[p]f * f_q||^2`, when computed.
    pub child_energy: Option<f64>,
    /// Children were generated for this node.
    pub expanded: bool,
    /// Set on mirror twins materialised from the computed representative.
    pub twin_of: Option<Path>,
    pub coefficient: Option<Coefficient>,
}

impl ScatteringNode {
    pub fn layer(&self) -> usize {
        self.path.len()
    }
}

/// Output of [`scatter`](crate::transform::scatter): every node of
/// `S_F[M,K](f)` in lexicographic path order.
#[derive(Debug, Clone)]
pub struct ScatteringTree {
    pub frame: FrameSpec,
    pub config: ScatterConfig,
    /// `||f||^2`.
    pub input_norm_sq: f64,
    /// Nodes whose signals were actually evaluated, per layer.
    pub computed_per_layer: Vec<usize>,
    pub nodes: Vec<ScatteringNode>,
}

impl ScatteringTree {
    pub fn root(&self) -> &ScatteringNode {
        &self.nodes[0]
    }

    pub fn node(&self, path: &Path) -> Option<&ScatteringNode> {
        self.nodes
            .binary_search_by(|n| n.path.cmp(path))
            .ok()
            .map(|i| &self.nodes[i])
    }

    pub fn layer(&self, k: usize) -> impl Iterator<Item = &ScatteringNode> {
        self.nodes.iter().filter(move |n| n.layer() == k)
    }

    pub fn depth(&self) -> usize {
        self.config.depth
    }

    pub fn computed_nodes(&self) -> usize {
        self.computed_per_layer.iter().sum()
    }

    /// Some node above the last layer was not expanded.
    pub fn is_pruned(&self) -> bool {
        self.nodes
            .iter()
            .any(|n| n.layer() < self.config.depth && !n.expanded)
    }

    /// `||S_F[M,K](f)||^2 = sum_p ||U[p]f * f_0||^2`.
    pub fn norm_sq(&self) -> f64 {
        sum::sum(self.nodes.iter().map(|n| n.coefficient_energy))
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Path-by-path `l2` distance between two trees with full-resolution
    /// coefficients and identical path sets.
    pub fn distance(&self, other: &ScatteringTree) -> Result<f64> {
        if self.nodes.len() != other.nodes.len() {
            return Err(Error::IncomparableTrees(format!(
                "{} vs {} nodes",
                self.nodes.len(),
                other.nodes.len()
            )));
        }
        let mut acc = CompensatedSum::new();
        for (a, b) in self.nodes.iter().zip(&other.nodes) {
            if a.path != b.path {
                return Err(Error::IncomparableTrees(format!(
                    "path {} has no counterpart (found {})",
                    a.path.label(),
                    b.path.label()
                )));
            }
            if self.config.storage != CoefficientStorage::Full
                || other.config.storage != CoefficientStorage::Full
            {
                return Err(Error::IncomparableTrees(
                    "distances need full-resolution coefficients".into(),
                ));
            }
            match (&a.coefficient, &b.coefficient) {
                (Some(x), Some(y)) => acc.add(x.distance_sq(y)?),
                _ => {
                    return Err(Error::IncomparableTrees(format!(
                        "missing coefficient at {}",
                        a.path.label()
                    )))
                }
            }
        }
        Ok(acc.value().sqrt())
    }
}
