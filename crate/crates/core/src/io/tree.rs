use std::fs;
use std::path::{Path as FsPath, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::frame::FrameSpec;
use crate::io::signal::{decode_f64, encode_f64, lanes, Dtype};
use crate::transform::{Coefficient, Path, ScatterConfig, ScatteringNode, ScatteringTree};

pub const MANIFEST_FILE: &str = "manifest.json";
const COEFFICIENT_DIR: &str = "coefficients";

pub fn tool_version() -> String {
    format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDescriptor {
    pub source: Option<String>,
    pub dims: Vec<usize>,
    pub norm: f64,
    pub norm_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub path: Path,
    pub node_energy: f64,
    pub coefficient_energy: f64,
    pub child_energy: Option<f64>,
    pub expanded: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub twin_of: Option<Path>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub file: Option<CoefficientFile>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoefficientFile {
    /// Relative to the run directory.
    pub name: String,
    pub dtype: Dtype,
    pub dims: Vec<usize>,
    pub bytes: u64,
    pub sha256: String,
}

impl CoefficientFile {
    fn values(&self) -> usize {
        self.dims.iter().product::<usize>() * lanes(self.dtype)
    }
}

/// `manifest.json` of a scattering run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub frame: FrameSpec,
    pub config: ScatterConfig,
    pub input: InputDescriptor,
    pub computed_per_layer: Vec<usize>,
    pub nodes: Vec<NodeRecord>,
}

/// Writes `manifest.json` and one raw little-endian float64 file per stored
/// coefficient. Mirror twins share their representative's file.
pub fn write_tree(tree: &ScatteringTree, dir: &FsPath, source: Option<&str>) -> Result<Manifest> {
    let coef_dir = dir.join(COEFFICIENT_DIR);
    fs::create_dir_all(&coef_dir).map_err(|e| Error::io(&coef_dir, e))?;
    let mut nodes: Vec<NodeRecord> = Vec::with_capacity(tree.nodes.len());
    for (i, n) in tree.nodes.iter().enumerate() {
        let file = match (&n.coefficient, &n.twin_of) {
            (Some(_), Some(rep)) => {
                let j = tree.nodes.binary_search_by(|m| m.path.cmp(rep)).ok();
                match j.and_then(|j| nodes.get(j)) {
                    Some(r) => r.file.clone(),
                    None => Some(write_coefficient(dir, i, n.coefficient.as_ref().unwrap())?),
                }
            }
            (Some(c), None) => Some(write_coefficient(dir, i, c)?),
            (None, _) => None,
        };
        nodes.push(NodeRecord {
            path: n.path.clone(),
            node_energy: n.node_energy,
            coefficient_energy: n.coefficient_energy,
            child_energy: n.child_energy,
            expanded: n.expanded,
            twin_of: n.twin_of.clone(),
            file,
        });
    }
    // Twins that sort before their representative pick up its file here.
    for i in 0..nodes.len() {
        if nodes[i].file.is_none() && tree.nodes[i].coefficient.is_some() {
            let rep = nodes[i].twin_of.clone().expect("only twins are deferred");
            let j = tree
                .nodes
                .binary_search_by(|m| m.path.cmp(&rep))
                .expect("representative exists");
            nodes[i].file = nodes[j].file.clone();
        }
    }
    let norm_sq = tree.input_norm_sq;
    let manifest = Manifest {
        tool_version: tool_version(),
        frame: tree.frame,
        config: tree.config.clone(),
        input: InputDescriptor {
            source: source.map(str::to_string),
            dims: vec![tree.frame.n; tree.frame.d],
            norm: norm_sq.sqrt(),
            norm_sq,
        },
        computed_per_layer: tree.computed_per_layer.clone(),
        nodes,
    };
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

fn write_coefficient(dir: &FsPath, index: usize, c: &Coefficient) -> Result<CoefficientFile> {
    let (dtype, values): (Dtype, Vec<f64>) = match c {
        Coefficient::Real { data, .. } => (Dtype::Float64, data.to_vec()),
        Coefficient::Complex { data, .. } => (
            Dtype::Complex128,
            data.iter().flat_map(|v| [v.re, v.im]).collect(),
        ),
    };
    let bytes = encode_f64(&values);
    let name = format!("{COEFFICIENT_DIR}/{index:06}.f64");
    let path = dir.join(&name);
    fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
    Ok(CoefficientFile {
        name,
        dtype,
        dims: c.dims().to_vec(),
        bytes: bytes.len() as u64,
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

/// A run directory opened by [`read_tree`]: energies in memory, coefficients
/// loaded on demand.
#[derive(Debug, Clone)]
pub struct StoredTree {
    dir: PathBuf,
    pub manifest: Manifest,
}

/// Opens a run directory, checking that every referenced coefficient file
/// exists with its declared length.
pub fn read_tree(dir: &FsPath) -> Result<StoredTree> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.clone(),
        source,
    })?;
    if manifest
        .nodes
        .first()
        .map(|n| !n.path.is_empty())
        .unwrap_or(true)
    {
        return Err(Error::format(&path, "first record must be the empty path"));
    }
    if manifest.nodes.windows(2).any(|w| w[0].path >= w[1].path) {
        return Err(Error::format(&path, "node records are not in path order"));
    }
    for rec in &manifest.nodes {
        if let Some(file) = &rec.file {
            let p = dir.join(&file.name);
            let meta = fs::metadata(&p).map_err(|e| Error::io(&p, e))?;
            if meta.len() != file.bytes || file.bytes != 8 * file.values() as u64 {
                return Err(Error::format(
                    &p,
                    format!("expected {} bytes, found {}", file.bytes, meta.len()),
                ));
            }
        }
    }
    Ok(StoredTree {
        dir: dir.to_path_buf(),
        manifest,
    })
}

impl StoredTree {
    pub fn dir(&self) -> &FsPath {
        &self.dir
    }

    /// Reads and digest-checks the coefficient of record `i`.
    pub fn load_coefficient(&self, i: usize) -> Result<Option<Coefficient>> {
        let Some(file) = &self.manifest.nodes[i].file else {
            return Ok(None);
        };
        let path = self.dir.join(&file.name);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        if hex::encode(Sha256::digest(&bytes)) != file.sha256 {
            return Err(Error::Digest(path));
        }
        let values = decode_f64(&path, &bytes, file.values())?;
        let dims = file.dims.clone();
        Ok(Some(match file.dtype {
            Dtype::Float64 => Coefficient::Real {
                dims,
                data: Arc::from(values),
            },
            Dtype::Complex128 => Coefficient::Complex {
                dims,
                data: values
                    .chunks_exact(2)
                    .map(|c| Complex64::new(c[0], c[1]))
                    .collect(),
            },
        }))
    }

    /// The full tree with every coefficient loaded.
    pub fn load(&self) -> Result<ScatteringTree> {
        let nodes = self
            .manifest
            .nodes
            .iter()
            .enumerate()
            .map(|(i, r)| {
                Ok(ScatteringNode {
                    path: r.path.clone(),
                    node_energy: r.node_energy,
                    coefficient_energy: r.coefficient_energy,
                    child_energy: r.child_energy,
                    expanded: r.expanded,
                    twin_of: r.twin_of.clone(),
                    coefficient: self.load_coefficient(i)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ScatteringTree {
            frame: self.manifest.frame,
            config: self.manifest.config.clone(),
            input_norm_sq: self.manifest.input.norm_sq,
            computed_per_layer: self.manifest.computed_per_layer.clone(),
            nodes,
        })
    }

    /// The tree without coefficients; enough for ledgers and censuses.
    pub fn energies(&self) -> ScatteringTree {
        ScatteringTree {
            frame: self.manifest.frame,
            config: self.manifest.config.clone(),
            input_norm_sq: self.manifest.input.norm_sq,
            computed_per_layer: self.manifest.computed_per_layer.clone(),
            nodes: self
                .manifest
                .nodes
                .iter()
                .map(|r| ScatteringNode {
                    path: r.path.clone(),
                    node_energy: r.node_energy,
                    coefficient_energy: r.coefficient_energy,
                    child_energy: r.child_energy,
                    expanded: r.expanded,
                    twin_of: r.twin_of.clone(),
                    coefficient: None,
                })
                .collect(),
        }
    }
}
