//! JSON manifest plus TSV edge, start and weight files.
//!
//! ```json
//! {
//!   "layers": [
//!     {"name": "ff", "edges": "ff.tsv", "alpha": "fixed-node", "cap": 50},
//!     {"name": "tw", "edges": "tw.tsv", "alpha": "stationary", "cap": 50}
//!   ],
//!   "weights": "weights.tsv",
//!   "symmetrize": true
//! }
//! ```
//!
//! `alpha` is one of `fixed-node` (smallest node id), `fixed-node:<id>`,
//! `stationary` or `file:<path>`. Relative paths resolve against the manifest's
//! directory. TSV files ignore blank lines and lines starting with `#`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{LayeredNetwork, NetworkBuilder, SinkPolicy, Start};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub layers: Vec<LayerEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<String>,
    #[serde(default)]
    pub symmetrize: bool,
    #[serde(default)]
    pub sink: SinkPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerEntry {
    pub name: String,
    pub edges: String,
    #[serde(default = "default_alpha")]
    pub alpha: String,
    #[serde(default)]
    pub cap: usize,
}

fn default_alpha() -> String {
    "fixed-node".into()
}

/// Parsed form of a layer's `alpha` field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AlphaMode {
    SmallestNode,
    FixedNode(String),
    Stationary,
    File(String),
}

impl FromStr for AlphaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed-node" => Ok(AlphaMode::SmallestNode),
            "stationary" => Ok(AlphaMode::Stationary),
            _ => {
                if let Some(id) = s.strip_prefix("fixed-node:") {
                    Ok(AlphaMode::FixedNode(id.to_string()))
                } else if let Some(path) = s.strip_prefix("file:") {
                    Ok(AlphaMode::File(path.to_string()))
                } else {
                    Err(Error::Config(format!("unknown alpha mode `{s}`")))
                }
            }
        }
    }
}

impl Manifest {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let manifest: Manifest = serde_json::from_str(text).map_err(|e| Error::Parse {
            file: origin.to_string(),
            line: e.line(),
            message: e.to_string(),
        })?;
        if manifest.layers.is_empty() {
            return Err(Error::Validation("manifest lists no layers".into()));
        }
        Ok(manifest)
    }

    /// Loads every referenced file, resolving relative paths against `base`.
    pub fn build(&self, base: &Path) -> Result<LayeredNetwork> {
        let mut builder = NetworkBuilder::new()
            .symmetrize(self.symmetrize)
            .sink_policy(self.sink);
        for entry in &self.layers {
            let edges_path = resolve(base, &entry.edges);
            let edges = read_edges(&edges_path)?;
            if edges.is_empty() {
                return Err(Error::Validation(format!("layer `{}` has no edges", entry.name)));
            }
            let start = match entry.alpha.parse::<AlphaMode>()? {
                AlphaMode::SmallestNode => Start::SmallestNode,
                AlphaMode::FixedNode(id) => Start::FixedNode(id),
                AlphaMode::Stationary => Start::Stationary,
                AlphaMode::File(p) => Start::Explicit(read_pairs(&resolve(base, &p))?),
            };
            builder = builder.layer_owned(entry.name.clone(), edges, start, entry.cap);
        }
        if let Some(path) = &self.weights {
            let weights: HashMap<String, f64> = read_pairs(&resolve(base, path))?.into_iter().collect();
            builder = builder.weights(weights);
        }
        builder.build()
    }
}

/// Reads a manifest and all the files it references.
pub fn load_network(manifest_path: &Path) -> Result<LayeredNetwork> {
    let manifest = Manifest::from_path(manifest_path)?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    manifest.build(base)
}

fn resolve(base: &Path, path: &str) -> PathBuf {
    let p = Path::new(path);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn data_lines(path: &Path) -> Result<Vec<(usize, Vec<String>)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                None
            } else {
                Some((i + 1, line.split_whitespace().map(str::to_string).collect()))
            }
        })
        .collect())
}

fn parse_f64(path: &Path, line: usize, field: &str) -> Result<f64> {
    field
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::Parse {
            file: path.display().to_string(),
            line,
            message: format!("`{field}` is not a finite number"),
        })
}

/// `u v [w]` per line; `w` defaults to 1.
pub(crate) fn read_edges(path: &Path) -> Result<Vec<(String, String, f64)>> {
    data_lines(path)?
        .into_iter()
        .map(|(line, fields)| match fields.as_slice() {
            [u, v] => Ok((u.clone(), v.clone(), 1.0)),
            [u, v, w] => Ok((u.clone(), v.clone(), parse_f64(path, line, w)?)),
            _ => Err(Error::Parse {
                file: path.display().to_string(),
                line,
                message: format!("expected `u v [w]`, found {} fields", fields.len()),
            }),
        })
        .collect()
}

/// `node value` per line.
pub(crate) fn read_pairs(path: &Path) -> Result<Vec<(String, f64)>> {
    data_lines(path)?
        .into_iter()
        .map(|(line, fields)| match fields.as_slice() {
            [id, x] => Ok((id.clone(), parse_f64(path, line, x)?)),
            _ => Err(Error::Parse {
                file: path.display().to_string(),
                line,
                message: format!("expected `node value`, found {} fields", fields.len()),
            }),
        })
        .collect()
}

pub(super) fn canonical_files(net: &LayeredNetwork) -> Vec<(String, String)> {
    let mut files = Vec::new();
    let mut entries = Vec::new();
    for layer in net.layers() {
        let idx = layer.index();
        let id = |local: usize| net.node_id(layer.global(local));
        let mut edges = String::new();
        for &(u, v, w) in layer.edges() {
            let _ = writeln!(edges, "{}\t{}\t{}", id(u), id(v), w);
        }
        let mut alpha = String::new();
        for (local, &p) in layer.alpha().iter().enumerate() {
            if p != 0.0 {
                let _ = writeln!(alpha, "{}\t{}", id(local), p);
            }
        }
        let edges_name = format!("layer_{idx}.tsv");
        let alpha_name = format!("alpha_{idx}.tsv");
        entries.push(LayerEntry {
            name: layer.name().to_string(),
            edges: edges_name.clone(),
            alpha: format!("file:{alpha_name}"),
            cap: layer.budget_cap(),
        });
        files.push((edges_name, edges));
        files.push((alpha_name, alpha));
    }
    let mut weights = String::new();
    for (g, w) in net.weights().iter().enumerate() {
        let _ = writeln!(weights, "{}\t{}", net.node_id(g), w);
    }
    files.push(("weights.tsv".into(), weights));
    let manifest = Manifest {
        layers: entries,
        weights: Some("weights.tsv".into()),
        symmetrize: false,
        sink: SinkPolicy::Error,
    };
    let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
    json.push('\n');
    files.insert(0, ("manifest.json".into(), json));
    files
}

/// Writes the canonical files of `net` into `dir` and returns the manifest path.
pub fn write_canonical(net: &LayeredNetwork, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, contents) in canonical_files(net) {
        let path = dir.join(&name);
        std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    }
    Ok(dir.join("manifest.json"))
}
