//! On-disk cache of visiting-probability tables.
//!
//! Layout: `MULANEVP`, format version (u32), 32-byte key, then little-endian
//! payload: node count, layer count, and per layer its cap, node count, node
//! indices and values, followed by the max drift.

use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::network::LayeredNetwork;
use crate::visitprob::{LayerProbs, VisitProbTable};

const MAGIC: &[u8; 8] = b"MULANEVP";
pub const FORMAT_VERSION: u32 = 1;
const WEIGHTS_FILE: &str = "weights.tsv";

/// Cache key of a network and caps: SHA-256 over the canonical files (node
/// weights excluded) and the caps.
pub fn cache_key(network: &LayeredNetwork, caps: &[usize]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(FORMAT_VERSION.to_le_bytes());
    for (name, contents) in network.canonical_files() {
        if name == WEIGHTS_FILE {
            continue;
        }
        hasher.update((name.len() as u64).to_le_bytes());
        hasher.update(name.as_bytes());
        hasher.update((contents.len() as u64).to_le_bytes());
        hasher.update(contents.as_bytes());
    }
    for &c in caps {
        hasher.update((c as u64).to_le_bytes());
    }
    hasher.finalize().into()
}

pub fn cache_path(dir: &Path, key: &[u8; 32]) -> PathBuf {
    dir.join(format!("visitprob-{}.bin", hex::encode(key)))
}

pub fn encode(table: &VisitProbTable, key: &[u8; 32]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(key);
    let put = |out: &mut Vec<u8>, x: u64| out.extend_from_slice(&x.to_le_bytes());
    put(&mut out, table.num_nodes() as u64);
    put(&mut out, table.num_layers() as u64);
    for (i, block) in table.blocks().iter().enumerate() {
        put(&mut out, table.cap(i) as u64);
        put(&mut out, block.nodes.len() as u64);
        for &u in &block.nodes {
            put(&mut out, u as u64);
        }
        for &v in &block.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.extend_from_slice(&table.max_drift().to_le_bytes());
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Option<&[u8]> {
        if self.bytes.len() < n {
            return None;
        }
        let (head, tail) = self.bytes.split_at(n);
        self.bytes = tail;
        Some(head)
    }

    fn u64(&mut self) -> Option<u64> {
        self.take(8).map(|b| u64::from_le_bytes(b.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Option<f64> {
        self.take(8).map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
    }

    fn len(&mut self) -> Option<usize> {
        usize::try_from(self.u64()?).ok()
    }
}

/// Decodes a cache file; `None` when the file is corrupt, stale or for another key.
pub fn decode(bytes: &[u8], key: &[u8; 32]) -> Option<VisitProbTable> {
    let mut r = Reader { bytes };
    if r.take(8)? != MAGIC {
        return None;
    }
    if u32::from_le_bytes(r.take(4)?.try_into().ok()?) != FORMAT_VERSION {
        return None;
    }
    if r.take(32)? != key {
        return None;
    }
    let num_nodes = r.len()?;
    let m = r.len()?;
    let mut caps = Vec::with_capacity(m.min(1 << 16));
    let mut layers = Vec::with_capacity(m.min(1 << 16));
    for _ in 0..m {
        let cap = r.len()?;
        let n = r.len()?;
        if n > num_nodes {
            return None;
        }
        let nodes = (0..n).map(|_| r.len()).collect::<Option<Vec<_>>>()?;
        let count = n.checked_mul(cap.checked_add(1)?)?;
        if r.bytes.len() < count.checked_mul(8)? {
            return None;
        }
        let values = (0..count).map(|_| r.f64()).collect::<Option<Vec<_>>>()?;
        caps.push(cap);
        layers.push(LayerProbs { nodes, values });
    }
    let drift = r.f64()?;
    if !r.bytes.is_empty() {
        return None;
    }
    VisitProbTable::from_parts(num_nodes, caps, layers, drift).ok()
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Outcome of a cache lookup.
#[derive(Debug)]
pub struct Cached {
    pub table: VisitProbTable,
    pub hit: bool,
    pub path: PathBuf,
    pub key: String,
}

/// Loads the table for `(network, caps)` from `dir`, computing and storing it on a miss.
pub fn load_or_build(network: &LayeredNetwork, caps: &[usize], dir: &Path) -> Result<Cached> {
    let key = cache_key(network, caps);
    let path = cache_path(dir, &key);
    if let Ok(bytes) = std::fs::read(&path) {
        if let Some(table) = decode(&bytes, &key) {
            log::info!("cache hit: {}", path.display());
            return Ok(Cached {
                table,
                hit: true,
                path,
                key: hex::encode(key),
            });
        }
        log::warn!("cache file {} is corrupt or stale; recomputing", path.display());
    }
    let table = crate::visitprob::build_table(network, caps)?;
    write_atomic(&path, &encode(&table, &key))?;
    log::info!("cache miss: wrote {}", path.display());
    Ok(Cached {
        table,
        hit: false,
        path,
        key: hex::encode(key),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{NetworkBuilder, Start};
    use crate::visitprob::build_table;

    fn net() -> LayeredNetwork {
        NetworkBuilder::new()
            .layer("p", &[("u", "v", 1.0), ("v", "w", 1.0)], Start::SmallestNode, 4)
            .symmetrize(true)
            .build()
            .unwrap()
    }

    #[test]
    fn round_trip() {
        let net = net();
        let table = build_table(&net, &[4]).unwrap();
        let key = cache_key(&net, &[4]);
        let bytes = encode(&table, &key);
        assert_eq!(decode(&bytes, &key).unwrap(), table);
        assert!(decode(&bytes, &cache_key(&net, &[3])).is_none());
        assert!(decode(&bytes[..bytes.len() - 1], &key).is_none());
        let mut bumped = bytes.clone();
        bumped[8] ^= 1;
        assert!(decode(&bumped, &key).is_none());
    }

    #[test]
    fn key_depends_on_caps_and_structure() {
        let a = net();
        let b = a.with_weights(vec![0.5, 1.0, 1.0]).unwrap();
        assert_eq!(cache_key(&a, &[4]), cache_key(&b, &[4]));
        let c = a.with_start(&Start::FixedNode("w".into())).unwrap();
        assert_ne!(cache_key(&a, &[4]), cache_key(&c, &[4]));
        assert_ne!(cache_key(&a, &[4]), cache_key(&a, &[5]));
        assert_eq!(cache_key(&a, &[4]), cache_key(&net(), &[4]));
    }
}
