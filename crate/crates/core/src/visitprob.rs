//! Visiting probabilities `P_{i,u}(b)`: the chance that layer `i`'s walker
//! touches node `u` within its first `b` steps.
//!
//! Each probability comes from the absorbing chain in which `u` keeps all of its
//! mass: `P(k) = α^T P(u)^{k-1} χ_u`, evaluated by repeated row-vector products.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Layer, LayeredNetwork, TransitionMatrix};

/// Visit probabilities of the target (local index) for budgets `0..=cap`,
/// plus the largest correction applied while clamping to `[0, 1]`.
pub fn visit_probabilities_with_drift(alpha: &[f64], matrix: &TransitionMatrix, target: usize, cap: usize) -> (Vec<f64>, f64) {
    let n = matrix.len();
    let mut out = vec![0.0; cap + 1];
    let mut drift: f64 = 0.0;
    if cap == 0 {
        return (out, drift);
    }
    out[1] = alpha[target];
    let mut x = alpha.to_vec();
    let mut y = vec![0.0; n];
    for slot in out.iter_mut().skip(2) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for (u, &mass) in x.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            if u == target {
                y[u] += mass;
            } else {
                for (v, p) in matrix.row(u) {
                    y[v] += mass * p;
                }
            }
        }
        for v in y.iter_mut() {
            let clamped = v.clamp(0.0, 1.0);
            drift = drift.max((clamped - *v).abs());
            *v = clamped;
        }
        *slot = y[target];
        std::mem::swap(&mut x, &mut y);
    }
    (out, drift)
}

/// `[P(0), P(1), .., P(cap)]` for `target` (a global node index) in `layer`.
///
/// ```
/// use mulane::network::{NetworkBuilder, Start};
/// use mulane::visitprob::visit_probabilities;
///
/// let net = NetworkBuilder::new()
///     .layer("c", &[("a", "b", 1.0), ("b", "a", 1.0)], Start::SmallestNode, 3)
///     .build()
///     .unwrap();
/// let b = net.index_of("b").unwrap();
/// assert_eq!(visit_probabilities(net.layer(0), b, 3).unwrap(), vec![0.0, 0.0, 1.0, 1.0]);
/// ```
pub fn visit_probabilities(layer: &Layer, target: usize, cap: usize) -> Result<Vec<f64>> {
    let local = layer.local(target).ok_or_else(|| Error::NodeNotInLayer {
        layer: layer.index(),
        node: format!("#{target}"),
    })?;
    Ok(visit_probabilities_with_drift(layer.alpha(), layer.matrix(), local, cap).0)
}

/// Per-layer block of a [`VisitProbTable`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerProbs {
    /// Node (or placeholder slot) index of each row.
    pub nodes: Vec<usize>,
    /// Row-major curves, `cap + 1` entries per node.
    pub values: Vec<f64>,
}

/// `P_{i,u}(b)` for every layer `i`, node `u` of that layer and `b ∈ 0..=c_i`.
/// Nodes outside a layer have probability 0 there.
#[derive(Debug, Clone, PartialEq)]
pub struct VisitProbTable {
    num_nodes: usize,
    caps: Vec<usize>,
    layers: Vec<LayerProbs>,
    local_of: Vec<Vec<u32>>,
    max_drift: f64,
}

const ABSENT: u32 = u32::MAX;

impl VisitProbTable {
    /// Builds a table from explicit curves; every curve must have `caps[i] + 1` entries.
    pub fn from_parts(num_nodes: usize, caps: Vec<usize>, layers: Vec<LayerProbs>, max_drift: f64) -> Result<Self> {
        if caps.len() != layers.len() {
            return Err(Error::Validation(format!("{} caps for {} layers", caps.len(), layers.len())));
        }
        let mut local_of = Vec::with_capacity(layers.len());
        for (i, block) in layers.iter().enumerate() {
            if block.values.len() != block.nodes.len() * (caps[i] + 1) {
                return Err(Error::Validation(format!(
                    "layer {i}: {} values for {} nodes with cap {}",
                    block.values.len(),
                    block.nodes.len(),
                    caps[i]
                )));
            }
            let mut map = vec![ABSENT; num_nodes];
            for (l, &u) in block.nodes.iter().enumerate() {
                if u >= num_nodes || map[u] != ABSENT {
                    return Err(Error::Validation(format!("layer {i}: bad or repeated node {u}")));
                }
                map[u] = l as u32;
            }
            local_of.push(map);
        }
        Ok(VisitProbTable {
            num_nodes,
            caps,
            layers,
            local_of,
            max_drift,
        })
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn caps(&self) -> &[usize] {
        &self.caps
    }

    pub fn cap(&self, i: usize) -> usize {
        self.caps[i]
    }

    pub fn layer_nodes(&self, i: usize) -> &[usize] {
        &self.layers[i].nodes
    }

    pub fn blocks(&self) -> &[LayerProbs] {
        &self.layers
    }

    /// Curve of the `local`-th node of layer `i`.
    pub fn curve(&self, i: usize, local: usize) -> &[f64] {
        let stride = self.caps[i] + 1;
        &self.layers[i].values[local * stride..(local + 1) * stride]
    }

    pub fn local(&self, i: usize, node: usize) -> Option<usize> {
        match self.local_of[i][node] {
            ABSENT => None,
            l => Some(l as usize),
        }
    }

    /// `P_{i,node}(b)`, or 0 if the node is not in layer `i`.
    pub fn get(&self, i: usize, node: usize, b: usize) -> f64 {
        self.local(i, node).map_or(0.0, |l| self.curve(i, l)[b])
    }

    /// Largest clamping correction observed while building the table.
    pub fn max_drift(&self) -> f64 {
        self.max_drift
    }

    /// For every node, the `(layer, local)` rows it appears in.
    pub fn memberships(&self) -> Vec<Vec<(usize, usize)>> {
        let mut out = vec![Vec::new(); self.num_nodes];
        for (i, block) in self.layers.iter().enumerate() {
            for (l, &u) in block.nodes.iter().enumerate() {
                out[u].push((i, l));
            }
        }
        out
    }
}

/// Computes the table for the given caps (one per layer).
pub fn build_table(network: &LayeredNetwork, caps: &[usize]) -> Result<VisitProbTable> {
    if caps.len() != network.num_layers() {
        return Err(Error::Validation(format!(
            "{} caps for {} layers",
            caps.len(),
            network.num_layers()
        )));
    }
    let jobs: Vec<(usize, usize)> = network
        .layers()
        .iter()
        .flat_map(|layer| (0..layer.len()).map(move |l| (layer.index(), l)))
        .collect();
    let run = |&(i, l): &(usize, usize)| {
        let layer = network.layer(i);
        visit_probabilities_with_drift(layer.alpha(), layer.matrix(), l, caps[i])
    };
    #[cfg(feature = "parallel")]
    let curves: Vec<(Vec<f64>, f64)> = {
        use rayon::prelude::*;
        jobs.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let curves: Vec<(Vec<f64>, f64)> = jobs.iter().map(run).collect();

    let mut layers: Vec<LayerProbs> = network
        .layers()
        .iter()
        .map(|layer| LayerProbs {
            nodes: layer.nodes().to_vec(),
            values: Vec::with_capacity(layer.len() * (caps[layer.index()] + 1)),
        })
        .collect();
    let mut max_drift: f64 = 0.0;
    for (&(i, _), (curve, drift)) in jobs.iter().zip(curves) {
        layers[i].values.extend(curve);
        max_drift = max_drift.max(drift);
    }
    VisitProbTable::from_parts(network.num_nodes(), caps.to_vec(), layers, max_drift)
}

/// Per-node marginal gains `g_{i,u}(b) = P_{i,u}(b) - P_{i,u}(b-1)` and the
/// layer-level gains `G[i][b] = Σ_u σ_u g_{i,u}(b)`. Index `b = 0` holds 0.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalGainTable {
    per_node: Vec<Vec<Vec<f64>>>,
    layer: Vec<Vec<f64>>,
}

impl MarginalGainTable {
    /// Builds a table directly from layer-level gains (`gains[i][b-1] = G[i][b]`).
    pub fn from_layer_gains(gains: Vec<Vec<f64>>) -> Self {
        let layer = gains
            .into_iter()
            .map(|g| std::iter::once(0.0).chain(g).collect())
            .collect();
        MarginalGainTable {
            per_node: Vec::new(),
            layer,
        }
    }

    /// `g_{i,u}(b)` for the `local`-th node of layer `i`; empty when built from layer gains.
    pub fn node(&self, i: usize, local: usize) -> &[f64] {
        &self.per_node[i][local]
    }

    /// `G[i][b]` for `b = 0..=c_i`.
    pub fn layer(&self, i: usize) -> &[f64] {
        &self.layer[i]
    }

    pub fn num_layers(&self) -> usize {
        self.layer.len()
    }

    pub fn cap(&self, i: usize) -> usize {
        self.layer[i].len() - 1
    }
}

pub fn marginal_gains(table: &VisitProbTable, weights: &[f64]) -> MarginalGainTable {
    let mut per_node = Vec::with_capacity(table.num_layers());
    let mut layer = Vec::with_capacity(table.num_layers());
    for i in 0..table.num_layers() {
        let cap = table.cap(i);
        let mut total = vec![0.0; cap + 1];
        let mut rows = Vec::with_capacity(table.layer_nodes(i).len());
        for (l, &u) in table.layer_nodes(i).iter().enumerate() {
            let p = table.curve(i, l);
            let mut g = vec![0.0; cap + 1];
            for b in 1..=cap {
                g[b] = p[b] - p[b - 1];
                total[b] += weights[u] * g[b];
            }
            rows.push(g);
        }
        per_node.push(rows);
        layer.push(total);
    }
    MarginalGainTable { per_node, layer }
}

/// Cumulative-distribution walk sampler for one layer.
#[derive(Debug, Clone)]
pub struct WalkSampler {
    start: Vec<f64>,
    rows: Vec<(Vec<usize>, Vec<f64>)>,
}

impl WalkSampler {
    pub fn new(layer: &Layer) -> Self {
        let start = cumulative(layer.alpha().iter().copied());
        let rows = (0..layer.len())
            .map(|u| {
                let (cols, probs): (Vec<usize>, Vec<f64>) = layer.matrix().row(u).unzip();
                (cols, cumulative(probs.into_iter()))
            })
            .collect();
        WalkSampler { start, rows }
    }

    /// Writes a `k`-step trajectory of local node indices into `out`.
    pub fn sample<R: Rng + ?Sized>(&self, k: usize, rng: &mut R, out: &mut Vec<usize>) {
        out.clear();
        if k == 0 {
            return;
        }
        let mut u = pick(&self.start, rng.random::<f64>());
        out.push(u);
        for _ in 1..k {
            let (cols, cum) = &self.rows[u];
            u = cols[pick(cum, rng.random::<f64>())];
            out.push(u);
        }
    }
}

fn cumulative(probs: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    probs
        .map(|p| {
            acc += p;
            acc
        })
        .collect()
}

fn pick(cum: &[f64], x: f64) -> usize {
    let target = x * cum.last().copied().unwrap_or(1.0);
    let idx = cum.partition_point(|&c| c <= target);
    // skip zero-probability entries at the tail that rounding may land on
    let mut idx = idx.min(cum.len() - 1);
    while idx > 0 && cum[idx] == cum[idx - 1] {
        idx -= 1;
    }
    idx
}

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

/// Fraction of `trials` simulated `budget`-step walks that visit `target` (global index).
pub fn monte_carlo_visit_prob(layer: &Layer, target: usize, budget: usize, trials: usize, seed: u64) -> Result<Estimate> {
    if trials == 0 {
        return Err(Error::Config("at least one trial is needed".into()));
    }
    let local = layer.local(target).ok_or_else(|| Error::NodeNotInLayer {
        layer: layer.index(),
        node: format!("#{target}"),
    })?;
    let sampler = WalkSampler::new(layer);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut walk = Vec::with_capacity(budget);
    let mut hits = 0usize;
    for _ in 0..trials {
        sampler.sample(budget, &mut rng, &mut walk);
        if walk.contains(&local) {
            hits += 1;
        }
    }
    let mean = hits as f64 / trials as f64;
    let stderr = (mean * (1.0 - mean) / trials as f64).sqrt();
    Ok(Estimate { mean, stderr })
}
