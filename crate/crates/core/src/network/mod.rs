//! Multi-layered network model.
//!
//! A [`LayeredNetwork`] is a list of weighted digraph layers over one shared
//! node universe. Every layer is explored by its own random walker, which
//! starts from the layer's starting distribution and follows the row-stochastic
//! [`TransitionMatrix`] obtained by normalising out-weights.
//!
//! Global node indices follow the order of the universe (numeric ids first,
//! compared numerically, then the remaining ids lexicographically). Local node
//! indices inside a layer follow the same order, so local index 0 is always the
//! layer's smallest node id.

mod manifest;

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use manifest::{load_network, write_canonical, AlphaMode, LayerEntry, Manifest};
#[cfg(feature = "cli")]
pub(crate) use manifest::read_pairs;

/// Tolerance on `Σα = 1` and on row sums of transition matrices.
pub const DISTRIBUTION_TOL: f64 = 1e-9;

pub const DEFAULT_STATIONARY_TOL: f64 = 1e-10;
pub const DEFAULT_STATIONARY_MAX_ITER: usize = 100_000;

/// Ordering used for the node universe: numeric ids numerically, then other ids.
pub fn node_order(a: &str, b: &str) -> Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y).then_with(|| a.cmp(b)),
        (Ok(_), Err(_)) => Ordering::Less,
        (Err(_), Ok(_)) => Ordering::Greater,
        (Err(_), Err(_)) => a.cmp(b),
    }
}

/// What to do with nodes that have no outgoing edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SinkPolicy {
    /// Add a self-loop of weight 1.
    #[default]
    SelfLoop,
    Error,
}

/// Starting distribution of a layer's walker, expressed with node ids.
#[derive(Debug, Clone, PartialEq)]
pub enum Start {
    /// Always start from the smallest node id of the layer.
    SmallestNode,
    FixedNode(String),
    Stationary,
    /// Explicit probabilities; nodes not listed get probability 0.
    Explicit(Vec<(String, f64)>),
}

/// Row-stochastic transition matrix stored as sparse rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    probs: Vec<f64>,
}

impl TransitionMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Non-zero entries `(v, P[u][v])` of row `u`, sorted by column.
    pub fn row(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[u]..self.row_ptr[u + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.probs[span].iter().copied())
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        let span = self.row_ptr[u]..self.row_ptr[u + 1];
        match self.cols[span.clone()].binary_search(&v) {
            Ok(pos) => self.probs[span.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.n]; self.n];
        for (u, row) in dense.iter_mut().enumerate() {
            for (v, p) in self.row(u) {
                row[v] = p;
            }
        }
        dense
    }

    /// Row vector times matrix: `x^T P`.
    pub fn left_multiply(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (u, &mass) in x.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for (v, p) in self.row(u) {
                out[v] += mass * p;
            }
        }
    }
}

/// Builds the transition matrix `P[u][v] = A[u][v] / Σ_w A[u][w]` of a layer.
///
/// Parallel edges are merged by summing their weights.
pub fn transition_matrix(layer: &Layer) -> Result<TransitionMatrix> {
    build_matrix(layer.len(), &layer.edges).map_err(|local| Error::SinkNode {
        layer: layer.index,
        node: format!("#{}", layer.nodes[local]),
    })
}

fn build_matrix(n: usize, edges: &[(usize, usize, f64)]) -> std::result::Result<TransitionMatrix, usize> {
    let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    for &(u, v, w) in edges {
        *rows[u].entry(v).or_insert(0.0) += w;
    }
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut cols = Vec::with_capacity(edges.len());
    let mut probs = Vec::with_capacity(edges.len());
    row_ptr.push(0);
    for (u, row) in rows.iter().enumerate() {
        let total: f64 = row.values().sum();
        if total <= 0.0 {
            return Err(u);
        }
        for (&v, &w) in row {
            cols.push(v);
            probs.push(w / total);
        }
        row_ptr.push(cols.len());
    }
    Ok(TransitionMatrix {
        n,
        row_ptr,
        cols,
        probs,
    })
}

/// Stationary distribution `π^T P = π^T` by power iteration on the lazy chain `(P + I) / 2`.
///
/// Reducible chains have no unique stationary distribution and are rejected.
pub fn stationary_distribution(matrix: &TransitionMatrix, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = matrix.len();
    if n == 0 {
        return Err(Error::Validation("empty transition matrix".into()));
    }
    if !strongly_connected(matrix) {
        return Err(Error::NonConvergence {
            iterations: 0,
            reason: "chain is not irreducible, stationary distribution is not unique".into(),
        });
    }
    let mut pi = vec![1.0 / n as f64; n];
    let mut step = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        matrix.left_multiply(&pi, &mut step);
        residual = step.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        if residual <= tol {
            let total: f64 = pi.iter().sum();
            pi.iter_mut().for_each(|p| *p /= total);
            return Ok(pi);
        }
        for (p, s) in pi.iter_mut().zip(&step) {
            *p = 0.5 * (*p + s);
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        reason: format!("residual {residual:e} above tolerance {tol:e}"),
    })
}

fn strongly_connected(matrix: &TransitionMatrix) -> bool {
    let n = matrix.len();
    let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); n];
    for u in 0..n {
        for (v, _) in matrix.row(u) {
            reverse[v].push(u);
        }
    }
    let reach_all = |next: &dyn Fn(usize) -> Vec<usize>| {
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for v in next(u) {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == n
    };
    reach_all(&|u| matrix.row(u).map(|(v, _)| v).collect()) && reach_all(&|u| reverse[u].clone())
}

/// One layer: a weighted digraph over a subset of the universe plus its walker's start.
#[derive(Debug, Clone)]
pub struct Layer {
    index: usize,
    name: String,
    nodes: Vec<usize>,
    local_of: HashMap<usize, usize>,
    edges: Vec<(usize, usize, f64)>,
    alpha: Vec<f64>,
    budget_cap: usize,
    matrix: TransitionMatrix,
}

impl Layer {
    /// Validates a layer given in local indices. `nodes` maps local to global indices.
    pub fn new(
        index: usize,
        name: impl Into<String>,
        nodes: Vec<usize>,
        mut edges: Vec<(usize, usize, f64)>,
        alpha: Vec<f64>,
        budget_cap: usize,
        sink: SinkPolicy,
    ) -> Result<Self> {
        let name = name.into();
        let n = nodes.len();
        if n == 0 {
            return Err(Error::Validation(format!("layer `{name}` has no nodes")));
        }
        let mut local_of = HashMap::with_capacity(n);
        for (local, &global) in nodes.iter().enumerate() {
            if local_of.insert(global, local).is_some() {
                return Err(Error::Validation(format!(
                    "layer `{name}` lists node #{global} twice"
                )));
            }
        }
        for &(u, v, w) in &edges {
            if u >= n || v >= n {
                return Err(Error::Validation(format!(
                    "layer `{name}` has an edge ({u}, {v}) outside its {n} nodes"
                )));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::Validation(format!(
                    "layer `{name}` has edge ({u}, {v}) with non-positive weight {w}"
                )));
            }
        }
        let mut has_out = vec![false; n];
        for &(u, _, _) in &edges {
            has_out[u] = true;
        }
        for (u, _) in has_out.iter().enumerate().filter(|(_, has)| !**has) {
            match sink {
                SinkPolicy::SelfLoop => edges.push((u, u, 1.0)),
                SinkPolicy::Error => {
                    return Err(Error::SinkNode {
                        layer: index,
                        node: format!("#{}", nodes[u]),
                    })
                }
            }
        }
        edges.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        check_distribution(&alpha, n).map_err(|msg| Error::Validation(format!("layer `{name}`: {msg}")))?;
        let matrix = build_matrix(n, &edges).map_err(|u| Error::SinkNode {
            layer: index,
            node: format!("#{}", nodes[u]),
        })?;
        Ok(Layer {
            index,
            name,
            nodes,
            local_of,
            edges,
            alpha,
            budget_cap,
            matrix,
        })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of nodes `n_i`.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Global index of every local node.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn global(&self, local: usize) -> usize {
        self.nodes[local]
    }

    pub fn local(&self, global: usize) -> Option<usize> {
        self.local_of.get(&global).copied()
    }

    /// Edges in local indices, sorted, including self-loops added for sinks.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn budget_cap(&self) -> usize {
        self.budget_cap
    }

    pub fn matrix(&self) -> &TransitionMatrix {
        &self.matrix
    }

    /// Whether the starting distribution is stationary for this layer's chain.
    pub fn starts_stationary(&self, tol: f64) -> bool {
        let mut step = vec![0.0; self.len()];
        self.matrix.left_multiply(&self.alpha, &mut step);
        step.iter().zip(&self.alpha).map(|(a, b)| (a - b).abs()).sum::<f64>() <= tol
    }

    fn relabeled(&self, index: usize, name: String) -> Layer {
        Layer {
            index,
            name,
            ..self.clone()
        }
    }
}

fn check_distribution(alpha: &[f64], n: usize) -> std::result::Result<(), String> {
    if alpha.len() != n {
        return Err(format!("starting distribution has {} entries for {n} nodes", alpha.len()));
    }
    if alpha.iter().any(|a| !a.is_finite() || *a < 0.0) {
        return Err("starting distribution has a negative or non-finite entry".into());
    }
    let total: f64 = alpha.iter().sum();
    if (total - 1.0).abs() > DISTRIBUTION_TOL {
        return Err(format!("starting distribution sums to {total}, not 1"));
    }
    Ok(())
}

/// Layers over a shared node universe with per-node importance weights.
#[derive(Debug, Clone)]
pub struct LayeredNetwork {
    node_ids: Vec<String>,
    index_of: HashMap<String, usize>,
    weights: Vec<f64>,
    layers: Vec<Layer>,
    overlapping: bool,
}

impl LayeredNetwork {
    /// `node_ids` lists the universe in index order; `weights[g]` is `σ` of node `g`.
    pub fn new(node_ids: Vec<String>, weights: Vec<f64>, layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Validation("a network needs at least one layer".into()));
        }
        if weights.len() != node_ids.len() {
            return Err(Error::Validation(format!(
                "{} weights for {} nodes",
                weights.len(),
                node_ids.len()
            )));
        }
        if let Some((g, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(0.0..=1.0).contains(*w))
        {
            return Err(Error::Validation(format!(
                "weight {w} of node `{}` is outside [0, 1]",
                node_ids[g]
            )));
        }
        let mut index_of = HashMap::with_capacity(node_ids.len());
        for (g, id) in node_ids.iter().enumerate() {
            if index_of.insert(id.clone(), g).is_some() {
                return Err(Error::Validation(format!("node id `{id}` appears twice")));
            }
        }
        let mut seen_in = vec![usize::MAX; node_ids.len()];
        let mut overlapping = false;
        for (i, layer) in layers.iter().enumerate() {
            if layer.index != i {
                return Err(Error::Validation(format!(
                    "layer `{}` carries index {} at position {i}",
                    layer.name, layer.index
                )));
            }
            for &g in &layer.nodes {
                if g >= node_ids.len() {
                    return Err(Error::Validation(format!(
                        "layer `{}` refers to node #{g} outside the universe",
                        layer.name
                    )));
                }
                if seen_in[g] != usize::MAX && seen_in[g] != i {
                    overlapping = true;
                }
                seen_in[g] = i;
            }
        }
        Ok(LayeredNetwork {
            node_ids,
            index_of,
            weights,
            layers,
            overlapping,
        })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layer(&self, i: usize) -> &Layer {
        &self.layers[i]
    }

    /// Number of layers `m`.
    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// Size of the universe `N = |V|`.
    pub fn num_nodes(&self) -> usize {
        self.node_ids.len()
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn node_id(&self, global: usize) -> &str {
        &self.node_ids[global]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index_of.get(id).copied()
    }

    /// Node weights `σ`, indexed by global node.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn overlapping(&self) -> bool {
        self.overlapping
    }

    pub fn budget_caps(&self) -> Vec<usize> {
        self.layers.iter().map(Layer::budget_cap).collect()
    }

    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        LayeredNetwork::new(self.node_ids.clone(), weights, self.layers.clone())
    }

    /// Same network with every budget cap replaced.
    pub fn with_caps(&self, caps: &[usize]) -> Result<Self> {
        if caps.len() != self.layers.len() {
            return Err(Error::Validation(format!(
                "{} caps for {} layers",
                caps.len(),
                self.layers.len()
            )));
        }
        let layers = self
            .layers
            .iter()
            .zip(caps)
            .map(|(layer, &cap)| Layer {
                budget_cap: cap,
                ..layer.clone()
            })
            .collect();
        LayeredNetwork::new(self.node_ids.clone(), self.weights.clone(), layers)
    }

    /// Same network with each layer's walker started according to `start`.
    pub fn with_start(&self, start: &Start) -> Result<Self> {
        let layers = self
            .layers
            .iter()
            .map(|layer| {
                let alpha = resolve_start(layer, start, &self.index_of)?;
                Ok(Layer {
                    alpha,
                    ..layer.clone()
                })
            })
            .collect::<Result<Vec<_>>>()?;
        LayeredNetwork::new(self.node_ids.clone(), self.weights.clone(), layers)
    }

    /// Canonical text form: `(file name, contents)` for the manifest, edge lists,
    /// starting vectors and weights. Loading these files and serialising again
    /// reproduces them byte for byte.
    pub fn canonical_files(&self) -> Vec<(String, String)> {
        manifest::canonical_files(self)
    }
}

fn resolve_start(layer: &Layer, start: &Start, index_of: &HashMap<String, usize>) -> Result<Vec<f64>> {
    let n = layer.len();
    let local_of_id = |id: &str| -> Result<usize> {
        index_of
            .get(id)
            .and_then(|&g| layer.local(g))
            .ok_or_else(|| Error::NodeNotInLayer {
                layer: layer.index,
                node: id.to_string(),
            })
    };
    Ok(match start {
        Start::SmallestNode => one_hot(n, 0),
        Start::FixedNode(id) => one_hot(n, local_of_id(id)?),
        Start::Stationary => stationary_distribution(
            &layer.matrix,
            DEFAULT_STATIONARY_TOL,
            DEFAULT_STATIONARY_MAX_ITER,
        )?,
        Start::Explicit(entries) => {
            let mut alpha = vec![0.0; n];
            for (id, p) in entries {
                alpha[local_of_id(id)?] += p;
            }
            alpha
        }
    })
}

fn one_hot(n: usize, at: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[at] = 1.0;
    v
}

/// Duplicates layer `i` `walkers_per_layer[i]` times so that every copy is explored
/// by an independent walker. Copies share global node ids.
pub fn expand_multi_walker(network: &LayeredNetwork, walkers_per_layer: &[usize]) -> Result<LayeredNetwork> {
    if walkers_per_layer.len() != network.num_layers() {
        return Err(Error::Validation(format!(
            "{} walker counts for {} layers",
            walkers_per_layer.len(),
            network.num_layers()
        )));
    }
    let mut layers = Vec::new();
    for (layer, &walkers) in network.layers.iter().zip(walkers_per_layer) {
        if walkers == 0 {
            return Err(Error::Validation(format!(
                "layer `{}` needs at least one walker",
                layer.name
            )));
        }
        for copy in 0..walkers {
            let name = if copy == 0 {
                layer.name.clone()
            } else {
                format!("{}#{}", layer.name, copy + 1)
            };
            layers.push(layer.relabeled(layers.len(), name));
        }
    }
    LayeredNetwork::new(network.node_ids.clone(), network.weights.clone(), layers)
}

/// Assembles a network from edge lists keyed by node id.
///
/// ```
/// use mulane::network::{NetworkBuilder, Start};
///
/// let net = NetworkBuilder::new()
///     .layer("cycle", &[("a", "b", 1.0), ("b", "a", 1.0)], Start::SmallestNode, 3)
///     .build()
///     .unwrap();
/// assert_eq!(net.num_nodes(), 2);
/// assert_eq!(net.layer(0).alpha(), &[1.0, 0.0]);
/// ```
#[derive(Debug, Clone, Default)]
pub struct NetworkBuilder {
    layers: Vec<LayerSpec>,
    weights: HashMap<String, f64>,
    default_weight: Option<f64>,
    symmetrize: bool,
    sink: SinkPolicy,
}

#[derive(Debug, Clone)]
struct LayerSpec {
    name: String,
    nodes: Vec<String>,
    edges: Vec<(String, String, f64)>,
    start: Start,
    cap: usize,
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn layer(mut self, name: &str, edges: &[(&str, &str, f64)], start: Start, cap: usize) -> Self {
        self.layers.push(LayerSpec {
            name: name.to_string(),
            nodes: Vec::new(),
            edges: edges
                .iter()
                .map(|(u, v, w)| (u.to_string(), v.to_string(), *w))
                .collect(),
            start,
            cap,
        });
        self
    }

    pub fn layer_owned(mut self, name: String, edges: Vec<(String, String, f64)>, start: Start, cap: usize) -> Self {
        self.layers.push(LayerSpec {
            name,
            nodes: Vec::new(),
            edges,
            start,
            cap,
        });
        self
    }

    /// Adds isolated nodes to the most recently added layer.
    pub fn extra_nodes(mut self, nodes: &[&str]) -> Self {
        if let Some(last) = self.layers.last_mut() {
            last.nodes.extend(nodes.iter().map(|s| s.to_string()));
        }
        self
    }

    pub fn weight(mut self, node: &str, sigma: f64) -> Self {
        self.weights.insert(node.to_string(), sigma);
        self
    }

    pub fn weights(mut self, weights: HashMap<String, f64>) -> Self {
        self.weights.extend(weights);
        self
    }

    /// Weight for nodes without an explicit weight. Without it, missing weights are an error,
    /// unless no weight was given at all, in which case every weight is 1.
    pub fn default_weight(mut self, sigma: f64) -> Self {
        self.default_weight = Some(sigma);
        self
    }

    /// Add `(v, u)` with the same weight for every edge `(u, v)` lacking its reverse.
    pub fn symmetrize(mut self, on: bool) -> Self {
        self.symmetrize = on;
        self
    }

    pub fn sink_policy(mut self, sink: SinkPolicy) -> Self {
        self.sink = sink;
        self
    }

    pub fn build(self) -> Result<LayeredNetwork> {
        let mut ids: Vec<String> = self
            .layers
            .iter()
            .flat_map(|l| {
                l.edges
                    .iter()
                    .flat_map(|(u, v, _)| [u.clone(), v.clone()])
                    .chain(l.nodes.iter().cloned())
            })
            .collect();
        ids.sort_by(|a, b| node_order(a, b));
        ids.dedup();
        let index_of: HashMap<String, usize> = ids.iter().cloned().enumerate().map(|(g, id)| (id, g)).collect();

        let default_weight = match (self.default_weight, self.weights.is_empty()) {
            (Some(w), _) => Some(w),
            (None, true) => Some(1.0),
            (None, false) => None,
        };
        let weights = ids
            .iter()
            .map(|id| {
                self.weights
                    .get(id)
                    .copied()
                    .or(default_weight)
                    .ok_or_else(|| Error::Validation(format!("node `{id}` has no weight")))
            })
            .collect::<Result<Vec<_>>>()?;

        let mut layers = Vec::with_capacity(self.layers.len());
        for (i, spec) in self.layers.into_iter().enumerate() {
            let mut globals: Vec<usize> = spec
                .edges
                .iter()
                .flat_map(|(u, v, _)| [index_of[u], index_of[v]])
                .chain(spec.nodes.iter().map(|id| index_of[id]))
                .collect();
            globals.sort_unstable();
            globals.dedup();
            let local: HashMap<usize, usize> = globals.iter().enumerate().map(|(l, &g)| (g, l)).collect();
            let mut edges: Vec<(usize, usize, f64)> = spec
                .edges
                .iter()
                .map(|(u, v, w)| (local[&index_of[u]], local[&index_of[v]], *w))
                .collect();
            if self.symmetrize {
                edges = symmetrized(edges);
            }
            let n = globals.len();
            // Resolve the start on a provisional layer so stationary starts see sink loops.
            let provisional = Layer::new(i, spec.name.clone(), globals, edges, one_hot(n.max(1), 0), spec.cap, self.sink)?;
            let alpha = resolve_start(&provisional, &spec.start, &index_of)?;
            let Layer {
                nodes, edges, name, ..
            } = provisional;
            layers.push(Layer::new(i, name, nodes, edges, alpha, spec.cap, self.sink)?);
        }
        LayeredNetwork::new(ids, weights, layers)
    }
}

fn symmetrized(edges: Vec<(usize, usize, f64)>) -> Vec<(usize, usize, f64)> {
    let present: std::collections::HashSet<(usize, usize)> = edges.iter().map(|&(u, v, _)| (u, v)).collect();
    let mut added = std::collections::HashSet::new();
    let mut out = edges.clone();
    for &(u, v, w) in &edges {
        if !present.contains(&(v, u)) && added.insert((v, u)) {
            out.push((v, u, w));
        }
    }
    out
}
