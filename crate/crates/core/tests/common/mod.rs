//! Random instance generators and brute-force oracles shared by the test targets.

#![allow(dead_code)]

use std::collections::HashMap;

use mulane::network::{Layer, LayeredNetwork, NetworkBuilder, Start};
use mulane::visitprob::VisitProbTable;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random weighted digraph on `nodes`; every node appears in some edge.
/// With `strongly_connected` the edges include a Hamiltonian cycle.
pub fn random_edges<R: Rng>(rng: &mut R, nodes: &[String], density: f64, strongly_connected: bool) -> Vec<(String, String, f64)> {
    let n = nodes.len();
    let mut edges = Vec::new();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    for w in 0..n {
        let (a, b) = (order[w], order[(w + 1) % n]);
        if strongly_connected || w + 1 < n {
            edges.push((nodes[a].clone(), nodes[b].clone(), rng.random_range(0.5..2.0)));
        }
    }
    for u in 0..n {
        for v in 0..n {
            if rng.random_bool(density) {
                edges.push((nodes[u].clone(), nodes[v].clone(), rng.random_range(0.1..3.0)));
            }
        }
    }
    edges
}

/// Settings for [`random_network`].
#[derive(Debug, Clone)]
pub struct Shape {
    pub layers: usize,
    pub min_nodes: usize,
    pub max_nodes: usize,
    /// Size of the node universe layers draw from; `None` gives disjoint layers.
    pub universe: Option<usize>,
    pub max_cap: usize,
    pub stationary: bool,
    pub density: f64,
}

impl Shape {
    pub fn overlapping(layers: usize, max_nodes: usize, max_cap: usize) -> Self {
        Shape {
            layers,
            min_nodes: 2,
            max_nodes,
            universe: Some(max_nodes + 2),
            max_cap,
            stationary: false,
            density: 0.3,
        }
    }

    pub fn disjoint(layers: usize, max_nodes: usize, max_cap: usize) -> Self {
        Shape {
            universe: None,
            ..Shape::overlapping(layers, max_nodes, max_cap)
        }
    }

    pub fn stationary(mut self) -> Self {
        self.stationary = true;
        self
    }
}

/// Random multi-layered network with weights in `{0, 0.25, ..., 1}` and random caps.
pub fn random_network<R: Rng>(rng: &mut R, shape: &Shape) -> LayeredNetwork {
    let mut builder = NetworkBuilder::new();
    let mut weights = HashMap::new();
    for i in 0..shape.layers {
        let n = rng.random_range(shape.min_nodes..=shape.max_nodes);
        let nodes: Vec<String> = match shape.universe {
            Some(u) => {
                let mut pool: Vec<usize> = (0..u.max(n)).collect();
                pool.shuffle(rng);
                pool[..n].iter().map(|v| format!("v{v}")).collect()
            }
            None => (0..n).map(|v| format!("l{i}v{v}")).collect(),
        };
        for id in &nodes {
            weights.entry(id.clone()).or_insert_with(|| rng.random_range(0..=4) as f64 / 4.0);
        }
        let edges = random_edges(rng, &nodes, shape.density, shape.stationary);
        let start = if shape.stationary {
            Start::Stationary
        } else {
            match rng.random_range(0..3) {
                0 => Start::SmallestNode,
                1 => Start::FixedNode(nodes[rng.random_range(0..n)].clone()),
                _ => {
                    let mut raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
                    let total: f64 = raw.iter().sum();
                    raw.iter_mut().for_each(|x| *x /= total);
                    Start::Explicit(nodes.iter().cloned().zip(raw).collect())
                }
            }
        };
        let cap = rng.random_range(1..=shape.max_cap);
        builder = builder.layer_owned(format!("layer{i}"), edges, start, cap);
    }
    builder.weights(weights).build().expect("generated network is valid")
}

/// Probability of visiting `target` within the first `b` steps, for every
/// `b <= cap`, by summing over all walk prefixes.
pub fn enumerate_visit_probs(layer: &Layer, target: usize, cap: usize) -> Vec<f64> {
    let n = layer.len();
    let mut out_weight = vec![0.0; n];
    for &(u, _, w) in layer.edges() {
        out_weight[u] += w;
    }
    let mut next: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for &(u, v, w) in layer.edges() {
        next[u].push((v, w / out_weight[u]));
    }
    let mut hit = vec![0.0; cap + 1];
    fn walk(node: usize, step: usize, p: f64, target: usize, cap: usize, next: &[Vec<(usize, f64)>], hit: &mut [f64]) {
        if node == target {
            hit[step] += p;
            return;
        }
        if step == cap {
            return;
        }
        for &(v, q) in &next[node] {
            walk(v, step + 1, p * q, target, cap, next, hit);
        }
    }
    if cap >= 1 {
        for (u, &a) in layer.alpha().iter().enumerate() {
            if a > 0.0 {
                walk(u, 1, a, target, cap, &next, &mut hit);
            }
        }
    }
    let mut acc = 0.0;
    hit.iter()
        .map(|h| {
            acc += h;
            acc
        })
        .collect()
}

/// Coverage reward computed directly from the table definition.
pub fn brute_reward(table: &VisitProbTable, weights: &[f64], k: &[usize]) -> f64 {
    (0..table.num_nodes())
        .map(|u| {
            let miss: f64 = (0..table.num_layers()).map(|i| 1.0 - table.get(i, u, k[i])).product();
            weights[u] * (1.0 - miss)
        })
        .sum()
}

/// All allocations with `k <= caps` and `sum(k) <= budget`.
pub fn all_allocations(caps: &[usize], budget: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0; caps.len()];
    fn rec(i: usize, left: usize, caps: &[usize], cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == caps.len() {
            out.push(cur.clone());
            return;
        }
        for b in 0..=caps[i].min(left) {
            cur[i] = b;
            rec(i + 1, left - b, caps, cur, out);
        }
        cur[i] = 0;
    }
    rec(0, budget, caps, &mut cur, &mut out);
    out
}

/// Best reward over every feasible allocation.
pub fn brute_opt(table: &VisitProbTable, weights: &[f64], budget: usize) -> f64 {
    all_allocations(table.caps(), budget)
        .iter()
        .map(|k| brute_reward(table, weights, k))
        .fold(0.0, f64::max)
}

/// Uniform random allocation within the caps (ignores any budget).
pub fn random_point<R: Rng>(rng: &mut R, caps: &[usize]) -> Vec<usize> {
    caps.iter().map(|&c| rng.random_range(0..=c)).collect()
}
