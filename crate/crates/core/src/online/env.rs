//! Exploration environment: plays an allocation by sampling walks.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::LayeredNetwork;
use crate::visitprob::WalkSampler;

/// Stream used for a learner's own randomness in a round.
pub const POLICY_LANE: u64 = u64::MAX;
/// Stream used for random node-weight draws in a round.
pub const WEIGHT_LANE: u64 = u64::MAX - 1;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent generator for `(seed, run, round, lane)`; walks use the layer index as lane.
pub fn stream_rng(seed: u64, run: u64, round: u64, lane: u64) -> ChaCha8Rng {
    let key = splitmix(splitmix(splitmix(splitmix(seed) ^ run) ^ round) ^ lane);
    ChaCha8Rng::seed_from_u64(key)
}

/// Walk of one layer, as global node indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub layer: usize,
    pub nodes: Vec<usize>,
}

/// Samples one independent walk per layer; layer `i` walks `k[i]` steps.
pub fn sample_trajectories<R: Rng + ?Sized>(network: &LayeredNetwork, k: &[usize], rng: &mut R) -> Vec<Trajectory> {
    let mut local = Vec::new();
    network
        .layers()
        .iter()
        .zip(k)
        .map(|(layer, &steps)| {
            WalkSampler::new(layer).sample(steps, rng, &mut local);
            Trajectory {
                layer: layer.index(),
                nodes: local.iter().map(|&l| layer.global(l)).collect(),
            }
        })
        .collect()
}

/// What a learner sees after a round.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// Node labels of each layer's walk, in step order.
    pub walks: Vec<Vec<usize>>,
    /// `(label, weight)` for each distinct visited node, in order of discovery.
    pub weights: Vec<(usize, f64)>,
    /// Total weight of distinct visited nodes.
    pub realized: f64,
}

/// A network explored with fresh walks every round.
#[derive(Debug, Clone)]
pub struct Environment<'a> {
    network: &'a LayeredNetwork,
    samplers: Vec<WalkSampler>,
    labels: Vec<usize>,
    random_weights: bool,
}

impl<'a> Environment<'a> {
    pub fn new(network: &'a LayeredNetwork) -> Self {
        Environment {
            network,
            samplers: network.layers().iter().map(WalkSampler::new).collect(),
            labels: (0..network.num_nodes()).collect(),
            random_weights: false,
        }
    }

    /// Reports node `g` as `labels[g]`; `labels` must be a permutation-like injection.
    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.network.num_nodes() || labels.iter().collect::<HashSet<_>>().len() != labels.len() {
            return Err(Error::Config("node labels must be distinct, one per node".into()));
        }
        self.labels = labels;
        Ok(self)
    }

    /// Node weights are revealed as Bernoulli draws with mean `σ` on every visit.
    pub fn with_random_weights(mut self, on: bool) -> Self {
        self.random_weights = on;
        self
    }

    pub fn network(&self) -> &LayeredNetwork {
        self.network
    }

    /// Plays `k` in round `round` of run `run`.
    pub fn play(&self, k: &[usize], seed: u64, run: u64, round: u64) -> Observation {
        let mut walks = Vec::with_capacity(k.len());
        let mut seen = HashSet::new();
        let mut order = Vec::new();
        let mut local = Vec::new();
        for (i, (&steps, sampler)) in k.iter().zip(&self.samplers).enumerate() {
            let mut rng = stream_rng(seed, run, round, i as u64);
            sampler.sample(steps, &mut rng, &mut local);
            let layer = self.network.layer(i);
            let walk: Vec<usize> = local.iter().map(|&l| layer.global(l)).collect();
            for &g in &walk {
                if seen.insert(g) {
                    order.push(g);
                }
            }
            walks.push(walk.iter().map(|&g| self.labels[g]).collect());
        }
        let sigma = self.network.weights();
        let mut weight_rng = stream_rng(seed, run, round, WEIGHT_LANE);
        let weights: Vec<(usize, f64)> = order
            .iter()
            .map(|&g| {
                let w = if self.random_weights {
                    if weight_rng.random_bool(sigma[g].clamp(0.0, 1.0)) {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    sigma[g]
                };
                (self.labels[g], w)
            })
            .collect();
        let realized = weights.iter().map(|&(_, w)| w).sum();
        Observation {
            walks,
            weights,
            realized,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{NetworkBuilder, Start};

    fn cycle() -> LayeredNetwork {
        NetworkBuilder::new()
            .layer("c", &[("a", "b", 1.0), ("b", "a", 1.0)], Start::SmallestNode, 3)
            .build()
            .unwrap()
    }

    #[test]
    fn deterministic_cycle_walk() {
        let net = cycle();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let t = sample_trajectories(&net, &[2], &mut rng);
            assert_eq!(t[0].nodes, vec![0, 1]);
        }
        assert!(sample_trajectories(&net, &[0], &mut rng)[0].nodes.is_empty());
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = stream_rng(1, 2, 3, 4).random();
        let b: u64 = stream_rng(1, 2, 3, 4).random();
        let c: u64 = stream_rng(1, 2, 4, 3).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn play_reports_labels_and_weights() {
        let net = cycle().with_weights(vec![0.5, 1.0]).unwrap();
        let env = Environment::new(&net).with_labels(vec![10, 20]).unwrap();
        let obs = env.play(&[3], 0, 0, 1);
        assert_eq!(obs.walks, vec![vec![10, 20, 10]]);
        assert_eq!(obs.weights, vec![(10, 0.5), (20, 1.0)]);
        assert_eq!(obs.realized, 1.5);
        assert!(Environment::new(&net).with_labels(vec![1, 1]).is_err());
    }
}
