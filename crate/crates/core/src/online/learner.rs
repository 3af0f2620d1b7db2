//! Bandit learners over visiting-probability arms and marginal-gain arms.

use std::collections::{HashMap, HashSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use super::{check_gamma, radius, ArmFamily, Observation, Oracle, Policy};
use crate::error::{Error, Result};
use crate::offline::{beg_with, bege_with, dp_allocate, opt_enumerate_with, SolveOptions};
use crate::visitprob::{LayerProbs, VisitProbTable};

/// What a learner knows up front.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaySpec {
    pub budget: usize,
    pub caps: Vec<usize>,
    /// Number of nodes `|V|` (or an upper bound on it).
    pub num_nodes: usize,
    pub gamma: f64,
    pub epsilon: f64,
    pub oracle: Oracle,
    pub solve: SolveOptions,
}

impl PlaySpec {
    pub fn new(budget: usize, caps: Vec<usize>, num_nodes: usize) -> Self {
        PlaySpec {
            budget,
            caps,
            num_nodes,
            gamma: 1.0,
            epsilon: 0.1,
            oracle: Oracle::Beg,
            solve: SolveOptions::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        check_gamma(self.gamma)?;
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::Config(format!("epsilon must lie in [0, 1], got {}", self.epsilon)));
        }
        if self.caps.is_empty() {
            return Err(Error::Config("at least one layer is needed".into()));
        }
        Ok(())
    }

    /// Everything on one uniformly chosen layer.
    fn dump<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        let m = self.caps.len();
        let i = rng.random_range(0..m);
        let mut k = vec![0; m];
        k[i] = self.caps[i].min(self.budget);
        k
    }
}

/// An online allocation policy.
pub trait Learner: Send {
    fn policy(&self) -> Policy;

    /// Allocation for round `t ≥ 1`; `rng` is the round's policy stream.
    fn choose(&mut self, t: usize, rng: &mut ChaCha8Rng) -> Result<Vec<usize>>;

    /// Feedback for the allocation `k` chosen this round.
    fn update(&mut self, k: &[usize], obs: &Observation, rng: &mut ChaCha8Rng);
}

/// Builds the learner for `policy` over the requested arm family.
pub fn make_learner(policy: Policy, family: ArmFamily, spec: PlaySpec) -> Result<Box<dyn Learner>> {
    Ok(match family {
        ArmFamily::Max => Box::new(MaxArmLearner::new(policy, spec)?),
        ArmFamily::Marginal => Box::new(MarginalArmLearner::new(policy, spec)?),
    })
}

fn beta_sample<R: Rng + ?Sized>(successes: f64, failures: f64, rng: &mut R) -> f64 {
    Beta::new(1.0 + successes, 1.0 + failures)
        .expect("positive shape parameters")
        .sample(rng)
}

/// Learner over arms `(layer, node slot, budget)` estimating visiting probabilities:
/// CUCB-MAX, CUCB-MAX-R and the EMP, ε-greedy and Thompson-sampling baselines.
#[derive(Debug, Clone)]
pub struct MaxArmLearner {
    policy: Policy,
    spec: PlaySpec,
    plays: Vec<Vec<u32>>,
    means: Vec<Vec<f64>>,
    successes: Vec<Vec<f64>>,
    sigma_bar: Vec<f64>,
    weight_plays: Vec<u32>,
    weight_means: Vec<f64>,
    slot_of: HashMap<usize, usize>,
    last_ucb: Option<VisitProbTable>,
    last_weights: Vec<f64>,
}

impl MaxArmLearner {
    pub fn new(policy: Policy, spec: PlaySpec) -> Result<Self> {
        spec.validate()?;
        if policy == Policy::CucbMg {
            return Err(Error::Config("cucb-mg learns marginal-gain arms".into()));
        }
        let n = spec.num_nodes;
        let arms = |c: &usize| n * c;
        Ok(MaxArmLearner {
            policy,
            plays: spec.caps.iter().map(|c| vec![0; arms(c)]).collect(),
            means: spec.caps.iter().map(|c| vec![0.0; arms(c)]).collect(),
            successes: spec.caps.iter().map(|c| vec![0.0; arms(c)]).collect(),
            sigma_bar: vec![1.0; n],
            weight_plays: vec![0; n],
            weight_means: vec![0.0; n],
            slot_of: HashMap::new(),
            last_ucb: None,
            last_weights: Vec::new(),
            spec,
        })
    }

    fn arm(&self, i: usize, slot: usize, b: usize) -> usize {
        slot * self.spec.caps[i] + (b - 1)
    }

    pub fn plays(&self, i: usize, slot: usize, b: usize) -> u32 {
        self.plays[i][self.arm(i, slot, b)]
    }

    pub fn mean(&self, i: usize, slot: usize, b: usize) -> f64 {
        self.means[i][self.arm(i, slot, b)]
    }

    /// Placeholder slot assigned to a node label, once the node has been seen.
    pub fn slot(&self, label: usize) -> Option<usize> {
        self.slot_of.get(&label).copied()
    }

    /// Optimistic node weights per slot as last used by the oracle.
    pub fn sigma_bar(&self) -> &[f64] {
        &self.sigma_bar
    }

    /// Monotonised index table handed to the oracle in the last round, if any.
    pub fn last_ucb(&self) -> Option<&VisitProbTable> {
        self.last_ucb.as_ref()
    }

    /// Weight UCBs handed to the oracle in the last round.
    pub fn last_weights(&self) -> &[f64] {
        &self.last_weights
    }

    fn index_table<R: Rng + ?Sized>(&self, t: usize, rng: &mut R) -> Result<VisitProbTable> {
        let n = self.spec.num_nodes;
        let layers = self
            .spec
            .caps
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let mut values = Vec::with_capacity(n * (c + 1));
                for slot in 0..n {
                    values.push(0.0);
                    let mut running = 0.0_f64;
                    for b in 1..=c {
                        let a = slot * c + (b - 1);
                        let (plays, mean) = (self.plays[i][a], self.means[i][a]);
                        let tilde = match self.policy {
                            Policy::CucbMax | Policy::CucbMaxR => (mean + radius(t, plays, self.spec.gamma)).min(1.0),
                            Policy::Emp | Policy::EpsGreedy => mean,
                            Policy::Ts => {
                                let s = self.successes[i][a];
                                beta_sample(s, plays as f64 - s, rng)
                            }
                            Policy::CucbMg => unreachable!("rejected at construction"),
                        };
                        running = running.max(tilde);
                        values.push(running);
                    }
                }
                LayerProbs {
                    nodes: (0..n).collect(),
                    values,
                }
            })
            .collect();
        VisitProbTable::from_parts(n, self.spec.caps.clone(), layers, 0.0)
    }

    fn oracle_weights(&self, t: usize) -> Vec<f64> {
        match self.policy {
            Policy::CucbMaxR => self
                .weight_means
                .iter()
                .zip(&self.weight_plays)
                .map(|(&mean, &plays)| (mean + radius(t, plays, self.spec.gamma)).min(1.0))
                .collect(),
            _ => self.sigma_bar.clone(),
        }
    }
}

impl Learner for MaxArmLearner {
    fn policy(&self) -> Policy {
        self.policy
    }

    fn choose(&mut self, t: usize, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
        if self.policy == Policy::EpsGreedy && rng.random_bool(self.spec.epsilon) {
            return Ok(self.spec.dump(rng));
        }
        let table = self.index_table(t, rng)?;
        let weights = self.oracle_weights(t);
        let budget = self.spec.budget;
        let result = match self.spec.oracle {
            Oracle::Beg => beg_with(&table, &weights, budget, &self.spec.solve)?,
            Oracle::Bege => bege_with(&table, &weights, budget, &self.spec.solve)?,
            Oracle::Opt => opt_enumerate_with(&table, &weights, budget, self.spec.solve.enumeration_limit)?,
        };
        self.last_ucb = Some(table);
        self.last_weights = weights;
        Ok(result.allocation.0)
    }

    fn update(&mut self, k: &[usize], obs: &Observation, _rng: &mut ChaCha8Rng) {
        let n = self.spec.num_nodes;
        for walk in &obs.walks {
            for &label in walk {
                let next = self.slot_of.len();
                if next < n {
                    self.slot_of.entry(label).or_insert(next);
                }
            }
        }
        for &(label, w) in &obs.weights {
            let Some(slot) = self.slot(label) else { continue };
            if self.policy == Policy::CucbMaxR {
                self.weight_plays[slot] += 1;
                self.weight_means[slot] += (w - self.weight_means[slot]) / self.weight_plays[slot] as f64;
            } else {
                self.sigma_bar[slot] = w;
            }
        }
        let mut first = vec![usize::MAX; n];
        for (i, (&ki, walk)) in k.iter().zip(&obs.walks).enumerate() {
            if ki == 0 {
                continue;
            }
            first.iter_mut().for_each(|f| *f = usize::MAX);
            for (j, label) in walk.iter().enumerate() {
                if let Some(slot) = self.slot(*label) {
                    first[slot] = first[slot].min(j + 1);
                }
            }
            let c = self.spec.caps[i];
            for (slot, &f) in first.iter().enumerate() {
                for b in 1..=ki {
                    let a = slot * c + (b - 1);
                    let y = if f <= b { 1.0 } else { 0.0 };
                    self.plays[i][a] += 1;
                    self.means[i][a] += (y - self.means[i][a]) / self.plays[i][a] as f64;
                    self.successes[i][a] += y;
                }
            }
        }
    }
}

/// Learner over arms `(layer, budget)` estimating layer-level marginal gains,
/// driven by the exact DP oracle: CUCB-MG and the EMP, ε-greedy and
/// Thompson-sampling baselines.
#[derive(Debug, Clone)]
pub struct MarginalArmLearner {
    policy: Policy,
    spec: PlaySpec,
    plays: Vec<Vec<u32>>,
    means: Vec<Vec<f64>>,
    successes: Vec<Vec<f64>>,
}

impl MarginalArmLearner {
    pub fn new(policy: Policy, spec: PlaySpec) -> Result<Self> {
        spec.validate()?;
        if matches!(policy, Policy::CucbMax | Policy::CucbMaxR) {
            return Err(Error::Config(format!("{policy} learns visiting-probability arms")));
        }
        Ok(MarginalArmLearner {
            policy,
            plays: spec.caps.iter().map(|&c| vec![0; c]).collect(),
            means: spec.caps.iter().map(|&c| vec![1.0; c]).collect(),
            successes: spec.caps.iter().map(|&c| vec![0.0; c]).collect(),
            spec,
        })
    }

    pub fn plays(&self, i: usize, b: usize) -> u32 {
        self.plays[i][b - 1]
    }

    pub fn mean(&self, i: usize, b: usize) -> f64 {
        self.means[i][b - 1]
    }
}

impl Learner for MarginalArmLearner {
    fn policy(&self) -> Policy {
        self.policy
    }

    fn choose(&mut self, t: usize, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
        if self.policy == Policy::EpsGreedy && rng.random_bool(self.spec.epsilon) {
            return Ok(self.spec.dump(rng));
        }
        let curves: Vec<Vec<f64>> = (0..self.spec.caps.len())
            .map(|i| {
                let mut curve = vec![0.0];
                let mut total = 0.0;
                for (a, (&plays, &mean)) in self.plays[i].iter().zip(&self.means[i]).enumerate() {
                    total += match self.policy {
                        Policy::CucbMg => (mean + radius(t, plays, self.spec.gamma)).min(1.0),
                        Policy::Emp | Policy::EpsGreedy => mean,
                        Policy::Ts => {
                            let s = self.successes[i][a];
                            beta_sample(s, plays as f64 - s, rng)
                        }
                        Policy::CucbMax | Policy::CucbMaxR => unreachable!("rejected at construction"),
                    };
                    curve.push(total);
                }
                curve
            })
            .collect();
        Ok(dp_allocate(&curves, self.spec.budget).0)
    }

    fn update(&mut self, k: &[usize], obs: &Observation, rng: &mut ChaCha8Rng) {
        let weight: HashMap<usize, f64> = obs.weights.iter().copied().collect();
        for (i, (&ki, walk)) in k.iter().zip(&obs.walks).enumerate() {
            let mut seen = HashSet::new();
            for (j, label) in walk.iter().take(ki).enumerate() {
                let y = if seen.insert(*label) {
                    weight.get(label).copied().unwrap_or(0.0)
                } else {
                    0.0
                };
                self.plays[i][j] += 1;
                self.means[i][j] += (y - self.means[i][j]) / self.plays[i][j] as f64;
                if self.policy == Policy::Ts {
                    // Bernoulli(y) keeps the Beta posterior conjugate for y in [0, 1]
                    if rng.random_bool(y.clamp(0.0, 1.0)) {
                        self.successes[i][j] += 1.0;
                    }
                }
            }
        }
    }
}
