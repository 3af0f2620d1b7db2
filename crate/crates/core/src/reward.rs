//! Expected reward of a budget allocation: the total weight of distinct nodes
//! the walkers are expected to visit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::visitprob::VisitProbTable;

/// Below this, `1 - P` is treated as zero and survival products are rebuilt directly.
const SATURATION_EPS: f64 = 1e-12;

/// Steps allocated to each layer.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BudgetAllocation(pub Vec<usize>);

impl BudgetAllocation {
    pub fn zeros(m: usize) -> Self {
        BudgetAllocation(vec![0; m])
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Checks `0 ≤ k_i ≤ c_i` and `Σ k_i ≤ budget`.
    pub fn validate(&self, caps: &[usize], budget: usize) -> Result<()> {
        check_caps(&self.0, caps)?;
        if self.total() > budget {
            return Err(Error::InfeasibleAllocation(format!(
                "allocation uses {} steps, budget is {budget}",
                self.total()
            )));
        }
        Ok(())
    }
}

impl From<Vec<usize>> for BudgetAllocation {
    fn from(k: Vec<usize>) -> Self {
        BudgetAllocation(k)
    }
}

fn check_caps(k: &[usize], caps: &[usize]) -> Result<()> {
    if k.len() != caps.len() {
        return Err(Error::InfeasibleAllocation(format!(
            "allocation has {} entries for {} layers",
            k.len(),
            caps.len()
        )));
    }
    if let Some(i) = (0..k.len()).find(|&i| k[i] > caps[i]) {
        return Err(Error::InfeasibleAllocation(format!(
            "layer {i} gets {} steps, cap is {}",
            k[i], caps[i]
        )));
    }
    Ok(())
}

fn check_weights(table: &VisitProbTable, weights: &[f64]) -> Result<()> {
    if weights.len() != table.num_nodes() {
        return Err(Error::Validation(format!(
            "{} weights for {} nodes",
            weights.len(),
            table.num_nodes()
        )));
    }
    Ok(())
}

/// Whether some node appears in more than one layer of the table.
pub fn table_overlapping(table: &VisitProbTable) -> bool {
    let mut seen = vec![false; table.num_nodes()];
    for i in 0..table.num_layers() {
        for &u in table.layer_nodes(i) {
            if std::mem::replace(&mut seen[u], true) {
                return true;
            }
        }
    }
    false
}

/// `Σ_u σ_u (1 - Π_i (1 - P_{i,u}(k_i)))`.
pub fn reward_overlapping(table: &VisitProbTable, weights: &[f64], k: &[usize]) -> Result<f64> {
    check_caps(k, table.caps())?;
    check_weights(table, weights)?;
    let mut survival = vec![1.0; table.num_nodes()];
    for (i, &ki) in k.iter().enumerate() {
        if ki == 0 {
            continue;
        }
        for (l, &u) in table.layer_nodes(i).iter().enumerate() {
            survival[u] *= 1.0 - table.curve(i, l)[ki];
        }
    }
    Ok(weights.iter().zip(&survival).map(|(s, p)| s * (1.0 - p)).sum())
}

/// `Σ_i Σ_{u ∈ V_i} σ_u P_{i,u}(k_i)`; layers must be disjoint.
pub fn reward_nonoverlapping(table: &VisitProbTable, weights: &[f64], k: &[usize]) -> Result<f64> {
    if table_overlapping(table) {
        return Err(Error::Overlap);
    }
    check_caps(k, table.caps())?;
    check_weights(table, weights)?;
    Ok(k.iter()
        .enumerate()
        .map(|(i, &ki)| layer_reward(table, weights, i, ki))
        .sum())
}

/// `r(j χ_i)`: reward of spending `j` steps on layer `i` alone.
pub fn layer_reward(table: &VisitProbTable, weights: &[f64], i: usize, j: usize) -> f64 {
    table
        .layer_nodes(i)
        .iter()
        .enumerate()
        .map(|(l, &u)| weights[u] * table.curve(i, l)[j])
        .sum()
}

/// Reward evaluator that keeps each node's survival product `p_u = Π_i (1 - P_{i,u}(k_i))`
/// so that adding steps to one layer only touches that layer's nodes.
#[derive(Debug, Clone)]
pub struct IncrementalEvaluator<'a> {
    table: &'a VisitProbTable,
    weights: &'a [f64],
    memberships: Vec<Vec<(usize, usize)>>,
    k: Vec<usize>,
    survival: Vec<f64>,
    reward: f64,
}

impl<'a> IncrementalEvaluator<'a> {
    /// Evaluator at the zero allocation.
    pub fn new(table: &'a VisitProbTable, weights: &'a [f64]) -> Result<Self> {
        check_weights(table, weights)?;
        Ok(IncrementalEvaluator {
            table,
            weights,
            memberships: table.memberships(),
            k: vec![0; table.num_layers()],
            survival: vec![1.0; table.num_nodes()],
            reward: 0.0,
        })
    }

    pub fn with_allocation(table: &'a VisitProbTable, weights: &'a [f64], k: &[usize]) -> Result<Self> {
        check_caps(k, table.caps())?;
        let mut eval = Self::new(table, weights)?;
        for (i, &ki) in k.iter().enumerate() {
            eval.apply(i, ki)?;
        }
        Ok(eval)
    }

    pub fn allocation(&self) -> &[usize] {
        &self.k
    }

    pub fn reward(&self) -> f64 {
        self.reward
    }

    pub fn survival(&self) -> &[f64] {
        &self.survival
    }

    pub fn remaining_cap(&self, i: usize) -> usize {
        self.table.cap(i) - self.k[i]
    }

    fn check_extension(&self, i: usize, b: usize) -> Result<()> {
        let cap = self.table.cap(i);
        if self.k[i] + b > cap {
            return Err(Error::CapExceeded {
                layer: i,
                requested: self.k[i] + b,
                cap,
            });
        }
        Ok(())
    }

    /// New survival product of the `local`-th node of layer `i` once `k_i` becomes `to`.
    fn updated_survival(&self, i: usize, local: usize, u: usize, to: usize) -> f64 {
        let curve = self.table.curve(i, local);
        let stay_old = 1.0 - curve[self.k[i]];
        let stay_new = 1.0 - curve[to];
        if stay_old >= SATURATION_EPS {
            self.survival[u] * stay_new / stay_old
        } else {
            self.memberships[u]
                .iter()
                .filter(|&&(j, _)| j != i)
                .map(|&(j, lj)| 1.0 - self.table.curve(j, lj)[self.k[j]])
                .product::<f64>()
                * stay_new
        }
    }

    /// `r(k + b χ_i) - r(k)`.
    pub fn gain(&self, i: usize, b: usize) -> Result<f64> {
        self.check_extension(i, b)?;
        if b == 0 {
            return Ok(0.0);
        }
        let to = self.k[i] + b;
        Ok(self
            .table
            .layer_nodes(i)
            .iter()
            .enumerate()
            .map(|(l, &u)| self.weights[u] * (self.survival[u] - self.updated_survival(i, l, u, to)))
            .sum())
    }

    /// Per-unit marginal gain `δ(i, b, k) = (r(k + b χ_i) - r(k)) / b`.
    pub fn per_unit_gain(&self, i: usize, b: usize) -> Result<f64> {
        let gain = self.gain(i, b)?;
        Ok(if b == 0 { 0.0 } else { gain / b as f64 })
    }

    /// Adds `b` steps to layer `i`.
    pub fn apply(&mut self, i: usize, b: usize) -> Result<()> {
        self.check_extension(i, b)?;
        if b == 0 {
            return Ok(());
        }
        let to = self.k[i] + b;
        let mut gain = 0.0;
        let nodes = self.table.layer_nodes(i);
        for (l, &u) in nodes.iter().enumerate() {
            let next = self.updated_survival(i, l, u, to);
            gain += self.weights[u] * (self.survival[u] - next);
            self.survival[u] = next;
        }
        self.k[i] = to;
        self.reward += gain;
        Ok(())
    }

    /// Reward recomputed from the table at the current allocation.
    pub fn recompute(&self) -> f64 {
        reward_overlapping(self.table, self.weights, &self.k).expect("evaluator allocation stays feasible")
    }
}
