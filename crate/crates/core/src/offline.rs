//! Offline budget allocation: greedy solvers, exact dynamic programming for
//! disjoint layers, exhaustive search and proportional baselines.
//!
//! Every solver reads the budget caps `c` from the table it is given and
//! breaks ties towards the lowest layer index, then the smallest step count.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::clock::Stopwatch;
use crate::error::{Error, Result};
use crate::reward::{layer_reward, reward_overlapping, table_overlapping, BudgetAllocation, IncrementalEvaluator};
use crate::visitprob::{marginal_gains, MarginalGainTable, VisitProbTable};

/// Slack used when comparing objective values.
pub const TIE_EPS: f64 = 1e-12;

/// Default cap on the number of candidates the enumerating solvers may visit.
pub const DEFAULT_ENUMERATION_LIMIT: u128 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Beg,
    Bege,
    Mg,
    MgNo,
    Dp,
    Opt,
    PropS,
    PropW,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Algorithm::Beg,
        Algorithm::Bege,
        Algorithm::Mg,
        Algorithm::MgNo,
        Algorithm::Dp,
        Algorithm::Opt,
        Algorithm::PropS,
        Algorithm::PropW,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Beg => "beg",
            Algorithm::Bege => "bege",
            Algorithm::Mg => "mg",
            Algorithm::MgNo => "mg-no",
            Algorithm::Dp => "dp",
            Algorithm::Opt => "opt",
            Algorithm::PropS => "prop-s",
            Algorithm::PropW => "prop-w",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverResult {
    pub allocation: BudgetAllocation,
    pub reward: f64,
    pub algo: String,
    pub millis: f64,
    pub evaluations: u64,
}

/// Approximation constants of the greedy solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxConstants {
    /// Root of `e^η = 2 - η`.
    pub eta: f64,
    /// `1 - e^{-η}`.
    pub ratio_beg: f64,
    /// `1 - 1/e`.
    pub ratio_mg: f64,
}

impl ApproxConstants {
    pub fn get() -> &'static ApproxConstants {
        static CONSTANTS: OnceLock<ApproxConstants> = OnceLock::new();
        CONSTANTS.get_or_init(|| {
            let f = |x: f64| x.exp() - (2.0 - x);
            let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
            while hi - lo > 1e-14 {
                let mid = 0.5 * (lo + hi);
                if f(mid) > 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let eta = 0.5 * (lo + hi);
            ApproxConstants {
                eta,
                ratio_beg: 1.0 - (-eta).exp(),
                ratio_mg: 1.0 - (-1.0_f64).exp(),
            }
        })
    }
}

/// How BEG shrinks its candidate queue after a pick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BegVariant {
    /// Only the chosen layer's pairs shift; a pair that does not fit is dropped.
    #[default]
    Equivalent,
    /// Every layer's pairs shift by the chosen step count.
    Literal,
}

impl FromStr for BegVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "equivalent" => Ok(BegVariant::Equivalent),
            "literal" => Ok(BegVariant::Literal),
            _ => Err(Error::Config(format!("unknown BEG variant `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub beg_variant: BegVariant,
    /// Re-evaluate stale candidates only when they could still win.
    pub lazy: bool,
    pub enumeration_limit: u128,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            beg_variant: BegVariant::Equivalent,
            lazy: false,
            enumeration_limit: DEFAULT_ENUMERATION_LIMIT,
        }
    }
}

/// Runs `algo` with budget `budget` on the table's caps.
pub fn solve(algo: Algorithm, table: &VisitProbTable, weights: &[f64], budget: usize, opts: &SolveOptions) -> Result<SolverResult> {
    match algo {
        Algorithm::Beg => beg_with(table, weights, budget, opts),
        Algorithm::Bege => bege_with(table, weights, budget, opts),
        Algorithm::Mg => mg(table, weights, budget),
        Algorithm::MgNo => mg_nonoverlapping(table, weights, budget),
        Algorithm::Dp => dp_nonoverlapping(table, weights, budget),
        Algorithm::Opt => opt_enumerate_with(table, weights, budget, opts.enumeration_limit),
        Algorithm::PropS => baseline_prop(table, weights, budget, PropMode::Size),
        Algorithm::PropW => baseline_prop(table, weights, budget, PropMode::Weight),
    }
}

fn finish(algo: Algorithm, table: &VisitProbTable, weights: &[f64], k: Vec<usize>, clock: Stopwatch, evaluations: u64) -> Result<SolverResult> {
    let reward = reward_overlapping(table, weights, &k)?;
    Ok(SolverResult {
        allocation: BudgetAllocation(k),
        reward,
        algo: algo.name().to_string(),
        millis: clock.millis(),
        evaluations,
    })
}

/// Index of the winner among `values`: the first entry within [`TIE_EPS`] of the maximum.
fn first_near_max(values: impl Iterator<Item = f64> + Clone) -> Option<usize> {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return None;
    }
    values.into_iter().position(|v| v >= max - TIE_EPS)
}

/// Budget-effective greedy with default options.
pub fn beg(table: &VisitProbTable, weights: &[f64], budget: usize) -> Result<SolverResult> {
    beg_with(table, weights, budget, &SolveOptions::default())
}

pub fn beg_with(table: &VisitProbTable, weights: &[f64], budget: usize, opts: &SolveOptions) -> Result<SolverResult> {
    let clock = Stopwatch::start();
    let mut eval = IncrementalEvaluator::new(table, weights)?;
    let mut evaluations = 0;
    greedy_complete(&mut eval, budget, opts.beg_variant, opts.lazy, &mut evaluations)?;
    let mut best = eval.allocation().to_vec();
    let mut best_reward = eval.reward();
    for i in 0..table.num_layers() {
        let steps = table.cap(i).min(budget);
        let r = layer_reward(table, weights, i, steps);
        evaluations += 1;
        if r > best_reward + TIE_EPS {
            best = vec![0; table.num_layers()];
            best[i] = steps;
            best_reward = r;
        }
    }
    finish(Algorithm::Beg, table, weights, best, clock, evaluations)
}

/// Greedy loop of BEG starting from the evaluator's current allocation.
fn greedy_complete(eval: &mut IncrementalEvaluator<'_>, budget: usize, variant: BegVariant, lazy: bool, evaluations: &mut u64) -> Result<()> {
    let m = eval.allocation().len();
    let used: usize = eval.allocation().iter().sum();
    let mut left = budget.saturating_sub(used);
    let mut queue: Vec<Vec<usize>> = (0..m).map(|i| (1..=eval.remaining_cap(i)).collect()).collect();
    // value of each pair and whether it was computed at the current allocation
    let mut value: Vec<Vec<f64>> = queue.iter().map(|q| vec![f64::INFINITY; q.len()]).collect();
    let mut fresh: Vec<Vec<bool>> = queue.iter().map(|q| vec![false; q.len()]).collect();

    while left > 0 && queue.iter().any(|q| !q.is_empty()) {
        if variant == BegVariant::Literal {
            for i in 0..m {
                let keep: Vec<bool> = queue[i].iter().map(|&b| b <= left).collect();
                retain_by(&mut queue[i], &keep);
                retain_by(&mut value[i], &keep);
                retain_by(&mut fresh[i], &keep);
            }
            if queue.iter().all(|q| q.is_empty()) {
                break;
            }
        }
        if lazy {
            refresh_lazily(eval, &queue, &mut value, &mut fresh, evaluations)?;
        } else {
            for i in 0..m {
                for (j, &b) in queue[i].iter().enumerate() {
                    value[i][j] = eval.per_unit_gain(i, b)?;
                    fresh[i][j] = true;
                    *evaluations += 1;
                }
            }
        }
        let flat = || {
            (0..m).flat_map(|i| {
                (0..queue[i].len()).map(move |j| (i, j))
            })
        };
        let candidates = flat().filter(|&(i, j)| fresh[i][j]);
        let Some(pos) = first_near_max(candidates.clone().map(|(i, j)| value[i][j])) else {
            break;
        };
        let (bi, bj) = candidates.clone().nth(pos).expect("winner exists");
        let b_star = queue[bi][bj];
        if b_star <= left {
            eval.apply(bi, b_star)?;
            left -= b_star;
            let shifted: Vec<usize> = match variant {
                BegVariant::Equivalent => vec![bi],
                BegVariant::Literal => (0..m).collect(),
            };
            for i in shifted {
                let keep: Vec<bool> = queue[i].iter().map(|&b| b > b_star).collect();
                retain_by(&mut queue[i], &keep);
                retain_by(&mut value[i], &keep);
                retain_by(&mut fresh[i], &keep);
                for b in queue[i].iter_mut() {
                    *b -= b_star;
                }
                value[i].iter_mut().for_each(|v| *v = f64::INFINITY);
            }
            // values computed before the pick are now upper bounds
            fresh.iter_mut().flatten().for_each(|f| *f = false);
        } else {
            queue[bi].remove(bj);
            value[bi].remove(bj);
            fresh[bi].remove(bj);
        }
    }
    Ok(())
}

fn retain_by<T>(items: &mut Vec<T>, keep: &[bool]) {
    let mut it = keep.iter();
    items.retain(|_| *it.next().expect("mask matches"));
}

/// Refreshes stale candidates in decreasing order of their bound until no stale
/// bound can reach the best refreshed value.
fn refresh_lazily(
    eval: &IncrementalEvaluator<'_>,
    queue: &[Vec<usize>],
    value: &mut [Vec<f64>],
    fresh: &mut [Vec<bool>],
    evaluations: &mut u64,
) -> Result<()> {
    let mut order: Vec<(usize, usize)> = (0..queue.len())
        .flat_map(|i| (0..queue[i].len()).map(move |j| (i, j)))
        .collect();
    order.sort_by(|&(a, x), &(b, y)| value[b][y].total_cmp(&value[a][x]).then((a, x).cmp(&(b, y))));
    let mut found = f64::NEG_INFINITY;
    for (i, j) in order {
        if fresh[i][j] {
            found = found.max(value[i][j]);
            continue;
        }
        if value[i][j] < found - TIE_EPS - 1e-9 {
            break;
        }
        value[i][j] = eval.per_unit_gain(i, queue[i][j])?;
        fresh[i][j] = true;
        *evaluations += 1;
        found = found.max(value[i][j]);
    }
    Ok(())
}

/// Number of allocations with at most three non-zero layers within budget and caps.
pub fn partial_count(caps: &[usize], budget: usize) -> u128 {
    // ways[s][b]: vectors over the layers so far with s non-zero entries summing to b
    let mut ways = vec![vec![0u128; budget + 1]; 4];
    ways[0][0] = 1;
    for &c in caps {
        let mut next = ways.clone();
        for s in 0..3 {
            for b in 0..=budget {
                if ways[s][b] == 0 {
                    continue;
                }
                for j in 1..=c.min(budget - b) {
                    next[s + 1][b + j] = next[s + 1][b + j].saturating_add(ways[s][b]);
                }
            }
        }
        ways = next;
    }
    ways.iter().flatten().fold(0u128, |a, &x| a.saturating_add(x))
}

/// Greedy with partial enumeration over all starts touching at most three layers.
pub fn bege(table: &VisitProbTable, weights: &[f64], budget: usize) -> Result<SolverResult> {
    bege_with(table, weights, budget, &SolveOptions::default())
}

pub fn bege_with(table: &VisitProbTable, weights: &[f64], budget: usize, opts: &SolveOptions) -> Result<SolverResult> {
    let clock = Stopwatch::start();
    let caps = table.caps().to_vec();
    let count = partial_count(&caps, budget);
    if count > opts.enumeration_limit {
        return Err(Error::EnumerationTooLarge {
            count,
            limit: opts.enumeration_limit,
        });
    }
    let m = caps.len();
    let mut eval = IncrementalEvaluator::new(table, weights)?;
    let mut evaluations = 0;
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut partial = vec![0; m];
    let mut visit = |partial: &[usize]| -> Result<()> {
        eval = IncrementalEvaluator::with_allocation(table, weights, partial)?;
        greedy_complete(&mut eval, budget, opts.beg_variant, opts.lazy, &mut evaluations)?;
        let r = eval.reward();
        if best.as_ref().is_none_or(|(_, b)| r > b + TIE_EPS) {
            best = Some((eval.allocation().to_vec(), r));
        }
        Ok(())
    };
    enumerate_partials(&caps, budget, 0, 3, &mut partial, &mut visit)?;
    let (k, _) = best.expect("the zero allocation is always enumerated");
    finish(Algorithm::Bege, table, weights, k, clock, evaluations)
}

fn enumerate_partials(
    caps: &[usize],
    left: usize,
    from: usize,
    slots: usize,
    partial: &mut Vec<usize>,
    visit: &mut dyn FnMut(&[usize]) -> Result<()>,
) -> Result<()> {
    visit(partial)?;
    if slots == 0 {
        return Ok(());
    }
    for i in from..caps.len() {
        for j in 1..=caps[i].min(left) {
            partial[i] = j;
            enumerate_partials(caps, left - j, i + 1, slots - 1, partial, visit)?;
        }
        partial[i] = 0;
    }
    Ok(())
}

/// Myopic greedy: one step at a time to the layer with the largest gain.
pub fn mg(table: &VisitProbTable, weights: &[f64], budget: usize) -> Result<SolverResult> {
    let clock = Stopwatch::start();
    let mut eval = IncrementalEvaluator::new(table, weights)?;
    let mut evaluations = 0;
    for _ in 0..budget {
        let gains: Vec<f64> = (0..table.num_layers())
            .map(|i| {
                if eval.remaining_cap(i) == 0 {
                    f64::NEG_INFINITY
                } else {
                    evaluations += 1;
                    eval.gain(i, 1).expect("layer has room")
                }
            })
            .collect();
        match first_near_max(gains.iter().copied()) {
            Some(i) if gains[i] > f64::NEG_INFINITY => eval.apply(i, 1)?,
            _ => break,
        }
    }
    finish(Algorithm::Mg, table, weights, eval.allocation().to_vec(), clock, evaluations)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapEntry {
    gain: f64,
    layer: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then_with(|| other.layer.cmp(&self.layer))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Picks the `budget` largest layer-level gains, taking each layer's gains in order.
/// Returns the allocation and the sum of the picked gains.
pub fn mg_from_gains(gains: &MarginalGainTable, budget: usize) -> (Vec<usize>, f64) {
    let m = gains.num_layers();
    let mut k = vec![0; m];
    let mut heap: BinaryHeap<HeapEntry> = (0..m)
        .filter(|&i| gains.cap(i) > 0)
        .map(|i| HeapEntry {
            gain: gains.layer(i)[1],
            layer: i,
        })
        .collect();
    let mut total = 0.0;
    for _ in 0..budget {
        let Some(HeapEntry { gain, layer }) = heap.pop() else {
            break;
        };
        k[layer] += 1;
        total += gain;
        if k[layer] < gains.cap(layer) {
            heap.push(HeapEntry {
                gain: gains.layer(layer)[k[layer] + 1],
                layer,
            });
        }
    }
    (k, total)
}

/// Myopic greedy for disjoint layers driven by a priority queue of layer-level gains.
pub fn mg_nonoverlapping(table: &VisitProbTable, weights: &[f64], budget: usize) -> Result<SolverResult> {
    if table_overlapping(table) {
        return Err(Error::Overlap);
    }
    let clock = Stopwatch::start();
    let gains = marginal_gains(table, weights);
    let (k, _) = mg_from_gains(&gains, budget);
    let evaluations = k.iter().sum::<usize>() as u64;
    finish(Algorithm::MgNo, table, weights, k, clock, evaluations)
}

/// Exact knapsack-style DP over per-layer reward curves `curves[i][j]`, `j = 0..=c_i`.
/// Curves need not be monotone. Returns the allocation and its value.
pub fn dp_allocate(curves: &[Vec<f64>], budget: usize) -> (Vec<usize>, f64) {
    let m = curves.len();
    let mut value = vec![vec![0.0; budget + 1]; m + 1];
    let mut choice = vec![vec![0usize; budget + 1]; m + 1];
    for i in 0..m {
        let cap = curves[i].len().saturating_sub(1);
        for b in 0..=budget {
            let options = (0..=cap.min(b)).map(|j| value[i][b - j] + curves[i][j]);
            let j = first_near_max(options.clone()).unwrap_or(0);
            value[i + 1][b] = options.clone().nth(j).unwrap_or(0.0);
            choice[i + 1][b] = j;
        }
    }
    let mut k = vec![0; m];
    let mut b = budget;
    for i in (0..m).rev() {
        k[i] = choice[i + 1][b];
        b -= k[i];
    }
    (k, value[m][budget])
}

/// Exact optimum for disjoint layers and any starting distribution.
pub fn dp_nonoverlapping(table: &VisitProbTable, weights: &[f64], budget: usize) -> Result<SolverResult> {
    if table_overlapping(table) {
        return Err(Error::Overlap);
    }
    let clock = Stopwatch::start();
    let curves: Vec<Vec<f64>> = (0..table.num_layers())
        .map(|i| (0..=table.cap(i)).map(|j| layer_reward(table, weights, i, j)).collect())
        .collect();
    let evaluations = curves.iter().map(|c| c.len() as u64).sum();
    let (k, _) = dp_allocate(&curves, budget);
    finish(Algorithm::Dp, table, weights, k, clock, evaluations)
}

/// Exhaustive search over every feasible allocation.
pub fn opt_enumerate(table: &VisitProbTable, weights: &[f64], budget: usize) -> Result<SolverResult> {
    opt_enumerate_with(table, weights, budget, DEFAULT_ENUMERATION_LIMIT)
}

pub fn opt_enumerate_with(table: &VisitProbTable, weights: &[f64], budget: usize, limit: u128) -> Result<SolverResult> {
    let count = table
        .caps()
        .iter()
        .fold(1u128, |acc, &c| acc.saturating_mul(c.min(budget) as u128 + 1));
    if count > limit {
        return Err(Error::EnumerationTooLarge { count, limit });
    }
    if weights.len() != table.num_nodes() {
        return Err(Error::Validation(format!(
            "{} weights for {} nodes",
            weights.len(),
            table.num_nodes()
        )));
    }
    let clock = Stopwatch::start();
    let m = table.num_layers();
    let mut search = OptSearch {
        table,
        weights,
        k: vec![0; m],
        best: vec![0; m],
        best_reward: f64::NEG_INFINITY,
        evaluations: 0,
    };
    let survival = vec![1.0; table.num_nodes()];
    search.descend(0, budget, survival);
    let OptSearch { best, evaluations, .. } = search;
    finish(Algorithm::Opt, table, weights, best, clock, evaluations)
}

struct OptSearch<'a> {
    table: &'a VisitProbTable,
    weights: &'a [f64],
    k: Vec<usize>,
    best: Vec<usize>,
    best_reward: f64,
    evaluations: u64,
}

impl OptSearch<'_> {
    fn descend(&mut self, i: usize, left: usize, survival: Vec<f64>) {
        if i == self.table.num_layers() {
            let r: f64 = self.weights.iter().zip(&survival).map(|(s, p)| s * (1.0 - p)).sum();
            self.evaluations += 1;
            if r > self.best_reward + TIE_EPS {
                self.best_reward = r;
                self.best.clone_from(&self.k);
            }
            return;
        }
        let nodes = self.table.layer_nodes(i);
        for j in 0..=self.table.cap(i).min(left) {
            self.k[i] = j;
            let mut next = survival.clone();
            if j > 0 {
                for (l, &u) in nodes.iter().enumerate() {
                    next[u] *= 1.0 - self.table.curve(i, l)[j];
                }
            }
            self.descend(i + 1, left - j, next);
        }
        self.k[i] = 0;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PropMode {
    /// Proportional to layer sizes.
    Size,
    /// Proportional to the reward of an even split spent on each layer alone.
    Weight,
}

/// Proportional split of `budget` using largest-remainder rounding and the caps.
pub fn proportional_split(shares: &[f64], budget: usize, caps: &[usize]) -> Vec<usize> {
    let m = shares.len();
    let total: f64 = shares.iter().sum();
    let shares: Vec<f64> = if total > 0.0 {
        shares.to_vec()
    } else {
        vec![1.0; m]
    };
    let total: f64 = shares.iter().sum();
    let ideal: Vec<f64> = shares.iter().map(|s| budget as f64 * s / total).collect();
    let mut k: Vec<usize> = ideal.iter().map(|x| x.floor() as usize).collect();
    let remainder: Vec<f64> = ideal.iter().zip(&k).map(|(x, &f)| x - f as f64).collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| remainder[b].total_cmp(&remainder[a]).then(a.cmp(&b)));
    let assigned: usize = k.iter().sum();
    for &i in order.iter().cycle().take(budget.saturating_sub(assigned)) {
        k[i] += 1;
    }
    let mut spare = 0;
    for i in 0..m {
        if k[i] > caps[i] {
            spare += k[i] - caps[i];
            k[i] = caps[i];
        }
    }
    // one step per open layer per pass, in remainder order
    while spare > 0 && (0..m).any(|i| k[i] < caps[i]) {
        for &j in &order {
            if spare > 0 && k[j] < caps[j] {
                k[j] += 1;
                spare -= 1;
            }
        }
    }
    k
}

pub fn baseline_prop(table: &VisitProbTable, weights: &[f64], budget: usize, mode: PropMode) -> Result<SolverResult> {
    let clock = Stopwatch::start();
    let m = table.num_layers();
    let (shares, algo, evaluations): (Vec<f64>, Algorithm, u64) = match mode {
        PropMode::Size => (
            (0..m).map(|i| table.layer_nodes(i).len() as f64).collect(),
            Algorithm::PropS,
            0,
        ),
        PropMode::Weight => (
            (0..m)
                .map(|i| layer_reward(table, weights, i, table.cap(i).min(budget / m)))
                .collect(),
            Algorithm::PropW,
            m as u64,
        ),
    };
    let k = proportional_split(&shares, budget, table.caps());
    finish(algo, table, weights, k, clock, evaluations)
}
