//! Multi-run regret simulation.

use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::learner::make_learner;
use super::{check_gamma, stream_rng, ArmFamily, Environment, Oracle, PlaySpec, Policy, POLICY_LANE};
use crate::clock::Stopwatch;
use crate::error::{Error, Result};
use crate::network::LayeredNetwork;
use crate::offline::{dp_nonoverlapping, opt_enumerate_with, ApproxConstants, BegVariant, SolveOptions, DEFAULT_ENUMERATION_LIMIT};
use crate::reward::reward_overlapping;
use crate::visitprob::build_table;

/// Settings of one simulated experiment. Budget caps come from the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub policy: Policy,
    pub rounds: usize,
    pub runs: usize,
    pub seed: u64,
    #[serde(default = "one")]
    pub gamma: f64,
    pub budget: usize,
    #[serde(default)]
    pub oracle: Oracle,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Arm family for the baselines; defaults to marginal-gain arms on disjoint
    /// layers and visiting-probability arms otherwise.
    #[serde(default)]
    pub arms: Option<ArmFamily>,
    #[serde(default)]
    pub beg_variant: BegVariant,
    /// Keep per-round records for every run.
    #[serde(default)]
    pub verbose: bool,
}

fn one() -> f64 {
    1.0
}

fn default_epsilon() -> f64 {
    0.1
}

impl SimulationConfig {
    pub fn new(policy: Policy, budget: usize, rounds: usize, runs: usize, seed: u64) -> Self {
        SimulationConfig {
            policy,
            rounds,
            runs,
            seed,
            gamma: 1.0,
            budget,
            oracle: Oracle::Beg,
            epsilon: default_epsilon(),
            arms: None,
            beg_variant: BegVariant::Equivalent,
            verbose: false,
        }
    }

    pub fn family(&self, network: &LayeredNetwork) -> ArmFamily {
        match self.policy {
            Policy::CucbMax | Policy::CucbMaxR => ArmFamily::Max,
            Policy::CucbMg => ArmFamily::Marginal,
            _ => self.arms.unwrap_or(if network.overlapping() {
                ArmFamily::Max
            } else {
                ArmFamily::Marginal
            }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_gamma(self.gamma)?;
        if self.rounds == 0 || self.runs == 0 {
            return Err(Error::Config("rounds and runs must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::Config(format!("epsilon must lie in [0, 1], got {}", self.epsilon)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub allocation: Vec<usize>,
    pub expected_reward: f64,
    pub realized_reward: f64,
    /// `r(k*) - r(k_t)`, signed.
    pub gap: f64,
    pub cumulative_regret: f64,
    pub cumulative_approx_regret: f64,
}

/// Cumulative regret of one run; `records` is filled only in verbose mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretTrace {
    pub run: usize,
    pub cumulative: Vec<f64>,
    pub cumulative_approx: Vec<f64>,
    pub records: Vec<RoundRecord>,
}

/// Mean and 95% normal confidence interval across runs at one round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub round: usize,
    pub mean_regret: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutput {
    pub config: SimulationConfig,
    pub arms: ArmFamily,
    /// Optimal allocation on the true network and its reward.
    pub reference_allocation: Vec<usize>,
    pub reference_reward: f64,
    /// Approximation factors of the `(ξ, β)`-regret.
    pub xi: f64,
    pub beta: f64,
    pub traces: Vec<RegretTrace>,
    pub aggregate: Vec<Aggregate>,
    pub approx_aggregate: Vec<Aggregate>,
    pub millis: f64,
}

impl ExperimentOutput {
    /// `round,mean_regret,ci_low,ci_high`, one row per round.
    pub fn regret_csv(&self) -> String {
        let mut out = String::from("round,mean_regret,ci_low,ci_high\n");
        for a in &self.aggregate {
            let _ = writeln!(out, "{},{},{},{}", a.round, a.mean_regret, a.ci_low, a.ci_high);
        }
        out
    }

    pub fn final_regret(&self) -> Aggregate {
        *self.aggregate.last().expect("at least one round")
    }

    pub fn summary(&self) -> serde_json::Value {
        let last = self.final_regret();
        let approx = *self.approx_aggregate.last().expect("at least one round");
        serde_json::json!({
            "algo": self.config.policy.name(),
            "arms": self.arms,
            "rounds": self.config.rounds,
            "runs": self.config.runs,
            "seed": self.config.seed,
            "gamma": self.config.gamma,
            "budget": self.config.budget,
            "reference_allocation": self.reference_allocation,
            "reference_reward": self.reference_reward,
            "xi": self.xi,
            "beta": self.beta,
            "final_regret": last,
            "final_approx_regret": approx,
        })
    }
}

/// Writes every verbose record as one JSON line.
pub fn write_trace<W: Write>(output: &ExperimentOutput, mut sink: W) -> std::io::Result<()> {
    for trace in &output.traces {
        for rec in &trace.records {
            let line = serde_json::json!({ "run": trace.run, "round": rec.round, "record": rec });
            writeln!(sink, "{line}")?;
        }
    }
    Ok(())
}

/// Runs `config.runs` independent learners for `config.rounds` rounds each.
///
/// Regret is measured with expected rewards on the true table against the
/// optimum (exhaustive search, or DP when layers are disjoint).
pub fn run_experiment(network: &LayeredNetwork, config: &SimulationConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let clock = Stopwatch::start();
    let family = config.family(network);
    if family == ArmFamily::Marginal && network.overlapping() {
        return Err(Error::Overlap);
    }
    let caps = network.budget_caps();
    let table = build_table(network, &caps)?;
    let weights = network.weights();
    let reference = if network.overlapping() {
        opt_enumerate_with(&table, weights, config.budget, DEFAULT_ENUMERATION_LIMIT)?
    } else {
        dp_nonoverlapping(&table, weights, config.budget)?
    };
    let r_star = reference.reward;
    let constants = ApproxConstants::get();
    let xi = match family {
        ArmFamily::Marginal => 1.0,
        ArmFamily::Max => match config.oracle {
            Oracle::Beg => constants.ratio_beg,
            Oracle::Bege => constants.ratio_mg,
            Oracle::Opt => 1.0,
        },
    };
    let beta = 1.0;

    let spec = PlaySpec {
        budget: config.budget,
        caps: caps.clone(),
        num_nodes: network.num_nodes(),
        gamma: config.gamma,
        epsilon: config.epsilon,
        oracle: config.oracle,
        solve: SolveOptions {
            beg_variant: config.beg_variant,
            ..SolveOptions::default()
        },
    };
    let env = Environment::new(network).with_random_weights(config.policy == Policy::CucbMaxR);

    let run_one = |run: usize| -> Result<RegretTrace> {
        let mut learner = make_learner(config.policy, family, spec.clone())?;
        let mut trace = RegretTrace {
            run,
            cumulative: Vec::with_capacity(config.rounds),
            cumulative_approx: Vec::with_capacity(config.rounds),
            records: Vec::new(),
        };
        let (mut cum, mut cum_approx) = (0.0, 0.0);
        for t in 1..=config.rounds {
            let mut rng = stream_rng(config.seed, run as u64, t as u64, POLICY_LANE);
            let k = learner.choose(t, &mut rng)?;
            let obs = env.play(&k, config.seed, run as u64, t as u64);
            learner.update(&k, &obs, &mut rng);
            let expected = reward_overlapping(&table, weights, &k)?;
            let gap = r_star - expected;
            cum += gap;
            cum_approx += xi * beta * r_star - expected;
            trace.cumulative.push(cum);
            trace.cumulative_approx.push(cum_approx);
            if config.verbose {
                trace.records.push(RoundRecord {
                    round: t,
                    allocation: k,
                    expected_reward: expected,
                    realized_reward: obs.realized,
                    gap,
                    cumulative_regret: cum,
                    cumulative_approx_regret: cum_approx,
                });
            }
        }
        Ok(trace)
    };

    #[cfg(feature = "parallel")]
    let traces: Vec<RegretTrace> = {
        use rayon::prelude::*;
        (0..config.runs).into_par_iter().map(run_one).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let traces: Vec<RegretTrace> = (0..config.runs).map(run_one).collect::<Result<_>>()?;

    let aggregate = aggregate(&traces, config.rounds, |t| &t.cumulative);
    let approx_aggregate = aggregate_with(&traces, config.rounds, |t| &t.cumulative_approx);
    Ok(ExperimentOutput {
        config: config.clone(),
        arms: family,
        reference_allocation: reference.allocation.0,
        reference_reward: r_star,
        xi,
        beta,
        traces,
        aggregate,
        approx_aggregate,
        millis: clock.millis(),
    })
}

fn aggregate(traces: &[RegretTrace], rounds: usize, pick: fn(&RegretTrace) -> &Vec<f64>) -> Vec<Aggregate> {
    aggregate_with(traces, rounds, pick)
}

/// Mean ± 1.96 · sample sd / √R per round, summed in run order.
fn aggregate_with(traces: &[RegretTrace], rounds: usize, pick: fn(&RegretTrace) -> &Vec<f64>) -> Vec<Aggregate> {
    let r = traces.len() as f64;
    (0..rounds)
        .map(|t| {
            let mean = traces.iter().map(|tr| pick(tr)[t]).sum::<f64>() / r;
            let var = if traces.len() > 1 {
                traces.iter().map(|tr| (pick(tr)[t] - mean).powi(2)).sum::<f64>() / (r - 1.0)
            } else {
                0.0
            };
            let half = 1.96 * var.sqrt() / r.sqrt();
            Aggregate {
                round: t + 1,
                mean_regret: mean,
                ci_low: mean - half,
                ci_high: mean + half,
            }
        })
        .collect()
}
