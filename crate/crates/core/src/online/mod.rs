//! Online allocation: the network is unknown and the visiting probabilities are
//! learned from the walks observed each round.
//!
//! A round consists of [`Learner::choose`] (pick an allocation), playing it in an
//! [`Environment`], and [`Learner::update`] with the resulting [`Observation`].
//! The learner only ever sees opaque node labels; nodes are mapped to internal
//! placeholder slots in order of first discovery.

mod env;
mod harness;
mod learner;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use env::{sample_trajectories, stream_rng, Environment, Observation, Trajectory, POLICY_LANE, WEIGHT_LANE};
pub use harness::{run_experiment, write_trace, Aggregate, ExperimentOutput, RegretTrace, RoundRecord, SimulationConfig};
pub use learner::{make_learner, Learner, MarginalArmLearner, MaxArmLearner, PlaySpec};

/// Confidence radius `γ √(3 ln t / (2 T))`; infinite for unplayed arms.
pub fn radius(t: usize, plays: u32, gamma: f64) -> f64 {
    radius_with_log((t as f64).ln(), plays, gamma)
}

/// [`radius`] with `ln t` supplied directly.
pub fn radius_with_log(log_t: f64, plays: u32, gamma: f64) -> f64 {
    if plays == 0 {
        f64::INFINITY
    } else {
        gamma * (3.0 * log_t / (2.0 * plays as f64)).sqrt()
    }
}

/// Checks a confidence scale `γ ∈ (0, 1]`.
pub fn check_gamma(gamma: f64) -> Result<f64> {
    if gamma > 0.0 && gamma <= 1.0 {
        Ok(gamma)
    } else {
        Err(Error::InvalidGamma(gamma))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    CucbMax,
    CucbMg,
    CucbMaxR,
    Emp,
    EpsGreedy,
    Ts,
}

impl Policy {
    pub const ALL: [Policy; 6] = [
        Policy::CucbMax,
        Policy::CucbMg,
        Policy::CucbMaxR,
        Policy::Emp,
        Policy::EpsGreedy,
        Policy::Ts,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Policy::CucbMax => "cucb-max",
            Policy::CucbMg => "cucb-mg",
            Policy::CucbMaxR => "cucb-max-r",
            Policy::Emp => "emp",
            Policy::EpsGreedy => "eps-greedy",
            Policy::Ts => "ts",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Policy::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown online algorithm `{s}`")))
    }
}

/// Base arms a learner estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArmFamily {
    /// `(layer, node, budget)` visiting probabilities.
    Max,
    /// `(layer, budget)` layer-level marginal gains; disjoint layers only.
    Marginal,
}

impl FromStr for ArmFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(ArmFamily::Max),
            "marginal" | "mg" => Ok(ArmFamily::Marginal),
            _ => Err(Error::Config(format!("unknown arm family `{s}`"))),
        }
    }
}

/// Offline oracle used by the visiting-probability learners.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Oracle {
    #[default]
    Beg,
    Bege,
    Opt,
}

impl Oracle {
    pub fn name(self) -> &'static str {
        match self {
            Oracle::Beg => "beg",
            Oracle::Bege => "bege",
            Oracle::Opt => "opt",
        }
    }
}

impl FromStr for Oracle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "beg" => Ok(Oracle::Beg),
            "bege" => Ok(Oracle::Bege),
            "opt" => Ok(Oracle::Opt),
            _ => Err(Error::Config(format!("unknown oracle `{s}`"))),
        }
    }
}
