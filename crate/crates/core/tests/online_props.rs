mod common;

use common::{random_network, rng, Shape};
use mulane::network::LayeredNetwork;
use mulane::online::{
    make_learner, run_experiment, stream_rng, ArmFamily, Environment, Learner, MaxArmLearner, PlaySpec, Policy, SimulationConfig,
    POLICY_LANE,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;

fn spec(net: &LayeredNetwork, budget: usize) -> PlaySpec {
    PlaySpec::new(budget, net.budget_caps(), net.num_nodes())
}

fn play(learner: &mut dyn Learner, env: &Environment, rounds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut picks = Vec::new();
    for t in 1..=rounds {
        let mut prng = stream_rng(seed, 0, t as u64, POLICY_LANE);
        let k = learner.choose(t, &mut prng).unwrap();
        let obs = env.play(&k, seed, 0, t as u64);
        learner.update(&k, &obs, &mut prng);
        picks.push(k);
    }
    picks
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn hidden_node_ids_do_not_change_decisions(seed in any::<u64>(), policy_ix in 0usize..6) {
        let policy = Policy::ALL[policy_ix];
        let net = random_network(&mut rng(seed), &Shape::disjoint(3, 5, 3));
        let mut labels: Vec<usize> = (0..net.num_nodes()).map(|g| 1000 + 7 * g).collect();
        labels.shuffle(&mut rng(seed ^ 1));
        let visible = Environment::new(&net);
        let hidden = Environment::new(&net).with_labels(labels).unwrap();
        let family = if policy == Policy::CucbMg { ArmFamily::Marginal } else { ArmFamily::Max };
        let mut a = make_learner(policy, family, spec(&net, 4)).unwrap();
        let mut b = make_learner(policy, family, spec(&net, 4)).unwrap();
        prop_assert_eq!(play(a.as_mut(), &visible, 40, seed), play(b.as_mut(), &hidden, 40, seed));
    }

    #[test]
    fn exactly_the_played_arms_are_updated(seed in any::<u64>()) {
        let net = random_network(&mut rng(seed), &Shape::overlapping(2, 5, 4));
        let caps = net.budget_caps();
        let env = Environment::new(&net);
        let mut learner = MaxArmLearner::new(Policy::CucbMax, spec(&net, 4)).unwrap();
        for t in 1..=15u64 {
            let mut prng = stream_rng(seed, 0, t, POLICY_LANE);
            let k = learner.choose(t as usize, &mut prng).unwrap();
            let before = learner.clone();
            let obs = env.play(&k, seed, 0, t);
            learner.update(&k, &obs, &mut prng);
            for (i, &c) in caps.iter().enumerate() {
                for slot in 0..net.num_nodes() {
                    for b in 1..=c {
                        let delta = learner.plays(i, slot, b) - before.plays(i, slot, b);
                        prop_assert_eq!(delta, u32::from(b <= k[i]));
                    }
                }
            }
            let ucb = learner.last_ucb().unwrap();
            for i in 0..ucb.num_layers() {
                for local in 0..ucb.layer_nodes(i).len() {
                    let curve = ucb.curve(i, local);
                    prop_assert!(curve.windows(2).all(|w| w[1] >= w[0]));
                    prop_assert!(curve.iter().all(|p| (0.0..=1.0).contains(p)));
                }
            }
        }
    }

    #[test]
    fn learners_play_feasible_allocations(seed in any::<u64>(), policy_ix in 0usize..6) {
        let policy = Policy::ALL[policy_ix];
        let net = random_network(&mut rng(seed), &Shape::disjoint(3, 5, 4));
        let caps = net.budget_caps();
        let family = if policy == Policy::CucbMg { ArmFamily::Marginal } else { ArmFamily::Max };
        let mut learner = make_learner(policy, family, spec(&net, 5)).unwrap();
        for k in play(learner.as_mut(), &Environment::new(&net), 30, seed) {
            prop_assert!(k.iter().sum::<usize>() <= 5);
            prop_assert!(k.iter().zip(&caps).all(|(a, c)| a <= c));
        }
    }
}

#[test]
fn experiments_are_reproducible() {
    let net = random_network(&mut rng(3), &Shape::disjoint(3, 5, 4));
    for policy in Policy::ALL {
        let mut cfg = SimulationConfig::new(policy, 4, 60, 3, 9);
        cfg.verbose = true;
        let a = run_experiment(&net, &cfg).unwrap();
        let b = run_experiment(&net, &cfg).unwrap();
        assert_eq!(a.regret_csv(), b.regret_csv());
        assert_eq!(a.traces, b.traces);
        assert_eq!(a.aggregate.len(), 60);
        for agg in &a.aggregate {
            assert!(agg.ci_low <= agg.mean_regret && agg.mean_regret <= agg.ci_high);
        }
    }
}

#[test]
fn runs_differ_but_each_is_seeded() {
    let net = random_network(&mut rng(4), &Shape::overlapping(2, 5, 4));
    let cfg = SimulationConfig::new(Policy::Ts, 4, 50, 2, 1);
    let out = run_experiment(&net, &cfg).unwrap();
    assert_ne!(out.traces[0].cumulative, out.traces[1].cumulative);
    let mut other = cfg.clone();
    other.seed = 2;
    assert_ne!(run_experiment(&net, &other).unwrap().regret_csv(), out.regret_csv());
}
