mod common;

use common::{enumerate_visit_probs, random_network, rng, Shape};
use mulane::network::{expand_multi_walker, NetworkBuilder, Start};
use mulane::reward::reward_overlapping;
use mulane::visitprob::{build_table, marginal_gains, visit_probabilities, WalkSampler};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matches_walk_enumeration(seed in any::<u64>(), cap in 0usize..=6) {
        let net = random_network(&mut rng(seed), &Shape::overlapping(1, 5, 6));
        let layer = net.layer(0);
        for (local, &g) in layer.nodes().iter().enumerate() {
            let exact = enumerate_visit_probs(layer, local, cap);
            let p = visit_probabilities(layer, g, cap).unwrap();
            for b in 0..=cap {
                prop_assert!((p[b] - exact[b]).abs() <= 1e-10, "b={b}: {} vs {}", p[b], exact[b]);
            }
        }
    }

    #[test]
    fn curves_start_at_alpha_and_never_decrease(seed in any::<u64>()) {
        let net = random_network(&mut rng(seed), &Shape::overlapping(2, 7, 10));
        let table = build_table(&net, &net.budget_caps()).unwrap();
        for (i, layer) in net.layers().iter().enumerate() {
            for local in 0..layer.len() {
                let curve = table.curve(i, local);
                prop_assert_eq!(curve[0], 0.0);
                if curve.len() > 1 {
                    prop_assert!((curve[1] - layer.alpha()[local]).abs() <= 1e-12);
                }
                for w in curve.windows(2) {
                    prop_assert!(w[1] >= w[0] - 1e-12);
                    prop_assert!((0.0..=1.0).contains(&w[1]));
                }
            }
        }
    }

    #[test]
    fn stationary_gains_never_increase(seed in any::<u64>()) {
        let net = random_network(&mut rng(seed), &Shape::overlapping(1, 8, 10).stationary());
        let table = build_table(&net, &net.budget_caps()).unwrap();
        let gains = marginal_gains(&table, net.weights());
        for local in 0..net.layer(0).len() {
            let g = &gains.node(0, local)[1..];
            for w in g.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-9, "{:?}", g);
            }
        }
    }

    #[test]
    fn transition_rows_are_distributions(seed in any::<u64>()) {
        let net = random_network(&mut rng(seed), &Shape::overlapping(3, 6, 4));
        for layer in net.layers() {
            let m = layer.matrix();
            for u in 0..m.len() {
                let s: f64 = m.row(u).map(|(_, p)| p).sum();
                prop_assert!((s - 1.0).abs() <= 1e-9);
            }
            for (local, &g) in layer.nodes().iter().enumerate() {
                prop_assert_eq!(layer.local(g), Some(local));
                prop_assert_eq!(layer.global(local), g);
            }
        }
    }

    #[test]
    fn table_agrees_with_single_target_curves(seed in any::<u64>()) {
        let net = random_network(&mut rng(seed), &Shape::overlapping(2, 5, 5));
        let caps = net.budget_caps();
        let table = build_table(&net, &caps).unwrap();
        for (i, layer) in net.layers().iter().enumerate() {
            for &g in layer.nodes() {
                let p = visit_probabilities(layer, g, caps[i]).unwrap();
                for b in 0..=caps[i] {
                    prop_assert_eq!(table.get(i, g, b), p[b]);
                }
            }
        }
    }
}

#[test]
fn monte_carlo_agrees_with_absorbing_chain() {
    let net = random_network(&mut rng(11), &Shape::overlapping(1, 5, 6));
    let layer = net.layer(0);
    for &g in layer.nodes() {
        let p = visit_probabilities(layer, g, 6).unwrap();
        let est = mulane::visitprob::monte_carlo_visit_prob(layer, g, 6, 100_000, 3).unwrap();
        assert!((est.mean - p[6]).abs() <= 4.0 * est.stderr + 1e-12, "{est:?} vs {}", p[6]);
    }
}

#[test]
fn multi_walker_copies_behave_as_independent_walkers() {
    let net = NetworkBuilder::new()
        .layer(
            "a",
            &[("1", "2", 1.0), ("2", "3", 2.0), ("3", "1", 1.0), ("2", "4", 1.0), ("4", "1", 1.0)],
            Start::SmallestNode,
            4,
        )
        .build()
        .unwrap();
    let expanded = expand_multi_walker(&net, &[2]).unwrap();
    assert_eq!(expanded.num_layers(), 2);
    assert_eq!(expanded.layer(1).name(), "a#2");
    let table = build_table(&expanded, &[4, 4]).unwrap();
    let analytic = reward_overlapping(&table, expanded.weights(), &[3, 4]).unwrap();

    let sampler = WalkSampler::new(net.layer(0));
    let mut r = rng(5);
    let mut walk = Vec::new();
    let trials = 100_000;
    let mut samples = Vec::with_capacity(trials);
    for _ in 0..trials {
        let mut seen = [false; 4];
        for steps in [3, 4] {
            sampler.sample(steps, &mut r, &mut walk);
            for &l in &walk {
                seen[l] = true;
            }
        }
        samples.push(seen.iter().filter(|&&s| s).count() as f64);
    }
    let mean = samples.iter().sum::<f64>() / trials as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
    let stderr = (var / trials as f64).sqrt();
    assert!((mean - analytic).abs() <= 4.0 * stderr, "{mean} vs {analytic}");
}

#[test]
fn path_example_has_delayed_gains() {
    let net = NetworkBuilder::new()
        .layer("p", &[("u", "v", 1.0), ("v", "w", 1.0)], Start::SmallestNode, 5)
        .symmetrize(true)
        .build()
        .unwrap();
    let w = net.index_of("w").unwrap();
    let p = visit_probabilities(net.layer(0), w, 5).unwrap();
    assert_eq!(p, vec![0.0, 0.0, 0.0, 0.5, 0.5, 0.75]);
}
