//! Browser demo: visiting-probability curves, a budget sweep of the offline
//! solvers and a short regret simulation on a few preset networks.
//!
//! Every export returns a JSON string; the page in `www/` draws it on a canvas.

use mulane::network::{LayeredNetwork, NetworkBuilder, Start};
use mulane::offline::{solve, Algorithm, SolveOptions};
use mulane::online::{run_experiment, Policy, SimulationConfig};
use mulane::visitprob::build_table;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

pub const PRESETS: [&str; 4] = ["path", "star", "overlap", "three-layer"];

const MAX_CAP: usize = 60;
const MAX_ROUNDS: usize = 3000;
const MAX_RUNS: usize = 20;

fn ring(prefix: &str, n: usize, chords: &[(usize, usize)]) -> Vec<(String, String, f64)> {
    let id = |k: usize| format!("{prefix}{k}");
    let mut edges: Vec<_> = (0..n).map(|k| (id(k), id((k + 1) % n), 1.0)).collect();
    edges.extend(chords.iter().map(|&(a, b)| (id(a), id(b), 0.5)));
    edges
}

/// Builds a preset network with every cap set to `cap`.
pub fn preset(name: &str, cap: usize) -> Result<LayeredNetwork, String> {
    let net = match name {
        "path" => NetworkBuilder::new()
            .layer("path", &[("u", "v", 1.0), ("v", "w", 1.0)], Start::SmallestNode, cap)
            .symmetrize(true)
            .build(),
        "star" => NetworkBuilder::new()
            .layer(
                "star",
                &[("c", "l1", 1.0), ("c", "l2", 1.0), ("c", "l3", 1.0), ("c", "l4", 1.0)],
                Start::Stationary,
                cap,
            )
            .symmetrize(true)
            .build(),
        "overlap" => NetworkBuilder::new()
            .layer("triangle", &[("1", "2", 1.0), ("2", "3", 1.0), ("3", "1", 1.0)], Start::SmallestNode, cap)
            .layer("path", &[("3", "4", 1.0), ("4", "5", 1.0), ("5", "6", 1.0)], Start::SmallestNode, cap)
            .symmetrize(true)
            .weight("1", 1.0)
            .weight("2", 0.5)
            .weight("3", 1.0)
            .weight("4", 0.5)
            .weight("5", 1.0)
            .weight("6", 0.5)
            .build(),
        "three-layer" => NetworkBuilder::new()
            .layer_owned("a".into(), ring("a", 6, &[(0, 3)]), Start::SmallestNode, cap)
            .layer_owned("b".into(), ring("b", 8, &[(1, 5), (2, 6)]), Start::SmallestNode, cap)
            .layer_owned("c".into(), ring("c", 5, &[]), Start::SmallestNode, cap)
            .symmetrize(true)
            .build(),
        other => return Err(format!("unknown preset `{other}`")),
    };
    net.map_err(|e| e.to_string())
}

fn to_json(v: Value) -> String {
    v.to_string()
}

/// Visiting-probability curves `P(b)` for `b = 0..=cap` of every node in every layer.
pub fn visit_curves_json(name: &str, cap: usize) -> Result<String, String> {
    let cap = cap.clamp(1, MAX_CAP);
    let net = preset(name, cap)?;
    let table = build_table(&net, &net.budget_caps()).map_err(|e| e.to_string())?;
    let layers: Vec<Value> = net
        .layers()
        .iter()
        .enumerate()
        .map(|(i, layer)| {
            let curves: Vec<Value> = layer
                .nodes()
                .iter()
                .enumerate()
                .map(|(local, &g)| json!({ "node": net.node_id(g), "values": table.curve(i, local) }))
                .collect();
            json!({ "name": layer.name(), "curves": curves })
        })
        .collect();
    Ok(to_json(json!({ "preset": name, "cap": cap, "layers": layers })))
}

/// Reward of each solver for every budget `1..=max_budget`, caps equal to the budget.
pub fn budget_sweep_json(name: &str, max_budget: usize, algos: &str) -> Result<String, String> {
    let max_budget = max_budget.clamp(1, MAX_CAP);
    let algos: Vec<Algorithm> = algos
        .split(',')
        .map(|a| a.trim().parse::<Algorithm>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    let net = preset(name, max_budget)?;
    let mut series: Vec<Value> = Vec::new();
    for &algo in &algos {
        let mut rewards = Vec::with_capacity(max_budget);
        for budget in 1..=max_budget {
            let caps = vec![budget; net.num_layers()];
            let table = build_table(&net, &caps).map_err(|e| e.to_string())?;
            let res = solve(algo, &table, net.weights(), budget, &SolveOptions::default()).map_err(|e| e.to_string())?;
            rewards.push(json!({ "budget": budget, "reward": res.reward, "allocation": res.allocation }));
        }
        series.push(json!({ "algo": algo.name(), "points": rewards }));
    }
    Ok(to_json(json!({ "preset": name, "series": series })))
}

/// Mean cumulative regret per round of one online learner.
pub fn simulate_json(name: &str, policy: &str, budget: usize, rounds: usize, runs: usize, seed: u64) -> Result<String, String> {
    let policy: Policy = policy.parse().map_err(|e: mulane::Error| e.to_string())?;
    let budget = budget.clamp(1, MAX_CAP);
    let net = preset(name, budget)?;
    let cfg = SimulationConfig::new(policy, budget, rounds.clamp(1, MAX_ROUNDS), runs.clamp(1, MAX_RUNS), seed);
    let out = run_experiment(&net, &cfg).map_err(|e| e.to_string())?;
    let mean: Vec<f64> = out.aggregate.iter().map(|a| a.mean_regret).collect();
    let low: Vec<f64> = out.aggregate.iter().map(|a| a.ci_low).collect();
    let high: Vec<f64> = out.aggregate.iter().map(|a| a.ci_high).collect();
    Ok(to_json(json!({
        "algo": policy.name(),
        "reference_allocation": out.reference_allocation,
        "reference_reward": out.reference_reward,
        "mean_regret": mean,
        "ci_low": low,
        "ci_high": high,
    })))
}

#[wasm_bindgen]
pub fn presets() -> String {
    to_json(json!(PRESETS))
}

#[wasm_bindgen]
pub fn visit_curves(name: &str, cap: usize) -> Result<String, JsError> {
    visit_curves_json(name, cap).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn budget_sweep(name: &str, max_budget: usize, algos: &str) -> Result<String, JsError> {
    budget_sweep_json(name, max_budget, algos).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn simulate(name: &str, policy: &str, budget: usize, rounds: usize, runs: usize, seed: u64) -> Result<String, JsError> {
    simulate_json(name, policy, budget, rounds, runs, seed).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn presets_build() {
        for name in PRESETS {
            preset(name, 4).unwrap();
        }
        assert!(preset("nope", 4).is_err());
    }

    #[test]
    fn path_curve_of_far_end() {
        let v = parse(&visit_curves_json("path", 5).unwrap());
        let curves = v["layers"][0]["curves"].as_array().unwrap();
        let w = curves.iter().find(|c| c["node"] == "w").unwrap();
        assert_eq!(w["values"], json!([0.0, 0.0, 0.0, 0.5, 0.5, 0.75]));
    }

    #[test]
    fn sweep_has_one_point_per_budget() {
        let v = parse(&budget_sweep_json("overlap", 6, "beg,opt").unwrap());
        let series = v["series"].as_array().unwrap();
        assert_eq!(series.len(), 2);
        for (b, o) in series[0]["points"].as_array().unwrap().iter().zip(series[1]["points"].as_array().unwrap()) {
            assert!(b["reward"].as_f64().unwrap() <= o["reward"].as_f64().unwrap() + 1e-9);
        }
        assert_eq!(series[0]["points"].as_array().unwrap().len(), 6);
        assert!(budget_sweep_json("overlap", 3, "beg,bogus").is_err());
    }

    #[test]
    fn simulation_is_seeded() {
        let a = simulate_json("three-layer", "cucb-mg", 4, 100, 2, 1).unwrap();
        assert_eq!(a, simulate_json("three-layer", "cucb-mg", 4, 100, 2, 1).unwrap());
        assert_eq!(parse(&a)["mean_regret"].as_array().unwrap().len(), 100);
        assert!(simulate_json("overlap", "cucb-mg", 4, 10, 1, 1).is_err());
    }
}
