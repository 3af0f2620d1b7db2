mod common;

use std::fs;

use common::{random_network, rng, Shape};
use mulane::network::{load_network, write_canonical, Manifest};
use mulane::visitprob::build_table;
use mulane::Error;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn canonical_form_is_a_fixed_point(seed in any::<u64>(), stationary in any::<bool>()) {
        let shape = if stationary { Shape::overlapping(3, 6, 5).stationary() } else { Shape::overlapping(3, 6, 5) };
        let net = random_network(&mut rng(seed), &shape);
        let first = tempfile::tempdir().unwrap();
        let second = tempfile::tempdir().unwrap();
        let loaded = load_network(&write_canonical(&net, first.path()).unwrap()).unwrap();
        write_canonical(&loaded, second.path()).unwrap();
        prop_assert_eq!(loaded.canonical_files(), net.canonical_files());
        for (name, contents) in net.canonical_files() {
            prop_assert_eq!(fs::read_to_string(second.path().join(&name)).unwrap(), contents);
        }
        let caps = net.budget_caps();
        prop_assert_eq!(build_table(&loaded, &caps).unwrap(), build_table(&net, &caps).unwrap());
    }
}

fn write(dir: &std::path::Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

#[test]
fn manifest_with_comments_defaults_and_symmetry() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.tsv", "# path\n1 2\n\n2 3 2.5\n");
    write(dir.path(), "b.tsv", "3\t4\n4\t3\n");
    write(dir.path(), "w.tsv", "1 0.5\n2 1\n3 0\n4 1\n");
    write(
        dir.path(),
        "m.json",
        r#"{"layers": [{"name": "a", "edges": "a.tsv", "cap": 4},
                       {"name": "b", "edges": "b.tsv", "alpha": "fixed-node:4"}],
            "weights": "w.tsv", "symmetrize": true}"#,
    );
    let net = load_network(&dir.path().join("m.json")).unwrap();
    assert_eq!(net.node_ids(), ["1", "2", "3", "4"]);
    assert_eq!(net.weights(), [0.5, 1.0, 0.0, 1.0]);
    assert_eq!(net.budget_caps(), vec![4, 0]);
    assert!(net.overlapping());
    let a = net.layer(0);
    assert_eq!(a.alpha(), [1.0, 0.0, 0.0]);
    let m = a.matrix();
    assert!((m.get(1, 0) - 1.0 / 3.5).abs() < 1e-15);
    assert!((m.get(1, 2) - 2.5 / 3.5).abs() < 1e-15);
    assert_eq!(net.layer(1).alpha(), [0.0, 1.0]);
}

#[test]
fn manifest_errors_carry_locations() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.tsv", "1 2\n2 3 x\n");
    write(dir.path(), "m.json", r#"{"layers": [{"name": "a", "edges": "bad.tsv"}]}"#);
    match load_network(&dir.path().join("m.json")) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
        other => panic!("expected a parse error, got {other:?}"),
    }
    assert!(matches!(
        Manifest::from_json("{\n\"layers\": [],\n\"extra\": 1}", "m.json"),
        Err(Error::Parse { line: 3, .. })
    ));
    assert!(Manifest::from_json(r#"{"layers": []}"#, "m.json").is_err());
    write(dir.path(), "missing.json", r#"{"layers": [{"name": "a", "edges": "nope.tsv"}]}"#);
    assert!(matches!(load_network(&dir.path().join("missing.json")), Err(Error::Io { .. })));
}

#[test]
fn sink_policy_error_rejects_dead_ends() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.tsv", "1 2\n");
    write(dir.path(), "m.json", r#"{"layers": [{"name": "a", "edges": "a.tsv"}], "sink": "error"}"#);
    assert!(matches!(load_network(&dir.path().join("m.json")), Err(Error::SinkNode { .. })));
    write(dir.path(), "m2.json", r#"{"layers": [{"name": "a", "edges": "a.tsv"}]}"#);
    let net = load_network(&dir.path().join("m2.json")).unwrap();
    assert_eq!(net.layer(0).matrix().get(1, 1), 1.0);
}

#[test]
fn weights_outside_unit_interval_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.tsv", "1 2\n2 1\n");
    write(dir.path(), "w.tsv", "1 0.5\n2 1.5\n");
    write(dir.path(), "m.json", r#"{"layers": [{"name": "a", "edges": "a.tsv"}], "weights": "w.tsv"}"#);
    assert!(matches!(load_network(&dir.path().join("m.json")), Err(Error::Validation(_))));
}
