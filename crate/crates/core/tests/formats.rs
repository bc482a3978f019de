use std::fs;

use resest::harness::{run_prepared, Scenario};
use resest::{
    build_medag, AdversaryModel, ColoredNetwork, Medag, NodeSet, SetCoverInstance, SystemModel,
};

const GRAPH: &str = "\
# five nodes, one trusted relay
N 5
U 0 1
U 1 2
E 0 3
E 1 3
E 2 3
E 3 4
C 0 0
C 1 1
C 2 2
T 3
";

#[test]
fn graph_file_semantics() {
    let net = ColoredNetwork::parse(GRAPH, "g").unwrap();
    assert_eq!(net.node_count(), 5);
    assert_eq!(net.in_neighbors(1).unwrap(), &NodeSet::from([0, 2]));
    assert_eq!(net.in_neighbors(3).unwrap(), &NodeSet::from([0, 1, 2]));
    assert_eq!(net.colors(), &[0, 1, 2, 0, 0]);
    assert_eq!(net.trusted_set(), NodeSet::from([3]));
    assert_eq!(ColoredNetwork::parse(&net.to_text(), "again").unwrap(), net);
}

#[test]
fn medag_export_round_trips_through_text() {
    let net = ColoredNetwork::parse(GRAPH, "g").unwrap();
    let medags: Vec<Medag> = [AdversaryModel::FLocal(1), AdversaryModel::MonoChromatic]
        .into_iter()
        .map(|b| build_medag(&net, 0, &NodeSet::from([0, 1]), b).unwrap())
        .collect();
    // node 2 hears only node 1, so neither DAG terminates
    assert!(medags.iter().all(|m| !m.terminated()));
    assert_eq!(
        medags[1].activation,
        vec![Some(0), Some(0), None, None, None]
    );
    for (m, b) in medags
        .iter()
        .zip([AdversaryModel::FLocal(1), AdversaryModel::MonoChromatic])
    {
        let back = Medag::parse_export(&m.to_export(), b).unwrap();
        assert_eq!(back, vec![m.clone()]);
    }
    let full = build_medag(
        &net,
        0,
        &NodeSet::from([0, 1, 2]),
        AdversaryModel::FLocal(1),
    )
    .unwrap();
    assert!(full.terminated());
    assert_eq!(full.neighbors[3], NodeSet::from([0, 1, 2]));
    assert_eq!(full.neighbors[4], NodeSet::from([3]));
}

#[test]
fn model_json_shape() {
    let text = r#"{
        "eigenvalues": [1.2, 0.5],
        "measurements": [[[1.0, 0.0]], [[0.0, 1.0], [2.0, 0.0]]],
        "initial_state": [1.0, -1.0]
    }"#;
    let m = SystemModel::from_json(text).unwrap();
    assert_eq!(m.node_count(), 2);
    assert_eq!(m.source_nodes(0).unwrap(), NodeSet::from([0, 1]));
    assert_eq!(m.source_nodes(1).unwrap(), NodeSet::from([1]));
    assert_eq!(SystemModel::from_json(&m.to_json()).unwrap(), m);
    assert!(SystemModel::from_json(
        r#"{"eigenvalues": [1.2, 1.2], "measurements": [[[1.0, 1.0]]], "initial_state": [0, 0]}"#
    )
    .is_err());
}

#[test]
fn set_cover_file_errors_carry_line_numbers() {
    let err = SetCoverInstance::parse("p 3\nF 1 2\nF 4\n", "sc.txt").unwrap_err();
    assert_eq!(
        err.to_string(),
        "sc.txt:0: input error: subset 2 has element 4 outside 1..=3"
    );
    let err = SetCoverInstance::parse("p 3\nF 1 x\n", "sc.txt").unwrap_err();
    assert!(err.to_string().starts_with("sc.txt:2:"));
}

#[test]
fn scenario_with_sybil_replicas() {
    let dir = tempfile::tempdir().unwrap();
    // hub 5 of color 0 plus a robust core of mixed colors
    let mut net = ColoredNetwork::complete(6);
    net.set_color(1, 1).unwrap();
    net.set_color(2, 2).unwrap();
    net.set_color(3, 1).unwrap();
    net.set_color(4, 2).unwrap();
    fs::write(dir.path().join("g.txt"), net.to_text()).unwrap();
    let model = SystemModel::new(
        vec![1.3],
        (0..6)
            .map(|i| vec![vec![if i < 3 { 1.0 } else { 0.0 }]])
            .collect(),
        vec![0.5],
    )
    .unwrap();
    fs::write(dir.path().join("m.json"), model.to_json()).unwrap();
    let text = r#"{
        "network": "g.txt", "model": "m.json",
        "adversary": {"strategy": {"name": "constant", "value": -50.0}, "spoof": {"target": 5, "replicas": 3}},
        "lfre": {"model": "mono_chromatic"}, "horizon": 100, "threshold": 1e-6
    }"#;
    let s = Scenario::from_json(text).unwrap();
    let p = s.prepare(dir.path()).unwrap();
    assert_eq!(p.net.node_count(), 9);
    assert_eq!(p.model.node_count(), 9);
    assert_eq!(p.adversary.members, NodeSet::from([5, 6, 7, 8]));
    let r = run_prepared(&p).unwrap();
    assert!(r.summary.robust);
    assert!(r.summary.adversary.valid);
    assert_eq!(r.summary.verdict, resest::Verdict::Converged);
}
