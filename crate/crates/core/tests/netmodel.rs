mod common;

use std::collections::{BTreeSet, VecDeque};

use gridrestore::netmodel::*;
use proptest::prelude::*;
use serde_json::json;

fn ids(net: &Network, v: &[usize]) -> Vec<String> {
    v.iter().map(|&l| net.lines[l].id.clone()).collect()
}

fn node_ids(net: &Network, v: &[usize]) -> Vec<String> {
    v.iter().map(|&i| net.nodes[i].id.clone()).collect()
}

fn cfg(net: &Network, closed: &[&str]) -> Configuration {
    Configuration {
        closed: closed.iter().map(|id| net.line_index(id).unwrap()).collect(),
    }
}

/// Nodes reachable from `start` over lines accepted by `open_line`.
fn reach(net: &Network, start: &[usize], usable: impl Fn(usize) -> bool) -> Vec<bool> {
    let mut seen = vec![false; net.nodes.len()];
    let mut q: VecDeque<usize> = start.iter().copied().collect();
    for &s in start {
        seen[s] = true;
    }
    while let Some(u) = q.pop_front() {
        for (k, l) in net.lines.iter().enumerate() {
            if l.touches(u) && usable(k) && !seen[l.other(u)] {
                seen[l.other(u)] = true;
                q.push_back(l.other(u));
            }
        }
    }
    seen
}

fn chain_doc(extra_lines: Vec<serde_json::Value>) -> serde_json::Value {
    let mut lines = vec![
        json!({"id": "S-1", "from": "S", "to": "1", "r": 0.01, "x": 0.01, "f_max": 1.0}),
        json!({"id": "1-2", "from": "1", "to": "2", "r": 0.01, "x": 0.01, "f_max": 1.0}),
        json!({"id": "2-3", "from": "2", "to": "3", "r": 0.01, "x": 0.01, "f_max": 1.0}),
    ];
    lines.extend(extra_lines);
    json!({
        "schema_version": 1, "name": "chain", "base_mva": 10.0, "base_kv": 12.66,
        "v_limits": {"min": 0.95, "max": 1.05}, "slack_voltage": 1.0,
        "time_grid": {"start": "00:00", "step_minutes": 60, "count": 1},
        "nodes": [{"id": "S", "substation": true}, {"id": "1"}, {"id": "2"}, {"id": "3"}],
        "lines": lines,
    })
}

#[test]
fn duplicate_node_is_rejected() {
    let mut doc = chain_doc(vec![]);
    doc["nodes"].as_array_mut().unwrap().push(json!({"id": "2"}));
    assert_eq!(parse_network(&doc.to_string()), Err(NetworkError::DuplicateNode("2".into())));
}

#[test]
fn dangling_line_end_is_rejected() {
    let doc = chain_doc(vec![json!({"id": "3-9", "from": "3", "to": "9", "r": 0.01, "x": 0.01, "f_max": 1.0})]);
    assert!(matches!(parse_network(&doc.to_string()), Err(NetworkError::Dangling { .. })));
}

#[test]
fn closed_loop_in_base_topology_names_the_cycle() {
    let doc = chain_doc(vec![json!({"id": "3-1", "from": "3", "to": "1", "r": 0.01, "x": 0.01, "f_max": 1.0})]);
    match parse_network(&doc.to_string()) {
        Err(NetworkError::NonRadialBase(lines)) => {
            let got: BTreeSet<String> = lines.into_iter().collect();
            let want: BTreeSet<String> = ["1-2", "2-3", "3-1"].iter().map(|s| s.to_string()).collect();
            assert_eq!(got, want);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn sixteen_node_off_outage_area() {
    let (net, area) = common::fixture("sixteen_node");
    assert_eq!(ids(&net, &area.w_ava), ["T2", "T3", "T4"]);
    assert_eq!(ids(&net, &area.w_int), ["T5"]);
    assert_eq!(ids(&net, &area.w_sec), ["11-12", "14-15", "13-16"]);
    assert_eq!(node_ids(&net, &area.faulted_zone), ["2", "3"]);

    // oracle: nodes cut off from every substation once the faulted line and
    // the isolating switches are open, minus the faulted section itself
    let dead: BTreeSet<usize> = ["2-3", "1-2", "3-11", "3-13", "2-14"]
        .iter()
        .map(|id| net.line_index(id).unwrap())
        .collect();
    let subs: Vec<usize> = net.substations().collect();
    let fed = reach(&net, &subs, |k| net.normally_closed(k) && !dead.contains(&k));
    let zone = reach(&net, &[net.node_index("2").unwrap(), net.node_index("3").unwrap()], |k| {
        net.normally_closed(k) && !dead.contains(&k)
    });
    let expect: Vec<usize> = (0..net.nodes.len()).filter(|&i| !fed[i] && !zone[i]).collect();
    assert_eq!(area.n_star, expect);
    assert_eq!(node_ids(&net, &area.n_star), ["11", "12", "13", "14", "15", "16"]);
}

#[test]
fn no_fault_means_empty_area() {
    let (net, _) = common::fixture("sixteen_node");
    let area = compute_off_outage(&net, &FaultScenario::none(&net)).unwrap();
    assert!(area.is_empty());
    assert!(area.switchable.is_empty());
    assert!(area.healthy.iter().all(|&h| h));
}

#[test]
fn unisolated_fault_is_rejected() {
    let (net, _) = common::fixture("sixteen_node");
    let sc = FaultScenario {
        faulted_lines: vec![net.line_index("2-3").unwrap()],
        ..FaultScenario::none(&net)
    };
    assert!(matches!(compute_off_outage(&net, &sc), Err(NetworkError::NotIsolated { .. })));
}

#[test]
fn clusters_of_two_feeder_pickup() {
    let (net, area) = common::fixture("sixteen_node");
    let c = cfg(&net, &["11-12", "14-15", "T2", "T3", "T4", "T5"]);
    assert!(is_radial(&net, &area, &c).radial);
    let clusters = partition_clusters(&net, &area, &c).unwrap();
    assert_eq!(clusters.len(), 2);
    let a = &clusters[0];
    assert_eq!(area.feeders[a.feeder].id, "Sub1/4");
    assert_eq!(node_ids(&net, &a.nodes), ["11", "12", "13"]);
    assert_eq!(ids(&net, &a.sources), ["T2", "T3"]);
    let b = &clusters[1];
    assert_eq!(area.feeders[b.feeder].id, "Sub2/8");
    assert_eq!(node_ids(&net, &b.nodes), ["14", "15", "16"]);
    assert_eq!(ids(&net, &b.sources), ["T4", "T5"]);
}

#[test]
fn loop_through_two_ties_is_not_radial() {
    let (net, area) = common::fixture("sixteen_node");
    // 13 fed from 6 and, via 16-15-14, from 9
    let c = cfg(&net, &["13-16", "14-15", "T3", "T4", "T5"]);
    let r = is_radial(&net, &area, &c);
    assert!(!r.radial);
    assert!(matches!(r.violation, Some(Violation::Meshed { .. })));

    // two ties of one feeder into disjoint sections stay radial
    let c = cfg(&net, &["11-12", "13-16", "T2", "T3"]);
    assert!(is_radial(&net, &area, &c).radial);
    let (net, area) = common::fixture("toy_mesh");
    let every = Configuration {
        closed: area.switchable.iter().copied().collect(),
    };
    assert!(!is_radial(&net, &area, &every).radial);
}

#[test]
fn closed_switch_in_dead_section_is_an_island() {
    let (net, area) = common::fixture("sixteen_node");
    let c = cfg(&net, &["14-15", "T5"]);
    match is_radial(&net, &area, &c).violation {
        Some(Violation::Island { nodes, has_dg }) => {
            assert!(has_dg);
            assert_eq!(nodes, ["14", "15", "16"]);
        }
        other => panic!("{other:?}"),
    }
    assert!(supply_units(&net, &area, &c).is_err());
}

/// Connected components of the closed lines, oracle for cluster contents.
fn components(net: &Network, area: &OffOutageArea, c: &Configuration) -> Vec<usize> {
    let n = net.nodes.len();
    let mut label = vec![usize::MAX; n];
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        let seen = reach(net, &[s], |k| c.line_closed(net, area, k));
        for i in 0..n {
            if seen[i] {
                label[i] = s;
            }
        }
    }
    label
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn area_is_idempotent_and_partitions_nodes(seed in 0u64..10_000) {
        let (net, scen) = common::random_toy_docs(seed);
        let (net1, a1) = common::instance(&net, &scen);
        let (_, a2) = common::instance(&net, &scen);
        prop_assert_eq!(&a1, &a2);
        for i in 0..net1.nodes.len() {
            let zone = a1.faulted_zone.contains(&i);
            let classes = [a1.healthy[i], a1.in_star[i], zone].iter().filter(|&&b| b).count();
            prop_assert_eq!(classes, 1);
        }
        let mut all: Vec<usize> = a1.w_ava.iter().chain(&a1.w_int).chain(&a1.w_sec).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(&all, &a1.switchable);
    }

    #[test]
    fn clusters_match_components(seed in 0u64..10_000, mask in any::<u64>()) {
        let (net, area) = common::random_toy(seed);
        let c = Configuration::from_mask(&area, mask & ((1 << area.switchable.len()) - 1));
        let report = is_radial(&net, &area, &c);
        let Ok(clusters) = partition_clusters(&net, &area, &c) else {
            prop_assert!(!report.radial);
            return Ok(());
        };
        prop_assert!(report.radial);
        let label = components(&net, &area, &c);
        let mut covered = BTreeSet::new();
        for cl in &clusters {
            let sub = area.feeders[cl.feeder].substation;
            for &i in &cl.nodes {
                prop_assert!(area.in_star[i]);
                prop_assert_eq!(label[i], label[sub]);
                prop_assert!(covered.insert(i), "node in two clusters");
            }
            prop_assert_eq!(partition_clusters(&net, &area, &c).unwrap(), clusters.clone());
        }
        // every energized off-outage node sits in exactly one cluster
        for &i in &area.n_star {
            prop_assert_eq!(report.energized[i], covered.contains(&i));
        }
    }
}
