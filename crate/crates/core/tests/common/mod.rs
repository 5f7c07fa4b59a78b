//! Fixture loading and a seeded generator of small restoration instances.
#![allow(dead_code)]

use std::path::PathBuf;

use gridrestore::netmodel::{compute_off_outage, load_network, load_scenario, parse_network, parse_scenario};
use gridrestore::formulation::{build_master, CutKind, CutRecord, ObjectiveWeights};
use gridrestore::netmodel::{Network, OffOutageArea};
use gridrestore_conic::ConicModel;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

/// Toy fixtures small enough for exhaustive enumeration.
pub const TOYS: [&str; 5] = ["toy_chain", "toy_dg", "toy_pickup", "toy_mesh", "toy_three_step"];

pub fn fixture_dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fixture(name: &str) -> (Network, OffOutageArea) {
    let dir = fixture_dir(name);
    let net = load_network(dir.join("network.json")).unwrap();
    let sc = load_scenario(dir.join("scenario.json"), &net).unwrap();
    let area = compute_off_outage(&net, &sc).unwrap();
    (net, area)
}

pub fn instance(network: &Value, scenario: &Value) -> (Network, OffOutageArea) {
    let net = parse_network(&network.to_string()).unwrap();
    let sc = parse_scenario(&scenario.to_string(), &net).unwrap();
    let area = compute_off_outage(&net, &sc).unwrap();
    (net, area)
}

fn line(id: &str, from: &str, to: &str, r: f64, f_max: f64, switch: Option<&str>) -> Value {
    let mut v = json!({"id": id, "from": from, "to": to, "r": r, "x": 0.75 * r, "f_max": f_max});
    if let Some(s) = switch {
        v["switch"] = json!(s);
    }
    v
}

fn switch(id: &str, kind: &str, remote: bool) -> Value {
    let (actuation, t) = if remote { ("remote", 0.5) } else { ("manual", 30.0) };
    json!({"id": id, "kind": kind, "actuation": actuation, "op_time_min": t})
}

/// Network and scenario documents of a random instance: a faulted feeder
/// whose downstream tree (4 to 6 nodes) can be picked up through two or
/// three ties from two healthy feeders, with at most nine switchable lines.
pub fn random_toy_docs(seed: u64) -> (Value, Value) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let steps = rng.gen_range(1..=2usize);
    let k = rng.gen_range(4..=6usize);
    let star: Vec<String> = (1..=k).map(|i| format!("n{i}")).collect();
    let healthy = ["h1", "h2", "g1"];

    let mut nodes = vec![
        json!({"id": "Sub1", "substation": true}),
        json!({"id": "Sub2", "substation": true}),
        json!({"id": "Sub3", "substation": true}),
        json!({"id": "f1"}),
        json!({"id": "f2"}),
    ];
    nodes.extend(healthy.iter().copied().chain(star.iter().map(|s| s.as_str())).map(|id| json!({"id": id})));

    let mut lines = vec![
        line("Sub1-f1", "Sub1", "f1", 0.01, 3.0, Some("A")),
        line("f1-f2", "f1", "f2", 0.01, 3.0, None),
        line("f2-n1", "f2", "n1", 0.01, 3.0, Some("B")),
        line("Sub2-h1", "Sub2", "h1", 0.01, 3.0, None),
        line("h1-h2", "h1", "h2", 0.02, 3.0, None),
        line("Sub3-g1", "Sub3", "g1", 0.01, 3.0, None),
    ];
    let mut switches = vec![switch("A", "sectionalizing", true), switch("B", "sectionalizing", false)];
    let mut adjacent = Vec::new();
    let mut sectionalizers = 0;
    for j in 1..k {
        let p = rng.gen_range(0..j);
        let (a, b) = (&star[p], &star[j]);
        let id = format!("{a}-{b}");
        let r = rng.gen_range(0.01..0.04);
        if sectionalizers < 5 && rng.gen_bool(0.5) {
            let s = format!("S{j}");
            switches.push(switch(&s, "sectionalizing", rng.gen_bool(0.3)));
            lines.push(line(&id, a, b, r, 3.0, Some(&s)));
            sectionalizers += 1;
        } else {
            lines.push(line(&id, a, b, r, 3.0, None));
        }
        adjacent.push((p, j));
    }

    let n_ties = rng.gen_range(2..=3usize);
    for t in 0..n_ties {
        let outer = healthy[t.min(healthy.len() - 1)];
        let inner = star.choose(&mut rng).unwrap();
        let id = format!("T{}", t + 1);
        switches.push(switch(&id, "tie", rng.gen_bool(0.3)));
        let f_max = rng.gen_range(0.3..1.2);
        lines.push(line(&id, outer, inner, rng.gen_range(0.02..0.05), f_max, Some(&id)));
    }
    if rng.gen_bool(0.5) {
        let a = rng.gen_range(0..k);
        let b = rng.gen_range(0..k);
        if a != b && !adjacent.contains(&(a.min(b), a.max(b))) {
            switches.push(switch("TI", "tie", false));
            lines.push(line("TI", &star[a], &star[b], 0.03, 1.0, Some("TI")));
        }
    }

    let growth: Vec<f64> = (0..steps).map(|t| 1.0 + 0.15 * t as f64).collect();
    let mut loads = Vec::new();
    for id in healthy.iter().copied() {
        let p: Vec<f64> = growth.iter().map(|g| 0.1 * g).collect();
        let q: Vec<f64> = p.iter().map(|p| 0.4 * p).collect();
        loads.push(json!({"node": id, "p": p, "q": q}));
    }
    for id in &star {
        let base = rng.gen_range(0.05..0.25);
        let p: Vec<f64> = growth.iter().map(|g| base * g).collect();
        let q: Vec<f64> = p.iter().map(|p| 0.4 * p).collect();
        let importance = *[1.0, 1.0, 2.0, 3.0].choose(&mut rng).unwrap();
        loads.push(json!({"node": id, "importance": importance, "p": p, "q": q, "breaker": rng.gen_bool(0.4)}));
    }
    let mut dgs = Vec::new();
    if rng.gen_bool(0.5) {
        let at = star.choose(&mut rng).unwrap();
        let p_max = rng.gen_range(0.1..0.2);
        dgs.push(json!({"id": "G1", "node": at, "kind": "dispatchable", "p_max": p_max, "s_max": 1.3 * p_max}));
    }

    let network = json!({
        "schema_version": 1,
        "name": format!("random {seed}"),
        "base_mva": 10.0,
        "base_kv": 12.66,
        "v_limits": {"min": 0.95, "max": 1.05},
        "slack_voltage": 1.0,
        "time_grid": {"start": "08:00", "step_minutes": 60, "count": steps},
        "nodes": nodes,
        "lines": lines,
        "switches": switches,
        "dgs": dgs,
        "loads": loads,
    });
    let scenario = json!({
        "schema_version": 1,
        "faulted_elements": ["f1-f2"],
        "isolation_openings": ["Sub1-f1", "f2-n1"],
    });
    (network, scenario)
}

pub fn random_toy(seed: u64) -> (Network, OffOutageArea) {
    let (n, s) = random_toy_docs(seed);
    instance(&n, &s)
}

fn cut_rows_hold(model: &ConicModel, prefix: &str, x: &[f64]) -> bool {
    model
        .rows
        .iter()
        .filter(|r| r.name.starts_with(prefix))
        .all(|r| r.violation(x) <= 1e-9)
}

/// Truth-table outcome of one cut: assignments checked and disagreements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableCheck {
    pub assignments: usize,
    pub mismatches: usize,
}

/// Enumerates every μ pattern on the cut lines and asks whether some setting
/// of the cut's auxiliary binaries satisfies its rows; compares against the
/// logical statement of the cut. `None` when the cut has more than
/// `max_binaries` binaries.
pub fn check_cut_truth_table(
    net: &Network,
    area: &OffOutageArea,
    cuts: &[CutRecord],
    k: usize,
    max_binaries: usize,
) -> Option<TableCheck> {
    let w = ObjectiveWeights::default();
    let built = build_master(net, area, w, &Default::default(), cuts);
    let cut = &cuts[k];
    let name = format!("cut{k}");
    let aux: Vec<usize> = (0..built.model.num_vars())
        .filter(|&v| built.model.vars[v].name.ends_with(&format!("[{name}]")))
        .collect();
    assert!(!aux.is_empty());
    if cut.lines.len() + aux.len() > max_binaries {
        return None;
    }
    let theta = built.atlas.theta[&cut.feeder].0;
    let mut base = vec![0.0; built.model.num_vars()];
    for (v, var) in built.model.vars.iter().enumerate() {
        if var.name.starts_with("alpha[") || var.name.starts_with("phi[") {
            base[v] = 1.0;
        }
    }
    // with everything served the cut's value expression reduces to w_op θ
    let bounds = [(0.0, false), (cut.value / w.w_op + 1.0, true)];
    let mut out = TableCheck {
        assignments: 0,
        mismatches: 0,
    };
    for pattern in 0..1u32 << cut.lines.len() {
        let mut premise = true;
        let mut x = base.clone();
        for (j, l) in cut.lines.iter().enumerate() {
            let on = (pattern >> j) & 1 == 1;
            x[built.atlas.mu[l].0] = on as u8 as f64;
            premise &= on == cut.closed.contains(l);
        }
        for &(th, bound_holds) in &bounds {
            x[theta] = th;
            let expected = match cut.kind {
                CutKind::Feasibility => !premise,
                CutKind::Optimality => !premise || bound_holds || cut.value <= 0.0,
            };
            let exists = (0..1u32 << aux.len()).any(|bits| {
                let mut y = x.clone();
                for (j, &v) in aux.iter().enumerate() {
                    y[v] = ((bits >> j) & 1) as f64;
                }
                cut_rows_hold(&built.model, &format!("{name}/"), &y)
            });
            out.assignments += 1;
            out.mismatches += (exists != expected) as usize;
        }
    }
    Some(out)
}
