use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::Deserialize;

use super::area::FaultScenario;
use super::{
    Actuation, Dg, DgKind, Line, LoadPoint, Network, NetworkError, Node, Switch, SwitchKind, TimeGrid,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDoc {
    schema_version: u32,
    #[serde(default)]
    name: Option<String>,
    base_mva: f64,
    base_kv: f64,
    v_limits: Limits,
    #[serde(default)]
    slack_voltage: Option<f64>,
    #[serde(default)]
    time_grid: Option<TimeGrid>,
    nodes: Vec<NodeDoc>,
    lines: Vec<LineDoc>,
    #[serde(default)]
    switches: Vec<SwitchDoc>,
    #[serde(default)]
    dgs: Vec<DgDoc>,
    #[serde(default)]
    loads: Vec<LoadDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Limits {
    min: f64,
    max: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    id: String,
    #[serde(default)]
    substation: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LineDoc {
    id: String,
    from: String,
    to: String,
    r: f64,
    x: f64,
    f_max: f64,
    #[serde(default)]
    switch: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SwitchDoc {
    id: String,
    kind: SwitchKind,
    actuation: Actuation,
    op_time_min: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DgDoc {
    id: String,
    node: String,
    kind: DgKind,
    p_max: f64,
    s_max: f64,
    #[serde(default)]
    profile: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LoadDoc {
    node: String,
    #[serde(default = "one")]
    importance: f64,
    #[serde(default)]
    breaker: bool,
    #[serde(default = "half")]
    breaker_time_min: f64,
    p: Vec<f64>,
    q: Vec<f64>,
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    schema_version: u32,
    faulted_elements: Vec<String>,
    #[serde(default)]
    isolation_openings: Vec<String>,
    #[serde(default)]
    restorative_period: Option<Period>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Period {
    start_step: usize,
    end_step: usize,
}

fn read(path: &Path) -> Result<String, NetworkError> {
    std::fs::read_to_string(path).map_err(|e| NetworkError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn load_network(path: impl AsRef<Path>) -> Result<Network, NetworkError> {
    parse_network(&read(path.as_ref())?)
}

pub fn load_scenario(path: impl AsRef<Path>, net: &Network) -> Result<FaultScenario, NetworkError> {
    parse_scenario(&read(path.as_ref())?, net)
}

fn invalid(element: &str, reason: impl Into<String>) -> NetworkError {
    NetworkError::Invalid {
        element: element.to_string(),
        reason: reason.into(),
    }
}

fn check_version(v: u32) -> Result<(), NetworkError> {
    if v != SCHEMA_VERSION {
        return Err(NetworkError::Schema(format!(
            "unsupported schema_version {v} (expected {SCHEMA_VERSION})"
        )));
    }
    Ok(())
}

pub fn parse_network(text: &str) -> Result<Network, NetworkError> {
    let doc: NetworkDoc = serde_json::from_str(text).map_err(|e| NetworkError::Schema(e.to_string()))?;
    check_version(doc.schema_version)?;
    if !(doc.v_limits.min > 0.0 && doc.v_limits.min < doc.v_limits.max) {
        return Err(invalid("v_limits", "need 0 < min < max"));
    }
    if !(doc.base_mva > 0.0 && doc.base_kv > 0.0) {
        return Err(invalid("base", "base_mva and base_kv must be positive"));
    }
    let time_grid = doc.time_grid.unwrap_or_default();
    if time_grid.count == 0 || time_grid.step_minutes == 0 {
        return Err(invalid("time_grid", "count and step_minutes must be positive"));
    }
    let steps = time_grid.count;

    let mut node_ix: HashMap<String, usize> = HashMap::new();
    let mut nodes = Vec::with_capacity(doc.nodes.len());
    for n in &doc.nodes {
        if node_ix.insert(n.id.clone(), nodes.len()).is_some() {
            return Err(NetworkError::DuplicateNode(n.id.clone()));
        }
        nodes.push(Node {
            id: n.id.clone(),
            substation: n.substation,
            dg: None,
            load: None,
        });
    }
    let node_ref = |owner: &str, id: &str| -> Result<usize, NetworkError> {
        node_ix.get(id).copied().ok_or_else(|| NetworkError::Dangling {
            owner: owner.to_string(),
            kind: "node",
            id: id.to_string(),
        })
    };

    let mut switch_ix: HashMap<String, usize> = HashMap::new();
    let mut switches = Vec::with_capacity(doc.switches.len());
    for s in &doc.switches {
        if switch_ix.insert(s.id.clone(), switches.len()).is_some() {
            return Err(NetworkError::DuplicateSwitch(s.id.clone()));
        }
        if !(s.op_time_min > 0.0) {
            return Err(invalid(&s.id, "operation time must be positive"));
        }
        switches.push(Switch {
            id: s.id.clone(),
            kind: s.kind,
            actuation: s.actuation,
            op_time_min: s.op_time_min,
        });
    }

    let mut line_ids: HashMap<String, usize> = HashMap::new();
    let mut switch_owner: BTreeMap<usize, String> = BTreeMap::new();
    let mut lines = Vec::with_capacity(doc.lines.len());
    for l in &doc.lines {
        if line_ids.insert(l.id.clone(), lines.len()).is_some() {
            return Err(NetworkError::DuplicateLine(l.id.clone()));
        }
        let from = node_ref(&l.id, &l.from)?;
        let to = node_ref(&l.id, &l.to)?;
        if from == to {
            return Err(invalid(&l.id, "self loop"));
        }
        if !(l.r >= 0.0 && l.x >= 0.0 && l.f_max > 0.0) {
            return Err(invalid(&l.id, "need r >= 0, x >= 0, f_max > 0"));
        }
        let switch = match &l.switch {
            None => None,
            Some(sid) => {
                let s = *switch_ix.get(sid).ok_or_else(|| NetworkError::Dangling {
                    owner: l.id.clone(),
                    kind: "switch",
                    id: sid.clone(),
                })?;
                if let Some(prev) = switch_owner.insert(s, l.id.clone()) {
                    return Err(invalid(sid, format!("mounted on both {prev} and {}", l.id)));
                }
                Some(s)
            }
        };
        lines.push(Line {
            id: l.id.clone(),
            from,
            to,
            r: l.r,
            x: l.x,
            f_max: l.f_max,
            switch,
        });
    }

    let mut dgs = Vec::with_capacity(doc.dgs.len());
    for d in &doc.dgs {
        let node = node_ref(&d.id, &d.node)?;
        if nodes[node].dg.is_some() {
            return Err(invalid(&d.id, "node already hosts a DG"));
        }
        if !(d.p_max > 0.0 && d.p_max <= d.s_max) {
            return Err(invalid(&d.id, "need 0 < p_max <= s_max"));
        }
        let profile = match d.kind {
            DgKind::Dispatchable => Vec::new(),
            DgKind::NonDispatchable => {
                if d.profile.len() != steps {
                    return Err(invalid(&d.id, format!("profile needs {steps} entries")));
                }
                if d.profile.iter().any(|&p| p < 0.0 || p > d.p_max) {
                    return Err(invalid(&d.id, "profile outside [0, p_max]"));
                }
                d.profile.clone()
            }
        };
        nodes[node].dg = Some(dgs.len());
        dgs.push(Dg {
            id: d.id.clone(),
            node,
            kind: d.kind,
            p_max: d.p_max,
            s_max: d.s_max,
            profile,
        });
    }

    let mut loads = Vec::with_capacity(doc.loads.len());
    for ld in &doc.loads {
        let owner = format!("load@{}", ld.node);
        let node = node_ref(&owner, &ld.node)?;
        if nodes[node].load.is_some() {
            return Err(invalid(&owner, "node already has a load"));
        }
        if nodes[node].substation {
            return Err(invalid(&owner, "loads on substation nodes are not supported"));
        }
        if !(ld.importance >= 1.0) {
            return Err(invalid(&owner, "importance factor must be >= 1"));
        }
        if ld.p.len() != steps || ld.q.len() != steps {
            return Err(invalid(&owner, format!("profiles need {steps} entries")));
        }
        if ld.p.iter().any(|&p| p < 0.0) {
            return Err(invalid(&owner, "negative active demand"));
        }
        if ld.breaker && !(ld.breaker_time_min > 0.0) {
            return Err(invalid(&owner, "breaker time must be positive"));
        }
        nodes[node].load = Some(loads.len());
        loads.push(LoadPoint {
            node,
            importance: ld.importance,
            breaker: ld.breaker,
            breaker_time_min: ld.breaker_time_min,
            p: ld.p.clone(),
            q: ld.q.clone(),
        });
    }

    let mut incident = vec![Vec::new(); nodes.len()];
    for (k, l) in lines.iter().enumerate() {
        incident[l.from].push(k);
        incident[l.to].push(k);
    }
    let net = Network {
        name: doc.name.unwrap_or_else(|| "network".into()),
        base_mva: doc.base_mva,
        base_kv: doc.base_kv,
        v_min: doc.v_limits.min,
        v_max: doc.v_limits.max,
        slack_voltage: doc.slack_voltage.unwrap_or(1.0),
        time_grid,
        nodes,
        lines,
        switches,
        dgs,
        loads,
        incident,
    };
    check_radial_base(&net)?;
    Ok(net)
}

/// Base topology (ties open) must be a forest with exactly one substation per
/// component.
fn check_radial_base(net: &Network) -> Result<(), NetworkError> {
    let n = net.nodes.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (k, l) in net.lines.iter().enumerate() {
        if !net.normally_closed(k) {
            continue;
        }
        let (a, b) = (find(&mut parent, l.from), find(&mut parent, l.to));
        if a == b {
            return Err(NetworkError::NonRadialBase(cycle_through(net, k)));
        }
        parent[a] = b;
    }
    let mut subs_in: HashMap<usize, Vec<usize>> = HashMap::new();
    for s in net.substations() {
        let r = find(&mut parent, s);
        subs_in.entry(r).or_default().push(s);
    }
    for (i, node) in net.nodes.iter().enumerate() {
        let r = find(&mut parent, i);
        match subs_in.get(&r).map(|v| v.len()).unwrap_or(0) {
            0 => return Err(invalid(&node.id, "not connected to any substation in the base topology")),
            1 => {}
            _ => {
                return Err(NetworkError::NonRadialBase(vec![format!(
                    "substations {:?} share a component",
                    subs_in[&r].iter().map(|&s| net.nodes[s].id.clone()).collect::<Vec<_>>()
                )]))
            }
        }
    }
    Ok(())
}

/// Lines of the cycle closed by `closing` among normally closed lines.
fn cycle_through(net: &Network, closing: usize) -> Vec<String> {
    let l = &net.lines[closing];
    // BFS from l.from to l.to avoiding `closing`
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; net.nodes.len()];
    let mut seen = vec![false; net.nodes.len()];
    let mut queue = std::collections::VecDeque::from([l.from]);
    seen[l.from] = true;
    while let Some(u) = queue.pop_front() {
        for &k in &net.incident[u] {
            if k == closing || !net.normally_closed(k) {
                continue;
            }
            let v = net.lines[k].other(u);
            if !seen[v] {
                seen[v] = true;
                prev[v] = Some((u, k));
                queue.push_back(v);
            }
        }
    }
    let mut out = vec![l.id.clone()];
    let mut cur = l.to;
    while let Some((p, k)) = prev[cur] {
        out.push(net.lines[k].id.clone());
        cur = p;
    }
    out
}

pub fn parse_scenario(text: &str, net: &Network) -> Result<FaultScenario, NetworkError> {
    let doc: ScenarioDoc = serde_json::from_str(text).map_err(|e| NetworkError::Schema(e.to_string()))?;
    check_version(doc.schema_version)?;
    let mut faulted_lines = Vec::new();
    let mut faulted_substations = Vec::new();
    for e in &doc.faulted_elements {
        if let Some(l) = net.line_index(e) {
            faulted_lines.push(l);
        } else if let Some(n) = net.node_index(e).filter(|&n| net.nodes[n].substation) {
            faulted_substations.push(n);
        } else {
            return Err(NetworkError::UnknownElement(e.clone()));
        }
    }
    let mut isolation = Vec::new();
    for e in &doc.isolation_openings {
        let l = net.line_index(e).ok_or_else(|| NetworkError::UnknownElement(e.clone()))?;
        if !net.is_switchable(l) {
            return Err(invalid(e, "isolation opening on a line without switch"));
        }
        isolation.push(l);
    }
    let (start, end) = match doc.restorative_period {
        Some(p) => (p.start_step, p.end_step),
        None => (0, net.time_grid.count - 1),
    };
    if start > end || end >= net.time_grid.count {
        return Err(invalid(
            "restorative_period",
            format!("steps {start}..={end} outside grid of {}", net.time_grid.count),
        ));
    }
    Ok(FaultScenario {
        faulted_lines,
        faulted_substations,
        isolation_openings: isolation,
        steps: (start..=end).collect(),
    })
}
