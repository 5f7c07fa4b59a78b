use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::{Network, NetworkError, SwitchKind};

/// Faulted elements, the switches opened to isolate them and the grid steps
/// of the restorative period.
#[derive(Debug, Clone, PartialEq)]
pub struct FaultScenario {
    pub faulted_lines: Vec<usize>,
    pub faulted_substations: Vec<usize>,
    pub isolation_openings: Vec<usize>,
    pub steps: Vec<usize>,
}

impl FaultScenario {
    pub fn none(net: &Network) -> Self {
        Self {
            faulted_lines: Vec::new(),
            faulted_substations: Vec::new(),
            isolation_openings: Vec::new(),
            steps: (0..net.time_grid.count).collect(),
        }
    }
}

/// Healthy subtree hanging off one substation outlet.
#[derive(Debug, Clone, PartialEq)]
pub struct Feeder {
    pub id: String,
    pub substation: usize,
    /// Healthy non-substation nodes, ascending.
    pub nodes: Vec<usize>,
    /// Closed lines of the subtree including the outlet line.
    pub lines: Vec<usize>,
    /// Available tie lines whose healthy end lies in this feeder.
    pub ties: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OffOutageArea {
    pub steps: Vec<usize>,
    /// Nodes of the isolated faulted section; never restored.
    pub faulted_zone: Vec<usize>,
    pub healthy: Vec<bool>,
    pub in_star: Vec<bool>,
    /// N*, ascending.
    pub n_star: Vec<usize>,
    /// Lines forced open for the whole restorative period.
    pub locked_open: BTreeSet<usize>,
    /// W*: lines inside N* plus available ties.
    pub w_star: Vec<usize>,
    pub w_ava: Vec<usize>,
    pub w_int: Vec<usize>,
    pub w_sec: Vec<usize>,
    /// Lines inside N* without a switch.
    pub w_fixed: Vec<usize>,
    /// `w_ava ∪ w_int ∪ w_sec`, ascending: the configuration variables.
    pub switchable: Vec<usize>,
    pub feeders: Vec<Feeder>,
    pub node_feeder: Vec<Option<usize>>,
    pub tie_feeder: BTreeMap<usize, usize>,
}

impl OffOutageArea {
    pub fn is_empty(&self) -> bool {
        self.n_star.is_empty()
    }

    /// Feeders with at least one available tie, i.e. able to supply N*.
    pub fn supplying_feeders(&self) -> impl Iterator<Item = usize> + '_ {
        self.feeders
            .iter()
            .enumerate()
            .filter(|(_, f)| !f.ties.is_empty())
            .map(|(i, _)| i)
    }

    pub fn is_switchable(&self, line: usize) -> bool {
        self.switchable.binary_search(&line).is_ok()
    }

    /// For an available tie, the endpoint inside N*.
    pub fn tie_inner_end(&self, net: &Network, tie: usize) -> usize {
        let l = &net.lines[tie];
        if self.in_star[l.to] {
            l.to
        } else {
            l.from
        }
    }
}

pub fn compute_off_outage(net: &Network, fault: &FaultScenario) -> Result<OffOutageArea, NetworkError> {
    let n = net.nodes.len();
    for &l in fault.faulted_lines.iter().chain(&fault.isolation_openings) {
        if l >= net.lines.len() {
            return Err(NetworkError::UnknownElement(format!("line #{l}")));
        }
    }
    for &s in &fault.faulted_substations {
        if s >= n || !net.nodes[s].substation {
            return Err(NetworkError::UnknownElement(format!("substation #{s}")));
        }
    }
    let isolated: BTreeSet<usize> = fault.isolation_openings.iter().copied().collect();
    let usable = |k: usize| net.normally_closed(k) && !isolated.contains(&k);

    // faulted zone: closed component around faulted elements
    let mut in_zone = vec![false; n];
    let mut queue = VecDeque::new();
    for &l in &fault.faulted_lines {
        for e in [net.lines[l].from, net.lines[l].to] {
            if !in_zone[e] {
                in_zone[e] = true;
                queue.push_back(e);
            }
        }
    }
    for &s in &fault.faulted_substations {
        if !in_zone[s] {
            in_zone[s] = true;
            queue.push_back(s);
        }
    }
    while let Some(u) = queue.pop_front() {
        for &k in &net.incident[u] {
            if !usable(k) {
                continue;
            }
            let v = net.lines[k].other(u);
            if !in_zone[v] {
                in_zone[v] = true;
                queue.push_back(v);
            }
        }
    }
    let faulted_subs: BTreeSet<usize> = fault.faulted_substations.iter().copied().collect();
    for s in net.substations() {
        if in_zone[s] && !faulted_subs.contains(&s) {
            let what = fault
                .faulted_lines
                .first()
                .map(|&l| net.lines[l].id.clone())
                .unwrap_or_else(|| net.nodes[s].id.clone());
            return Err(NetworkError::NotIsolated {
                faulted: what,
                substation: net.nodes[s].id.clone(),
            });
        }
    }

    // healthy area, feeders by substation outlet
    let mut healthy = vec![false; n];
    let mut node_feeder: Vec<Option<usize>> = vec![None; n];
    let mut feeders: Vec<Feeder> = Vec::new();
    let faulted_line_set: BTreeSet<usize> = fault.faulted_lines.iter().copied().collect();
    for s in net.substations() {
        if in_zone[s] {
            continue;
        }
        healthy[s] = true;
        for &k in &net.incident[s] {
            if !usable(k) || faulted_line_set.contains(&k) {
                continue;
            }
            let head = net.lines[k].other(s);
            if healthy[head] || in_zone[head] {
                continue;
            }
            let fid = feeders.len();
            let mut f = Feeder {
                id: format!("{}/{}", net.nodes[s].id, net.nodes[head].id),
                substation: s,
                nodes: Vec::new(),
                lines: vec![k],
                ties: Vec::new(),
            };
            healthy[head] = true;
            node_feeder[head] = Some(fid);
            let mut q = VecDeque::from([head]);
            while let Some(u) = q.pop_front() {
                f.nodes.push(u);
                for &kk in &net.incident[u] {
                    if !usable(kk) || faulted_line_set.contains(&kk) {
                        continue;
                    }
                    let v = net.lines[kk].other(u);
                    if !healthy[v] && !in_zone[v] {
                        healthy[v] = true;
                        node_feeder[v] = Some(fid);
                        f.lines.push(kk);
                        q.push_back(v);
                    }
                }
            }
            f.nodes.sort_unstable();
            f.lines.sort_unstable();
            feeders.push(f);
        }
    }

    let in_star: Vec<bool> = (0..n).map(|i| !healthy[i] && !in_zone[i]).collect();
    let n_star: Vec<usize> = (0..n).filter(|&i| in_star[i]).collect();

    let mut locked_open: BTreeSet<usize> = isolated.clone();
    locked_open.extend(fault.faulted_lines.iter().copied());
    for (k, l) in net.lines.iter().enumerate() {
        if in_zone[l.from] || in_zone[l.to] {
            locked_open.insert(k);
        }
    }

    let mut w_star = Vec::new();
    let (mut w_ava, mut w_int, mut w_sec, mut w_fixed) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut tie_feeder = BTreeMap::new();
    for (k, l) in net.lines.iter().enumerate() {
        if locked_open.contains(&k) {
            continue;
        }
        let (a, b) = (in_star[l.from], in_star[l.to]);
        if a && b {
            w_star.push(k);
            match net.switch_of(k).map(|s| s.kind) {
                Some(SwitchKind::Tie) => w_int.push(k),
                Some(SwitchKind::Sectionalizing) => w_sec.push(k),
                None => w_fixed.push(k),
            }
        } else if (a || b) && net.is_switchable(k) {
            let outer = if a { l.to } else { l.from };
            if !healthy[outer] {
                continue;
            }
            w_star.push(k);
            w_ava.push(k);
            // a tie straight out of a substation forms its own supply unit
            let fid = match node_feeder[outer] {
                Some(f) => f,
                None => {
                    let fid = feeders.len();
                    feeders.push(Feeder {
                        id: format!("{}/{}", net.nodes[outer].id, l.id),
                        substation: outer,
                        nodes: Vec::new(),
                        lines: Vec::new(),
                        ties: Vec::new(),
                    });
                    fid
                }
            };
            feeders[fid].ties.push(k);
            tie_feeder.insert(k, fid);
        }
    }
    let mut switchable: Vec<usize> = w_ava.iter().chain(&w_int).chain(&w_sec).copied().collect();
    switchable.sort_unstable();

    Ok(OffOutageArea {
        steps: fault.steps.clone(),
        faulted_zone: (0..n).filter(|&i| in_zone[i]).collect(),
        healthy,
        in_star,
        n_star,
        locked_open,
        w_star,
        w_ava,
        w_int,
        w_sec,
        w_fixed,
        switchable,
        feeders,
        node_feeder,
        tie_feeder,
    })
}
