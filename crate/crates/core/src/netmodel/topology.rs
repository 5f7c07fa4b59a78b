use std::collections::{BTreeSet, VecDeque};

use serde::Serialize;

use super::{Network, OffOutageArea};

/// Status of the switchable lines of the off-outage area; every line not
/// listed in `closed` is open.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Configuration {
    pub closed: BTreeSet<usize>,
}

impl Configuration {
    /// Post-isolation status: sectionalizers closed, ties open.
    pub fn base(area: &OffOutageArea) -> Self {
        Self {
            closed: area.w_sec.iter().copied().collect(),
        }
    }

    /// Bit `k` of `mask` closes `area.switchable[k]`.
    pub fn from_mask(area: &OffOutageArea, mask: u64) -> Self {
        Self {
            closed: area
                .switchable
                .iter()
                .enumerate()
                .filter(|(k, _)| (mask >> k) & 1 == 1)
                .map(|(_, &l)| l)
                .collect(),
        }
    }

    /// Whether `line` conducts under this configuration.
    pub fn line_closed(&self, net: &Network, area: &OffOutageArea, line: usize) -> bool {
        if area.locked_open.contains(&line) {
            false
        } else if area.is_switchable(line) {
            self.closed.contains(&line)
        } else {
            net.normally_closed(line)
        }
    }

    /// Switching time of the line operations relative to the pre-fault state.
    pub fn switching_minutes(&self, net: &Network, area: &OffOutageArea) -> f64 {
        let mut total = 0.0;
        for &l in &area.switchable {
            let closed = self.closed.contains(&l);
            if closed != net.normally_closed(l) {
                total += net.switch_of(l).map_or(0.0, |s| s.op_time_min);
            }
        }
        total
    }

    pub fn ids(&self, net: &Network) -> Vec<String> {
        self.closed.iter().map(|&l| net.lines[l].id.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// Closed lines forming a loop.
    Cycle { lines: Vec<String> },
    /// Closed switches in a component without a substation path.
    Island { nodes: Vec<String>, has_dg: bool },
    /// Two substations joined by closed lines.
    Meshed { substations: Vec<String> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialityReport {
    pub radial: bool,
    pub violation: Option<Violation>,
    /// Per node: connected to a healthy substation.
    pub energized: Vec<bool>,
}

pub fn is_radial(net: &Network, area: &OffOutageArea, cfg: &Configuration) -> RadialityReport {
    let n = net.nodes.len();
    let closed: Vec<usize> = (0..net.lines.len()).filter(|&k| cfg.line_closed(net, area, k)).collect();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut violation = None;
    let mut tree_adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for &k in &closed {
        let l = &net.lines[k];
        let (a, b) = (find(&mut parent, l.from), find(&mut parent, l.to));
        if a == b {
            if violation.is_none() {
                violation = Some(Violation::Cycle {
                    lines: cycle_lines(net, &tree_adj, k),
                });
            }
            continue;
        }
        parent[a] = b;
        tree_adj[l.from].push((l.to, k));
        tree_adj[l.to].push((l.from, k));
    }
    let healthy_subs: Vec<usize> = net.substations().filter(|&s| area.healthy[s]).collect();
    let mut comp_subs: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for &s in &healthy_subs {
        let r = find(&mut parent, s);
        comp_subs.entry(r).or_default().push(s);
    }
    let energized: Vec<bool> = (0..n).map(|i| comp_subs.contains_key(&find(&mut parent, i))).collect();
    if violation.is_none() {
        if let Some(subs) = comp_subs.values().find(|v| v.len() > 1) {
            violation = Some(Violation::Meshed {
                substations: subs.iter().map(|&s| net.nodes[s].id.clone()).collect(),
            });
        }
    }
    if violation.is_none() {
        for &k in &closed {
            if !area.is_switchable(k) {
                continue;
            }
            let root = find(&mut parent, net.lines[k].from);
            if comp_subs.contains_key(&root) {
                continue;
            }
            let nodes: Vec<usize> = (0..n).filter(|&i| find(&mut parent, i) == root).collect();
            violation = Some(Violation::Island {
                has_dg: nodes.iter().any(|&i| net.nodes[i].dg.is_some()),
                nodes: nodes.iter().map(|&i| net.nodes[i].id.clone()).collect(),
            });
            break;
        }
    }
    RadialityReport {
        radial: violation.is_none(),
        violation,
        energized,
    }
}

/// Path in the current forest between the endpoints of `closing`, plus it.
fn cycle_lines(net: &Network, tree_adj: &[Vec<(usize, usize)>], closing: usize) -> Vec<String> {
    let l = &net.lines[closing];
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; tree_adj.len()];
    let mut seen = vec![false; tree_adj.len()];
    seen[l.from] = true;
    let mut q = VecDeque::from([l.from]);
    while let Some(u) = q.pop_front() {
        for &(v, k) in &tree_adj[u] {
            if !seen[v] {
                seen[v] = true;
                prev[v] = Some((u, k));
                q.push_back(v);
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

/// Off-outage nodes supplied through one feeder under a configuration.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cluster {
    pub index: usize,
    /// Supplying feeder (index into `OffOutageArea::feeders`).
    pub feeder: usize,
    /// X: energized off-outage nodes, ascending.
    pub nodes: Vec<usize>,
    /// Closed lines with both ends in X.
    pub lines: Vec<usize>,
    /// Y: closed available ties into X, plus closed internal ties at DG nodes.
    pub sources: Vec<usize>,
    /// Closed available ties of the feeder.
    pub closed_ties: Vec<usize>,
    /// Switchable lines touching X plus every available tie of the feeder;
    /// the line set a cut on this cluster ranges over.
    pub cut_lines: Vec<usize>,
}

impl Cluster {
    /// Key identifying the subproblem: two clusters with equal keys have
    /// identical subproblems.
    pub fn signature(&self) -> (usize, Vec<usize>, Vec<usize>, Vec<usize>) {
        (self.feeder, self.nodes.clone(), self.lines.clone(), self.closed_ties.clone())
    }
}

/// One entry per feeder able to supply N* (clusters may be empty), in
/// feeder order. Fails with the radiality violation for non-radial input.
pub fn supply_units(net: &Network, area: &OffOutageArea, cfg: &Configuration) -> Result<Vec<Cluster>, Violation> {
    let report = is_radial(net, area, cfg);
    if let Some(v) = report.violation {
        return Err(v);
    }
    let mut units = Vec::new();
    for f in area.supplying_feeders() {
        let feeder = &area.feeders[f];
        let closed_ties: Vec<usize> = feeder.ties.iter().copied().filter(|t| cfg.closed.contains(t)).collect();
        let mut in_x = vec![false; net.nodes.len()];
        let mut q = VecDeque::new();
        for &t in &closed_ties {
            let e = area.tie_inner_end(net, t);
            if !in_x[e] {
                in_x[e] = true;
                q.push_back(e);
            }
        }
        while let Some(u) = q.pop_front() {
            for &k in &net.incident[u] {
                let v = net.lines[k].other(u);
                if area.in_star[v] && !in_x[v] && cfg.line_closed(net, area, k) {
                    in_x[v] = true;
                    q.push_back(v);
                }
            }
        }
        let nodes: Vec<usize> = (0..net.nodes.len()).filter(|&i| in_x[i]).collect();
        let mut lines = Vec::new();
        let mut sources = closed_ties.clone();
        let mut cut: BTreeSet<usize> = feeder.ties.iter().copied().collect();
        for (k, l) in net.lines.iter().enumerate() {
            let (a, b) = (in_x[l.from], in_x[l.to]);
            if (a || b) && area.is_switchable(k) {
                cut.insert(k);
            }
            if a && b && cfg.line_closed(net, area, k) {
                lines.push(k);
                let dg_end = net.nodes[l.from].dg.is_some() || net.nodes[l.to].dg.is_some();
                if dg_end && area.w_int.contains(&k) {
                    sources.push(k);
                }
            }
        }
        sources.sort_unstable();
        units.push(Cluster {
            index: units.len(),
            feeder: f,
            nodes,
            lines,
            sources,
            closed_ties,
            cut_lines: cut.into_iter().collect(),
        });
    }
    Ok(units)
}

/// Non-empty clusters of a radial configuration, indexed from 0.
pub fn partition_clusters(
    net: &Network,
    area: &OffOutageArea,
    cfg: &Configuration,
) -> Result<Vec<Cluster>, Violation> {
    let mut out: Vec<Cluster> = supply_units(net, area, cfg)?
        .into_iter()
        .filter(|c| !c.nodes.is_empty())
        .collect();
    for (i, c) in out.iter_mut().enumerate() {
        c.index = i;
    }
    Ok(out)
}
