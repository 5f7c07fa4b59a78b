//! Best-bound branch and bound over the binary variables of a
//! [`ConicModel`], with relaxations solved by the interior-point method.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use crate::error::SolveError;
use crate::ipm::{solve_with_bounds, IpmSettings, SolveResult, SolveStatus};
use crate::model::{ConicModel, VarId, VarKind};

#[derive(Debug, Clone)]
pub struct MipSettings {
    pub ipm: IpmSettings,
    /// A binary within this distance of 0 or 1 counts as integral.
    pub int_tol: f64,
    pub gap_rel: f64,
    pub gap_abs: f64,
    pub max_nodes: usize,
    pub time_limit: Option<Duration>,
    /// Only solutions with objective below this value are of interest;
    /// nodes whose bound reaches it are pruned. Without an incumbent below
    /// the cutoff the result is `Infeasible` with `best_bound = cutoff`.
    pub cutoff: Option<f64>,
}

impl Default for MipSettings {
    fn default() -> Self {
        Self {
            ipm: IpmSettings::default(),
            int_tol: 1e-6,
            gap_rel: 1e-10,
            gap_abs: 1e-7,
            max_nodes: 200_000,
            time_limit: None,
            cutoff: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MipStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NodeLimit,
    TimeLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Incumbent {
    pub values: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct MipResult {
    pub status: MipStatus,
    pub incumbent: Option<Incumbent>,
    pub best_bound: f64,
    /// `incumbent - best_bound`, infinite without an incumbent.
    pub gap: f64,
    pub nodes: usize,
    /// Relaxations that failed numerically even after a retry.
    pub failed_nodes: usize,
    pub wall_time: Duration,
}

struct Node {
    bound: f64,
    seq: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // max-heap: smaller bound first, then the newest node (dives among ties)
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| self.seq.cmp(&other.seq))
    }
}

/// Most fractional binary among those of the highest priority class that
/// has a fractional member (ties go to the smallest index).
fn branching_var(model: &ConicModel, x: &[f64], binaries: &[VarId], tol: f64) -> Option<VarId> {
    let mut best: Option<(u8, f64, VarId)> = None;
    for &v in binaries {
        let f = x[v.0] - x[v.0].floor();
        let dist = f.min(1.0 - f);
        if dist <= tol {
            continue;
        }
        let p = model.vars[v.0].priority;
        if best.map_or(true, |(bp, d, _)| p > bp || (p == bp && dist > d)) {
            best = Some((p, dist, v));
        }
    }
    best.map(|(_, _, v)| v)
}

/// Solves a node relaxation, retrying once with looser tolerances when the
/// first attempt fails numerically.
fn relax_node(model: &ConicModel, node: &Node, ipm: &IpmSettings) -> Result<SolveResult, SolveError> {
    let attempt = |s: &IpmSettings| -> Result<SolveResult, SolveError> {
        let r = solve_with_bounds(model, &node.lower, &node.upper, s)?;
        if r.status == SolveStatus::IterationLimit {
            return Err(SolveError::Numerical {
                iterations: r.iterations,
                reason: "iteration limit".into(),
                trace: Vec::new(),
            });
        }
        Ok(r)
    };
    attempt(ipm).or_else(|e| {
        log::debug!("node {}: retrying relaxation after {e}", node.seq);
        let loose = IpmSettings {
            feas_tol: ipm.feas_tol.max(1e-7),
            gap_abs_tol: ipm.gap_abs_tol.max(1e-7),
            gap_rel_tol: ipm.gap_rel_tol.max(1e-8),
            static_reg: ipm.static_reg.max(1e-8),
            ..ipm.clone()
        };
        attempt(&loose)
    })
}

pub fn solve_mip(model: &ConicModel, settings: &MipSettings) -> Result<MipResult, SolveError> {
    model.validate()?;
    let start = Instant::now();
    let binaries = model.binaries();
    let mut lower: Vec<f64> = model.vars.iter().map(|v| v.lower).collect();
    let mut upper: Vec<f64> = model.vars.iter().map(|v| v.upper).collect();
    for &b in &binaries {
        lower[b.0] = lower[b.0].ceil();
        upper[b.0] = upper[b.0].floor();
    }

    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    heap.push(Node {
        bound: f64::NEG_INFINITY,
        seq,
        lower,
        upper,
    });
    let mut incumbent: Option<Incumbent> = None;
    let mut nodes = 0usize;
    let mut failed = 0usize;
    let tolerance = |inc: f64| settings.gap_abs.max(settings.gap_rel * inc.abs());
    let pruned = |bound: f64, incumbent: &Option<Incumbent>| {
        incumbent
            .as_ref()
            .is_some_and(|i| bound >= i.objective - tolerance(i.objective))
            || settings.cutoff.is_some_and(|c| bound >= c - tolerance(c))
    };

    let finish = |status, incumbent: Option<Incumbent>, bound: f64, nodes, failed| {
        let gap = incumbent.as_ref().map_or(f64::INFINITY, |i| i.objective - bound);
        MipResult {
            status,
            incumbent,
            best_bound: bound,
            gap,
            nodes,
            failed_nodes: failed,
            wall_time: start.elapsed(),
        }
    };

    // Child kept for immediate processing while its bound stays within
    // `tie_tol` of the best open bound; this dives through ties that
    // differ only by solver noise instead of sweeping them breadth-first.
    let mut plunge: Option<Node> = None;
    let tie_tol = |b: f64| 1e-7 * b.abs().max(1.0);
    loop {
        let node = match plunge.take() {
            Some(p) if heap.peek().map_or(true, |h| p.bound <= h.bound + tie_tol(h.bound)) => p,
            Some(p) => {
                heap.push(p);
                heap.pop().expect("heap is non-empty")
            }
            None => match heap.pop() {
                Some(n) => n,
                None => break,
            },
        };
        if pruned(node.bound, &incumbent) {
            continue;
        }
        let over_time = settings.time_limit.is_some_and(|t| start.elapsed() > t);
        if over_time || nodes >= settings.max_nodes {
            let bound = node.bound.min(heap.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min));
            let bound = match &incumbent {
                Some(i) => bound.min(i.objective),
                None => bound,
            };
            let status = if over_time { MipStatus::TimeLimit } else { MipStatus::NodeLimit };
            return Ok(finish(status, incumbent, bound, nodes, failed));
        }
        nodes += 1;
        let mut ipm = settings.ipm.clone();
        if let Some(t) = settings.time_limit {
            ipm.time_limit = Some(t.saturating_sub(start.elapsed()).max(Duration::from_millis(1)));
        }
        let relax = match relax_node(model, &node, &ipm) {
            Ok(r) => r,
            Err(e) if nodes == 1 => return Err(SolveError::RootRelaxation(Box::new(e))),
            Err(e) => {
                // no usable bound: split on a free binary under the parent bound
                failed += 1;
                log::warn!("node {}: relaxation failed ({e}), branching blind", node.seq);
                let free = binaries
                    .iter()
                    .filter(|b| node.lower[b.0] < node.upper[b.0])
                    .max_by_key(|b| (model.vars[b.0].priority, std::cmp::Reverse(b.0)));
                if let Some(&v) = free {
                    for val in [0.0, 1.0] {
                        seq += 1;
                        let mut lo = node.lower.clone();
                        let mut hi = node.upper.clone();
                        lo[v.0] = val;
                        hi[v.0] = val;
                        heap.push(Node {
                            bound: node.bound,
                            seq,
                            lower: lo,
                            upper: hi,
                        });
                    }
                }
                continue;
            }
        };
        match relax.status {
            SolveStatus::Optimal => {}
            SolveStatus::Infeasible => continue,
            SolveStatus::Unbounded => {
                return Ok(finish(MipStatus::Unbounded, None, f64::NEG_INFINITY, nodes, failed));
            }
            SolveStatus::TimeLimit => {
                heap.push(node);
                continue;
            }
            SolveStatus::IterationLimit => unreachable!("relax_node maps iteration limits to errors"),
        }
        // the dual objective is the certified bound
        let bound = relax.objective.min(relax.dual_objective).max(node.bound);
        if pruned(bound, &incumbent) {
            continue;
        }
        match branching_var(model, &relax.x, &binaries, settings.int_tol) {
            None => {
                let mut values = relax.x.clone();
                let mut objective = relax.objective;
                // Polish: snap binaries and re-solve the continuous part.
                let mut lo = node.lower.clone();
                let mut hi = node.upper.clone();
                for &b in &binaries {
                    let r = values[b.0].round();
                    lo[b.0] = r;
                    hi[b.0] = r;
                }
                if let Ok(p) = solve_with_bounds(model, &lo, &hi, &ipm) {
                    if p.status == SolveStatus::Optimal {
                        values = p.x;
                        objective = p.objective;
                    }
                }
                for &b in &binaries {
                    values[b.0] = values[b.0].round();
                }
                if incumbent.as_ref().map_or(true, |i| objective < i.objective) {
                    log::debug!("node {}: incumbent {objective}", node.seq);
                    incumbent = Some(Incumbent { values, objective });
                }
            }
            Some(v) => {
                // dive towards the nearer integer, queue the other side
                let near = relax.x[v.0].round();
                for val in [1.0 - near, near] {
                    seq += 1;
                    let mut lo = node.lower.clone();
                    let mut hi = node.upper.clone();
                    lo[v.0] = val;
                    hi[v.0] = val;
                    let child = Node {
                        bound,
                        seq,
                        lower: lo,
                        upper: hi,
                    };
                    if val == near {
                        plunge = Some(child);
                    } else {
                        heap.push(child);
                    }
                }
            }
        }
    }
    match incumbent {
        Some(inc) => {
            let b = inc.objective;
            Ok(finish(MipStatus::Optimal, Some(inc), b, nodes, failed))
        }
        None => {
            let bound = settings.cutoff.unwrap_or(f64::INFINITY);
            Ok(finish(MipStatus::Infeasible, None, bound, nodes, failed))
        }
    }
}

/// True when every binary of `model` is integral in `x`.
pub fn is_integral(model: &ConicModel, x: &[f64], tol: f64) -> bool {
    model
        .vars
        .iter()
        .zip(x)
        .filter(|(v, _)| v.kind == VarKind::Binary)
        .all(|(_, &xi)| (xi - xi.round()).abs() <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LinExpr, Sense};

    #[test]
    fn fractional_binary_window_is_infeasible() {
        let mut m = ConicModel::new();
        let x = m.add_binary("x");
        m.add_row("lo", LinExpr::var(x), Sense::Ge, 0.2);
        m.add_row("hi", LinExpr::var(x), Sense::Le, 0.8);
        let r = solve_mip(&m, &MipSettings::default()).unwrap();
        assert_eq!(r.status, MipStatus::Infeasible);
        assert!(r.incumbent.is_none());
    }

    #[test]
    fn node_order_prefers_small_bound_then_newest() {
        let mk = |bound, seq| Node {
            bound,
            seq,
            lower: vec![],
            upper: vec![],
        };
        let mut h = BinaryHeap::new();
        h.push(mk(2.0, 0));
        h.push(mk(1.0, 2));
        h.push(mk(1.0, 1));
        assert_eq!(h.pop().unwrap().seq, 2);
        assert_eq!(h.pop().unwrap().seq, 1);
        assert_eq!(h.pop().unwrap().seq, 0);
    }
}
