//! Modified combinatorial Benders decomposition: a MILP master proposes
//! radial configurations, per-unit MISOCP subproblems price them, and
//! logic cuts feed the unit values back to the master.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::time::Instant;

use gridrestore_conic::{solve_mip, MipStatus};
use serde::Serialize;

pub use crate::formulation::{CutKind, CutRecord};
use crate::formulation::build_master;
use crate::netmodel::{Configuration, Network, OffOutageArea};
use crate::solve::{evaluate_configuration, Evaluation, Schedule, SolveError, SolverParams, UnitCache};

/// One row of the convergence trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationTrace {
    pub q: usize,
    pub lb: f64,
    pub ub: f64,
    pub wall_ms: u128,
    pub clusters_feasible: usize,
    pub clusters_total: usize,
    pub cuts_added: usize,
    pub closed: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum McbStatus {
    /// `UB − LB` within `eps_opt`.
    Converged,
    /// Every radial configuration has been cut off; the incumbent is optimal.
    Exhausted,
    TimeLimit,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct McbResult {
    pub status: McbStatus,
    pub best: Option<Evaluation>,
    pub lb: f64,
    pub ub: f64,
    pub iterations: usize,
    pub trace: Vec<IterationTrace>,
    pub cuts: Vec<CutRecord>,
}

impl McbResult {
    pub fn schedule(&self) -> Option<&Schedule> {
        self.best.as_ref().and_then(|e| e.schedule.as_ref())
    }

    /// `UB − LB` in objective units.
    pub fn gap(&self) -> f64 {
        gap(self.lb, self.ub)
    }
}

fn gap(lb: f64, ub: f64) -> f64 {
    if ub.is_finite() {
        (ub - lb).max(0.0)
    } else {
        f64::INFINITY
    }
}

/// Master proposal: a configuration and the master's lower bound.
#[derive(Debug, Clone, PartialEq)]
pub struct MasterOutcome {
    pub configuration: Configuration,
    pub bound: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MasterStep {
    Proposal(MasterOutcome),
    /// No configuration satisfies the cut pool.
    Infeasible,
    /// No master solution lies below the cutoff, so the cutoff is a bound.
    AboveCutoff(f64),
}

/// Solves the master with the current cut pool. With a `cutoff` (the
/// incumbent value) the search ignores solutions that cannot improve on it.
pub fn step_master(
    net: &Network,
    area: &OffOutageArea,
    params: &SolverParams,
    cuts: &[CutRecord],
    cutoff: Option<f64>,
    remaining: std::time::Duration,
) -> Result<MasterStep, SolveError> {
    let built = build_master(net, area, params.weights, &params.relax, cuts);
    let mut mip = params.mip.clone();
    mip.time_limit = Some(remaining);
    mip.cutoff = cutoff;
    // master objectives sit near 1e4 while eps_opt can be 1e-6, so node
    // bounds need more digits than the default relative gap gives
    mip.ipm.gap_rel_tol = mip.ipm.gap_rel_tol.min(1e-12);
    mip.ipm.gap_abs_tol = mip.ipm.gap_abs_tol.min(1e-10);
    let res = solve_mip(&built.model, &mip)?;
    let inc = match (res.status, res.incumbent) {
        (MipStatus::Infeasible, _) => {
            return Ok(match cutoff {
                Some(c) => MasterStep::AboveCutoff(c),
                None => MasterStep::Infeasible,
            })
        }
        (_, Some(inc)) => inc,
        (MipStatus::TimeLimit, None) => return Err(SolveError::TimeLimit),
        (status, None) => return Err(SolveError::Unsupported(format!("master ended with {status:?}"))),
    };
    let closed: BTreeSet<usize> = built
        .atlas
        .mu
        .iter()
        .filter(|(_, v)| inc.values[v.0] > 0.5)
        .map(|(&l, _)| l)
        .collect();
    Ok(MasterStep::Proposal(MasterOutcome {
        configuration: Configuration { closed },
        bound: res.best_bound.min(inc.objective),
        objective: inc.objective,
    }))
}

/// Prices a configuration unit by unit.
pub fn step_subproblems(
    net: &Network,
    area: &OffOutageArea,
    cfg: &Configuration,
    params: &SolverParams,
    cache: &UnitCache,
) -> Result<Evaluation, SolveError> {
    evaluate_configuration(net, area, cfg, params, cache)
}

/// One cut per supply unit: an optimality cut carrying the unit value, or a
/// feasibility cut for an infeasible unit.
pub fn generate_cuts(eval: &Evaluation, cfg: &Configuration, q: usize) -> Vec<CutRecord> {
    eval.units
        .iter()
        .map(|(c, o)| CutRecord {
            iteration: q,
            kind: if o.feasible {
                CutKind::Optimality
            } else {
                CutKind::Feasibility
            },
            feeder: c.feeder,
            nodes: c.nodes.clone(),
            lines: c.cut_lines.clone(),
            closed: c.cut_lines.iter().copied().filter(|l| cfg.closed.contains(l)).collect(),
            value: if o.feasible { o.value } else { 0.0 },
        })
        .collect()
}

pub fn run_mcb(
    net: &Network,
    area: &OffOutageArea,
    params: &SolverParams,
    cache: &UnitCache,
) -> Result<McbResult, SolveError> {
    if params.weights.lexicographic {
        return Err(SolveError::Unsupported(
            "the decomposition supports weighted objectives only".into(),
        ));
    }
    params.weights.validate().map_err(SolveError::Unsupported)?;
    let start = Instant::now();
    let mut lb = 0.0f64;
    let mut ub = f64::INFINITY;
    let mut best: Option<Evaluation> = None;
    let mut seen: BTreeMap<Configuration, f64> = BTreeMap::new();
    let mut cuts: Vec<CutRecord> = Vec::new();
    let mut cut_keys: BTreeSet<(usize, Vec<usize>, Vec<usize>)> = BTreeSet::new();
    let mut trace = Vec::new();

    let mut status = McbStatus::IterationLimit;
    for q in 1..=params.max_iterations {
        let elapsed = start.elapsed();
        if elapsed >= params.time_limit {
            status = McbStatus::TimeLimit;
            break;
        }
        // a master solution within eps_opt of the incumbent cannot reopen the gap
        let cutoff = ub.is_finite().then_some(ub - params.eps_opt);
        let step = match step_master(net, area, params, &cuts, cutoff, params.time_limit - elapsed) {
            Ok(m) => m,
            Err(SolveError::TimeLimit) => {
                status = McbStatus::TimeLimit;
                break;
            }
            Err(e) => return Err(e),
        };
        let master = match step {
            MasterStep::Proposal(m) => m,
            MasterStep::Infeasible if q == 1 || best.is_none() => return Err(SolveError::NoRestoration),
            MasterStep::Infeasible | MasterStep::AboveCutoff(_) => {
                if let MasterStep::AboveCutoff(c) = step {
                    lb = lb.max(c);
                    status = McbStatus::Converged;
                    log::info!("iteration {q}: no master solution below the incumbent");
                } else {
                    lb = ub;
                    status = McbStatus::Exhausted;
                    log::info!("iteration {q}: master infeasible, every configuration is cut off");
                }
                trace.push(IterationTrace {
                    q,
                    lb,
                    ub,
                    wall_ms: start.elapsed().as_millis(),
                    clusters_feasible: 0,
                    clusters_total: 0,
                    cuts_added: 0,
                    closed: Vec::new(),
                });
                break;
            }
        };
        lb = lb.max(master.bound);
        let cfg = master.configuration;
        let mut added = 0;
        let (feasible_units, total_units);
        if let Some(&value) = seen.get(&cfg) {
            lb = lb.max(value);
            feasible_units = 0;
            total_units = 0;
        } else {
            let eval = step_subproblems(net, area, &cfg, params, cache)?;
            feasible_units = eval.units.iter().filter(|(_, o)| o.feasible).count();
            total_units = eval.units.len();
            for cut in generate_cuts(&eval, &cfg, q) {
                if cut_keys.insert((cut.feeder, cut.lines.clone(), cut.closed.clone())) {
                    cuts.push(cut);
                    added += 1;
                }
            }
            seen.insert(cfg.clone(), eval.cost.objective);
            if eval.feasible && eval.cost.objective < ub {
                ub = eval.cost.objective;
                best = Some(eval);
            }
        }
        log::info!(
            "iteration {q}: lb {lb:.6} ub {ub:.6} closed {:?} cuts +{added}",
            cfg.ids(net)
        );
        trace.push(IterationTrace {
            q,
            lb,
            ub,
            wall_ms: start.elapsed().as_millis(),
            clusters_feasible: feasible_units,
            clusters_total: total_units,
            cuts_added: added,
            closed: cfg.ids(net),
        });
        if gap(lb, ub) <= params.eps_opt {
            status = McbStatus::Converged;
            break;
        }
    }
    Ok(McbResult {
        status,
        best,
        lb,
        ub,
        iterations: trace.len(),
        trace,
        cuts,
    })
}

/// Convergence trace as CSV with header `q,lb,ub,wall_ms,clusters_feasible`.
pub fn trace_csv(trace: &[IterationTrace]) -> String {
    let mut s = String::from("q,lb,ub,wall_ms,clusters_feasible\n");
    for r in trace {
        let _ = writeln!(s, "{},{},{},{},{}", r.q, r.lb, r.ub, r.wall_ms, r.clusters_feasible);
    }
    s
}
