use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use gridrestore_conic::{solve_mip, MipSettings, MipStatus};
use rayon::prelude::*;

use super::{dead_reliability, extract_served, CostBreakdown, Schedule, SolveError, SolverParams};
use crate::formulation::{build_subproblem, ObjectiveWeights};
use crate::netmodel::{supply_units, Cluster, Configuration, Network, OffOutageArea};

/// Optimal operation of one supply unit.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitOutcome {
    pub feasible: bool,
    /// Weighted value `w_re·reliability + w_sw·breaker_min + w_op·losses`.
    pub value: f64,
    pub reliability: f64,
    pub breaker_min: f64,
    pub losses: f64,
    pub served: BTreeMap<usize, Vec<bool>>,
    pub dg_output: BTreeMap<usize, Vec<(f64, f64)>>,
    pub bb_nodes: usize,
}

impl UnitOutcome {
    fn infeasible(bb_nodes: usize) -> Self {
        Self {
            feasible: false,
            value: f64::INFINITY,
            reliability: 0.0,
            breaker_min: 0.0,
            losses: 0.0,
            served: BTreeMap::new(),
            dg_output: BTreeMap::new(),
            bb_nodes,
        }
    }
}

type Signature = (usize, Vec<usize>, Vec<usize>, Vec<usize>);

/// Memo of unit solves keyed by [`Cluster::signature`]. Sharing one cache
/// between solvers makes their unit values bitwise identical.
#[derive(Debug, Default)]
pub struct UnitCache {
    map: Mutex<HashMap<Signature, Arc<UnitOutcome>>>,
    hits: AtomicUsize,
    solves: AtomicUsize,
}

impl UnitCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn solves(&self) -> usize {
        self.solves.load(Ordering::Relaxed)
    }

    fn get(&self, key: &Signature) -> Option<Arc<UnitOutcome>> {
        let hit = self.map.lock().expect("unit cache poisoned").get(key).cloned();
        if hit.is_some() {
            self.hits.fetch_add(1, Ordering::Relaxed);
        }
        hit
    }

    fn put(&self, key: Signature, v: Arc<UnitOutcome>) {
        self.solves.fetch_add(1, Ordering::Relaxed);
        self.map.lock().expect("unit cache poisoned").insert(key, v);
    }
}

pub fn solve_unit(
    net: &Network,
    area: &OffOutageArea,
    cluster: &Cluster,
    weights: ObjectiveWeights,
    mip: &MipSettings,
) -> Result<UnitOutcome, SolveError> {
    let built = build_subproblem(net, area, cluster, weights);
    let res = solve_mip(&built.model, mip)?;
    if res.failed_nodes > 0 {
        log::warn!("unit {}: {} relaxations failed numerically", cluster.index, res.failed_nodes);
    }
    let inc = match (res.status, res.incumbent) {
        (MipStatus::Infeasible, _) => return Ok(UnitOutcome::infeasible(res.nodes)),
        (_, Some(inc)) => {
            if res.status != MipStatus::Optimal {
                log::warn!("unit {} stopped with {:?}, using incumbent", cluster.index, res.status);
            }
            inc
        }
        (status, None) => {
            return Err(SolveError::Unsupported(format!(
                "unit subproblem ended with {status:?} and no solution"
            )))
        }
    };
    let x = &inc.values;
    let mut served = BTreeMap::new();
    let mut dg_output = BTreeMap::new();
    extract_served(net, area, &built, x, &mut served, &mut dg_output);
    // ω is continuous and comes back with solver noise; its optimal value is
    // fixed by the rounded pickup pattern, so recount from that
    let breaker_min: f64 = cluster
        .nodes
        .iter()
        .filter_map(|&i| net.load_at(i).filter(|l| l.breaker).map(|l| (i, l.breaker_time_min)))
        .filter(|(i, _)| served.get(i).is_some_and(|s| !s.first().copied().unwrap_or(true)))
        .map(|(_, m)| m)
        .sum();
    let reliability = built.terms.reliability.eval(x);
    let losses = built.terms.losses.eval(x);
    Ok(UnitOutcome {
        feasible: true,
        value: weights.w_re * reliability + weights.w_sw * breaker_min + weights.w_op * losses,
        reliability,
        breaker_min,
        losses,
        served,
        dg_output,
        bb_nodes: res.nodes,
    })
}

/// A configuration with its supply units solved.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub units: Vec<(Cluster, Arc<UnitOutcome>)>,
    pub feasible: bool,
    pub cost: CostBreakdown,
    /// Present when feasible.
    pub schedule: Option<Schedule>,
}

/// Solves every supply unit of a radial configuration (through `cache`) and
/// assembles the total cost.
pub fn evaluate_configuration(
    net: &Network,
    area: &OffOutageArea,
    cfg: &Configuration,
    params: &SolverParams,
    cache: &UnitCache,
) -> Result<Evaluation, SolveError> {
    let units = supply_units(net, area, cfg)
        .map_err(|v| SolveError::Unsupported(format!("configuration is not radial: {v:?}")))?;
    let solve = |c: &Cluster| -> Result<Arc<UnitOutcome>, SolveError> {
        let key = c.signature();
        if let Some(hit) = cache.get(&key) {
            return Ok(hit);
        }
        let out = Arc::new(solve_unit(net, area, c, params.weights, &params.mip)?);
        cache.put(key, out.clone());
        Ok(out)
    };
    let outcomes: Vec<Arc<UnitOutcome>> = if params.parallel {
        units.par_iter().map(solve).collect::<Result<_, _>>()?
    } else {
        units.iter().map(solve).collect::<Result<_, _>>()?
    };
    let feasible = outcomes.iter().all(|o| o.feasible);
    let w = &params.weights;

    let mut in_unit = vec![false; net.nodes.len()];
    for c in &units {
        for &i in &c.nodes {
            in_unit[i] = true;
        }
    }
    let dead = dead_reliability(net, area, area.n_star.iter().copied().filter(|&i| !in_unit[i]));
    let line_min = cfg.switching_minutes(net, area);
    let mut cost = CostBreakdown {
        reliability: dead,
        switching_min: line_min,
        losses: 0.0,
        objective: w.w_re * dead + w.w_sw * line_min,
    };
    for o in &outcomes {
        cost.reliability += o.reliability;
        cost.switching_min += o.breaker_min;
        cost.losses += o.losses;
        cost.objective += o.value;
    }
    let schedule = feasible.then(|| {
        let steps = area.steps.len();
        let mut served: BTreeMap<usize, Vec<bool>> = area
            .n_star
            .iter()
            .filter(|&&i| net.load_at(i).is_some())
            .map(|&i| (i, vec![false; steps]))
            .collect();
        let mut dg_output = BTreeMap::new();
        for o in &outcomes {
            served.extend(o.served.iter().map(|(k, v)| (*k, v.clone())));
            dg_output.extend(o.dg_output.iter().map(|(k, v)| (*k, v.clone())));
        }
        Schedule {
            configuration: cfg.clone(),
            steps: area.steps.clone(),
            served,
            dg_output,
            cost,
        }
    });
    if !feasible {
        cost.objective = f64::INFINITY;
    }
    Ok(Evaluation {
        units: units.into_iter().zip(outcomes).collect(),
        feasible,
        cost,
        schedule,
    })
}
