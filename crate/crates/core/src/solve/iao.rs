use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use gridrestore_conic::{solve_mip, LinExpr, MipStatus, Sense};

use super::{extract_served, CostBreakdown, Schedule, SolveError, SolverParams};
use crate::formulation::{build_integrated, BuiltModel};
use crate::netmodel::{is_radial, Configuration, Network, OffOutageArea};

/// Outcome of the integrated MISOCP.
#[derive(Debug, Clone)]
pub struct IntegratedResult {
    pub schedule: Schedule,
    pub best_bound: f64,
    pub bb_nodes: usize,
    pub wall_time: Duration,
}

fn schedule_from(net: &Network, area: &OffOutageArea, built: &BuiltModel, x: &[f64], params: &SolverParams) -> Schedule {
    let configuration = Configuration {
        closed: built.atlas.mu.iter().filter(|(_, v)| x[v.0] > 0.5).map(|(&l, _)| l).collect(),
    };
    let mut served = BTreeMap::new();
    let mut dg_output = BTreeMap::new();
    extract_served(net, area, built, x, &mut served, &mut dg_output);
    // switching minutes from the rounded decisions; the continuous ω carry
    // solver noise
    let energized = is_radial(net, area, &configuration).energized;
    let breaker_min: f64 = served
        .iter()
        .filter(|(&i, s)| energized[i] && !s.first().copied().unwrap_or(true))
        .filter_map(|(&i, _)| net.load_at(i).filter(|l| l.breaker).map(|l| l.breaker_time_min))
        .sum();
    let cost = CostBreakdown::weighted(
        built.terms.reliability.eval(x),
        configuration.switching_minutes(net, area) + breaker_min,
        built.terms.losses.eval(x),
        &params.weights,
    );
    Schedule {
        configuration,
        steps: area.steps.clone(),
        served,
        dg_output,
        cost,
    }
}

/// Solves the whole problem as one MISOCP by branch and bound. In
/// lexicographic mode the three terms are minimized in priority order, each
/// stage keeping the earlier optima as constraints.
pub fn solve_integrated(net: &Network, area: &OffOutageArea, params: &SolverParams) -> Result<IntegratedResult, SolveError> {
    params.weights.validate().map_err(SolveError::Unsupported)?;
    let start = Instant::now();
    let mut built = build_integrated(net, area, params.weights);
    let mut mip = params.mip.clone();
    mip.time_limit = Some(params.time_limit);

    let stages: Vec<LinExpr> = if params.weights.lexicographic {
        vec![
            built.terms.reliability.clone(),
            built.terms.switching.clone(),
            built.terms.losses.clone(),
        ]
    } else {
        vec![built.model.objective.clone()]
    };
    let mut last = None;
    let mut nodes = 0;
    for (s, obj) in stages.iter().enumerate() {
        built.model.set_objective(obj.clone());
        let res = solve_mip(&built.model, &mip)?;
        nodes += res.nodes;
        let inc = match (res.status, res.incumbent) {
            (MipStatus::Infeasible, _) => return Err(SolveError::NoRestoration),
            (MipStatus::TimeLimit, None) => return Err(SolveError::TimeLimit),
            (_, Some(inc)) => inc,
            (status, None) => return Err(SolveError::Unsupported(format!("integrated model ended with {status:?}"))),
        };
        if s + 1 < stages.len() {
            let slack = 1e-7 * inc.objective.abs().max(1.0);
            built
                .model
                .add_row(format!("lex{s}"), obj.clone(), Sense::Le, inc.objective + slack);
        }
        last = Some((inc, res.best_bound));
    }
    let (inc, bound) = last.expect("at least one stage");
    let schedule = schedule_from(net, area, &built, &inc.values, params);
    Ok(IntegratedResult {
        best_bound: if params.weights.lexicographic { schedule.cost.objective } else { bound },
        schedule,
        bb_nodes: nodes,
        wall_time: start.elapsed(),
    })
}
