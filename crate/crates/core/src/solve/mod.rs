//! Solution strategies over a fixed off-outage area: the integrated MISOCP,
//! per-unit subproblems for a fixed configuration and the exhaustive oracle.

mod enumerate;
mod iao;
mod unit;

use std::collections::BTreeMap;
use std::time::Duration;

use gridrestore_conic::{MipSettings, SolveError as ConicError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formulation::{BuiltModel, DistFlowRelaxation, ObjectiveWeights};
use crate::netmodel::{Configuration, DgKind, Network, NetworkError, OffOutageArea};

pub use enumerate::{enumerate, enumerate_with_caps, EnumCaps, EnumerationResult, MAX_ENUM_BREAKERS, MAX_ENUM_LINES};
pub use iao::{solve_integrated, IntegratedResult};
pub use unit::{evaluate_configuration, solve_unit, Evaluation, UnitCache, UnitOutcome};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Conic(#[from] ConicError),
    #[error("{0}")]
    Unsupported(String),
    #[error("instance too large for enumeration: {0}")]
    TooLarge(String),
    #[error("no restoration exists")]
    NoRestoration,
    #[error("time limit reached without a feasible configuration")]
    TimeLimit,
}

#[derive(Debug, Clone)]
pub struct SolverParams {
    pub weights: ObjectiveWeights,
    /// Absolute gap `UB − LB` (objective units) at which the decomposition stops.
    pub eps_opt: f64,
    pub time_limit: Duration,
    pub max_iterations: usize,
    /// Solve unit subproblems on the rayon pool.
    pub parallel: bool,
    pub mip: MipSettings,
    pub relax: DistFlowRelaxation,
    /// Recorded in artifacts; the solvers are deterministic and never draw
    /// from it.
    pub seed: u64,
}

impl Default for SolverParams {
    fn default() -> Self {
        let mip = MipSettings {
            // objectives reach 1e5, so a purely absolute tolerance
            gap_rel: 0.0,
            gap_abs: 1e-6,
            ..MipSettings::default()
        };
        Self {
            weights: ObjectiveWeights::default(),
            eps_opt: 0.01,
            time_limit: Duration::from_secs(120),
            max_iterations: 500,
            parallel: true,
            mip,
            relax: DistFlowRelaxation::default(),
            seed: 0,
        }
    }
}

/// Unweighted objective terms and the weighted total of a solution.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub reliability: f64,
    pub switching_min: f64,
    pub losses: f64,
    pub objective: f64,
}

impl CostBreakdown {
    pub fn weighted(reliability: f64, switching_min: f64, losses: f64, w: &ObjectiveWeights) -> Self {
        Self {
            reliability,
            switching_min,
            losses,
            objective: w.w_re * reliability + w.w_sw * switching_min + w.w_op * losses,
        }
    }
}

/// A restoration decision over the modelled period.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub configuration: Configuration,
    pub steps: Vec<usize>,
    /// Served flag per period step for each off-outage load node.
    pub served: BTreeMap<usize, Vec<bool>>,
    /// `(P, Q)` per period step for each DG in service.
    pub dg_output: BTreeMap<usize, Vec<(f64, f64)>>,
    pub cost: CostBreakdown,
}

impl Schedule {
    /// Whether any off-outage load is served at some step.
    pub fn restores_any(&self) -> bool {
        self.served.values().flatten().any(|&s| s)
    }
}

/// Reads the served flags and DG outputs of `built` at `x`.
pub(crate) fn extract_served(
    net: &Network,
    area: &OffOutageArea,
    built: &BuiltModel,
    x: &[f64],
    served: &mut BTreeMap<usize, Vec<bool>>,
    dg_output: &mut BTreeMap<usize, Vec<(f64, f64)>>,
) {
    let steps = built.atlas.steps.len();
    for &i in &built.nodes {
        if area.in_star[i] && net.load_at(i).is_some() {
            let flags = (0..steps)
                .map(|t| match built.atlas.alpha.get(&(i, t)) {
                    Some(a) => x[a.0] > 0.5,
                    None => built.atlas.phi.get(&i).map_or(true, |p| x[p.0] > 0.5),
                })
                .collect();
            served.insert(i, flags);
        }
        let Some(dg) = net.dg_at(i) else { continue };
        let on = built.atlas.phi.get(&i).map_or(true, |p| x[p.0] > 0.5);
        if !on || net.nodes[i].substation {
            continue;
        }
        let out = (0..steps)
            .map(|t| match dg.kind {
                DgKind::Dispatchable => (x[built.atlas.p_inj[&(i, t)].0], x[built.atlas.q_inj[&(i, t)].0]),
                DgKind::NonDispatchable => (dg.profile[built.atlas.steps[t]], 0.0),
            })
            .collect();
        dg_output.insert(i, out);
    }
}

/// Total weighted energy not served at `nodes` if they stay dead.
pub(crate) fn dead_reliability(net: &Network, area: &OffOutageArea, nodes: impl Iterator<Item = usize>) -> f64 {
    let mut r = 0.0;
    for i in nodes {
        if let Some(l) = net.load_at(i) {
            r += area.steps.iter().map(|&k| l.importance * l.p[k]).sum::<f64>();
        }
    }
    r
}
