use rayon::prelude::*;

use super::{evaluate_configuration, Evaluation, SolveError, SolverParams, UnitCache};
use crate::netmodel::{is_radial, Configuration, Network, OffOutageArea};

pub const MAX_ENUM_LINES: usize = 12;
pub const MAX_ENUM_BREAKERS: usize = 10;

/// Size limits beyond which enumeration refuses to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumCaps {
    pub lines: usize,
    pub breakers: usize,
}

impl Default for EnumCaps {
    fn default() -> Self {
        Self {
            lines: MAX_ENUM_LINES,
            breakers: MAX_ENUM_BREAKERS,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EnumerationResult {
    /// Cheapest feasible configuration; ties go to the first in mask order.
    pub best: Option<Evaluation>,
    /// Objective of every radial configuration (infinite when infeasible),
    /// in mask order.
    pub evaluated: Vec<(Configuration, f64)>,
    pub radial_count: usize,
    pub feasible_count: usize,
}

/// Exhaustive reference solver: every radial configuration of the
/// switchable lines, each evaluated through its unit subproblems.
pub fn enumerate(
    net: &Network,
    area: &OffOutageArea,
    params: &SolverParams,
    cache: &UnitCache,
) -> Result<EnumerationResult, SolveError> {
    enumerate_with_caps(net, area, params, cache, EnumCaps::default())
}

pub fn enumerate_with_caps(
    net: &Network,
    area: &OffOutageArea,
    params: &SolverParams,
    cache: &UnitCache,
    caps: EnumCaps,
) -> Result<EnumerationResult, SolveError> {
    if params.weights.lexicographic {
        return Err(SolveError::Unsupported("enumeration supports weighted objectives only".into()));
    }
    params.weights.validate().map_err(SolveError::Unsupported)?;
    let n = area.switchable.len();
    // masks are u64
    if n > caps.lines.min(63) {
        return Err(SolveError::TooLarge(format!("{n} switchable lines (limit {})", caps.lines)));
    }
    let breakers = area
        .n_star
        .iter()
        .filter(|&&i| net.load_at(i).is_some_and(|l| l.breaker))
        .count();
    if breakers > caps.breakers {
        return Err(SolveError::TooLarge(format!("{breakers} breaker loads (limit {})", caps.breakers)));
    }
    let radial: Vec<Configuration> = (0..1u64 << n)
        .map(|m| Configuration::from_mask(area, m))
        .filter(|c| is_radial(net, area, c).radial)
        .collect();
    let eval = |c: &Configuration| evaluate_configuration(net, area, c, params, cache);
    let evals: Vec<Evaluation> = if params.parallel {
        radial.par_iter().map(eval).collect::<Result<_, _>>()?
    } else {
        radial.iter().map(eval).collect::<Result<_, _>>()?
    };
    let mut best: Option<&Evaluation> = None;
    for e in &evals {
        if e.feasible && best.map_or(true, |b| e.cost.objective < b.cost.objective) {
            best = Some(e);
        }
    }
    Ok(EnumerationResult {
        best: best.cloned(),
        evaluated: radial.iter().cloned().zip(evals.iter().map(|e| e.cost.objective)).collect(),
        radial_count: radial.len(),
        feasible_count: evals.iter().filter(|e| e.feasible).count(),
    })
}
