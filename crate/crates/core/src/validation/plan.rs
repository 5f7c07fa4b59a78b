use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ValidationError;
use crate::netmodel::{is_radial, Configuration, Network, OffOutageArea, SwitchKind};
use crate::solve::{CostBreakdown, Schedule};

pub const PLAN_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Element {
    Line,
    LoadBreaker,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operation {
    Open,
    Close,
}

/// One switching operation. Stages run in order; within a stage the listed
/// order is kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub stage: usize,
    pub element: Element,
    /// Line id, or the node id for a load breaker.
    pub id: String,
    pub operation: Operation,
    /// Grid time label at which the action is carried out.
    pub time: String,
}

impl Action {
    pub fn new(stage: usize, element: Element, id: &str, operation: Operation, time: String) -> Self {
        Self {
            stage,
            element,
            id: id.to_string(),
            operation,
            time,
        }
    }
}

/// Switching minutes of an action list: every operated element counts its
/// operation time once, however many times it is operated.
pub fn switching_minutes(
    actions: &[Action],
    mut minutes: impl FnMut(Element, &str) -> Option<f64>,
) -> Result<f64, ValidationError> {
    let mut seen = BTreeSet::new();
    let mut total = 0.0;
    for a in actions {
        if seen.insert((a.element, a.id.as_str())) {
            total += minutes(a.element, &a.id).ok_or_else(|| ValidationError::UnknownElement(a.id.clone()))?;
        }
    }
    Ok(total)
}

/// Switching sequence, pickup schedule and DG set points over the
/// restorative period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestorationPlan {
    pub schema_version: u32,
    pub network: String,
    pub method: String,
    /// Grid step indices of the restorative period.
    pub steps: Vec<usize>,
    pub times: Vec<String>,
    /// Switchable off-outage lines closed in the final configuration.
    pub closed: Vec<String>,
    pub actions: Vec<Action>,
    /// Served flag per step for every off-outage load.
    pub pickup: BTreeMap<String, Vec<bool>>,
    /// `[P, Q]` per step (p.u.) for each DG in service.
    pub dg_setpoints: BTreeMap<String, Vec<[f64; 2]>>,
    pub objective: CostBreakdown,
}

impl RestorationPlan {
    /// Orders the actions of `schedule`: line openings and breaker openings
    /// first, then tie closings (available ties before internal ones), then
    /// breaker closings at their pickup time. Every intermediate state of
    /// the line stages keeps a subset of the final closed set, so no
    /// intermediate loop is formed.
    pub fn from_schedule(net: &Network, area: &OffOutageArea, schedule: &Schedule, method: &str) -> Self {
        let cfg = &schedule.configuration;
        let times: Vec<String> = schedule.steps.iter().map(|&k| net.time_grid.label(k)).collect();
        let first = times.first().cloned().unwrap_or_default();
        let live = is_radial(net, area, cfg).energized;
        let mut actions = Vec::new();
        for &l in &area.w_sec {
            if !cfg.closed.contains(&l) {
                actions.push(Action::new(1, Element::Line, &net.lines[l].id, Operation::Open, first.clone()));
            }
        }
        for (&i, served) in &schedule.served {
            let breaker = net.load_at(i).is_some_and(|l| l.breaker);
            if breaker && live[i] && !served.first().copied().unwrap_or(false) {
                actions.push(Action::new(1, Element::LoadBreaker, &net.nodes[i].id, Operation::Open, first.clone()));
            }
        }
        for &l in area.w_ava.iter().chain(&area.w_int) {
            if cfg.closed.contains(&l) {
                actions.push(Action::new(2, Element::Line, &net.lines[l].id, Operation::Close, first.clone()));
            }
        }
        let mut pickups: Vec<(usize, usize)> = schedule
            .served
            .iter()
            .filter_map(|(&i, s)| {
                let t = s.iter().position(|&b| b)?;
                (t > 0).then_some((t, i))
            })
            .collect();
        pickups.sort_unstable();
        for (t, i) in pickups {
            actions.push(Action::new(3, Element::LoadBreaker, &net.nodes[i].id, Operation::Close, times[t].clone()));
        }
        Self {
            schema_version: PLAN_SCHEMA_VERSION,
            network: net.name.clone(),
            method: method.to_string(),
            steps: schedule.steps.clone(),
            times,
            closed: cfg.ids(net),
            actions,
            pickup: schedule
                .served
                .iter()
                .map(|(&i, s)| (net.nodes[i].id.clone(), s.clone()))
                .collect(),
            dg_setpoints: schedule
                .dg_output
                .iter()
                .filter_map(|(&i, v)| {
                    let dg = net.dg_at(i)?;
                    Some((dg.id.clone(), v.iter().map(|&(p, q)| [p, q]).collect()))
                })
                .collect(),
            objective: schedule.cost,
        }
    }

    /// Final configuration named by the plan.
    pub fn configuration(&self, net: &Network, area: &OffOutageArea) -> Result<Configuration, ValidationError> {
        let mut closed = BTreeSet::new();
        for id in &self.closed {
            let l = net.line_index(id).ok_or_else(|| ValidationError::UnknownElement(id.clone()))?;
            if !area.is_switchable(l) {
                return Err(ValidationError::NotSwitchable(id.clone()));
            }
            closed.insert(l);
        }
        Ok(Configuration { closed })
    }

    /// Switching minutes of the action list with the operation times of `net`.
    pub fn switching_minutes(&self, net: &Network) -> Result<f64, ValidationError> {
        switching_minutes(&self.actions, |e, id| match e {
            Element::Line => net
                .line_index(id)
                .and_then(|l| net.switch_of(l))
                .map(|s| s.op_time_min),
            Element::LoadBreaker => net
                .node_index(id)
                .and_then(|i| net.load_at(i))
                .filter(|l| l.breaker)
                .map(|l| l.breaker_time_min),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ValidationError> {
        let plan: Self = serde_json::from_str(text).map_err(|e| ValidationError::Plan(e.to_string()))?;
        if plan.schema_version != PLAN_SCHEMA_VERSION {
            return Err(ValidationError::Plan(format!(
                "unsupported schema_version {}",
                plan.schema_version
            )));
        }
        Ok(plan)
    }

    /// True when the line actions turn the post-isolation state into the
    /// final configuration.
    pub fn actions_consistent(&self, net: &Network, area: &OffOutageArea) -> bool {
        let Ok(cfg) = self.configuration(net, area) else { return false };
        let mut state: BTreeMap<&str, bool> = area
            .switchable
            .iter()
            .map(|&l| (net.lines[l].id.as_str(), net.switch_of(l).is_some_and(|s| s.kind == SwitchKind::Sectionalizing)))
            .collect();
        for a in self.actions.iter().filter(|a| a.element == Element::Line) {
            match state.get_mut(a.id.as_str()) {
                Some(s) => *s = a.operation == Operation::Close,
                None => return false,
            }
        }
        area.switchable
            .iter()
            .all(|&l| state[net.lines[l].id.as_str()] == cfg.closed.contains(&l))
    }
}
