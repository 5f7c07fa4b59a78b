//! Assembly of conic models for the integrated restoration problem, the
//! master problem and the per-cluster subproblems.
//!
//! Line flows are oriented `from → to` as stored in the network file:
//! `p_l`, `q_l` are the powers entering the line at its `from` end (negative
//! when power flows towards `from`) and `F_l` is the squared current.

mod build;
mod logic;
mod objective;
mod power;
mod radiality;

use std::collections::BTreeMap;

use gridrestore_conic::{ConicModel, LinExpr, Sense, VarId};

use crate::netmodel::{Network, OffOutageArea};

pub use build::{build_integrated, build_master, build_subproblem, BuiltModel, CutKind, CutRecord};
pub use logic::{encode_conditional, encode_either_or, Ineq};
pub use objective::{build_objective, ObjectiveTerms};
pub use power::{encode_distflow, encode_links, encode_socp_powerflow};
pub use radiality::{encode_load_pickup, encode_radiality};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveWeights {
    pub w_re: f64,
    pub w_sw: f64,
    pub w_op: f64,
    /// Strict priority F^re, then F^sw, then F^op by sequential solves.
    pub lexicographic: bool,
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        Self {
            w_re: 1e4,
            w_sw: 1e2,
            w_op: 1.0,
            lexicographic: false,
        }
    }
}

impl ObjectiveWeights {
    pub fn validate(&self) -> Result<(), String> {
        if self.lexicographic {
            if self.w_re < 0.0 || self.w_sw < 0.0 || self.w_op < 0.0 {
                return Err("weights must be non-negative".into());
            }
            return Ok(());
        }
        if !(self.w_re > self.w_sw && self.w_sw > self.w_op && self.w_op > 0.0) {
            return Err(format!(
                "weighted mode needs w_re > w_sw > w_op > 0, got {}, {}, {}",
                self.w_re, self.w_sw, self.w_op
            ));
        }
        Ok(())
    }
}

/// Big-M constants, derived per instance.
#[derive(Debug, Clone, PartialEq)]
pub struct BigMPolicy {
    pub m_flow: f64,
    pub m_volt: f64,
    /// Bound on |p|, |q| of a closed line, per line.
    pub m_pq: BTreeMap<usize, f64>,
    pub m_1: f64,
    pub m_2: f64,
}

impl BigMPolicy {
    pub fn derive(net: &Network, area: &OffOutageArea) -> Self {
        let n_sw = area.switchable.len() as f64;
        let m_pq = net
            .lines
            .iter()
            .enumerate()
            .map(|(k, l)| (k, net.v_max * l.f_max))
            .collect();
        Self {
            m_flow: area.n_star.len().max(1) as f64,
            m_volt: (net.v_max * net.v_max).max(net.slack_voltage * net.slack_voltage),
            m_pq,
            m_1: n_sw + 1.0,
            m_2: 2.0 * (n_sw + 1.0),
        }
    }
}

/// Limits of the linear power-flow relaxation used by the master problem.
#[derive(Debug, Clone, PartialEq)]
pub struct DistFlowRelaxation {
    /// Multiplier on `v_max · f_max` for the line apparent-power bound s̄.
    pub line_factor: f64,
    /// Multiplier on `S_max` for the DG bound h̄.
    pub dg_factor: f64,
    /// Relative widening of the squared voltage band.
    pub voltage_margin: f64,
    pub polygon_sides: usize,
}

impl Default for DistFlowRelaxation {
    fn default() -> Self {
        Self {
            line_factor: 1.05,
            dg_factor: 1.05,
            voltage_margin: 0.05,
            polygon_sides: 8,
        }
    }
}

/// Conduction status of a line inside a model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LineState {
    Closed,
    Switch(VarId),
    /// Unswitched line inside N*: conducts iff its endpoints are energized.
    Follows,
}

/// Energization of a node inside a model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeState {
    Energized,
    Phi(VarId),
}

/// Entity → variable maps for one model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VariableAtlas {
    /// Grid steps of the modelled period; `t` indexes this vector.
    pub steps: Vec<usize>,
    pub mu: BTreeMap<usize, VarId>,
    pub beta: BTreeMap<usize, (VarId, VarId)>,
    pub psi: BTreeMap<usize, (VarId, VarId)>,
    pub phi: BTreeMap<usize, VarId>,
    pub alpha: BTreeMap<(usize, usize), VarId>,
    pub omega: BTreeMap<usize, VarId>,
    pub u: BTreeMap<(usize, usize), VarId>,
    pub f: BTreeMap<(usize, usize), VarId>,
    pub p: BTreeMap<(usize, usize), VarId>,
    pub q: BTreeMap<(usize, usize), VarId>,
    pub p_inj: BTreeMap<(usize, usize), VarId>,
    pub q_inj: BTreeMap<(usize, usize), VarId>,
    pub theta: BTreeMap<usize, VarId>,
    /// Auxiliary binaries of the cut encodings.
    pub cut_aux: Vec<VarId>,
}

/// Shared state while assembling one model.
pub struct ModelBuilder<'a> {
    pub net: &'a Network,
    pub area: &'a OffOutageArea,
    pub weights: ObjectiveWeights,
    pub bigm: BigMPolicy,
    pub model: ConicModel,
    pub atlas: VariableAtlas,
    /// Nodes in the model, ascending.
    pub nodes: Vec<usize>,
    pub lines: Vec<usize>,
    pub line_state: BTreeMap<usize, LineState>,
    pub node_state: BTreeMap<usize, NodeState>,
}

impl<'a> ModelBuilder<'a> {
    fn new(net: &'a Network, area: &'a OffOutageArea, weights: ObjectiveWeights, bigm: BigMPolicy) -> Self {
        Self {
            net,
            area,
            weights,
            bigm,
            model: ConicModel::new(),
            atlas: VariableAtlas {
                steps: area.steps.clone(),
                ..Default::default()
            },
            nodes: Vec::new(),
            lines: Vec::new(),
            line_state: BTreeMap::new(),
            node_state: BTreeMap::new(),
        }
    }

    pub fn steps(&self) -> usize {
        self.atlas.steps.len()
    }

    /// φ_i as an expression (1 for energized nodes).
    pub fn phi(&self, node: usize) -> LinExpr {
        match self.node_state[&node] {
            NodeState::Energized => LinExpr::constant(1.0),
            NodeState::Phi(v) => LinExpr::var(v),
        }
    }

    /// μ as an expression (1 for closed lines; φ of an endpoint for
    /// unswitched lines inside N*).
    pub fn mu(&self, line: usize) -> LinExpr {
        match self.line_state[&line] {
            LineState::Closed => LinExpr::constant(1.0),
            LineState::Switch(v) => LinExpr::var(v),
            LineState::Follows => self.phi(self.net.lines[line].from),
        }
    }

    /// α_{i,t}: 1 outside N*, a binary for breaker-equipped nodes, φ_i
    /// otherwise.
    pub fn alpha(&self, node: usize, t: usize) -> LinExpr {
        if let Some(&v) = self.atlas.alpha.get(&(node, t)) {
            return LinExpr::var(v);
        }
        self.phi(node)
    }

    pub fn is_slack(&self, node: usize) -> bool {
        self.net.nodes[node].substation
    }

    /// U_{i,t} (constant at substations).
    pub fn u(&self, node: usize, t: usize) -> LinExpr {
        match self.atlas.u.get(&(node, t)) {
            Some(&v) => LinExpr::var(v),
            None => LinExpr::constant(self.net.slack_voltage * self.net.slack_voltage),
        }
    }

    pub fn row(&mut self, name: String, expr: LinExpr, sense: Sense, rhs: f64) {
        self.model.add_row(name, expr, sense, rhs);
    }

    pub fn line_name(&self, line: usize) -> &str {
        &self.net.lines[line].id
    }

    pub fn node_name(&self, node: usize) -> &str {
        &self.net.nodes[node].id
    }
}
