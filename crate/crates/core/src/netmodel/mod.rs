//! Grid data model: nodes, lines, switches, DGs and load points, loaded from
//! the JSON network format in `schemas/`.

mod area;
mod io;
mod topology;

use thiserror::Error;

pub use area::{compute_off_outage, FaultScenario, Feeder, OffOutageArea};
pub use io::{load_network, load_scenario, parse_network, parse_scenario};
pub use topology::{is_radial, partition_clusters, supply_units, Cluster, Configuration, RadialityReport, Violation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("duplicate node {0}")]
    DuplicateNode(String),
    #[error("duplicate line {0}")]
    DuplicateLine(String),
    #[error("duplicate switch {0}")]
    DuplicateSwitch(String),
    #[error("{owner} references unknown {kind} {id}")]
    Dangling { owner: String, kind: &'static str, id: String },
    #[error("invalid {element}: {reason}")]
    Invalid { element: String, reason: String },
    #[error("non-radial base topology: closed lines {0:?} close a cycle")]
    NonRadialBase(Vec<String>),
    #[error("fault references unknown element {0}")]
    UnknownElement(String),
    #[error("isolation leaves {faulted} connected to substation {substation}")]
    NotIsolated { faulted: String, substation: String },
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwitchKind {
    Sectionalizing,
    Tie,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Actuation {
    Manual,
    Remote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DgKind {
    Dispatchable,
    NonDispatchable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: String,
    pub substation: bool,
    pub dg: Option<usize>,
    pub load: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub id: String,
    pub from: usize,
    pub to: usize,
    pub r: f64,
    pub x: f64,
    /// Ampacity in p.u. current.
    pub f_max: f64,
    pub switch: Option<usize>,
}

impl Line {
    pub fn other(&self, n: usize) -> usize {
        if self.from == n {
            self.to
        } else {
            self.from
        }
    }

    pub fn touches(&self, n: usize) -> bool {
        self.from == n || self.to == n
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Switch {
    pub id: String,
    pub kind: SwitchKind,
    pub actuation: Actuation,
    pub op_time_min: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dg {
    pub id: String,
    pub node: usize,
    pub kind: DgKind,
    pub p_max: f64,
    pub s_max: f64,
    /// Injection per grid step for non-dispatchable units (p.u.).
    pub profile: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadPoint {
    pub node: usize,
    pub importance: f64,
    pub breaker: bool,
    pub breaker_time_min: f64,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TimeGrid {
    /// Wall-clock label of step 0, `HH:MM`.
    pub start: String,
    pub step_minutes: u32,
    pub count: usize,
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self {
            start: "09:00".into(),
            step_minutes: 60,
            count: 12,
        }
    }
}

impl TimeGrid {
    /// `HH:MM` label of grid step `k`.
    pub fn label(&self, k: usize) -> String {
        let (h, m) = self.start.split_once(':').unwrap_or(("0", "0"));
        let start = h.parse::<u32>().unwrap_or(0) * 60 + m.parse::<u32>().unwrap_or(0);
        let t = start + self.step_minutes * k as u32;
        format!("{:02}:{:02}", (t / 60) % 24, t % 60)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub name: String,
    pub base_mva: f64,
    pub base_kv: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub slack_voltage: f64,
    pub time_grid: TimeGrid,
    pub nodes: Vec<Node>,
    pub lines: Vec<Line>,
    pub switches: Vec<Switch>,
    pub dgs: Vec<Dg>,
    pub loads: Vec<LoadPoint>,
    /// Incident line indices per node, ascending.
    pub incident: Vec<Vec<usize>>,
}

impl Network {
    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn line_index(&self, id: &str) -> Option<usize> {
        self.lines.iter().position(|l| l.id == id)
    }

    pub fn switch_of(&self, line: usize) -> Option<&Switch> {
        self.lines[line].switch.map(|s| &self.switches[s])
    }

    pub fn is_switchable(&self, line: usize) -> bool {
        self.lines[line].switch.is_some()
    }

    pub fn is_tie(&self, line: usize) -> bool {
        self.switch_of(line).is_some_and(|s| s.kind == SwitchKind::Tie)
    }

    /// Pre-fault status: everything closed except tie switches.
    pub fn normally_closed(&self, line: usize) -> bool {
        !self.is_tie(line)
    }

    pub fn load_at(&self, node: usize) -> Option<&LoadPoint> {
        self.nodes[node].load.map(|l| &self.loads[l])
    }

    pub fn dg_at(&self, node: usize) -> Option<&Dg> {
        self.nodes[node].dg.map(|d| &self.dgs[d])
    }

    pub fn substations(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().enumerate().filter(|(_, n)| n.substation).map(|(i, _)| i)
    }

    /// Base current in amperes for converting p.u. currents.
    pub fn current_base_amps(&self) -> f64 {
        self.base_mva * 1e6 / (3f64.sqrt() * self.base_kv * 1e3)
    }

    /// Active / reactive demand of `node` at grid step `k` (zero without load).
    pub fn demand(&self, node: usize, k: usize) -> (f64, f64) {
        self.load_at(node).map_or((0.0, 0.0), |l| (l.p[k], l.q[k]))
    }
}
