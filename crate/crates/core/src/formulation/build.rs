use gridrestore_conic::{ConicModel, LinExpr, Sense};
use serde::Serialize;

use super::{
    build_objective, encode_conditional, encode_distflow, encode_either_or, encode_links, encode_load_pickup,
    encode_radiality, encode_socp_powerflow, BigMPolicy, DistFlowRelaxation, Ineq, LineState, ModelBuilder,
    NodeState, ObjectiveTerms, ObjectiveWeights, VariableAtlas,
};
use crate::netmodel::{Cluster, Network, OffOutageArea};

/// A model together with its variable map and objective components.
#[derive(Debug, Clone)]
pub struct BuiltModel {
    pub model: ConicModel,
    pub atlas: VariableAtlas,
    pub terms: ObjectiveTerms,
    pub nodes: Vec<usize>,
    pub lines: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CutKind {
    Optimality,
    Feasibility,
}

/// A Benders cut derived from one supply unit of an evaluated configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutRecord {
    pub iteration: usize,
    pub kind: CutKind,
    pub feeder: usize,
    /// X of the unit.
    pub nodes: Vec<usize>,
    /// L: the lines whose status pins the unit down.
    pub lines: Vec<usize>,
    /// Members of L closed in the evaluated configuration.
    pub closed: Vec<usize>,
    /// Weighted unit value (optimality cuts only).
    pub value: f64,
}

fn finish(b: ModelBuilder<'_>, terms: ObjectiveTerms) -> BuiltModel {
    BuiltModel {
        model: b.model,
        atlas: b.atlas,
        terms,
        nodes: b.nodes,
        lines: b.lines,
    }
}

/// Supplying feeders (energized, closed) plus N* and W*.
fn scope_area(b: &mut ModelBuilder<'_>) {
    let area = b.area;
    let mut nodes = area.n_star.clone();
    let mut lines = area.w_star.clone();
    for f in area.supplying_feeders() {
        let feeder = &area.feeders[f];
        for &i in std::iter::once(&feeder.substation).chain(&feeder.nodes) {
            b.node_state.insert(i, NodeState::Energized);
            nodes.push(i);
        }
        for &l in &feeder.lines {
            b.line_state.insert(l, LineState::Closed);
            lines.push(l);
        }
    }
    nodes.sort_unstable();
    nodes.dedup();
    lines.sort_unstable();
    b.nodes = nodes;
    b.lines = lines;
}

/// Single-stage MISOCP over the whole off-outage area.
pub fn build_integrated(net: &Network, area: &OffOutageArea, weights: ObjectiveWeights) -> BuiltModel {
    let mut b = ModelBuilder::new(net, area, weights, BigMPolicy::derive(net, area));
    scope_area(&mut b);
    encode_radiality(&mut b);
    encode_load_pickup(&mut b);
    for t in 0..b.steps() {
        encode_socp_powerflow(&mut b, t);
        encode_links(&mut b, t);
    }
    let terms = build_objective(&mut b, None);
    finish(b, terms)
}

/// Configuration-level MILP: radiality, pickup and the linear power-flow
/// relaxation, with one loss epigraph variable per supplying feeder bounded
/// from below by the accumulated cuts.
pub fn build_master(
    net: &Network,
    area: &OffOutageArea,
    weights: ObjectiveWeights,
    relax: &DistFlowRelaxation,
    cuts: &[CutRecord],
) -> BuiltModel {
    let mut b = ModelBuilder::new(net, area, weights, BigMPolicy::derive(net, area));
    scope_area(&mut b);
    encode_radiality(&mut b);
    encode_load_pickup(&mut b);
    for t in 0..b.steps() {
        encode_distflow(&mut b, t, relax);
    }
    let mut losses = LinExpr::new();
    for f in area.supplying_feeders() {
        let th = b.model.add_continuous(format!("theta[{}]", area.feeders[f].id), 0.0, f64::INFINITY);
        b.atlas.theta.insert(f, th);
        losses.add(th, 1.0);
    }
    let terms = build_objective(&mut b, Some(losses));
    for (k, cut) in cuts.iter().enumerate() {
        encode_cut(&mut b, k, cut);
    }
    finish(b, terms)
}

/// Adds one cut. Its premise "the lines of L have exactly the evaluated
/// status" reads `Σ_L μ = c ∧ μ_l = 0 for the open members`; the cut is the
/// disjunction of the premise's negation with the value bound (optimality)
/// or the negation alone (feasibility).
fn encode_cut(b: &mut ModelBuilder<'_>, k: usize, cut: &CutRecord) {
    let c = cut.closed.len() as f64;
    let mut sum_l = LinExpr::new();
    let mut sum_open = LinExpr::new();
    for &l in &cut.lines {
        let mu = b.mu(l);
        sum_l.add_expr(&mu, 1.0);
        if !cut.closed.contains(&l) {
            sum_open.add_expr(&mu, 1.0);
        }
    }
    // mismatch count: zero exactly when L has the evaluated status
    let mut mismatch = LinExpr::new();
    for &l in &cut.lines {
        let mu = b.mu(l);
        if cut.closed.contains(&l) {
            mismatch.add_expr(&mu, -1.0);
            mismatch.constant += 1.0;
        } else {
            mismatch.add_expr(&mu, 1.0);
        }
    }
    let n_l = cut.lines.len() as f64;
    // Σ_L μ ≤ c − 1, or some open member closed
    let d0 = Ineq::le(sum_l, c - 1.0);
    let d1 = Ineq::ge(sum_open, 1.0);
    let m0 = n_l - c + 1.0;
    let m1 = 1.0;
    let name = format!("cut{k}");
    match cut.kind {
        CutKind::Feasibility => {
            let psi = encode_either_or(&mut b.model, &name, &d0, &d1, m0, m1);
            b.atlas.cut_aux.push(psi);
            // implied by the disjunction at integer points; tightens the relaxation
            b.model.add_row(format!("{name}/nogood"), mismatch, Sense::Ge, 1.0);
        }
        CutKind::Optimality => {
            let w = b.weights;
            let mut value = LinExpr::new();
            for &i in &cut.nodes {
                let Some(load) = b.net.load_at(i) else { continue };
                for (t, &kk) in b.atlas.steps.iter().enumerate() {
                    let d = load.importance * load.p[kk];
                    value.constant += w.w_re * d;
                    value.add_expr(&b.alpha(i, t), -w.w_re * d);
                }
                if let Some(&om) = b.atlas.omega.get(&i) {
                    value.add(om, w.w_sw * load.breaker_time_min);
                }
            }
            value.add(b.atlas.theta[&cut.feeder], w.w_op);
            b.model.add_row(
                format!("{name}/agg"),
                value.clone().plus(&mismatch, cut.value),
                Sense::Ge,
                cut.value,
            );
            let bound = Ineq::ge(value, cut.value);
            let (p1, p2) = encode_conditional(&mut b.model, &name, &d0, &d1, &bound, [m0, m1, cut.value.max(0.0)]);
            b.atlas.cut_aux.push(p1);
            b.atlas.cut_aux.push(p2);
        }
    }
}

/// Unit subproblem: the feeder of `cluster` with X attached through its
/// closed lines; no switch variables remain.
pub fn build_subproblem(
    net: &Network,
    area: &OffOutageArea,
    cluster: &Cluster,
    weights: ObjectiveWeights,
) -> BuiltModel {
    let mut b = ModelBuilder::new(net, area, weights, BigMPolicy::derive(net, area));
    let feeder = &area.feeders[cluster.feeder];
    let mut nodes: Vec<usize> = std::iter::once(feeder.substation)
        .chain(feeder.nodes.iter().copied())
        .chain(cluster.nodes.iter().copied())
        .collect();
    nodes.sort_unstable();
    let mut lines: Vec<usize> = feeder
        .lines
        .iter()
        .chain(&cluster.lines)
        .chain(&cluster.closed_ties)
        .copied()
        .collect();
    lines.sort_unstable();
    for &i in &nodes {
        b.node_state.insert(i, NodeState::Energized);
    }
    for &l in &lines {
        b.line_state.insert(l, LineState::Closed);
    }
    b.nodes = nodes;
    b.lines = lines;
    encode_load_pickup(&mut b);
    for t in 0..b.steps() {
        encode_socp_powerflow(&mut b, t);
    }
    let terms = build_objective(&mut b, None);
    finish(b, terms)
}
