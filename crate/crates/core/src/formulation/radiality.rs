use gridrestore_conic::{LinExpr, Sense};

use super::{LineState, ModelBuilder, NodeState};

/// Energization and single-commodity flow rows that keep the restored part
/// of N* a forest rooted at closed available ties.
///
/// `β⁺_l` makes `from` the parent of `to`, `β⁻_l` the reverse. Every
/// energized node has exactly one parent and consumes one unit of the
/// fictitious flow `Ψ`, which can only enter through available ties.
///
/// The parent weights may stay continuous: summing the parent rows gives
/// `Σ μ = Σ φ` (closed lines equal energized nodes, ties included), and the
/// flow makes every energized component reach a tie, so each component is
/// a tree hanging off exactly one tie whenever μ and φ are integral.
pub fn encode_radiality(b: &mut ModelBuilder<'_>) {
    let net = b.net;
    let area = b.area;
    for &i in &area.n_star {
        let v = b.model.add_binary(format!("phi[{}]", net.nodes[i].id));
        b.model.set_priority(v, 2);
        b.atlas.phi.insert(i, v);
        b.node_state.insert(i, NodeState::Phi(v));
    }
    for &l in &area.switchable {
        let v = b.model.add_binary(format!("mu[{}]", net.lines[l].id));
        b.model.set_priority(v, 2);
        b.atlas.mu.insert(l, v);
        b.line_state.insert(l, LineState::Switch(v));
    }
    for &l in &area.w_fixed {
        b.line_state.insert(l, LineState::Follows);
    }

    let m_flow = b.bigm.m_flow;
    let mut parent_of: Vec<LinExpr> = vec![LinExpr::new(); net.nodes.len()];
    let mut inflow: Vec<LinExpr> = vec![LinExpr::new(); net.nodes.len()];
    let mut tie_inflow = LinExpr::new();
    for &l in &area.w_star {
        let line = &net.lines[l];
        let name = &line.id;
        let bp = b.model.add_continuous(format!("beta+[{name}]"), 0.0, 1.0);
        let bm = b.model.add_continuous(format!("beta-[{name}]"), 0.0, 1.0);
        let pp = b.model.add_continuous(format!("flow+[{name}]"), 0.0, m_flow);
        let pm = b.model.add_continuous(format!("flow-[{name}]"), 0.0, m_flow);
        b.atlas.beta.insert(l, (bp, bm));
        b.atlas.psi.insert(l, (pp, pm));
        b.row(format!("flowcap+[{name}]"), LinExpr::var(pp).with(bp, -m_flow), Sense::Le, 0.0);
        b.row(format!("flowcap-[{name}]"), LinExpr::var(pm).with(bm, -m_flow), Sense::Le, 0.0);
        let mu = b.mu(l);
        if area.tie_feeder.contains_key(&l) {
            // the healthy end is always the parent
            let (inner_dir, outer_dir, inner_psi) = if area.in_star[line.to] { (bp, bm, pp) } else { (bm, bp, pm) };
            b.row(
                format!("tiedir[{name}]"),
                LinExpr::var(inner_dir).plus(&mu, -1.0),
                Sense::Eq,
                0.0,
            );
            b.row(format!("tieback[{name}]"), LinExpr::var(outer_dir), Sense::Eq, 0.0);
            tie_inflow.add(inner_psi, 1.0);
            let inner = area.tie_inner_end(net, l);
            parent_of[inner].add(inner_dir, 1.0);
            inflow[inner].add(inner_psi, 1.0);
            b.row(
                format!("muphi[{name},{}]", net.nodes[inner].id),
                mu.clone().plus(&b.phi(inner), -1.0),
                Sense::Le,
                0.0,
            );
        } else {
            let link = match b.line_state[&l] {
                LineState::Follows => {
                    b.row(
                        format!("fixedphi[{name}]"),
                        b.phi(line.from).plus(&b.phi(line.to), -1.0),
                        Sense::Eq,
                        0.0,
                    );
                    b.phi(line.from)
                }
                _ => {
                    for e in [line.from, line.to] {
                        b.row(
                            format!("muphi[{name},{}]", net.nodes[e].id),
                            mu.clone().plus(&b.phi(e), -1.0),
                            Sense::Le,
                            0.0,
                        );
                    }
                    mu
                }
            };
            b.row(
                format!("dir[{name}]"),
                LinExpr::var(bp).with(bm, 1.0).plus(&link, -1.0),
                Sense::Eq,
                0.0,
            );
            parent_of[line.to].add(bp, 1.0);
            parent_of[line.from].add(bm, 1.0);
            inflow[line.to].add(pp, 1.0);
            inflow[line.from].add(pm, 1.0);
            inflow[line.to].add(pm, -1.0);
            inflow[line.from].add(pp, -1.0);
        }
    }
    let mut total_phi = LinExpr::new();
    for &i in &area.n_star {
        let id = &net.nodes[i].id;
        let phi = b.phi(i);
        total_phi = total_phi.plus(&phi, 1.0);
        b.row(format!("parent[{id}]"), parent_of[i].clone().plus(&phi, -1.0), Sense::Eq, 0.0);
        b.row(format!("flowbal[{id}]"), inflow[i].clone().plus(&phi, -1.0), Sense::Eq, 0.0);
    }
    b.row("flowsrc".into(), tie_inflow.plus(&total_phi, -1.0), Sense::Eq, 0.0);
}

/// Pickup binaries of breaker-equipped loads in scope: a load can only be
/// served at energized nodes and, once picked up, stays served.
pub fn encode_load_pickup(b: &mut ModelBuilder<'_>) {
    let net = b.net;
    let nodes: Vec<usize> = b.nodes.iter().copied().filter(|&i| b.area.in_star[i]).collect();
    for i in nodes {
        let Some(load) = net.load_at(i) else { continue };
        if !load.breaker {
            continue;
        }
        let id = &net.nodes[i].id;
        let mut prev = None;
        for (t, &k) in b.atlas.steps.clone().iter().enumerate() {
            let a = b.model.add_binary(format!("alpha[{id},{}]", net.time_grid.label(k)));
            b.model.set_priority(a, 1);
            b.atlas.alpha.insert((i, t), a);
            if let NodeState::Phi(_) = b.node_state[&i] {
                b.row(
                    format!("pickup[{id},{t}]"),
                    LinExpr::var(a).plus(&b.phi(i), -1.0),
                    Sense::Le,
                    0.0,
                );
            }
            if let Some(p) = prev {
                b.row(format!("monotone[{id},{t}]"), LinExpr::var(p).with(a, -1.0), Sense::Le, 0.0);
            }
            prev = Some(a);
        }
    }
}
