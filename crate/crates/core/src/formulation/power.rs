use std::f64::consts::PI;

use gridrestore_conic::{LinExpr, Sense};

use super::{DistFlowRelaxation, LineState, ModelBuilder, NodeState};
use crate::netmodel::DgKind;

/// Nodal injections of one step as expressions.
struct Injection {
    p: LinExpr,
    q: LinExpr,
}

fn voltage_vars(b: &mut ModelBuilder<'_>, t: usize, lo: f64, hi: f64) {
    let k = b.atlas.steps[t];
    for i in b.nodes.clone() {
        if b.is_slack(i) {
            continue;
        }
        let label = format!("U[{},{}]", b.net.nodes[i].id, b.net.time_grid.label(k));
        let v = match b.node_state[&i] {
            NodeState::Energized => b.model.add_continuous(label, lo, hi),
            NodeState::Phi(_) => b.model.add_continuous(label, 0.0, hi),
        };
        b.atlas.u.insert((i, t), v);
    }
}

fn flow_vars(b: &mut ModelBuilder<'_>, t: usize, with_current: bool) {
    let k = b.atlas.steps[t];
    for l in b.lines.clone() {
        let tag = format!("{},{}", b.net.lines[l].id, b.net.time_grid.label(k));
        let f_max = b.net.lines[l].f_max;
        let p = b.model.add_continuous(format!("p[{tag}]"), f64::NEG_INFINITY, f64::INFINITY);
        let q = b.model.add_continuous(format!("q[{tag}]"), f64::NEG_INFINITY, f64::INFINITY);
        b.atlas.p.insert((l, t), p);
        b.atlas.q.insert((l, t), q);
        if with_current {
            let f = b.model.add_continuous(format!("F[{tag}]"), 0.0, f_max * f_max);
            b.atlas.f.insert((l, t), f);
        }
    }
}

/// Slack and DG injections; DG capability bounds are added by the callers.
fn injections(b: &mut ModelBuilder<'_>, t: usize) -> Vec<Option<Injection>> {
    let k = b.atlas.steps[t];
    let mut out: Vec<Option<Injection>> = (0..b.net.nodes.len()).map(|_| None).collect();
    for i in b.nodes.clone() {
        let tag = format!("{},{}", b.net.nodes[i].id, b.net.time_grid.label(k));
        if b.is_slack(i) {
            let p = b.model.add_continuous(format!("Psub[{tag}]"), f64::NEG_INFINITY, f64::INFINITY);
            let q = b.model.add_continuous(format!("Qsub[{tag}]"), f64::NEG_INFINITY, f64::INFINITY);
            b.atlas.p_inj.insert((i, t), p);
            b.atlas.q_inj.insert((i, t), q);
            out[i] = Some(Injection {
                p: LinExpr::var(p),
                q: LinExpr::var(q),
            });
        } else if let Some(dg) = b.net.dg_at(i) {
            match dg.kind {
                DgKind::Dispatchable => {
                    let p = b.model.add_continuous(format!("Pdg[{tag}]"), 0.0, dg.p_max);
                    let q = b.model.add_continuous(format!("Qdg[{tag}]"), -dg.s_max, dg.s_max);
                    b.atlas.p_inj.insert((i, t), p);
                    b.atlas.q_inj.insert((i, t), q);
                    out[i] = Some(Injection {
                        p: LinExpr::var(p),
                        q: LinExpr::var(q),
                    });
                }
                DgKind::NonDispatchable => {
                    out[i] = Some(Injection {
                        p: b.phi(i).scaled(dg.profile[k]),
                        q: LinExpr::new(),
                    });
                }
            }
        }
    }
    out
}

/// Nodal balance rows; `with_current` adds the series losses `r F`, `x F`.
fn balance_rows(b: &mut ModelBuilder<'_>, t: usize, inj: &[Option<Injection>], with_current: bool) {
    let k = b.atlas.steps[t];
    let n = b.net.nodes.len();
    let mut bal_p: Vec<LinExpr> = vec![LinExpr::new(); n];
    let mut bal_q: Vec<LinExpr> = vec![LinExpr::new(); n];
    for &l in &b.lines {
        let line = &b.net.lines[l];
        let (p, q) = (b.atlas.p[&(l, t)], b.atlas.q[&(l, t)]);
        bal_p[line.from].add(p, 1.0);
        bal_q[line.from].add(q, 1.0);
        bal_p[line.to].add(p, -1.0);
        bal_q[line.to].add(q, -1.0);
        if with_current {
            let f = b.atlas.f[&(l, t)];
            bal_p[line.to].add(f, line.r);
            bal_q[line.to].add(f, line.x);
        }
    }
    for i in b.nodes.clone() {
        let (pd, qd) = b.net.demand(i, k);
        let alpha = b.alpha(i, t);
        let mut ep = std::mem::take(&mut bal_p[i]).plus(&alpha, pd);
        let mut eq = std::mem::take(&mut bal_q[i]).plus(&alpha, qd);
        if let Some(s) = &inj[i] {
            ep.add_expr(&s.p, -1.0);
            eq.add_expr(&s.q, -1.0);
        }
        let tag = format!("{},{}", b.net.nodes[i].id, b.net.time_grid.label(k));
        b.row(format!("balP[{tag}]"), ep, Sense::Eq, 0.0);
        b.row(format!("balQ[{tag}]"), eq, Sense::Eq, 0.0);
    }
}

/// `U_to − U_from + 2(r p + x q) − z² F` (the last term only with currents);
/// zero on conducting lines.
fn voltage_drop(b: &ModelBuilder<'_>, l: usize, t: usize, with_current: bool) -> LinExpr {
    let line = &b.net.lines[l];
    let mut e = b.u(line.to, t).plus(&b.u(line.from, t), -1.0);
    e.add(b.atlas.p[&(l, t)], 2.0 * line.r);
    e.add(b.atlas.q[&(l, t)], 2.0 * line.x);
    if with_current {
        e.add(b.atlas.f[&(l, t)], -(line.r * line.r + line.x * line.x));
    }
    e
}

fn voltage_rows(b: &mut ModelBuilder<'_>, t: usize, with_current: bool, m_volt: f64) {
    let k = b.atlas.steps[t];
    for l in b.lines.clone() {
        let tag = format!("{},{}", b.net.lines[l].id, b.net.time_grid.label(k));
        let e = voltage_drop(b, l, t, with_current);
        match b.line_state[&l] {
            LineState::Switch(mu) => {
                b.row(format!("vdrop+[{tag}]"), e.clone().with(mu, m_volt), Sense::Le, m_volt);
                b.row(format!("vdrop-[{tag}]"), e.with(mu, -m_volt), Sense::Ge, -m_volt);
            }
            _ => b.row(format!("vdrop[{tag}]"), e, Sense::Eq, 0.0),
        }
    }
}

/// Branch-flow model of one step with the exact voltage drop and the
/// relaxed current definition `‖(2p, 2q, F − U_from)‖ ≤ F + U_from`.
pub fn encode_socp_powerflow(b: &mut ModelBuilder<'_>, t: usize) {
    let (vmin2, vmax2) = (b.net.v_min * b.net.v_min, b.net.v_max * b.net.v_max);
    voltage_vars(b, t, vmin2, vmax2);
    flow_vars(b, t, true);
    let inj = injections(b, t);
    balance_rows(b, t, &inj, true);
    let m_volt = b.bigm.m_volt;
    voltage_rows(b, t, true, m_volt);
    let k = b.atlas.steps[t];
    for l in b.lines.clone() {
        let from = b.net.lines[l].from;
        let (p, q, f) = (b.atlas.p[&(l, t)], b.atlas.q[&(l, t)], b.atlas.f[&(l, t)]);
        let u = b.u(from, t);
        b.model.add_cone(
            format!("current[{},{}]", b.net.lines[l].id, b.net.time_grid.label(k)),
            LinExpr::var(f).plus(&u, 1.0),
            vec![LinExpr::term(p, 2.0), LinExpr::term(q, 2.0), LinExpr::var(f).plus(&u, -1.0)],
        );
    }
    for i in b.nodes.clone() {
        let Some(dg) = b.net.dg_at(i) else { continue };
        if dg.kind != DgKind::Dispatchable || b.is_slack(i) {
            continue;
        }
        let (p, q) = (b.atlas.p_inj[&(i, t)], b.atlas.q_inj[&(i, t)]);
        b.model.add_cone(
            format!("dgcap[{},{}]", b.net.nodes[i].id, b.net.time_grid.label(k)),
            b.phi(i).scaled(dg.s_max),
            vec![LinExpr::var(p), LinExpr::var(q)],
        );
    }
}

/// Rows tying the power-flow variables of one step to the switch and
/// energization status: dead nodes carry no voltage, open lines no flow and
/// de-energized DGs no output.
pub fn encode_links(b: &mut ModelBuilder<'_>, t: usize) {
    let k = b.atlas.steps[t];
    let (vmin2, vmax2) = (b.net.v_min * b.net.v_min, b.net.v_max * b.net.v_max);
    for i in b.nodes.clone() {
        let NodeState::Phi(phi) = b.node_state[&i] else { continue };
        let tag = format!("{},{}", b.net.nodes[i].id, b.net.time_grid.label(k));
        if let Some(&u) = b.atlas.u.get(&(i, t)) {
            b.row(format!("vmin[{tag}]"), LinExpr::var(u).with(phi, -vmin2), Sense::Ge, 0.0);
            b.row(format!("vmax[{tag}]"), LinExpr::var(u).with(phi, -vmax2), Sense::Le, 0.0);
        }
        if let Some(dg) = b.net.dg_at(i) {
            if dg.kind == DgKind::Dispatchable {
                let p = b.atlas.p_inj[&(i, t)];
                b.row(format!("dgon[{tag}]"), LinExpr::var(p).with(phi, -dg.p_max), Sense::Le, 0.0);
            }
        }
    }
    for l in b.lines.clone() {
        let tag = format!("{},{}", b.net.lines[l].id, b.net.time_grid.label(k));
        let f_max = b.net.lines[l].f_max;
        let gate = match b.line_state[&l] {
            LineState::Closed => continue,
            LineState::Switch(_) | LineState::Follows => b.mu(l),
        };
        if let Some(&f) = b.atlas.f.get(&(l, t)) {
            b.row(
                format!("ampacity[{tag}]"),
                LinExpr::var(f).plus(&gate, -f_max * f_max),
                Sense::Le,
                0.0,
            );
        }
        if let LineState::Switch(mu) = b.line_state[&l] {
            let m = b.bigm.m_pq[&l];
            for (name, v) in [("p", b.atlas.p[&(l, t)]), ("q", b.atlas.q[&(l, t)])] {
                b.row(format!("{name}open+[{tag}]"), LinExpr::var(v).with(mu, -m), Sense::Le, 0.0);
                b.row(format!("{name}open-[{tag}]"), LinExpr::var(v).with(mu, m), Sense::Ge, 0.0);
            }
        }
    }
}

/// Lossless linear power flow of one step with polygonal capacity limits and
/// a widened voltage band; a relaxation of the branch-flow model.
pub fn encode_distflow(b: &mut ModelBuilder<'_>, t: usize, relax: &DistFlowRelaxation) {
    let k = b.atlas.steps[t];
    let (vmin2, vmax2) = (b.net.v_min * b.net.v_min, b.net.v_max * b.net.v_max);
    let (lo, hi) = (vmin2 * (1.0 - relax.voltage_margin), vmax2 * (1.0 + relax.voltage_margin));
    voltage_vars(b, t, lo, hi);
    flow_vars(b, t, false);
    let inj = injections(b, t);
    balance_rows(b, t, &inj, false);
    let m_volt = b.bigm.m_volt.max(hi);
    voltage_rows(b, t, false, m_volt);

    let sides = relax.polygon_sides.max(4);
    let dirs: Vec<(f64, f64)> = (0..sides)
        .map(|s| {
            let a = 2.0 * PI * s as f64 / sides as f64;
            (a.cos(), a.sin())
        })
        .collect();
    for l in b.lines.clone() {
        let tag = format!("{},{}", b.net.lines[l].id, b.net.time_grid.label(k));
        let s_bar = relax.line_factor * b.net.v_max * b.net.lines[l].f_max;
        let gate = b.mu(l);
        let (p, q) = (b.atlas.p[&(l, t)], b.atlas.q[&(l, t)]);
        for (s, &(c, si)) in dirs.iter().enumerate() {
            b.row(
                format!("octagon{s}[{tag}]"),
                LinExpr::term(p, c).with(q, si).plus(&gate, -s_bar),
                Sense::Le,
                0.0,
            );
        }
    }
    for i in b.nodes.clone() {
        let tag = format!("{},{}", b.net.nodes[i].id, b.net.time_grid.label(k));
        if let NodeState::Phi(phi) = b.node_state[&i] {
            if let Some(&u) = b.atlas.u.get(&(i, t)) {
                b.row(format!("vmin[{tag}]"), LinExpr::var(u).with(phi, -lo), Sense::Ge, 0.0);
                b.row(format!("vmax[{tag}]"), LinExpr::var(u).with(phi, -hi), Sense::Le, 0.0);
            }
        }
        let Some(dg) = b.net.dg_at(i) else { continue };
        if dg.kind != DgKind::Dispatchable || b.is_slack(i) {
            continue;
        }
        let (p, q) = (b.atlas.p_inj[&(i, t)], b.atlas.q_inj[&(i, t)]);
        let h_bar = relax.dg_factor * dg.s_max;
        let on = b.phi(i);
        b.row(
            format!("dgon[{tag}]"),
            LinExpr::var(p).plus(&on, -dg.p_max),
            Sense::Le,
            0.0,
        );
        for (s, &(c, si)) in dirs.iter().enumerate() {
            b.row(
                format!("dgoctagon{s}[{tag}]"),
                LinExpr::term(p, c).with(q, si).plus(&on, -h_bar),
                Sense::Le,
                0.0,
            );
        }
    }
}
