use gridrestore_conic::{LinExpr, Sense};

use super::{LineState, ModelBuilder, ObjectiveWeights};
use crate::netmodel::SwitchKind;

/// Unweighted objective components of a model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObjectiveTerms {
    /// Importance-weighted energy not served in N* over the period.
    pub reliability: LinExpr,
    /// Switching minutes: line operations plus first-step breaker closings.
    pub switching: LinExpr,
    /// Series losses (`Σ r F`), or the loss epigraph variables in the master.
    pub losses: LinExpr,
}

impl ObjectiveTerms {
    pub fn weighted(&self, w: &ObjectiveWeights) -> LinExpr {
        let mut e = self.reliability.scaled(w.w_re);
        e.add_expr(&self.switching, w.w_sw);
        e.add_expr(&self.losses, w.w_op);
        e
    }
}

/// Builds the three objective terms, adding the breaker-operation
/// indicators ω_i ≥ φ_i − α_{i,first}, and installs the weighted sum.
/// `losses` replaces the `Σ r F` term when given.
pub fn build_objective(b: &mut ModelBuilder<'_>, losses: Option<LinExpr>) -> ObjectiveTerms {
    let net = b.net;
    let mut terms = ObjectiveTerms::default();
    for i in b.nodes.clone() {
        if !b.area.in_star[i] {
            continue;
        }
        let Some(load) = net.load_at(i) else { continue };
        for (t, &k) in b.atlas.steps.iter().enumerate() {
            let w = load.importance * load.p[k];
            terms.reliability.constant += w;
            terms.reliability.add_expr(&b.alpha(i, t), -w);
        }
        if load.breaker && !b.atlas.steps.is_empty() {
            let om = b.model.add_continuous(format!("omega[{}]", net.nodes[i].id), 0.0, 1.0);
            b.atlas.omega.insert(i, om);
            let e = LinExpr::var(om).plus(&b.phi(i), -1.0).plus(&b.alpha(i, 0), 1.0);
            b.row(format!("brkop[{}]", net.nodes[i].id), e, Sense::Ge, 0.0);
            terms.switching.add(om, load.breaker_time_min);
        }
    }
    for l in b.lines.clone() {
        let LineState::Switch(mu) = b.line_state[&l] else { continue };
        let Some(sw) = net.switch_of(l) else { continue };
        match sw.kind {
            SwitchKind::Tie => {
                terms.switching.add(mu, sw.op_time_min);
            }
            SwitchKind::Sectionalizing => {
                terms.switching.constant += sw.op_time_min;
                terms.switching.add(mu, -sw.op_time_min);
            }
        }
    }
    terms.losses = match losses {
        Some(e) => e,
        None => {
            let mut e = LinExpr::new();
            for (&(l, _), &f) in &b.atlas.f {
                e.add(f, net.lines[l].r);
            }
            e
        }
    };
    b.model.set_objective(terms.weighted(&b.weights));
    terms
}
