use std::collections::VecDeque;

use num_complex::Complex64;

use super::ValidationError;
use crate::netmodel::Network;

pub const SWEEP_TOL: f64 = 1e-10;
pub const SWEEP_MAX_ITER: usize = 100;

/// Converged branch-flow state of the energized part of the network.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerFlowResult {
    /// Complex node voltage (p.u.); `None` for de-energized nodes.
    pub voltage: Vec<Option<Complex64>>,
    /// Current of each closed energized line, positive from `from` to `to`.
    pub current: Vec<Option<Complex64>>,
    pub iterations: usize,
}

impl PowerFlowResult {
    /// Complex power leaving node `i` through its lines.
    pub fn outflow(&self, net: &Network, i: usize) -> Complex64 {
        let Some(v) = self.voltage[i] else { return Complex64::new(0.0, 0.0) };
        let mut out = Complex64::new(0.0, 0.0);
        for &k in &net.incident[i] {
            if let Some(c) = self.current[k] {
                let c = if net.lines[k].from == i { c } else { -c };
                out += v * c.conj();
            }
        }
        out
    }
}

/// Backward/forward sweep on every tree grown from a substation over the
/// closed lines. `injection[i]` is the net complex power injected at node
/// `i` (generation minus demand, p.u.); substations are slack buses at
/// `net.slack_voltage`.
pub fn power_flow(net: &Network, closed: &[bool], injection: &[Complex64]) -> Result<PowerFlowResult, ValidationError> {
    let n = net.nodes.len();
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut reached = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for s in net.substations() {
        if reached[s] {
            return Err(ValidationError::NonRadialFlow(format!(
                "substation {} is fed by another substation",
                net.nodes[s].id
            )));
        }
        reached[s] = true;
        order.push(s);
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &k in &net.incident[u] {
                if !closed[k] || parent[u] == Some(k) {
                    continue;
                }
                let v = net.lines[k].other(u);
                if reached[v] {
                    return Err(ValidationError::NonRadialFlow(format!("line {} closes a loop", net.lines[k].id)));
                }
                reached[v] = true;
                parent[v] = Some(k);
                order.push(v);
                q.push_back(v);
            }
        }
    }

    let slack = Complex64::new(net.slack_voltage, 0.0);
    let mut v: Vec<Complex64> = (0..n)
        .map(|i| if reached[i] { slack } else { Complex64::new(0.0, 0.0) })
        .collect();
    // current drawn from each node's parent line, towards the node
    let mut branch = vec![Complex64::new(0.0, 0.0); n];
    for it in 1..=SWEEP_MAX_ITER {
        for b in branch.iter_mut() {
            *b = Complex64::new(0.0, 0.0);
        }
        for &i in order.iter().rev() {
            branch[i] -= (injection[i] / v[i]).conj();
            if let Some(k) = parent[i] {
                let p = net.lines[k].other(i);
                let bi = branch[i];
                branch[p] += bi;
            }
        }
        let mut delta = 0.0f64;
        for &i in &order {
            let Some(k) = parent[i] else { continue };
            let p = net.lines[k].other(i);
            let z = Complex64::new(net.lines[k].r, net.lines[k].x);
            let nv = v[p] - z * branch[i];
            delta = delta.max((nv - v[i]).norm());
            v[i] = nv;
        }
        if !delta.is_finite() || v.iter().any(|x| !x.is_finite()) || order.iter().any(|&i| v[i].norm() < 0.1) {
            return Err(ValidationError::Diverged { iterations: it });
        }
        if delta < SWEEP_TOL {
            let mut current = vec![None; net.lines.len()];
            // final backward pass so currents match the converged voltages
            for b in branch.iter_mut() {
                *b = Complex64::new(0.0, 0.0);
            }
            for &i in order.iter().rev() {
                branch[i] -= (injection[i] / v[i]).conj();
                if let Some(k) = parent[i] {
                    let p = net.lines[k].other(i);
                    let bi = branch[i];
                    branch[p] += bi;
                    current[k] = Some(if net.lines[k].to == i { bi } else { -bi });
                }
            }
            return Ok(PowerFlowResult {
                voltage: (0..n).map(|i| reached[i].then_some(v[i])).collect(),
                current,
                iterations: it,
            });
        }
    }
    Err(ValidationError::Diverged { iterations: SWEEP_MAX_ITER })
}
