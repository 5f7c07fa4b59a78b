use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{power_flow, RestorationPlan, ValidationError};
use crate::netmodel::{is_radial, DgKind, Network, OffOutageArea};

/// Voltage violations are reported beyond this many p.u. outside the band.
pub const VOLTAGE_TOL_PU: f64 = 1e-4;
/// Current violations are reported beyond this many amperes over ampacity.
pub const CURRENT_TOL_A: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepMargin {
    pub step: usize,
    pub time: String,
    pub min_voltage: f64,
    pub max_voltage: f64,
    /// Smallest distance to the voltage band (negative when outside).
    pub voltage_margin: f64,
    pub voltage_node: String,
    /// Smallest ampacity headroom in amperes; `None` without loaded lines.
    pub current_margin_a: Option<f64>,
    pub current_line: Option<String>,
    pub sweep_iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitKind {
    VoltageLow,
    VoltageHigh,
    Current,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitViolation {
    pub kind: LimitKind,
    pub element: String,
    pub time: String,
    /// |V| in p.u. or |I| in A.
    pub value: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginReport {
    pub network: String,
    pub v_limits: [f64; 2],
    /// Amperes per p.u. current.
    pub current_base_a: f64,
    pub steps: Vec<StepMargin>,
    pub min_voltage_margin: Option<f64>,
    pub min_current_margin_a: Option<f64>,
    /// Lowest and highest energized voltage magnitude over all steps.
    pub voltage_range: Option<[f64; 2]>,
    pub violations: Vec<LimitViolation>,
}

impl MarginReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<7} {:>9} {:>9} {:>12} {:<8} {:>14} {:<10}", "time", "V min", "V max", "V margin", "node", "I margin (A)", "line");
        for m in &self.steps {
            let _ = writeln!(
                s,
                "{:<7} {:>9.5} {:>9.5} {:>12.6} {:<8} {:>14} {:<10}",
                m.time,
                m.min_voltage,
                m.max_voltage,
                m.voltage_margin,
                m.voltage_node,
                m.current_margin_a.map_or("-".into(), |a| format!("{a:.3}")),
                m.current_line.as_deref().unwrap_or("-"),
            );
        }
        if self.violations.is_empty() {
            s.push_str("no violations\n");
        }
        for v in &self.violations {
            let _ = writeln!(s, "VIOLATION {:?} {} at {}: {:.6} (limit {:.6})", v.kind, v.element, v.time, v.value, v.limit);
        }
        s
    }
}

/// Net injection at every node for period step `t` of `plan`.
fn injections(
    net: &Network,
    area: &OffOutageArea,
    plan: &RestorationPlan,
    t: usize,
    energized: &[bool],
) -> Result<Vec<Complex64>, ValidationError> {
    let k = plan.steps[t];
    let mut s = vec![Complex64::new(0.0, 0.0); net.nodes.len()];
    for (i, node) in net.nodes.iter().enumerate() {
        if !energized[i] || node.substation {
            continue;
        }
        if let Some(load) = net.load_at(i) {
            let served = if area.in_star[i] {
                match plan.pickup.get(&node.id) {
                    Some(flags) => *flags
                        .get(t)
                        .ok_or_else(|| ValidationError::Plan(format!("pickup of {} is too short", node.id)))?,
                    None if !load.breaker => true,
                    None => return Err(ValidationError::Plan(format!("no pickup schedule for {}", node.id))),
                }
            } else {
                true
            };
            if served {
                s[i] -= Complex64::new(load.p[k], load.q[k]);
            }
        }
        if let Some(dg) = net.dg_at(i) {
            s[i] += match dg.kind {
                DgKind::NonDispatchable => Complex64::new(dg.profile[k], 0.0),
                DgKind::Dispatchable => match plan.dg_setpoints.get(&dg.id) {
                    Some(v) => {
                        let [p, q] = *v
                            .get(t)
                            .ok_or_else(|| ValidationError::Plan(format!("set points of {} are too short", dg.id)))?;
                        Complex64::new(p, q)
                    }
                    None => Complex64::new(0.0, 0.0),
                },
            };
        }
    }
    Ok(s)
}

/// Runs the exact power flow at every step of `plan` and collects the
/// voltage and current margins.
pub fn validate_plan(net: &Network, area: &OffOutageArea, plan: &RestorationPlan) -> Result<MarginReport, ValidationError> {
    let ibase = net.current_base_amps();
    let mut report = MarginReport {
        network: net.name.clone(),
        v_limits: [net.v_min, net.v_max],
        current_base_a: ibase,
        steps: Vec::new(),
        min_voltage_margin: None,
        min_current_margin_a: None,
        voltage_range: None,
        violations: Vec::new(),
    };
    if area.is_empty() {
        return Ok(report);
    }
    if plan.steps != area.steps || plan.times.len() != plan.steps.len() {
        return Err(ValidationError::Plan("plan steps differ from the restorative period".into()));
    }
    let cfg = plan.configuration(net, area)?;
    let radial = is_radial(net, area, &cfg);
    if let Some(v) = radial.violation {
        return Err(ValidationError::NonRadial(v));
    }
    let closed: Vec<bool> = (0..net.lines.len()).map(|k| cfg.line_closed(net, area, k)).collect();

    for t in 0..plan.steps.len() {
        let time = plan.times[t].clone();
        let inj = injections(net, area, plan, t, &radial.energized)?;
        let pf = power_flow(net, &closed, &inj)?;
        let mut m = StepMargin {
            step: plan.steps[t],
            time: time.clone(),
            min_voltage: f64::INFINITY,
            max_voltage: f64::NEG_INFINITY,
            voltage_margin: f64::INFINITY,
            voltage_node: String::new(),
            current_margin_a: None,
            current_line: None,
            sweep_iterations: pf.iterations,
        };
        for (i, v) in pf.voltage.iter().enumerate() {
            let Some(v) = v else { continue };
            let mag = v.norm();
            m.min_voltage = m.min_voltage.min(mag);
            m.max_voltage = m.max_voltage.max(mag);
            let margin = (mag - net.v_min).min(net.v_max - mag);
            if margin < m.voltage_margin {
                m.voltage_margin = margin;
                m.voltage_node = net.nodes[i].id.clone();
            }
            if mag < net.v_min - VOLTAGE_TOL_PU {
                report.violations.push(LimitViolation {
                    kind: LimitKind::VoltageLow,
                    element: net.nodes[i].id.clone(),
                    time: time.clone(),
                    value: mag,
                    limit: net.v_min,
                });
            } else if mag > net.v_max + VOLTAGE_TOL_PU {
                report.violations.push(LimitViolation {
                    kind: LimitKind::VoltageHigh,
                    element: net.nodes[i].id.clone(),
                    time: time.clone(),
                    value: mag,
                    limit: net.v_max,
                });
            }
        }
        for (k, c) in pf.current.iter().enumerate() {
            let Some(c) = c else { continue };
            let line = &net.lines[k];
            let amps = c.norm() * ibase;
            let margin = line.f_max * ibase - amps;
            if m.current_margin_a.map_or(true, |a| margin < a) {
                m.current_margin_a = Some(margin);
                m.current_line = Some(line.id.clone());
            }
            if margin < -CURRENT_TOL_A {
                report.violations.push(LimitViolation {
                    kind: LimitKind::Current,
                    element: line.id.clone(),
                    time: time.clone(),
                    value: amps,
                    limit: line.f_max * ibase,
                });
            }
        }
        report.min_voltage_margin = Some(report.min_voltage_margin.map_or(m.voltage_margin, |x| x.min(m.voltage_margin)));
        if let Some(a) = m.current_margin_a {
            report.min_current_margin_a = Some(report.min_current_margin_a.map_or(a, |x| x.min(a)));
        }
        let [lo, hi] = report.voltage_range.unwrap_or([f64::INFINITY, f64::NEG_INFINITY]);
        report.voltage_range = Some([lo.min(m.min_voltage), hi.max(m.max_voltage)]);
        report.steps.push(m);
    }
    Ok(report)
}
