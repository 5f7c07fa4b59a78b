//! Model container for linear and second-order cone programs with optional
//! binary variables.

use std::fmt::Write as _;

use crate::error::ModelError;

/// Index of a variable inside a [`ConicModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
    /// Branching priority: fractional binaries of the highest priority are
    /// branched on first.
    pub priority: u8,
}

/// Affine expression `sum(coef * var) + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(VarId, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(value: f64) -> Self {
        Self {
            terms: Vec::new(),
            constant: value,
        }
    }

    pub fn var(v: VarId) -> Self {
        Self {
            terms: vec![(v, 1.0)],
            constant: 0.0,
        }
    }

    pub fn term(v: VarId, coef: f64) -> Self {
        Self {
            terms: vec![(v, coef)],
            constant: 0.0,
        }
    }

    pub fn add(&mut self, v: VarId, coef: f64) -> &mut Self {
        if coef != 0.0 {
            self.terms.push((v, coef));
        }
        self
    }

    pub fn with(mut self, v: VarId, coef: f64) -> Self {
        self.add(v, coef);
        self
    }

    pub fn plus_constant(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn add_expr(&mut self, other: &LinExpr, scale: f64) -> &mut Self {
        for &(v, c) in &other.terms {
            self.add(v, c * scale);
        }
        self.constant += other.constant * scale;
        self
    }

    pub fn plus(mut self, other: &LinExpr, scale: f64) -> Self {
        self.add_expr(other, scale);
        self
    }

    pub fn scaled(&self, scale: f64) -> LinExpr {
        let mut out = LinExpr::new();
        out.add_expr(self, scale);
        out
    }

    pub fn eval(&self, values: &[f64]) -> f64 {
        self.constant
            + self
                .terms
                .iter()
                .map(|&(v, c)| c * values[v.0])
                .sum::<f64>()
    }

    /// Terms with duplicates merged and zeros dropped, sorted by variable.
    pub fn merged_terms(&self) -> Vec<(VarId, f64)> {
        let mut t = self.terms.clone();
        t.sort_by_key(|&(v, _)| v);
        let mut out: Vec<(VarId, f64)> = Vec::with_capacity(t.len());
        for (v, c) in t {
            match out.last_mut() {
                Some((lv, lc)) if *lv == v => *lc += c,
                _ => out.push((v, c)),
            }
        }
        out.retain(|&(_, c)| c != 0.0);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "==",
        }
    }
}

/// Linear row `expr (sense) rhs`. A constant inside `expr` is moved to the
/// right-hand side when the model is compiled.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    pub expr: LinExpr,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    /// Signed violation (positive when violated) at `values`.
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.expr.eval(values);
        match self.sense {
            Sense::Le => lhs - self.rhs,
            Sense::Ge => self.rhs - lhs,
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// Second-order cone `||tail|| <= head`.
#[derive(Debug, Clone, PartialEq)]
pub struct SocBlock {
    pub name: String,
    pub head: LinExpr,
    pub tail: Vec<LinExpr>,
}

impl SocBlock {
    /// `head - ||tail||` at `values`; non-negative inside the cone.
    pub fn margin(&self, values: &[f64]) -> f64 {
        let norm = self
            .tail
            .iter()
            .map(|e| e.eval(values).powi(2))
            .sum::<f64>()
            .sqrt();
        self.head.eval(values) - norm
    }

    pub fn dim(&self) -> usize {
        self.tail.len() + 1
    }
}

/// A minimization problem over continuous and binary variables with linear
/// rows and second-order cones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConicModel {
    pub vars: Vec<Variable>,
    pub rows: Vec<Row>,
    pub cones: Vec<SocBlock>,
    pub objective: LinExpr,
}

impl ConicModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind, lower: f64, upper: f64) -> VarId {
        let id = VarId(self.vars.len());
        self.vars.push(Variable {
            name: name.into(),
            kind,
            lower,
            upper,
            priority: 0,
        });
        id
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        self.add_var(name, VarKind::Continuous, lower, upper)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(name, VarKind::Binary, 0.0, 1.0)
    }

    pub fn add_row(&mut self, name: impl Into<String>, expr: LinExpr, sense: Sense, rhs: f64) -> usize {
        self.rows.push(Row {
            name: name.into(),
            expr,
            sense,
            rhs,
        });
        self.rows.len() - 1
    }

    pub fn add_cone(&mut self, name: impl Into<String>, head: LinExpr, tail: Vec<LinExpr>) -> usize {
        self.cones.push(SocBlock {
            name: name.into(),
            head,
            tail,
        });
        self.cones.len() - 1
    }

    pub fn set_priority(&mut self, v: VarId, priority: u8) {
        self.vars[v.0].priority = priority;
    }

    pub fn set_objective(&mut self, objective: LinExpr) {
        self.objective = objective;
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn binaries(&self) -> Vec<VarId> {
        self.vars
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VarKind::Binary)
            .map(|(i, _)| VarId(i))
            .collect()
    }

    pub fn var_name(&self, v: VarId) -> &str {
        &self.vars[v.0].name
    }

    /// Checks structural invariants: references, binary bounds, cone sizes.
    pub fn validate(&self) -> Result<(), ModelError> {
        let n = self.vars.len();
        let check_expr = |e: &LinExpr, owner: &str| -> Result<(), ModelError> {
            for &(v, c) in &e.terms {
                if v.0 >= n {
                    return Err(ModelError::UnknownVariable {
                        owner: owner.to_string(),
                        index: v.0,
                    });
                }
                if !c.is_finite() {
                    return Err(ModelError::NonFinite(owner.to_string()));
                }
            }
            if !e.constant.is_finite() {
                return Err(ModelError::NonFinite(owner.to_string()));
            }
            Ok(())
        };
        for v in &self.vars {
            if v.lower.is_nan() || v.upper.is_nan() {
                return Err(ModelError::NonFinite(v.name.clone()));
            }
            if v.kind == VarKind::Binary && (v.lower < 0.0 || v.upper > 1.0) {
                return Err(ModelError::BinaryBounds(v.name.clone()));
            }
        }
        check_expr(&self.objective, "objective")?;
        for r in &self.rows {
            check_expr(&r.expr, &r.name)?;
            if !r.rhs.is_finite() {
                return Err(ModelError::NonFinite(r.name.clone()));
            }
        }
        for c in &self.cones {
            if c.tail.is_empty() {
                return Err(ModelError::EmptyCone(c.name.clone()));
            }
            check_expr(&c.head, &c.name)?;
            for e in &c.tail {
                check_expr(e, &c.name)?;
            }
        }
        Ok(())
    }

    /// Largest violation over rows, cones and variable bounds at `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (v, x) in self.vars.iter().zip(values) {
            worst = worst.max(v.lower - x).max(x - v.upper);
        }
        for r in &self.rows {
            worst = worst.max(r.violation(values));
        }
        for c in &self.cones {
            worst = worst.max(-c.margin(values));
        }
        worst
    }

    /// Text dump: one line per variable, objective, row and cone block.
    /// Identical models produce identical dumps.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# conic model: {} vars, {} rows, {} cones",
            self.vars.len(),
            self.rows.len(),
            self.cones.len()
        );
        for (i, v) in self.vars.iter().enumerate() {
            let kind = match v.kind {
                VarKind::Continuous => "C",
                VarKind::Binary => "B",
            };
            let _ = writeln!(out, "var {i} {} {kind} {} {}", v.name, v.lower, v.upper);
        }
        let _ = writeln!(out, "obj min {}", fmt_expr(&self.objective));
        for r in &self.rows {
            let _ = writeln!(
                out,
                "row {} {} {} {}",
                r.name,
                fmt_expr(&r.expr),
                r.sense.symbol(),
                r.rhs
            );
        }
        for c in &self.cones {
            let tail: Vec<String> = c.tail.iter().map(fmt_expr).collect();
            let _ = writeln!(
                out,
                "soc {} head {} tail [{}]",
                c.name,
                fmt_expr(&c.head),
                tail.join(" ; ")
            );
        }
        out
    }
}

fn fmt_expr(e: &LinExpr) -> String {
    let mut parts: Vec<String> = e
        .merged_terms()
        .iter()
        .map(|(v, c)| format!("{c}*x{}", v.0))
        .collect();
    if e.constant != 0.0 || parts.is_empty() {
        parts.push(format!("{}", e.constant));
    }
    parts.join(" + ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merged_terms_combine_duplicates() {
        let e = LinExpr::new()
            .with(VarId(2), 1.0)
            .with(VarId(0), 3.0)
            .with(VarId(2), -1.0)
            .with(VarId(0), 1.0);
        assert_eq!(e.merged_terms(), vec![(VarId(0), 4.0)]);
    }

    #[test]
    fn validate_rejects_dangling_reference() {
        let mut m = ConicModel::new();
        let x = m.add_continuous("x", 0.0, 1.0);
        m.add_row("r", LinExpr::var(x).with(VarId(7), 1.0), Sense::Le, 1.0);
        assert!(matches!(m.validate(), Err(ModelError::UnknownVariable { .. })));
    }

    #[test]
    fn validate_rejects_empty_cone() {
        let mut m = ConicModel::new();
        let x = m.add_continuous("x", 0.0, 1.0);
        m.add_cone("k", LinExpr::var(x), vec![]);
        assert!(matches!(m.validate(), Err(ModelError::EmptyCone(_))));
    }

    #[test]
    fn dump_is_deterministic() {
        let build = || {
            let mut m = ConicModel::new();
            let x = m.add_binary("x");
            let y = m.add_continuous("y", f64::NEG_INFINITY, 2.5);
            m.add_row("r0", LinExpr::var(x).with(y, 0.5), Sense::Ge, 0.25);
            m.add_cone("c0", LinExpr::constant(1.0), vec![LinExpr::var(y)]);
            m.set_objective(LinExpr::term(y, -1.0));
            m
        };
        assert_eq!(build().dump(), build().dump());
        assert!(build().dump().contains("soc c0 head 1 tail [1*x1]"));
    }
}
