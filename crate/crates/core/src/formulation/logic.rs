use gridrestore_conic::{ConicModel, LinExpr, Sense, VarId};

/// A single linear inequality `expr (≤|≥) rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ineq {
    pub expr: LinExpr,
    pub sense: Sense,
    pub rhs: f64,
}

impl Ineq {
    pub fn le(expr: LinExpr, rhs: f64) -> Self {
        Self { expr, sense: Sense::Le, rhs }
    }

    pub fn ge(expr: LinExpr, rhs: f64) -> Self {
        Self { expr, sense: Sense::Ge, rhs }
    }

    pub fn holds(&self, values: &[f64], tol: f64) -> bool {
        let lhs = self.expr.eval(values);
        match self.sense {
            Sense::Le => lhs <= self.rhs + tol,
            Sense::Ge => lhs >= self.rhs - tol,
            Sense::Eq => (lhs - self.rhs).abs() <= tol,
        }
    }

    /// Adds the row relaxed by `relax` (an expression that is zero when the
    /// row must hold and at least one when it may be violated by up to `m`).
    fn add_relaxed(&self, model: &mut ConicModel, name: String, relax: &LinExpr, m: f64) {
        let expr = match self.sense {
            Sense::Le => self.expr.clone().plus(relax, -m),
            Sense::Ge => self.expr.clone().plus(relax, m),
            Sense::Eq => panic!("disjunct rows must be inequalities"),
        };
        model.add_row(name, expr, self.sense, self.rhs);
    }
}

/// `a ∨ b` with one binary ψ: ψ = 0 enforces `a` and relaxes `b` by `m_b`,
/// ψ = 1 enforces `b` and relaxes `a` by `m_a`. Each big-M must exceed the
/// largest violation of its row over the feasible set.
pub fn encode_either_or(model: &mut ConicModel, name: &str, a: &Ineq, b: &Ineq, m_a: f64, m_b: f64) -> VarId {
    let psi = model.add_binary(format!("psi[{name}]"));
    a.add_relaxed(model, format!("{name}/a"), &LinExpr::var(psi), m_a);
    b.add_relaxed(model, format!("{name}/b"), &LinExpr::term(psi, -1.0).plus_constant(1.0), m_b);
    psi
}

/// `(¬d0 ∧ ¬d1) ⇒ c`, written as the disjunction `d0 ∨ d1 ∨ c` over two
/// nested binaries with ψ2 ≤ ψ1: (0,0) enforces `d0`, (1,0) enforces `d1`,
/// (1,1) enforces `c`.
pub fn encode_conditional(
    model: &mut ConicModel,
    name: &str,
    d0: &Ineq,
    d1: &Ineq,
    c: &Ineq,
    m: [f64; 3],
) -> (VarId, VarId) {
    let psi1 = model.add_binary(format!("psi1[{name}]"));
    let psi2 = model.add_binary(format!("psi2[{name}]"));
    model.add_row(format!("{name}/nest"), LinExpr::var(psi2).with(psi1, -1.0), Sense::Le, 0.0);
    d0.add_relaxed(model, format!("{name}/d0"), &LinExpr::var(psi1), m[0]);
    d1.add_relaxed(
        model,
        format!("{name}/d1"),
        &LinExpr::term(psi1, -1.0).with(psi2, 1.0).plus_constant(1.0),
        m[1],
    );
    c.add_relaxed(
        model,
        format!("{name}/c"),
        &LinExpr::term(psi1, -1.0).with(psi2, -1.0).plus_constant(2.0),
        m[2],
    );
    (psi1, psi2)
}
