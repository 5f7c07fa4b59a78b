//! LP/SOCP problems whose optimum is known in closed form. Shared by the
//! solver regression tests and the acceptance run.

#![allow(dead_code)]

use gridrestore_conic::{ConicModel, LinExpr, Sense, VarId};

const INF: f64 = f64::INFINITY;

pub struct Known {
    pub name: &'static str,
    pub model: ConicModel,
    pub optimum: f64,
}

pub fn lin(terms: &[(VarId, f64)]) -> LinExpr {
    let mut e = LinExpr::new();
    for &(v, c) in terms {
        e.add(v, c);
    }
    e
}

pub fn unit_disk() -> Known {
    let mut m = ConicModel::new();
    let x = m.add_continuous("x", -INF, INF);
    let y = m.add_continuous("y", -INF, INF);
    m.add_cone("disk", LinExpr::constant(1.0), vec![LinExpr::var(x), LinExpr::var(y)]);
    m.set_objective(lin(&[(x, -1.0), (y, -1.0)]));
    Known { name: "unit disk", model: m, optimum: -2f64.sqrt() }
}

pub fn two_variable_lp() -> Known {
    let mut m = ConicModel::new();
    let x = m.add_continuous("x", 0.0, INF);
    let y = m.add_continuous("y", 0.0, INF);
    m.add_row("a", lin(&[(x, 1.0), (y, 2.0)]), Sense::Le, 4.0);
    m.add_row("b", lin(&[(x, 3.0), (y, 1.0)]), Sense::Le, 6.0);
    m.set_objective(lin(&[(x, -1.0), (y, -1.0)]));
    Known { name: "two-variable LP", model: m, optimum: -14.0 / 5.0 }
}

pub fn simplex_equality() -> Known {
    let mut m = ConicModel::new();
    let xs: Vec<VarId> = (0..3).map(|i| m.add_continuous(format!("x{i}"), 0.0, INF)).collect();
    m.add_row("sum", lin(&[(xs[0], 1.0), (xs[1], 1.0), (xs[2], 1.0)]), Sense::Eq, 1.0);
    m.set_objective(lin(&[(xs[0], 1.0), (xs[1], 2.0), (xs[2], 3.0)]));
    Known { name: "simplex", model: m, optimum: 1.0 }
}

pub fn box_bounded() -> Known {
    let mut m = ConicModel::new();
    let x = m.add_continuous("x", 0.0, 4.0);
    let y = m.add_continuous("y", 0.0, 3.0);
    m.add_row("cap", lin(&[(x, 1.0), (y, 1.0)]), Sense::Le, 5.0);
    m.set_objective(lin(&[(x, -3.0), (y, -2.0)]));
    Known { name: "box-bounded LP", model: m, optimum: -14.0 }
}

pub fn distance_to_line() -> Known {
    let mut m = ConicModel::new();
    let x = m.add_continuous("x", -INF, INF);
    let y = m.add_continuous("y", -INF, INF);
    let t = m.add_continuous("t", -INF, INF);
    m.add_row("line", lin(&[(x, 1.0), (y, 1.0)]), Sense::Eq, 0.0);
    m.add_cone(
        "dist",
        LinExpr::var(t),
        vec![LinExpr::var(x).plus_constant(-1.0), LinExpr::var(y).plus_constant(-2.0)],
    );
    m.set_objective(LinExpr::var(t));
    Known { name: "distance to a line", model: m, optimum: 3.0 / 2f64.sqrt() }
}

pub fn hyperbolic() -> Known {
    // x*y >= 1 written as ||(2, x - y)|| <= x + y
    let mut m = ConicModel::new();
    let x = m.add_continuous("x", 0.0, INF);
    let y = m.add_continuous("y", 0.0, INF);
    m.add_cone(
        "hyp",
        lin(&[(x, 1.0), (y, 1.0)]),
        vec![LinExpr::constant(2.0), lin(&[(x, 1.0), (y, -1.0)])],
    );
    m.set_objective(lin(&[(x, 1.0), (y, 1.0)]));
    Known { name: "hyperbolic constraint", model: m, optimum: 2.0 }
}

pub fn least_norm() -> Known {
    let mut m = ConicModel::new();
    let x = m.add_continuous("x1", -INF, INF);
    let y = m.add_continuous("x2", -INF, INF);
    let t = m.add_continuous("t", 0.0, INF);
    m.add_row("h", lin(&[(x, 1.0), (y, 1.0)]), Sense::Eq, 0.0);
    m.add_cone(
        "res",
        LinExpr::var(t),
        vec![LinExpr::var(x).plus_constant(-1.0), LinExpr::var(y).plus_constant(-1.0)],
    );
    m.set_objective(LinExpr::var(t));
    Known { name: "projection onto a hyperplane", model: m, optimum: 2f64.sqrt() }
}

pub fn redundant_rows() -> Known {
    let mut m = ConicModel::new();
    let x = m.add_continuous("x", 0.0, INF);
    let y = m.add_continuous("y", 0.0, INF);
    m.add_row("a", lin(&[(x, 1.0), (y, 1.0)]), Sense::Ge, 1.0);
    m.add_row("b", lin(&[(x, 2.0), (y, 2.0)]), Sense::Ge, 2.0);
    m.add_row("c", lin(&[(x, 1.0), (y, 1.0)]), Sense::Eq, 1.0);
    m.set_objective(lin(&[(x, 1.0), (y, 1.0)]));
    Known { name: "redundant rows", model: m, optimum: 1.0 }
}

pub fn absolute_value() -> Known {
    let mut m = ConicModel::new();
    let x = m.add_continuous("x", -INF, INF);
    let t = m.add_continuous("t", -INF, INF);
    m.add_row("up", lin(&[(t, 1.0), (x, -1.0)]), Sense::Ge, -3.0);
    m.add_row("dn", lin(&[(t, 1.0), (x, 1.0)]), Sense::Ge, 3.0);
    m.add_row("x", LinExpr::var(x), Sense::Ge, 5.0);
    m.set_objective(LinExpr::var(t));
    Known { name: "absolute value epigraph", model: m, optimum: 2.0 }
}

pub fn offset_disk() -> Known {
    let mut m = ConicModel::new();
    let x = m.add_continuous("x", -INF, INF);
    let y = m.add_continuous("y", -INF, INF);
    m.add_cone(
        "disk",
        LinExpr::constant(5.0),
        vec![LinExpr::var(x).plus_constant(-3.0), LinExpr::var(y).plus_constant(-4.0)],
    );
    m.set_objective(lin(&[(x, 1.0), (y, 1.0)]));
    Known { name: "offset disk", model: m, optimum: 7.0 - 5.0 * 2f64.sqrt() }
}

pub fn transportation() -> Known {
    let supply = [20.0, 30.0];
    let demand = [10.0, 25.0, 15.0];
    let cost = [[8.0, 6.0, 10.0], [9.0, 12.0, 13.0]];
    let mut m = ConicModel::new();
    let mut v = [[VarId(0); 3]; 2];
    for i in 0..2 {
        for j in 0..3 {
            v[i][j] = m.add_continuous(format!("f{i}{j}"), 0.0, INF);
        }
    }
    for i in 0..2 {
        m.add_row(format!("s{i}"), lin(&[(v[i][0], 1.0), (v[i][1], 1.0), (v[i][2], 1.0)]), Sense::Eq, supply[i]);
    }
    for j in 0..3 {
        m.add_row(format!("d{j}"), lin(&[(v[0][j], 1.0), (v[1][j], 1.0)]), Sense::Eq, demand[j]);
    }
    let mut obj = LinExpr::new();
    for i in 0..2 {
        for j in 0..3 {
            obj.add(v[i][j], cost[i][j]);
        }
    }
    m.set_objective(obj);
    Known { name: "transportation", model: m, optimum: 465.0 }
}

pub fn rotated_cone() -> Known {
    // max x s.t. x^2 <= y z, y + z = 2
    let mut m = ConicModel::new();
    let x = m.add_continuous("x", -INF, INF);
    let y = m.add_continuous("y", 0.0, INF);
    let z = m.add_continuous("z", 0.0, INF);
    m.add_row("budget", lin(&[(y, 1.0), (z, 1.0)]), Sense::Eq, 2.0);
    m.add_cone("rot", lin(&[(y, 1.0), (z, 1.0)]), vec![LinExpr::term(x, 2.0), lin(&[(y, 1.0), (z, -1.0)])]);
    m.set_objective(LinExpr::term(x, -1.0));
    Known { name: "rotated cone", model: m, optimum: -1.0 }
}

pub fn fermat_point() -> Known {
    let pts = [(0.0, 0.0), (2.0, 0.0), (1.0, 3f64.sqrt())];
    let mut m = ConicModel::new();
    let x = m.add_continuous("x", -INF, INF);
    let y = m.add_continuous("y", -INF, INF);
    let mut obj = LinExpr::new();
    for (k, (px, py)) in pts.iter().enumerate() {
        let t = m.add_continuous(format!("t{k}"), -INF, INF);
        m.add_cone(
            format!("d{k}"),
            LinExpr::var(t),
            vec![LinExpr::var(x).plus_constant(-px), LinExpr::var(y).plus_constant(-py)],
        );
        obj.add(t, 1.0);
    }
    m.set_objective(obj);
    Known { name: "Fermat point", model: m, optimum: 2.0 * 3f64.sqrt() }
}

pub fn negative_lower_bound() -> Known {
    let mut m = ConicModel::new();
    let x = m.add_continuous("x", -5.0, INF);
    let y = m.add_continuous("y", -INF, 10.0);
    m.add_row("link", lin(&[(x, 1.0), (y, 1.0)]), Sense::Eq, 2.0);
    m.set_objective(LinExpr::var(x));
    Known { name: "negative lower bound", model: m, optimum: -5.0 }
}

pub fn objective_constant() -> Known {
    let mut m = ConicModel::new();
    let x = m.add_continuous("x", 1.0, 2.0);
    m.set_objective(LinExpr::var(x).plus_constant(10.0));
    Known { name: "objective constant", model: m, optimum: 11.0 }
}

pub fn ball_3d() -> Known {
    // min c·x over ||x|| <= 2 is -2||c||
    let c = [1.0, -2.0, 2.0];
    let mut m = ConicModel::new();
    let xs: Vec<VarId> = (0..3).map(|i| m.add_continuous(format!("x{i}"), -INF, INF)).collect();
    m.add_cone("ball", LinExpr::constant(2.0), xs.iter().map(|&v| LinExpr::var(v)).collect());
    m.set_objective(lin(&[(xs[0], c[0]), (xs[1], c[1]), (xs[2], c[2])]));
    Known { name: "ball in three dimensions", model: m, optimum: -6.0 }
}

pub fn diet() -> Known {
    // two foods, two nutrients; optimum at the intersection of both rows
    let mut m = ConicModel::new();
    let a = m.add_continuous("a", 0.0, INF);
    let b = m.add_continuous("b", 0.0, INF);
    m.add_row("protein", lin(&[(a, 2.0), (b, 1.0)]), Sense::Ge, 8.0);
    m.add_row("energy", lin(&[(a, 1.0), (b, 3.0)]), Sense::Ge, 9.0);
    m.set_objective(lin(&[(a, 3.0), (b, 4.0)]));
    // a = 3, b = 2
    Known { name: "diet", model: m, optimum: 17.0 }
}

pub fn cone_with_linear_cap() -> Known {
    // min t s.t. ||(x - 3, y)|| <= t, x <= 1: nearest point of a half-plane
    let mut m = ConicModel::new();
    let x = m.add_continuous("x", -INF, 1.0);
    let y = m.add_continuous("y", -INF, INF);
    let t = m.add_continuous("t", -INF, INF);
    m.add_cone("d", LinExpr::var(t), vec![LinExpr::var(x).plus_constant(-3.0), LinExpr::var(y)]);
    m.set_objective(LinExpr::var(t));
    Known { name: "distance to a half-plane", model: m, optimum: 2.0 }
}

pub fn all() -> Vec<Known> {
    vec![
        unit_disk(),
        two_variable_lp(),
        simplex_equality(),
        box_bounded(),
        distance_to_line(),
        hyperbolic(),
        least_norm(),
        redundant_rows(),
        absolute_value(),
        offset_disk(),
        transportation(),
        rotated_cone(),
        fermat_point(),
        negative_lower_bound(),
        objective_constant(),
        ball_3d(),
        diet(),
        cone_with_linear_cap(),
    ]
}
