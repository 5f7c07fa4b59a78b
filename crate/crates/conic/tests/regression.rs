//! Small LP/SOCP problems with closed-form optima.

mod common;

use common::optima::{self, lin};
use gridrestore_conic::{solve_continuous, Certificate, ConicModel, IpmSettings, LinExpr, Sense, SolveResult, SolveStatus};

const INF: f64 = f64::INFINITY;

fn solve(m: &ConicModel) -> SolveResult {
    solve_continuous(m, &IpmSettings::default()).expect("solver error")
}

fn assert_optimal(m: &ConicModel, r: &SolveResult, expected: f64, tol: f64) {
    assert_eq!(r.status, SolveStatus::Optimal);
    assert!(
        (r.objective - expected).abs() <= tol * (1.0 + expected.abs()),
        "objective {} expected {}",
        r.objective,
        expected
    );
    assert!(r.residuals.primal <= 1e-8, "{:?}", r.residuals);
    assert!(r.residuals.dual <= 1e-8, "{:?}", r.residuals);
    assert!((r.objective - r.dual_objective).abs() <= 1e-6 * (1.0 + r.objective.abs()));
    assert!(m.max_violation(&r.x) <= 1e-7, "violation {}", m.max_violation(&r.x));
}

#[test]
fn closed_form_optima() {
    let set = optima::all();
    assert!(set.len() >= 15);
    for k in &set {
        let r = solve(&k.model);
        assert_optimal(&k.model, &r, k.optimum, 1e-8);
    }
}

#[test]
fn unit_disk_to_full_precision() {
    let r = solve(&optima::unit_disk().model);
    assert!((r.objective + 2f64.sqrt()).abs() <= 1e-8, "{}", r.objective);
    let h = 2f64.sqrt() / 2.0;
    assert!((r.x[0] - h).abs() < 1e-7 && (r.x[1] - h).abs() < 1e-7);
}

#[test]
fn two_variable_lp_vertex() {
    let m = optima::two_variable_lp().model;
    let r = solve(&m);
    assert!((r.x[0] - 1.6).abs() < 1e-6 && (r.x[1] - 1.2).abs() < 1e-6);
    // both rows active: duals solve [1 3; 2 1] λ = [1; 1]
    assert!((r.row_duals[0] - 0.4).abs() < 1e-6, "{:?}", r.row_duals);
    assert!((r.row_duals[1] - 0.2).abs() < 1e-6, "{:?}", r.row_duals);
}

#[test]
fn infeasible_lp_has_farkas_ray() {
    let mut m = ConicModel::new();
    let x = m.add_continuous("x", 0.0, INF);
    let y = m.add_continuous("y", 0.0, INF);
    m.add_row("neg", lin(&[(x, 1.0), (y, 1.0)]), Sense::Le, -1.0);
    m.set_objective(lin(&[(x, 1.0), (y, 1.0)]));
    let r = solve(&m);
    assert_eq!(r.status, SolveStatus::Infeasible);
    match r.certificate {
        Some(Certificate::PrimalInfeasible { row_duals, .. }) => assert!(row_duals[0] > 0.0),
        other => panic!("{other:?}"),
    }
}

#[test]
fn infeasible_socp() {
    let mut m = ConicModel::new();
    let x = m.add_continuous("x", 2.0, INF);
    let y = m.add_continuous("y", -INF, INF);
    m.add_cone("disk", LinExpr::constant(1.0), vec![LinExpr::var(x), LinExpr::var(y)]);
    m.set_objective(LinExpr::var(y));
    let r = solve(&m);
    assert_eq!(r.status, SolveStatus::Infeasible);
}

#[test]
fn unbounded_lp_has_ray() {
    let mut m = ConicModel::new();
    let x = m.add_continuous("x", 0.0, INF);
    let y = m.add_continuous("y", 0.0, INF);
    m.add_row("r", lin(&[(x, 1.0), (y, -1.0)]), Sense::Le, 1.0);
    m.set_objective(LinExpr::term(x, -1.0));
    let r = solve(&m);
    assert_eq!(r.status, SolveStatus::Unbounded);
    match r.certificate {
        Some(Certificate::DualInfeasible { ray }) => {
            assert!(ray[0] > 0.0);
            assert!(ray[0] - ray[1] <= 1e-6);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn fermat_point_of_equilateral_triangle() {
    let r = solve(&optima::fermat_point().model);
    assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] - 1.0 / 3f64.sqrt()).abs() < 1e-5);
}

#[test]
fn badly_scaled_rows() {
    let mut m = ConicModel::new();
    let x = m.add_continuous("x", 0.0, INF);
    let y = m.add_continuous("y", 0.0, INF);
    m.add_row("big", lin(&[(x, 1e4), (y, 1e4)]), Sense::Ge, 1e4);
    m.add_row("small", lin(&[(x, 1e-3), (y, -1e-3)]), Sense::Eq, 0.0);
    m.set_objective(lin(&[(x, 1e2), (y, 3e2)]));
    let r = solve(&m);
    assert_eq!(r.status, SolveStatus::Optimal);
    assert!((r.objective - 200.0).abs() <= 1e-8 * 200.0, "{}", r.objective);
    // row violations relative to the row scale
    assert!(m.rows[0].violation(&r.x) <= 1e-8 * 1e4);
    assert!(m.rows[1].violation(&r.x) <= 1e-8);
}

#[test]
fn time_limit_zero_reports_time_limit() {
    let mut m = ConicModel::new();
    let x = m.add_continuous("x", -INF, INF);
    let y = m.add_continuous("y", -INF, INF);
    m.add_cone("disk", LinExpr::constant(1.0), vec![LinExpr::var(x), LinExpr::var(y)]);
    m.set_objective(lin(&[(x, -1.0), (y, -1.0)]));
    let settings = IpmSettings {
        time_limit: Some(std::time::Duration::ZERO),
        ..IpmSettings::default()
    };
    let r = solve_continuous(&m, &settings).unwrap();
    assert_eq!(r.status, SolveStatus::TimeLimit);
}
