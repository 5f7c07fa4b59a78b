//! Acceptance run: prints one PASS/FAIL line per criterion and exits non-zero
//! if any criterion fails.

mod common;
#[path = "../../conic/tests/common/optima.rs"]
mod optima;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use gridrestore::formulation::{build_master, encode_conditional, encode_either_or, CutKind, CutRecord, Ineq};
use gridrestore::mcb::{run_mcb, McbResult, McbStatus};
use gridrestore::netmodel::{is_radial, Configuration, Network, OffOutageArea};
use gridrestore::solve::{enumerate, evaluate_configuration, solve_integrated, SolverParams, UnitCache};
use gridrestore::validation::{switching_minutes, validate_plan, Action, Element, LimitKind, Operation, RestorationPlan};
use gridrestore_conic::{solve_continuous, solve_mip, ConicModel, IpmSettings, LinExpr, MipStatus};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EPS_OPT: f64 = 1e-6;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

/// A decomposition run kept for the later criteria.
struct Run {
    label: String,
    net: Network,
    area: OffOutageArea,
    mcb: McbResult,
    plans: Vec<RestorationPlan>,
    masters: Vec<Vec<String>>,
}

fn params() -> SolverParams {
    SolverParams {
        eps_opt: EPS_OPT,
        ..SolverParams::default()
    }
}

fn criterion_1() -> Verdict {
    let act = |element, id: &str, operation| Action::new(1, element, id, operation, "09:00".into());
    let open_line = |id| act(Element::Line, id, Operation::Open);
    let close_line = |id| act(Element::Line, id, Operation::Close);
    let breaker = |id| act(Element::LoadBreaker, id, Operation::Open);
    // manual line and tie switches 30 min, remote load breakers 0.5 min
    let minutes = |e: Element, _: &str| Some(if e == Element::Line { 30.0 } else { 0.5 });

    let mut mcb = vec![open_line("35-36")];
    mcb.extend(["33", "34", "37", "38", "41", "42"].map(breaker));
    mcb.extend(["T11", "T3"].map(close_line));
    let mut iao = vec![open_line("38-39")];
    iao.extend(["33", "34", "37", "41", "42"].map(breaker));
    iao.extend(["T11", "T3"].map(close_line));
    let second = vec![open_line("3-4"), close_line("T2")];

    let got: Vec<f64> = [&mcb, &iao, &second]
        .iter()
        .map(|a| switching_minutes(a, minutes).unwrap())
        .collect();
    let pass = got == [93.0, 92.5, 60.0];
    Verdict::new(pass, format!("switching minutes {} / {} / {} (expected 93 / 92.5 / 60, exact)", got[0], got[1], got[2]))
}

fn breakered(net: &Network, area: &OffOutageArea) -> usize {
    area.n_star
        .iter()
        .filter(|&&i| net.load_at(i).is_some_and(|l| l.breaker))
        .count()
}

fn criterion_2(runs: &mut Vec<Run>) -> Verdict {
    let mut fails = Vec::new();
    let mut slowest = Duration::ZERO;
    for name in common::TOYS {
        let (net, area) = common::fixture(name);
        if area.switchable.len() > 12 || breakered(&net, &area) > 10 || area.steps.len() > 3 {
            fails.push(format!("{name}: fixture exceeds the size caps"));
        }
        let p = params();
        let oracle = enumerate(&net, &area, &p, &UnitCache::new()).unwrap();
        let best = oracle.best.as_ref().unwrap().cost.objective;

        let t = Instant::now();
        let mcb = run_mcb(&net, &area, &p, &UnitCache::new()).unwrap();
        let took = t.elapsed();
        slowest = slowest.max(took);
        if mcb.status != McbStatus::Converged || (mcb.ub - best).abs() > EPS_OPT || took > Duration::from_secs(60) {
            fails.push(format!("{name}: mcb {:?} {} vs {best} in {took:?}", mcb.status, mcb.ub));
        }

        let t = Instant::now();
        let iao = solve_integrated(&net, &area, &p).unwrap();
        let took = t.elapsed();
        slowest = slowest.max(took);
        let tol = p.mip.gap_abs.max(p.mip.gap_rel * best.abs());
        if (iao.schedule.cost.objective - best).abs() > tol || took > Duration::from_secs(60) {
            fails.push(format!("{name}: iao {} vs {best} in {took:?}", iao.schedule.cost.objective));
        }

        let mut plans = vec![RestorationPlan::from_schedule(&net, &area, &iao.schedule, "iao")];
        if let Some(s) = mcb.schedule() {
            plans.push(RestorationPlan::from_schedule(&net, &area, s, "mcb"));
        }
        let masters = mcb.trace.iter().map(|t| t.closed.clone()).collect();
        runs.push(Run {
            label: name.to_string(),
            net,
            area,
            mcb,
            plans,
            masters,
        });
    }
    let detail = if fails.is_empty() {
        format!(
            "{} fixtures: mcb and iao equal the enumeration optimum, slowest solve {:.1} s",
            common::TOYS.len(),
            slowest.as_secs_f64()
        )
    } else {
        fails.join("; ")
    };
    Verdict::new(fails.is_empty(), detail)
}

fn criterion_3(runs: &mut Vec<Run>) -> Verdict {
    let mut fails = Vec::new();
    let mut rows = 0;
    for seed in 0..20u64 {
        let (net, area) = common::random_toy(seed);
        let mcb = match run_mcb(&net, &area, &params(), &UnitCache::new()) {
            Ok(r) => r,
            Err(e) => {
                fails.push(format!("seed {seed}: {e}"));
                continue;
            }
        };
        rows += mcb.trace.len();
        for w in mcb.trace.windows(2) {
            if w[1].lb < w[0].lb || w[1].ub > w[0].ub {
                fails.push(format!("seed {seed}: bounds move the wrong way at q={}", w[1].q));
            }
        }
        for t in &mcb.trace {
            if t.lb.is_finite() && t.ub.is_finite() && t.lb > t.ub + 1e-9 {
                fails.push(format!("seed {seed}: lb {} > ub {} at q={}", t.lb, t.ub, t.q));
            }
        }
        let plans = mcb
            .schedule()
            .map(|s| vec![RestorationPlan::from_schedule(&net, &area, s, "mcb")])
            .unwrap_or_default();
        let masters = mcb.trace.iter().map(|t| t.closed.clone()).collect();
        runs.push(Run {
            label: format!("random {seed}"),
            net,
            area,
            mcb,
            plans,
            masters,
        });
    }
    let detail = if fails.is_empty() {
        format!("20 random instances, {rows} trace rows: LB non-decreasing, UB non-increasing, LB <= UB + 1e-9")
    } else {
        fails.join("; ")
    };
    Verdict::new(fails.is_empty(), detail)
}

/// Radial configurations agreeing with the premise of `cut`.
fn premise_samples(run: &Run, cut: &CutRecord, rng: &mut ChaCha8Rng, want: usize) -> Vec<Configuration> {
    let mut out = BTreeSet::new();
    for _ in 0..4000 {
        if out.len() == want {
            break;
        }
        let mut closed = BTreeSet::new();
        for &l in &run.area.switchable {
            let on = if cut.lines.contains(&l) {
                cut.closed.contains(&l)
            } else {
                rng.gen_bool(0.5)
            };
            if on {
                closed.insert(l);
            }
        }
        let cfg = Configuration { closed };
        if is_radial(&run.net, &run.area, &cfg).radial {
            out.insert(cfg);
        }
    }
    out.into_iter().collect()
}

fn criterion_4(runs: &[Run]) -> Verdict {
    let mut fails = Vec::new();
    let (mut opt, mut samples, mut feas, mut short) = (0, 0, 0, 0);
    let p = params();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for run in runs.iter().take(common::TOYS.len()) {
        for cut in &run.mcb.cuts {
            match cut.kind {
                CutKind::Optimality => {
                    opt += 1;
                    let configs = premise_samples(run, cut, &mut rng, 10);
                    if configs.len() < 10 {
                        short += 1;
                    }
                    for cfg in configs {
                        samples += 1;
                        let eval = evaluate_configuration(&run.net, &run.area, &cfg, &p, &UnitCache::new()).unwrap();
                        let unit = eval.units.iter().find(|(c, _)| c.feeder == cut.feeder);
                        match unit {
                            Some((_, o)) if o.feasible && o.value >= cut.value - 1e-7 => {}
                            other => fails.push(format!(
                                "{}: cut of iteration {} undercut ({:?} < {})",
                                run.label,
                                cut.iteration,
                                other.map(|(_, o)| o.value),
                                cut.value
                            )),
                        }
                    }
                }
                CutKind::Feasibility => {
                    feas += 1;
                    let yk = &run.mcb.trace[cut.iteration - 1].closed;
                    let mut built = build_master(&run.net, &run.area, p.weights, &p.relax, &run.mcb.cuts);
                    for (&l, &v) in &built.atlas.mu {
                        let x = yk.contains(&run.net.lines[l].id) as u8 as f64;
                        built.model.vars[v.0].lower = x;
                        built.model.vars[v.0].upper = x;
                    }
                    let status = solve_mip(&built.model, &p.mip).unwrap().status;
                    if status != MipStatus::Infeasible {
                        fails.push(format!("{}: y^{} still feasible ({status:?})", run.label, cut.iteration));
                    }
                }
            }
        }
    }
    let mut detail = format!(
        "{opt} optimality cuts, {samples} premise samples re-solved >= L_v - 1e-7; {feas} feasibility cuts exclude y^k"
    );
    if short > 0 {
        detail.push_str(&format!(" ({short} cuts admit fewer than 10 radial configurations; all were used)"));
    }
    if !fails.is_empty() {
        detail = fails.join("; ");
    }
    Verdict::new(fails.is_empty() && opt > 0, detail)
}

fn criterion_5(runs: &[Run]) -> Verdict {
    let mut fails = Vec::new();
    let mut checked = 0;
    for run in runs {
        for closed in &run.masters {
            let cfg = Configuration {
                closed: closed.iter().map(|id| run.net.line_index(id).unwrap()).collect(),
            };
            checked += 1;
            if let Some(v) = is_radial(&run.net, &run.area, &cfg).violation {
                fails.push(format!("{}: {closed:?} {v:?}", run.label));
            }
        }
    }
    let detail = if fails.is_empty() {
        format!("{checked} master solutions over {} runs radial, no islands", runs.len())
    } else {
        fails.join("; ")
    };
    Verdict::new(fails.is_empty(), detail)
}

fn criterion_6() -> Verdict {
    let set = optima::all();
    let settings = IpmSettings::default();
    let mut worst_obj: f64 = 0.0;
    let mut worst_kkt: f64 = 0.0;
    let mut fails = Vec::new();
    for k in &set {
        match solve_continuous(&k.model, &settings) {
            Ok(r) => {
                let err = (r.objective - k.optimum).abs();
                let kkt = r.residuals.primal.max(r.residuals.dual);
                worst_obj = worst_obj.max(err);
                worst_kkt = worst_kkt.max(kkt);
                if err > 1e-6 || kkt > 1e-8 {
                    fails.push(format!("{}: error {err:e}, kkt {kkt:e}", k.name));
                }
            }
            Err(e) => fails.push(format!("{}: {e}", k.name)),
        }
    }
    let disk = solve_continuous(&optima::unit_disk().model, &settings).unwrap();
    let disk_err = (disk.objective + 2f64.sqrt()).abs();
    if disk_err > 1e-8 {
        fails.push(format!("unit disk off by {disk_err:e}"));
    }
    let pass = fails.is_empty() && set.len() >= 15;
    let detail = if fails.is_empty() {
        format!(
            "{} problems, max |obj error| {worst_obj:.1e}, max KKT residual {worst_kkt:.1e}, unit disk error {disk_err:.1e}",
            set.len()
        )
    } else {
        fails.join("; ")
    };
    Verdict::new(pass, detail)
}

fn criterion_7(runs: &[Run]) -> Verdict {
    let mut fails = Vec::new();
    let (mut plans, mut lo, mut hi, mut margin) = (0, f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY);
    for run in runs {
        for plan in &run.plans {
            plans += 1;
            let report = match validate_plan(&run.net, &run.area, plan) {
                Ok(r) => r,
                Err(e) => {
                    fails.push(format!("{} {}: {e}", run.label, plan.method));
                    continue;
                }
            };
            if let Some([a, b]) = report.voltage_range {
                lo = lo.min(a);
                hi = hi.max(b);
                if a < 0.917 || b > 1.05 {
                    fails.push(format!("{} {}: voltage range [{a}, {b}]", run.label, plan.method));
                }
            }
            if let Some(m) = report.min_voltage_margin {
                margin = margin.min(m);
                if m < -1e-4 {
                    fails.push(format!("{} {}: voltage margin {m}", run.label, plan.method));
                }
            }
            if report.violations.iter().any(|v| v.kind == LimitKind::Current) {
                fails.push(format!("{} {}: current violation", run.label, plan.method));
            }
        }
    }
    let detail = if fails.is_empty() {
        format!("{plans} plans: voltage in [{lo:.4}, {hi:.4}] p.u., min margin {margin:.4}, no current violations")
    } else {
        fails.join("; ")
    };
    Verdict::new(fails.is_empty() && plans > 0, detail)
}

/// Exhaustive check of the two encodings on a grid of integer points.
fn generic_tables() -> usize {
    let rows_hold = |m: &ConicModel, x: &[f64]| m.rows.iter().all(|r| r.violation(x) <= 1e-12);
    let mut checked = 0;
    let mut m = ConicModel::new();
    let x = m.add_continuous("x", 0.0, 10.0);
    let a = Ineq::le(LinExpr::var(x), 2.0);
    let b = Ineq::ge(LinExpr::var(x), 7.0);
    let psi = encode_either_or(&mut m, "t", &a, &b, 10.0, 10.0);
    for xi in 0..=10 {
        let exists = [0.0, 1.0].iter().any(|&p| {
            let mut v = vec![0.0; 2];
            v[x.0] = xi as f64;
            v[psi.0] = p;
            rows_hold(&m, &v)
        });
        assert_eq!(exists, xi <= 2 || xi >= 7);
        checked += 1;
    }
    let mut m = ConicModel::new();
    let vars: Vec<_> = ["x", "y", "z"].iter().map(|n| m.add_binary(*n)).collect();
    let d0 = Ineq::le(LinExpr::var(vars[0]), 0.0);
    let d1 = Ineq::le(LinExpr::var(vars[1]), 0.0);
    let c = Ineq::ge(LinExpr::var(vars[2]), 1.0);
    encode_conditional(&mut m, "t", &d0, &d1, &c, [1.0, 1.0, 1.0]);
    for bits in 0..8u32 {
        let val: Vec<f64> = (0..3).map(|j| ((bits >> j) & 1) as f64).collect();
        let exists = (0..4u32).any(|aux| {
            let mut v = val.clone();
            v.extend([(aux & 1) as f64, (aux >> 1) as f64]);
            rows_hold(&m, &v)
        });
        let want = val[0] == 0.0 || val[1] == 0.0 || val[2] == 1.0;
        assert_eq!(exists, want);
        checked += 1;
    }
    checked
}

fn criterion_8(runs: &[Run]) -> Verdict {
    let generic = generic_tables();
    let (mut cuts, mut assignments, mut mismatches) = (0, 0, 0);
    for run in runs.iter().take(common::TOYS.len()) {
        for k in 0..run.mcb.cuts.len() {
            if let Some(t) = common::check_cut_truth_table(&run.net, &run.area, &run.mcb.cuts, k, 12) {
                cuts += 1;
                assignments += t.assignments;
                mismatches += t.mismatches;
            }
        }
    }
    let pass = mismatches == 0 && cuts > 0;
    Verdict::new(
        pass,
        format!(
            "{generic} generic assignments plus {assignments} assignments over {cuts} generated cuts, {mismatches} disagreements"
        ),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut runs = Vec::new();
    let report = |n: usize, v: Verdict| {
        println!("criterion {n} [{}] {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        v.pass
    };
    let mut ok = report(1, criterion_1());
    ok &= report(2, criterion_2(&mut runs));
    ok &= report(3, criterion_3(&mut runs));
    ok &= report(4, criterion_4(&runs));
    ok &= report(5, criterion_5(&runs));
    ok &= report(6, criterion_6());
    ok &= report(7, criterion_7(&runs));
    ok &= report(8, criterion_8(&runs));
    println!(
        "criterion 9 [NOT REPRODUCED] published objective values and convergence curves for the 84-bus and \
         70-bus systems need external datasets that are not bundled; criteria 1-8 stand in for them"
    );
    println!("acceptance finished in {:.1} s", start.elapsed().as_secs_f64());
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
