use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use gridrestore::formulation::{build_master, build_subproblem, build_integrated, ObjectiveWeights};
use gridrestore::mcb::{run_mcb, trace_csv, McbStatus};
use gridrestore::netmodel::{compute_off_outage, load_network, load_scenario, supply_units, Network, OffOutageArea};
use gridrestore::solve::{enumerate_with_caps, solve_integrated, EnumCaps, Schedule, SolveError, SolverParams, UnitCache};
use gridrestore::validation::{validate_plan, MarginReport, RestorationPlan, ValidationError};
use serde_json::json;

use super::{EnumerateArgs, Inputs, Method, SolveArgs, Tuning, ValidateArgs};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_NO_RESTORATION: u8 = 3;
pub const EXIT_TIME_LIMIT: u8 = 4;
pub const EXIT_VIOLATIONS: u8 = 5;
const EXIT_SOLVER: u8 = 1;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn input(message: impl ToString) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.to_string(),
        }
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        let code = match &e {
            SolveError::NoRestoration => EXIT_NO_RESTORATION,
            SolveError::TimeLimit => EXIT_TIME_LIMIT,
            SolveError::Network(_) | SolveError::Unsupported(_) | SolveError::TooLarge(_) => EXIT_INPUT,
            SolveError::Conic(_) => EXIT_SOLVER,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn load(network: &Path, scenario: &Path) -> Result<(Network, OffOutageArea), Failure> {
    let net = load_network(network).map_err(Failure::input)?;
    let sc = load_scenario(scenario, &net).map_err(Failure::input)?;
    let area = compute_off_outage(&net, &sc).map_err(Failure::input)?;
    Ok((net, area))
}

fn params(t: &Tuning, lexicographic: bool) -> Result<SolverParams, Failure> {
    let mut p = SolverParams::default();
    if let Some([w_re, w_sw, w_op]) = t.weights {
        p.weights = ObjectiveWeights {
            w_re,
            w_sw,
            w_op,
            lexicographic,
        };
    } else {
        p.weights.lexicographic = lexicographic;
    }
    p.weights.validate().map_err(Failure::input)?;
    if let Some(e) = t.eps_opt {
        if !(e > 0.0) {
            return Err(Failure::input("--eps-opt must be positive"));
        }
        p.eps_opt = e;
    }
    if let Some(s) = t.time_limit_s {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Failure::input("--time-limit-s must be positive"));
        }
        p.time_limit = Duration::from_secs_f64(s);
    }
    match t.parallel {
        Some(0) => return Err(Failure::input("--parallel needs at least one thread")),
        Some(1) => p.parallel = false,
        Some(n) => {
            // the global pool can only be set once per process
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::warn!("keeping the existing thread pool: {e}");
            }
        }
        None => {}
    }
    p.seed = t.seed;
    Ok(p)
}

fn write(dir: &Path, name: &str, text: &str) -> Result<(), Failure> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))
}

fn prepare_out(inputs: &Inputs) -> Result<(), Failure> {
    fs::create_dir_all(&inputs.out).map_err(|e| Failure::input(format!("cannot create {}: {e}", inputs.out.display())))
}

/// Margin report of a freshly computed plan; a sweep failure is reported as
/// a violation instead of aborting the run.
fn margins(net: &Network, area: &OffOutageArea, plan: &RestorationPlan) -> Result<Option<MarginReport>, Failure> {
    match validate_plan(net, area, plan) {
        Ok(r) => Ok(Some(r)),
        Err(ValidationError::Diverged { iterations }) => {
            log::warn!("power flow of the plan diverged after {iterations} sweeps");
            Ok(None)
        }
        Err(e) => Err(Failure {
            code: EXIT_SOLVER,
            message: format!("plan failed validation: {e}"),
        }),
    }
}

fn cost_json(s: &Schedule) -> serde_json::Value {
    json!({
        "f_re": s.cost.reliability,
        "f_sw_min": s.cost.switching_min,
        "f_op": s.cost.losses,
        "objective": s.cost.objective,
    })
}

fn print_summary(method: &str, status: &str, s: &Schedule, net: &Network, wall: Duration, report: Option<&MarginReport>) {
    println!("method      {method}");
    println!("status      {status}");
    println!("F^re        {:.6}", s.cost.reliability);
    println!("F^sw (min)  {:.3}", s.cost.switching_min);
    println!("F^op        {:.6}", s.cost.losses);
    println!("objective   {:.6}", s.cost.objective);
    println!("closed      {}", s.configuration.ids(net).join(" "));
    println!("wall time   {:.3} s", wall.as_secs_f64());
    match report {
        Some(r) if r.is_clean() => println!("validation  no violations"),
        Some(r) => println!("validation  {} violations", r.violations.len()),
        None => println!("validation  power flow diverged"),
    }
}

fn emit_plan(
    inputs: &Inputs,
    net: &Network,
    area: &OffOutageArea,
    schedule: &Schedule,
    method: &str,
) -> Result<Option<MarginReport>, Failure> {
    let plan = RestorationPlan::from_schedule(net, area, schedule, method);
    write(&inputs.out, "plan.json", &(plan.to_json() + "\n"))?;
    let report = margins(net, area, &plan)?;
    let text = match &report {
        Some(r) => r.to_json(),
        None => json!({"error": "power flow diverged"}).to_string(),
    };
    write(&inputs.out, "margins.json", &(text + "\n"))?;
    Ok(report)
}

pub fn solve(a: SolveArgs) -> Result<u8, Failure> {
    let (net, area) = load(&a.inputs.network, &a.inputs.scenario)?;
    if area.is_empty() {
        return Err(Failure::input("the scenario leaves no off-outage area to restore"));
    }
    let p = params(&a.tuning, a.lexicographic)?;
    if a.lexicographic && a.method == Method::Mcb {
        return Err(Failure::input("--lexicographic is available with --method iao only"));
    }
    prepare_out(&a.inputs)?;
    let start = Instant::now();
    let models = a.inputs.out.join("models");
    if a.dump_models {
        fs::create_dir_all(&models).map_err(|e| Failure::input(format!("cannot create {}: {e}", models.display())))?;
    }
    let (schedule, status, extra) = match a.method {
        Method::Mcb => {
            let cache = UnitCache::new();
            let r = run_mcb(&net, &area, &p, &cache)?;
            write(&a.inputs.out, "trace.csv", &trace_csv(&r.trace))?;
            if a.dump_models {
                let master = build_master(&net, &area, p.weights, &p.relax, &r.cuts);
                write(&models, "master.txt", &master.model.dump())?;
            }
            let status = match r.status {
                McbStatus::Converged => "converged",
                McbStatus::Exhausted => "exhausted",
                McbStatus::TimeLimit => "time_limit",
                McbStatus::IterationLimit => "iteration_limit",
            };
            let Some(s) = r.schedule().cloned() else {
                return Err(Failure {
                    code: EXIT_TIME_LIMIT,
                    message: format!("stopped ({status}) before any feasible configuration was found"),
                });
            };
            if !s.restores_any() {
                return Err(SolveError::NoRestoration.into());
            }
            let extra = json!({
                "iterations": r.iterations,
                "lb": r.lb,
                "ub": r.ub,
                "gap": r.gap(),
                "cuts": r.cuts.len(),
                "unit_solves": cache.solves(),
            });
            (s, status, extra)
        }
        Method::Iao => {
            if a.dump_models {
                write(&models, "integrated.txt", &build_integrated(&net, &area, p.weights).model.dump())?;
            }
            let r = solve_integrated(&net, &area, &p)?;
            if !r.schedule.restores_any() {
                return Err(SolveError::NoRestoration.into());
            }
            let gap = r.schedule.cost.objective - r.best_bound;
            write(
                &a.inputs.out,
                "trace.csv",
                &format!(
                    "q,lb,ub,wall_ms,clusters_feasible\n1,{},{},{},0\n",
                    r.best_bound,
                    r.schedule.cost.objective,
                    r.wall_time.as_millis()
                ),
            )?;
            let status = if gap <= p.mip.gap_abs.max(p.mip.gap_rel * r.schedule.cost.objective.abs()) + 1e-12 {
                "optimal"
            } else {
                "time_limit"
            };
            let extra = json!({"best_bound": r.best_bound, "gap": gap, "bb_nodes": r.bb_nodes});
            (r.schedule, status, extra)
        }
    };
    if a.dump_models {
        if let Ok(units) = supply_units(&net, &area, &schedule.configuration) {
            for c in units.iter().filter(|c| !c.nodes.is_empty()) {
                let m = build_subproblem(&net, &area, c, p.weights);
                let id: String = area.feeders[c.feeder]
                    .id
                    .chars()
                    .map(|ch| if ch.is_ascii_alphanumeric() { ch } else { '_' })
                    .collect();
                write(&models, &format!("unit_{}_{id}.txt", c.feeder), &m.model.dump())?;
            }
        }
    }
    let method = match a.method {
        Method::Mcb => "mcb",
        Method::Iao => "iao",
    };
    let report = emit_plan(&a.inputs, &net, &area, &schedule, method)?;
    let wall = start.elapsed();
    let summary = json!({
        "method": method,
        "status": status,
        "network": net.name,
        "cost": cost_json(&schedule),
        "closed": schedule.configuration.ids(&net),
        "violations": report.as_ref().map(|r| r.violations.len()),
        "solver": extra,
        "eps_opt": p.eps_opt,
        "time_limit_s": p.time_limit.as_secs_f64(),
        "weights": [p.weights.w_re, p.weights.w_sw, p.weights.w_op],
        "lexicographic": p.weights.lexicographic,
        "seed": p.seed,
        "wall_time_s": wall.as_secs_f64(),
    });
    write(&a.inputs.out, "summary.json", &(serde_json::to_string_pretty(&summary).expect("json") + "\n"))?;
    print_summary(method, status, &schedule, &net, wall, report.as_ref());
    Ok(EXIT_OK)
}

pub fn validate(a: ValidateArgs) -> Result<u8, Failure> {
    let (net, area) = load(&a.network, &a.scenario)?;
    let text = fs::read_to_string(&a.plan).map_err(|e| Failure::input(format!("cannot read {}: {e}", a.plan.display())))?;
    let plan = RestorationPlan::from_json(&text).map_err(Failure::input)?;
    let report = match validate_plan(&net, &area, &plan) {
        Ok(r) => r,
        Err(e @ ValidationError::Diverged { .. }) => {
            return Err(Failure {
                code: EXIT_VIOLATIONS,
                message: e.to_string(),
            })
        }
        Err(e) => return Err(Failure::input(e)),
    };
    fs::write(&a.report, report.to_json() + "\n")
        .map_err(|e| Failure::input(format!("cannot write {}: {e}", a.report.display())))?;
    print!("{}", report.to_table());
    Ok(if report.is_clean() { EXIT_OK } else { EXIT_VIOLATIONS })
}

pub fn enumerate(a: EnumerateArgs) -> Result<u8, Failure> {
    let (net, area) = load(&a.inputs.network, &a.inputs.scenario)?;
    if area.is_empty() {
        return Err(Failure::input("the scenario leaves no off-outage area to restore"));
    }
    let p = params(&a.tuning, false)?;
    prepare_out(&a.inputs)?;
    let start = Instant::now();
    let caps = EnumCaps {
        lines: a.max_lines,
        breakers: a.max_breakers,
    };
    let r = enumerate_with_caps(&net, &area, &p, &UnitCache::new(), caps)?;
    let Some(best) = r.best.as_ref().and_then(|b| b.schedule.clone()).filter(Schedule::restores_any) else {
        return Err(SolveError::NoRestoration.into());
    };
    let report = emit_plan(&a.inputs, &net, &area, &best, "enumerate")?;
    let wall = start.elapsed();
    let summary = json!({
        "method": "enumerate",
        "status": "optimal",
        "network": net.name,
        "cost": cost_json(&best),
        "closed": best.configuration.ids(&net),
        "radial_configurations": r.radial_count,
        "feasible_configurations": r.feasible_count,
        "violations": report.as_ref().map(|r| r.violations.len()),
        "seed": p.seed,
        "wall_time_s": wall.as_secs_f64(),
    });
    write(&a.inputs.out, "summary.json", &(serde_json::to_string_pretty(&summary).expect("json") + "\n"))?;
    print_summary("enumerate", "optimal", &best, &net, wall, report.as_ref());
    println!("radial      {} configurations, {} feasible", r.radial_count, r.feasible_count);
    Ok(EXIT_OK)
}
