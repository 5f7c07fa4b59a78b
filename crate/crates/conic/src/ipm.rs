//! Homogeneous self-dual primal-dual interior-point method for
//!
//! ```text
//! minimize cᵀx  subject to  Ax = b,  Gx + s = h,  s ∈ K
//! ```
//!
//! where `K` is a product of a nonnegative orthant and second-order cones.
//! Search directions use Nesterov–Todd scaling and a Mehrotra
//! predictor-corrector; the reduced KKT system is factored with a sparse
//! LDLᵀ with static and dynamic regularization plus iterative refinement.

use std::time::{Duration, Instant};

use crate::cones::{self, Cone, Scaling};
use crate::error::SolveError;
use crate::linalg::{LdlFactor, SymCsc};
use crate::model::{ConicModel, Sense};

#[derive(Debug, Clone)]
pub struct IpmSettings {
    pub max_iter: usize,
    /// Relative primal/dual residual tolerance.
    pub feas_tol: f64,
    pub gap_abs_tol: f64,
    pub gap_rel_tol: f64,
    pub static_reg: f64,
    pub refine_steps: usize,
    pub equilibrate: bool,
    pub time_limit: Option<Duration>,
}

impl Default for IpmSettings {
    fn default() -> Self {
        Self {
            max_iter: 200,
            feas_tol: 1e-8,
            gap_abs_tol: 1e-9,
            gap_rel_tol: 1e-10,
            static_reg: 1e-9,
            refine_steps: 8,
            equilibrate: true,
            time_limit: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    TimeLimit,
}

/// Relative KKT residuals of the returned point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KktResiduals {
    pub primal: f64,
    pub dual: f64,
    pub gap_abs: f64,
    pub gap_rel: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Certificate {
    /// Multipliers `(row_duals, cone_duals)` of a Farkas ray: they satisfy
    /// `Aᵀy + Gᵀz ≈ 0` with a strictly negative dual objective.
    PrimalInfeasible { row_duals: Vec<f64>, cone_duals: Vec<Vec<f64>> },
    /// A primal ray `d` with `cᵀd < 0` that keeps every row and cone feasible.
    DualInfeasible { ray: Vec<f64> },
    /// A variable whose lower bound exceeds its upper bound, or a row or cone
    /// without free variables that is violated.
    Trivial(String),
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Primal values for every model variable (fixed ones included).
    pub x: Vec<f64>,
    pub objective: f64,
    pub dual_objective: f64,
    /// One multiplier per model row with `c + Σ λ_r a_r + … = 0`.
    pub row_duals: Vec<f64>,
    pub cone_duals: Vec<Vec<f64>>,
    pub residuals: KktResiduals,
    pub iterations: usize,
    pub certificate: Option<Certificate>,
}

impl SolveResult {
    fn trivial(status: SolveStatus, x: Vec<f64>, objective: f64, nrows: usize, ncones: usize) -> Self {
        Self {
            status,
            x,
            objective,
            dual_objective: objective,
            row_duals: vec![0.0; nrows],
            cone_duals: vec![Vec::new(); ncones],
            residuals: KktResiduals::default(),
            iterations: 0,
            certificate: None,
        }
    }
}

/// Solves the continuous relaxation of `model` (binaries treated as `[0, 1]`).
pub fn solve_continuous(model: &ConicModel, settings: &IpmSettings) -> Result<SolveResult, SolveError> {
    model.validate()?;
    let lower: Vec<f64> = model.vars.iter().map(|v| v.lower).collect();
    let upper: Vec<f64> = model.vars.iter().map(|v| v.upper).collect();
    solve_with_bounds(model, &lower, &upper, settings)
}

/// Like [`solve_continuous`] but with variable bounds overridden.
pub fn solve_with_bounds(
    model: &ConicModel,
    lower: &[f64],
    upper: &[f64],
    settings: &IpmSettings,
) -> Result<SolveResult, SolveError> {
    let std = match StandardForm::compile(model, lower, upper) {
        Ok(s) => s,
        Err(reason) => {
            let mut r = SolveResult::trivial(
                SolveStatus::Infeasible,
                vec![0.0; model.num_vars()],
                f64::INFINITY,
                model.rows.len(),
                model.cones.len(),
            );
            r.certificate = Some(Certificate::Trivial(reason));
            return Ok(r);
        }
    };
    let res = match run_hsde(&std, settings) {
        Ok(r) => r,
        Err(e) if settings.equilibrate => {
            log::debug!("retrying without equilibration after: {e}");
            let retry = IpmSettings {
                equilibrate: false,
                static_reg: settings.static_reg * 10.0,
                ..settings.clone()
            };
            run_hsde(&std, &retry)?
        }
        Err(e) => return Err(e),
    };
    Ok(std.finish(model, res))
}

/// Sparse row storage.
type SparseRows = Vec<Vec<(usize, f64)>>;

#[derive(Debug, Clone, Copy)]
enum RowMap {
    Eq(usize),
    Ineq(usize, f64),
    Dropped,
}

struct StandardForm {
    n: usize,
    col_of_var: Vec<Option<usize>>,
    fixed_value: Vec<f64>,
    c: Vec<f64>,
    offset: f64,
    a: SparseRows,
    b: Vec<f64>,
    g: SparseRows,
    h: Vec<f64>,
    cones: Vec<Cone>,
    row_map: Vec<RowMap>,
    /// First G row of each model cone block (None when dropped).
    cone_map: Vec<Option<usize>>,
}

impl StandardForm {
    fn compile(model: &ConicModel, lower: &[f64], upper: &[f64]) -> Result<Self, String> {
        const FIX_TOL: f64 = 1e-12;
        const CHECK_TOL: f64 = 1e-9;
        let nv = model.num_vars();
        let mut col_of_var = vec![None; nv];
        let mut fixed_value = vec![0.0; nv];
        let mut n = 0;
        for j in 0..nv {
            let (lo, hi) = (lower[j], upper[j]);
            if lo > hi + CHECK_TOL {
                return Err(format!("variable {} has empty bounds [{lo}, {hi}]", model.vars[j].name));
            }
            if (hi - lo).abs() <= FIX_TOL || (lo > hi) {
                fixed_value[j] = 0.5 * (lo + hi);
            } else {
                col_of_var[j] = Some(n);
                n += 1;
            }
        }
        // Splits an affine expression into free-column terms plus a constant.
        let split = |terms: &[(crate::VarId, f64)], constant: f64| -> (Vec<(usize, f64)>, f64) {
            let mut out = Vec::new();
            let mut k = constant;
            for &(v, c) in terms {
                match col_of_var[v.0] {
                    Some(col) => out.push((col, c)),
                    None => k += c * fixed_value[v.0],
                }
            }
            (out, k)
        };

        let mut c = vec![0.0; n];
        let (obj_terms, offset) = split(&model.objective.merged_terms(), model.objective.constant);
        for (col, v) in obj_terms {
            c[col] += v;
        }

        let mut a = Vec::new();
        let mut b = Vec::new();
        let mut g = Vec::new();
        let mut h = Vec::new();
        let mut row_map = Vec::with_capacity(model.rows.len());
        for row in &model.rows {
            let (terms, k) = split(&row.expr.merged_terms(), row.expr.constant);
            let rhs = row.rhs - k;
            if terms.is_empty() {
                let ok = match row.sense {
                    Sense::Eq => rhs.abs() <= CHECK_TOL * (1.0 + row.rhs.abs()),
                    Sense::Le => rhs >= -CHECK_TOL * (1.0 + row.rhs.abs()),
                    Sense::Ge => rhs <= CHECK_TOL * (1.0 + row.rhs.abs()),
                };
                if !ok {
                    return Err(format!("row {} violated with all variables fixed", row.name));
                }
                row_map.push(RowMap::Dropped);
                continue;
            }
            match row.sense {
                Sense::Eq => {
                    row_map.push(RowMap::Eq(a.len()));
                    a.push(terms);
                    b.push(rhs);
                }
                Sense::Le => {
                    row_map.push(RowMap::Ineq(g.len(), 1.0));
                    g.push(terms);
                    h.push(rhs);
                }
                Sense::Ge => {
                    row_map.push(RowMap::Ineq(g.len(), -1.0));
                    g.push(terms.into_iter().map(|(j, v)| (j, -v)).collect());
                    h.push(-rhs);
                }
            }
        }
        for j in 0..nv {
            if let Some(col) = col_of_var[j] {
                if lower[j].is_finite() {
                    g.push(vec![(col, -1.0)]);
                    h.push(-lower[j]);
                }
                if upper[j].is_finite() {
                    g.push(vec![(col, 1.0)]);
                    h.push(upper[j]);
                }
            }
        }
        let mut cones = Vec::new();
        if !g.is_empty() {
            cones.push(Cone::NonNeg { offset: 0, dim: g.len() });
        }
        let mut cone_map = Vec::with_capacity(model.cones.len());
        for block in &model.cones {
            let mut entries = Vec::with_capacity(block.dim());
            let mut all_const = true;
            for e in std::iter::once(&block.head).chain(block.tail.iter()) {
                let (terms, k) = split(&e.merged_terms(), e.constant);
                all_const &= terms.is_empty();
                entries.push((terms, k));
            }
            if all_const {
                let head = entries[0].1;
                let tail = entries[1..].iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
                if head - tail < -CHECK_TOL * (1.0 + head.abs()) {
                    return Err(format!("cone {} violated with all variables fixed", block.name));
                }
                cone_map.push(None);
                continue;
            }
            let offset = g.len();
            cone_map.push(Some(offset));
            for (terms, k) in entries {
                g.push(terms.into_iter().map(|(j, v)| (j, -v)).collect());
                h.push(k);
            }
            cones.push(Cone::Soc {
                offset,
                dim: block.dim(),
            });
        }
        Ok(StandardForm {
            n,
            col_of_var,
            fixed_value,
            c,
            offset,
            a,
            b,
            g,
            h,
            cones,
            row_map,
            cone_map,
        })
    }

    fn finish(&self, model: &ConicModel, res: RawResult) -> SolveResult {
        let mut x = self.fixed_value.clone();
        for (j, col) in self.col_of_var.iter().enumerate() {
            if let Some(col) = col {
                x[j] = res.x[*col];
            }
        }
        let row_duals = self
            .row_map
            .iter()
            .map(|m| match *m {
                RowMap::Eq(i) => res.y[i],
                RowMap::Ineq(i, sign) => sign * res.z[i],
                RowMap::Dropped => 0.0,
            })
            .collect::<Vec<_>>();
        let cone_duals = model
            .cones
            .iter()
            .zip(&self.cone_map)
            .map(|(block, m)| match m {
                Some(off) => res.z[*off..*off + block.dim()].to_vec(),
                None => vec![0.0; block.dim()],
            })
            .collect::<Vec<_>>();
        let certificate = match res.status {
            SolveStatus::Infeasible => Some(Certificate::PrimalInfeasible {
                row_duals: row_duals.clone(),
                cone_duals: cone_duals.clone(),
            }),
            SolveStatus::Unbounded => {
                let mut ray = vec![0.0; model.num_vars()];
                for (j, col) in self.col_of_var.iter().enumerate() {
                    if let Some(col) = col {
                        ray[j] = res.x[*col];
                    }
                }
                Some(Certificate::DualInfeasible { ray })
            }
            _ => None,
        };
        let objective = match res.status {
            SolveStatus::Infeasible => f64::INFINITY,
            SolveStatus::Unbounded => f64::NEG_INFINITY,
            _ => res.pcost + self.offset,
        };
        SolveResult {
            status: res.status,
            x,
            objective,
            dual_objective: res.dcost + self.offset,
            row_duals,
            cone_duals,
            residuals: res.residuals,
            iterations: res.iterations,
            certificate,
        }
    }
}

struct RawResult {
    status: SolveStatus,
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    pcost: f64,
    dcost: f64,
    residuals: KktResiduals,
    iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn rows_matvec(rows: &SparseRows, x: &[f64], out: &mut [f64]) {
    for (i, r) in rows.iter().enumerate() {
        out[i] = r.iter().map(|&(j, v)| v * x[j]).sum();
    }
}

fn rows_matvec_t_add(rows: &SparseRows, y: &[f64], out: &mut [f64]) {
    for (i, r) in rows.iter().enumerate() {
        let yi = y[i];
        if yi != 0.0 {
            for &(j, v) in r {
                out[j] += v * yi;
            }
        }
    }
}

/// Ruiz equilibration: `Â = E_A A D`, `Ĝ = E_G G D`, `ĉ = σ D c`.
struct Equilibration {
    d: Vec<f64>,
    ea: Vec<f64>,
    eg: Vec<f64>,
    cost: f64,
}

impl Equilibration {
    fn identity(n: usize, p: usize, m: usize) -> Self {
        Self {
            d: vec![1.0; n],
            ea: vec![1.0; p],
            eg: vec![1.0; m],
            cost: 1.0,
        }
    }

    fn compute(sf: &StandardForm) -> Self {
        let (n, p, m) = (sf.n, sf.a.len(), sf.g.len());
        let mut eq = Self::identity(n, p, m);
        let mut a = sf.a.clone();
        let mut g = sf.g.clone();
        for _ in 0..15 {
            let mut colmax = vec![0.0f64; n];
            for r in a.iter().chain(g.iter()) {
                for &(j, v) in r {
                    colmax[j] = colmax[j].max(v.abs());
                }
            }
            let dc: Vec<f64> = colmax
                .iter()
                .map(|&v| if v > 0.0 { 1.0 / v.sqrt() } else { 1.0 })
                .collect();
            let ra: Vec<f64> = a
                .iter()
                .map(|r| {
                    let v = r.iter().fold(0.0f64, |acc, &(_, x)| acc.max(x.abs()));
                    if v > 0.0 {
                        1.0 / v.sqrt()
                    } else {
                        1.0
                    }
                })
                .collect();
            let mut rg: Vec<f64> = g
                .iter()
                .map(|r| {
                    let v = r.iter().fold(0.0f64, |acc, &(_, x)| acc.max(x.abs()));
                    if v > 0.0 {
                        1.0 / v.sqrt()
                    } else {
                        1.0
                    }
                })
                .collect();
            for cone in &sf.cones {
                if let Cone::Soc { .. } = cone {
                    let range = cone.range();
                    let s = rg[range.clone()].iter().cloned().fold(f64::INFINITY, f64::min);
                    rg[range].iter_mut().for_each(|v| *v = s);
                }
            }
            for (i, r) in a.iter_mut().enumerate() {
                for e in r.iter_mut() {
                    e.1 *= ra[i] * dc[e.0];
                }
            }
            for (i, r) in g.iter_mut().enumerate() {
                for e in r.iter_mut() {
                    e.1 *= rg[i] * dc[e.0];
                }
            }
            for j in 0..n {
                eq.d[j] = (eq.d[j] * dc[j]).clamp(1e-4, 1e4);
            }
            for i in 0..p {
                eq.ea[i] = (eq.ea[i] * ra[i]).clamp(1e-4, 1e4);
            }
            for i in 0..m {
                eq.eg[i] = (eq.eg[i] * rg[i]).clamp(1e-4, 1e4);
            }
        }
        let cmax = sf
            .c
            .iter()
            .zip(&eq.d)
            .fold(0.0f64, |acc, (c, d)| acc.max((c * d).abs()));
        eq.cost = 1.0 / cmax.max(1.0);
        eq
    }
}

struct Kkt {
    mat: SymCsc,
    factor: LdlFactor,
    signs: Vec<f64>,
    /// Value slots of the z-block entries, per cone, row-major over the
    /// block (NonNeg: diagonal only).
    zslots: Vec<Vec<[usize; 2]>>,
    n: usize,
    p: usize,
    m: usize,
    reg: f64,
}

impl Kkt {
    fn new(n: usize, a: &SparseRows, g: &SparseRows, cones: &[Cone], reg: f64) -> Self {
        let p = a.len();
        let m = g.len();
        let dim = n + p + m;
        let mut trip: Vec<(usize, usize, f64)> = Vec::new();
        for j in 0..n {
            trip.push((j, j, reg));
        }
        for i in 0..p {
            trip.push((n + i, n + i, -reg));
        }
        for (i, r) in a.iter().enumerate() {
            for &(j, v) in r {
                trip.push((n + i, j, v));
            }
        }
        for (i, r) in g.iter().enumerate() {
            for &(j, v) in r {
                trip.push((n + p + i, j, v));
            }
        }
        let mut zidx: Vec<Vec<usize>> = Vec::new();
        for cone in cones {
            let range = cone.range();
            let mut ids = Vec::new();
            match cone {
                Cone::NonNeg { .. } => {
                    for i in range {
                        ids.push(trip.len());
                        trip.push((n + p + i, n + p + i, -1.0 - reg));
                    }
                }
                Cone::Soc { .. } => {
                    for i in range.clone() {
                        for j in range.clone() {
                            if j >= i {
                                ids.push(trip.len());
                                let v = if i == j { -1.0 - reg } else { 0.0 };
                                trip.push((n + p + i, n + p + j, v));
                            } else {
                                ids.push(usize::MAX);
                            }
                        }
                    }
                }
            }
            zidx.push(ids);
        }
        let (mat, slots) = SymCsc::from_triplets(dim, &trip);
        let zslots = zidx
            .iter()
            .map(|ids| {
                ids.iter()
                    .map(|&t| if t == usize::MAX { [usize::MAX; 2] } else { slots[t] })
                    .collect()
            })
            .collect();
        let mut signs = vec![1.0; dim];
        for s in signs.iter_mut().skip(n) {
            *s = -1.0;
        }
        let factor = LdlFactor::analyze(&mat);
        Kkt {
            mat,
            factor,
            signs,
            zslots,
            n,
            p,
            m,
            reg,
        }
    }

    /// Writes `-(W² + reg I)` into the z-block and refactors.
    fn update(&mut self, cones: &[Cone], scalings: &[Scaling]) {
        for (ci, (cone, sc)) in cones.iter().zip(scalings).enumerate() {
            let d = cone.range().len();
            match (cone, sc) {
                (Cone::NonNeg { .. }, Scaling::NonNeg { w }) => {
                    for (i, wi) in w.iter().enumerate() {
                        let pos = self.zslots[ci][i][0];
                        self.mat.values[pos] = -wi * wi - self.reg;
                    }
                }
                _ => {
                    let w2 = sc.squared();
                    for i in 0..d {
                        for j in i..d {
                            let slot = self.zslots[ci][i * d + j];
                            let v = if i == j { -w2[i * d + j] - self.reg } else { -w2[i * d + j] };
                            self.mat.values[slot[0]] = v;
                            if slot[1] != usize::MAX {
                                self.mat.values[slot[1]] = v;
                            }
                        }
                    }
                }
            }
        }
        self.factor.factor(&self.mat, &self.signs, 1e-13, 1e-7);
    }

    /// Solves the unregularized system by refinement on the regularized factor.
    fn solve(&self, rhs: &[f64], steps: usize) -> Vec<f64> {
        let dim = rhs.len();
        let mut x = rhs.to_vec();
        self.factor.solve(&mut x);
        let mut kx = vec![0.0; dim];
        for _ in 0..steps {
            self.true_matvec(&x, &mut kx);
            let mut r: Vec<f64> = rhs.iter().zip(&kx).map(|(a, b)| a - b).collect();
            let rn = norm_inf(&r);
            if rn <= 1e-14 * (1.0 + norm_inf(rhs)) {
                break;
            }
            self.factor.solve(&mut r);
            for i in 0..dim {
                x[i] += r[i];
            }
        }
        x
    }

    fn true_matvec(&self, x: &[f64], out: &mut [f64]) {
        self.mat.matvec(x, out);
        let total = self.n + self.p + self.m;
        for i in 0..total {
            // remove static regularization on every diagonal
            out[i] -= self.signs[i] * self.reg * x[i];
        }
    }
}

fn run_hsde(sf: &StandardForm, settings: &IpmSettings) -> Result<RawResult, SolveError> {
    let start = Instant::now();
    let (n, p, m) = (sf.n, sf.a.len(), sf.g.len());
    let eq = if settings.equilibrate {
        Equilibration::compute(sf)
    } else {
        Equilibration::identity(n, p, m)
    };
    // scaled data
    let a: SparseRows = sf
        .a
        .iter()
        .enumerate()
        .map(|(i, r)| r.iter().map(|&(j, v)| (j, v * eq.ea[i] * eq.d[j])).collect())
        .collect();
    let g: SparseRows = sf
        .g
        .iter()
        .enumerate()
        .map(|(i, r)| r.iter().map(|&(j, v)| (j, v * eq.eg[i] * eq.d[j])).collect())
        .collect();
    let b: Vec<f64> = sf.b.iter().zip(&eq.ea).map(|(v, e)| v * e).collect();
    let h: Vec<f64> = sf.h.iter().zip(&eq.eg).map(|(v, e)| v * e).collect();
    let c: Vec<f64> = sf.c.iter().zip(&eq.d).map(|(v, d)| v * d * eq.cost).collect();
    let cones = &sf.cones;
    let degree: usize = cones.iter().map(|k| k.degree()).sum();

    let norm_b = norm_inf(&sf.b).max(norm_inf(&sf.h));
    let norm_c = norm_inf(&sf.c);

    let mut kkt = Kkt::new(n, &a, &g, cones, settings.static_reg);
    let dim = n + p + m;
    let mut trace: Vec<String> = Vec::new();
    let fail = |iterations: usize, reason: &str, trace: &[String]| SolveError::Numerical {
        iterations,
        reason: reason.to_string(),
        trace: trace.to_vec(),
    };

    // Initial point: W = I.
    let ident: Vec<Scaling> = cones
        .iter()
        .map(|k| {
            let r = k.range();
            let ones = vec![1.0; r.len()];
            match k {
                Cone::NonNeg { .. } => Scaling::NonNeg { w: ones },
                Cone::Soc { .. } => Scaling::Soc {
                    eta: 1.0,
                    w0: 1.0,
                    w1: vec![0.0; r.len() - 1],
                },
            }
        })
        .collect();
    kkt.update(cones, &ident);
    let mut rhs = vec![0.0; dim];
    rhs[n..n + p].copy_from_slice(&b);
    rhs[n + p..].copy_from_slice(&h);
    let sol = kkt.solve(&rhs, settings.refine_steps);
    let mut x = sol[..n].to_vec();
    let mut s: Vec<f64> = sol[n + p..].iter().map(|v| -v).collect();
    let mut rhs = vec![0.0; dim];
    for j in 0..n {
        rhs[j] = -c[j];
    }
    let sol = kkt.solve(&rhs, settings.refine_steps);
    let mut y = sol[n..n + p].to_vec();
    let mut z = sol[n + p..].to_vec();
    for cone in cones {
        let ap = -cones::interior_margin(cone, &s);
        if ap >= 0.0 {
            cones::add_identity(cone, &mut s, 1.0 + ap);
        }
        let ad = -cones::interior_margin(cone, &z);
        if ad >= 0.0 {
            cones::add_identity(cone, &mut z, 1.0 + ad);
        }
    }
    let mut tau = 1.0f64;
    let mut kappa = 1.0f64;

    let mut ax = vec![0.0; p];
    let mut gx = vec![0.0; m];
    let mut rx = vec![0.0; n];
    let mut ry = vec![0.0; p];
    let mut rz = vec![0.0; m];
    let mut small_steps = 0usize;
    let mut last = RawResult {
        status: SolveStatus::IterationLimit,
        x: vec![0.0; n],
        y: vec![0.0; p],
        z: vec![0.0; m],
        pcost: f64::NAN,
        dcost: f64::NAN,
        residuals: KktResiduals::default(),
        iterations: 0,
    };

    for iter in 0..=settings.max_iter {
        // residuals (scaled problem)
        rows_matvec(&a, &x, &mut ax);
        rows_matvec(&g, &x, &mut gx);
        rx.iter_mut().for_each(|v| *v = 0.0);
        rows_matvec_t_add(&a, &y, &mut rx);
        rows_matvec_t_add(&g, &z, &mut rx);
        let atyz: Vec<f64> = rx.clone();
        for j in 0..n {
            rx[j] += c[j] * tau;
        }
        for i in 0..p {
            ry[i] = ax[i] - b[i] * tau;
        }
        for i in 0..m {
            rz[i] = gx[i] + s[i] - h[i] * tau;
        }
        let ctx = dot(&c, &x);
        let bty = dot(&b, &y);
        let htz = dot(&h, &z);
        let rtau = kappa + ctx + bty + htz;
        let mu = (dot(&s, &z) + tau * kappa) / (degree as f64 + 1.0);

        // unscaled convergence measures
        let xo: Vec<f64> = x.iter().zip(&eq.d).map(|(v, d)| v * d / tau).collect();
        let yo: Vec<f64> = y.iter().zip(&eq.ea).map(|(v, e)| v * e / (tau * eq.cost)).collect();
        let zo: Vec<f64> = z.iter().zip(&eq.eg).map(|(v, e)| v * e / (tau * eq.cost)).collect();
        let so: Vec<f64> = s.iter().zip(&eq.eg).map(|(v, e)| v / e / tau).collect();
        let mut t_p = vec![0.0; p];
        rows_matvec(&sf.a, &xo, &mut t_p);
        let pres_a = t_p.iter().zip(&sf.b).fold(0.0f64, |acc, (v, bb)| acc.max((v - bb).abs()));
        let mut t_m = vec![0.0; m];
        rows_matvec(&sf.g, &xo, &mut t_m);
        let pres_g = (0..m).fold(0.0f64, |acc, i| acc.max((t_m[i] + so[i] - sf.h[i]).abs()));
        let pres = pres_a.max(pres_g) / (1.0 + norm_b);
        let mut t_n = sf.c.clone();
        rows_matvec_t_add(&sf.a, &yo, &mut t_n);
        rows_matvec_t_add(&sf.g, &zo, &mut t_n);
        let dres = norm_inf(&t_n) / (1.0 + norm_c);
        let pcost = dot(&sf.c, &xo);
        let dcost = -(dot(&sf.b, &yo) + dot(&sf.h, &zo));
        let gap_abs = (pcost - dcost).abs();
        let gap_rel = gap_abs / pcost.abs().min(dcost.abs()).max(1.0);
        let residuals = KktResiduals {
            primal: pres,
            dual: dres,
            gap_abs,
            gap_rel,
        };
        trace.push(format!(
            "{iter:3} pres={pres:.2e} dres={dres:.2e} gap={gap_abs:.2e} mu={mu:.2e} tau={tau:.2e} kappa={kappa:.2e}"
        ));
        if !(pres.is_finite() && dres.is_finite() && mu.is_finite()) {
            return Err(fail(iter, "non-finite iterate", &trace));
        }
        last = RawResult {
            status: SolveStatus::IterationLimit,
            x: xo,
            y: yo,
            z: zo,
            pcost,
            dcost,
            residuals,
            iterations: iter,
        };
        if pres <= settings.feas_tol
            && dres <= settings.feas_tol
            && (gap_abs <= settings.gap_abs_tol || gap_rel <= settings.gap_rel_tol)
        {
            last.status = SolveStatus::Optimal;
            return Ok(last);
        }
        // infeasibility certificates (scale-free ratios on the unscaled data)
        {
            let yr: Vec<f64> = y.iter().zip(&eq.ea).map(|(v, e)| v * e).collect();
            let zr: Vec<f64> = z.iter().zip(&eq.eg).map(|(v, e)| v * e).collect();
            let dobj = dot(&sf.b, &yr) + dot(&sf.h, &zr);
            if dobj < 0.0 {
                let mut t = vec![0.0; n];
                rows_matvec_t_add(&sf.a, &yr, &mut t);
                rows_matvec_t_add(&sf.g, &zr, &mut t);
                if norm_inf(&t) / (-dobj) <= settings.feas_tol && tau < kappa {
                    let scale = -dobj;
                    last.status = SolveStatus::Infeasible;
                    last.y = yr.iter().map(|v| v / scale).collect();
                    last.z = zr.iter().map(|v| v / scale).collect();
                    return Ok(last);
                }
            }
            let xr: Vec<f64> = x.iter().zip(&eq.d).map(|(v, d)| v * d).collect();
            let pobj = dot(&sf.c, &xr);
            if pobj < 0.0 {
                let sr: Vec<f64> = s.iter().zip(&eq.eg).map(|(v, e)| v / e).collect();
                rows_matvec(&sf.a, &xr, &mut t_p);
                rows_matvec(&sf.g, &xr, &mut t_m);
                let r = norm_inf(&t_p).max((0..m).fold(0.0f64, |acc, i| acc.max((t_m[i] + sr[i]).abs())));
                if r / (-pobj) <= settings.feas_tol && tau < kappa {
                    last.status = SolveStatus::Unbounded;
                    last.x = xr.iter().map(|v| v / (-pobj)).collect();
                    return Ok(last);
                }
            }
        }
        if iter == settings.max_iter {
            break;
        }
        if let Some(limit) = settings.time_limit {
            if start.elapsed() > limit {
                last.status = SolveStatus::TimeLimit;
                return Ok(last);
            }
        }
        let _ = atyz;

        // scaling
        let scalings: Vec<Scaling> = cones.iter().map(|k| Scaling::compute(k, &s, &z)).collect();
        let mut lambda = vec![0.0; m];
        for (k, sc) in cones.iter().zip(&scalings) {
            let r = k.range();
            sc.apply(&z[r.clone()], &mut lambda[r]);
        }
        kkt.update(cones, &scalings);

        // dτ-coupling solve
        let mut rhs2 = vec![0.0; dim];
        for j in 0..n {
            rhs2[j] = -c[j];
        }
        rhs2[n..n + p].copy_from_slice(&b);
        rhs2[n + p..].copy_from_slice(&h);
        let u2 = kkt.solve(&rhs2, settings.refine_steps);
        let den = dot(&c, &u2[..n]) + dot(&b, &u2[n..n + p]) + dot(&h, &u2[n + p..]) - kappa / tau;

        // direction for given complementarity rhs and residual weight
        let direction = |ds_rhs: &[f64], dk_rhs: f64, weight: f64| -> Direction {
            let mut tmp = vec![0.0; m];
            let mut wtmp = vec![0.0; m];
            for (k, sc) in cones.iter().zip(&scalings) {
                let r = k.range();
                cones::jordan_divide(k, &lambda[r.clone()], &ds_rhs[r.clone()], &mut tmp[r.clone()]);
                sc.apply(&tmp[r.clone()], &mut wtmp[r]);
            }
            let mut rhs1 = vec![0.0; dim];
            for j in 0..n {
                rhs1[j] = -weight * rx[j];
            }
            for i in 0..p {
                rhs1[n + i] = -weight * ry[i];
            }
            for i in 0..m {
                rhs1[n + p + i] = -weight * rz[i] - wtmp[i];
            }
            let u1 = kkt.solve(&rhs1, settings.refine_steps);
            let num = -weight * rtau - dk_rhs / tau
                - (dot(&c, &u1[..n]) + dot(&b, &u1[n..n + p]) + dot(&h, &u1[n + p..]));
            let dtau = num / den;
            let mut d = Direction {
                x: (0..n).map(|j| u1[j] + dtau * u2[j]).collect(),
                y: (0..p).map(|i| u1[n + i] + dtau * u2[n + i]).collect(),
                z: (0..m).map(|i| u1[n + p + i] + dtau * u2[n + p + i]).collect(),
                s: vec![0.0; m],
                tau: dtau,
                kappa: (dk_rhs - kappa * dtau) / tau,
            };
            // ds = W (λ \ d_s - W dz)
            let mut wdz = vec![0.0; m];
            for (k, sc) in cones.iter().zip(&scalings) {
                let r = k.range();
                sc.apply(&d.z[r.clone()], &mut wdz[r]);
            }
            let diff: Vec<f64> = (0..m).map(|i| tmp[i] - wdz[i]).collect();
            for (k, sc) in cones.iter().zip(&scalings) {
                let r = k.range();
                sc.apply(&diff[r.clone()], &mut d.s[r]);
            }
            d
        };

        let step_len = |d: &Direction| -> f64 {
            let mut alpha: f64 = 1.0;
            for k in cones {
                alpha = alpha.min(cones::max_step(k, &s, &d.s, alpha));
                alpha = alpha.min(cones::max_step(k, &z, &d.z, alpha));
            }
            if d.tau < 0.0 {
                alpha = alpha.min(-tau / d.tau);
            }
            if d.kappa < 0.0 {
                alpha = alpha.min(-kappa / d.kappa);
            }
            alpha
        };

        // predictor
        let mut lam_sq = vec![0.0; m];
        for k in cones {
            let r = k.range();
            cones::jordan_product(k, &lambda[r.clone()], &lambda[r.clone()], &mut lam_sq[r]);
        }
        let ds_aff: Vec<f64> = lam_sq.iter().map(|v| -v).collect();
        let aff = direction(&ds_aff, -tau * kappa, 1.0);
        let alpha_aff = step_len(&aff);
        let sigma = (1.0 - alpha_aff).powi(3).clamp(0.0, 1.0);

        // corrector
        let mut winv_ds = vec![0.0; m];
        let mut w_dz = vec![0.0; m];
        for (k, sc) in cones.iter().zip(&scalings) {
            let r = k.range();
            sc.apply_inv(&aff.s[r.clone()], &mut winv_ds[r.clone()]);
            sc.apply(&aff.z[r.clone()], &mut w_dz[r]);
        }
        let mut cross = vec![0.0; m];
        for k in cones {
            let r = k.range();
            cones::jordan_product(k, &winv_ds[r.clone()], &w_dz[r.clone()], &mut cross[r]);
        }
        let mut ds_cc: Vec<f64> = (0..m).map(|i| -lam_sq[i] - cross[i]).collect();
        for k in cones {
            let mut e = vec![0.0; m];
            cones::add_identity(k, &mut e, sigma * mu);
            for i in k.range() {
                ds_cc[i] += e[i];
            }
        }
        let dk_cc = -tau * kappa - aff.tau * aff.kappa + sigma * mu;
        let dir = direction(&ds_cc, dk_cc, 1.0 - sigma);
        let alpha = (0.99 * step_len(&dir)).min(1.0);
        if !alpha.is_finite() {
            return Err(fail(iter, "non-finite step", &trace));
        }
        if alpha < 1e-9 {
            small_steps += 1;
            if small_steps >= 3 {
                return Err(fail(iter, "step length collapsed", &trace));
            }
        } else {
            small_steps = 0;
        }
        for j in 0..n {
            x[j] += alpha * dir.x[j];
        }
        for i in 0..p {
            y[i] += alpha * dir.y[i];
        }
        for i in 0..m {
            z[i] += alpha * dir.z[i];
            s[i] += alpha * dir.s[i];
        }
        tau += alpha * dir.tau;
        kappa += alpha * dir.kappa;
        if tau <= 0.0 || kappa <= 0.0 {
            return Err(fail(iter, "homogeneous variables left the cone", &trace));
        }
        // keep iterates away from the tiny-scale regime of the embedding
        let scale = tau.max(kappa);
        if !(1e-12..=1e12).contains(&scale) {
            return Err(fail(iter, "embedding scale degenerated", &trace));
        }
    }
    let _ = start;
    Ok(last)
}

struct Direction {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    s: Vec<f64>,
    tau: f64,
    kappa: f64,
}
