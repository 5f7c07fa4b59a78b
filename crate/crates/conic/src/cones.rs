//! Cone arithmetic for the product of a nonnegative orthant and second-order
//! cones: Nesterov–Todd scaling, Jordan products and step lengths.

/// One block of the stacked slack vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Cone {
    /// `dim` independent nonnegative coordinates.
    NonNeg { offset: usize, dim: usize },
    /// `(u0, u1)` with `u0 >= ||u1||`.
    Soc { offset: usize, dim: usize },
}

impl Cone {
    pub fn range(&self) -> std::ops::Range<usize> {
        match *self {
            Cone::NonNeg { offset, dim } | Cone::Soc { offset, dim } => offset..offset + dim,
        }
    }

    /// Degree (barrier parameter contribution).
    pub fn degree(&self) -> usize {
        match *self {
            Cone::NonNeg { dim, .. } => dim,
            Cone::Soc { .. } => 1,
        }
    }
}

/// Nesterov–Todd scaling data for one cone block.
#[derive(Debug, Clone)]
pub(crate) enum Scaling {
    /// Diagonal `w_i = sqrt(s_i / z_i)`.
    NonNeg { w: Vec<f64> },
    /// `W = eta * [[w0, w1ᵀ], [w1, I + w1 w1ᵀ / (1 + w0)]]`.
    Soc { eta: f64, w0: f64, w1: Vec<f64> },
}

fn soc_residual(u: &[f64]) -> f64 {
    u[0] * u[0] - u[1..].iter().map(|v| v * v).sum::<f64>()
}

/// `u0 - ||u1||` for SOC, `min u_i` for orthants; positive in the interior.
pub(crate) fn interior_margin(cone: &Cone, u: &[f64]) -> f64 {
    let r = cone.range();
    let u = &u[r];
    match cone {
        Cone::NonNeg { .. } => u.iter().cloned().fold(f64::INFINITY, f64::min),
        Cone::Soc { .. } => u[0] - u[1..].iter().map(|v| v * v).sum::<f64>().sqrt(),
    }
}

/// Adds `shift * e` (the cone identity) to `u`.
pub(crate) fn add_identity(cone: &Cone, u: &mut [f64], shift: f64) {
    match *cone {
        Cone::NonNeg { offset, dim } => u[offset..offset + dim].iter_mut().for_each(|v| *v += shift),
        Cone::Soc { offset, .. } => u[offset] += shift,
    }
}

impl Scaling {
    pub fn compute(cone: &Cone, s: &[f64], z: &[f64]) -> Scaling {
        let r = cone.range();
        let (s, z) = (&s[r.clone()], &z[r]);
        match cone {
            Cone::NonNeg { .. } => Scaling::NonNeg {
                w: s.iter().zip(z).map(|(a, b)| (a / b).sqrt()).collect(),
            },
            Cone::Soc { .. } => {
                let sres = soc_residual(s).max(f64::MIN_POSITIVE);
                let zres = soc_residual(z).max(f64::MIN_POSITIVE);
                let snorm = sres.sqrt();
                let znorm = zres.sqrt();
                let sb: Vec<f64> = s.iter().map(|v| v / snorm).collect();
                let zb: Vec<f64> = z.iter().map(|v| v / znorm).collect();
                let dot: f64 = sb.iter().zip(&zb).map(|(a, b)| a * b).sum();
                let gamma = ((1.0 + dot) / 2.0).sqrt();
                let w0 = (sb[0] + zb[0]) / (2.0 * gamma);
                let w1: Vec<f64> = sb[1..]
                    .iter()
                    .zip(&zb[1..])
                    .map(|(a, b)| (a - b) / (2.0 * gamma))
                    .collect();
                let eta = (sres / zres).powf(0.25);
                Scaling::Soc { eta, w0, w1 }
            }
        }
    }

    /// `out = W v` (W is symmetric).
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        match self {
            Scaling::NonNeg { w } => {
                for i in 0..w.len() {
                    out[i] = w[i] * v[i];
                }
            }
            Scaling::Soc { eta, w0, w1 } => soc_apply(*eta, *w0, w1, v, out, false),
        }
    }

    /// `out = W⁻¹ v`.
    pub fn apply_inv(&self, v: &[f64], out: &mut [f64]) {
        match self {
            Scaling::NonNeg { w } => {
                for i in 0..w.len() {
                    out[i] = v[i] / w[i];
                }
            }
            Scaling::Soc { eta, w0, w1 } => soc_apply(1.0 / *eta, *w0, w1, v, out, true),
        }
    }

    /// Dense `W²` for the block, row-major.
    pub fn squared(&self) -> Vec<f64> {
        match self {
            Scaling::NonNeg { w } => {
                let n = w.len();
                let mut m = vec![0.0; n * n];
                for i in 0..n {
                    m[i * n + i] = w[i] * w[i];
                }
                m
            }
            Scaling::Soc { .. } => {
                let n = self.dim();
                let mut cols = vec![0.0; n * n];
                let mut e = vec![0.0; n];
                let mut t1 = vec![0.0; n];
                let mut t2 = vec![0.0; n];
                for j in 0..n {
                    e.iter_mut().for_each(|v| *v = 0.0);
                    e[j] = 1.0;
                    self.apply(&e, &mut t1);
                    self.apply(&t1, &mut t2);
                    for i in 0..n {
                        cols[i * n + j] = t2[i];
                    }
                }
                cols
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Scaling::NonNeg { w } => w.len(),
            Scaling::Soc { w1, .. } => w1.len() + 1,
        }
    }
}

fn soc_apply(scale: f64, w0: f64, w1: &[f64], v: &[f64], out: &mut [f64], inverse: bool) {
    let sgn = if inverse { -1.0 } else { 1.0 };
    let w1v: f64 = w1.iter().zip(&v[1..]).map(|(a, b)| a * b).sum();
    out[0] = scale * (w0 * v[0] + sgn * w1v);
    let coef = sgn * v[0] + w1v / (1.0 + w0);
    for i in 0..w1.len() {
        out[i + 1] = scale * (v[i + 1] + coef * w1[i]);
    }
}

/// Jordan product `u ∘ v` over one block.
pub(crate) fn jordan_product(cone: &Cone, u: &[f64], v: &[f64], out: &mut [f64]) {
    match cone {
        Cone::NonNeg { .. } => {
            for i in 0..u.len() {
                out[i] = u[i] * v[i];
            }
        }
        Cone::Soc { .. } => {
            out[0] = u.iter().zip(v).map(|(a, b)| a * b).sum();
            for i in 1..u.len() {
                out[i] = u[0] * v[i] + v[0] * u[i];
            }
        }
    }
}

/// Solves `lambda ∘ x = v` for `x`.
pub(crate) fn jordan_divide(cone: &Cone, lambda: &[f64], v: &[f64], out: &mut [f64]) {
    match cone {
        Cone::NonNeg { .. } => {
            for i in 0..lambda.len() {
                out[i] = v[i] / lambda[i];
            }
        }
        Cone::Soc { .. } => {
            let l0 = lambda[0];
            let rho = soc_residual(lambda);
            let l1v1: f64 = lambda[1..].iter().zip(&v[1..]).map(|(a, b)| a * b).sum();
            out[0] = (l0 * v[0] - l1v1) / rho;
            let c = (-v[0] + l1v1 / l0) / rho;
            for i in 1..lambda.len() {
                out[i] = c * lambda[i] + v[i] / l0;
            }
        }
    }
}

/// Largest `alpha` in `(0, cap]` with `u + alpha * du` inside the cone.
pub(crate) fn max_step(cone: &Cone, u: &[f64], du: &[f64], cap: f64) -> f64 {
    let r = cone.range();
    let (u, du) = (&u[r.clone()], &du[r]);
    match cone {
        Cone::NonNeg { .. } => {
            let mut a = cap;
            for i in 0..u.len() {
                if du[i] < 0.0 {
                    a = a.min(-u[i] / du[i]);
                }
            }
            a
        }
        Cone::Soc { .. } => {
            // f(a) = (u0 + a d0)^2 - ||u1 + a d1||^2 = qa a^2 + 2 qb a + qc
            let qa = soc_residual(du);
            let qb = u[0] * du[0] - u[1..].iter().zip(&du[1..]).map(|(a, b)| a * b).sum::<f64>();
            let qc = soc_residual(u).max(0.0);
            let mut a = cap;
            if du[0] < 0.0 {
                a = a.min(-u[0] / du[0]);
            }
            let disc = qb * qb - qa * qc;
            if qa.abs() < 1e-300 {
                if qb < 0.0 {
                    a = a.min(-qc / (2.0 * qb));
                }
            } else if disc >= 0.0 {
                let sq = disc.sqrt();
                let q = -(qb + qb.signum() * sq);
                let mut roots = [f64::INFINITY; 2];
                if qa != 0.0 {
                    roots[0] = q / qa;
                }
                if q != 0.0 {
                    roots[1] = qc / q;
                }
                for root in roots {
                    if root > 0.0 && root.is_finite() {
                        a = a.min(root);
                    }
                }
            }
            a.max(0.0)
        }
    }
}
