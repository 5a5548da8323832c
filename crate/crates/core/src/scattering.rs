//! Zero-energy two-body scattering.
//!
//! With `u = rφ` the radial equation is `u'' = ½ v u`, `u(0) = 0`. The solver
//! shoots from the origin with `u'(0) = 1` using the three-stage Gauss–Legendre
//! implicit Runge–Kutta method (order 6), then reads `a` from the exact linear
//! exterior `u = c (r − a)` and rescales so that `φ → 1`.

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::numerics::{gl8, sinc, CompensatedSum};
use crate::potentials::RadialPotential;
use crate::{Error, Result};

use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    /// Upper bound on `h·√(½ v)` per step.
    pub kappa_h: f64,
    /// Upper bound on the step as a fraction of the support radius.
    pub max_step_fraction: f64,
    /// Steps used across the exterior fitting window.
    pub exterior_steps: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { kappa_h: 0.02, max_step_fraction: 0.01, exterior_steps: 32 }
    }
}

const MAX_STEPS: usize = 20_000_000;

/// One accepted integration step with normalized end values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Step {
    r0: f64,
    r1: f64,
    u0: f64,
    du0: f64,
    u1: f64,
    du1: f64,
    /// One-sided values of ½v just inside the step.
    q0: f64,
    q1: f64,
}

impl Step {
    /// Quintic Hermite interpolation of (u, u') from values, slopes and curvatures.
    fn eval(&self, r: f64) -> (f64, f64) {
        let h = self.r1 - self.r0;
        let t = ((r - self.r0) / h).clamp(0.0, 1.0);
        let (t2, t3, t4, t5) = (t * t, t * t * t, t.powi(4), t.powi(5));
        let (a0, a1) = (self.q0 * self.u0, self.q1 * self.u1);
        let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
        let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
        let h2 = 0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5;
        let h3 = 0.5 * t3 - t4 + 0.5 * t5;
        let h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
        let h5 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
        let u = h0 * self.u0 + h1 * h * self.du0 + h2 * h * h * a0 + h3 * h * h * a1 + h4 * h * self.du1 + h5 * self.u1;
        let d0 = -30.0 * t2 + 60.0 * t3 - 30.0 * t4;
        let d1 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
        let d2 = t - 4.5 * t2 + 6.0 * t3 - 2.5 * t4;
        let d3 = 1.5 * t2 - 4.0 * t3 + 2.5 * t4;
        let d4 = -12.0 * t2 + 28.0 * t3 - 15.0 * t4;
        let d5 = 30.0 * t2 - 60.0 * t3 + 30.0 * t4;
        let du = (d0 * self.u0 + d1 * h * self.du0 + d2 * h * h * a0 + d3 * h * h * a1 + d4 * h * self.du1 + d5 * self.u1) / h;
        (u, du)
    }
}

/// Quadrature node for moments of g: `∫ F(r) g(x) dx ≈ Σ weight · F(r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentNode {
    pub r: f64,
    pub weight: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringSolution {
    a: f64,
    potential: RadialPotential,
    pub radial_grid: Vec<f64>,
    pub phi: Vec<f64>,
    pub omega: Vec<f64>,
    pub g: Vec<f64>,
    /// `(k, ĝ(k))` samples on `[0, 32/R]`.
    pub g_hat_table: Vec<(f64, f64)>,
    g_omega_moment: f64,
    /// Largest deviation of the exterior samples from the fitted line, relative to its slope.
    pub fit_residual: f64,
    steps: Vec<Step>,
    nodes: Vec<MomentNode>,
}

// Butcher tableau of the 3-stage Gauss method.
struct Gauss3 {
    a: [[f64; 3]; 3],
    b: [f64; 3],
    c: [f64; 3],
}

fn gauss3() -> Gauss3 {
    let s = 15f64.sqrt();
    Gauss3 {
        a: [
            [5.0 / 36.0, 2.0 / 9.0 - s / 15.0, 5.0 / 36.0 - s / 30.0],
            [5.0 / 36.0 + s / 24.0, 2.0 / 9.0, 5.0 / 36.0 - s / 24.0],
            [5.0 / 36.0 + s / 30.0, 2.0 / 9.0 + s / 15.0, 5.0 / 36.0],
        ],
        b: [5.0 / 18.0, 4.0 / 9.0, 5.0 / 18.0],
        c: [0.5 - s / 10.0, 0.5, 0.5 + s / 10.0],
    }
}

/// One step of `u'' = q(r) u` written as `y' = [[0, 1], [q, 0]] y`.
fn irk_step(tab: &Gauss3, q: &dyn Fn(f64) -> f64, r: f64, h: f64, y: [f64; 2]) -> Result<[f64; 2]> {
    let qs = [q(r + tab.c[0] * h), q(r + tab.c[1] * h), q(r + tab.c[2] * h)];
    let mut m = SMatrix::<f64, 6, 6>::identity();
    for i in 0..3 {
        for j in 0..3 {
            let f = h * tab.a[i][j];
            m[(2 * i, 2 * j + 1)] -= f;
            m[(2 * i + 1, 2 * j)] -= f * qs[j];
        }
    }
    let rhs = SVector::<f64, 6>::from_fn(|i, _| y[i % 2]);
    let stages = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical(format!("singular stage system at r = {r}, h = {h}")))?;
    let mut out = y;
    for i in 0..3 {
        out[0] += h * tab.b[i] * stages[2 * i + 1];
        out[1] += h * tab.b[i] * qs[i] * stages[2 * i];
    }
    Ok(out)
}

struct RawStep {
    step: Step,
    log_scale: f64,
}

/// Solve the zero-energy scattering problem for `v`.
pub fn solve_scattering(v: &RadialPotential, cfg: &GridConfig) -> Result<ScatteringSolution> {
    if !(cfg.kappa_h > 0.0) || !(cfg.max_step_fraction > 0.0) || cfg.exterior_steps < 2 {
        return Err(Error::Parameter(format!("invalid grid configuration {cfg:?}")));
    }
    let radius = v.support_radius();
    let tab = gauss3();
    let max_step = cfg.max_step_fraction * radius;

    // Intervals on which ½v is a single linear function.
    let mut pieces: Vec<(f64, f64, f64, f64)> = Vec::new(); // (start, end, q_start, q_end)
    let mut cursor = 0.0;
    for s in v.segments() {
        if s.start > cursor {
            pieces.push((cursor, s.start, 0.0, 0.0));
        }
        pieces.push((s.start, s.end, 0.5 * s.v_start, 0.5 * s.v_end));
        cursor = s.end;
    }
    if cursor < radius {
        pieces.push((cursor, radius, 0.0, 0.0));
    }

    let mut raw: Vec<RawStep> = Vec::new();
    let mut y = [0.0, 1.0];
    let mut log_scale = 0.0;
    for &(start, end, qa, qb) in &pieces {
        let q = move |r: f64| if qa == qb { qa } else { qa + (qb - qa) * (r - start) / (end - start) };
        let kappa = qa.max(qb).sqrt();
        let h_max = if kappa > 0.0 { max_step.min(cfg.kappa_h / kappa) } else { max_step };
        let n = ((end - start) / h_max).ceil().max(1.0) as usize;
        if raw.len() + n > MAX_STEPS {
            return Err(Error::Numerical(format!(
                "step budget exhausted: potential needs more than {MAX_STEPS} steps (step {h_max:e} near r = {start})"
            )));
        }
        let h = (end - start) / n as f64;
        for i in 0..n {
            let r0 = start + i as f64 * h;
            let r1 = if i + 1 == n { end } else { r0 + h };
            let next = irk_step(&tab, &q, r0, r1 - r0, y)?;
            if !next[0].is_finite() || !next[1].is_finite() {
                return Err(Error::Numerical(format!("non-finite solution at r = {r1}")));
            }
            raw.push(RawStep {
                step: Step { r0, r1, u0: y[0], du0: y[1], u1: next[0], du1: next[1], q0: q(r0), q1: q(r1) },
                log_scale,
            });
            y = next;
            let big = y[0].abs().max(y[1].abs());
            if big > 1e150 {
                y = [y[0] / big, y[1] / big];
                log_scale += big.ln();
            }
        }
    }

    // Exterior: v = 0, the solution is exactly linear.
    let a_est = (radius - y[0] / y[1]).max(0.0);
    let r_max = (2.0 * radius).max(4.0 * a_est);
    let n_ext = cfg.exterior_steps;
    let h_ext = (r_max - radius) / n_ext as f64;
    let zero = |_: f64| 0.0;
    let mut fit_pts = vec![(radius, y[0])];
    for i in 0..n_ext {
        let r0 = radius + i as f64 * h_ext;
        let r1 = if i + 1 == n_ext { r_max } else { r0 + h_ext };
        let next = irk_step(&tab, &zero, r0, r1 - r0, y)?;
        raw.push(RawStep { step: Step { r0, r1, u0: y[0], du0: y[1], u1: next[0], du1: next[1], q0: 0.0, q1: 0.0 }, log_scale });
        y = next;
        fit_pts.push((r1, y[0]));
    }

    // Least-squares line u = α + β r through the exterior samples.
    let n = fit_pts.len() as f64;
    let mr = fit_pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mu = fit_pts.iter().map(|p| p.1).sum::<f64>() / n;
    let srr: f64 = fit_pts.iter().map(|p| (p.0 - mr).powi(2)).sum();
    let sru: f64 = fit_pts.iter().map(|p| (p.0 - mr) * (p.1 - mu)).sum();
    let slope = sru / srr;
    let intercept = mu - slope * mr;
    if !(slope > 0.0) {
        return Err(Error::Numerical(format!("exterior slope is not positive ({slope:e})")));
    }
    let mut a = -intercept / slope;
    if a.abs() < 1e-15 * radius {
        a = 0.0;
    }
    let fit_residual = fit_pts.iter().map(|p| (p.1 - intercept - slope * p.0).abs()).fold(0.0, f64::max) / slope;

    let steps: Vec<Step> = raw
        .iter()
        .map(|s| {
            let f = (s.log_scale - log_scale).exp() / slope;
            Step { u0: s.step.u0 * f, du0: s.step.du0 * f, u1: s.step.u1 * f, du1: s.step.du1 * f, ..s.step }
        })
        .collect();

    let mut nodes = Vec::new();
    let mut gw = CompensatedSum::default();
    for s in steps.iter().take_while(|s| s.r1 <= radius * (1.0 + 1e-14)) {
        let h = s.r1 - s.r0;
        for &(x, w) in gl8() {
            let r = s.r0 + 0.5 * h * (1.0 + x);
            let vr = v.value(r);
            if vr == 0.0 {
                continue;
            }
            let (u, _) = s.eval(r);
            let weight = 4.0 * PI * 0.5 * h * w * r * vr * u;
            let phi = u / r;
            gw.add(weight * (1.0 - phi));
            nodes.push(MomentNode { r, weight, phi });
        }
    }

    let mut radial_grid = vec![0.0];
    let mut phi = vec![steps.first().map_or(1.0, |s| s.du0)];
    for s in &steps {
        radial_grid.push(s.r1);
        phi.push(s.u1 / s.r1);
    }
    let omega = phi.iter().map(|p| 1.0 - p).collect();
    let g = radial_grid.iter().zip(&phi).map(|(&r, &p)| v.value(r) * p).collect();

    let mut sol = ScatteringSolution {
        a,
        potential: v.clone(),
        radial_grid,
        phi,
        omega,
        g,
        g_hat_table: Vec::new(),
        g_omega_moment: gw.value(),
        fit_residual,
        steps,
        nodes,
    };
    let dk = 32.0 / radius / 128.0;
    sol.g_hat_table = (0..=128).map(|i| (i as f64 * dk, sol.g_hat(i as f64 * dk))).collect();
    Ok(sol)
}

impl ScatteringSolution {
    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn potential(&self) -> &RadialPotential {
        &self.potential
    }

    pub fn support_radius(&self) -> f64 {
        self.potential.support_radius()
    }

    /// `ĝ(k) = 4π ∫ r² v φ sinc(kr) dr`.
    pub fn g_hat(&self, k: f64) -> f64 {
        let k = k.abs();
        let mut s = CompensatedSum::default();
        for n in &self.nodes {
            s.add(n.weight * sinc(k * n.r));
        }
        s.value()
    }

    /// `∫ g ω`.
    pub fn g_omega_moment(&self) -> f64 {
        self.g_omega_moment
    }

    /// `∫₀^∞ r |g(r)| dr`, the constant in `|ĝ(k)| ≤ 4π‖r g‖₁ / k`.
    pub fn r_weighted_g_norm(&self) -> f64 {
        self.nodes.iter().map(|n| n.weight.abs() / (4.0 * PI * n.r)).sum()
    }

    /// `(φ(r), φ'(r))` from the dense output; exact `1 − a/r` outside the grid.
    pub fn phi_at(&self, r: f64) -> (f64, f64) {
        let last = self.steps.last().map_or(0.0, |s| s.r1);
        if r >= last || self.steps.is_empty() {
            return (1.0 - self.a / r, self.a / (r * r));
        }
        if r <= 0.0 {
            return (self.steps[0].du0, 0.0);
        }
        let i = self.steps.partition_point(|s| s.r1 < r);
        let (u, du) = self.steps[i].eval(r);
        (u / r, (du * r - u) / (r * r))
    }

    /// `4π ∫ (φ'² + ½ v φ²) r² dr`; equals `4πa` at the solution.
    pub fn variational_energy(&self) -> f64 {
        let radius = self.support_radius();
        let mut s = CompensatedSum::default();
        for st in self.steps.iter().take_while(|s| s.r1 <= radius * (1.0 + 1e-14)) {
            let h = st.r1 - st.r0;
            for &(x, w) in gl8() {
                let r = st.r0 + 0.5 * h * (1.0 + x);
                let (u, du) = st.eval(r);
                let dphi = (du * r - u) / (r * r);
                let phi = u / r;
                s.add(0.5 * h * w * (dphi * dphi + 0.5 * self.potential.value(r) * phi * phi) * r * r);
            }
        }
        4.0 * PI * (s.value() + self.a * self.a / radius)
    }

    /// CSV rows `(r, φ, ω, g)`.
    pub fn profile_rows(&self) -> impl Iterator<Item = [f64; 4]> + '_ {
        (0..self.radial_grid.len()).map(|i| [self.radial_grid[i], self.phi[i], self.omega[i], self.g[i]])
    }
}

/// Born approximation of `8πa`: order 1 is `v̂(0)`, order 2 adds
/// `−½ ∬ v(x) v(y) / (4π|x − y|)`.
pub fn born_series(v: &RadialPotential, order: u32) -> Result<f64> {
    match order {
        1 => Ok(v.l1_norm()),
        2 => {
            // −½∬ v v /(4π|x−y|) = −4π ∫ r v(r) M(r) dr with M(r) = ∫₀^r s² v(s) ds;
            // the integrand is a polynomial on each segment.
            let mut s = CompensatedSum::default();
            for seg in v.segments() {
                let h = seg.end - seg.start;
                for &(x, w) in gl8() {
                    let r = seg.start + 0.5 * h * (1.0 + x);
                    s.add(0.5 * h * w * r * seg.value(r) * v.cumulative_moment2(r));
                }
            }
            Ok(v.l1_norm() - 4.0 * PI * s.value())
        }
        _ => Err(Error::Parameter(format!("Born series is available at order 1 or 2, not {order}"))),
    }
}
