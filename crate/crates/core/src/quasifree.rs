//! Quasi-free trial states: the Bogoliubov functional, its per-mode
//! minimization and the energy bookkeeping of the upper-bound trial state.

use nalgebra::{Matrix3, Matrix4, Vector3};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boxsum::{LatticeKind, MomentumLattice};
use crate::mixture::{coupling_from, coupling_matrix, diagonalize_coupling, eigenvalues, rotation, Mat2, MixtureParams};
use crate::numerics::{gl8, loglog_slope, sinc, CompensatedSum};
use crate::scattering::ScatteringSolution;
use crate::{Error, Result};

use std::f64::consts::PI;

/// A momentum magnitude standing for `weight` lattice modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridNode {
    pub k: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumGrid {
    side: f64,
    k_max: f64,
    nodes: Vec<GridNode>,
}

impl MomentumGrid {
    /// Shells of `(2π/L)ℤ³ ∖ {0}` up to `k_max`, weighted by multiplicity.
    pub fn lattice(side: f64, k_max: f64) -> Result<Self> {
        let lat = MomentumLattice::new(LatticeKind::Periodic, side, k_max)?;
        let nodes = lat.shells().iter().map(|s| GridNode { k: s.k, weight: s.multiplicity as f64 }).collect();
        Ok(Self { side, k_max, nodes })
    }

    pub fn from_nodes(side: f64, k_max: f64, nodes: Vec<GridNode>) -> Result<Self> {
        if !(side > 0.0) {
            return Err(Error::Parameter(format!("box side must be positive, got {side}")));
        }
        if let Some(n) = nodes.iter().find(|n| !(n.k > 0.0) || !(n.weight >= 0.0) || n.k > k_max) {
            return Err(Error::Parameter(format!("grid node {n:?} must have 0 < k ≤ {k_max} and a non-negative weight")));
        }
        Ok(Self { side, k_max, nodes })
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(3)
    }

    pub fn k_max(&self) -> f64 {
        self.k_max
    }

    pub fn nodes(&self) -> &[GridNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn weighted_sum(&self, f: impl Fn(usize, &GridNode) -> f64) -> f64 {
        self.nodes.iter().enumerate().map(|(i, n)| n.weight * f(i, n)).collect::<CompensatedSum>().value()
    }
}

/// Pairing `α_k` and one-body `γ_k` data per grid node, plus condensate counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiFreeState {
    pub grid: MomentumGrid,
    pub alpha: Vec<Mat2>,
    pub gamma: Vec<Mat2>,
    pub n0_a: f64,
    pub n0_b: f64,
}

impl QuasiFreeState {
    pub fn vacuum(grid: MomentumGrid, n0_a: f64, n0_b: f64) -> Self {
        let n = grid.len();
        Self { grid, alpha: vec![Mat2::zeros(); n], gamma: vec![Mat2::zeros(); n], n0_a, n0_b }
    }

    /// Explicit minimizers with the condensate densities taken from `p`.
    pub fn from_minimizers(grid: MomentumGrid, p: &MixtureParams) -> Result<Self> {
        let modes: Vec<Result<(Mat2, Mat2)>> = grid
            .nodes
            .par_iter()
            .map(|n| diagonalize_coupling(coupling_matrix(p, n.k), n.k, n.k * n.k).map(|m| (m.alpha, m.gamma)))
            .collect();
        let mut alpha = Vec::with_capacity(modes.len());
        let mut gamma = Vec::with_capacity(modes.len());
        for m in modes {
            let (a, g) = m?;
            alpha.push(a);
            gamma.push(g);
        }
        let v = grid.volume();
        Ok(Self { grid, alpha, gamma, n0_a: p.rho_a * v, n0_b: p.rho_b * v })
    }

    pub fn rho0(&self) -> (f64, f64) {
        let v = self.grid.volume();
        (self.n0_a / v, self.n0_b / v)
    }

    /// `(Σγ^{AA}, Σγ^{BB}, Σγ^{AB})` over the grid.
    pub fn excited(&self) -> (f64, f64, f64) {
        (
            self.grid.weighted_sum(|i, _| self.gamma[i][(0, 0)]),
            self.grid.weighted_sum(|i, _| self.gamma[i][(1, 1)]),
            self.grid.weighted_sum(|i, _| self.gamma[i][(0, 1)]),
        )
    }

    /// `N_# = n0_# + Σγ^{##}`.
    pub fn particle_numbers(&self) -> (f64, f64) {
        let (ga, gb, _) = self.excited();
        (self.n0_a + ga, self.n0_b + gb)
    }

    /// Checks that `[[γ, α], [α, γ + I]] ≥ 0` at every node.
    pub fn check_admissible(&self) -> Result<()> {
        if self.alpha.len() != self.grid.len() || self.gamma.len() != self.grid.len() {
            return Err(Error::Validation("state fields do not match the grid length".into()));
        }
        if !(self.n0_a >= 0.0 && self.n0_b >= 0.0) {
            return Err(Error::Validation(format!("condensate counts must be non-negative, got ({}, {})", self.n0_a, self.n0_b)));
        }
        for (i, (a, g)) in self.alpha.iter().zip(&self.gamma).enumerate() {
            let asym = (a[(0, 1)] - a[(1, 0)]).abs() + (g[(0, 1)] - g[(1, 0)]).abs();
            let scale = 1.0 + g.abs().max() + a.abs().max();
            let mut m = Matrix4::zeros();
            for r in 0..2 {
                for c in 0..2 {
                    m[(r, c)] = g[(r, c)];
                    m[(r, c + 2)] = a[(r, c)];
                    m[(r + 2, c)] = a[(r, c)];
                    m[(r + 2, c + 2)] = g[(r, c)] + if r == c { 1.0 } else { 0.0 };
                }
            }
            let low = m.symmetric_eigenvalues().min();
            if asym > 1e-12 * scale || low < -1e-10 * scale {
                return Err(Error::Validation(format!(
                    "inadmissible quasi-free data at mode {i} (|k| = {}): smallest eigenvalue {low:e}",
                    self.grid.nodes[i].k
                )));
            }
        }
        Ok(())
    }
}

/// Per-mode value `tr((τ + B)γ) + tr(Bα)`.
pub fn mode_value(tau: f64, b: &Mat2, alpha: &Mat2, gamma: &Mat2) -> f64 {
    ((Mat2::identity() * tau + b) * gamma).trace() + (b * alpha).trace()
}

/// `Σ_k w_k [tr((k² + B_k)γ_k) + tr(B_k α_k)]` with `B_k` built from the condensate densities.
pub fn bogoliubov_functional(state: &QuasiFreeState, p: &MixtureParams) -> Result<f64> {
    state.check_admissible()?;
    let (ra, rb) = state.rho0();
    Ok(state.grid.weighted_sum(|i, n| {
        let [ga, gb, gab] = p.g_hats(n.k);
        let b = coupling_from(ra, rb, ga, gb, gab);
        mode_value(n.k * n.k, &b, &state.alpha[i], &state.gamma[i])
    }))
}

fn sym(x: &Vector3<f64>) -> Mat2 {
    Mat2::new(x[0], x[1], x[1], x[2])
}

fn sinhc(d: f64) -> f64 {
    if d.abs() < 1e-4 {
        1.0 + d * d / 6.0
    } else {
        d.sinh() / d
    }
}

/// `(α, γ) = (½ sinh S, ½(cosh S − I))`.
pub fn pairing_from_generator(s: &Mat2) -> (Mat2, Mat2) {
    let (sp, sm) = eigenvalues(s);
    let u = rotation(s);
    let f = |a: f64, b: f64| u * Mat2::new(a, 0.0, 0.0, b) * u.transpose();
    let alpha = f(0.5 * sp.sinh(), 0.5 * sm.sinh());
    let gamma = f(0.5 * (sp.cosh() - 1.0), 0.5 * (sm.cosh() - 1.0));
    (alpha, gamma)
}

/// Per-mode objective in the generator parametrization `x = (S₁₁, S₁₂, S₂₂)` and its gradient.
pub fn mode_objective(tau: f64, b: &Mat2, x: &Vector3<f64>) -> (f64, Vector3<f64>) {
    let s = sym(x);
    let (alpha, gamma) = pairing_from_generator(&s);
    let m1 = Mat2::identity() * tau + b;
    let value = (m1 * gamma).trace() + (b * alpha).trace();

    let (sp, sm) = eigenvalues(&s);
    let u = rotation(&s);
    let sig = [sp, sm];
    let m1r = u.transpose() * m1 * u;
    let m2r = u.transpose() * b * u;
    let mut g = Mat2::zeros();
    for i in 0..2 {
        for j in 0..2 {
            let mid = 0.5 * (sig[i] + sig[j]);
            let half = 0.5 * (sig[i] - sig[j]);
            let sc = sinhc(half);
            g[(i, j)] = 0.5 * mid.sinh() * sc * m1r[(i, j)] + 0.5 * mid.cosh() * sc * m2r[(i, j)];
        }
    }
    let g = u * g * u.transpose();
    (value, Vector3::new(g[(0, 0)], g[(0, 1)] + g[(1, 0)], g[(1, 1)]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimizerOptions {
    pub seed: u64,
    pub restarts: usize,
    pub max_iterations: usize,
    /// Gradient tolerance relative to `τ + |λ₊|`.
    pub gradient_tolerance: f64,
}

impl Default for MinimizerOptions {
    fn default() -> Self {
        Self { seed: 0, restarts: 8, max_iterations: 400, gradient_tolerance: 1e-12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeMinimum {
    pub k: f64,
    pub generator: Mat2,
    pub alpha: Mat2,
    pub gamma: Mat2,
    pub value: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
}

fn bfgs(tau: f64, b: &Mat2, start: Vector3<f64>, opts: &MinimizerOptions, tol: f64) -> (Vector3<f64>, f64, f64, usize) {
    let mut x = start;
    let (mut f, mut g) = mode_objective(tau, b, &x);
    let mut h = Matrix3::identity() / (tau + b.abs().max());
    for it in 0..opts.max_iterations {
        if g.norm() <= tol {
            return (x, f, g.norm(), it);
        }
        let mut d = -(h * g);
        if d.dot(&g) >= 0.0 {
            h = Matrix3::identity() / (tau + b.abs().max());
            d = -(h * g);
        }
        // Cap the step so cosh/sinh stay well inside range.
        let dn = d.norm();
        if dn > 2.0 {
            d *= 2.0 / dn;
        }
        let slope = g.dot(&d);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn = x + d * t;
            let (fnew, gnew) = mode_objective(tau, b, &xn);
            // Near the minimum, value differences drown in rounding; a shrinking gradient is accepted instead.
            if fnew.is_finite() && (fnew <= f + 1e-4 * t * slope || gnew.norm() < (1.0 - 1e-4 * t) * g.norm()) {
                accepted = Some((xn, fnew, gnew));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fnew, gnew)) = accepted else {
            return (x, f, g.norm(), it);
        };
        let s = xn - x;
        let y = gnew - g;
        let sy = s.dot(&y);
        if sy > 1e-300 {
            let rho = 1.0 / sy;
            let i3 = Matrix3::identity();
            h = (i3 - s * y.transpose() * rho) * h * (i3 - y * s.transpose() * rho) + s * s.transpose() * rho;
        }
        x = xn;
        f = fnew;
        g = gnew;
    }
    (x, f, g.norm(), opts.max_iterations)
}

/// Minimizes the per-mode functional at coupling `b` and kinetic value `tau` by quasi-Newton steps.
pub fn minimize_mode(k: f64, tau: f64, b: &Mat2, opts: &MinimizerOptions) -> Result<ModeMinimum> {
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("kinetic symbol must be positive, got τ = {tau} at k = {k}")));
    }
    let (lp, lm) = eigenvalues(b);
    if lm <= -0.5 * tau {
        return Err(Error::Domain(format!("mode k = {k}: λ₋ = {lm:e} ≤ −τ/2, the functional is unbounded below")));
    }
    let tol = opts.gradient_tolerance * (tau + lp.abs());
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<(Vector3<f64>, f64, f64, usize)> = None;
    let mut total_iter = 0;
    for attempt in 0..=opts.restarts {
        let start = if attempt == 0 {
            Vector3::zeros()
        } else {
            Vector3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))
        };
        let run = bfgs(tau, b, start, opts, tol);
        total_iter += run.3;
        if best.as_ref().is_none_or(|bst| run.2 < bst.2) {
            best = Some(run);
        }
        if run.2 <= tol {
            break;
        }
    }
    let (x, value, gn, _) = best.expect("at least one attempt runs");
    if gn > tol {
        return Err(Error::Numerical(format!(
            "per-mode minimization at k = {k} did not converge after {} restarts (gradient norm {gn:e})",
            opts.restarts
        )));
    }
    let generator = sym(&x);
    let (alpha, gamma) = pairing_from_generator(&generator);
    Ok(ModeMinimum { k, generator, alpha, gamma, value, gradient_norm: gn, iterations: total_iter })
}

/// Numerical per-mode minimizer at `τ = k²` for the couplings of `p`.
pub fn minimize_per_mode(p: &MixtureParams, k: f64, opts: &MinimizerOptions) -> Result<ModeMinimum> {
    if k == 0.0 {
        return Err(Error::Domain("the zero mode carries the condensate, not quasi-free data".into()));
    }
    minimize_mode(k, k * k, &coupling_matrix(p, k), opts)
}

/// Excited-particle sums with the truncation tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Depletion {
    /// `(Σγ^{AA}, Σγ^{BB}, Σγ^{AB})` over the grid.
    pub grid: [f64; 3],
    /// `|Λ|(2π)⁻³ ∫_{|k| > k_max} B(k)²/(4k⁴) dk`, entrywise.
    pub tail: [f64; 3],
    pub volume: f64,
}

impl Depletion {
    pub fn total(&self) -> [f64; 3] {
        [self.grid[0] + self.tail[0], self.grid[1] + self.tail[1], self.grid[2] + self.tail[2]]
    }

    /// `(Σγ^{AA} + Σγ^{BB}) / |Λ|`.
    pub fn density(&self) -> f64 {
        let t = self.total();
        (t[0] + t[1]) / self.volume
    }
}

pub fn depletion(p: &MixtureParams, grid: &MomentumGrid) -> Result<Depletion> {
    let state = QuasiFreeState::from_minimizers(grid.clone(), p)?;
    let (a, b, ab) = state.excited();
    let k = grid.k_max();
    let bm = coupling_matrix(p, k);
    let b2 = bm * bm;
    // γ ≈ B²/(4k⁴) at large k.
    let c = grid.volume() / (2.0 * PI).powi(3) * PI / k;
    let tail = if k > 0.0 { [c * b2[(0, 0)], c * b2[(1, 1)], c * b2[(0, 1)]] } else { [0.0; 3] };
    Ok(Depletion { grid: [a, b, ab], tail, volume: grid.volume() })
}

/// Slope of `log(Σγ/|Λ|)` against `log(ρā)` over a density sweep.
pub fn depletion_exponent(samples: &[(f64, Depletion)]) -> Result<f64> {
    let x: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let y: Vec<f64> = samples.iter().map(|s| s.1.density()).collect();
    loglog_slope(&x, &y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondensateFix {
    pub state: QuasiFreeState,
    pub iterations: usize,
}

/// Solves `N_# = N₀^# + Σγ^{##}(N₀)` by damped iteration, `γ` being the explicit minimizers at `ρ_{#,0}`.
pub fn fix_condensate(p: &MixtureParams, grid: &MomentumGrid) -> Result<CondensateFix> {
    let v = grid.volume();
    let (na, nb) = (p.rho_a * v, p.rho_b * v);
    let tol = 1e-10 * (na + nb).max(f64::MIN_POSITIVE);
    let (mut n0a, mut n0b) = (na, nb);
    for it in 1..=200 {
        let q = p.with_densities(n0a / v, n0b / v);
        let state = QuasiFreeState::from_minimizers(grid.clone(), &q)?;
        let (ga, gb, _) = state.excited();
        let (ta, tb) = (na - ga, nb - gb);
        if ta < 0.0 || tb < 0.0 {
            return Err(Error::Regime(format!(
                "excited particles exceed the totals: Σγ = ({ga:e}, {gb:e}) against N = ({na:e}, {nb:e})"
            )));
        }
        if (ta - n0a).abs() <= tol && (tb - n0b).abs() <= tol {
            let state = QuasiFreeState { n0_a: n0a, n0_b: n0b, ..state };
            return Ok(CondensateFix { state, iterations: it });
        }
        n0a = 0.5 * (n0a + ta);
        n0b = 0.5 * (n0b + tb);
    }
    Err(Error::Regime("condensate fixed point did not converge in 200 iterations".into()))
}

/// Every named term of the trial-state energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalValue {
    pub total: f64,
    /// `𝒯 = Σ k² (γ^{AA} + γ^{BB})`.
    pub kinetic: f64,
    pub l0_condensate_v: f64,
    pub l2_zero: f64,
    pub l2_one: f64,
    pub l4_zero: f64,
    pub l4_one: f64,
    pub l0_total_v: f64,
    pub l0_total_g: f64,
    pub l2_gamma_v_omega: f64,
    pub l0_condensate_g_omega: f64,
    pub l2_gamma_g: f64,
    pub l2_alpha_g: f64,
    pub k_bog: f64,
    /// Remainder of the renormalized split.
    pub error_tilde: f64,
    /// The remainder evaluated from its own formula with the exact real-space `ω`.
    pub error_tilde_direct: f64,
}

impl FunctionalValue {
    pub fn raw_sum(&self) -> f64 {
        self.kinetic + self.l0_condensate_v + self.l2_zero + self.l2_one + self.l4_zero + self.l4_one
    }

    pub fn renormalized_sum(&self) -> f64 {
        self.l0_total_g + self.l2_gamma_v_omega + self.l0_condensate_g_omega + self.k_bog + self.error_tilde
    }
}

/// Radial quadrature `∫ v(x) F(|x|) dx ≈ Σ w_j F(r_j)` over the support of `v`.
fn potential_nodes(sol: &ScatteringSolution, k_max: f64) -> Vec<(f64, f64)> {
    let v = sol.potential();
    let mut out = Vec::new();
    for s in v.segments() {
        let len = s.end - s.start;
        let panels = ((len * k_max).ceil() as usize).max(16);
        let h = len / panels as f64;
        for p in 0..panels {
            let c = s.start + (p as f64 + 0.5) * h;
            for &(x, w) in gl8() {
                let r = c + 0.5 * h * x;
                let vr = s.value(r);
                if vr != 0.0 {
                    out.push((r, 4.0 * PI * r * r * vr * 0.5 * h * w));
                }
            }
        }
    }
    out
}

/// `f̌(r_j) = |Λ|⁻¹ Σ_p w_p f_p sinc(|p| r_j)` at every radial node.
fn radial_profile(grid: &MomentumGrid, f: &[f64], radii: &[(f64, f64)]) -> Vec<f64> {
    let v = grid.volume();
    radii
        .par_iter()
        .map(|&(r, _)| grid.weighted_sum(|i, n| f[i] * sinc(n.k * r)) / v)
        .collect()
}

/// `𝒟_v(f, g)` in its radial form `(|Λ|/2) ∫ v f̌ ǧ`.
fn bilinear(nodes: &[(f64, f64)], fp: &[f64], gp: &[f64], volume: f64) -> f64 {
    let s: CompensatedSum = nodes.iter().zip(fp.iter().zip(gp)).map(|(&(_, w), (a, b))| w * a * b).collect();
    0.5 * volume * s.value()
}

/// Term-by-term energy of the state with the interactions of the three solved channels.
pub fn upper_bound_energy(state: &QuasiFreeState, sols: [&ScatteringSolution; 3]) -> Result<FunctionalValue> {
    state.check_admissible()?;
    let grid = &state.grid;
    let vol = grid.volume();
    let (ra0, rb0) = state.rho0();
    let rab0 = (ra0 * rb0).sqrt();
    let (ga_sum, gb_sum, _) = state.excited();
    let (na, nb) = (state.n0_a + ga_sum, state.n0_b + gb_sum);
    let (ra, rb) = (na / vol, nb / vol);

    // Per-node transforms, channels ordered A, B, AB.
    let vh: Vec<[f64; 3]> = grid
        .nodes()
        .par_iter()
        .map(|n| [0, 1, 2].map(|c| sols[c].potential().fourier_radial(n.k)))
        .collect();
    let gh: Vec<[f64; 3]> = grid.nodes().par_iter().map(|n| [0, 1, 2].map(|c| sols[c].g_hat(n.k))).collect();
    let v0 = [0, 1, 2].map(|c| sols[c].potential().l1_norm());
    let g0 = [0, 1, 2].map(|c| sols[c].g_hat(0.0));
    let gw0 = [0, 1, 2].map(|c| sols[c].g_omega_moment());

    let gam = |i: usize| state.gamma[i];
    let alp = |i: usize| state.alpha[i];
    let l0 = |n_a: f64, n_b: f64, c: [f64; 3]| (n_a * n_a * c[0] + 2.0 * n_a * n_b * c[2] + n_b * n_b * c[1]) / (2.0 * vol);
    // Σ w [ρ_A0 c_A γ^{AA} + ρ_B0 c_B γ^{BB} + 2√(ρ_A0ρ_B0) c_AB γ^{AB}] for a per-node coupling c.
    let l2 = |m: &dyn Fn(usize) -> Mat2, c: &dyn Fn(usize) -> [f64; 3]| {
        grid.weighted_sum(|i, _| {
            let (x, cc) = (m(i), c(i));
            ra0 * cc[0] * x[(0, 0)] + rb0 * cc[1] * x[(1, 1)] + 2.0 * rab0 * cc[2] * x[(0, 1)]
        })
    };

    let kinetic = grid.weighted_sum(|i, n| n.k * n.k * (gam(i)[(0, 0)] + gam(i)[(1, 1)]));
    let l0_condensate_v = l0(state.n0_a, state.n0_b, v0);
    let l2_zero = v0[0] * ra0 * ga_sum + v0[1] * rb0 * gb_sum + v0[2] * (rb0 * ga_sum + ra0 * gb_sum);
    let l2_gamma_v = l2(&gam, &|i| vh[i]);
    let l2_alpha_v = l2(&alp, &|i| vh[i]);
    let l2_one = l2_gamma_v + l2_alpha_v;
    let l4_zero = v0[0] * ga_sum * ga_sum / (2.0 * vol) + v0[1] * gb_sum * gb_sum / (2.0 * vol) + v0[2] * ga_sum * gb_sum / vol;

    let k_max = grid.nodes().iter().map(|n| n.k).fold(0.0, f64::max);
    let field = |m: &dyn Fn(usize) -> Mat2, r: usize, c: usize| -> Vec<f64> { (0..grid.len()).map(|i| m(i)[(r, c)]).collect() };
    let entries = [(0usize, 0usize), (1, 1), (0, 1)];
    let mut l4_one = 0.0;
    let mut direct = 0.0;
    let rho_pairs = [ra0, rb0, rab0];
    let mult = [1.0, 1.0, 2.0];
    for c in 0..3 {
        let nodes = potential_nodes(sols[c], k_max);
        let (r, cc) = entries[c];
        let gp = radial_profile(grid, &field(&gam, r, cc), &nodes);
        let ap = radial_profile(grid, &field(&alp, r, cc), &nodes);
        let dg = bilinear(&nodes, &gp, &gp, vol);
        let da = bilinear(&nodes, &ap, &ap, vol);
        l4_one += mult[c] * (dg + da);
        let shifted: Vec<f64> = nodes
            .iter()
            .zip(&ap)
            .map(|(&(rr, _), a)| a + rho_pairs[c] * (1.0 - sols[c].phi_at(rr).0))
            .collect();
        direct += mult[c] * (bilinear(&nodes, &shifted, &shifted, vol) + dg);
    }
    let vw0 = [0, 1, 2].map(|c| v0[c] - g0[c]);
    direct += 0.5 * vol * (ra * ra - ra0 * ra0) * vw0[0]
        + 0.5 * vol * (rb * rb - rb0 * rb0) * vw0[1]
        + vol * (ra * rb - ra0 * rb0) * vw0[2];

    let total = kinetic + l0_condensate_v + l2_zero + l2_one + l4_zero + l4_one;
    let l0_total_v = l0(na, nb, v0);
    let self_check = l0_condensate_v + l2_zero + l4_zero;
    if (self_check - l0_total_v).abs() > 1e-10 * l0_total_v.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::Consistency(format!(
            "condensate bookkeeping broken: {self_check:e} against 𝓛₀ at the full numbers {l0_total_v:e}"
        )));
    }
    let l0_total_g = l0(na, nb, g0);
    let l2_gamma_v_omega = l2(&gam, &|i| [0, 1, 2].map(|c| vh[i][c] - gh[i][c]));
    let l0_condensate_g_omega = l0(state.n0_a, state.n0_b, gw0);
    let l2_gamma_g = l2(&gam, &|i| gh[i]);
    let l2_alpha_g = l2(&alp, &|i| gh[i]);
    let k_bog = kinetic + l2_gamma_g + l2_alpha_g;
    let error_tilde = total - (l0_total_g + l2_gamma_v_omega + l0_condensate_g_omega + k_bog);
    Ok(FunctionalValue {
        total,
        kinetic,
        l0_condensate_v,
        l2_zero,
        l2_one,
        l4_zero,
        l4_one,
        l0_total_v,
        l0_total_g,
        l2_gamma_v_omega,
        l0_condensate_g_omega,
        l2_gamma_g,
        l2_alpha_g,
        k_bog,
        error_tilde,
        error_tilde_direct: direct,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boxsum::{sum_s_and_z0, TauVariant};
    use crate::lhy::bog_g;
    use crate::mixture::diagonalize_mode;
    use crate::potentials::{make_potential, PotentialDescriptor};
    use crate::scattering::{solve_scattering, GridConfig};
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn random_mode(rng: &mut ChaCha8Rng) -> (f64, Mat2) {
        let ra: f64 = rng.random_range(0.0..1.0);
        let rb: f64 = rng.random_range(0.0..1.0);
        let aa: f64 = rng.random_range(0.1..2.0);
        let ab: f64 = rng.random_range(0.1..2.0);
        let aab = rng.random_range(0.0..1.0) * (aa * ab).sqrt();
        let b = coupling_from(ra, rb, 8.0 * PI * aa, 8.0 * PI * ab, 8.0 * PI * aab) * 1e-3;
        let tau = 10f64.powf(rng.random_range(-3.0..0.0));
        (tau, b)
    }

    #[test]
    fn generator_preserves_admissibility() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let x = Vector3::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let (a, g) = pairing_from_generator(&sym(&x));
            let lhs = g * (g + Mat2::identity());
            let scale = 1.0 + (a * a).abs().max();
            assert!((lhs - a * a).abs().max() < 1e-12 * scale);
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let (tau, b) = random_mode(&mut rng);
            let x = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let (_, g) = mode_objective(tau, &b, &x);
            for j in 0..3 {
                let h = 1e-5;
                let mut xp = x;
                let mut xm = x;
                xp[j] += h;
                xm[j] -= h;
                let fd = (mode_objective(tau, &b, &xp).0 - mode_objective(tau, &b, &xm).0) / (2.0 * h);
                assert!((fd - g[j]).abs() <= 1e-6 * g.norm().max(tau), "{fd} vs {}", g[j]);
            }
        }
    }

    #[test]
    fn numerical_minimizer_matches_explicit_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let opts = MinimizerOptions::default();
        for _ in 0..200 {
            let (tau, b) = random_mode(&mut rng);
            let mode = diagonalize_coupling(b, tau.sqrt(), tau).unwrap();
            let m = minimize_mode(tau.sqrt(), tau, &b, &opts).unwrap();
            assert!((m.alpha - mode.alpha).abs().max() < 1e-6);
            assert!((m.gamma - mode.gamma).abs().max() < 1e-6);
            assert_relative_eq!(m.value, mode.minimum(), max_relative = 1e-8);
        }
    }

    #[test]
    fn trivial_coupling_gives_zero_generator() {
        let m = minimize_mode(0.3, 0.09, &Mat2::zeros(), &MinimizerOptions::default()).unwrap();
        assert_eq!(m.generator, Mat2::zeros());
        assert_eq!(m.value, 0.0);
    }

    #[test]
    fn one_species_resonant_mode() {
        let p = MixtureParams::constant(1e-3, 0.0, 1.0, 0.0, 0.0).unwrap();
        let l = 8.0 * PI * 1e-3;
        let k = l.sqrt();
        let m = minimize_per_mode(&p, k, &MinimizerOptions::default()).unwrap();
        // ½[G(k², λ₊) + G(k², 0)] without the Z₀ piece λ²/(4k²).
        let expect = 0.5 * bog_g(k * k, l) - l * l / (4.0 * k * k);
        let direct = 0.5 * ((k.powi(4) + 2.0 * l * k * k).sqrt() - k * k - l);
        assert_relative_eq!(expect, direct, max_relative = 1e-12);
        assert_relative_eq!(m.value, direct, max_relative = 1e-8);
    }

    #[test]
    fn perturbing_the_minimizer_never_lowers_the_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let (tau, b) = random_mode(&mut rng);
            let mode = diagonalize_coupling(b, tau.sqrt(), tau).unwrap();
            // Generator S = U diag(−2 artanh β) Uᵀ of the explicit minimizer.
            let d = mode.beta_diag.map(|x| -2.0 * x.atanh());
            let s = mode.u * Mat2::new(d[0], 0.0, 0.0, d[1]) * mode.u.transpose();
            let x0 = Vector3::new(s[(0, 0)], 0.5 * (s[(0, 1)] + s[(1, 0)]), s[(1, 1)]);
            let f0 = mode_objective(tau, &b, &x0).0;
            for _ in 0..10 {
                let dir = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)).normalize();
                let f1 = mode_objective(tau, &b, &(x0 + dir * 1e-4)).0;
                assert!(f1 - f0 >= -1e-10 * (tau + mode.lambda_plus), "{f0} {f1}");
            }
        }
    }

    #[test]
    fn unstable_modes_are_refused() {
        let b = Mat2::new(1.0, 0.0, 0.0, -1.0);
        assert!(matches!(minimize_mode(1.0, 1.0, &b, &MinimizerOptions::default()), Err(Error::Domain(_))));
    }

    #[test]
    fn vacuum_value_is_zero() {
        let grid = MomentumGrid::lattice(50.0, 1.0).unwrap();
        let p = MixtureParams::constant(1e-3, 2e-3, 1.0, 1.0, 0.5).unwrap();
        let s = QuasiFreeState::vacuum(grid, 10.0, 20.0);
        assert_eq!(bogoliubov_functional(&s, &p).unwrap(), 0.0);
    }

    #[test]
    fn inadmissible_state_names_the_mode() {
        let grid = MomentumGrid::lattice(20.0, 1.0).unwrap();
        let mut s = QuasiFreeState::vacuum(grid, 1.0, 1.0);
        s.alpha[3] = Mat2::new(1.0, 0.0, 0.0, 0.0);
        let p = MixtureParams::constant(1e-3, 0.0, 1.0, 0.0, 0.0).unwrap();
        match bogoliubov_functional(&s, &p) {
            Err(Error::Validation(m)) => assert!(m.contains("mode 3"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn one_species_value_matches_lattice_sum() {
        let grid = MomentumGrid::lattice(60.0, 2.0).unwrap();
        let p = MixtureParams::constant(1e-3, 0.0, 1.0, 0.0, 0.0).unwrap();
        let state = QuasiFreeState::from_minimizers(grid.clone(), &p).unwrap();
        let value = bogoliubov_functional(&state, &p).unwrap();
        let lat = MomentumLattice::new(LatticeKind::Periodic, 60.0, 2.0).unwrap();
        let (s, _) = sum_s_and_z0(&p, &lat, &TauVariant::Free).unwrap();
        assert_relative_eq!(value, s, max_relative = 1e-10);
    }

    #[test]
    fn explicit_minimizers_reach_the_trace_value() {
        let grid = MomentumGrid::lattice(80.0, 1.5).unwrap();
        let p = MixtureParams::constant(2e-3, 1e-3, 1.0, 0.8, 0.6).unwrap();
        let state = QuasiFreeState::from_minimizers(grid.clone(), &p).unwrap();
        let value = bogoliubov_functional(&state, &p).unwrap();
        let trace = grid.weighted_sum(|_, n| diagonalize_mode(&p, n.k, n.k * n.k).unwrap().minimum());
        assert_relative_eq!(value, trace, max_relative = 1e-10);
    }

    #[test]
    fn depletion_basics() {
        let p = MixtureParams::constant(1e-6, 0.0, 1.0, 0.0, 0.0).unwrap();
        let d1 = depletion(&p, &MomentumGrid::lattice(1000.0, 0.2).unwrap()).unwrap();
        assert_eq!((d1.total()[1], d1.total()[2]), (0.0, 0.0));
        let d2 = depletion(&p, &MomentumGrid::lattice(1000.0, 0.4).unwrap()).unwrap();
        assert!((d2.total()[0] / d1.total()[0] - 1.0).abs() < 0.01);
    }

    #[test]
    fn condensate_closure() {
        let grid = MomentumGrid::lattice(200.0, 1.0).unwrap();
        let p = MixtureParams::constant(1e-4, 2e-4, 1.0, 0.9, 0.5).unwrap();
        let fix = fix_condensate(&p, &grid).unwrap();
        let (na, nb) = fix.state.particle_numbers();
        let v = grid.volume();
        assert_relative_eq!(na, 1e-4 * v, max_relative = 1e-9);
        assert_relative_eq!(nb, 2e-4 * v, max_relative = 1e-9);
        assert!(fix.state.n0_a < 1e-4 * v);
    }

    fn well_solution(h: f64) -> Arc<ScatteringSolution> {
        let v = make_potential(&PotentialDescriptor::square_well(h, 1.0)).unwrap();
        Arc::new(solve_scattering(&v, &GridConfig::default()).unwrap())
    }

    #[test]
    fn vacuum_energy_is_the_condensate_term() {
        let s = well_solution(2.0);
        let grid = MomentumGrid::lattice(30.0, 2.0).unwrap();
        let st = QuasiFreeState::vacuum(grid, 5.0, 0.0);
        let f = upper_bound_energy(&st, [&s, &s, &s]).unwrap();
        assert_eq!((f.kinetic, f.k_bog, f.l2_gamma_v_omega), (0.0, 0.0, 0.0));
        assert_relative_eq!(f.total, f.l0_total_v, max_relative = 1e-14);
        assert_relative_eq!(f.total, 25.0 * s.potential().l1_norm() / (2.0 * 27000.0), max_relative = 1e-14);
    }

    #[test]
    fn term_sums_close() {
        let (sa, sb, sab) = (well_solution(2.0), well_solution(1.5), well_solution(0.5));
        let p = MixtureParams::from_solutions(1e-4, 5e-5, [sa.clone(), sb.clone(), sab.clone()]).unwrap();
        let grid = MomentumGrid::lattice(120.0, 3.0).unwrap();
        let fix = fix_condensate(&p, &grid).unwrap();
        let f = upper_bound_energy(&fix.state, [&sa, &sb, &sab]).unwrap();
        assert_relative_eq!(f.raw_sum(), f.total, max_relative = 1e-12);
        assert_relative_eq!(f.renormalized_sum(), f.total, max_relative = 1e-12);
        // The Bogoliubov part of the energy is the minimized functional.
        let q = p.with_densities(fix.state.n0_a / grid.volume(), fix.state.n0_b / grid.volume());
        assert_relative_eq!(f.k_bog, bogoliubov_functional(&fix.state, &q).unwrap(), max_relative = 1e-10);
        assert!(f.error_tilde.abs() < 1e-2 * f.total.abs());
    }
}
