//! The grand-canonical functional `F(r_A, r_B)` of condensate occupations:
//! evaluation, derivatives, chemical potentials, convexity and phase scans.
//!
//! Writing `x = r_A a_A + r_B a_B` and `D = (r_A a_A − r_B a_B)² + 4 r_A r_B a_AB²`,
//! the LHY part is `G^{5/4} I = c (P^{5/2} + M^{5/2})` with `P, M = x ± √D`
//! (twice the eigenvalues of the occupation-weighted length matrix). The
//! derivatives below are taken in that form, which stays regular on the
//! `ξ = 0` and `ξ = 1` boundaries.

use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::lhy::{e_main, energy_breakdown, I_AB_PREFACTOR};
use crate::mixture::{eigenvalues, MixtureParams};
use crate::{Error, Result};

use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrandFunctionalParams {
    pub volume: f64,
    pub a_a: f64,
    pub a_b: f64,
    pub a_ab: f64,
    /// Total density entering the convexifier.
    pub rho: f64,
    pub a_bar: f64,
    pub mu_a: f64,
    pub mu_b: f64,
    pub k_z: f64,
    /// Constant `C` of the region `r_A + r_B ≤ C K_z ρ|Λ|` and of the window `μ ≤ C/ℓ²`.
    pub c_region: f64,
    /// Include the `(ρā³)^{1/4}` convexifier.
    pub convexifier: bool,
}

impl GrandFunctionalParams {
    pub fn new(volume: f64, lengths: [f64; 3], rho: f64, k_z: f64) -> Result<Self> {
        let [a_a, a_b, a_ab] = lengths;
        let gp = Self {
            volume,
            a_a,
            a_b,
            a_ab,
            rho,
            a_bar: a_a.max(a_b).max(a_ab),
            mu_a: 0.0,
            mu_b: 0.0,
            k_z,
            c_region: 1.0,
            convexifier: true,
        };
        gp.validate()?;
        Ok(gp)
    }

    pub fn from_mixture(p: &MixtureParams, volume: f64, k_z: f64) -> Result<Self> {
        Self::new(volume, [p.a_a, p.a_b, p.a_ab], p.rho(), k_z)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.volume > 0.0) || !self.volume.is_finite() {
            return Err(Error::Validation(format!("volume must be positive, got {}", self.volume)));
        }
        for (n, x) in [("a_A", self.a_a), ("a_B", self.a_b), ("a_AB", self.a_ab), ("ρ", self.rho), ("ā", self.a_bar)] {
            if !(x >= 0.0) || !x.is_finite() {
                return Err(Error::Validation(format!("{n} must be finite and non-negative, got {x}")));
            }
        }
        if !(self.mu_a >= 0.0 && self.mu_b >= 0.0) {
            return Err(Error::Validation(format!("chemical potentials must be non-negative, got ({}, {})", self.mu_a, self.mu_b)));
        }
        if !(self.k_z > 0.0 && self.c_region > 0.0) {
            return Err(Error::Validation("K_z and the region constant must be positive".into()));
        }
        if self.a_ab * self.a_ab > self.a_a * self.a_b * (1.0 + 1e-14) {
            return Err(Error::Miscibility(format!("a_AB² = {:e} exceeds a_A a_B = {:e}", self.a_ab * self.a_ab, self.a_a * self.a_b)));
        }
        Ok(())
    }

    pub fn with_mu(self, mu_a: f64, mu_b: f64) -> Self {
        Self { mu_a, mu_b, ..self }
    }

    /// `8πā (ρā³)^{1/4} / |Λ|`.
    pub fn convexifier_coefficient(&self) -> f64 {
        if !self.convexifier {
            return 0.0;
        }
        8.0 * PI * self.a_bar * (self.rho * self.a_bar.powi(3)).powf(0.25) / self.volume
    }

    /// `C K_z ρ|Λ|`.
    pub fn region_bound(&self) -> f64 {
        self.c_region * self.k_z * self.rho * self.volume
    }

    pub fn in_region(&self, r_a: f64, r_b: f64) -> bool {
        r_a >= 0.0 && r_b >= 0.0 && r_a + r_b <= self.region_bound()
    }

    /// `C/ℓ²` with `ℓ = |Λ|^{1/3}`.
    pub fn mu_window(&self) -> f64 {
        self.c_region / self.volume.powf(2.0 / 3.0)
    }

    fn lhy_scale(&self) -> f64 {
        I_AB_PREFACTOR * 2f64.powf(-2.5) * self.volume.powf(-1.5)
    }
}

fn check_point(r_a: f64, r_b: f64) -> Result<()> {
    if !(r_a >= 0.0 && r_b >= 0.0) {
        return Err(Error::Domain(format!("occupations must be non-negative, got ({r_a}, {r_b})")));
    }
    Ok(())
}

/// `(P, M)` with `M = 4 det / P` to avoid cancellation.
fn branches(r_a: f64, r_b: f64, gp: &GrandFunctionalParams) -> (f64, f64) {
    let off = (r_a * r_b).sqrt() * gp.a_ab;
    let (lp, lm) = eigenvalues(&Matrix2::new(r_a * gp.a_a, off, off, r_b * gp.a_b));
    (2.0 * lp, (2.0 * lm).max(0.0))
}

/// `G = r_A²a_A² + 2 r_A r_B a_AB² + r_B²a_B²`.
pub fn g_occupation(r_a: f64, r_b: f64, gp: &GrandFunctionalParams) -> f64 {
    r_a * r_a * gp.a_a * gp.a_a + 2.0 * r_a * r_b * gp.a_ab * gp.a_ab + r_b * r_b * gp.a_b * gp.a_b
}

/// True at `G = 0`, where derivatives are one-sided limits.
pub fn is_degenerate(r_a: f64, r_b: f64, gp: &GrandFunctionalParams) -> bool {
    g_occupation(r_a, r_b, gp) == 0.0
}

/// `|Λ|^{-3/2} G^{5/4} I`.
pub fn lhy_term(r_a: f64, r_b: f64, gp: &GrandFunctionalParams) -> Result<f64> {
    check_point(r_a, r_b)?;
    let (p, m) = branches(r_a, r_b, gp);
    Ok(gp.lhy_scale() * (p.powf(2.5) + m.powf(2.5)))
}

pub fn grand_functional(r_a: f64, r_b: f64, gp: &GrandFunctionalParams) -> Result<f64> {
    let lhy = lhy_term(r_a, r_b, gp)?;
    Ok(gp.convexifier_coefficient() * (r_a * r_a + r_b * r_b) + lhy - gp.mu_a * r_a - gp.mu_b * r_b)
}

struct Pieces {
    u: Vector2<f64>,
    dd: Vector2<f64>,
    ddd: Matrix2<f64>,
    p: f64,
    m: f64,
}

fn pieces(r_a: f64, r_b: f64, gp: &GrandFunctionalParams) -> Pieces {
    let (aa, ab, aab) = (gp.a_a, gp.a_b, gp.a_ab);
    let diff = r_a * aa - r_b * ab;
    let aab2 = aab * aab;
    let (p, m) = branches(r_a, r_b, gp);
    Pieces {
        u: Vector2::new(aa, ab),
        dd: Vector2::new(2.0 * aa * diff + 4.0 * r_b * aab2, -2.0 * ab * diff + 4.0 * r_a * aab2),
        ddd: Matrix2::new(2.0 * aa * aa, -2.0 * aa * ab + 4.0 * aab2, -2.0 * aa * ab + 4.0 * aab2, 2.0 * ab * ab),
        p,
        m,
    }
}

/// `(5/2)(P^{3/2} − M^{3/2})/(P − M)`.
fn first_divided(sp: f64, sm: f64) -> f64 {
    2.5 * (sp * sp + sp * sm + sm * sm) / (sp + sm)
}

/// Gradient of the LHY term.
fn lhy_gradient(r_a: f64, r_b: f64, gp: &GrandFunctionalParams) -> Vector2<f64> {
    let pc = pieces(r_a, r_b, gp);
    if pc.p == 0.0 {
        return Vector2::zeros();
    }
    let (sp, sm) = (pc.p.sqrt(), pc.m.sqrt());
    let fp = 2.5 * (pc.p * sp + pc.m * sm);
    (pc.u * fp + pc.dd * first_divided(sp, sm)) * gp.lhy_scale()
}

/// Hessian of the LHY term.
pub fn lhy_hessian(r_a: f64, r_b: f64, gp: &GrandFunctionalParams) -> Result<Matrix2<f64>> {
    check_point(r_a, r_b)?;
    let pc = pieces(r_a, r_b, gp);
    if pc.p == 0.0 {
        return Ok(Matrix2::zeros());
    }
    let (sp, sm) = (pc.p.sqrt(), pc.m.sqrt());
    let s = sp + sm;
    let f2 = 3.75 * s;
    let e1 = 3.75 / s;
    let e2 = -1.25 / (s * s * s);
    let (u, dd) = (pc.u, pc.dd);
    let h = u * u.transpose() * f2
        + (u * dd.transpose() + dd * u.transpose()) * e1
        + dd * dd.transpose() * e2
        + pc.ddd * first_divided(sp, sm);
    Ok(h * gp.lhy_scale())
}

pub fn grad_f(r_a: f64, r_b: f64, gp: &GrandFunctionalParams) -> Result<Vector2<f64>> {
    check_point(r_a, r_b)?;
    let c = 2.0 * gp.convexifier_coefficient();
    Ok(lhy_gradient(r_a, r_b, gp) + Vector2::new(c * r_a - gp.mu_a, c * r_b - gp.mu_b))
}

pub fn hessian_f(r_a: f64, r_b: f64, gp: &GrandFunctionalParams) -> Result<Matrix2<f64>> {
    Ok(lhy_hessian(r_a, r_b, gp)? + Matrix2::identity() * (2.0 * gp.convexifier_coefficient()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChemicalPotentials {
    pub mu_a: f64,
    pub mu_b: f64,
    /// `C/ℓ²`.
    pub window: f64,
    /// Both potentials lie in `[0, C/ℓ²]`.
    pub within_window: bool,
}

/// Chemical potentials that make `(n, m)` a stationary point of `F`.
pub fn chemical_potentials_for(n: f64, m: f64, gp: &GrandFunctionalParams) -> Result<ChemicalPotentials> {
    let g = grad_f(n, m, &gp.with_mu(0.0, 0.0))?;
    let window = gp.mu_window();
    let ok = |x: f64| (0.0..=window).contains(&x);
    Ok(ChemicalPotentials { mu_a: g[0], mu_b: g[1], window, within_window: ok(g[0]) && ok(g[1]) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionGrid {
    pub r_max: f64,
    pub points_per_axis: usize,
}

impl RegionGrid {
    /// The regime triangle `r_A + r_B ≤ C K_z ρ|Λ|`.
    pub fn regime(gp: &GrandFunctionalParams, points_per_axis: usize) -> Self {
        Self { r_max: gp.region_bound(), points_per_axis }
    }

    pub fn points(&self) -> Vec<(f64, f64)> {
        let n = self.points_per_axis;
        if n == 0 {
            return Vec::new();
        }
        let step = if n > 1 { self.r_max / (n - 1) as f64 } else { 0.0 };
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let (ra, rb) = (i as f64 * step, j as f64 * step);
                if ra + rb <= self.r_max * (1.0 + 1e-12) {
                    out.push((ra, rb));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub points: usize,
    pub min_eigenvalue: f64,
    /// Smallest eigenvalue divided by the largest Hessian magnitude at the same point.
    pub min_scaled_eigenvalue: f64,
    pub worst_point: (f64, f64),
    pub pass: bool,
    /// `2c_conv|Λ| / (√(K_z ρ) ā^{5/2})`.
    pub dominance_ratio: f64,
    /// `2c_conv` over the largest LHY-Hessian eigenvalue magnitude on the grid.
    pub measured_dominance: f64,
}

pub fn convexity_scan(gp: &GrandFunctionalParams, grid: &RegionGrid) -> Result<ConvexityReport> {
    let pts = grid.points();
    if pts.is_empty() {
        return Err(Error::Validation("convexity scan needs a non-empty grid".into()));
    }
    let evals: Vec<Result<(f64, f64, f64, (f64, f64))>> = pts
        .par_iter()
        .map(|&(ra, rb)| {
            let h = hessian_f(ra, rb, gp)?;
            let lh = lhy_hessian(ra, rb, gp)?;
            let (_, low) = eigenvalues(&h);
            let scale = h.abs().max().max(f64::MIN_POSITIVE);
            let (lp, lm) = eigenvalues(&lh);
            Ok((low, low / scale, lp.abs().max(lm.abs()), (ra, rb)))
        })
        .collect();
    let mut min_eig = f64::INFINITY;
    let mut min_scaled = f64::INFINITY;
    let mut worst = (0.0, 0.0);
    let mut lhy_max = 0.0f64;
    for e in evals {
        let (low, scaled, lm, pt) = e?;
        if scaled < min_scaled {
            min_scaled = scaled;
            worst = pt;
        }
        min_eig = min_eig.min(low);
        lhy_max = lhy_max.max(lm);
    }
    let c2 = 2.0 * gp.convexifier_coefficient();
    let remainder = (gp.k_z * gp.rho).sqrt() * gp.a_bar.powf(2.5);
    Ok(ConvexityReport {
        points: pts.len(),
        min_eigenvalue: min_eig,
        min_scaled_eigenvalue: min_scaled,
        worst_point: worst,
        pass: min_scaled >= -1e-14,
        dominance_ratio: if remainder > 0.0 { c2 * gp.volume / remainder } else { f64::INFINITY },
        measured_dominance: if lhy_max > 0.0 { c2 / lhy_max } else { f64::INFINITY },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub rho_a: f64,
    pub rho_b: f64,
    pub e_main: f64,
    pub miscible: bool,
    /// LHY fields are withheld for immiscible points.
    pub e_lhy: Option<f64>,
    pub xi: Option<f64>,
    pub mu_plus: Option<f64>,
    pub mu_minus: Option<f64>,
    pub error_budget: f64,
}

/// Energy table over `(ρ_A, ρ_B)` points with the couplings of `template`.
pub fn phase_scan(densities: &[(f64, f64)], template: &MixtureParams, eta: f64, c: f64) -> Result<Vec<PhaseRow>> {
    densities
        .par_iter()
        .map(|&(ra, rb)| {
            if !(ra >= 0.0 && rb >= 0.0) {
                return Err(Error::Validation(format!("densities must be non-negative, got ({ra}, {rb})")));
            }
            let p = template.with_densities(ra, rb);
            let miscible = p.is_miscible();
            let budget = crate::lhy::error_budget(&p, eta, c);
            if !miscible {
                return Ok(PhaseRow {
                    rho_a: ra,
                    rho_b: rb,
                    e_main: e_main(&p),
                    miscible,
                    e_lhy: None,
                    xi: None,
                    mu_plus: None,
                    mu_minus: None,
                    error_budget: budget,
                });
            }
            let e = energy_breakdown(&p, eta, c)?;
            Ok(PhaseRow {
                rho_a: ra,
                rho_b: rb,
                e_main: e.e_main,
                miscible,
                e_lhy: Some(e.e_lhy),
                xi: Some(e.xi),
                mu_plus: Some(e.mu_plus),
                mu_minus: Some(e.mu_minus),
                error_budget: e.error_budget,
            })
        })
        .collect()
}
