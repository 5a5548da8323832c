//! Mean-field and Lee–Huang–Yang energy densities of the mixture.

use serde::{Deserialize, Serialize};

use crate::mixture::{mixing, MixtureParams};
use crate::numerics::{integrate_pieces, Tolerance};
use crate::{Error, Result};

use std::f64::consts::PI;

/// `512√π / 15 = (8π)^{5/2} · 2√2 / (15π²)`.
pub const I_AB_PREFACTOR: f64 = 60.499_758_110_908_274;

/// `4π (ρ_A²a_A + 2ρ_Aρ_B a_AB + ρ_B²a_B)`.
pub fn e_main(p: &MixtureParams) -> f64 {
    4.0 * PI * (p.rho_a * p.rho_a * p.a_a + 2.0 * p.rho_a * p.rho_b * p.a_ab + p.rho_b * p.rho_b * p.a_b)
}

pub fn i_ab_closed(mu_plus: f64, mu_minus: f64) -> f64 {
    I_AB_PREFACTOR * (mu_plus.powf(2.5) + mu_minus.powf(2.5))
}

pub fn i_ab(p: &MixtureParams) -> Result<f64> {
    let m = mixing(p)?;
    Ok(i_ab_closed(m.mu_plus, m.mu_minus))
}

/// `G(x, y) = √(x² + 2xy) − x − y + y²/(2x)`, evaluated as `y³(s+3) / (x²(s+1)³)` with `s = √(1 + 2y/x)`.
pub fn bog_g(x: f64, y: f64) -> f64 {
    if y == 0.0 {
        return 0.0;
    }
    let s = (1.0 + 2.0 * y / x).sqrt();
    y * y * y * (s + 3.0) / (x * x * (s + 1.0).powi(3))
}

/// Radial quadrature of the defining integral of `I_AB`.
pub fn i_ab_quadrature(mu_plus: f64, mu_minus: f64) -> Result<f64> {
    if mu_plus < 0.0 || mu_minus < 0.0 || ((mu_plus * mu_plus + mu_minus * mu_minus) - 1.0).abs() > 1e-10 {
        return Err(Error::Domain(format!("need μ± ≥ 0 with μ₊² + μ₋² = 1, got ({mu_plus}, {mu_minus})")));
    }
    let mut total = 0.0;
    for mu in [mu_plus, mu_minus] {
        if mu == 0.0 {
            continue;
        }
        let cutoff = 1e3 * mu_plus.max(1.0);
        let sm = mu.sqrt();
        let mut breaks = vec![0.0, 0.1 * sm, sm, 10.0 * sm, 100.0 * sm];
        breaks.retain(|b| *b < cutoff);
        breaks.push(cutoff);
        let tol = Tolerance { abs: 1e-16, rel: 1e-13 };
        let body = integrate_pieces(&mut |q: f64| 4.0 * PI * q * q * bog_g(q * q, mu), &breaks, tol)?;
        // q² g(μ, q) = μ³/(2q²) − 5μ⁴/(8q⁴) + O(q⁻⁶) past the cutoff.
        let tail = 4.0 * PI * (mu.powi(3) / (2.0 * cutoff) - 5.0 * mu.powi(4) / (24.0 * cutoff.powi(3)));
        total += body.value + tail;
    }
    Ok((8.0 * PI).powf(2.5) / (2.0 * (2.0 * PI).powi(3)) * total)
}

/// `G^{5/4} I_AB`.
pub fn e_lhy(p: &MixtureParams) -> Result<f64> {
    match mixing(p) {
        Ok(m) => Ok(m.g.powf(1.25) * i_ab_closed(m.mu_plus, m.mu_minus)),
        Err(Error::Domain(_)) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// `4π·16√2/(15√π) · Σ± (x ± √D)^{5/2}` with `x = ρ_Aa_A + ρ_Ba_B`.
pub fn e_lhy_alternative(p: &MixtureParams) -> Result<f64> {
    let (ra, rb) = (p.rho_a * p.a_a, p.rho_b * p.a_b);
    let cross = p.rho_a * p.rho_b;
    let det = cross * (p.a_a * p.a_b - p.a_ab * p.a_ab);
    let rad = (ra - rb) * (ra - rb) + 4.0 * cross * p.a_ab * p.a_ab;
    if rad < 0.0 {
        return Err(Error::Consistency(format!("negative radicand {rad:e}")));
    }
    let x = ra + rb;
    if det < -1e-14 * x * x {
        return Err(Error::Miscibility(format!("a_AB² exceeds a_A a_B (determinant {det:e})")));
    }
    let plus = x + rad.sqrt();
    let minus = if plus > 0.0 { 4.0 * det.max(0.0) / plus } else { 0.0 };
    let c = 4.0 * PI * 16.0 * 2f64.sqrt() / (15.0 * PI.sqrt());
    Ok(c * (plus.powf(2.5) + minus.powf(2.5)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub e_main: f64,
    pub e_lhy: f64,
    pub e_lhy_alternative: f64,
    pub i_ab: f64,
    pub xi: f64,
    pub mu_plus: f64,
    pub mu_minus: f64,
    /// `C (ρā)^{5/2} (ρā³)^η`.
    pub error_budget: f64,
}

impl EnergyBreakdown {
    pub fn lhy_residual(&self) -> f64 {
        (self.e_lhy - self.e_lhy_alternative).abs()
    }
}

pub fn error_budget(p: &MixtureParams, eta: f64, c: f64) -> f64 {
    let (rho, a) = (p.rho(), p.a_bar());
    c * (rho * a).powf(2.5) * (rho * a.powi(3)).powf(eta)
}

pub fn energy_breakdown(p: &MixtureParams, eta: f64, c: f64) -> Result<EnergyBreakdown> {
    let (xi, mu_plus, mu_minus) = match mixing(p) {
        Ok(m) => (m.xi, m.mu_plus, m.mu_minus),
        Err(Error::Domain(_)) => (0.0, 1.0, 0.0),
        Err(e) => return Err(e),
    };
    Ok(EnergyBreakdown {
        e_main: e_main(p),
        e_lhy: e_lhy(p)?,
        e_lhy_alternative: e_lhy_alternative(p)?,
        i_ab: i_ab_closed(mu_plus, mu_minus),
        xi,
        mu_plus,
        mu_minus,
        error_budget: error_budget(p, eta, c),
    })
}
