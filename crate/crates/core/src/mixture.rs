//! Two-species Bogoliubov algebra at a single momentum.

use std::sync::Arc;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::scattering::ScatteringSolution;
use crate::{Error, Result};

use std::f64::consts::PI;

pub type Mat2 = Matrix2<f64>;

/// Momentum-space coupling of one channel.
#[derive(Debug, Clone)]
pub enum Coupling {
    /// `ĝ(k) ≡ 8πa`.
    Constant(f64),
    Solved(Arc<ScatteringSolution>),
}

impl Coupling {
    pub fn length(&self) -> f64 {
        match self {
            Coupling::Constant(a) => *a,
            Coupling::Solved(s) => s.a(),
        }
    }

    pub fn g_hat(&self, k: f64) -> f64 {
        match self {
            Coupling::Constant(a) => 8.0 * PI * a,
            Coupling::Solved(s) => s.g_hat(k),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    A,
    B,
    AB,
}

#[derive(Debug, Clone)]
pub struct MixtureParams {
    pub rho_a: f64,
    pub rho_b: f64,
    pub a_a: f64,
    pub a_b: f64,
    pub a_ab: f64,
    couplings: [Coupling; 3],
}

fn check_nonneg(name: &str, x: f64) -> Result<()> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::Validation(format!("{name} must be finite and non-negative, got {x}")));
    }
    Ok(())
}

impl MixtureParams {
    /// Constant couplings `ĝ_# ≡ 8πa_#`.
    pub fn constant(rho_a: f64, rho_b: f64, a_a: f64, a_b: f64, a_ab: f64) -> Result<Self> {
        for (n, x) in [("ρ_A", rho_a), ("ρ_B", rho_b), ("a_A", a_a), ("a_B", a_b), ("a_AB", a_ab)] {
            check_nonneg(n, x)?;
        }
        Ok(Self {
            rho_a,
            rho_b,
            a_a,
            a_b,
            a_ab,
            couplings: [Coupling::Constant(a_a), Coupling::Constant(a_b), Coupling::Constant(a_ab)],
        })
    }

    /// Couplings taken from solved scattering problems for the A, B and AB channels.
    pub fn from_solutions(rho_a: f64, rho_b: f64, sols: [Arc<ScatteringSolution>; 3]) -> Result<Self> {
        check_nonneg("ρ_A", rho_a)?;
        check_nonneg("ρ_B", rho_b)?;
        let [sa, sb, sab] = sols;
        Ok(Self {
            rho_a,
            rho_b,
            a_a: sa.a(),
            a_b: sb.a(),
            a_ab: sab.a(),
            couplings: [Coupling::Solved(sa), Coupling::Solved(sb), Coupling::Solved(sab)],
        })
    }

    pub fn with_densities(&self, rho_a: f64, rho_b: f64) -> Self {
        Self { rho_a, rho_b, ..self.clone() }
    }

    pub fn rho(&self) -> f64 {
        self.rho_a + self.rho_b
    }

    pub fn a_bar(&self) -> f64 {
        self.a_a.max(self.a_b).max(self.a_ab)
    }

    pub fn a_min(&self) -> f64 {
        self.a_a.min(self.a_b).min(self.a_ab)
    }

    pub fn is_miscible(&self) -> bool {
        self.a_ab * self.a_ab <= self.a_a * self.a_b
    }

    pub fn coupling(&self, ch: Channel) -> &Coupling {
        match ch {
            Channel::A => &self.couplings[0],
            Channel::B => &self.couplings[1],
            Channel::AB => &self.couplings[2],
        }
    }

    pub fn has_constant_couplings(&self) -> bool {
        self.couplings.iter().all(|c| matches!(c, Coupling::Constant(_)))
    }

    /// `(ĝ_A(k), ĝ_B(k), ĝ_AB(k))`.
    pub fn g_hats(&self, k: f64) -> [f64; 3] {
        [self.couplings[0].g_hat(k), self.couplings[1].g_hat(k), self.couplings[2].g_hat(k)]
    }

    /// Solved scattering data per channel, when available.
    pub fn solutions(&self) -> Option<[&ScatteringSolution; 3]> {
        match &self.couplings {
            [Coupling::Solved(a), Coupling::Solved(b), Coupling::Solved(ab)] => Some([a, b, ab]),
            _ => None,
        }
    }
}

/// `[[ρ_A ĝ_A, √(ρ_Aρ_B) ĝ_AB], [√(ρ_Aρ_B) ĝ_AB, ρ_B ĝ_B]]` at momentum `k`.
pub fn coupling_matrix(p: &MixtureParams, k: f64) -> Mat2 {
    let [ga, gb, gab] = p.g_hats(k);
    coupling_from(p.rho_a, p.rho_b, ga, gb, gab)
}

pub fn coupling_from(rho_a: f64, rho_b: f64, ga: f64, gb: f64, gab: f64) -> Mat2 {
    let off = (rho_a * rho_b).sqrt() * gab;
    Mat2::new(rho_a * ga, off, off, rho_b * gb)
}

/// Eigenvalues `(λ₊, λ₋)` of a symmetric 2×2 matrix, the smaller one via `det/λ₊`.
pub fn eigenvalues(b: &Mat2) -> (f64, f64) {
    let (a, c, off) = (b[(0, 0)], b[(1, 1)], b[(0, 1)]);
    let t = a + c;
    let root = ((a - c) * (a - c) + 4.0 * off * off).sqrt();
    let det = a * c - off * off;
    if t >= 0.0 {
        let lp = 0.5 * (t + root);
        let lm = if lp != 0.0 { det / lp } else { 0.0 };
        (lp, lm)
    } else {
        let lm = 0.5 * (t - root);
        (det / lm, lm)
    }
}

pub fn lambda_pm(p: &MixtureParams, k: f64) -> (f64, f64) {
    eigenvalues(&coupling_matrix(p, k))
}

/// Orthogonal `U` whose first column is the λ₊ eigenvector, so that `B = U diag(λ₊, λ₋) Uᵀ`.
pub fn rotation(b: &Mat2) -> Mat2 {
    let (a, c, off) = (b[(0, 0)], b[(1, 1)], b[(0, 1)]);
    if off == 0.0 {
        return if a >= c { Mat2::identity() } else { Mat2::new(0.0, 1.0, 1.0, 0.0) };
    }
    let theta = 0.5 * (2.0 * off).atan2(a - c);
    let (s, co) = theta.sin_cos();
    Mat2::new(co, -s, s, co)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BogoliubovMode {
    pub k: f64,
    pub tau: f64,
    pub b: Mat2,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub u: Mat2,
    pub d_diag: [f64; 2],
    pub beta_diag: [f64; 2],
    pub alpha: Mat2,
    pub gamma: Mat2,
    /// Set when λ₋ < 0, which constant couplings never produce.
    pub negative_branch: bool,
}

impl BogoliubovMode {
    pub fn d_matrix(&self) -> Mat2 {
        self.u * Mat2::from_diagonal(&self.d_diag.into()) * self.u.transpose()
    }

    pub fn beta_matrix(&self) -> Mat2 {
        self.u * Mat2::from_diagonal(&self.beta_diag.into()) * self.u.transpose()
    }

    /// Minimum of `tr((τ + B)γ) + tr(Bα)` over quasi-free data of this mode.
    pub fn minimum(&self) -> f64 {
        mode_minimum(self.tau, self.lambda_plus) + mode_minimum(self.tau, self.lambda_minus)
    }
}

/// `½(√(τ² + 2λτ) − τ − λ)` in cancellation-free form.
pub fn mode_minimum(tau: f64, lambda: f64) -> f64 {
    let s = (tau * tau + 2.0 * lambda * tau).sqrt();
    -lambda * lambda / (2.0 * (tau + lambda + s))
}

pub fn diagonalize_mode(p: &MixtureParams, k: f64, tau: f64) -> Result<BogoliubovMode> {
    diagonalize_coupling(coupling_matrix(p, k), k, tau)
}

/// Diagonal dispersion, pairing and explicit minimizers for coupling `b` and kinetic value `tau`.
pub fn diagonalize_coupling(b: Mat2, k: f64, tau: f64) -> Result<BogoliubovMode> {
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("kinetic symbol must be positive, got τ = {tau} at k = {k}")));
    }
    let (lp, lm) = eigenvalues(&b);
    let u = rotation(&b);
    let mut d_diag = [0.0; 2];
    let mut beta_diag = [0.0; 2];
    for (i, lam) in [lp, lm].into_iter().enumerate() {
        let rad = tau * tau + 2.0 * lam * tau;
        if rad < 0.0 {
            return Err(Error::Regime(format!("mode k = {k}: τ² + 2λτ = {rad:e} < 0 (τ = {tau:e}, λ = {lam:e})")));
        }
        let denom = tau + lam + rad.sqrt();
        d_diag[i] = 0.5 * denom;
        beta_diag[i] = lam / denom;
    }
    let mut mode = BogoliubovMode {
        k,
        tau,
        b,
        lambda_plus: lp,
        lambda_minus: lm,
        u,
        d_diag,
        beta_diag,
        alpha: Mat2::zeros(),
        gamma: Mat2::zeros(),
        negative_branch: lm < 0.0,
    };
    let (alpha, gamma) = explicit_minimizers(&mode)?;
    mode.alpha = alpha;
    mode.gamma = gamma;
    Ok(mode)
}

/// `α = −(1 − β²)⁻¹β`, `γ = (1 − β²)⁻¹β²`, built in the eigenframe and rotated back.
pub fn explicit_minimizers(mode: &BogoliubovMode) -> Result<(Mat2, Mat2)> {
    let mut ad = [0.0; 2];
    let mut gd = [0.0; 2];
    for i in 0..2 {
        let b = mode.beta_diag[i];
        if b.abs() >= 1.0 {
            return Err(Error::Regime(format!("mode k = {}: |β| = {} ≥ 1", mode.k, b.abs())));
        }
        let one_minus = (1.0 - b) * (1.0 + b);
        ad[i] = -b / one_minus;
        gd[i] = b * b / one_minus;
    }
    let u = mode.u;
    let alpha = u * Mat2::from_diagonal(&ad.into()) * u.transpose();
    let gamma = u * Mat2::from_diagonal(&gd.into()) * u.transpose();
    Ok((symmetrize(alpha), symmetrize(gamma)))
}

fn symmetrize(m: Mat2) -> Mat2 {
    let off = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    Mat2::new(m[(0, 0)], off, off, m[(1, 1)])
}

/// Mixing scalars of the scattering-length matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mixing {
    pub xi: f64,
    pub mu_plus: f64,
    pub mu_minus: f64,
    /// `ρ_A²a_A² + 2ρ_Aρ_B a_AB² + ρ_B²a_B²`.
    pub g: f64,
}

const XI_SLACK: f64 = 1e-14;

/// `ξ`, `μ±` from densities and lengths, avoiding the `1 − ξ` cancellation.
pub fn mixing(p: &MixtureParams) -> Result<Mixing> {
    let (ra, rb) = (p.rho_a * p.a_a, p.rho_b * p.a_b);
    let cross = p.rho_a * p.rho_b;
    let g = ra * ra + 2.0 * cross * p.a_ab * p.a_ab + rb * rb;
    if !(g > 0.0) {
        return Err(Error::Domain("ξ is undefined when ρ_A²a_A² + 2ρ_Aρ_Ba_AB² + ρ_B²a_B² = 0".into()));
    }
    let det = cross * (p.a_a * p.a_b - p.a_ab * p.a_ab);
    let xi = 2.0 * det / g;
    if xi < -XI_SLACK {
        return Err(Error::Miscibility(format!(
            "a_AB² = {:e} exceeds a_A a_B = {:e} (ξ = {xi:e})",
            p.a_ab * p.a_ab,
            p.a_a * p.a_b
        )));
    }
    let det = det.max(0.0);
    let x = ra + rb;
    let root = ((ra - rb) * (ra - rb) + 4.0 * cross * p.a_ab * p.a_ab).sqrt();
    let sg = g.sqrt();
    let mu_plus = 0.5 * (x + root) / sg;
    let mu_minus = if det > 0.0 { 2.0 * det / ((x + root) * sg) } else { 0.0 };
    Ok(Mixing { xi: xi.clamp(0.0, 1.0), mu_plus, mu_minus, g })
}

pub fn xi_ab(p: &MixtureParams) -> Result<f64> {
    mixing(p).map(|m| m.xi)
}

/// `μ± = ½(√(1+ξ) ± √(1−ξ))`, with `μ₋ = ξ/(2μ₊)`.
pub fn mu_pm(xi: f64) -> Result<(f64, f64)> {
    if !(-XI_SLACK..=1.0 + XI_SLACK).contains(&xi) {
        return Err(Error::Miscibility(format!("ξ = {xi} lies outside [0, 1]")));
    }
    let xi = xi.clamp(0.0, 1.0);
    let mp = 0.5 * ((1.0 + xi).sqrt() + (1.0 - xi).sqrt());
    Ok((mp, xi / (2.0 * mp)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn one_species_matrix_and_eigenvalues() {
        let p = MixtureParams::constant(0.3, 0.0, 1.2, 0.7, 0.5).unwrap();
        let b = coupling_matrix(&p, 1.0);
        assert_eq!(b, Mat2::new(0.3 * 8.0 * PI * 1.2, 0.0, 0.0, 0.0));
        assert_eq!(lambda_pm(&p, 1.0), (b[(0, 0)], 0.0));
    }

    #[test]
    fn symmetric_rank_one_case() {
        let (rho, a) = (0.2, 0.8);
        let p = MixtureParams::constant(rho / 2.0, rho / 2.0, a, a, a).unwrap();
        let g = 8.0 * PI * a;
        let b = coupling_matrix(&p, 0.0);
        assert_relative_eq!(b, Mat2::repeat(rho * g / 2.0), max_relative = 1e-15);
        let (lp, lm) = lambda_pm(&p, 0.0);
        assert_relative_eq!(lp, rho * g, max_relative = 1e-15);
        assert!(lm.abs() < 1e-15 * lp);
    }

    #[test]
    fn free_mode_is_identity() {
        let m = diagonalize_coupling(Mat2::zeros(), 1.0, 2.0).unwrap();
        assert_eq!(m.d_diag, [2.0, 2.0]);
        assert_eq!(m.beta_diag, [0.0, 0.0]);
        assert_eq!(m.alpha, Mat2::zeros());
        assert_eq!(m.gamma, Mat2::zeros());
    }

    #[test]
    fn one_species_dispersion() {
        let p = MixtureParams::constant(0.05, 0.0, 1.0, 1.0, 0.0).unwrap();
        let k: f64 = 0.7;
        let m = diagonalize_mode(&p, k, k * k).unwrap();
        let l = 0.05 * 8.0 * PI;
        let k2 = k * k;
        assert_relative_eq!(m.d_diag[0], 0.5 * (k2 + l + (k2 * k2 + 2.0 * l * k2).sqrt()), max_relative = 1e-15);
    }

    #[test]
    fn high_momentum_asymptotics() {
        let p = MixtureParams::constant(1e-3, 0.0, 1.0, 0.0, 0.0).unwrap();
        let k: f64 = 20.0;
        let m = diagonalize_mode(&p, k, k * k).unwrap();
        let l = 1e-3 * 8.0 * PI;
        assert_relative_eq!(m.gamma[(0, 0)], l * l / (4.0 * k.powi(4)), max_relative = 5e-4);
        assert_relative_eq!(m.alpha[(0, 0)], -l / (2.0 * k * k), max_relative = 1e-4);
    }

    #[test]
    fn degenerate_rotation_choices() {
        assert_eq!(rotation(&Mat2::new(2.0, 0.0, 0.0, 1.0)), Mat2::identity());
        assert_eq!(rotation(&Mat2::new(1.0, 0.0, 0.0, 2.0)), Mat2::new(0.0, 1.0, 1.0, 0.0));
        assert_eq!(rotation(&Mat2::new(1.0, 0.0, 0.0, 1.0)), Mat2::identity());
    }

    #[test]
    fn regime_errors() {
        assert!(matches!(diagonalize_coupling(Mat2::identity(), 1.0, 0.0), Err(Error::Domain(_))));
        let b = Mat2::new(-1.0, 0.0, 0.0, 0.0);
        assert!(matches!(diagonalize_coupling(b, 1.0, 1.0), Err(Error::Regime(_))));
        let m = diagonalize_coupling(Mat2::new(1.0, 0.0, 0.0, -0.2), 1.0, 1.0).unwrap();
        assert!(m.negative_branch);
    }

    #[test]
    fn mixing_special_cases() {
        let p = MixtureParams::constant(0.4, 0.0, 1.0, 2.0, 0.5).unwrap();
        let m = mixing(&p).unwrap();
        assert_eq!((m.xi, m.mu_plus, m.mu_minus), (0.0, 1.0, 0.0));
        let p = MixtureParams::constant(0.4, 0.1, 1.0, 4.0, 2.0).unwrap();
        let m = mixing(&p).unwrap();
        assert_eq!(m.xi, 0.0);
        assert_relative_eq!(m.mu_plus, 1.0, max_relative = 1e-15);
        // a_AB = 0 and ρ_A a_A = ρ_B a_B: ξ = 1, μ± = 1/√2
        let p = MixtureParams::constant(0.2, 0.1, 1.0, 2.0, 0.0).unwrap();
        let m = mixing(&p).unwrap();
        assert_relative_eq!(m.xi, 1.0, max_relative = 1e-15);
        assert_relative_eq!(m.mu_plus, 0.5f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(m.mu_minus, 0.5f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(m.mu_plus.powf(2.5) + m.mu_minus.powf(2.5), 2f64.powf(-0.25), max_relative = 1e-15);
    }

    #[test]
    fn mu_from_xi_agrees_with_direct_form() {
        for i in 0..=99 {
            let xi = i as f64 / 100.0;
            let (mp, mm) = mu_pm(xi).unwrap();
            assert_relative_eq!(mm, 0.5 * ((1.0 + xi).sqrt() - (1.0 - xi).sqrt()), max_relative = 1e-13, epsilon = 1e-16);
            assert!((mp * mp + mm * mm - 1.0).abs() <= 1e-14);
        }
        assert!(matches!(mu_pm(1.1), Err(Error::Miscibility(_))));
    }

    #[test]
    fn immiscible_lengths_are_rejected() {
        let p = MixtureParams::constant(0.1, 0.1, 1.0, 1.0, 1.5).unwrap();
        assert!(matches!(mixing(&p), Err(Error::Miscibility(_))));
        assert!(!p.is_miscible());
    }
}
