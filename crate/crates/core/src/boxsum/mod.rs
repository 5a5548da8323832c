//! Momentum-lattice sums for periodic and Neumann boxes, gapped kinetic
//! symbols and sum-versus-integral diagnostics.

mod lattice;

pub use lattice::*;

use serde::{Deserialize, Serialize};

use crate::lhy::{bog_g, e_lhy_alternative};
use crate::mixture::{eigenvalues, MixtureParams, coupling_matrix};
use crate::numerics::{integrate_pieces, loglog_slope, Tolerance};
use crate::scattering::ScatteringSolution;
use crate::{Error, Result};

use std::f64::consts::PI;

/// Box size and the dimensionless parameters of the localized regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapConfig {
    pub ell: f64,
    pub k_ell: f64,
    pub k_h: f64,
    pub k_z: f64,
    /// Bound on the number of excited particles.
    pub m_cal: f64,
    pub eta: f64,
    pub nu: f64,
    pub big_m: f64,
    /// Subtract `π/(2ℓ²)` from every non-zero mode.
    pub low_gap: bool,
    /// Subtract `K_H/ℓ²` above `|k| = K_H/ℓ`.
    pub high_gap: bool,
}

impl GapConfig {
    /// Parameter choices of the localized lower-bound regime at density `ρā³`.
    pub fn regime(rho_a3: f64, a_bar: f64, eta: f64, c: f64) -> Result<Self> {
        if !(rho_a3 > 0.0 && rho_a3 < 1.0) || !(a_bar > 0.0) || !(eta >= 0.0) || !(c > 0.0) {
            return Err(Error::Parameter(format!(
                "regime needs 0 < ρā³ < 1, ā > 0, η ≥ 0, C > 0 (got {rho_a3}, {a_bar}, {eta}, {c})"
            )));
        }
        let rho = rho_a3 / a_bar.powi(3);
        let k_ell = rho_a3.powf(-2.0 * eta) / (1000.0 * c);
        let ell = k_ell / (rho * a_bar).sqrt();
        let cfg = Self {
            ell,
            k_ell,
            k_h: rho_a3.powf(-1.0 / 250.0 - 3.0 / 10000.0),
            k_z: rho_a3.powf(-1.0 / 10000.0),
            m_cal: rho * ell.powi(3) * rho_a3.powf(1.0 / 50.0),
            eta,
            nu: 1.0 / 10000.0,
            big_m: 15000.0,
            low_gap: true,
            high_gap: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Regime parameters with the box side replaced.
    pub fn with_side(self, ell: f64) -> Result<Self> {
        let cfg = Self { ell, ..self };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("ℓ", self.ell),
            ("K_ℓ", self.k_ell),
            ("K_H", self.k_h),
            ("K_z", self.k_z),
            ("𝓜", self.m_cal),
            ("ν", self.nu),
            ("M", self.big_m),
        ];
        for (name, x) in fields {
            if !(x > 0.0) || !x.is_finite() {
                return Err(Error::Parameter(format!("{name} must be positive, got {x}")));
            }
        }
        if !(self.eta >= 0.0) {
            return Err(Error::Parameter(format!("η must be non-negative, got {}", self.eta)));
        }
        if self.high_gap && self.k_h < 1.0 {
            return Err(Error::Parameter(format!("the high-momentum gap needs K_H ≥ 1, got {}", self.k_h)));
        }
        Ok(())
    }

    /// `|k|` above which the high-momentum gap applies.
    pub fn high_threshold(&self) -> f64 {
        self.k_h / self.ell
    }
}

/// `k²`, or `k² − π/(2ℓ²)[k ≠ 0] − K_H/ℓ²[|k| > K_H/ℓ]` with the enabled gaps.
pub fn tau_symbol(k: f64, cfg: &GapConfig, gapped: bool) -> f64 {
    let mut t = k * k;
    if gapped && k != 0.0 {
        let l2 = cfg.ell * cfg.ell;
        if cfg.low_gap {
            t -= PI / (2.0 * l2);
        }
        if cfg.high_gap && k > cfg.high_threshold() {
            t -= cfg.k_h / l2;
        }
    }
    t
}

/// Smallest gapped symbol over the non-zero modes of `(π/ℓ)ℕ₀³`.
pub fn min_gapped_tau(cfg: &GapConfig) -> Result<f64> {
    cfg.validate()?;
    let kind = LatticeKind::Neumann;
    let reach = cfg.high_threshold() + 3.0 * kind.spacing(cfg.ell);
    let lat = MomentumLattice::new(kind, cfg.ell, reach)?;
    let mut low = f64::INFINITY;
    let mut high = f64::INFINITY;
    for s in lat.shells() {
        let t = tau_symbol(s.k, cfg, true);
        if s.k > cfg.high_threshold() {
            high = high.min(t);
        } else {
            low = low.min(t);
        }
    }
    Ok(low.min(high))
}

/// Fails with a regime error unless every gapped mode keeps `τ > 0`.
pub fn check_positivity(cfg: &GapConfig) -> Result<f64> {
    let m = min_gapped_tau(cfg)?;
    if !(m > 0.0) {
        return Err(Error::Regime(format!("gapped kinetic symbol reaches {m:e} ≤ 0 (ℓ = {}, K_H = {})", cfg.ell, cfg.k_h)));
    }
    Ok(m)
}

/// Kinetic symbol used by the lattice sums.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub enum TauVariant {
    #[default]
    Free,
    Gapped(GapConfig),
}

impl TauVariant {
    pub fn tau(&self, k: f64) -> f64 {
        match self {
            TauVariant::Free => k * k,
            TauVariant::Gapped(cfg) => tau_symbol(k, cfg, true),
        }
    }

    fn discontinuities(&self) -> Vec<f64> {
        match self {
            TauVariant::Gapped(cfg) if cfg.high_gap => vec![cfg.high_threshold()],
            _ => vec![],
        }
    }
}

/// `½[G(τ, λ₊) + G(τ, λ₋)]` at momentum `k`.
pub fn s0_summand(p: &MixtureParams, k: f64, tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::Regime(format!("kinetic symbol τ = {tau:e} ≤ 0 at |k| = {k}")));
    }
    let (lp, lm) = eigenvalues(&coupling_matrix(p, k));
    if lm < -0.5 * tau {
        return Err(Error::Domain(format!("λ₋ = {lm:e} < −τ/2 = {:e} at |k| = {k}", -0.5 * tau)));
    }
    Ok(0.5 * (bog_g(tau, lp) + bog_g(tau, lm)))
}

/// The two pieces `(𝒮, Z₀)` of the explicit sum over the enumerated shells.
pub fn sum_s_and_z0(p: &MixtureParams, lat: &MomentumLattice, tau: &TauVariant) -> Result<(f64, f64)> {
    let s = lat.try_sum(|k| {
        let t = tau.tau(k);
        s0_summand(p, k, t)?;
        let (lp, lm) = eigenvalues(&coupling_matrix(p, k));
        let part = |l: f64| (t * t + 2.0 * l * t).sqrt() - t - l;
        Ok(0.5 * (part(lp) + part(lm)))
    })?;
    let z = lat.try_sum(|k| {
        let t = tau.tau(k);
        let (lp, lm) = eigenvalues(&coupling_matrix(p, k));
        Ok((lp * lp + lm * lm) / (4.0 * t))
    })?;
    Ok((s, z))
}

/// `𝒮₀` over the enumerated shells only.
pub fn sum_s0_truncated(p: &MixtureParams, lat: &MomentumLattice, tau: &TauVariant) -> Result<f64> {
    lat.try_sum(|k| s0_summand(p, k, tau.tau(k)))
}

fn coupling_scales(p: &MixtureParams) -> (f64, Vec<f64>, Option<(f64, f64)>) {
    let (lp, _) = eigenvalues(&coupling_matrix(p, 0.0));
    let root = lp.abs().sqrt();
    let mut breaks = Vec::new();
    if root > 0.0 {
        for m in [0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0] {
            breaks.push(m * root);
        }
    }
    let radii = p.solutions().map(|s| {
        let rs: Vec<f64> = s.iter().map(|x| x.support_radius()).collect();
        (rs.iter().copied().fold(f64::INFINITY, f64::min), rs.iter().copied().fold(0.0, f64::max))
    });
    (root, breaks, radii)
}

/// Upper range and breakpoints for the `𝒮₀` continuum.
fn s0_tail(p: &MixtureParams, tau: &TauVariant) -> ContinuumTail {
    let (root, mut breaks, radii) = coupling_scales(p);
    let k_hi = match radii {
        Some((r_min, r_max)) => {
            let hi = (100.0 / r_min).max(1e2 * root);
            let step = PI / r_max;
            let n = ((hi / step) as usize).min(400);
            breaks.extend((1..=n).map(|j| j as f64 * step));
            hi
        }
        None => 1e4 * root.max(f64::MIN_POSITIVE),
    };
    ContinuumTail { k_hi, decay_power: Some(4.0), breaks, discontinuities: tau.discontinuities() }
}

/// `𝒮₀` summed over every non-zero lattice mode.
pub fn sum_s0(p: &MixtureParams, lat: &MomentumLattice, tau: &TauVariant) -> Result<f64> {
    if p.rho() == 0.0 {
        return Ok(0.0);
    }
    let tail = s0_tail(p, tau);
    Ok(lattice_sum(lat, |k| s0_summand(p, k, tau.tau(k)), &tail)?.value)
}

/// Thermodynamic-limit density `(2π)^{-3} ∫ ½[G(k², λ₊) + G(k², λ₋)] dk`.
pub fn s0_integral(p: &MixtureParams) -> Result<f64> {
    if p.has_constant_couplings() {
        return e_lhy_alternative(p);
    }
    s0_quadrature(p)
}

/// Radial quadrature of the `𝒮₀` density, valid for any couplings.
pub fn s0_quadrature(p: &MixtureParams) -> Result<f64> {
    if p.rho() == 0.0 {
        return Ok(0.0);
    }
    let tail = s0_tail(p, &TauVariant::Free);
    let mut breaks = vec![0.0];
    breaks.extend(tail.breaks.iter().copied().filter(|b| *b < tail.k_hi));
    breaks.push(tail.k_hi);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut failure = None;
    let mut f = |k: f64| {
        if k == 0.0 {
            return 0.0;
        }
        match s0_summand(p, k, k * k) {
            Ok(v) => 4.0 * PI * k * k * v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    };
    let body = integrate_pieces(&mut f, &breaks, Tolerance { abs: 0.0, rel: 1e-12 })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let k = tail.k_hi;
    let closure = 4.0 * PI * k.powi(3) * s0_summand(p, k, k * k)?;
    Ok((body.value + closure) / (2.0 * PI).powi(3))
}

/// Lattice reconstruction of `ĝω(0)` and its deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GOmegaReport {
    pub ell: f64,
    pub value: f64,
    pub reference: f64,
    pub difference: f64,
    /// `|value − reference| · ℓ / a²`.
    pub scaled: f64,
}

fn g_omega_tail(sol: &ScatteringSolution, tau: &TauVariant) -> ContinuumTail {
    let r = sol.support_radius();
    let step = PI / r;
    ContinuumTail {
        k_hi: 200.0 / r,
        decay_power: Some(6.0),
        breaks: (1..=64).map(|j| j as f64 * step).collect(),
        discontinuities: tau.discontinuities(),
    }
}

/// `(1/(8ℓ³)) Σ_{(π/ℓ)ℤ³∖0} ĝ(k)²/(2τ(k))`.
pub fn g_omega_lattice(sol: &ScatteringSolution, ell: f64, tau: &TauVariant) -> Result<GOmegaReport> {
    let reference = sol.g_omega_moment();
    let a = sol.a();
    let value = if a == 0.0 {
        0.0
    } else {
        let lat = match tau {
            TauVariant::Gapped(cfg) => {
                let span = (cfg.high_threshold() / LatticeKind::NeumannSigned.spacing(ell)).ceil() as u64 + DEFAULT_SPAN;
                MomentumLattice::new(LatticeKind::NeumannSigned, ell, span as f64 * PI / ell)?
            }
            TauVariant::Free => MomentumLattice::for_sums(LatticeKind::NeumannSigned, ell)?,
        };
        let summand = |k: f64| {
            let t = tau.tau(k);
            if !(t > 0.0) {
                return Err(Error::Regime(format!("kinetic symbol τ = {t:e} ≤ 0 at |k| = {k}")));
            }
            let g = sol.g_hat(k);
            Ok(g * g / (2.0 * t))
        };
        lattice_sum(&lat, summand, &g_omega_tail(sol, tau))?.value / (8.0 * ell.powi(3))
    };
    let difference = value - reference;
    let scaled = if a == 0.0 { 0.0 } else { difference.abs() * ell / (a * a) };
    Ok(GOmegaReport { ell, value, reference, difference, scaled })
}

/// Contribution of the low momenta `0 < |k| ≤ K_H/ℓ` to the lattice `G_ω`.
pub fn g_omega_low_momenta(sol: &ScatteringSolution, cfg: &GapConfig, gapped: bool) -> Result<f64> {
    let lat = MomentumLattice::new(LatticeKind::NeumannSigned, cfg.ell, cfg.high_threshold())?;
    let s = lat.try_sum(|k| {
        let t = tau_symbol(k, cfg, gapped);
        if !(t > 0.0) {
            return Err(Error::Regime(format!("kinetic symbol τ = {t:e} ≤ 0 at |k| = {k}")));
        }
        let g = sol.g_hat(k);
        Ok(g * g / (2.0 * t))
    })?;
    Ok(s / (8.0 * cfg.ell.powi(3)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub side: f64,
    /// `𝒮₀/|Λ|`.
    pub sum: f64,
    pub integral: f64,
    /// `(sum − integral)/integral`.
    pub gap: f64,
    /// Local order `−Δlog|gap|/Δlog L` from the previous row.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub kind: LatticeKind,
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares order over all rows; absent when the gap vanishes.
    pub fitted_order: Option<f64>,
}

/// `𝒮₀/|Λ|` against its integral over a sequence of box sides.
pub fn sum_vs_integral_report(p: &MixtureParams, kind: LatticeKind, sides: &[f64]) -> Result<ConvergenceTable> {
    if sides.len() < 3 {
        return Err(Error::Validation(format!("a convergence table needs at least 3 box sizes, got {}", sides.len())));
    }
    let integral = s0_integral(p)?;
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(sides.len());
    for &side in sides {
        let lat = MomentumLattice::for_sums(kind, side)?;
        let sum = sum_s0(p, &lat, &TauVariant::Free)? / lat.volume();
        let gap = if integral != 0.0 { (sum - integral) / integral } else { sum };
        let order = rows.last().and_then(|prev| {
            (prev.gap != 0.0 && gap != 0.0).then(|| -(gap.abs() / prev.gap.abs()).ln() / (side / prev.side).ln())
        });
        rows.push(ConvergenceRow { side, sum, integral, gap, order });
    }
    let fitted_order = if rows.iter().all(|r| r.gap != 0.0) {
        let xs: Vec<f64> = rows.iter().map(|r| r.side).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.gap.abs()).collect();
        Some(-loglog_slope(&xs, &ys)?)
    } else {
        None
    };
    Ok(ConvergenceTable { kind, rows, fitted_order })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lhy::I_AB_PREFACTOR;
    use crate::potentials::{make_potential, PotentialDescriptor};
    use crate::scattering::{solve_scattering, GridConfig};
    use approx::assert_relative_eq;

    fn one_species(rho_a3: f64) -> MixtureParams {
        MixtureParams::constant(rho_a3, 0.0, 1.0, 0.0, 0.0).unwrap()
    }

    fn square_well() -> ScatteringSolution {
        let v = make_potential(&PotentialDescriptor::square_well(2.0, 1.0)).unwrap();
        solve_scattering(&v, &GridConfig::default()).unwrap()
    }

    #[test]
    fn tau_variants() {
        let cfg = GapConfig::regime(1e-6, 1.0, 1.0 / 2000.0, 1e-3).unwrap();
        assert_eq!(tau_symbol(0.0, &cfg, true), 0.0);
        assert_eq!(tau_symbol(0.0, &cfg, false), 0.0);
        let k = 2.0 * cfg.k_h / cfg.ell;
        let l2 = cfg.ell * cfg.ell;
        assert_relative_eq!(tau_symbol(k, &cfg, true), k * k - PI / (2.0 * l2) - cfg.k_h / l2, max_relative = 1e-14);
        assert_eq!(tau_symbol(k, &cfg, false), k * k);
    }

    #[test]
    fn regime_parameters() {
        let cfg = GapConfig::regime(1e-6, 1.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(cfg.ell, 1e-3 / 1e-3, max_relative = 1e-12);
        assert_relative_eq!(cfg.k_h, 1e-6f64.powf(-0.0043), max_relative = 1e-12);
        assert_relative_eq!(cfg.k_z, 1e-6f64.powf(-1e-4), max_relative = 1e-12);
        assert!(check_positivity(&cfg).unwrap() > 0.0);
        assert!(GapConfig::regime(1e-6, 1.0, -1.0, 1.0).is_err());
        assert!(GapConfig { k_h: 0.5, ..cfg }.validate().is_err());
        assert!(GapConfig { k_h: 0.5, high_gap: false, ..cfg }.validate().is_ok());
    }

    #[test]
    fn non_positive_symbol_is_a_regime_error() {
        let p = one_species(1e-6);
        assert!(matches!(s0_summand(&p, 0.1, 0.0), Err(Error::Regime(_))));
        let strong = MixtureParams::constant(1.0, 1.0, 1.0, 1.0, 5.0).unwrap();
        assert!(matches!(s0_summand(&strong, 0.1, 0.01), Err(Error::Domain(_))));
        // Neumann modes keep k² ≥ π²/ℓ², so even large K_H leaves τ positive.
        let cfg = GapConfig::regime(1e-6, 1.0, 0.0, 1.0).unwrap();
        assert!(check_positivity(&GapConfig { k_h: 40.0, ..cfg }).unwrap() > 0.0);
    }

    #[test]
    fn empty_mixture_sums_to_zero() {
        let p = MixtureParams::constant(0.0, 0.0, 1.0, 1.0, 0.5).unwrap();
        let lat = MomentumLattice::for_sums(LatticeKind::Periodic, 100.0).unwrap();
        assert_eq!(sum_s0(&p, &lat, &TauVariant::Free).unwrap(), 0.0);
    }

    #[test]
    fn s_plus_z0_is_s0() {
        let p = MixtureParams::constant(2e-6, 1e-6, 1.0, 0.8, 0.5).unwrap();
        let lat = MomentumLattice::new(LatticeKind::Periodic, 300.0, 0.5).unwrap();
        let (s, z) = sum_s_and_z0(&p, &lat, &TauVariant::Free).unwrap();
        let s0 = sum_s0_truncated(&p, &lat, &TauVariant::Free).unwrap();
        assert_relative_eq!(s + z, s0, max_relative = 1e-7);
    }

    #[test]
    fn quadrature_reproduces_closed_form() {
        for p in [one_species(1e-6), MixtureParams::constant(3e-6, 1e-6, 1.0, 0.7, 0.4).unwrap()] {
            assert_relative_eq!(s0_quadrature(&p).unwrap(), s0_integral(&p).unwrap(), max_relative = 1e-9);
        }
        let rho_a = 1e-6f64;
        assert_relative_eq!(s0_integral(&one_species(rho_a)).unwrap(), rho_a.powf(2.5) * I_AB_PREFACTOR, max_relative = 1e-12);
    }

    #[test]
    fn large_box_approaches_integral() {
        let p = one_species(1e-6);
        let lat = MomentumLattice::for_sums(LatticeKind::Periodic, 16000.0).unwrap();
        let s = sum_s0(&p, &lat, &TauVariant::Free).unwrap() / lat.volume();
        let rel = (s - s0_integral(&p).unwrap()) / s0_integral(&p).unwrap();
        assert!(rel < 0.0 && rel.abs() < 0.05, "gap {rel}");
    }

    #[test]
    fn doubling_large_boxes_halves_the_gap() {
        let t = sum_vs_integral_report(&one_species(1e-6), LatticeKind::Periodic, &[8000.0, 16000.0, 32000.0]).unwrap();
        for r in &t.rows[1..] {
            let o = r.order.unwrap();
            assert!((o - 1.0).abs() < 0.15, "order {o} at L = {}", r.side);
        }
    }

    #[test]
    fn zero_coupling_has_zero_gap() {
        let p = MixtureParams::constant(1e-6, 0.0, 0.0, 0.0, 0.0).unwrap();
        let t = sum_vs_integral_report(&p, LatticeKind::Periodic, &[100.0, 200.0, 400.0]).unwrap();
        assert!(t.rows.iter().all(|r| r.gap == 0.0 && r.sum == 0.0));
        assert!(t.fitted_order.is_none());
        assert!(matches!(sum_vs_integral_report(&p, LatticeKind::Periodic, &[1.0, 2.0]), Err(Error::Validation(_))));
    }

    #[test]
    fn symmetric_mixture_gap_shrinks() {
        // ξ = 1: a_AB = 0 with equal species.
        let p = MixtureParams::constant(5e-7, 5e-7, 1.0, 1.0, 0.0).unwrap();
        let t = sum_vs_integral_report(&p, LatticeKind::Periodic, &[250.0, 500.0, 1000.0, 2000.0]).unwrap();
        assert!(t.rows.windows(2).all(|w| w[1].gap.abs() < w[0].gap.abs()));
    }

    #[test]
    fn neumann_and_periodic_share_the_limit() {
        let p = one_species(1e-6);
        let side = 32000.0;
        let per = sum_vs_integral_report(&p, LatticeKind::Periodic, &[side / 2.0, side, 2.0 * side]).unwrap();
        let neu = sum_vs_integral_report(&p, LatticeKind::Neumann, &[side / 2.0, side, 2.0 * side]).unwrap();
        for t in [&per, &neu] {
            assert!(t.rows.windows(2).all(|w| w[1].gap.abs() < w[0].gap.abs()), "{t:?}");
        }
        let (a, b) = (per.rows.last().unwrap(), neu.rows.last().unwrap());
        assert!((b.sum / a.sum - 1.0).abs() < 0.1, "{a:?} {b:?}");
    }

    #[test]
    fn g_omega_free_potential_is_zero() {
        let v = crate::potentials::RadialPotential::zero(1.0);
        let s = solve_scattering(&v, &GridConfig::default()).unwrap();
        let r = g_omega_lattice(&s, 500.0, &TauVariant::Free).unwrap();
        assert_eq!((r.value, r.scaled), (0.0, 0.0));
    }

    #[test]
    fn g_omega_scaled_deviation_is_flat() {
        let s = square_well();
        let scaled: Vec<f64> = [250.0, 500.0, 1000.0, 2000.0]
            .iter()
            .map(|&l| g_omega_lattice(&s, l, &TauVariant::Free).unwrap().scaled)
            .collect();
        let (lo, hi) = scaled.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
        assert!(hi / lo < 1.05, "{scaled:?}");
    }

    #[test]
    fn low_momentum_part_has_the_bound_shape() {
        let s = square_well();
        let a2 = s.a() * s.a();
        // The regime K_H stays below π at accessible densities, leaving no low modes,
        // so the shape is probed with a larger threshold.
        let base = GapConfig { k_h: 20.0, ..GapConfig::regime(1e-6, s.a(), 0.0, 1e-3).unwrap() };
        let ratios: Vec<f64> = [250.0, 1000.0]
            .iter()
            .map(|&l| {
                let cfg = base.with_side(l).unwrap();
                g_omega_low_momenta(&s, &cfg, false).unwrap() / (cfg.k_h * a2 / l)
            })
            .collect();
        assert!(ratios.iter().all(|r| *r > 0.0 && *r < 20.0), "{ratios:?}");
    }
}
