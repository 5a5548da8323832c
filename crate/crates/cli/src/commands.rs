//! One function per subcommand, each producing a [`Table`].

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use bosemix::boxsum::sum_vs_integral_report;
use bosemix::lhy::energy_breakdown;
use bosemix::mixture::diagonalize_mode;
use bosemix::potentials::{make_potential, validate_assumptions, PotentialTriple};
use bosemix::quasifree::{minimize_per_mode, MinimizerOptions};
use bosemix::scattering::solve_scattering;
use bosemix::thermo::{convexity_scan, phase_scan, GrandFunctionalParams, RegionGrid};
use bosemix::Error;
use rayon::prelude::*;

use crate::config::{BoxsumConfig, EnergyConfig, MinimizeConfig, ScanConfig, ScanKind, ScatterConfig, ValidateConfig};
use crate::table::{sci, Cell, Table};

use std::f64::consts::PI;

/// Regime constants shared by the subcommands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regime {
    pub eta: Option<f64>,
    pub c: f64,
    pub k_z: Option<f64>,
    pub nu: Option<f64>,
    pub seed: u64,
}

impl Regime {
    /// Error-budget exponent, `1/10` unless overridden.
    pub fn eta(&self) -> f64 {
        self.eta.unwrap_or(0.1)
    }
}

pub fn scatter(cfg: &ScatterConfig, solution: Option<&Path>, profile: Option<&Path>) -> Result<Table> {
    let v = make_potential(&cfg.potential)?;
    let sol = solve_scattering(&v, &cfg.grid.unwrap_or_default())?;
    if let Some(path) = solution {
        let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        serde_json::to_writer(BufWriter::new(f), &sol)?;
    }
    if let Some(path) = profile {
        let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        let mut w = BufWriter::new(f);
        writeln!(w, "r,phi,omega,g")?;
        for row in sol.profile_rows() {
            writeln!(w, "{}", row.map(sci).join(","))?;
        }
        w.flush()?;
    }
    let a = sol.a();
    let g0 = sol.g_hat(0.0);
    let v0 = v.fourier_radial(0.0);
    let mut t = Table::new(&["a", "g_hat_0", "residual_8pi_a", "v_hat_0", "delta", "support_radius"]);
    t.push(vec![a.into(), g0.into(), (g0 - 8.0 * PI * a).abs().into(), v0.into(), (v0 - g0).abs().into(), v.support_radius().into()]);
    Ok(t)
}

pub fn energy(cfg: &EnergyConfig, reg: &Regime) -> Result<Table> {
    let r = cfg.interactions.resolve()?;
    if !r.template.is_miscible() {
        let t = &r.template;
        bail!(Error::Miscibility(format!("a_AB² = {:e} exceeds a_A a_B = {:e}", t.a_ab * t.a_ab, t.a_a * t.a_b)));
    }
    let p = r.at(cfg.rho_a, cfg.rho_b);
    let e = energy_breakdown(&p, reg.eta(), reg.c)?;
    let [la, lb, lab] = r.scaled_lengths();
    let s = |x: f64| Cell::Num(r.energy_density(x));
    let mut t = Table::new(&[
        "rho_a", "rho_b", "a_a", "a_b", "a_ab", "e_main", "e_lhy", "e_lhy_alternative", "lhy_residual", "i_ab", "xi", "mu_plus",
        "mu_minus", "error_budget",
    ]);
    t.push(vec![
        cfg.rho_a.into(),
        cfg.rho_b.into(),
        la.into(),
        lb.into(),
        lab.into(),
        s(e.e_main),
        s(e.e_lhy),
        s(e.e_lhy_alternative),
        s(e.lhy_residual()),
        e.i_ab.into(),
        e.xi.into(),
        e.mu_plus.into(),
        e.mu_minus.into(),
        s(e.error_budget),
    ]);
    Ok(t)
}

pub fn scan(cfg: &ScanConfig, reg: &Regime) -> Result<Table> {
    match cfg.kind {
        ScanKind::Phase => phase(cfg, reg),
        ScanKind::Convexity => convexity(cfg, reg),
    }
}

fn phase(cfg: &ScanConfig, reg: &Regime) -> Result<Table> {
    if cfg.rho_a.is_empty() || cfg.rho_b.is_empty() {
        bail!(Error::Validation("a phase scan needs non-empty \"rho_a\" and \"rho_b\" lists".into()));
    }
    let r = cfg.interactions.resolve()?;
    let v = r.a_bar.powi(3);
    let pts: Vec<(f64, f64)> = cfg.rho_a.iter().flat_map(|&x| cfg.rho_b.iter().map(move |&y| (x / v, y / v))).collect();
    let rows = phase_scan(&pts, &r.template, reg.eta(), reg.c)?;
    let e = |x: f64| r.energy_density(x);
    let mut t = Table::new(&["rho_a", "rho_b", "e_main", "miscible", "e_lhy", "xi", "mu_plus", "mu_minus", "error_budget"]);
    for row in rows {
        t.push(vec![
            (row.rho_a * v).into(),
            (row.rho_b * v).into(),
            e(row.e_main).into(),
            row.miscible.into(),
            row.e_lhy.map(e).into(),
            row.xi.into(),
            row.mu_plus.into(),
            row.mu_minus.into(),
            e(row.error_budget).into(),
        ]);
    }
    Ok(t)
}

fn convexity(cfg: &ScanConfig, reg: &Regime) -> Result<Table> {
    let Some(rho_a3) = cfg.rho_a3 else {
        bail!(Error::Validation("a convexity scan needs \"rho_a3\"".into()));
    };
    if !(rho_a3 > 0.0 && cfg.side > 0.0) {
        bail!(Error::Validation("\"rho_a3\" and \"side\" must be positive".into()));
    }
    let r = cfg.interactions.resolve()?;
    let t = &r.template;
    let k_z = reg.k_z.unwrap_or(rho_a3.powf(-1e-4));
    let volume = (cfg.side * r.a_bar).powi(3);
    let gp = GrandFunctionalParams::new(volume, [t.a_a, t.a_b, t.a_ab], rho_a3 / r.a_bar.powi(3), k_z)?;
    let gp = GrandFunctionalParams { c_region: reg.c, convexifier: cfg.convexifier, ..gp };
    let rep = convexity_scan(&gp, &RegionGrid::regime(&gp, cfg.points))?;
    let a2 = r.a_bar * r.a_bar;
    let mut out = Table::new(&[
        "rho_a3",
        "side",
        "k_z",
        "points",
        "convexifier",
        "min_eigenvalue",
        "min_scaled_eigenvalue",
        "worst_r_a",
        "worst_r_b",
        "pass",
        "dominance_ratio",
        "measured_dominance",
    ]);
    out.push(vec![
        rho_a3.into(),
        cfg.side.into(),
        k_z.into(),
        rep.points.into(),
        cfg.convexifier.into(),
        (rep.min_eigenvalue * a2).into(),
        rep.min_scaled_eigenvalue.into(),
        rep.worst_point.0.into(),
        rep.worst_point.1.into(),
        rep.pass.into(),
        rep.dominance_ratio.into(),
        rep.measured_dominance.into(),
    ]);
    Ok(out)
}

/// Convergence table and its fitted order.
pub fn boxsum(cfg: &BoxsumConfig) -> Result<(Table, Option<f64>)> {
    let r = cfg.interactions.resolve()?;
    let p = r.at(cfg.rho_a, cfg.rho_b);
    let sides: Vec<f64> = cfg.sides.iter().map(|s| s * r.a_bar).collect();
    let rep = sum_vs_integral_report(&p, cfg.lattice, &sides)?;
    let mut t = Table::new(&["L", "sum", "integral", "gap", "order"]);
    for row in &rep.rows {
        t.push(vec![
            (row.side / r.a_bar).into(),
            r.energy_density(row.sum).into(),
            r.energy_density(row.integral).into(),
            row.gap.into(),
            row.order.into(),
        ]);
    }
    Ok((t, rep.fitted_order))
}

pub fn minimize(cfg: &MinimizeConfig, reg: &Regime) -> Result<Table> {
    if cfg.k.is_empty() {
        bail!(Error::Validation("\"k\" must list at least one momentum".into()));
    }
    let r = cfg.interactions.resolve()?;
    let p = r.at(cfg.rho_a, cfg.rho_b);
    let opts = MinimizerOptions { seed: reg.seed, restarts: cfg.restarts.unwrap_or(MinimizerOptions::default().restarts), ..Default::default() };
    let a2 = r.a_bar * r.a_bar;
    let rows: Vec<Result<Vec<Cell>>> = cfg
        .k
        .par_iter()
        .map(|&k| {
            let kp = k / r.a_bar;
            let m = minimize_per_mode(&p, kp, &opts)?;
            let exact = diagonalize_mode(&p, kp, kp * kp)?;
            let em = exact.minimum();
            let rel = (m.value - em).abs() / em.abs().max(f64::MIN_POSITIVE);
            Ok(vec![
                k.into(),
                (m.value * a2).into(),
                (em * a2).into(),
                rel.into(),
                (m.alpha - exact.alpha).abs().max().into(),
                (m.gamma - exact.gamma).abs().max().into(),
                (m.gradient_norm * a2).into(),
                m.iterations.into(),
            ])
        })
        .collect();
    let mut t =
        Table::new(&["k", "value", "explicit_minimum", "value_error", "alpha_error", "gamma_error", "gradient_norm", "iterations"]);
    for row in rows {
        t.push(row?);
    }
    Ok(t)
}

pub fn validate(cfg: &ValidateConfig, reg: &Regime) -> Result<Table> {
    let grid = cfg.grid.unwrap_or_default();
    let mut constants = cfg.constants;
    if let Some(eta) = reg.eta {
        constants.eta = eta;
    }
    if let Some(nu) = reg.nu {
        constants.nu = nu;
    }
    let pots = cfg.potentials.iter().map(make_potential).collect::<bosemix::Result<Vec<_>>>()?;
    let sols = pots.iter().map(|v| solve_scattering(v, &grid)).collect::<bosemix::Result<Vec<_>>>()?;
    let [va, vb, vab]: [_; 3] = pots.try_into().expect("three channels");
    let triple = PotentialTriple::new(va, vb, vab, constants)?;
    let a_bar = sols.iter().map(|s| s.a()).fold(0.0, f64::max);
    if !(a_bar > 0.0) {
        bail!(Error::Validation("at least one scattering length must be positive".into()));
    }
    let rep = validate_assumptions(&triple, [&sols[0], &sols[1], &sols[2]], cfg.rho_a3 / a_bar.powi(3), cfg.sigma)?;
    let l = |x: f64| Cell::Num(x / a_bar);
    let mut t = Table::new(&[
        "miscibility_ok",
        "miscibility_margin",
        "ratio_ok",
        "ratio_margin",
        "l1_ok",
        "l1_margin_a",
        "l1_margin_b",
        "l1_margin_ab",
        "range_ok",
        "range_margin",
        "delta_a",
        "delta_b",
        "delta_ab",
        "soft_a",
        "soft_b",
        "soft_ab",
        "a_a",
        "a_b",
        "a_ab",
        "a_bar",
        "rho_a3",
    ]);
    t.push(vec![
        rep.miscibility_ok.into(),
        (rep.miscibility_margin / (a_bar * a_bar)).into(),
        rep.ratio_ok.into(),
        l(rep.ratio_margin),
        rep.l1_ok.into(),
        l(rep.l1_margins[0]),
        l(rep.l1_margins[1]),
        l(rep.l1_margins[2]),
        rep.range_ok.into(),
        l(rep.range_margin),
        l(rep.deltas[0]),
        l(rep.deltas[1]),
        l(rep.deltas[2]),
        rep.soft[0].into(),
        rep.soft[1].into(),
        rep.soft[2].into(),
        l(rep.scattering_lengths[0]),
        l(rep.scattering_lengths[1]),
        l(rep.scattering_lengths[2]),
        a_bar.into(),
        rep.rho_a_bar_cubed.into(),
    ]);
    Ok(t)
}
