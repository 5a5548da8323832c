//! Radial, compactly supported, non-negative pair potentials.
//!
//! A potential is stored as a list of segments on which it is either constant
//! or linear in `r`. All integrals against polynomials in `r` are then exact
//! per segment, and oscillatory transforms are integrated panel-wise.

use serde::{Deserialize, Serialize};

use crate::numerics::{gl8, sinc, CompensatedSum};
use crate::scattering::ScatteringSolution;
use crate::{Error, Result};

use std::f64::consts::PI;

/// One piece of a radial profile, linear between `(start, v_start)` and `(end, v_end)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub v_start: f64,
    pub v_end: f64,
}

impl Segment {
    pub fn slope(&self) -> f64 {
        (self.v_end - self.v_start) / (self.end - self.start)
    }

    pub fn value(&self, r: f64) -> f64 {
        if self.v_start == self.v_end {
            self.v_start
        } else {
            self.v_start + self.slope() * (r - self.start)
        }
    }

    pub fn max_value(&self) -> f64 {
        self.v_start.max(self.v_end)
    }

    /// ∫ r² v(r) dr over the segment.
    fn moment2(&self, upto: f64) -> f64 {
        let (a, b) = (self.start, upto.min(self.end));
        if b <= a {
            return 0.0;
        }
        let m = if self.v_start == self.v_end { 0.0 } else { self.slope() };
        let c = self.v_start - m * a;
        c * (b.powi(3) - a.powi(3)) / 3.0 + m * (b.powi(4) - a.powi(4)) / 4.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    PiecewiseConstant,
    Tabulated,
    ScaledSoft,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialPotential {
    kind: PotentialKind,
    segments: Vec<Segment>,
    support_radius: f64,
    l1_norm: f64,
    non_increasing: bool,
}

/// JSON form: `{"kind": ..., "params": {...}, "support_radius": R}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialDescriptor {
    #[serde(flatten)]
    pub family: Family,
    pub support_radius: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub non_increasing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum Family {
    /// Constant `height` on `[0, support_radius]`.
    SquareWell { height: f64 },
    /// `values[i]` on `(breaks[i-1], breaks[i]]`, with an implicit first break at 0.
    Piecewise { breaks: Vec<f64>, values: Vec<f64> },
    /// Samples joined linearly; zero beyond the last radius.
    Tabulated { radii: Vec<f64>, values: Vec<f64> },
    /// `(strength / scale³) · base(r / scale)` for a base profile supported in `[0, 1]`.
    ScaledSoft { base: Box<PotentialDescriptor>, scale: f64, strength: f64 },
}

impl PotentialDescriptor {
    pub fn square_well(height: f64, radius: f64) -> Self {
        Self { family: Family::SquareWell { height }, support_radius: radius, non_increasing: false }
    }
}

fn check_finite_nonneg(what: &str, x: f64) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::Validation(format!("{what} is not finite ({x})")));
    }
    if x < 0.0 {
        return Err(Error::Validation(format!("{what} is negative ({x})")));
    }
    Ok(())
}

/// Build a potential from its descriptor.
pub fn make_potential(desc: &PotentialDescriptor) -> Result<RadialPotential> {
    let radius = desc.support_radius;
    if !radius.is_finite() || radius <= 0.0 {
        return Err(Error::Validation(format!("support radius must be positive and finite, got {radius}")));
    }
    let (kind, segments) = match &desc.family {
        Family::SquareWell { height } => {
            check_finite_nonneg("square-well height", *height)?;
            let seg = Segment { start: 0.0, end: radius, v_start: *height, v_end: *height };
            (PotentialKind::PiecewiseConstant, vec![seg])
        }
        Family::Piecewise { breaks, values } => {
            if breaks.len() != values.len() || breaks.is_empty() {
                return Err(Error::Validation("piecewise potential needs one value per break".into()));
            }
            let mut segs = Vec::with_capacity(breaks.len());
            let mut start = 0.0;
            for (i, (&end, &v)) in breaks.iter().zip(values).enumerate() {
                check_finite_nonneg(&format!("piecewise value {i}"), v)?;
                if !(end > start) || !end.is_finite() {
                    return Err(Error::Validation(format!("piecewise breaks must increase from 0 (break {i} = {end})")));
                }
                segs.push(Segment { start, end, v_start: v, v_end: v });
                start = end;
            }
            (PotentialKind::PiecewiseConstant, segs)
        }
        Family::Tabulated { radii, values } => {
            if radii.len() != values.len() || radii.len() < 2 {
                return Err(Error::Validation("tabulated potential needs at least two (r, v) samples".into()));
            }
            if radii[0] != 0.0 {
                return Err(Error::Validation("tabulated radii must start at 0".into()));
            }
            for (i, &v) in values.iter().enumerate() {
                check_finite_nonneg(&format!("tabulated sample {i}"), v)?;
            }
            let mut segs = Vec::with_capacity(radii.len() - 1);
            for i in 1..radii.len() {
                if !(radii[i] > radii[i - 1]) || !radii[i].is_finite() {
                    return Err(Error::Validation(format!("tabulated radii must increase (index {i})")));
                }
                segs.push(Segment { start: radii[i - 1], end: radii[i], v_start: values[i - 1], v_end: values[i] });
            }
            (PotentialKind::Tabulated, segs)
        }
        Family::ScaledSoft { base, scale, strength } => {
            let base = make_potential(base)?;
            let v = scaled_soft_potential(&base, *scale, *strength)?;
            if v.support_radius > radius * (1.0 + 1e-12) {
                return Err(Error::Validation(format!(
                    "declared support radius {radius} is smaller than the scaled support {}",
                    v.support_radius
                )));
            }
            (PotentialKind::ScaledSoft, v.segments)
        }
    };
    RadialPotential::from_segments(kind, segments, radius, desc.non_increasing)
}

/// `(λ/R³) v1(r/R)`: same integral as `v1` times λ, support scaled by R.
pub fn scaled_soft_potential(v1: &RadialPotential, scale: f64, strength: f64) -> Result<RadialPotential> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::Parameter(format!("scale must be positive, got {scale}")));
    }
    if !(strength >= 0.0) || !strength.is_finite() {
        return Err(Error::Parameter(format!("strength must be non-negative, got {strength}")));
    }
    if v1.support_radius > 1.0 {
        return Err(Error::Parameter(format!("base profile must be supported in [0, 1], has radius {}", v1.support_radius)));
    }
    let f = strength / scale.powi(3);
    let segments = v1
        .segments
        .iter()
        .map(|s| Segment { start: s.start * scale, end: s.end * scale, v_start: s.v_start * f, v_end: s.v_end * f })
        .collect();
    RadialPotential::from_segments(PotentialKind::ScaledSoft, segments, scale * v1.support_radius, v1.non_increasing)
}

impl RadialPotential {
    fn from_segments(kind: PotentialKind, mut segments: Vec<Segment>, support_radius: f64, non_increasing: bool) -> Result<Self> {
        // Zero tails carry no information; anything non-zero past the support is an error.
        while segments.last().is_some_and(|s| s.v_start == 0.0 && s.v_end == 0.0 && s.start >= support_radius) {
            segments.pop();
        }
        for s in &segments {
            if s.end > support_radius * (1.0 + 1e-12) && (s.v_start > 0.0 || s.v_end > 0.0) {
                return Err(Error::Validation(format!(
                    "potential is non-zero up to r = {} beyond the declared support radius {support_radius}",
                    s.end
                )));
            }
        }
        if non_increasing {
            let mut prev = f64::INFINITY;
            for s in &segments {
                if s.v_start > prev || s.v_end > s.v_start {
                    return Err(Error::Validation(format!("potential declared non-increasing but rises near r = {}", s.start)));
                }
                prev = s.v_end;
            }
        }
        let l1_norm = 4.0 * PI * segments.iter().map(|s| s.moment2(s.end)).sum::<f64>();
        Ok(Self { kind, segments, support_radius, l1_norm, non_increasing })
    }

    pub fn zero(support_radius: f64) -> Self {
        Self { kind: PotentialKind::PiecewiseConstant, segments: Vec::new(), support_radius, l1_norm: 0.0, non_increasing: true }
    }

    pub fn kind(&self) -> PotentialKind {
        self.kind
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    /// ∫_{ℝ³} v.
    pub fn l1_norm(&self) -> f64 {
        self.l1_norm
    }

    pub fn is_non_increasing(&self) -> bool {
        self.non_increasing
    }

    pub fn is_zero(&self) -> bool {
        self.segments.iter().all(|s| s.v_start == 0.0 && s.v_end == 0.0)
    }

    pub fn value(&self, r: f64) -> f64 {
        let i = self.segments.partition_point(|s| s.end <= r);
        match self.segments.get(i) {
            Some(s) if r >= s.start => s.value(r),
            _ => 0.0,
        }
    }

    /// ∫₀^r s² v(s) ds, exact.
    pub fn cumulative_moment2(&self, r: f64) -> f64 {
        self.segments.iter().take_while(|s| s.start < r).map(|s| s.moment2(r)).sum()
    }

    /// Radial Fourier transform `v̂(k) = 4π ∫ r² v(r) sinc(kr) dr`.
    pub fn fourier_radial(&self, k: f64) -> f64 {
        let k = k.abs();
        if k == 0.0 {
            return self.l1_norm;
        }
        let mut sum = CompensatedSum::default();
        for s in &self.segments {
            let len = s.end - s.start;
            // Panels no wider than one radian of the oscillation keep GL8 at full precision.
            let panels = ((len * k).ceil() as usize).max(1);
            let h = len / panels as f64;
            for p in 0..panels {
                let c = s.start + (p as f64 + 0.5) * h;
                for &(x, w) in gl8() {
                    let r = c + 0.5 * h * x;
                    sum.add(0.5 * h * w * r * r * s.value(r) * sinc(k * r));
                }
            }
        }
        4.0 * PI * sum.value()
    }

    /// True when `self ≤ other` at every point (checked on the union of breakpoints).
    pub fn is_dominated_by(&self, other: &RadialPotential) -> bool {
        let mut pts: Vec<f64> = Vec::new();
        for s in self.segments.iter().chain(&other.segments) {
            pts.extend([s.start, s.end]);
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        // Both profiles are linear between consecutive breakpoints, so comparing
        // one-sided limits at every breakpoint suffices.
        let eps = 1e-12;
        pts.windows(2).all(|w| {
            let (a, b) = (w[0] + eps * (w[1] - w[0]), w[1] - eps * (w[1] - w[0]));
            self.value(a) <= other.value(a) + 1e-15 && self.value(b) <= other.value(b) + 1e-15
        })
    }
}

/// Caller-supplied constants of the admissibility conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssumptionConstants {
    pub c_a: f64,
    pub c_1: f64,
    pub c_r: f64,
    pub eta: f64,
    pub nu: f64,
}

/// Potentials for the A–A, B–B and A–B channels.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialTriple {
    pub v_a: RadialPotential,
    pub v_b: RadialPotential,
    pub v_ab: RadialPotential,
    pub constants: AssumptionConstants,
}

impl PotentialTriple {
    pub fn new(v_a: RadialPotential, v_b: RadialPotential, v_ab: RadialPotential, constants: AssumptionConstants) -> Result<Self> {
        let c = constants;
        if !(c.c_a > 0.0 && c.c_1 > 0.0 && c.c_r > 0.0 && c.nu > 0.0 && c.eta >= 0.0) {
            return Err(Error::Parameter("constants C_a, C_1, C_R, ν must be positive and η non-negative".into()));
        }
        Ok(Self { v_a, v_b, v_ab, constants })
    }

    pub fn channels(&self) -> [&RadialPotential; 3] {
        [&self.v_a, &self.v_b, &self.v_ab]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub miscibility_ok: bool,
    /// `a_A a_B − a_AB²`.
    pub miscibility_margin: f64,
    pub ratio_ok: bool,
    /// `C_a · a_min − a_max`.
    pub ratio_margin: f64,
    pub l1_ok: bool,
    /// Per channel `C₁ ā − ‖v‖₁`.
    pub l1_margins: [f64; 3],
    pub range_ok: bool,
    /// `C_R (ρā³)^{−η} ā − R_max`.
    pub range_margin: f64,
    /// Per channel `|v̂(0) − ĝ(0)|`.
    pub deltas: [f64; 3],
    /// Per channel `δ ≤ a (ρā³)^σ`.
    pub soft: [bool; 3],
    pub scattering_lengths: [f64; 3],
    pub a_bar: f64,
    pub rho_a_bar_cubed: f64,
}

/// Check the standing assumptions on a potential triple at total density `rho`.
pub fn validate_assumptions(
    triple: &PotentialTriple,
    sols: [&ScatteringSolution; 3],
    rho: f64,
    sigma: f64,
) -> Result<AssumptionReport> {
    if !(rho > 0.0) {
        return Err(Error::Parameter(format!("total density must be positive, got {rho}")));
    }
    if !(sigma > 0.0) {
        return Err(Error::Parameter(format!("softness exponent σ must be positive, got {sigma}")));
    }
    for (name, (v, s)) in ["A", "B", "AB"].iter().zip(triple.channels().into_iter().zip(sols)) {
        if s.potential() != v {
            return Err(Error::Consistency(format!("scattering solution for channel {name} was computed for a different potential")));
        }
    }
    let c = triple.constants;
    let lengths = sols.map(|s| s.a());
    let [a_a, a_b, a_ab] = lengths;
    let a_bar = a_a.max(a_b).max(a_ab);
    let a_min = a_a.min(a_b).min(a_ab);
    let rho_a3 = rho * a_bar.powi(3);

    let miscibility_margin = a_a * a_b - a_ab * a_ab;
    let ratio_margin = c.c_a * a_min - a_bar;
    let l1_margins = triple.channels().map(|v| c.c_1 * a_bar - v.l1_norm());
    let r_max = triple.channels().iter().map(|v| v.support_radius()).fold(0.0, f64::max);
    let range_margin = c.c_r * rho_a3.powf(-c.eta) * a_bar - r_max;
    let mut deltas = [0.0; 3];
    let mut soft = [false; 3];
    for i in 0..3 {
        deltas[i] = (triple.channels()[i].l1_norm() - sols[i].g_hat(0.0)).abs();
        soft[i] = deltas[i] <= lengths[i] * rho_a3.powf(sigma);
    }
    Ok(AssumptionReport {
        miscibility_ok: miscibility_margin >= 0.0,
        miscibility_margin,
        ratio_ok: ratio_margin >= 0.0,
        ratio_margin,
        l1_ok: l1_margins.iter().all(|m| *m >= 0.0),
        l1_margins,
        range_ok: range_margin >= 0.0,
        range_margin,
        deltas,
        soft,
        scattering_lengths: lengths,
        a_bar,
        rho_a_bar_cubed: rho_a3,
    })
}
