//! Momentum lattices, exact shell enumeration, and lattice sums over the
//! whole lattice.
//!
//! Infinite sums use a smooth partition of unity: the window `χ(k)` keeps the
//! region near the origin, where the summand is singular or varies on the
//! lattice scale, as an explicit shell sum, and the complement `(1 − χ) f` is
//! smooth on the lattice scale, so its lattice sum equals its integral up to
//! exponentially small corrections.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::numerics::{integrate_pieces, CompensatedSum, Tolerance};
use crate::{Error, Result};

use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatticeKind {
    /// `(2π/L) ℤ³`.
    Periodic,
    /// `(π/ℓ) ℕ₀³`.
    Neumann,
    /// `(π/ℓ) ℤ³`.
    NeumannSigned,
}

impl LatticeKind {
    pub fn spacing(self, side: f64) -> f64 {
        match self {
            LatticeKind::Periodic => 2.0 * PI / side,
            LatticeKind::Neumann | LatticeKind::NeumannSigned => PI / side,
        }
    }

    fn signed(self) -> bool {
        !matches!(self, LatticeKind::Neumann)
    }
}

/// All lattice points with the same `|n|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shell {
    pub n2: u64,
    pub k: f64,
    pub multiplicity: u64,
}

/// Lattice points `0 < |k| ≤ k_max`, grouped into shells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumLattice {
    kind: LatticeKind,
    side: f64,
    k_max: f64,
    n_max: u64,
    shells: Vec<Shell>,
}

/// Number of points of ℤ^dim (or ℕ₀^dim) with each value of `|n|² ≤ lim`.
pub(crate) fn shell_counts(dim: usize, signed: bool, lim: u64) -> Vec<u64> {
    let n_max = lim.isqrt();
    let mut counts = vec![0u64; lim as usize + 1];
    let w = |i: u64| if signed && i > 0 { 2 } else { 1 };
    match dim {
        1 => {
            for i in 0..=n_max {
                counts[(i * i) as usize] += w(i);
            }
        }
        2 => {
            for i in 0..=n_max {
                for j in 0..=n_max {
                    let s = i * i + j * j;
                    if s > lim {
                        break;
                    }
                    counts[s as usize] += w(i) * w(j);
                }
            }
        }
        3 => {
            for i in 0..=n_max {
                for j in 0..=n_max {
                    let s2 = i * i + j * j;
                    if s2 > lim {
                        break;
                    }
                    let wij = w(i) * w(j);
                    for l in 0..=n_max {
                        let s = s2 + l * l;
                        if s > lim {
                            break;
                        }
                        counts[s as usize] += wij * w(l);
                    }
                }
            }
        }
        _ => unreachable!("lattices are one- to three-dimensional"),
    }
    counts[0] = 0;
    counts
}

impl MomentumLattice {
    pub fn new(kind: LatticeKind, side: f64, k_max: f64) -> Result<Self> {
        if !(side > 0.0) || !side.is_finite() {
            return Err(Error::Parameter(format!("box side must be positive, got {side}")));
        }
        if !(k_max >= 0.0) || !k_max.is_finite() {
            return Err(Error::Parameter(format!("cutoff must be non-negative, got {k_max}")));
        }
        let sp = kind.spacing(side);
        let ratio = k_max / sp;
        if ratio > 2000.0 {
            return Err(Error::Parameter(format!("cutoff spans {ratio:.0} lattice spacings; at most 2000 are enumerated")));
        }
        let n_max = (ratio * (1.0 + 1e-12)).floor() as u64;
        let lim = (ratio * ratio * (1.0 + 1e-12)).floor() as u64;
        let shells = shell_counts(3, kind.signed(), lim)
            .into_iter()
            .enumerate()
            .filter(|&(_, m)| m > 0)
            .map(|(n2, m)| Shell { n2: n2 as u64, k: sp * (n2 as f64).sqrt(), multiplicity: m })
            .collect();
        Ok(Self { kind, side, k_max, n_max, shells })
    }

    /// Lattice whose cutoff leaves room for the default smoothing window.
    pub fn for_sums(kind: LatticeKind, side: f64) -> Result<Self> {
        Self::new(kind, side, DEFAULT_SPAN as f64 * kind.spacing(side))
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(3)
    }

    pub fn spacing(&self) -> f64 {
        self.kind.spacing(self.side)
    }

    pub fn k_max(&self) -> f64 {
        self.k_max
    }

    pub fn shells(&self) -> &[Shell] {
        &self.shells
    }

    pub fn point_count(&self) -> u64 {
        self.shells.iter().map(|s| s.multiplicity).sum()
    }

    /// Plain sum over the enumerated points.
    pub fn sum<F: Fn(f64) -> f64 + Sync>(&self, f: F) -> f64 {
        let terms: Vec<f64> = self.shells.par_iter().map(|s| s.multiplicity as f64 * f(s.k)).collect();
        terms.into_iter().collect::<CompensatedSum>().value()
    }

    /// Fallible variant of [`MomentumLattice::sum`]; the first error in shell order wins.
    pub fn try_sum<F: Fn(f64) -> Result<f64> + Sync>(&self, f: F) -> Result<f64> {
        let terms: Vec<Result<f64>> = self.shells.par_iter().map(|s| f(s.k).map(|v| s.multiplicity as f64 * v)).collect();
        let mut acc = CompensatedSum::default();
        for t in terms {
            acc.add(t?);
        }
        Ok(acc.value())
    }
}

/// Window `χ(k) = ½ erfc((k − center)/width)` with both lengths in lattice spacings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub center: f64,
    pub width: f64,
}

/// Explicit span (in spacings) of lattices built for whole-lattice sums.
pub const DEFAULT_SPAN: u64 = 85;
const WIDTH: f64 = 5.0;
const UPPER_TAIL: f64 = 9.0;
const LOWER_TAIL: f64 = 8.0;

impl Window {
    /// Window ending inside `n_max` spacings and starting past every discontinuity.
    pub fn fit(n_max: u64, discontinuities: &[f64], spacing: f64) -> Result<Self> {
        let center = n_max as f64 - UPPER_TAIL * WIDTH;
        let lowest = center - LOWER_TAIL * WIDTH;
        let needed = discontinuities.iter().map(|d| d / spacing + 2.0).fold(0.0, f64::max);
        if lowest < needed {
            return Err(Error::Parameter(format!(
                "lattice cutoff of {n_max} spacings is too small for the smoothing window (need {} spacings)",
                (needed + (LOWER_TAIL + UPPER_TAIL) * WIDTH).ceil()
            )));
        }
        Ok(Self { center, width: WIDTH })
    }

    pub fn inner(&self, n: f64) -> f64 {
        0.5 * erfc((n - self.center) / self.width)
    }

    pub fn outer(&self, n: f64) -> f64 {
        0.5 * erfc((self.center - n) / self.width)
    }
}

/// Upper range and closure of the continuum part.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuumTail {
    pub k_hi: f64,
    /// If set, `f(k) ≈ f(k_hi)(k_hi/k)^p` beyond `k_hi` is integrated in closed form.
    pub decay_power: Option<f64>,
    /// Extra quadrature breakpoints where `f` changes scale.
    pub breaks: Vec<f64>,
    /// Jumps of `f` (they must stay inside the explicit region).
    pub discontinuities: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothSum {
    pub value: f64,
    pub explicit: f64,
    pub continuum: f64,
}

fn sphere_measure(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 4.0 * PI,
    }
}

/// Sum of a radial `f` over all non-zero points of the lattice.
pub fn lattice_sum<F>(lat: &MomentumLattice, f: F, tail: &ContinuumTail) -> Result<SmoothSum>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let sp = lat.spacing();
    let win = Window::fit(lat.n_max, &tail.discontinuities, sp)?;
    let explicit = lat.try_sum(|k| Ok(win.inner(k / sp) * f(k)?))?;

    // ℕ₀³ sums split into signed sums over ℤ³, ℤ² and ℤ with weights 1/8, 3/8, 3/8.
    let dims: &[(usize, f64)] = match lat.kind {
        LatticeKind::Neumann => &[(3, 0.125), (2, 0.375), (1, 0.375)],
        _ => &[(3, 1.0)],
    };
    let k_lo = ((win.center - LOWER_TAIL * win.width) * sp).max(0.0);
    let k_hi = tail.k_hi.max((win.center + UPPER_TAIL * win.width) * sp);
    let mut breaks = vec![k_lo];
    for j in -8..=9 {
        breaks.push((win.center + j as f64 * win.width) * sp);
    }
    breaks.extend(tail.breaks.iter().copied());
    breaks.push(k_hi);
    breaks.retain(|b| *b >= k_lo && *b <= k_hi);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let mut continuum = 0.0;
    let mut failure = None;
    for &(dim, coef) in dims {
        let meas = sphere_measure(dim);
        let mut g = |k: f64| {
            if k == 0.0 {
                return 0.0;
            }
            match f(k) {
                Ok(v) => win.outer(k / sp) * v * meas * k.powi(dim as i32 - 1),
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        };
        let body = integrate_pieces(&mut g, &breaks, Tolerance { abs: 0.0, rel: 1e-12 })
            .or_else(|_| integrate_pieces(&mut g, &breaks, Tolerance { abs: 0.0, rel: 1e-9 }))?;
        let mut part = body.value;
        if let Some(p) = tail.decay_power {
            if p <= dim as f64 {
                return Err(Error::Parameter(format!("decay power {p} does not make the {dim}-d tail integrable")));
            }
            part += f(k_hi)? * meas * k_hi.powi(dim as i32) / (p - dim as f64);
        }
        continuum += coef * part / sp.powi(dim as i32);
    }
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(SmoothSum { value: explicit + continuum, explicit, continuum })
}
