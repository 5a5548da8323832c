//! Quadrature, compensated summation and small regression helpers.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { abs: 1e-12, rel: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        kron += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

const MAX_INTERVALS: usize = 5000;

/// Adaptive Gauss–Kronrod (7/15) quadrature on a finite interval.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<Integral> {
    integrate_pieces(&mut f, &[a, b], tol)
}

/// Adaptive quadrature over consecutive pieces `breaks[i]..breaks[i+1]`.
///
/// Breakpoints should sit at kinks, jumps or scale changes of the integrand.
pub fn integrate_pieces<F: FnMut(f64) -> f64>(f: &mut F, breaks: &[f64], tol: Tolerance) -> Result<Integral> {
    struct Piece {
        a: f64,
        b: f64,
        value: f64,
        error: f64,
    }
    let mut pieces: Vec<Piece> = Vec::new();
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            let (value, error) = gk15(f, w[0], w[1]);
            pieces.push(Piece { a: w[0], b: w[1], value, error });
        }
    }
    loop {
        let total: f64 = pieces.iter().map(|p| p.value).sum();
        let err: f64 = pieces.iter().map(|p| p.error).sum();
        if err <= tol.abs.max(tol.rel * total.abs()) {
            return Ok(Integral { value: total, error: err });
        }
        if pieces.len() >= MAX_INTERVALS {
            return Err(Error::Numerical(format!(
                "quadrature did not converge: estimate {total:e}, error {err:e} after {} intervals",
                pieces.len()
            )));
        }
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, p)| if p.error > acc.1 { (i, p.error) } else { acc });
        let p = pieces.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            // Interval can no longer be split in floating point; accept it.
            pieces.push(Piece { error: 0.0, ..p });
            continue;
        }
        let (v1, e1) = gk15(f, p.a, mid);
        let (v2, e2) = gk15(f, mid, p.b);
        pieces.push(Piece { a: p.a, b: mid, value: v1, error: e1 });
        pieces.push(Piece { a: mid, b: p.b, value: v2, error: e2 });
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let n = NonZeroUsize::new(n).expect("rule needs at least one node");
    GaussLegendre::new(n).as_node_weight_pairs().to_vec()
}

/// The 8-point rule used for per-step and per-panel integration.
pub fn gl8() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(8))
}

/// Fixed-order Gauss–Legendre integral over uniform panels.
pub fn panel_integral<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut sum = CompensatedSum::default();
    for i in 0..panels {
        let c = a + (i as f64 + 0.5) * h;
        for &(x, w) in gl8() {
            sum.add(0.5 * h * w * f(c + 0.5 * h * x));
        }
    }
    sum.value()
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Parameter("log-log fit needs at least two paired points".into()));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Domain("log-log fit needs positive finite data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// `sin(x)/x` with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 * (1.0 - x2 / 20.0)
    } else {
        x.sin() / x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kronrod_integrates_smooth_and_oscillatory() {
        let r = integrate(|x| x.exp(), 0.0, 1.0, Tolerance::default()).unwrap();
        assert_relative_eq!(r.value, std::f64::consts::E - 1.0, max_relative = 1e-13);
        let r = integrate(|x| (50.0 * x).sin().powi(2), 0.0, 3.0, Tolerance::default()).unwrap();
        let exact = 1.5 - (300.0f64).sin() / 200.0;
        assert_relative_eq!(r.value, exact, max_relative = 1e-11);
    }

    #[test]
    fn kronrod_handles_endpoint_singularity() {
        let r = integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0, Tolerance { abs: 1e-10, rel: 1e-10 }).unwrap();
        assert_relative_eq!(r.value, 2.0, max_relative = 1e-8);
    }

    #[test]
    fn gauss_legendre_is_exact_for_degree_fifteen() {
        let v: f64 = gl8().iter().map(|&(x, w)| w * x.powi(14)).sum();
        assert_relative_eq!(v, 2.0 / 15.0, max_relative = 1e-14);
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let s: CompensatedSum = [1e16, 1.0, -1e16, 1.0].into_iter().collect();
        assert_eq!(s.value(), 2.0);
    }

    #[test]
    fn slope_of_power_law() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-1.5)).collect();
        assert_relative_eq!(loglog_slope(&x, &y).unwrap(), -1.5, max_relative = 1e-12);
    }
}
