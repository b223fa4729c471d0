//! Globally adaptive Gauss–Kronrod (7, 15) quadrature.
//!
//! The panel with the largest error estimate is bisected until the summed
//! estimate drops below `max(abs_tol, rel_tol * |result|)`. Every panel keeps
//! its bisection depth; a panel that would need splitting beyond `max_depth`
//! ends the run with [`QuadError::ToleranceNotMet`], which still carries the
//! best available estimate.

use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Kronrod abscissae on [-1, 1] (non-negative half, descending).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for the odd-indexed Kronrod nodes plus the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Hard cap on live panels, independent of `max_depth`.
const MAX_PANELS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_depth: u32,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-14,
            rel_tol: 1e-10,
            max_depth: 60,
        }
    }
}

impl QuadratureSpec {
    pub fn new(abs_tol: f64, rel_tol: f64, max_depth: u32) -> Result<Self, QuadError> {
        let spec = Self {
            abs_tol,
            rel_tol,
            max_depth,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Tolerances tight enough that differences of integrals near a root
    /// (e.g. the numerator of dR/dz close to the critical redshift) keep
    /// ten significant digits.
    pub fn precise() -> Self {
        Self {
            abs_tol: 1e-15,
            rel_tol: 1e-13,
            max_depth: 60,
        }
    }

    pub fn validate(&self) -> Result<(), QuadError> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol >= 0.0) || self.max_depth < 1 {
            return Err(QuadError::InvalidSpec(*self));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("tolerance not met: best estimate {estimate} with error estimate {error_estimate}")]
    ToleranceNotMet { estimate: f64, error_estimate: f64 },
    #[error("integrand is not finite at {at}")]
    NonFinite { at: f64 },
    #[error("invalid quadrature spec {0:?}")]
    InvalidSpec(QuadratureSpec),
}

impl QuadError {
    /// Best estimate carried by a depth-exhaustion failure.
    pub fn best_estimate(&self) -> Option<f64> {
        match self {
            QuadError::ToleranceNotMet { estimate, .. } => Some(*estimate),
            _ => None,
        }
    }
}

/// Result of a single 15-point panel.
#[derive(Debug, Clone, Copy)]
pub struct Panel {
    pub a: f64,
    pub b: f64,
    pub value: f64,
    pub error: f64,
    depth: u32,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Applies the G7/K15 pair on `[a, b]`.
pub fn gauss_kronrod_15<F>(f: &F, a: f64, b: f64) -> Result<(f64, f64), QuadError>
where
    F: Fn(f64) -> f64 + ?Sized,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let eval = |x: f64| -> Result<f64, QuadError> {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(QuadError::NonFinite { at: x })
        }
    };

    let fc = eval(center)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_sum = kronrod.abs();
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        kronrod += w * (f1 + f2);
        abs_sum += w * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let value = kronrod * half;
    let mut error = ((kronrod - gauss) * half).abs();
    let roundoff = 50.0 * f64::EPSILON * abs_sum * half.abs();
    if error < roundoff {
        error = roundoff;
    }
    Ok((value, error))
}

/// Oriented integral of `f` from `a` to `b`.
pub fn integrate_adaptive<F>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64, QuadError>
where
    F: Fn(f64) -> f64,
{
    spec.validate()?;
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return integrate_adaptive(f, b, a, spec)
            .map(|v| -v)
            .map_err(|e| match e {
                QuadError::ToleranceNotMet {
                    estimate,
                    error_estimate,
                } => QuadError::ToleranceNotMet {
                    estimate: -estimate,
                    error_estimate,
                },
                other => other,
            });
    }

    let (value, error) = gauss_kronrod_15(&f, a, b)?;
    let mut heap = BinaryHeap::new();
    heap.push(Panel {
        a,
        b,
        value,
        error,
        depth: 0,
    });
    let mut total = value;
    let mut total_err = error;

    loop {
        let target = spec.abs_tol.max(spec.rel_tol * total.abs());
        if total_err <= target {
            return Ok(total);
        }
        let worst = *heap.peek().expect("at least one panel");
        if worst.depth >= spec.max_depth || heap.len() >= MAX_PANELS {
            return Err(QuadError::ToleranceNotMet {
                estimate: total,
                error_estimate: total_err,
            });
        }
        // roundoff floor: bisecting cannot shrink the estimate further
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(QuadError::ToleranceNotMet {
                estimate: total,
                error_estimate: total_err,
            });
        }
        heap.pop();
        let (v1, e1) = gauss_kronrod_15(&f, worst.a, mid)?;
        let (v2, e2) = gauss_kronrod_15(&f, mid, worst.b)?;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        for (lo, hi, v, e) in [(worst.a, mid, v1, e1), (mid, worst.b, v2, e2)] {
            heap.push(Panel {
                a: lo,
                b: hi,
                value: v,
                error: e,
                depth: worst.depth + 1,
            });
        }
        if heap.len() % 64 == 0 {
            // re-sum to keep the running totals free of drift
            total = heap.iter().map(|p| p.value).sum();
            total_err = heap.iter().map(|p| p.error).sum();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        let n = panels * 2;
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let x = a + h * i as f64;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    }

    #[test]
    fn inverse_three_halves_power() {
        let v = integrate_adaptive(|y| y.powf(-1.5), 1.0, 4.0, &QuadratureSpec::default()).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_integrand() {
        let z = 2.75;
        let v = integrate_adaptive(|_| 1.0, 1.0, 1.0 + z, &QuadratureSpec::default()).unwrap();
        assert!((v - z).abs() < 1e-14);
    }

    #[test]
    fn matches_simpson_oracle() {
        let f = |y: f64| 1.0 / (1.0 + y * y * y).sqrt();
        let oracle = simpson(f, 1.0, 2.25, 1_000_000);
        let v = integrate_adaptive(f, 1.0, 2.25, &QuadratureSpec::precise()).unwrap();
        assert!((v - oracle).abs() < 1e-10, "{v} vs {oracle}");
    }

    #[test]
    fn orientation_flips_sign() {
        let f = |x: f64| (3.0 * x).sin() + x * x;
        let spec = QuadratureSpec::default();
        let fwd = integrate_adaptive(f, -0.3, 2.1, &spec).unwrap();
        let bwd = integrate_adaptive(f, 2.1, -0.3, &spec).unwrap();
        assert_eq!(fwd, -bwd);
    }

    #[test]
    fn single_panel_is_exact_for_polynomials() {
        // K15 integrates degree 22 exactly
        for deg in 0..=22 {
            let f = |x: f64| x.powi(deg);
            let (v, _) = gauss_kronrod_15(&f, 0.0, 1.0).unwrap();
            let exact = 1.0 / (deg as f64 + 1.0);
            assert!((v - exact).abs() < 1e-14, "degree {deg}");
        }
    }

    #[test]
    fn depth_exhaustion_reports_best_estimate() {
        let spec = QuadratureSpec::new(1e-300, 0.0, 2).unwrap();
        let err = integrate_adaptive(|x: f64| x.abs().sqrt(), -1.0, 1.0, &spec).unwrap_err();
        let best = err.best_estimate().expect("carries estimate");
        assert!((best - 4.0 / 3.0).abs() < 1e-3);
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        let err = integrate_adaptive(|x: f64| 1.0 / x, 0.0, 1.0, &QuadratureSpec::default());
        assert!(matches!(
            err,
            Err(QuadError::NonFinite { .. }) | Err(QuadError::ToleranceNotMet { .. })
        ));
    }

    #[test]
    fn invalid_spec_rejected() {
        assert!(QuadratureSpec::new(0.0, 1e-8, 10).is_err());
        assert!(QuadratureSpec::new(1e-8, -1.0, 10).is_err());
        assert!(QuadratureSpec::new(1e-8, 1e-8, 0).is_err());
    }
}
