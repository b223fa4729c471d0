//! The critical redshift `z_Λ`, where `dR/dz` changes sign, and the
//! two-sided bounds on it as `Ω_Λ → 1`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::certificate::{BoundCertificate, ClaimId, MarginTracker};
use crate::error::{Error, Result};
use crate::luminosity::{integrand, CosmoParams, LuminosityCurve};
use crate::numerics::{find_root_bracketed, integrate_adaptive, QuadratureSpec};

/// Largest right bracket end tried while searching for `z_Λ`.
pub const BRACKET_CAP: f64 = 1e9;

/// Upper integration end in the bound constants: `z_Λ + 1` at `Ω_Λ = 0`.
pub const Q_REF: f64 = 2.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub omega_lambda: f64,
    pub z_lambda: f64,
    /// `N(z_Λ)` where `N(z) = (1+z)𝓘(1+z) - ∫₁^{1+z}𝓘`.
    pub residual: f64,
    pub tol: f64,
}

/// The Ω grid used by the monotonicity and bound checks.
pub fn default_omega_grid() -> Vec<f64> {
    let mut g: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
    g.push(0.99);
    g
}

pub fn find_z_lambda(p: CosmoParams, tol: f64) -> Result<CriticalPoint> {
    find_z_lambda_on(&LuminosityCurve::new(p), tol)
}

/// Root of the `dR/dz` numerator, bracketed from `[1, 2]` by doubling the
/// right end.
pub fn find_z_lambda_on(curve: &LuminosityCurve, tol: f64) -> Result<CriticalPoint> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "root tolerance must be positive, got {tol}"
        )));
    }
    let omega = curve.omega_lambda();
    if omega >= 1.0 {
        return Err(Error::NoCriticalPoint);
    }
    let n = |z: f64| curve.drdz_numerator(z);
    let lo = 1.0;
    if n(lo)? <= 0.0 {
        return Err(Error::Domain(format!(
            "dR/dz numerator is not positive at z = {lo}"
        )));
    }
    let mut hi = 2.0;
    while n(hi)? > 0.0 {
        hi *= 2.0;
        if hi > BRACKET_CAP {
            return Err(Error::NoCriticalPoint);
        }
    }
    // a quadrature failure inside the root search surfaces as NaN
    let z = find_root_bracketed(|z| n(z).unwrap_or(f64::NAN), lo, hi, tol)?;
    Ok(CriticalPoint {
        omega_lambda: omega,
        z_lambda: z,
        residual: n(z)?,
        tol,
    })
}

/// The constants behind the bounds
/// `(c₁ ln(1/(1-Ω)) + c₂)^{1/4} ≤ z_Λ + 1 ≤ c₃/(1-Ω)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZLambdaConstants {
    /// `(Ω, k₁(Ω))` for each grid point.
    pub k1_by_omega: Vec<(f64, f64)>,
    pub c1: f64,
    pub c2: f64,
    pub k2: f64,
    pub c3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZLambdaBounds {
    pub lower: f64,
    pub upper: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

/// `K(y, q) = 𝓘²(q)(q³-1) - 𝓘²(y)(y³-1)`.
pub fn bound_kernel(y: f64, q: f64, p: CosmoParams) -> f64 {
    let iq = integrand(q, p);
    let iy = integrand(y, p);
    iq * iq * (q * q * q - 1.0) - iy * iy * (y * y * y - 1.0)
}

/// `k₁(Ω) = (4/3) ∫₁^{2.25} 𝓘(y) K(y, 2.25) dy`.
pub fn k1(p: CosmoParams, quad: &QuadratureSpec) -> Result<f64> {
    let v = integrate_adaptive(
        |y| integrand(y, p) * bound_kernel(y, Q_REF, p),
        1.0,
        Q_REF,
        quad,
    )?;
    Ok(4.0 / 3.0 * v)
}

/// `c₁` is the infimum of `k₁` over `omega_grid`.
pub fn zlambda_bound_constants(
    omega_grid: &[f64],
    quad: &QuadratureSpec,
) -> Result<ZLambdaConstants> {
    let mut k1_by_omega = Vec::with_capacity(omega_grid.len());
    for &o in omega_grid {
        k1_by_omega.push((o, k1(CosmoParams::new(o)?, quad)?));
    }
    let c1 = k1_by_omega
        .iter()
        .map(|x| x.1)
        .fold(f64::INFINITY, f64::min);
    let inv_k2 = integrate_adaptive(|y| 1.0 / (1.0 + y * y * y).sqrt(), 1.0, Q_REF, quad)?;
    let k2 = 1.0 / inv_k2;
    Ok(ZLambdaConstants {
        k1_by_omega,
        c1,
        c2: Q_REF.powi(4),
        k2,
        c3: k2 * k2,
    })
}

impl ZLambdaConstants {
    pub fn bounds(&self, omega: f64) -> ZLambdaBounds {
        let log = (1.0 / (1.0 - omega)).ln();
        ZLambdaBounds {
            lower: (self.c1 * log + self.c2).powf(0.25),
            upper: self.c3 / (1.0 - omega),
            c1: self.c1,
            c2: self.c2,
            c3: self.c3,
        }
    }
}

/// Checks both sides of the bound at one critical point. The root tolerance
/// enters as slack since the lower bound is attained at `Ω = 0`.
pub fn verify_zlambda_bounds(cp: &CriticalPoint, constants: &ZLambdaConstants) -> BoundCertificate {
    let b = constants.bounds(cp.omega_lambda);
    let q = cp.z_lambda + 1.0;
    let mut m = MarginTracker::new(cp.tol / q);
    m.check(cp.omega_lambda, b.lower, q);
    m.check(cp.omega_lambda, q, b.upper);
    let consts = BTreeMap::from([
        ("c1".to_string(), b.c1),
        ("c2".to_string(), b.c2),
        ("c3".to_string(), b.c3),
        ("lower".to_string(), b.lower),
        ("upper".to_string(), b.upper),
        ("z_lambda_plus_1".to_string(), q),
    ]);
    m.finish(ClaimId::ZlambdaBounds, [cp.z_lambda, cp.z_lambda], consts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(o: f64) -> CosmoParams {
        CosmoParams::new(o).unwrap()
    }

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        let n = 2 * panels;
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + h * i as f64);
        }
        s * h / 3.0
    }

    #[test]
    fn matter_only_root_is_one_and_a_quarter() {
        let cp = find_z_lambda(p(0.0), 1e-12).unwrap();
        assert!((cp.z_lambda - 1.25).abs() < 1e-10);
        assert!(cp.residual.abs() < 1e-10);
    }

    #[test]
    fn pure_lambda_has_no_root() {
        assert_eq!(
            find_z_lambda(p(1.0), 1e-10).unwrap_err(),
            Error::NoCriticalPoint
        );
    }

    #[test]
    fn root_matches_bisection_oracle() {
        let o = 0.7;
        let pp = p(o);
        let n = |z: f64| {
            let y = 1.0 + z;
            y * integrand(y, pp) - simpson(|s| integrand(s, pp), 1.0, y, 20_000)
        };
        let (mut lo, mut hi) = (1.0, 10.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if n(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let cp = find_z_lambda(pp, 1e-12).unwrap();
        assert!((cp.z_lambda - 0.5 * (lo + hi)).abs() < 1e-9);
    }

    #[test]
    fn z_lambda_increases_with_omega() {
        let mut prev = 0.0;
        for o in [0.0, 0.5, 0.9, 0.99, 0.999] {
            let z = find_z_lambda(p(o), 1e-12).unwrap().z_lambda;
            assert!(z > prev, "omega {o}");
            assert!(z >= 1.25 - 1e-12);
            prev = z;
        }
    }

    #[test]
    fn constants_match_oracles() {
        let grid = default_omega_grid();
        let c = zlambda_bound_constants(&grid, &QuadratureSpec::precise()).unwrap();
        assert_eq!(c.c2, 25.62890625);
        let inv_k2 = simpson(|y| 1.0 / (1.0 + y * y * y).sqrt(), 1.0, Q_REF, 100_000);
        assert!((1.0 / c.k2 - inv_k2).abs() < 1e-12);
        for (o, k) in &c.k1_by_omega {
            let pp = p(*o);
            let oracle = 4.0 / 3.0
                * simpson(
                    |y| integrand(y, pp) * bound_kernel(y, Q_REF, pp),
                    1.0,
                    Q_REF,
                    100_000,
                );
            assert!((k - oracle).abs() < 1e-12, "omega {o}");
            assert!(*k > 0.0);
        }
    }

    #[test]
    fn bound_holds_with_equality_at_zero() {
        let c = zlambda_bound_constants(&default_omega_grid(), &QuadratureSpec::precise()).unwrap();
        let cp = find_z_lambda(p(0.0), 1e-12).unwrap();
        let cert = verify_zlambda_bounds(&cp, &c);
        assert!(cert.verdict());
        assert!((c.bounds(0.0).lower - 2.25).abs() < 1e-14);
    }

    #[test]
    fn bound_holds_near_one() {
        let c = zlambda_bound_constants(&default_omega_grid(), &QuadratureSpec::precise()).unwrap();
        for o in [0.9, 0.99] {
            let cp = find_z_lambda(p(o), 1e-12).unwrap();
            assert!(verify_zlambda_bounds(&cp, &c).verdict(), "omega {o}");
        }
    }
}
