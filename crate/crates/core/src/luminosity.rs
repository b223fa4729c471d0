//! Luminosity-distance data for the flat Λ family and the shell radius
//! `R[z] = D_L / (1+z)^2` with its analytic z-derivatives.

use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{integrate_adaptive, QuadratureSpec};

/// Checkpoints sit at `y_k = exp(k / CHECKPOINTS_PER_E)`.
const CHECKPOINTS_PER_E: f64 = 16.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CosmoParams {
    omega_lambda: f64,
}

impl CosmoParams {
    pub fn new(omega_lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&omega_lambda) {
            return Err(Error::InvalidParameter(format!(
                "omega_lambda = {omega_lambda} outside [0, 1]"
            )));
        }
        Ok(Self { omega_lambda })
    }

    pub fn omega_lambda(&self) -> f64 {
        self.omega_lambda
    }

    /// Matter fraction `1 - Ω_Λ`.
    pub fn omega_m(&self) -> f64 {
        1.0 - self.omega_lambda
    }
}

/// `𝓘(y) = 1/√(Ω_Λ + (1-Ω_Λ) y³)`.
pub fn integrand(y: f64, p: CosmoParams) -> f64 {
    1.0 / (p.omega_lambda + p.omega_m() * y * y * y).sqrt()
}

/// `d𝓘/dy = -(3/2)(1-Ω_Λ) y² 𝓘³`.
pub fn integrand_deriv(y: f64, p: CosmoParams) -> f64 {
    let i = integrand(y, p);
    -1.5 * p.omega_m() * y * y * i * i * i
}

pub fn integrand_second_deriv(y: f64, p: CosmoParams) -> f64 {
    let i = integrand(y, p);
    let di = integrand_deriv(y, p);
    -1.5 * p.omega_m() * (2.0 * y * i * i * i + 3.0 * y * y * i * i * di)
}

/// Shell radius and its first three z-derivatives at one redshift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusJet {
    pub r: f64,
    pub r_z: f64,
    pub r_zz: f64,
}

/// A source of shell-radius data `R[z]` for the geodesic equations.
pub trait RadiusData: Send + Sync {
    fn radius(&self, z: f64) -> Result<f64>;
    fn radius_deriv(&self, z: f64) -> Result<f64>;
    fn radius_second_deriv(&self, z: f64) -> Result<f64>;

    fn jet(&self, z: f64) -> Result<RadiusJet> {
        Ok(RadiusJet {
            r: self.radius(z)?,
            r_z: self.radius_deriv(z)?,
            r_zz: self.radius_second_deriv(z)?,
        })
    }
}

/// `R[z]` for one `Ω_Λ`, with the running integral `∫₁^y 𝓘` cached at
/// geometric checkpoints so repeated right-hand-side calls only integrate a
/// short tail.
pub struct LuminosityCurve {
    params: CosmoParams,
    quad: QuadratureSpec,
    // cache[k] = ∫₁^{y_k} 𝓘
    cache: RwLock<Vec<f64>>,
}

impl std::fmt::Debug for LuminosityCurve {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LuminosityCurve")
            .field("params", &self.params)
            .field("quad", &self.quad)
            .finish_non_exhaustive()
    }
}

impl Clone for LuminosityCurve {
    fn clone(&self) -> Self {
        let cache = self
            .cache
            .read()
            .map(|c| c.clone())
            .unwrap_or_else(|_| vec![0.0]);
        Self {
            params: self.params,
            quad: self.quad,
            cache: RwLock::new(cache),
        }
    }
}

impl LuminosityCurve {
    /// Curve with [`QuadratureSpec::precise`], which keeps `dR/dz` accurate
    /// next to its root.
    pub fn new(params: CosmoParams) -> Self {
        Self::with_quadrature(params, QuadratureSpec::precise())
    }

    pub fn with_quadrature(params: CosmoParams, quad: QuadratureSpec) -> Self {
        Self {
            params,
            quad,
            cache: RwLock::new(vec![0.0]),
        }
    }

    pub fn params(&self) -> CosmoParams {
        self.params
    }

    pub fn omega_lambda(&self) -> f64 {
        self.params.omega_lambda
    }

    pub fn quadrature(&self) -> QuadratureSpec {
        self.quad
    }

    fn checkpoint(k: usize) -> f64 {
        (k as f64 / CHECKPOINTS_PER_E).exp()
    }

    /// `F(z) = ∫₁^{1+z} 𝓘(y) dy`.
    pub fn integral(&self, z: f64) -> Result<f64> {
        check_z(z)?;
        let y = 1.0 + z;
        let p = self.params;
        let k = (y.ln() * CHECKPOINTS_PER_E).floor().max(0.0) as usize;
        let base = {
            let cache = self.cache.read().expect("cache lock poisoned");
            cache.get(k).copied()
        };
        let base = match base {
            Some(v) => v,
            None => self.extend_to(k)?,
        };
        let tail = integrate_adaptive(|s| integrand(s, p), Self::checkpoint(k), y, &self.quad)?;
        Ok(base + tail)
    }

    fn extend_to(&self, k: usize) -> Result<f64> {
        let mut cache = self.cache.write().expect("cache lock poisoned");
        let p = self.params;
        while cache.len() <= k {
            let j = cache.len();
            let piece = integrate_adaptive(
                |s| integrand(s, p),
                Self::checkpoint(j - 1),
                Self::checkpoint(j),
                &self.quad,
            )?;
            let prev = cache[j - 1];
            cache.push(prev + piece);
        }
        Ok(cache[k])
    }

    pub fn luminosity_distance(&self, z: f64) -> Result<f64> {
        Ok((1.0 + z) * self.integral(z)?)
    }

    pub fn r(&self, z: f64) -> Result<f64> {
        Ok(self.integral(z)? / (1.0 + z))
    }

    /// `(y𝓘(y) - F)/y²` with `y = 1+z`.
    pub fn drdz(&self, z: f64) -> Result<f64> {
        let f = self.integral(z)?;
        let y = 1.0 + z;
        Ok((y * integrand(y, self.params) - f) / (y * y))
    }

    pub fn d2rdz2(&self, z: f64) -> Result<f64> {
        let f = self.integral(z)?;
        Ok(second_from_integral(1.0 + z, f, self.params))
    }

    pub fn d3rdz3(&self, z: f64) -> Result<f64> {
        let f = self.integral(z)?;
        let y = 1.0 + z;
        let p = self.params;
        let i = integrand(y, p);
        Ok(
            integrand_second_deriv(y, p) / y - 3.0 * integrand_deriv(y, p) / (y * y)
                + 6.0 * (y * i - f) / y.powi(4),
        )
    }

    /// Numerator of `dR/dz` up to the factor `(1+z)²`; strictly decreasing
    /// for `Ω_Λ < 1`.
    pub fn drdz_numerator(&self, z: f64) -> Result<f64> {
        let y = 1.0 + z;
        Ok(y * integrand(y, self.params) - self.integral(z)?)
    }
}

fn second_from_integral(y: f64, f: f64, p: CosmoParams) -> f64 {
    let i = integrand(y, p);
    integrand_deriv(y, p) / y - 2.0 * (y * i - f) / (y * y * y)
}

fn check_z(z: f64) -> Result<()> {
    if z >= 0.0 && z.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "redshift must be finite and non-negative, got {z}"
        )))
    }
}

impl RadiusData for LuminosityCurve {
    fn radius(&self, z: f64) -> Result<f64> {
        self.r(z)
    }

    fn radius_deriv(&self, z: f64) -> Result<f64> {
        self.drdz(z)
    }

    fn radius_second_deriv(&self, z: f64) -> Result<f64> {
        self.d2rdz2(z)
    }

    fn jet(&self, z: f64) -> Result<RadiusJet> {
        let f = self.integral(z)?;
        let y = 1.0 + z;
        let i = integrand(y, self.params);
        Ok(RadiusJet {
            r: f / y,
            r_z: (y * i - f) / (y * y),
            r_zz: second_from_integral(y, f, self.params),
        })
    }
}

pub fn luminosity_distance(z: f64, p: CosmoParams) -> Result<f64> {
    LuminosityCurve::new(p).luminosity_distance(z)
}

pub fn shell_radius(z: f64, p: CosmoParams) -> Result<f64> {
    LuminosityCurve::new(p).r(z)
}

pub fn shell_radius_deriv(z: f64, p: CosmoParams) -> Result<f64> {
    LuminosityCurve::new(p).drdz(z)
}

pub fn shell_radius_second_deriv(z: f64, p: CosmoParams) -> Result<f64> {
    LuminosityCurve::new(p).d2rdz2(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(o: f64) -> CosmoParams {
        CosmoParams::new(o).unwrap()
    }

    #[test]
    fn integrand_values() {
        for o in [0.0, 0.3, 1.0] {
            assert_eq!(integrand(1.0, p(o)), 1.0);
        }
        assert_eq!(integrand(5.0, p(1.0)), 1.0);
        assert!((integrand(4.0, p(0.0)) - 0.125).abs() < 1e-16);
    }

    #[test]
    fn rejects_out_of_range_omega() {
        assert!(CosmoParams::new(-0.1).is_err());
        assert!(CosmoParams::new(1.01).is_err());
        assert!(CosmoParams::new(f64::NAN).is_err());
    }

    #[test]
    fn distance_examples() {
        assert_eq!(luminosity_distance(0.0, p(0.3)).unwrap(), 0.0);
        assert!((luminosity_distance(3.0, p(1.0)).unwrap() - 12.0).abs() < 1e-12);
        assert!((luminosity_distance(3.0, p(0.0)).unwrap() - 4.0).abs() < 1e-12);
        assert!((shell_radius(3.0, p(1.0)).unwrap() - 0.75).abs() < 1e-14);
        assert!((shell_radius(3.0, p(0.0)).unwrap() - 0.25).abs() < 1e-14);
        assert_eq!(shell_radius(0.0, p(0.5)).unwrap(), 0.0);
    }

    #[test]
    fn negative_redshift_is_a_domain_error() {
        assert!(matches!(shell_radius(-0.5, p(0.2)), Err(Error::Domain(_))));
    }

    #[test]
    fn derivative_examples() {
        for z in [0.1, 1.0, 7.0] {
            let y: f64 = 1.0 + z;
            assert!((shell_radius_deriv(z, p(1.0)).unwrap() - 1.0 / (y * y)).abs() < 1e-14);
            assert!(
                (shell_radius_second_deriv(z, p(1.0)).unwrap() + 2.0 / y.powi(3)).abs() < 1e-14
            );
        }
        assert!(shell_radius_deriv(1.25, p(0.0)).unwrap().abs() < 1e-15);
        let expected = -1.5 * 2.25 * 2.25f64.powf(-4.5);
        assert!((shell_radius_second_deriv(1.25, p(0.0)).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let c = LuminosityCurve::new(p(0.5));
        let h = 1e-5;
        let fd = (c.r(2.0 + h).unwrap() - c.r(2.0 - h).unwrap()) / (2.0 * h);
        assert!((c.drdz(2.0).unwrap() - fd).abs() < 1e-8);

        let c = LuminosityCurve::new(p(0.3));
        let h = 1e-4;
        let fd2 =
            (c.r(1.0 + h).unwrap() - 2.0 * c.r(1.0).unwrap() + c.r(1.0 - h).unwrap()) / (h * h);
        assert!((c.d2rdz2(1.0).unwrap() - fd2).abs() < 1e-6);

        let fd3 = (c.d2rdz2(1.0 + h).unwrap() - c.d2rdz2(1.0 - h).unwrap()) / (2.0 * h);
        assert!((c.d3rdz3(1.0).unwrap() - fd3).abs() < 1e-7);
    }

    #[test]
    fn cache_does_not_change_values() {
        let warm = LuminosityCurve::new(p(0.4));
        warm.integral(30.0).unwrap();
        for z in [0.01, 0.5, 3.0, 12.0, 29.0] {
            let cold = LuminosityCurve::new(p(0.4)).integral(z).unwrap();
            let hot = warm.integral(z).unwrap();
            assert!((cold - hot).abs() <= 1e-13 * cold.abs().max(1.0), "z = {z}");
        }
    }

    #[test]
    fn jet_matches_individual_calls() {
        let c = LuminosityCurve::new(p(0.7));
        let j = c.jet(2.3).unwrap();
        assert_eq!(j.r, c.r(2.3).unwrap());
        assert_eq!(j.r_z, c.drdz(2.3).unwrap());
        assert_eq!(j.r_zz, c.d2rdz2(2.3).unwrap());
    }

    #[test]
    fn concurrent_readers_agree() {
        let c = std::sync::Arc::new(LuminosityCurve::new(p(0.6)));
        let handles: Vec<_> = (0..4)
            .map(|i| {
                let c = c.clone();
                std::thread::spawn(move || c.integral(5.0 + i as f64).unwrap())
            })
            .collect();
        let vals: Vec<f64> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        for (i, v) in vals.iter().enumerate() {
            let fresh = LuminosityCurve::new(p(0.6))
                .integral(5.0 + i as f64)
                .unwrap();
            assert!((v - fresh).abs() < 1e-13);
        }
    }
}
