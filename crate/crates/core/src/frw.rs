//! Homogeneous (FRW) solutions of the redshift system: the conformal-time
//! parametrization, closed-form solutions on luminosity data, the critical
//! slope `c_Λ`, and integration through `z_Λ`.
//!
//! The model is `E = r²/2`, `M = r³/2`, `R₀ = c r`, so `R = r a(t)` with
//! `ȧ² = 1 + 1/a` and `a(t₀) = c`.

use std::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::critical::{find_z_lambda_on, CriticalPoint};
use crate::error::{Error, Result};
use crate::kernel::{trace_general, GeodesicState, LtbModel, EVENT_CRITICAL, EVENT_HORIZON};
use crate::luminosity::{integrand, LuminosityCurve, RadiusData};
use crate::numerics::{
    find_root_bracketed, integrate_adaptive, solve_ivp, EventRecord, EventSpec, IvpError, IvpSpec,
    IvpStatus, QuadratureSpec, Trajectory,
};

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Relative distance from `c_Λ` under which `z_Λ` is treated as removable.
pub const REMOVABLE_RTOL: f64 = 1e-9;

/// Half-width of the window around `z_Λ`, relative to `1 + z_Λ`, where the
/// quotient is evaluated in divided-difference form.
pub const SWITCH_WIDTH: f64 = 1e-3;

/// Normalization of the time function.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeConvention {
    /// `𝔊 = (sinh η - η)/√2 + √2(c sinh η + k cosh η)`, `t₀ = √2 k`.
    Sqrt2Scaled,
    /// `𝔊̃ = (sinh η - η)/2 + c sinh η + k cosh η`, `t₀ = k`; satisfies
    /// `ȧ² = 1 + 1/a`.
    #[default]
    ConstraintConsistent,
}

impl std::str::FromStr for TimeConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sqrt2" | "sqrt2_scaled" => Ok(Self::Sqrt2Scaled),
            "consistent" | "constraint_consistent" => Ok(Self::ConstraintConsistent),
            _ => Err(Error::InvalidParameter(format!(
                "unknown convention '{s}' (sqrt2|consistent)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrwParams {
    pub c: f64,
    /// `√(c + c²)`
    pub k_c: f64,
    pub z0: f64,
    pub convention: TimeConvention,
}

impl FrwParams {
    pub fn new(c: f64, z0: f64, convention: TimeConvention) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "c must be positive, got {c}"
            )));
        }
        if !(z0 > 0.0 && z0.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "z0 must be positive, got {z0}"
            )));
        }
        Ok(Self {
            c,
            k_c: (c + c * c).sqrt(),
            z0,
            convention,
        })
    }

    /// Lower end of the range where `𝔉_c` is increasing; `𝔉_c` vanishes there.
    pub fn eta_min(&self) -> f64 {
        -(2.0 * self.k_c / (1.0 + 2.0 * self.c)).atanh()
    }

    pub fn t0(&self) -> f64 {
        time_param(0.0, self)
    }

    /// `ȧ` as a function of `a` under the active convention.
    pub fn adot(&self, a: f64) -> f64 {
        let v = (1.0 + 1.0 / a).sqrt();
        match self.convention {
            TimeConvention::Sqrt2Scaled => v / SQRT2,
            TimeConvention::ConstraintConsistent => v,
        }
    }

    /// `a[z] = c(1+z₀)/(1+z)`
    pub fn scale_factor_at(&self, z: f64) -> f64 {
        self.c * (1.0 + self.z0) / (1.0 + z)
    }
}

/// `𝔉_c(η) = (cosh η - 1)/2 + c cosh η + k_c sinh η`.
///
/// Since `(c + 1/2)² - k_c² = 1/4` this equals `sinh²((η - η_min)/2)`, which
/// is what gets evaluated: the printed form loses all digits as `a → 0`.
pub fn scale_factor_param(eta: f64, p: &FrwParams) -> f64 {
    let s = (0.5 * (eta - p.eta_min())).sinh();
    s * s
}

pub fn scale_factor_param_deriv(eta: f64, p: &FrwParams) -> f64 {
    0.5 * (eta - p.eta_min()).sinh()
}

pub fn time_param(eta: f64, p: &FrwParams) -> f64 {
    let (s, ch) = (eta.sinh(), eta.cosh());
    match p.convention {
        TimeConvention::Sqrt2Scaled => (s - eta) / SQRT2 + SQRT2 * (p.c * s + p.k_c * ch),
        TimeConvention::ConstraintConsistent => 0.5 * (s - eta) + p.c * s + p.k_c * ch,
    }
}

/// `d𝔊/dη`, which is `𝔉_c` up to the convention's factor.
pub fn time_param_deriv(eta: f64, p: &FrwParams) -> f64 {
    let f = scale_factor_param(eta, p);
    match p.convention {
        TimeConvention::Sqrt2Scaled => SQRT2 * f,
        TimeConvention::ConstraintConsistent => f,
    }
}

/// `η` with `𝔉_c(η) = a` on the increasing branch: `η_min + 2 asinh √a`.
pub fn inverse_scale_factor(a: f64, p: &FrwParams) -> Result<f64> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Domain(format!(
            "scale factor must be positive, got {a}"
        )));
    }
    if a == p.c {
        return Ok(0.0);
    }
    Ok(p.eta_min() + 2.0 * a.sqrt().asinh())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConventionAudit {
    pub convention: TimeConvention,
    /// `max |ȧ² - (1 + 1/a)|` over the grid.
    pub max_constraint_residual: f64,
    /// `max |ȧ² - (1 + 1/a)/2 - (1 + 1/a)|`, i.e. distance of the residual
    /// from the factor-two value `-(1 + 1/a)/2`.
    pub max_factor_two_deviation: f64,
    pub tolerance: f64,
    pub verdict: bool,
}

pub const AUDIT_TOL: f64 = 1e-10;

/// Checks `ȧ² = 1 + 1/a` with `ȧ = 𝔉'/𝔊'` on a grid of `η`.
pub fn audit_convention(p: &FrwParams, eta_grid: &[f64]) -> ConventionAudit {
    let mut worst = 0.0f64;
    let mut half = 0.0f64;
    for &eta in eta_grid {
        let a = scale_factor_param(eta, p);
        let adot = scale_factor_param_deriv(eta, p) / time_param_deriv(eta, p);
        let required = 1.0 + 1.0 / a;
        let res = adot * adot - required;
        worst = worst.max(res.abs());
        half = half.max((res + 0.5 * required).abs());
    }
    ConventionAudit {
        convention: p.convention,
        max_constraint_residual: worst,
        max_factor_two_deviation: half,
        tolerance: AUDIT_TOL,
        verdict: worst <= AUDIT_TOL,
    }
}

/// Closed-form FRW solution along luminosity data for one `c`, with `z_Λ`
/// and `c_Λ` precomputed when they exist.
#[derive(Debug, Clone)]
pub struct FrwClosed<'a> {
    pub params: FrwParams,
    pub curve: &'a LuminosityCurve,
    pub critical: Option<CriticalPoint>,
    pub c_lambda: Option<f64>,
}

/// One point of the closed-form solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedPoint {
    pub z: f64,
    pub a: f64,
    pub eta: f64,
    pub r: f64,
    pub t: f64,
    pub m: f64,
}

impl ClosedPoint {
    pub fn state(&self) -> GeodesicState {
        GeodesicState::new(self.z, self.r, self.t, self.m)
    }
}

impl<'a> FrwClosed<'a> {
    pub fn new(params: FrwParams, curve: &'a LuminosityCurve) -> Result<Self> {
        let (critical, c_lambda) = if curve.omega_lambda() < 1.0 {
            let cp = find_z_lambda_on(curve, 1e-13)?;
            let cl = c_lambda_at(curve, cp.z_lambda, params.z0);
            (Some(cp), Some(cl))
        } else {
            (None, None)
        };
        Ok(Self {
            params,
            curve,
            critical,
            c_lambda,
        })
    }

    pub fn z_lambda(&self) -> Option<f64> {
        self.critical.as_ref().map(|c| c.z_lambda)
    }

    pub fn is_removable(&self) -> bool {
        self.c_lambda
            .is_some_and(|cl| (self.params.c - cl).abs() <= REMOVABLE_RTOL * cl)
    }

    fn scale(&self) -> f64 {
        (1.0 + self.params.z0) * self.params.c
    }

    /// `r(z) = ∫₁^{1+z} 𝓘 / ((1+z₀)c)`
    pub fn r(&self, z: f64) -> Result<f64> {
        Ok(self.curve.integral(z)? / self.scale())
    }

    pub fn r_z(&self, z: f64) -> f64 {
        integrand(1.0 + z, self.curve.params()) / self.scale()
    }

    pub fn point(&self, z: f64) -> Result<ClosedPoint> {
        let a = self.params.scale_factor_at(z);
        let eta = inverse_scale_factor(a, &self.params)?;
        let r = self.r(z)?;
        Ok(ClosedPoint {
            z,
            a,
            eta,
            r,
            t: time_param(eta, &self.params),
            m: 0.5 * r * r * r,
        })
    }

    /// `2M - R` along the closed solution.
    pub fn horizon_gap(&self, z: f64) -> Result<f64> {
        let r = self.r(z)?;
        Ok(r * r * r - self.curve.r(z)?)
    }

    /// `d(2M - R)/dz = 3r² r_z - R_z`
    pub fn horizon_gap_deriv(&self, z: f64) -> Result<f64> {
        let r = self.r(z)?;
        Ok(3.0 * r * r * self.r_z(z) - self.curve.drdz(z)?)
    }

    /// `H = R(√(2E + 2M/R) + √(1+2E))` with `E = r²/2`.
    pub fn h_factor(&self, z: f64) -> Result<f64> {
        let r = self.r(z)?;
        let big_r = self.curve.r(z)?;
        let m = 0.5 * r * r * r;
        Ok(big_r * ((r * r + 2.0 * m / big_r).sqrt() + (1.0 + r * r).sqrt()))
    }

    /// `-R_z/(2M - R)` without regularization.
    pub fn quotient_plain(&self, z: f64) -> Result<f64> {
        let gap = self.horizon_gap(z)?;
        if gap == 0.0 {
            return Err(Error::Singular {
                kind: crate::kernel::SingularityKind::Horizon,
                z,
                detail: "2M - R = 0".into(),
            });
        }
        Ok(-self.curve.drdz(z)? / gap)
    }

    pub fn in_switch_window(&self, z: f64) -> bool {
        self.z_lambda()
            .is_some_and(|zl| (z - zl).abs() <= SWITCH_WIDTH * (1.0 + zl))
    }

    /// `Q = -R_z/(2M - R)`, continued through `z_Λ` when `c = c_Λ`.
    pub fn quotient(&self, z: f64) -> Result<f64> {
        if !self.in_switch_window(z) {
            return self.quotient_plain(z);
        }
        if !self.is_removable() {
            return Err(Error::NotRemovable {
                c: self.params.c,
                c_lambda: self.c_lambda.unwrap_or(f64::NAN),
            });
        }
        let zl = self.z_lambda().unwrap_or(z);
        let d = z - zl;
        if d == 0.0 {
            return Ok(-self.curve.d2rdz2(zl)? / self.horizon_gap_deriv(zl)?);
        }
        // both vanish at z_Λ; divide out (z - z_Λ) exactly
        let q = QuadratureSpec::precise();
        let num = integrate_adaptive(
            |s| self.curve.d2rdz2(zl + s * d).unwrap_or(f64::NAN),
            0.0,
            1.0,
            &q,
        )?;
        let den = integrate_adaptive(
            |s| self.horizon_gap_deriv(zl + s * d).unwrap_or(f64::NAN),
            0.0,
            1.0,
            &q,
        )?;
        Ok(-num / den)
    }

    /// `dt/dz = -H Q`
    pub fn dtdz(&self, z: f64) -> Result<f64> {
        Ok(-self.h_factor(z)? * self.quotient(z)?)
    }

    /// `ρ = 3/(2a³)`
    pub fn energy_density(&self, z: f64) -> f64 {
        1.5 / self.params.scale_factor_at(z).powi(3)
    }
}

pub fn closed_solution(z: f64, p: &FrwParams, curve: &LuminosityCurve) -> Result<ClosedPoint> {
    let r = curve.integral(z)? / ((1.0 + p.z0) * p.c);
    let a = p.scale_factor_at(z);
    let eta = inverse_scale_factor(a, p)?;
    Ok(ClosedPoint {
        z,
        a,
        eta,
        r,
        t: time_param(eta, p),
        m: 0.5 * r * r * r,
    })
}

fn c_lambda_at(curve: &LuminosityCurve, z_lambda: f64, z0: f64) -> f64 {
    let o = curve.omega_lambda();
    let y = 1.0 + z_lambda;
    y / ((1.0 + z0) * (o + (1.0 - o) * y.powi(3)).cbrt())
}

/// `c_Λ = (1+z_Λ)/((1+z₀)(Ω_Λ + (1-Ω_Λ)(1+z_Λ)³)^{1/3})`
pub fn c_lambda(curve: &LuminosityCurve, z0: f64) -> Result<f64> {
    let cp = find_z_lambda_on(curve, 1e-13)?;
    Ok(c_lambda_at(curve, cp.z_lambda, z0))
}

/// `𝔐_Λ = 3𝓘(1+z_Λ)/(2(1+z_Λ))`, the slope of `M` at `z_Λ` for `c = c_Λ`.
pub fn mass_slope_at_critical(curve: &LuminosityCurve, z_lambda: f64) -> f64 {
    let y = 1.0 + z_lambda;
    1.5 * integrand(y, curve.params()) / y
}

/// `lim Q = (1-Ω_Λ)(1+z_Λ)² 𝓘(1+z_Λ)²/2`
pub fn quotient_limit(curve: &LuminosityCurve, z_lambda: f64) -> f64 {
    let y = 1.0 + z_lambda;
    let i = integrand(y, curve.params());
    0.5 * (1.0 - curve.omega_lambda()) * y * y * i * i
}

pub fn regularized_quotient(z: f64, p: &FrwParams, curve: &LuminosityCurve) -> Result<f64> {
    FrwClosed::new(*p, curve)?.quotient(z)
}

pub fn energy_density(z: f64, p: &FrwParams) -> f64 {
    1.5 / p.scale_factor_at(z).powi(3)
}

/// Log-log slope of a quantity against the distance to a singular point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowUpFit {
    /// `"adot"` for `ȧ[z] = (da/dz)/(dt/dz)` at `z_Λ`, `"dtdz"` at a horizon.
    pub quantity: String,
    pub at: f64,
    pub exponent: f64,
    /// `(|z - z*|, |quantity|)`
    pub samples: Vec<(f64, f64)>,
}

fn fit_exponent(samples: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = samples.iter().map(|&(d, v)| (d.ln(), v.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone)]
pub struct CrossingRun {
    pub params: FrwParams,
    pub z_lambda: Option<f64>,
    pub c_lambda: Option<f64>,
    pub removable: bool,
    /// `t(z)`; `r` and `M` come from the closed forms.
    pub trajectory: Trajectory,
    /// Whether `z_Λ` lies inside the integration range.
    pub crosses_critical: bool,
    /// Right-hand-side evaluations that used the divided-difference form.
    pub window_evaluations: usize,
    pub terminal_event: Option<EventRecord>,
    pub blow_up: Option<BlowUpFit>,
}

impl CrossingRun {
    pub fn z_end(&self) -> f64 {
        self.trajectory.z_end()
    }

    pub fn t(&self, z: f64) -> Option<f64> {
        self.trajectory.eval(z).map(|y| y[0])
    }

    pub fn completed(&self) -> bool {
        self.terminal_event.is_none()
    }
}

/// Integrates `dt/dz = -H Q` from `z_range[0]`, starting from the closed
/// form. With `c = c_Λ` the run passes through `z_Λ`; otherwise it stops at
/// `z_Λ` (or where `2M = R`) and reports the local blow-up exponent.
pub fn cross_singularity(
    p: &FrwParams,
    curve: &LuminosityCurve,
    z_range: [f64; 2],
    spec: &IvpSpec,
) -> Result<CrossingRun> {
    let frw = FrwClosed::new(*p, curve)?;
    let [za, zb] = z_range;
    let t_start = frw.point(za)?.t;
    let removable = frw.is_removable();
    let windowed = Cell::new(0usize);
    let rhs = |z: f64, _y: &[f64], out: &mut [f64]| -> Result<()> {
        out[0] = if removable {
            if frw.in_switch_window(z) {
                windowed.set(windowed.get() + 1);
            }
            frw.dtdz(z)?
        } else {
            -frw.h_factor(z)? * frw.quotient_plain(z)?
        };
        Ok(())
    };
    let mut events = Vec::new();
    if !removable && frw.z_lambda().is_some() {
        events.push(
            EventSpec::new(EVENT_CRITICAL, |z, _y: &[f64]| {
                curve.drdz(z).unwrap_or(f64::NAN)
            })
            .terminal(true),
        );
        events.push(
            EventSpec::new(EVENT_HORIZON, |z, _y: &[f64]| {
                frw.horizon_gap(z).unwrap_or(f64::NAN)
            })
            .terminal(true),
        );
    }
    let has_events = !events.is_empty();
    let trajectory = match solve_ivp(rhs, &[t_start], za, zb, spec, &events) {
        Ok(t) => t,
        // dt/dz has a simple pole at a horizon, so the stepper stalls just
        // short of the sign change; a stall on a root of 2M - R is that event
        Err(IvpError::StepUnderflow {
            z, state, partial, ..
        }) if has_events && horizon_root_near(&frw, z).is_some() => {
            let mut traj = *partial;
            let zh = horizon_root_near(&frw, z).unwrap_or(z);
            traj.events.push(EventRecord {
                index: 1,
                label: EVENT_HORIZON.into(),
                z: zh,
                state,
                rising: frw.horizon_gap_deriv(zh).is_ok_and(|d| d > 0.0),
                terminal: true,
            });
            traj.status = IvpStatus::TerminalEvent {
                record: traj.events.len() - 1,
            };
            traj
        }
        Err(IvpError::InitialRhs(e) | IvpError::StepUnderflow { cause: Some(e), .. }) => {
            return Err(e)
        }
        Err(other) => {
            return Err(Error::Integration {
                z: f64::NAN,
                message: other.to_string(),
            })
        }
    };
    let terminal_event = trajectory.terminated_by_event().cloned();
    let blow_up = match &terminal_event {
        Some(ev) => Some(blow_up_fit(&frw, ev, za)?),
        None => None,
    };
    Ok(CrossingRun {
        params: *p,
        z_lambda: frw.z_lambda(),
        c_lambda: frw.c_lambda,
        removable,
        trajectory,
        crosses_critical: frw.z_lambda().is_some_and(|zl| (zl - za) * (zl - zb) < 0.0),
        window_evaluations: windowed.get(),
        terminal_event,
        blow_up,
    })
}

fn horizon_root_near(frw: &FrwClosed, z: f64) -> Option<f64> {
    let w = 1e-6 * (1.0 + z);
    let g = |x: f64| frw.horizon_gap(x).unwrap_or(f64::NAN);
    find_root_bracketed(g, z - w, z + w, 1e-15).ok()
}

fn blow_up_fit(frw: &FrwClosed, ev: &EventRecord, z_start: f64) -> Result<BlowUpFit> {
    let (quantity, at) = if ev.label == EVENT_CRITICAL {
        ("adot", frw.z_lambda().unwrap_or(ev.z))
    } else {
        ("dtdz", ev.z)
    };
    let side = if z_start <= at { -1.0 } else { 1.0 };
    let scale = 1.0 + at;
    let p = frw.params;
    let samples = (0..=8)
        .map(|k| {
            let d = scale * 10f64.powf(-2.0 - 3.0 * k as f64 / 8.0);
            let z = at + side * d;
            let dt = -frw.h_factor(z)? * frw.quotient_plain(z)?;
            let v = if quantity == "adot" {
                let dadz = -p.c * (1.0 + p.z0) / ((1.0 + z) * (1.0 + z));
                dadz / dt
            } else {
                dt
            };
            Ok((d, v.abs()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BlowUpFit {
        quantity: quantity.into(),
        at,
        exponent: fit_exponent(&samples),
        samples,
    })
}

/// One-sided second-order derivatives of `f` on either side of `z`.
pub fn derivative_jump(f: impl Fn(f64) -> Option<f64>, z: f64, h: f64) -> Option<f64> {
    let (f0, fl1, fl2, fr1, fr2) = (
        f(z)?,
        f(z - h)?,
        f(z - 2.0 * h)?,
        f(z + h)?,
        f(z + 2.0 * h)?,
    );
    let left = (3.0 * f0 - 4.0 * fl1 + fl2) / (2.0 * h);
    let right = (-3.0 * f0 + 4.0 * fr1 - fr2) / (2.0 * h);
    Some((left - right).abs())
}

/// Maximum relative deviation between the general system and a closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub z_range: [f64; 2],
    pub z_reached: f64,
    pub samples: usize,
    /// Per component `(r, t, M)`.
    pub max_rel_dev: [f64; 3],
    pub max_rel_deviation: f64,
    pub worst_at: f64,
    pub stopped: Option<String>,
}

pub const ORACLE_SAMPLES: usize = 200;

fn compare_general<D: RadiusData + ?Sized>(
    data: &D,
    model: &LtbModel,
    closed: impl Fn(f64) -> Result<GeodesicState>,
    z_range: [f64; 2],
    spec: &IvpSpec,
) -> Result<OracleReport> {
    let init = closed(z_range[0])?;
    let trace = trace_general(&init, z_range[1], data, model, spec)?;
    let traj = &trace.trajectory;
    let z_reached = traj.z_end();
    let mut dev = [0.0f64; 3];
    let mut worst = (0.0, z_range[0]);
    for (z, y) in traj.sample_uniform(ORACLE_SAMPLES) {
        let c = closed(z)?.vector();
        for k in 0..3 {
            let d = (y[k] - c[k]).abs() / c[k].abs().max(f64::MIN_POSITIVE);
            dev[k] = dev[k].max(d);
            if d > worst.0 {
                worst = (d, z);
            }
        }
    }
    let mut stopped = trace.stopped.map(|e| e.to_string());
    if stopped.is_none() && (z_reached - z_range[1]).abs() > 1e-12 * (1.0 + z_range[1].abs()) {
        stopped = traj
            .terminated_by_event()
            .map(|e| format!("event {} at z = {}", e.label, e.z));
    }
    Ok(OracleReport {
        z_range,
        z_reached,
        samples: ORACLE_SAMPLES,
        max_rel_dev: dev,
        max_rel_deviation: dev.iter().copied().fold(0.0, f64::max),
        worst_at: worst.1,
        stopped,
    })
}

/// General system with the FRW model on luminosity data, against the closed
/// form. The closed form sets the initial state at `z_range[0]`.
pub fn oracle_compare(
    p: &FrwParams,
    curve: &LuminosityCurve,
    z_range: [f64; 2],
    spec: &IvpSpec,
) -> Result<OracleReport> {
    let model = LtbModel::frw(p.c, p.t0());
    compare_general(
        curve,
        &model,
        |z| Ok(closed_solution(z, p, curve)?.state()),
        z_range,
        spec,
    )
}

/// Shell radius along the past light cone of an open FRW model with
/// `ȧ² = 1 + 1/a`, normalized so that `a = c` at `z₀` and the observed shell
/// at `z₀` has comoving radius `r₀`. On this data the closed forms solve the
/// general system exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpenFrwData {
    pub params: FrwParams,
    pub r0: f64,
    k: f64,
    chi_offset: f64,
}

impl OpenFrwData {
    pub fn new(params: FrwParams, r0: f64) -> Result<Self> {
        if !(r0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "r0 must be positive, got {r0}"
            )));
        }
        let k = params.c * (1.0 + params.z0);
        let mut d = Self {
            params,
            r0,
            k,
            chi_offset: 0.0,
        };
        d.chi_offset = r0.asinh() - d.log_term(1.0 + params.z0);
        Ok(d)
    }

    fn log_term(&self, y: f64) -> f64 {
        let (s, sk) = ((self.k + y).sqrt(), self.k.sqrt());
        ((s - sk) / (s + sk)).ln()
    }

    /// Comoving distance `χ`, with `r = sinh χ`.
    pub fn chi(&self, z: f64) -> f64 {
        self.chi_offset + self.log_term(1.0 + z)
    }

    fn chi_derivs(&self, z: f64) -> (f64, f64) {
        let y = 1.0 + z;
        let s = self.k + y;
        let sk = self.k.sqrt();
        let d1 = sk / (y * s.sqrt());
        let d2 = sk * (-1.0 / (y * y * s.sqrt()) - 0.5 / (y * s * s.sqrt()));
        (d1, d2)
    }

    pub fn point(&self, z: f64) -> Result<ClosedPoint> {
        let p = &self.params;
        let a = p.scale_factor_at(z);
        let eta = inverse_scale_factor(a, p)?;
        let r = self.chi(z).sinh();
        Ok(ClosedPoint {
            z,
            a,
            eta,
            r,
            t: time_param(eta, p),
            m: 0.5 * r * r * r,
        })
    }

    pub fn oracle_compare(&self, z_range: [f64; 2], spec: &IvpSpec) -> Result<OracleReport> {
        let model = LtbModel::frw(self.params.c, self.params.t0());
        compare_general(self, &model, |z| Ok(self.point(z)?.state()), z_range, spec)
    }
}

impl RadiusData for OpenFrwData {
    fn radius(&self, z: f64) -> Result<f64> {
        Ok(self.k * self.chi(z).sinh() / (1.0 + z))
    }

    fn radius_deriv(&self, z: f64) -> Result<f64> {
        let y = 1.0 + z;
        let chi = self.chi(z);
        let (d1, _) = self.chi_derivs(z);
        Ok(self.k * (chi.cosh() * d1 / y - chi.sinh() / (y * y)))
    }

    fn radius_second_deriv(&self, z: f64) -> Result<f64> {
        let y = 1.0 + z;
        let chi = self.chi(z);
        let (d1, d2) = self.chi_derivs(z);
        let (sh, ch) = (chi.sinh(), chi.cosh());
        Ok(self.k
            * (sh * d1 * d1 / y + ch * d2 / y - 2.0 * ch * d1 / (y * y) + 2.0 * sh / (y * y * y)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::luminosity::CosmoParams;

    fn params(c: f64, z0: f64) -> FrwParams {
        FrwParams::new(c, z0, TimeConvention::ConstraintConsistent).unwrap()
    }

    fn curve(o: f64) -> LuminosityCurve {
        LuminosityCurve::new(CosmoParams::new(o).unwrap())
    }

    #[test]
    fn scale_factor_at_zero_and_unit_c() {
        let p = params(0.7, 1.0);
        assert!((scale_factor_param(0.0, &p) - 0.7).abs() < 1e-15);
        let p = params(1.0, 1.0);
        for eta in [-0.3, 0.4, 1.7] {
            let expect = 1.5 * f64::cosh(eta) - 0.5 + SQRT2 * f64::sinh(eta);
            assert!((scale_factor_param(eta, &p) - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn inverse_round_trip_near_lower_end() {
        let p = params(1.0, 1.0);
        for a in [1e-9, 1e-4, 0.3, 1.0, 40.0] {
            let eta = inverse_scale_factor(a, &p).unwrap();
            assert!(
                (scale_factor_param(eta, &p) / a - 1.0).abs() < 1e-12,
                "a = {a}"
            );
        }
    }

    #[test]
    fn time_at_zero_both_conventions() {
        let mut p = params(2.0, 1.0);
        assert!((time_param(0.0, &p) - 6f64.sqrt()).abs() < 1e-15);
        p.convention = TimeConvention::Sqrt2Scaled;
        assert!((time_param(0.0, &p) - SQRT2 * 6f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn scaled_time_derivative_is_sqrt2_scale_factor() {
        let mut p = params(0.4, 1.0);
        p.convention = TimeConvention::Sqrt2Scaled;
        for eta in [-0.2, 0.3, 1.1] {
            let h = 1e-5;
            let fd = (time_param(eta + h, &p) - time_param(eta - h, &p)) / (2.0 * h);
            assert!((fd - SQRT2 * scale_factor_param(eta, &p)).abs() < 1e-8);
        }
    }

    #[test]
    fn scale_factor_vanishes_at_lower_end() {
        for c in [0.01, 0.5, 3.0] {
            let p = params(c, 1.0);
            assert!(scale_factor_param(p.eta_min(), &p).abs() < 1e-12);
            assert!(scale_factor_param_deriv(p.eta_min(), &p).abs() < 1e-12);
        }
    }

    #[test]
    fn scaled_audit_at_origin() {
        let mut p = params(1.0, 1.0);
        p.convention = TimeConvention::Sqrt2Scaled;
        let a = audit_convention(&p, &[0.0]);
        assert!((a.max_constraint_residual - 1.0).abs() < 1e-14);
        assert!(!a.verdict);
    }

    #[test]
    fn c_lambda_matter_only() {
        let c = curve(0.0);
        assert!((c_lambda(&c, 1.0).unwrap() - 0.5).abs() < 1e-12);
        assert!((c_lambda(&c, 3.0).unwrap() - 0.25).abs() < 1e-12);
        assert!(matches!(
            c_lambda(&curve(1.0), 1.0),
            Err(Error::NoCriticalPoint)
        ));
    }

    #[test]
    fn c_lambda_gives_horizon_at_critical_point() {
        let cv = curve(0.5);
        let cl = c_lambda(&cv, 1.0).unwrap();
        let f = FrwClosed::new(params(cl, 1.0), &cv).unwrap();
        let zl = f.z_lambda().unwrap();
        assert!(f.horizon_gap(zl).unwrap().abs() < 1e-10);
        assert!(f.is_removable());
    }

    #[test]
    fn closed_solution_at_observer() {
        let cv = curve(0.3);
        let p = params(0.8, 1.5);
        let pt = closed_solution(1.5, &p, &cv).unwrap();
        assert_eq!(pt.a, 0.8);
        assert_eq!(pt.eta, 0.0);
        assert!((pt.t - p.k_c).abs() < 1e-15);
        assert!((pt.r - cv.r(1.5).unwrap() / 0.8).abs() < 1e-14);
    }

    #[test]
    fn quotient_limit_matter_only() {
        let cv = curve(0.0);
        let zl = 1.25;
        assert!((quotient_limit(&cv, zl) - 2.0 / 9.0).abs() < 1e-14);
        let p = params(c_lambda(&cv, 1.0).unwrap(), 1.0);
        let q = regularized_quotient(zl, &p, &cv).unwrap();
        assert!((q - 2.0 / 9.0).abs() < 1e-8);
    }

    #[test]
    fn quotient_is_continuous_at_switch() {
        let cv = curve(0.0);
        let f = FrwClosed::new(params(0.5, 1.0), &cv).unwrap();
        let zl = f.z_lambda().unwrap();
        let w = SWITCH_WIDTH * (1.0 + zl);
        for side in [-1.0, 1.0] {
            let edge = zl + side * w;
            let inner = f.quotient(edge).unwrap();
            let outer = f.quotient(edge + side * 1e-12).unwrap();
            assert!(inner > 0.0);
            assert!((inner - outer).abs() < 1e-8, "{inner} vs {outer}");
        }
    }

    #[test]
    fn off_slope_quotient_is_not_removable() {
        let cv = curve(0.0);
        let p = params(0.6, 1.0);
        assert!(matches!(
            regularized_quotient(1.25, &p, &cv),
            Err(Error::NotRemovable { .. })
        ));
        assert!(regularized_quotient(2.0, &p, &cv).is_ok());
    }

    #[test]
    fn rationalized_time_rate_matches_system() {
        let cv = curve(0.2);
        let f = FrwClosed::new(params(0.9, 1.0), &cv).unwrap();
        for z in [1.1, 2.0, 4.0] {
            let pt = f.point(z).unwrap();
            let big_r = cv.r(z).unwrap();
            let s = (pt.r * pt.r + 2.0 * pt.m / big_r).sqrt();
            let w = (1.0 + pt.r * pt.r).sqrt();
            let direct = cv.drdz(z).unwrap() / (s - w);
            assert!((f.dtdz(z).unwrap() - direct).abs() < 1e-12 * (1.0 + direct.abs()));
        }
    }

    #[test]
    fn energy_density_routes_agree() {
        let cv = curve(0.4);
        let p = params(1.3, 0.5);
        for z in [0.5, 1.0, 3.0] {
            let pt = closed_solution(z, &p, &cv).unwrap();
            let raw = 1.5 * pt.r * pt.r / (cv.r(z).unwrap().powi(2) * pt.a);
            assert!((raw - energy_density(z, &p)).abs() < 1e-12 * raw);
        }
        assert!((energy_density(0.5, &p) - 1.5 / 1.3f64.powi(3)).abs() < 1e-14);
    }

    #[test]
    fn open_data_derivatives() {
        let d = OpenFrwData::new(params(0.7, 1.0), 0.4).unwrap();
        assert!((d.radius(1.0).unwrap() - 0.7 * 0.4).abs() < 1e-15);
        for z in [1.0, 1.7, 3.0] {
            let h = 1e-5;
            let fd1 = (d.radius(z + h).unwrap() - d.radius(z - h).unwrap()) / (2.0 * h);
            let fd2 = (d.radius_deriv(z + h).unwrap() - d.radius_deriv(z - h).unwrap()) / (2.0 * h);
            assert!((fd1 - d.radius_deriv(z).unwrap()).abs() < 1e-9);
            assert!((fd2 - d.radius_second_deriv(z).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn open_data_closed_form_solves_general_system() {
        let d = OpenFrwData::new(params(1.0, 1.0), 0.5).unwrap();
        let rep = d
            .oracle_compare([1.0, 1.9], &IvpSpec::with_tolerances(1e-11, 1e-13))
            .unwrap();
        assert!(rep.stopped.is_none(), "{rep:?}");
        assert!(rep.max_rel_deviation < 1e-7, "{rep:?}");
    }

    #[test]
    fn small_c_stops_at_horizon_before_critical_point() {
        let cv = curve(0.0);
        let cl = c_lambda(&cv, 1.0).unwrap();
        let run = cross_singularity(
            &params(0.9 * cl, 1.0),
            &cv,
            [1.0, 1.5],
            &IvpSpec::with_tolerances(1e-11, 1e-13),
        )
        .unwrap();
        let ev = run.terminal_event.as_ref().unwrap();
        assert_eq!(ev.label, EVENT_HORIZON);
        assert!(ev.z > 1.03 && ev.z < 1.25, "{}", ev.z);
        let fit = run.blow_up.unwrap();
        assert!((fit.exponent + 1.0).abs() < 0.05, "{}", fit.exponent);
    }
}
