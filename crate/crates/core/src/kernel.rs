//! Pointwise LTB quantities along the past null cone and the right-hand
//! side of the redshift system for `(r, t, M)`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::luminosity::RadiusData;
use crate::numerics::{
    integrate_adaptive, solve_ivp, EventRecord, EventSpec, IvpError, IvpSpec, QuadratureSpec,
    Trajectory,
};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Relative size below which a denominator counts as vanished.
pub const SINGULAR_THRESHOLD: f64 = 1e-12;

pub const EVENT_HORIZON: &str = "horizon";
pub const EVENT_TANGENCY: &str = "tangency";
pub const EVENT_CRITICAL: &str = "critical_redshift";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingularityKind {
    Horizon,
    Tangency,
    CriticalRedshift,
    GeometricDenominator,
}

impl fmt::Display for SingularityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SingularityKind::Horizon => "horizon",
            SingularityKind::Tangency => "tangency",
            SingularityKind::CriticalRedshift => "critical_redshift",
            SingularityKind::GeometricDenominator => "geometric_denominator",
        })
    }
}

/// Background functions `E, E', R₀, R₀'` of `r`, the signs of `Ṙ` and `R'`,
/// and the reference time `t₀`.
#[derive(Clone)]
pub struct LtbModel {
    pub label: String,
    e: ScalarFn,
    e_prime: ScalarFn,
    r0: ScalarFn,
    r0_prime: ScalarFn,
    pub sigma: Sign,
    pub delta: Sign,
    pub t0: f64,
    pub quad: QuadratureSpec,
}

impl fmt::Debug for LtbModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LtbModel")
            .field("label", &self.label)
            .field("sigma", &self.sigma)
            .field("delta", &self.delta)
            .field("t0", &self.t0)
            .finish_non_exhaustive()
    }
}

impl LtbModel {
    pub fn new(
        label: impl Into<String>,
        e: ScalarFn,
        e_prime: ScalarFn,
        r0: ScalarFn,
        r0_prime: ScalarFn,
        sigma: Sign,
        delta: Sign,
        t0: f64,
    ) -> Self {
        Self {
            label: label.into(),
            e,
            e_prime,
            r0,
            r0_prime,
            sigma,
            delta,
            t0,
            quad: QuadratureSpec::precise(),
        }
    }

    /// `E = r²/2`, `R₀ = c r`, `σ = δ = +1`.
    pub fn frw(c: f64, t0: f64) -> Self {
        Self::new(
            format!("frw(c={c})"),
            Arc::new(|r| 0.5 * r * r),
            Arc::new(|r| r),
            Arc::new(move |r| c * r),
            Arc::new(move |_| c),
            Sign::Plus,
            Sign::Plus,
            t0,
        )
    }

    /// `E = e₀ r^p`, `R₀ = c r`.
    pub fn power_law(e0: f64, p: f64, c: f64, sigma: Sign, delta: Sign, t0: f64) -> Self {
        Self::new(
            format!("power_law(e0={e0}, p={p}, c={c})"),
            Arc::new(move |r: f64| e0 * r.powf(p)),
            Arc::new(move |r: f64| e0 * p * r.powf(p - 1.0)),
            Arc::new(move |r| c * r),
            Arc::new(move |_| c),
            sigma,
            delta,
            t0,
        )
    }

    /// `E ≡ e`, `R₀ = c r`, `σ = δ = +1`.
    pub fn constant_energy(e: f64, c: f64, t0: f64) -> Self {
        Self::new(
            format!("constant_energy(e={e}, c={c})"),
            Arc::new(move |_| e),
            Arc::new(|_| 0.0),
            Arc::new(move |r| c * r),
            Arc::new(move |_| c),
            Sign::Plus,
            Sign::Plus,
            t0,
        )
    }

    pub fn with_signs(mut self, sigma: Sign, delta: Sign) -> Self {
        self.sigma = sigma;
        self.delta = delta;
        self
    }

    pub fn e(&self, r: f64) -> f64 {
        (self.e)(r)
    }

    pub fn e_prime(&self, r: f64) -> f64 {
        (self.e_prime)(r)
    }

    pub fn r0(&self, r: f64) -> f64 {
        (self.r0)(r)
    }

    pub fn r0_prime(&self, r: f64) -> f64 {
        (self.r0_prime)(r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodesicState {
    pub z: f64,
    pub r: f64,
    pub t: f64,
    pub m: f64,
}

impl GeodesicState {
    pub fn new(z: f64, r: f64, t: f64, m: f64) -> Self {
        Self { z, r, t, m }
    }

    pub fn vector(&self) -> [f64; 3] {
        [self.r, self.t, self.m]
    }

    pub fn from_slice(z: f64, y: &[f64]) -> Self {
        Self::new(z, y[0], y[1], y[2])
    }
}

/// `J = √2 (t - t₀) - σ ∫_{R₀}^{R} √(τ/(τE+M)) dτ` with every argument explicit.
#[allow(clippy::too_many_arguments)]
pub fn j_value(
    t: f64,
    t0: f64,
    r_shell: f64,
    r0: f64,
    e: f64,
    m: f64,
    sigma: Sign,
    quad: &QuadratureSpec,
) -> Result<f64> {
    if !(r_shell > 0.0 && r0 > 0.0) {
        return Err(Error::Domain(format!(
            "need R, R0 > 0 (R = {r_shell}, R0 = {r0})"
        )));
    }
    if r_shell.min(r0) * e + m <= 0.0 {
        return Err(Error::Domain(
            "tau E + M vanishes inside the integration range".into(),
        ));
    }
    let integral = integrate_adaptive(|tau| (tau / (tau * e + m)).sqrt(), r0, r_shell, quad)?;
    Ok(2f64.sqrt() * (t - t0) - sigma.value() * integral)
}

pub fn eval_j(r_shell: f64, state: &GeodesicState, model: &LtbModel) -> Result<f64> {
    j_value(
        state.t,
        model.t0,
        r_shell,
        model.r0(state.r),
        model.e(state.r),
        state.m,
        model.sigma,
        &model.quad,
    )
}

/// Everything derived from one state and shell radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelEval {
    pub z: f64,
    pub r_shell: f64,
    pub r0: f64,
    pub e: f64,
    pub e_prime: f64,
    pub r0_prime: f64,
    /// `𝔥 = R₀/R`
    pub h: f64,
    pub xi: f64,
    pub xi_sharp: f64,
    pub j_r: f64,
    pub j_r0: f64,
    pub j_m: f64,
    pub j_e: f64,
    pub f: f64,
    pub g: f64,
    /// `√(2E + 2M/R)`
    pub s: f64,
    /// `√(1 + 2E)`
    pub w: f64,
    pub b: f64,
    /// `B w / (1+z)`
    pub a: f64,
    /// `B w`
    pub a_bare: f64,
    pub det_u: f64,
    pub denom_geo: f64,
    pub denom_sol: f64,
    pub sigma: f64,
    pub delta: f64,
}

pub fn eval_kernel(state: &GeodesicState, r_shell: f64, model: &LtbModel) -> Result<KernelEval> {
    let r = state.r;
    let (e, e_prime, r0, r0_prime) = (model.e(r), model.e_prime(r), model.r0(r), model.r0_prime(r));
    if !(e > 0.0) {
        return Err(Error::Domain(format!(
            "E must be positive, got {e} at r = {r}"
        )));
    }
    if !(r_shell > 0.0 && r0 > 0.0) {
        return Err(Error::Domain(format!(
            "need R, R0 > 0 (R = {r_shell}, R0 = {r0})"
        )));
    }
    let m = state.m;
    let sigma = model.sigma.value();
    let delta = model.delta.value();
    let xi = m / r_shell;
    let xi_sharp = m / r0;
    let h = r0 / r_shell;
    if e + xi <= 0.0 || e + xi_sharp <= 0.0 {
        return Err(Error::Domain(format!(
            "E + M/R or E + M/R0 not positive (xi = {xi}, xi# = {xi_sharp})"
        )));
    }
    let j_r = -sigma / (e + xi).sqrt();
    let j_r0 = sigma / (e + xi_sharp).sqrt();
    let (im, ie) = if h == 1.0 {
        (0.0, 0.0)
    } else {
        let im = integrate_adaptive(
            |nu| nu.sqrt() * (e * nu + xi).powf(-1.5),
            1.0,
            h,
            &model.quad,
        )?;
        let ie = integrate_adaptive(
            |nu| nu.powf(1.5) * (e * nu + xi).powf(-1.5),
            1.0,
            h,
            &model.quad,
        )?;
        (im, ie)
    };
    let j_m = -0.5 * sigma * im;
    let j_e = -0.5 * sigma * r_shell * ie;
    let f = -(e_prime * j_e + r0_prime * j_r0) / j_r;
    let g = -j_m / j_r;
    let s = (2.0 * e + 2.0 * xi).sqrt();
    let w = (1.0 + 2.0 * e).sqrt();
    let b = sigma * s;
    let a_bare = b * w;
    Ok(KernelEval {
        z: state.z,
        r_shell,
        r0,
        e,
        e_prime,
        r0_prime,
        h,
        xi,
        xi_sharp,
        j_r,
        j_r0,
        j_m,
        j_e,
        f,
        g,
        s,
        w,
        b,
        a: a_bare / (1.0 + state.z),
        a_bare,
        det_u: b * (e_prime * g - f / r_shell) * (w - sigma * delta * s),
        denom_geo: delta * sigma * s - w,
        denom_sol: g * e_prime * r_shell - f,
        sigma,
        delta,
    })
}

/// The 3×3 matrix acting on `(r_z, t_z, M_z)`; its right-hand side is
/// `(A, 0, R_z)`.
pub fn u_matrix(k: &KernelEval, m: f64) -> [[f64; 3]; 3] {
    let r = k.r_shell;
    [
        [
            k.e_prime - m * k.f / (r * r),
            0.0,
            1.0 / r - m * k.g / (r * r),
        ],
        [k.delta * k.b * k.f, k.a_bare, k.delta * k.g * k.b],
        [k.f, k.sigma * k.s, k.g],
    ]
}

pub fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodesicRhs {
    pub dr: f64,
    pub dt: f64,
    pub dm: f64,
}

/// `(dr/dz, dt/dz, dM/dz)` together with the kernel it was built from.
pub fn assemble_rhs_with_kernel<D: RadiusData + ?Sized>(
    state: &GeodesicState,
    curve: &D,
    model: &LtbModel,
) -> Result<(GeodesicRhs, KernelEval)> {
    let jet = curve.jet(state.z)?;
    let k = eval_kernel(state, jet.r, model)?;
    let (r, m, rz) = (jet.r, state.m, jet.r_z);

    let geo_num = (k.delta * rz).abs();
    if k.denom_geo.abs() < SINGULAR_THRESHOLD * (1.0 + geo_num) {
        let kind = if k.sigma == k.delta {
            SingularityKind::Horizon
        } else {
            SingularityKind::GeometricDenominator
        };
        return Err(Error::Singular {
            kind,
            z: state.z,
            detail: format!("denom_geo = {:e}, 2M - R = {:e}", k.denom_geo, 2.0 * m - r),
        });
    }
    let sol_num = (k.g * k.a * r).abs() + (k.f * r * k.a).abs();
    if k.denom_sol.abs() < SINGULAR_THRESHOLD * (1.0 + sol_num) {
        return Err(Error::Singular {
            kind: SingularityKind::Tangency,
            z: state.z,
            detail: format!("denom_sol = {:e}", k.denom_sol),
        });
    }
    let den = k.denom_sol;
    let geo = k.denom_geo;
    let dr = k.g * k.a * r / den - rz * (m * k.g - r) * k.w / (r * geo * den);
    let dt = k.delta * rz / geo;
    let dm = -k.f * r * k.a / den - rz * (r * r * k.e_prime - k.f * m) * k.w / (r * geo * den);
    Ok((GeodesicRhs { dr, dt, dm }, k))
}

pub fn assemble_rhs<D: RadiusData + ?Sized>(
    state: &GeodesicState,
    curve: &D,
    model: &LtbModel,
) -> Result<GeodesicRhs> {
    assemble_rhs_with_kernel(state, curve, model).map(|x| x.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolvabilityReport {
    pub solvable: bool,
    /// `sgn E' ≠ sgn R₀'`
    pub opposite_signs: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub denom_sol: f64,
}

/// Sufficient conditions for `denom_sol ≠ 0`: opposite signs of `E'` and
/// `R₀'`, or `|E'(R₀-R)²/(2M√(27E))| < |R₀'√R₀/√(ER₀+M)|`.
pub fn check_local_solvability(
    state: &GeodesicState,
    r_shell: f64,
    model: &LtbModel,
) -> Result<SolvabilityReport> {
    let k = eval_kernel(state, r_shell, model)?;
    let opposite_signs = k.e_prime * k.r0_prime < 0.0;
    let num = (k.e_prime * (k.r0 - r_shell).powi(2)).abs();
    let lhs = if num == 0.0 {
        0.0
    } else {
        num / (2.0 * state.m * (27.0 * k.e).sqrt()).abs()
    };
    let rhs = (k.r0_prime * k.r0.sqrt() / (k.e * k.r0 + state.m).sqrt()).abs();
    Ok(SolvabilityReport {
        solvable: opposite_signs || lhs < rhs,
        opposite_signs,
        lhs,
        rhs,
        denom_sol: k.denom_sol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularityReport {
    pub kind: SingularityKind,
    pub z_location: f64,
    /// A critical-redshift zero that coincides with a horizon zero.
    pub possibly_removable: bool,
    pub diagnostics: BTreeMap<String, f64>,
}

/// Classifies event records by label. Zeros of `R_z` and `2M - R` closer
/// than `coincidence_tol` are marked possibly removable.
pub fn classify_events(
    events: &[EventRecord],
    sigma_equals_delta: bool,
    coincidence_tol: f64,
) -> Vec<SingularityReport> {
    let zeros_of = |label: &str| -> Vec<f64> {
        events
            .iter()
            .filter(|e| e.label == label)
            .map(|e| e.z)
            .collect()
    };
    let horizon_zeros = zeros_of(EVENT_HORIZON);
    let critical_zeros = zeros_of(EVENT_CRITICAL);
    let near = |z: f64, set: &[f64]| set.iter().any(|w| (w - z).abs() <= coincidence_tol);

    let mut out = Vec::new();
    for ev in events {
        let kind = match ev.label.as_str() {
            EVENT_HORIZON if sigma_equals_delta => SingularityKind::Horizon,
            EVENT_HORIZON => continue,
            EVENT_TANGENCY => SingularityKind::Tangency,
            EVENT_CRITICAL => SingularityKind::CriticalRedshift,
            _ => continue,
        };
        let possibly_removable = match kind {
            SingularityKind::CriticalRedshift => near(ev.z, &horizon_zeros),
            SingularityKind::Horizon => near(ev.z, &critical_zeros),
            _ => false,
        };
        let mut diagnostics = BTreeMap::new();
        diagnostics.insert("rising".into(), if ev.rising { 1.0 } else { 0.0 });
        diagnostics.insert("terminal".into(), if ev.terminal { 1.0 } else { 0.0 });
        out.push(SingularityReport {
            kind,
            z_location: ev.z,
            possibly_removable,
            diagnostics,
        });
    }
    out
}

/// Classification of a general trace, with `R`, `R_z`, `2M - R` and the
/// denominators attached at each located event.
pub fn classify_singularity<D: RadiusData + ?Sized>(
    trajectory: &Trajectory,
    model: &LtbModel,
    curve: &D,
    coincidence_tol: f64,
) -> Vec<SingularityReport> {
    let mut reports = classify_events(
        &trajectory.events,
        model.sigma == model.delta,
        coincidence_tol,
    );
    for (rep, ev) in reports.iter_mut().zip(trajectory.events.iter().filter(|e| {
        matches!(e.label.as_str(), EVENT_TANGENCY | EVENT_CRITICAL)
            || (e.label == EVENT_HORIZON && model.sigma == model.delta)
    })) {
        let st = GeodesicState::from_slice(ev.z, &ev.state);
        if let Ok(jet) = curve.jet(ev.z) {
            rep.diagnostics.insert("R".into(), jet.r);
            rep.diagnostics.insert("R_z".into(), jet.r_z);
            rep.diagnostics.insert("2M-R".into(), 2.0 * st.m - jet.r);
            if let Ok(k) = eval_kernel(&st, jet.r, model) {
                rep.diagnostics.insert("denom_sol".into(), k.denom_sol);
                rep.diagnostics.insert("denom_geo".into(), k.denom_geo);
                rep.diagnostics.insert("det_u".into(), k.det_u);
            }
        }
    }
    reports
}

/// Outcome of integrating the general system.
#[derive(Debug, Clone)]
pub struct GeneralTrace {
    pub trajectory: Trajectory,
    pub singularities: Vec<SingularityReport>,
    /// Set when the run ended early on a vanished denominator.
    pub stopped: Option<Error>,
}

/// Integrates `(r, t, M)` from `init` to `z1`. Horizon and tangency zeros
/// are terminal; `R_z` zeros are recorded only.
pub fn trace_general<D: RadiusData + ?Sized>(
    init: &GeodesicState,
    z1: f64,
    curve: &D,
    model: &LtbModel,
    spec: &IvpSpec,
) -> Result<GeneralTrace> {
    let rhs = |z: f64, y: &[f64], out: &mut [f64]| -> Result<()> {
        let d = assemble_rhs(&GeodesicState::from_slice(z, y), curve, model)?;
        out[0] = d.dr;
        out[1] = d.dt;
        out[2] = d.dm;
        Ok(())
    };
    let horizon_terminal = model.sigma == model.delta;
    let events = vec![
        EventSpec::new(EVENT_HORIZON, |z, y: &[f64]| {
            curve.radius(z).map(|r| 2.0 * y[2] - r).unwrap_or(f64::NAN)
        })
        .terminal(horizon_terminal),
        EventSpec::new(EVENT_TANGENCY, |z, y: &[f64]| {
            let st = GeodesicState::from_slice(z, y);
            curve
                .radius(z)
                .and_then(|r| eval_kernel(&st, r, model))
                .map(|k| k.denom_sol)
                .unwrap_or(f64::NAN)
        })
        .terminal(true),
        EventSpec::new(EVENT_CRITICAL, |z, _y: &[f64]| {
            curve.radius_deriv(z).unwrap_or(f64::NAN)
        }),
    ];
    let (trajectory, stopped) = match solve_ivp(rhs, &init.vector(), init.z, z1, spec, &events) {
        Ok(t) => (t, None),
        Err(IvpError::StepUnderflow {
            z, cause, partial, ..
        }) => {
            let err = cause.unwrap_or(Error::Integration {
                z,
                message: "step size underflow".into(),
            });
            (*partial, Some(err))
        }
        Err(IvpError::TooManySteps { z, partial }) => (
            *partial,
            Some(Error::Integration {
                z,
                message: "step budget exhausted".into(),
            }),
        ),
        Err(IvpError::InitialRhs(e)) => return Err(e),
        Err(e) => {
            return Err(Error::Integration {
                z: init.z,
                message: e.to_string(),
            })
        }
    };
    let tol = 1e-6 * (1.0 + init.z.abs().max(z1.abs()));
    let singularities = classify_singularity(&trajectory, model, curve, tol);
    Ok(GeneralTrace {
        trajectory,
        singularities,
        stopped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::luminosity::{CosmoParams, LuminosityCurve};

    fn quad() -> QuadratureSpec {
        QuadratureSpec::precise()
    }

    #[test]
    fn j_vanishes_at_reference() {
        let v = j_value(1.3, 1.3, 2.0, 2.0, 0.7, 0.4, Sign::Plus, &quad()).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn j_with_unit_integrand() {
        let t = 2.0;
        let v = j_value(t, 0.5, 4.0, 1.0, 1.0, 0.0, Sign::Plus, &quad()).unwrap();
        assert!((v - (2f64.sqrt() * 1.5 - 3.0)).abs() < 1e-13);
    }

    #[test]
    fn j_domain_error() {
        assert!(matches!(
            j_value(0.0, 0.0, 1.0, 2.0, 1.0, -2.0, Sign::Plus, &quad()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn kernel_at_unit_ratio() {
        let model = LtbModel::power_law(0.8, 1.5, 1.3, Sign::Plus, Sign::Plus, 1.0);
        let r = 0.7;
        let st = GeodesicState::new(0.5, r, 1.0, 0.2);
        let k = eval_kernel(&st, model.r0(r), &model).unwrap();
        assert_eq!(k.j_m, 0.0);
        assert_eq!(k.j_e, 0.0);
        assert!((k.f - model.r0_prime(r)).abs() < 1e-15);
        assert_eq!(k.g, 0.0);
        assert!(k.j_r < 0.0);
    }

    #[test]
    fn horizon_zeroes_determinant() {
        let model = LtbModel::power_law(0.6, 2.0, 1.7, Sign::Plus, Sign::Plus, 1.0);
        let r_shell = 0.9;
        let st = GeodesicState::new(0.3, 1.1, 0.4, r_shell / 2.0);
        let k = eval_kernel(&st, r_shell, &model).unwrap();
        assert!(k.det_u.abs() < 1e-15);
        assert!(k.denom_geo.abs() < 1e-15);
    }

    #[test]
    fn frw_solution_denominator_is_negative() {
        // past cone: a <= c
        for c in [0.3, 1.0, 4.0] {
            let model = LtbModel::frw(c, 0.0);
            for a in [0.01 * c, 0.5 * c, c] {
                let r = 0.8;
                let st = GeodesicState::new(1.0, r, 0.0, r * r * r / 2.0);
                let k = eval_kernel(&st, r * a, &model).unwrap();
                assert!(k.denom_sol < 0.0, "c = {c}, a = {a}");
            }
        }
    }

    #[test]
    fn rhs_matches_linear_solve_of_u() {
        let model = LtbModel::power_law(0.5, 1.2, 1.4, Sign::Plus, Sign::Plus, 1.0);
        let curve = LuminosityCurve::new(CosmoParams::new(0.3).unwrap());
        let st = GeodesicState::new(0.8, 0.6, 0.9, 0.1);
        let (d, k) = assemble_rhs_with_kernel(&st, &curve, &model).unwrap();
        let u = u_matrix(&k, st.m);
        let y = [k.a, 0.0, curve.drdz(st.z).unwrap()];
        let det = det3(&u);
        let col = |j: usize| {
            let mut m = u;
            for i in 0..3 {
                m[i][j] = y[i];
            }
            det3(&m) / det
        };
        assert!((col(0) - d.dr).abs() < 1e-10 * (1.0 + d.dr.abs()));
        assert!((col(1) - d.dt).abs() < 1e-10 * (1.0 + d.dt.abs()));
        assert!((col(2) - d.dm).abs() < 1e-10 * (1.0 + d.dm.abs()));
    }

    #[test]
    fn critical_redshift_freezes_time() {
        let curve = LuminosityCurve::new(CosmoParams::new(0.0).unwrap());
        let model = LtbModel::frw(1.0, 0.0);
        let st = GeodesicState::new(1.25, 0.5, 1.0, 0.05);
        let d = assemble_rhs(&st, &curve, &model).unwrap();
        assert!(d.dt.abs() < 1e-14);
    }

    #[test]
    fn solvability_conditions() {
        let model = LtbModel::power_law(0.5, -1.0, 1.0, Sign::Plus, Sign::Plus, 0.0);
        let st = GeodesicState::new(0.5, 1.0, 0.0, 0.2);
        assert!(
            check_local_solvability(&st, 0.6, &model)
                .unwrap()
                .opposite_signs
        );

        let model = LtbModel::frw(1.0, 0.0);
        let st = GeodesicState::new(0.5, 1.0, 0.0, 0.5);
        let rep = check_local_solvability(&st, model.r0(1.0), &model).unwrap();
        assert_eq!(rep.lhs, 0.0);
        assert!(rep.solvable);
        assert!(rep.denom_sol < 0.0);
    }

    #[test]
    fn singular_denominator_is_reported() {
        let curve = LuminosityCurve::new(CosmoParams::new(0.0).unwrap());
        let model = LtbModel::frw(1.0, 0.0);
        let z = 2.0;
        let r_shell = curve.r(z).unwrap();
        let st = GeodesicState::new(z, 0.5, 1.0, r_shell / 2.0);
        let err = assemble_rhs(&st, &curve, &model).unwrap_err();
        assert!(matches!(
            err,
            Error::Singular {
                kind: SingularityKind::Horizon,
                ..
            }
        ));
    }

    #[test]
    fn classification_marks_coincident_zeros() {
        let rec = |label: &str, z: f64| EventRecord {
            index: 0,
            label: label.into(),
            z,
            state: vec![0.0; 3],
            rising: false,
            terminal: false,
        };
        let evs = vec![rec(EVENT_CRITICAL, 1.25), rec(EVENT_HORIZON, 1.25 + 1e-10)];
        let reps = classify_events(&evs, true, 1e-8);
        assert_eq!(reps.len(), 2);
        assert!(reps.iter().all(|r| r.possibly_removable));

        let reps = classify_events(&evs[..1], true, 1e-8);
        assert_eq!(reps[0].kind, SingularityKind::CriticalRedshift);
        assert!(!reps[0].possibly_removable);
        assert!(classify_events(&[], true, 1e-8).is_empty());
    }
}
