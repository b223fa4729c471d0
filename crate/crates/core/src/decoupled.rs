//! The constant-energy case `E ≡ 1, σ = δ = 1`, where the equation for
//! `ξ = M/R` no longer involves `r` or `t`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::certificate::{BoundCertificate, ClaimId, MarginTracker};
use crate::critical::find_z_lambda_on;
use crate::error::{Error, Result};
use crate::kernel::{LtbModel, Sign, SingularityKind};
use crate::luminosity::{LuminosityCurve, RadiusData, RadiusJet};
use crate::numerics::{
    integrate_adaptive, solve_ivp, Direction, EventRecord, EventSpec, IvpError, IvpSpec, IvpStatus,
    Trajectory,
};

/// `ρ = √(3/2)`
pub const RHO: f64 = 1.224_744_871_391_589;

pub const DEFAULT_EPSILON: f64 = 1e-6;

pub const EVENT_EXCLUSION: &str = "exclusion_band";

const SQRT3: f64 = 1.732_050_807_568_877_2;
const SQRT6: f64 = 2.449_489_742_783_178;

/// Which coefficient multiplies `ξ R_z/(R Δ_ξ)` in the `ξ` equation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XiForm {
    /// `√3 √(1+ξ)`, the form the growth theorems are stated for.
    #[default]
    Printed,
    /// `√2 √(1+ξ)`, obtained from `dM/dz` of the general system with `E ≡ 1`.
    MassConsistent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoupledOptions {
    /// Half-width of the excluded band `|2ξ - 1| < ε`.
    pub epsilon: f64,
    pub xi_form: XiForm,
}

impl Default for DecoupledOptions {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            xi_form: XiForm::Printed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoupledState {
    pub z: f64,
    pub r: f64,
    pub t: f64,
    pub xi: f64,
}

impl DecoupledState {
    pub fn new(z: f64, r: f64, t: f64, xi: f64) -> Self {
        Self { z, r, t, xi }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoupledRhs {
    pub dr: f64,
    pub dt: f64,
    pub dxi: f64,
}

/// `Δ_ξ = √3 - √(2+2ξ)`, zero at `ξ = 1/2`.
pub fn delta_xi(xi: f64) -> f64 {
    SQRT3 - (2.0 + 2.0 * xi).sqrt()
}

/// `K_ξ = -√3 √(1+ξ)/Δ_ξ`; tends to `ρ` as `ξ → ∞`.
pub fn k_xi(xi: f64) -> f64 {
    -SQRT3 * (1.0 + xi).sqrt() / delta_xi(xi)
}

fn require_unit_energy(model: &LtbModel, r: f64) -> Result<()> {
    if model.e(r) != 1.0
        || model.e_prime(r) != 0.0
        || model.sigma != Sign::Plus
        || model.delta != Sign::Plus
    {
        return Err(Error::Precondition(
            "decoupled system needs E = 1, E' = 0 and sigma = delta = +1".into(),
        ));
    }
    Ok(())
}

fn check_band(z: f64, xi: f64, epsilon: f64) -> Result<()> {
    if xi < 0.0 {
        return Err(Error::Precondition(format!(
            "xi must be non-negative, got {xi}"
        )));
    }
    if (2.0 * xi - 1.0).abs() < epsilon {
        return Err(Error::Singular {
            kind: SingularityKind::Horizon,
            z,
            detail: format!("xi = {xi} inside the exclusion band |2 xi - 1| < {epsilon}"),
        });
    }
    Ok(())
}

/// Right-hand side of the scalar `ξ` equation.
pub fn xi_rhs(z: f64, xi: f64, jet: &RadiusJet, opts: &DecoupledOptions) -> Result<f64> {
    check_band(z, xi, opts.epsilon)?;
    let coef = match opts.xi_form {
        XiForm::Printed => SQRT3,
        XiForm::MassConsistent => 2f64.sqrt(),
    };
    let root = (1.0 + xi).sqrt();
    Ok(SQRT6 * root / (1.0 + z) + xi * (jet.r_z / jet.r) * coef * root / delta_xi(xi))
}

/// `𝓙₁`, `𝓙₂` and the bounds they are compared against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct J1J2 {
    pub j1: f64,
    pub j2: f64,
    pub h: f64,
    pub xi: f64,
    pub xi_sharp: f64,
    pub r0_prime: f64,
    /// `√(𝔥(1+ξ♯))/R₀' · (1/√(1+ξ) - 1/√(𝔥+ξ))`
    pub j1_middle_bound: f64,
    /// `√𝔥 / (2R₀'(1+ξ))`
    pub j1_final_bound: f64,
    /// `1/R₀'`
    pub j2_bound: f64,
    /// `(1 + √𝔥/2)/R₀'`
    pub sum_bound: f64,
}

impl J1J2 {
    pub fn sum(&self) -> f64 {
        self.j2 + self.xi * self.j1
    }

    /// Which links of the estimate chain hold at this point, in order:
    /// `0 ≤ 𝓙₁`, `𝓙₁ ≤ middle`, `middle ≤ final`, `0 < 𝓙₂ ≤ 1/R₀'`,
    /// `0 < 𝓙₂ + ξ𝓙₁ ≤ (1+√𝔥/2)/R₀'`.
    pub fn links(&self, rel_slack: f64) -> [bool; 5] {
        let le = |a: f64, b: f64| a <= b + rel_slack * b.abs().max(a.abs());
        [
            self.j1 >= 0.0,
            le(self.j1, self.j1_middle_bound),
            le(self.j1_middle_bound, self.j1_final_bound),
            self.j2 > 0.0 && le(self.j2, self.j2_bound),
            self.sum() > 0.0 && le(self.sum(), self.sum_bound),
        ]
    }
}

fn j1_j2_raw(r_shell: f64, r: f64, xi: f64, model: &LtbModel) -> Result<J1J2> {
    let r0 = model.r0(r);
    let r0p = model.r0_prime(r);
    if !(r0 > 0.0 && r_shell > 0.0) {
        return Err(Error::Domain(format!(
            "need R, R0 > 0 (R = {r_shell}, R0 = {r0})"
        )));
    }
    let h = r0 / r_shell;
    let xi_sharp = xi * r_shell / r0;
    let integral = if h == 1.0 {
        0.0
    } else {
        integrate_adaptive(
            |nu| (nu / (nu + xi)).sqrt() / (nu + xi),
            1.0,
            h,
            &model.quad,
        )?
    };
    let j1 = (1.0 + xi_sharp).sqrt() / (2.0 * r0p) * integral;
    let j2 = ((1.0 + xi_sharp) / (1.0 + xi)).sqrt() / r0p;
    Ok(J1J2 {
        j1,
        j2,
        h,
        xi,
        xi_sharp,
        r0_prime: r0p,
        j1_middle_bound: (h * (1.0 + xi_sharp)).sqrt() / r0p
            * (1.0 / (1.0 + xi).sqrt() - 1.0 / (h + xi).sqrt()),
        j1_final_bound: h.sqrt() / (2.0 * r0p * (1.0 + xi)),
        j2_bound: 1.0 / r0p,
        sum_bound: (1.0 + 0.5 * h.sqrt()) / r0p,
    })
}

/// `𝓙₁ = -𝓖/𝓕` and `𝓙₂ = 1/𝓕` for `E ≡ 1`; needs `𝔥 ≥ 1` and `R₀' > 0`.
pub fn eval_j1_j2<D: RadiusData + ?Sized>(
    state: &DecoupledState,
    curve: &D,
    model: &LtbModel,
) -> Result<J1J2> {
    require_unit_energy(model, state.r)?;
    let r_shell = curve.radius(state.z)?;
    let r0 = model.r0(state.r);
    if r0 < r_shell {
        return Err(Error::Precondition(format!(
            "h = R0/R = {} < 1 (t > t0 is outside the constant-energy analysis)",
            r0 / r_shell
        )));
    }
    if !(model.r0_prime(state.r) > 0.0) {
        return Err(Error::Precondition("R0' must be positive".into()));
    }
    j1_j2_raw(r_shell, state.r, state.xi, model)
}

pub fn rhs_decoupled<D: RadiusData + ?Sized>(
    state: &DecoupledState,
    curve: &D,
    model: &LtbModel,
) -> Result<DecoupledRhs> {
    rhs_decoupled_with(state, curve, model, &DecoupledOptions::default())
}

pub fn rhs_decoupled_with<D: RadiusData + ?Sized>(
    state: &DecoupledState,
    curve: &D,
    model: &LtbModel,
    opts: &DecoupledOptions,
) -> Result<DecoupledRhs> {
    require_unit_energy(model, state.r)?;
    let jet = curve.jet(state.z)?;
    let dxi = xi_rhs(state.z, state.xi, &jet, opts)?;
    let (dr, dt) = rt_rhs(state.z, state.r, state.xi, &jet, model)?;
    Ok(DecoupledRhs { dr, dt, dxi })
}

fn rt_rhs(z: f64, r: f64, xi: f64, jet: &RadiusJet, model: &LtbModel) -> Result<(f64, f64)> {
    let j = j1_j2_raw(jet.r, r, xi, model)?;
    let d = delta_xi(xi);
    let dr = jet.r * j.j1 * SQRT6 * (1.0 + xi).sqrt() / (1.0 + z)
        + SQRT3 * jet.r_z * (j.j2 + xi * j.j1) / d;
    let dt = -jet.r_z / d;
    Ok((dr, dt))
}

/// One sampled point of a decoupled run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoupledSample {
    pub z: f64,
    pub r: f64,
    pub t: f64,
    pub xi: f64,
    pub r_shell: f64,
    pub r_z: f64,
    pub m: f64,
}

/// A run of the decoupled system: `ξ(z)` first, then `(r, t)`.
#[derive(Debug, Clone)]
pub struct DecoupledRun {
    pub init: DecoupledState,
    pub options: DecoupledOptions,
    pub xi: Trajectory,
    pub rt: Trajectory,
    /// Exclusion-band entry, if the run stopped there.
    pub stopped: Option<EventRecord>,
}

impl DecoupledRun {
    pub fn z_end(&self) -> f64 {
        self.rt.z_end()
    }

    pub fn state_at(&self, z: f64) -> Option<DecoupledState> {
        let xi = self.xi.eval(z)?[0];
        let rt = self.rt.eval(z)?;
        Some(DecoupledState::new(z, rt[0], rt[1], xi))
    }

    /// `n` uniformly spaced samples with the data attached.
    pub fn sample<D: RadiusData + ?Sized>(
        &self,
        curve: &D,
        n: usize,
    ) -> Result<Vec<DecoupledSample>> {
        let a = self.init.z;
        let b = self.z_end();
        (0..n)
            .map(|i| {
                let z = if n == 1 {
                    a
                } else {
                    a + (b - a) * i as f64 / (n - 1) as f64
                };
                let z = z.min(b);
                let st = self
                    .state_at(z)
                    .ok_or_else(|| Error::Domain(format!("z = {z} outside the run")))?;
                let jet = curve.jet(z)?;
                Ok(DecoupledSample {
                    z,
                    r: st.r,
                    t: st.t,
                    xi: st.xi,
                    r_shell: jet.r,
                    r_z: jet.r_z,
                    m: st.xi * jet.r,
                })
            })
            .collect()
    }
}

fn ivp_error(e: IvpError<Error>) -> Error {
    match e {
        IvpError::InitialRhs(e) => e,
        IvpError::StepUnderflow { cause: Some(c), .. } => c,
        IvpError::StepUnderflow { z, .. } => Error::Integration {
            z,
            message: "step size underflow".into(),
        },
        IvpError::TooManySteps { z, .. } => Error::Integration {
            z,
            message: "step budget exhausted".into(),
        },
        other => Error::Integration {
            z: f64::NAN,
            message: other.to_string(),
        },
    }
}

fn band_event<'a>(eps: f64, idx: usize) -> EventSpec<'a> {
    EventSpec::new(EVENT_EXCLUSION, move |_z, y: &[f64]| {
        (2.0 * y[idx] - 1.0).abs() - eps
    })
    .direction(Direction::Falling)
    .terminal(true)
}

/// Near the band `ξ - 1/2 ~ √(z* - z)`, so the edge `|2ξ - 1| = ε` lies
/// below any usable step and the controller stalls just outside it. A stall
/// that is heading into the band and would reach `ξ = 1/2` within a few
/// minimum steps (`|ξ - 1/2| / (2|ξ'|)` on that profile) is band entry.
fn band_stall<D: RadiusData + ?Sized>(
    z: f64,
    xi: f64,
    curve: &D,
    opts: &DecoupledOptions,
    spec: &IvpSpec,
) -> bool {
    let Ok(rate) = curve.jet(z).and_then(|j| xi_rhs(z, xi, &j, opts)) else {
        return (2.0 * xi - 1.0).abs() < 10.0 * opts.epsilon;
    };
    let gap = xi - 0.5;
    gap * rate < 0.0 && gap.abs() / (2.0 * rate.abs()) < 100.0 * spec.min_step
}

/// Turns a stall at the band into a terminal band event on the partial run.
fn stop_at_band(mut traj: Trajectory, z: f64, state: Vec<f64>) -> Trajectory {
    traj.events.push(EventRecord {
        index: 0,
        label: EVENT_EXCLUSION.into(),
        z,
        state,
        rising: false,
        terminal: true,
    });
    traj.status = IvpStatus::TerminalEvent {
        record: traj.events.len() - 1,
    };
    traj
}

pub fn solve_decoupled<D: RadiusData + ?Sized>(
    init: &DecoupledState,
    z1: f64,
    curve: &D,
    model: &LtbModel,
    spec: &IvpSpec,
    opts: &DecoupledOptions,
) -> Result<DecoupledRun> {
    require_unit_energy(model, init.r)?;
    check_band(init.z, init.xi, opts.epsilon)?;

    let xi_f = |z: f64, y: &[f64], out: &mut [f64]| -> Result<()> {
        out[0] = xi_rhs(z, y[0], &curve.jet(z)?, opts)?;
        Ok(())
    };
    let xi_traj = match solve_ivp(
        xi_f,
        &[init.xi],
        init.z,
        z1,
        spec,
        &[band_event(opts.epsilon, 0)],
    ) {
        Err(IvpError::StepUnderflow {
            z, state, partial, ..
        }) if band_stall(z, state[0], curve, opts, spec) => stop_at_band(*partial, z, state),
        other => other.map_err(ivp_error)?,
    };
    let stopped = xi_traj.terminated_by_event().cloned();
    let z_end = xi_traj.z_end();

    let rt_f = |z: f64, y: &[f64], out: &mut [f64]| -> Result<()> {
        let xi = xi_traj
            .eval(z)
            .ok_or_else(|| Error::Domain(format!("xi(z) unavailable at z = {z}")))?[0];
        let (dr, dt) = rt_rhs(z, y[0], xi, &curve.jet(z)?, model)?;
        out[0] = dr;
        out[1] = dt;
        Ok(())
    };
    // dt/dz ~ 1/Δ is integrable but steep at a band stop; a stall there
    // within a few minimum steps of the end is kept as the run
    let rt = match solve_ivp(rt_f, &[init.r, init.t], init.z, z_end, spec, &[]) {
        Err(IvpError::StepUnderflow { z, partial, .. })
            if stopped.is_some() && z_end - z < 100.0 * spec.min_step =>
        {
            *partial
        }
        other => other.map_err(ivp_error)?,
    };
    Ok(DecoupledRun {
        init: *init,
        options: *opts,
        xi: xi_traj,
        rt,
        stopped,
    })
}

/// The `(r, t, ξ)` system integrated as one vector; state order `[r, t, ξ]`.
pub fn solve_coupled<D: RadiusData + ?Sized>(
    init: &DecoupledState,
    z1: f64,
    curve: &D,
    model: &LtbModel,
    spec: &IvpSpec,
    opts: &DecoupledOptions,
) -> Result<Trajectory> {
    require_unit_energy(model, init.r)?;
    check_band(init.z, init.xi, opts.epsilon)?;
    let f = |z: f64, y: &[f64], out: &mut [f64]| -> Result<()> {
        let d = rhs_decoupled_with(
            &DecoupledState::new(z, y[0], y[1], y[2]),
            curve,
            model,
            opts,
        )?;
        out[0] = d.dr;
        out[1] = d.dt;
        out[2] = d.dxi;
        Ok(())
    };
    match solve_ivp(
        f,
        &[init.r, init.t, init.xi],
        init.z,
        z1,
        spec,
        &[band_event(opts.epsilon, 2)],
    ) {
        Err(IvpError::StepUnderflow {
            z, state, partial, ..
        }) if band_stall(z, state[2], curve, opts, spec) => Ok(stop_at_band(*partial, z, state)),
        other => other.map_err(ivp_error),
    }
}

/// Inputs and results of the successive-approximation estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzBox {
    pub xi_star: f64,
    pub epsilon: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub lambda: f64,
    pub h_star: f64,
    pub r_frak: f64,
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub m: f64,
}

impl LipschitzBox {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        xi_star: f64,
        epsilon: f64,
        rho_min: f64,
        rho_max: f64,
        lambda: f64,
        h_star: f64,
        r_frak: f64,
    ) -> Result<Self> {
        let inputs = [xi_star, epsilon, rho_min, rho_max, lambda, h_star, r_frak];
        if inputs.iter().any(|v| !(*v > 0.0) || !v.is_finite()) || rho_min > rho_max {
            return Err(Error::InvalidParameter(format!(
                "box inputs must be positive and finite: {inputs:?}"
            )));
        }
        let m1 = lambda * (SQRT3 + (2.0 + 2.0 * xi_star).sqrt()) / epsilon;
        let m2 =
            SQRT3 * (rho_max * (h_star / 2.0).sqrt() + (1.0 + h_star.sqrt() / 2.0) * m1) / r_frak;
        let m3 = (3.0 * (1.0 + xi_star)).sqrt() * (2f64.sqrt() + m1 * xi_star / rho_min);
        Ok(Self {
            xi_star,
            epsilon,
            rho_min,
            rho_max,
            lambda,
            h_star,
            r_frak,
            m1,
            m2,
            m3,
            m: m1.max(m2).max(m3),
        })
    }

    /// Bounds measured on `[z0, z0 + span]` with `r, ξ` within `b` of the
    /// initial values; `R₀` is assumed increasing in `r`.
    pub fn enclosing<D: RadiusData + ?Sized>(
        init: &DecoupledState,
        curve: &D,
        model: &LtbModel,
        span: f64,
        b: f64,
    ) -> Result<Self> {
        require_unit_energy(model, init.r)?;
        let n = 200;
        let (mut rho_min, mut rho_max, mut lambda) = (f64::INFINITY, 0.0f64, 0.0f64);
        for i in 0..=n {
            let z = init.z + span * i as f64 / n as f64;
            let jet = curve.jet(z)?;
            rho_min = rho_min.min(jet.r);
            rho_max = rho_max.max(jet.r);
            lambda = lambda.max(jet.r_z.abs());
        }
        let xi_lo = (init.xi - b).max(0.0);
        let xi_hi = init.xi + b;
        let epsilon = if xi_lo <= 0.5 && xi_hi >= 0.5 {
            0.0
        } else {
            (2.0 * xi_lo - 1.0).abs().min((2.0 * xi_hi - 1.0).abs())
        };
        if epsilon <= 0.0 {
            return Err(Error::Precondition(
                "box around xi0 reaches xi = 1/2".into(),
            ));
        }
        let h_star = model.r0(init.r + b) / rho_min;
        let r_frak = model.r0_prime(init.r).abs();
        // padding keeps the sampled extrema conservative
        Self::new(
            xi_hi,
            epsilon,
            rho_min * (1.0 - 1e-3),
            rho_max * (1.0 + 1e-3),
            lambda * (1.0 + 1e-3),
            h_star,
            r_frak,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardBox {
    pub bounds: LipschitzBox,
    /// Box radius, `b = 1/(2𝔐)`.
    pub b: f64,
    /// `[z₀, z₀ + min(span, b/𝔐)]`
    pub interval: [f64; 2],
}

/// Radius and existence interval for the successive approximations.
pub fn picard_box(init: &DecoupledState, bounds: &LipschitzBox, span: f64) -> PicardBox {
    let b = 0.5 / bounds.m;
    PicardBox {
        bounds: *bounds,
        b,
        interval: [init.z, init.z + span.min(b / bounds.m)],
    }
}

/// Builds a box consistent with its own radius: bounds measured for a
/// trial radius stay valid for the smaller radius `1/(2𝔐)`.
pub fn picard_box_for<D: RadiusData + ?Sized>(
    init: &DecoupledState,
    curve: &D,
    model: &LtbModel,
    span: f64,
) -> Result<PicardBox> {
    let mut trial = (0.5 * (2.0 * init.xi - 1.0).abs()).min(0.1);
    for _ in 0..20 {
        let bounds = LipschitzBox::enclosing(init, curve, model, span, trial)?;
        let pb = picard_box(init, &bounds, span);
        if pb.b <= trial {
            return Ok(pb);
        }
        trial = pb.b;
    }
    Err(Error::Precondition(
        "could not find a self-consistent Picard box".into(),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardResult {
    pub iterations: usize,
    pub converged: bool,
    /// Sup-norm change of the last iteration.
    pub last_change: f64,
    pub nodes: Vec<f64>,
    /// `[r, t, ξ]` at each node.
    pub states: Vec<[f64; 3]>,
    /// Largest distance from the initial state over all iterates.
    pub max_excursion: f64,
}

/// Successive approximations `X_{k+1}(z) = X₀ + ∫ f(s, X_k(s)) ds` on
/// `interval`, with the integral taken by the cumulative trapezoid rule.
#[allow(clippy::too_many_arguments)]
pub fn picard_iterate<D: RadiusData + ?Sized>(
    init: &DecoupledState,
    interval: [f64; 2],
    curve: &D,
    model: &LtbModel,
    opts: &DecoupledOptions,
    nodes: usize,
    max_iter: usize,
    tol: f64,
) -> Result<PicardResult> {
    let n = nodes.max(2);
    let zs: Vec<f64> = (0..n)
        .map(|i| interval[0] + (interval[1] - interval[0]) * i as f64 / (n - 1) as f64)
        .collect();
    let x0 = [init.r, init.t, init.xi];
    let mut x = vec![x0; n];
    let mut last_change = f64::INFINITY;
    let mut max_excursion = 0.0f64;
    for it in 1..=max_iter {
        let f: Vec<[f64; 3]> = zs
            .iter()
            .zip(&x)
            .map(|(&z, s)| {
                rhs_decoupled_with(
                    &DecoupledState::new(z, s[0], s[1], s[2]),
                    curve,
                    model,
                    opts,
                )
                .map(|d| [d.dr, d.dt, d.dxi])
            })
            .collect::<Result<_>>()?;
        let mut next = vec![x0; n];
        for i in 1..n {
            let h = zs[i] - zs[i - 1];
            for k in 0..3 {
                next[i][k] = next[i - 1][k] + 0.5 * h * (f[i - 1][k] + f[i][k]);
            }
        }
        last_change = next
            .iter()
            .zip(&x)
            .flat_map(|(a, b)| (0..3).map(move |k| (a[k] - b[k]).abs()))
            .fold(0.0, f64::max);
        for s in &next {
            for k in 0..3 {
                max_excursion = max_excursion.max((s[k] - x0[k]).abs());
            }
        }
        x = next;
        if last_change <= tol {
            return Ok(PicardResult {
                iterations: it,
                converged: true,
                last_change,
                nodes: zs,
                states: x,
                max_excursion,
            });
        }
    }
    Ok(PicardResult {
        iterations: max_iter,
        converged: false,
        last_change,
        nodes: zs,
        states: x,
        max_excursion,
    })
}

/// Sign pattern of `R_z` on an interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalClass {
    /// `R_z > 0`
    Increasing,
    /// `R_z < 0`
    Decreasing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpperBoundCheck {
    /// Infimum of `R/(z|R_z|)` over the sampled interval.
    pub c: f64,
    pub class: IntervalClass,
    pub interval: [f64; 2],
}

/// Largest `C` with `R[z] ≥ C z |R_z|` on a grid of `n` points in the
/// interval (the left end is skipped when it is 0).
pub fn check_upprbnd(
    curve: &LuminosityCurve,
    interval: [f64; 2],
    n: usize,
) -> Result<UpperBoundCheck> {
    let [lo, hi] = interval;
    if !(lo >= 0.0 && hi > lo) {
        return Err(Error::InvalidParameter(format!(
            "interval {interval:?} not inside (0, inf)"
        )));
    }
    if curve.omega_lambda() < 1.0 {
        let zl = find_z_lambda_on(curve, 1e-12)?.z_lambda;
        if zl > lo && zl < hi {
            return Err(Error::Precondition(format!(
                "interval straddles z_lambda = {zl}"
            )));
        }
    }
    let n = n.max(2);
    let mut c = f64::INFINITY;
    let mut class = None;
    for i in 0..n {
        let z = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        if z <= 0.0 {
            continue;
        }
        let jet = curve.jet(z)?;
        let this = if jet.r_z > 0.0 {
            IntervalClass::Increasing
        } else if jet.r_z < 0.0 {
            IntervalClass::Decreasing
        } else {
            continue;
        };
        match class {
            None => class = Some(this),
            Some(prev) if prev != this => {
                return Err(Error::Precondition(format!(
                    "dR/dz changes sign near z = {z}: interval straddles z_lambda"
                )));
            }
            _ => {}
        }
        c = c.min(jet.r / (z * jet.r_z.abs()));
    }
    let class =
        class.ok_or_else(|| Error::Precondition("dR/dz vanishes on the whole grid".into()))?;
    Ok(UpperBoundCheck { c, class, interval })
}

/// Samples used by the certificates.
pub const CERT_SAMPLES: usize = 1000;

const CERT_SLACK: f64 = 1e-9;

/// `M ≤ c₁R` (case 1: `0 < ξ₀ < 1/2`, `R_z < 0`) or `M ≤ c₂R` (case 2:
/// `ξ₀ > 1/2`, `R_z > 0`), given `R > C z |R_z|` on the run.
pub fn verify_thm1<D: RadiusData + ?Sized>(
    run: &DecoupledRun,
    curve: &D,
    c: f64,
) -> Result<BoundCertificate> {
    let xi0 = run.init.xi;
    let interval = [run.init.z, run.z_end()];
    let xi1 = c / (2.0 * c + 1.0);
    let xi2 = c / (2.0 * c - 1.0);
    let mut constants = BTreeMap::from([
        ("C".to_string(), c),
        ("xi0".to_string(), xi0),
        ("xi1_star".to_string(), xi1),
        ("xi2_star".to_string(), xi2),
        ("c1".to_string(), xi0.max(xi1)),
        ("c2".to_string(), xi0.max(xi2)),
    ]);
    if !(xi2 > 0.0) {
        constants.insert("xi2_star_nonpositive".into(), 1.0);
    }
    let claim = if xi0 < 0.5 {
        ClaimId::Thm1Case1
    } else {
        ClaimId::Thm1Case2
    };
    let samples = run.sample(curve, CERT_SAMPLES)?;
    let bound_ok = samples
        .iter()
        .all(|s| s.z <= 0.0 || s.r_shell >= c * s.z * s.r_z.abs() * (1.0 - 1e-12));
    if !bound_ok {
        return Ok(BoundCertificate::not_applicable(
            claim,
            interval,
            "R > C z |R_z| fails on the run",
            constants,
        ));
    }
    let (bound, sign_ok) = match claim {
        ClaimId::Thm1Case1 => (
            xi0.max(xi1),
            xi0 > 0.0 && samples.iter().all(|s| s.r_z < 0.0),
        ),
        _ => (
            xi0.max(xi2),
            xi0 > 0.5 && samples.iter().all(|s| s.r_z > 0.0),
        ),
    };
    if !sign_ok {
        return Ok(BoundCertificate::not_applicable(
            claim,
            interval,
            "sign of dR/dz or xi0 outside the case hypotheses",
            constants,
        ));
    }
    let mut m = MarginTracker::new(CERT_SLACK);
    for s in &samples {
        m.check(s.z, s.m, bound * s.r_shell);
    }
    Ok(m.finish(claim, interval, constants))
}

/// Constants of the two-sided growth bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thm2Constants {
    pub rho: f64,
    pub rho0: f64,
    pub q0: f64,
    pub c3: f64,
    pub c4: f64,
}

pub fn thm2_constants(xi0: f64, r_z0: f64) -> Thm2Constants {
    let rho0 = k_xi(xi0);
    let q0 = (xi0 + 1.0) / xi0;
    Thm2Constants {
        rho: RHO,
        rho0,
        q0,
        c3: (xi0 * r_z0.powf(RHO)).min(SQRT6 * (1.0 + xi0).sqrt()),
        c4: 6.0 * q0 * r_z0.powf(2.0 * rho0),
    }
}

impl Thm2Constants {
    pub fn lower(&self, r: f64, z: f64, z0: f64) -> f64 {
        self.c3 * (r.powf(1.0 - self.rho) + r * ((1.0 + z) / (1.0 + z0)).ln())
    }

    /// `c₄ (1 + ln(1+z))² R^{1-2ρ₀}`, the bound the argument delivers.
    pub fn upper(&self, r: f64, z: f64) -> f64 {
        self.c4 * (1.0 + (1.0 + z).ln()).powi(2) * r.powf(1.0 - 2.0 * self.rho0)
    }

    /// Same with the exponent `ρ - 1/2` in place of `ρ₀ - 1/2`.
    pub fn upper_with_rho(&self, r: f64, z: f64) -> f64 {
        self.c4 * (1.0 + (1.0 + z).ln()).powi(2) * r.powf(1.0 - 2.0 * self.rho)
    }
}

fn thm2_hypotheses(run: &DecoupledRun, samples: &[DecoupledSample]) -> Option<&'static str> {
    if run.init.xi <= 0.5 {
        return Some("xi0 must exceed 1/2");
    }
    if !samples.iter().all(|s| s.r_z < 0.0) {
        return Some("dR/dz must be negative on the run");
    }
    None
}

/// Two-sided bound on `M[z]` for `ξ₀ > 1/2` and decreasing `R`.
pub fn verify_thm2<D: RadiusData + ?Sized>(
    run: &DecoupledRun,
    curve: &D,
) -> Result<BoundCertificate> {
    let samples = run.sample(curve, CERT_SAMPLES)?;
    let interval = [run.init.z, run.z_end()];
    let r_z0 = curve.radius(run.init.z)?;
    let k = thm2_constants(run.init.xi, r_z0);
    let mut constants = BTreeMap::from([
        ("rho".to_string(), k.rho),
        ("rho0".to_string(), k.rho0),
        ("q0".to_string(), k.q0),
        ("c3".to_string(), k.c3),
        ("c4".to_string(), k.c4),
    ]);
    if let Some(reason) = thm2_hypotheses(run, &samples) {
        return Ok(BoundCertificate::not_applicable(
            ClaimId::Thm2,
            interval,
            reason,
            constants,
        ));
    }
    let mut m = MarginTracker::new(CERT_SLACK);
    let mut stmt = MarginTracker::new(CERT_SLACK);
    for s in &samples {
        m.check(s.z, k.lower(s.r_shell, s.z, run.init.z), s.m);
        m.check(s.z, s.m, k.upper(s.r_shell, s.z));
        stmt.check(s.z, s.m, k.upper_with_rho(s.r_shell, s.z));
    }
    let stmt = stmt.finish(ClaimId::Thm2, interval, BTreeMap::new());
    constants.insert("rho_exponent_worst_margin".into(), stmt.worst_margin);
    Ok(m.finish(ClaimId::Thm2, interval, constants))
}

/// Least-squares slope of `ln M` against `ln z` over samples with `z ≥ z_from`.
pub fn fitted_log_slope(samples: &[DecoupledSample], z_from: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.z >= z_from && s.m > 0.0)
        .map(|s| (s.z.ln(), s.m.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// `k₁ z^{ρ-1} ≤ M ≤ k₂ z^{2ρ-1+α}` with `k₁, k₂` from the two-sided bound
/// and the envelope `C₁/z < R < C₂/z`; the fitted slope of `ln M` over
/// `z ≥ max(10, z₀)` must also lie in `[ρ-1, 2ρ-1+α]`.
pub fn verify_growth_corollary(
    run: &DecoupledRun,
    curve: &LuminosityCurve,
    alpha: f64,
) -> Result<BoundCertificate> {
    let samples = run.sample(curve, CERT_SAMPLES)?;
    let z0 = run.init.z;
    let interval = [z0, run.z_end()];
    let r_z0 = curve.radius(z0)?;
    let k = thm2_constants(run.init.xi, r_z0);
    let mut constants = BTreeMap::from([
        ("alpha".to_string(), alpha),
        ("c3".to_string(), k.c3),
        ("c4".to_string(), k.c4),
    ]);
    let na = |reason: &str, constants| {
        Ok(BoundCertificate::not_applicable(
            ClaimId::GrowthCorollary,
            interval,
            reason,
            constants,
        ))
    };
    if curve.omega_lambda() >= 1.0 {
        return na("needs omega_lambda < 1", constants);
    }
    let zl = find_z_lambda_on(curve, 1e-12)?.z_lambda;
    constants.insert("z_lambda".into(), zl);
    if z0 <= zl {
        return na("needs z0 > z_lambda", constants);
    }
    if run.init.xi <= 2.0 {
        return na("needs M0 > 2 R[z0]", constants);
    }
    if let Some(reason) = thm2_hypotheses(run, &samples) {
        return na(reason, constants);
    }
    let zr = samples.iter().map(|s| s.z * s.r_shell);
    let c1 = zr.clone().fold(f64::INFINITY, f64::min) * (1.0 - 1e-12);
    let c2 = zr.fold(0.0, f64::max) * (1.0 + 1e-12);
    let k1 = k.c3 * c2.powf(1.0 - RHO);
    let up_exp = 2.0 * RHO - 1.0 + alpha;
    let k2 = samples
        .iter()
        .map(|s| {
            k.c4 * c1.powf(1.0 - 2.0 * k.rho0)
                * (1.0 + (1.0 + s.z).ln()).powi(2)
                * s.z.powf(2.0 * k.rho0 - 1.0 - up_exp)
        })
        .fold(0.0, f64::max);
    constants.insert("C1".into(), c1);
    constants.insert("C2".into(), c2);
    constants.insert("k1".into(), k1);
    constants.insert("k2".into(), k2);

    let mut m = MarginTracker::new(CERT_SLACK);
    for s in &samples {
        m.check(s.z, k1 * s.z.powf(RHO - 1.0), s.m);
        m.check(s.z, s.m, k2 * s.z.powf(up_exp));
    }
    let z_from = if interval[1] >= 20.0 {
        z0.max(10.0)
    } else {
        z0
    };
    if let Some(slope) = fitted_log_slope(&samples, z_from) {
        constants.insert("fitted_slope".into(), slope);
        constants.insert("fit_from".into(), z_from);
        m.check(interval[1], RHO - 1.0, slope);
        m.check(interval[1], slope, up_exp);
    }
    Ok(m.finish(ClaimId::GrowthCorollary, interval, constants))
}

/// `r` increasing and `t` decreasing along the run. Applies under either
/// case of the first theorem (`setup` 1 or 2) or with `ξ₀ > 1/2`, `R_z < 0`
/// (`setup` 3). Since `dt/dz = -R_z/Δ_ξ`, only setup 3 can hold.
pub fn verify_monotonicity_corollary<D: RadiusData + ?Sized>(
    run: &DecoupledRun,
    curve: &D,
    model: &LtbModel,
) -> Result<BoundCertificate> {
    let samples = run.sample(curve, CERT_SAMPLES)?;
    let interval = [run.init.z, run.z_end()];
    let xi0 = run.init.xi;
    let case1 = xi0 > 0.0 && xi0 < 0.5 && samples.iter().all(|s| s.r_z < 0.0);
    let case2 = xi0 > 0.5 && samples.iter().all(|s| s.r_z > 0.0);
    let growth = xi0 > 0.5 && samples.iter().all(|s| s.r_z < 0.0);
    let setup = match (case1, case2, growth) {
        (true, ..) => 1.0,
        (_, true, _) => 2.0,
        (.., true) => 3.0,
        _ => {
            return Ok(BoundCertificate::not_applicable(
                ClaimId::MonotonicityCorollary,
                interval,
                "no case of the mass bounds applies",
                BTreeMap::new(),
            ))
        }
    };
    let mut m = MarginTracker::new(0.0);
    for s in &samples {
        let st = DecoupledState::new(s.z, s.r, s.t, s.xi);
        let d = rhs_decoupled_with(&st, curve, model, &run.options)?;
        m.check(s.z, d.dt, 0.0);
        m.check(s.z, 0.0, d.dr);
    }
    Ok(m.finish(
        ClaimId::MonotonicityCorollary,
        interval,
        BTreeMap::from([("setup".to_string(), setup)]),
    ))
}

/// Convergence of the successive approximations to the Runge-Kutta
/// solution inside the guaranteed interval.
pub fn verify_picard<D: RadiusData + ?Sized>(
    init: &DecoupledState,
    span: f64,
    curve: &D,
    model: &LtbModel,
    spec: &IvpSpec,
    opts: &DecoupledOptions,
) -> Result<(BoundCertificate, PicardResult)> {
    let pb = picard_box_for(init, curve, model, span)?;
    let res = picard_iterate(init, pb.interval, curve, model, opts, 2001, 30, 1e-13)?;
    let rk = solve_coupled(init, pb.interval[1], curve, model, spec, opts)?;
    let mut dev = 0.0f64;
    for (z, s) in res.nodes.iter().zip(&res.states) {
        let y = rk
            .eval(*z)
            .ok_or_else(|| Error::Domain(format!("reference solution missing at z = {z}")))?;
        dev = (0..3).map(|k| (y[k] - s[k]).abs()).fold(dev, f64::max);
    }
    let constants = BTreeMap::from([
        ("M1".to_string(), pb.bounds.m1),
        ("M2".to_string(), pb.bounds.m2),
        ("M3".to_string(), pb.bounds.m3),
        ("M".to_string(), pb.bounds.m),
        ("b".to_string(), pb.b),
        ("iterations".to_string(), res.iterations as f64),
        ("max_deviation".to_string(), dev),
        ("max_excursion".to_string(), res.max_excursion),
    ]);
    let mut m = MarginTracker::new(0.0);
    m.check(pb.interval[1], dev, 1e-6);
    m.check(pb.interval[1], res.max_excursion, pb.b);
    m.check(pb.interval[1], if res.converged { 0.0 } else { 1.0 }, 0.0);
    Ok((m.finish(ClaimId::Prop6Box, pb.interval, constants), res))
}
