//! Explicit embedded Runge–Kutta 5(4) integration (Dormand–Prince) with
//! continuous output and event location.
//!
//! The right-hand side may refuse a point by returning `Err`; the step is
//! then rejected and retried with a smaller step. When the controller asks
//! for a step below `min_step` the run ends with [`IvpError::StepUnderflow`]
//! carrying the last accepted state and the partial trajectory.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::roots::find_root_bracketed;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;
const MAX_STEPS: usize = 500_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IvpSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
}

impl Default for IvpSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            initial_step: 1e-3,
            min_step: 1e-12,
            max_step: 0.5,
        }
    }
}

impl IvpSpec {
    pub fn with_tolerances(rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let ok = self.rel_tol > 0.0
            && self.abs_tol > 0.0
            && self.min_step > 0.0
            && self.min_step <= self.initial_step
            && self.initial_step <= self.max_step;
        if ok {
            Ok(())
        } else {
            Err(format!("invalid IVP spec {self:?}"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Rising,
    Falling,
    Any,
}

/// Scalar event `g(z, y) = 0` watched during integration.
pub struct EventSpec<'a> {
    pub label: String,
    pub function: Box<dyn Fn(f64, &[f64]) -> f64 + 'a>,
    pub direction: Direction,
    pub terminal: bool,
    pub tol: f64,
}

impl<'a> EventSpec<'a> {
    pub fn new(label: impl Into<String>, function: impl Fn(f64, &[f64]) -> f64 + 'a) -> Self {
        Self {
            label: label.into(),
            function: Box::new(function),
            direction: Direction::Any,
            terminal: false,
            tol: 1e-12,
        }
    }

    pub fn terminal(mut self, terminal: bool) -> Self {
        self.terminal = terminal;
        self
    }

    pub fn direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    fn matches(&self, before: f64, after: f64) -> Option<bool> {
        if before == 0.0 || before.is_nan() || after.is_nan() {
            return None;
        }
        let rising = before < 0.0 && after >= 0.0;
        let falling = before > 0.0 && after <= 0.0;
        match self.direction {
            Direction::Rising if rising => Some(true),
            Direction::Falling if falling => Some(false),
            Direction::Any if rising || falling => Some(rising),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    /// Position of the event in the `events` slice handed to [`solve_ivp`].
    pub index: usize,
    pub label: String,
    pub z: f64,
    pub state: Vec<f64>,
    pub rising: bool,
    pub terminal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum IvpStatus {
    Completed,
    TerminalEvent { record: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IvpStats {
    pub rhs_evals: usize,
    pub accepted: usize,
    pub rejected: usize,
}

/// One accepted step with its continuous extension.
#[derive(Debug, Clone)]
struct DenseSegment {
    z0: f64,
    h: f64,
    z_end: f64,
    coeffs: [Vec<f64>; 5],
}

impl DenseSegment {
    fn eval(&self, z: f64, out: &mut [f64]) {
        let theta = (z - self.z0) / self.h;
        let theta1 = 1.0 - theta;
        let [c0, c1, c2, c3, c4] = &self.coeffs;
        for i in 0..out.len() {
            out[i] = c0[i] + theta * (c1[i] + theta1 * (c2[i] + theta * (c3[i] + theta1 * c4[i])));
        }
    }

    fn contains(&self, z: f64) -> bool {
        let (lo, hi) = if self.h > 0.0 {
            (self.z0, self.z_end)
        } else {
            (self.z_end, self.z0)
        };
        z >= lo && z <= hi
    }
}

/// Dense-output solution of an initial value problem.
#[derive(Debug, Clone)]
pub struct Trajectory {
    dim: usize,
    z_start: f64,
    y_start: Vec<f64>,
    segments: Vec<DenseSegment>,
    /// Accepted step end points (plus the start and any terminal event point).
    pub nodes: Vec<(f64, Vec<f64>)>,
    pub events: Vec<EventRecord>,
    pub status: IvpStatus,
    pub stats: IvpStats,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn z_start(&self) -> f64 {
        self.z_start
    }

    pub fn z_end(&self) -> f64 {
        self.nodes.last().map(|n| n.0).unwrap_or(self.z_start)
    }

    pub fn final_state(&self) -> &[f64] {
        self.nodes
            .last()
            .map(|n| n.1.as_slice())
            .unwrap_or(&self.y_start)
    }

    pub fn terminated_by_event(&self) -> Option<&EventRecord> {
        match self.status {
            IvpStatus::TerminalEvent { record } => self.events.get(record),
            IvpStatus::Completed => None,
        }
    }

    /// Continuous solution at `z`, or `None` outside the covered interval.
    pub fn eval(&self, z: f64) -> Option<Vec<f64>> {
        if z == self.z_start {
            return Some(self.y_start.clone());
        }
        let forward = self.segments.first().map(|s| s.h > 0.0).unwrap_or(true);
        let idx = self
            .segments
            .partition_point(|s| if forward { s.z_end < z } else { s.z_end > z });
        let seg = self.segments.get(idx)?;
        if !seg.contains(z) {
            return None;
        }
        let mut out = vec![0.0; self.dim];
        seg.eval(z, &mut out);
        Some(out)
    }

    /// `n` points spread uniformly over the covered interval, endpoints included.
    pub fn sample_uniform(&self, n: usize) -> Vec<(f64, Vec<f64>)> {
        let a = self.z_start;
        let b = self.z_end();
        if n == 0 {
            return Vec::new();
        }
        if n == 1 || a == b {
            return vec![(a, self.y_start.clone())];
        }
        (0..n)
            .map(|i| {
                let z = if i + 1 == n {
                    b
                } else {
                    a + (b - a) * i as f64 / (n - 1) as f64
                };
                let y = if i + 1 == n {
                    self.final_state().to_vec()
                } else {
                    self.eval(z).expect("inside covered interval")
                };
                (z, y)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Error)]
pub enum IvpError<E: std::fmt::Debug + std::fmt::Display> {
    #[error("{0}")]
    InvalidSpec(String),
    #[error("right-hand side failed at the initial point: {0}")]
    InitialRhs(E),
    #[error("initial state is not finite")]
    NonFiniteInitial,
    #[error("stiff/singular: step size fell below the minimum at z = {z}{}", cause_suffix(.cause))]
    StepUnderflow {
        z: f64,
        state: Vec<f64>,
        cause: Option<E>,
        partial: Box<Trajectory>,
    },
    #[error("step budget exhausted at z = {z}")]
    TooManySteps { z: f64, partial: Box<Trajectory> },
}

fn cause_suffix<E: std::fmt::Display>(cause: &Option<E>) -> String {
    match cause {
        Some(c) => format!(" (last right-hand side failure: {c})"),
        None => String::new(),
    }
}

impl<E: std::fmt::Debug + std::fmt::Display> IvpError<E> {
    pub fn partial(&self) -> Option<&Trajectory> {
        match self {
            IvpError::StepUnderflow { partial, .. } | IvpError::TooManySteps { partial, .. } => {
                Some(partial)
            }
            _ => None,
        }
    }

    pub fn map_cause<F: std::fmt::Debug + std::fmt::Display>(
        self,
        f: impl Fn(E) -> F,
    ) -> IvpError<F> {
        match self {
            IvpError::InvalidSpec(s) => IvpError::InvalidSpec(s),
            IvpError::InitialRhs(e) => IvpError::InitialRhs(f(e)),
            IvpError::NonFiniteInitial => IvpError::NonFiniteInitial,
            IvpError::StepUnderflow {
                z,
                state,
                cause,
                partial,
            } => IvpError::StepUnderflow {
                z,
                state,
                cause: cause.map(f),
                partial,
            },
            IvpError::TooManySteps { z, partial } => IvpError::TooManySteps { z, partial },
        }
    }
}

fn error_norm(y0: &[f64], y1: &[f64], err: &[f64], spec: &IvpSpec) -> f64 {
    let n = y0.len().max(1) as f64;
    let sum: f64 = y0
        .iter()
        .zip(y1)
        .zip(err)
        .map(|((a, b), e)| {
            let sc = spec.abs_tol + spec.rel_tol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

struct Stages {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
}

/// Integrates `y' = rhs(z, y)` from `z0` to `z1` (either direction).
pub fn solve_ivp<F, E>(
    rhs: F,
    y0: &[f64],
    z0: f64,
    z1: f64,
    spec: &IvpSpec,
    events: &[EventSpec<'_>],
) -> Result<Trajectory, IvpError<E>>
where
    F: Fn(f64, &[f64], &mut [f64]) -> Result<(), E>,
    E: std::fmt::Debug + std::fmt::Display,
{
    spec.validate().map_err(IvpError::InvalidSpec)?;
    if y0.iter().any(|v| !v.is_finite()) || !z0.is_finite() || !z1.is_finite() {
        return Err(IvpError::NonFiniteInitial);
    }
    let dim = y0.len();
    let mut traj = Trajectory {
        dim,
        z_start: z0,
        y_start: y0.to_vec(),
        segments: Vec::new(),
        nodes: vec![(z0, y0.to_vec())],
        events: Vec::new(),
        status: IvpStatus::Completed,
        stats: IvpStats::default(),
    };
    if z0 == z1 {
        return Ok(traj);
    }
    let dir = (z1 - z0).signum();

    let mut st = Stages {
        k: std::array::from_fn(|_| vec![0.0; dim]),
        tmp: vec![0.0; dim],
    };
    rhs(z0, y0, &mut st.k[0]).map_err(IvpError::InitialRhs)?;
    traj.stats.rhs_evals += 1;

    let mut z = z0;
    let mut y = y0.to_vec();
    let mut y_new = vec![0.0; dim];
    let mut err_vec = vec![0.0; dim];
    let mut h = dir * spec.initial_step.min((z1 - z0).abs());
    let mut last_cause: Option<E> = None;
    let mut rejected_last = false;
    let mut g_prev: Vec<f64> = events.iter().map(|e| (e.function)(z0, y0)).collect();

    for _ in 0..MAX_STEPS {
        let remaining = z1 - z;
        if remaining * dir <= 0.0 {
            return Ok(traj);
        }
        let final_step = h.abs() >= remaining.abs();
        if final_step {
            h = remaining;
        }

        match try_step(&rhs, z, &y, h, &mut st, &mut y_new, &mut err_vec) {
            Ok(evals) => {
                traj.stats.rhs_evals += evals;
                let err = error_norm(&y, &y_new, &err_vec, spec);
                if err.is_finite() && err <= 1.0 {
                    let z_next = if final_step { z1 } else { z + h };
                    let seg = dense_segment(z, h, &y, &y_new, &st);
                    traj.stats.accepted += 1;

                    // events on [z, z_next]
                    let mut hits: Vec<(f64, usize, bool)> = Vec::new();
                    let g_new: Vec<f64> = events
                        .iter()
                        .map(|e| (e.function)(z_next, &y_new))
                        .collect();
                    for (i, ev) in events.iter().enumerate() {
                        if let Some(rising) = ev.matches(g_prev[i], g_new[i]) {
                            let zr = locate_event(ev, &seg, z, z_next, dim);
                            hits.push((zr, i, rising));
                        }
                    }
                    hits.sort_by(|a, b| ((a.0 - z) * dir).total_cmp(&((b.0 - z) * dir)));

                    let mut terminal_at: Option<(f64, usize)> = None;
                    for (zr, i, rising) in hits {
                        if let Some((zt, _)) = terminal_at {
                            if (zr - zt) * dir > 0.0 {
                                break;
                            }
                        }
                        let mut state = vec![0.0; dim];
                        seg.eval(zr, &mut state);
                        traj.events.push(EventRecord {
                            index: i,
                            label: events[i].label.clone(),
                            z: zr,
                            state,
                            rising,
                            terminal: events[i].terminal,
                        });
                        if events[i].terminal && terminal_at.is_none() {
                            terminal_at = Some((zr, traj.events.len() - 1));
                        }
                    }

                    if let Some((zt, rec)) = terminal_at {
                        let mut seg = seg;
                        seg.z_end = zt;
                        let state = traj.events[rec].state.clone();
                        traj.segments.push(seg);
                        traj.nodes.push((zt, state));
                        traj.status = IvpStatus::TerminalEvent { record: rec };
                        return Ok(traj);
                    }

                    let mut seg = seg;
                    seg.z_end = z_next;
                    traj.segments.push(seg);
                    z = z_next;
                    std::mem::swap(&mut y, &mut y_new);
                    traj.nodes.push((z, y.clone()));
                    g_prev = g_new;
                    let k7 = std::mem::take(&mut st.k[6]);
                    st.k[0] = k7;
                    st.k[6] = vec![0.0; dim];

                    let mut factor = if err == 0.0 {
                        MAX_FACTOR
                    } else {
                        (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
                    };
                    if rejected_last {
                        factor = factor.min(1.0);
                    }
                    rejected_last = false;
                    last_cause = None;
                    h = dir * (h.abs() * factor).min(spec.max_step);
                    continue;
                }
                traj.stats.rejected += 1;
                rejected_last = true;
                let factor = if err.is_finite() {
                    (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, 1.0)
                } else {
                    0.25
                };
                h *= factor;
            }
            Err((evals, cause)) => {
                traj.stats.rhs_evals += evals;
                traj.stats.rejected += 1;
                rejected_last = true;
                last_cause = Some(cause);
                h *= 0.25;
            }
        }

        if h.abs() < spec.min_step {
            return Err(IvpError::StepUnderflow {
                z,
                state: y.clone(),
                cause: last_cause,
                partial: Box::new(traj),
            });
        }
    }
    Err(IvpError::TooManySteps {
        z,
        partial: Box::new(traj),
    })
}

fn try_step<F, E>(
    rhs: &F,
    z: f64,
    y: &[f64],
    h: f64,
    st: &mut Stages,
    y_new: &mut [f64],
    err: &mut [f64],
) -> Result<usize, (usize, E)>
where
    F: Fn(f64, &[f64], &mut [f64]) -> Result<(), E>,
{
    let dim = y.len();
    let mut evals = 0usize;
    let stage_rows: [(f64, &[f64]); 5] = [
        (C2, &[A21]),
        (C3, &[A31, A32]),
        (C4, &[A41, A42, A43]),
        (C5, &[A51, A52, A53, A54]),
        (1.0, &[A61, A62, A63, A64, A65]),
    ];
    for (s, (c, row)) in stage_rows.iter().enumerate() {
        for i in 0..dim {
            let mut acc = 0.0;
            for (j, a) in row.iter().enumerate() {
                acc += a * st.k[j][i];
            }
            st.tmp[i] = y[i] + h * acc;
        }
        let (_, rest) = st.k.split_at_mut(s + 1);
        evals += 1;
        rhs(z + c * h, &st.tmp, &mut rest[0]).map_err(|e| (evals, e))?;
    }
    for i in 0..dim {
        y_new[i] = y[i]
            + h * (A71 * st.k[0][i]
                + A73 * st.k[2][i]
                + A74 * st.k[3][i]
                + A75 * st.k[4][i]
                + A76 * st.k[5][i]);
    }
    evals += 1;
    {
        let (_, rest) = st.k.split_at_mut(6);
        rhs(z + h, y_new, &mut rest[0]).map_err(|e| (evals, e))?;
    }
    for i in 0..dim {
        err[i] = h
            * (E1 * st.k[0][i]
                + E3 * st.k[2][i]
                + E4 * st.k[3][i]
                + E5 * st.k[4][i]
                + E6 * st.k[5][i]
                + E7 * st.k[6][i]);
    }
    Ok(evals)
}

fn dense_segment(z: f64, h: f64, y0: &[f64], y1: &[f64], st: &Stages) -> DenseSegment {
    let dim = y0.len();
    let mut coeffs: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; dim]);
    for i in 0..dim {
        let dy = y1[i] - y0[i];
        let bspl = h * st.k[0][i] - dy;
        coeffs[0][i] = y0[i];
        coeffs[1][i] = dy;
        coeffs[2][i] = bspl;
        coeffs[3][i] = dy - h * st.k[6][i] - bspl;
        coeffs[4][i] = h
            * (D1 * st.k[0][i]
                + D3 * st.k[2][i]
                + D4 * st.k[3][i]
                + D5 * st.k[4][i]
                + D6 * st.k[5][i]
                + D7 * st.k[6][i]);
    }
    DenseSegment {
        z0: z,
        h,
        z_end: z + h,
        coeffs,
    }
}

fn locate_event(ev: &EventSpec<'_>, seg: &DenseSegment, za: f64, zb: f64, dim: usize) -> f64 {
    let g = |zz: f64| {
        let mut s = vec![0.0; dim];
        seg.eval(zz, &mut s);
        (ev.function)(zz, &s)
    };
    find_root_bracketed(g, za, zb, ev.tol).unwrap_or(zb)
}
