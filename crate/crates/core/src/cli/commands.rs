//! One function per subcommand, each mapping a validated scenario onto
//! library calls.

use super::report::{EventRow, RunOutcome, RunReport, Table};
use super::scenario::{Command, DataKind, ModelKind, Scenario};
use crate::certificate::{BoundCertificate, ClaimId};
use crate::critical::{
    default_omega_grid, find_z_lambda, find_z_lambda_on, verify_zlambda_bounds,
    zlambda_bound_constants,
};
use crate::decoupled::{
    check_upprbnd, solve_decoupled, verify_growth_corollary, verify_monotonicity_corollary,
    verify_picard, verify_thm1, verify_thm2, DecoupledOptions, DecoupledRun, DecoupledState,
};
use crate::error::{Error, Result};
use crate::frw::{
    audit_convention, c_lambda, closed_solution, cross_singularity, derivative_jump,
    inverse_scale_factor, oracle_compare, FrwClosed, FrwParams, OpenFrwData,
};
use crate::kernel::{eval_kernel, trace_general, GeodesicState, LtbModel, Sign};
use crate::luminosity::{CosmoParams, LuminosityCurve, RadiusData};
use crate::numerics::QuadratureSpec;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_SINGULAR: i32 = 2;

/// Library failures that end a run at a singular point map to exit code 2.
pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Singular { .. } | Error::NotRemovable { .. } | Error::Integration { .. } => {
            EXIT_SINGULAR
        }
        _ => EXIT_CONFIG,
    }
}

fn curve_for(s: &Scenario, cmd: Command) -> Result<LuminosityCurve> {
    let o = s
        .omega(cmd)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(LuminosityCurve::new(CosmoParams::new(o)?))
}

fn range_for(s: &Scenario, cmd: Command) -> Result<(f64, f64)> {
    s.range(cmd)
        .map_err(|e| Error::InvalidParameter(e.to_string()))
}

pub fn run_command(cmd: Command, s: &Scenario) -> Result<RunOutcome> {
    match cmd {
        Command::Zlambda => zlambda(s),
        Command::Trace => trace(s),
        Command::TraceDecoupled => trace_decoupled(s),
        Command::FrwCheck => frw_check(s),
        Command::Crossing => crossing(s),
        Command::Bounds => bounds(s),
    }
}

fn zlambda(s: &Scenario) -> Result<RunOutcome> {
    let curve = curve_for(s, Command::Zlambda)?;
    let mut report = RunReport::new("zlambda", s.clone());
    let cp = find_z_lambda_on(&curve, 1e-12)?;
    report.put("omega_lambda", cp.omega_lambda);
    report.put("z_lambda", cp.z_lambda);
    report.put("residual", cp.residual);
    let constants = zlambda_bound_constants(&default_omega_grid(), &QuadratureSpec::precise())?;
    report
        .certificates
        .push(verify_zlambda_bounds(&cp, &constants));
    let mut t = Table::new(&["omega_lambda", "z_lambda"]);
    t.push(vec![cp.omega_lambda, cp.z_lambda]);
    report.samples = 1;
    Ok(RunOutcome {
        report,
        table: Some(t),
        plots: vec![],
    })
}

fn data_for(s: &Scenario, curve: LuminosityCurve, z0: f64) -> Result<Box<dyn RadiusData>> {
    Ok(match s.data {
        DataKind::Luminosity => Box::new(curve),
        DataKind::OpenFrw => {
            let p = FrwParams::new(s.c.unwrap_or(1.0), z0, s.convention)?;
            Box::new(OpenFrwData::new(p, s.r0.unwrap_or(0.5))?)
        }
    })
}

fn initial_mass(s: &Scenario, r_shell: f64, fallback: Option<f64>) -> Result<f64> {
    s.m0.or(s.xi0.map(|x| x * r_shell))
        .or(fallback)
        .ok_or_else(|| Error::InvalidParameter("m0 or xi0 required for this model".into()))
}

fn trace(s: &Scenario) -> Result<RunOutcome> {
    let cmd = Command::Trace;
    let (z0, z1) = range_for(s, cmd)?;
    let data = data_for(s, curve_for(s, cmd)?, z0)?;
    let c = s.c.unwrap_or(1.0);
    let r_shell = data.radius(z0)?;
    let r0 = s.r0.unwrap_or(r_shell / c);
    let (model, init) = match s.model {
        ModelKind::Frw => {
            let t0 = s.t0.unwrap_or(FrwParams::new(c, z0, s.convention)?.t0());
            let m0 = initial_mass(s, r_shell, Some(0.5 * r0.powi(3)))?;
            (LtbModel::frw(c, t0), GeodesicState::new(z0, r0, t0, m0))
        }
        ModelKind::PowerLaw => {
            let t0 = s.t0.unwrap_or(1.0);
            let m = LtbModel::power_law(s.e0, s.power, c, Sign::Plus, Sign::Plus, t0);
            (
                m,
                GeodesicState::new(z0, r0, t0, initial_mass(s, r_shell, None)?),
            )
        }
        ModelKind::UnitEnergy => {
            let t0 = s.t0.unwrap_or(1.0);
            let m = LtbModel::constant_energy(1.0, c, t0);
            (
                m,
                GeodesicState::new(z0, r0, t0, initial_mass(s, r_shell, None)?),
            )
        }
    };
    let tr = trace_general(&init, z1, data.as_ref(), &model, &s.ivp_spec())?;
    let traj = &tr.trajectory;
    let mut report = RunReport::new("trace", s.clone());
    let mut t = Table::new(&[
        "z",
        "r",
        "t",
        "M",
        "R",
        "R_z",
        "detU",
        "denom_sol",
        "denom_geo",
    ]);
    for (z, y) in traj.sample_uniform(s.samples) {
        let st = GeodesicState::from_slice(z, &y);
        let jet = data.jet(z)?;
        let (d, ds, dg) = eval_kernel(&st, jet.r, &model)
            .map(|k| (k.det_u, k.denom_sol, k.denom_geo))
            .unwrap_or((f64::NAN, f64::NAN, f64::NAN));
        t.push(vec![z, st.r, st.t, st.m, jet.r, jet.r_z, d, ds, dg]);
    }
    for e in &traj.events {
        report.events.push(EventRow {
            label: e.label.clone(),
            z: e.z,
            detail: if e.terminal {
                "terminal".into()
            } else {
                "recorded".into()
            },
        });
    }
    for sg in &tr.singularities {
        report.events.push(EventRow {
            label: sg.kind.to_string(),
            z: sg.z_location,
            detail: format!("possibly_removable={}", sg.possibly_removable),
        });
    }
    report.put("z_end", traj.z_end());
    report.put("accepted_steps", traj.stats.accepted as f64);
    let early = tr.stopped.is_some() || traj.terminated_by_event().is_some();
    report.put("reached_end", if early { 0.0 } else { 1.0 });
    if let Some(e) = &tr.stopped {
        report.error = Some(e.to_string());
    }
    if early {
        report.exit_code = EXIT_SINGULAR;
    }
    report.samples = t.rows.len();
    Ok(RunOutcome {
        report,
        table: Some(t),
        plots: vec![
            ("z".into(), "r".into()),
            ("z".into(), "t".into()),
            ("z".into(), "M".into()),
        ],
    })
}

/// Certificates for a decoupled run; hypotheses that fail become
/// "not applicable" entries.
pub fn decoupled_certificates(
    run: &DecoupledRun,
    curve: &LuminosityCurve,
    model: &LtbModel,
    s: &Scenario,
) -> Result<(Vec<BoundCertificate>, Vec<String>)> {
    let mut certs = Vec::new();
    let mut notes = Vec::new();
    let interval = [run.init.z, run.z_end()];
    match check_upprbnd(curve, interval, 1000) {
        Ok(u) => certs.push(verify_thm1(run, curve, u.c)?),
        Err(e) => {
            let claim = if run.init.xi < 0.5 {
                ClaimId::Thm1Case1
            } else {
                ClaimId::Thm1Case2
            };
            certs.push(BoundCertificate::not_applicable(
                claim,
                interval,
                e.to_string(),
                Default::default(),
            ));
        }
    }
    certs.push(verify_thm2(run, curve)?);
    certs.push(verify_growth_corollary(run, curve, s.alpha)?);
    certs.push(verify_monotonicity_corollary(run, curve, model)?);
    match verify_picard(
        &run.init,
        interval[1] - interval[0],
        curve,
        model,
        &s.ivp_spec(),
        &run.options,
    ) {
        Ok((c, _)) => certs.push(c),
        Err(e) => notes.push(format!("picard box: {e}")),
    }
    Ok((certs, notes))
}

fn trace_decoupled(s: &Scenario) -> Result<RunOutcome> {
    let cmd = Command::TraceDecoupled;
    let (z0, z1) = range_for(s, cmd)?;
    let curve = curve_for(s, cmd)?;
    let c = s.c.unwrap_or(2.0);
    let model = LtbModel::constant_energy(1.0, c, s.t0.unwrap_or(1.0));
    let r_shell = curve.r(z0)?;
    let xi0 = s.xi0.or(s.m0.map(|m| m / r_shell)).unwrap_or(f64::NAN);
    let init = DecoupledState::new(z0, s.r0.unwrap_or(r_shell / c), model.t0, xi0);
    let run = solve_decoupled(
        &init,
        z1,
        &curve,
        &model,
        &s.ivp_spec(),
        &DecoupledOptions::default(),
    )?;
    let mut report = RunReport::new("trace-decoupled", s.clone());
    let mut t = Table::new(&["z", "r", "t", "M", "xi", "R", "R_z"]);
    for p in run.sample(&curve, s.samples)? {
        t.push(vec![p.z, p.r, p.t, p.m, p.xi, p.r_shell, p.r_z]);
    }
    let (certs, notes) = decoupled_certificates(&run, &curve, &model, s)?;
    report.certificates = certs;
    report.notes = notes;
    report.put("z_end", run.z_end());
    report.put("xi_end", run.xi.final_state()[0]);
    if let Some(ev) = &run.stopped {
        report.events.push(EventRow {
            label: ev.label.clone(),
            z: ev.z,
            detail: "terminal".into(),
        });
        report.exit_code = EXIT_SINGULAR;
    }
    report.samples = t.rows.len();
    Ok(RunOutcome {
        report,
        table: Some(t),
        plots: vec![("z".into(), "xi".into()), ("z".into(), "M".into())],
    })
}

fn frw_check(s: &Scenario) -> Result<RunOutcome> {
    let cmd = Command::FrwCheck;
    let (z0, z1) = range_for(s, cmd)?;
    let curve = curve_for(s, cmd)?;
    let p = FrwParams::new(s.c.unwrap_or(1.0), z0, s.convention)?;
    let spec = s.ivp_spec();
    let mut t = Table::new(&["z", "a", "eta", "r", "t", "M", "rho"]);
    let zs = (0..s.samples).map(|i| z0 + (z1 - z0) * i as f64 / (s.samples - 1) as f64);
    let rep = match s.data {
        DataKind::Luminosity => {
            for z in zs {
                let q = closed_solution(z, &p, &curve)?;
                t.push(vec![z, q.a, q.eta, q.r, q.t, q.m, 1.5 / q.a.powi(3)]);
            }
            oracle_compare(&p, &curve, [z0, z1], &spec)?
        }
        DataKind::OpenFrw => {
            let d = OpenFrwData::new(p, s.r0.unwrap_or(0.5))?;
            for z in zs {
                let q = d.point(z)?;
                t.push(vec![z, q.a, q.eta, q.r, q.t, q.m, 1.5 / q.a.powi(3)]);
            }
            d.oracle_compare([z0, z1], &spec)?
        }
    };
    let eta_lo = inverse_scale_factor(p.scale_factor_at(z1), &p)?;
    let grid: Vec<f64> = (0..=100)
        .map(|i| eta_lo + (1.0 - eta_lo) * i as f64 / 100.0)
        .collect();
    let audit = audit_convention(&p, &grid);
    let mut report = RunReport::new("frw-check", s.clone());
    report.put("c", p.c);
    report.put("max_rel_deviation", rep.max_rel_deviation);
    report.put("max_rel_dev_r", rep.max_rel_dev[0]);
    report.put("max_rel_dev_t", rep.max_rel_dev[1]);
    report.put("max_rel_dev_M", rep.max_rel_dev[2]);
    report.put("z_reached", rep.z_reached);
    report.put("constraint_residual", audit.max_constraint_residual);
    report.detail("oracle", &rep);
    report.detail("convention_audit", &audit);
    if let Some(st) = &rep.stopped {
        report.notes.push(format!("general system stopped: {st}"));
        report.exit_code = EXIT_SINGULAR;
    }
    report.samples = t.rows.len();
    Ok(RunOutcome {
        report,
        table: Some(t),
        plots: vec![("z".into(), "t".into()), ("z".into(), "r".into())],
    })
}

fn crossing(s: &Scenario) -> Result<RunOutcome> {
    let cmd = Command::Crossing;
    let (z0, z1) = range_for(s, cmd)?;
    let curve = curve_for(s, cmd)?;
    let c = match (s.c, s.c_scale) {
        (Some(c), _) => c,
        (None, Some(k)) => k * c_lambda(&curve, z0)?,
        (None, None) => c_lambda(&curve, z0)?,
    };
    let p = FrwParams::new(c, z0, s.convention)?;
    let run = cross_singularity(&p, &curve, [z0, z1], &s.ivp_spec())?;
    let closed = FrwClosed::new(p, &curve)?;
    let mut report = RunReport::new("crossing", s.clone());
    let mut t = Table::new(&["z", "t", "t_closed", "r", "M", "a"]);
    let mut dev = 0.0f64;
    let z_end = run.z_end();
    for i in 0..s.samples {
        let z = z0 + (z_end - z0) * i as f64 / (s.samples - 1) as f64;
        let q = closed.point(z)?;
        let tz = run.t(z).unwrap_or(f64::NAN);
        dev = dev.max((tz - q.t).abs() / q.t.abs());
        t.push(vec![z, tz, q.t, q.r, q.m, q.a]);
    }
    report.put("c", c);
    report.put("z_end", z_end);
    report.put("max_rel_dev_closed", dev);
    report.put("window_evaluations", run.window_evaluations as f64);
    if let Some(cl) = run.c_lambda {
        report.put("c_lambda", cl);
    }
    if let Some(zl) = run.z_lambda {
        report.put("z_lambda", zl);
        if run.completed() && run.crosses_critical {
            let h = 1e-3 * (1.0 + zl);
            if let Some(j) = derivative_jump(|z| run.t(z), zl, h) {
                report.put("dtdz_jump", j);
            }
        }
    }
    if let (Some(ev), Some(b)) = (&run.terminal_event, &run.blow_up) {
        report.put("blow_up_exponent", b.exponent);
        report.events.push(EventRow {
            label: ev.label.clone(),
            z: ev.z,
            detail: format!("{}, order {}", ev.label, b.exponent.round()),
        });
        report.detail("blow_up", b);
        report.exit_code = EXIT_SINGULAR;
    }
    report.samples = t.rows.len();
    Ok(RunOutcome {
        report,
        table: Some(t),
        plots: vec![("z".into(), "t".into())],
    })
}

fn bounds(s: &Scenario) -> Result<RunOutcome> {
    let grid = default_omega_grid();
    let constants = zlambda_bound_constants(&grid, &QuadratureSpec::precise())?;
    let mut report = RunReport::new("bounds", s.clone());
    let mut t = Table::new(&["omega_lambda", "z_lambda", "lower", "upper", "worst_margin"]);
    let mut prev = f64::NEG_INFINITY;
    let mut increasing = true;
    for &o in &grid {
        let cp = find_z_lambda(CosmoParams::new(o)?, 1e-12)?;
        let b = constants.bounds(o);
        let cert = verify_zlambda_bounds(&cp, &constants);
        t.push(vec![o, cp.z_lambda, b.lower, b.upper, cert.worst_margin]);
        increasing &= cp.z_lambda > prev;
        prev = cp.z_lambda;
        report.certificates.push(cert);
    }
    report.put("c1", constants.c1);
    report.put("c2", constants.c2);
    report.put("c3", constants.c3);
    report.put("z_lambda_increasing", if increasing { 1.0 } else { 0.0 });
    if s.xi0.is_some() {
        let cmd = Command::Bounds;
        let (z0, z1) = range_for(s, cmd)?;
        let curve = curve_for(s, cmd)?;
        let c = s.c.unwrap_or(2.0);
        let model = LtbModel::constant_energy(1.0, c, s.t0.unwrap_or(1.0));
        let r0 = s.r0.unwrap_or(curve.r(z0)? / c);
        let init = DecoupledState::new(z0, r0, model.t0, s.xi0.unwrap_or(f64::NAN));
        let run = solve_decoupled(
            &init,
            z1,
            &curve,
            &model,
            &s.ivp_spec(),
            &DecoupledOptions::default(),
        )?;
        let (certs, notes) = decoupled_certificates(&run, &curve, &model, s)?;
        report.certificates.extend(certs);
        report.notes.extend(notes);
    }
    let all_hold = report
        .certificates
        .iter()
        .filter(|c| c.is_applicable())
        .all(|c| c.verdict());
    report.put("all_hold", if all_hold { 1.0 } else { 0.0 });
    report.samples = t.rows.len();
    Ok(RunOutcome {
        report,
        table: Some(t),
        plots: vec![("omega_lambda".into(), "z_lambda".into())],
    })
}
