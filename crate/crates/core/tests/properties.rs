use std::convert::Infallible;

use proptest::prelude::*;

use ltb_redshift::critical::find_z_lambda;
use ltb_redshift::decoupled::{eval_j1_j2, k_xi, xi_rhs, DecoupledOptions, DecoupledState};
use ltb_redshift::frw::{
    c_lambda, closed_solution, inverse_scale_factor, scale_factor_param, scale_factor_param_deriv,
    FrwClosed, FrwParams, OpenFrwData, TimeConvention,
};
use ltb_redshift::kernel::{
    assemble_rhs_with_kernel, det3, eval_kernel, u_matrix, GeodesicState, LtbModel, Sign,
};
use ltb_redshift::luminosity::{CosmoParams, LuminosityCurve, RadiusData};
use ltb_redshift::numerics::quadrature::gauss_kronrod_15;
use ltb_redshift::numerics::{integrate_adaptive, solve_ivp, EventSpec, IvpSpec, QuadratureSpec};

fn curve(omega: f64) -> LuminosityCurve {
    LuminosityCurve::new(CosmoParams::new(omega).unwrap())
}

fn sign(plus: bool) -> Sign {
    if plus {
        Sign::Plus
    } else {
        Sign::Minus
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quadrature_orientation(a in -3.0f64..3.0, b in -3.0f64..3.0, k in 0.1f64..4.0) {
        let spec = QuadratureSpec::default();
        let f = |x: f64| (k * x).sin() + x * x;
        let fwd = integrate_adaptive(f, a, b, &spec).unwrap();
        let back = integrate_adaptive(f, b, a, &spec).unwrap();
        prop_assert!((fwd + back).abs() <= 1e-14 * (1.0 + fwd.abs()));
    }

    #[test]
    fn quadrature_exact_on_polynomials(c in prop::collection::vec(-2.0f64..2.0, 1..10), a in -1.0f64..0.0, b in 0.0f64..1.5) {
        let p = |x: f64| c.iter().rev().fold(0.0, |acc, ci| acc * x + ci);
        let antider = |x: f64| c.iter().enumerate().map(|(i, ci)| ci * x.powi(i as i32 + 1) / (i + 1) as f64).sum::<f64>();
        let (v, _) = gauss_kronrod_15(&p, a, b).unwrap();
        let scale: f64 = c.iter().map(|x| x.abs()).sum::<f64>() * (b - a);
        prop_assert!((v - (antider(b) - antider(a))).abs() <= 1e-14 * scale.max(1.0));
    }

    #[test]
    fn linear_crossing_located(zc in 0.05f64..0.95, slope in 0.2f64..5.0) {
        // y = slope (z - zc)
        let ev = [EventSpec::new("zero", |_z, y: &[f64]| y[0]).terminal(true)];
        let traj = solve_ivp(
            |_z, _y: &[f64], dy: &mut [f64]| -> Result<(), Infallible> {
                dy[0] = slope;
                Ok(())
            },
            &[-slope * zc],
            0.0,
            1.0,
            &IvpSpec::default(),
            &ev,
        )
        .unwrap();
        let hit = traj.terminated_by_event().unwrap();
        prop_assert!((hit.z - zc).abs() <= ev[0].tol.max(1e-12));
    }

    #[test]
    fn radius_positive_and_distance_increasing(omega in 0.0f64..=1.0) {
        let cv = curve(omega);
        let mut last = 0.0;
        for i in 1..=1000 {
            let z = 20.0 * i as f64 / 1000.0;
            prop_assert!(cv.r(z).unwrap() > 0.0);
            let d = cv.luminosity_distance(z).unwrap();
            prop_assert!(d > last);
            last = d;
        }
    }

    #[test]
    fn radius_derivative_matches_differences(omega in 0.0f64..=1.0, z in 0.05f64..20.0) {
        let cv = curve(omega);
        let h = 1e-5 * (1.0 + z);
        let fd = (cv.r(z + h).unwrap() - cv.r(z - h).unwrap()) / (2.0 * h);
        prop_assert!((fd - cv.drdz(z).unwrap()).abs() <= 1e-7);
    }

    #[test]
    fn radius_slope_changes_sign_once(omega in 0.0f64..0.98, frac in 0.02f64..0.98) {
        let cv = curve(omega);
        let zl = find_z_lambda(CosmoParams::new(omega).unwrap(), 1e-12).unwrap().z_lambda;
        prop_assert!(zl >= 1.25 - 1e-12);
        prop_assert!(cv.drdz(frac * zl).unwrap() > 0.0);
        prop_assert!(cv.drdz(zl / frac).unwrap() < 0.0);
    }

    #[test]
    fn critical_residual_small(omega in 0.0f64..0.99) {
        let cp = find_z_lambda(CosmoParams::new(omega).unwrap(), 1e-12).unwrap();
        prop_assert!(cp.residual.abs() <= 1e-10);
        prop_assert!(curve(omega).drdz(cp.z_lambda).unwrap().abs() <= 1e-10);
    }

    #[test]
    fn kernel_at_unit_ratio(e0 in 0.2f64..2.0, p in 0.5f64..2.5, c in 0.3f64..3.0, r in 0.1f64..2.0, m in 0.01f64..1.0) {
        let model = LtbModel::power_law(e0, p, c, Sign::Plus, Sign::Plus, 1.0);
        let k = eval_kernel(&GeodesicState::new(1.0, r, 1.0, m), c * r, &model).unwrap();
        prop_assert_eq!(k.j_m, 0.0);
        prop_assert_eq!(k.j_e, 0.0);
        prop_assert_eq!(k.g, 0.0);
        prop_assert!(close(k.f, c, 1e-15));
        prop_assert!(k.j_r < 0.0);
    }

    #[test]
    fn kernel_determinant_and_rows(
        e0 in 0.2f64..2.0, p in 0.5f64..2.5, c in 0.3f64..3.0, s in any::<bool>(), d in any::<bool>(),
        omega in 0.0f64..=1.0, z in 0.1f64..4.0, r in 0.05f64..2.0, t in 0.0f64..2.0, m in 0.01f64..1.5,
    ) {
        let model = LtbModel::power_law(e0, p, c, sign(s), sign(d), 1.0);
        let cv = curve(omega);
        let st = GeodesicState::new(z, r, t, m);
        let k = eval_kernel(&st, cv.radius(z).unwrap(), &model).unwrap();
        let brute = det3(&u_matrix(&k, m));
        prop_assert!((k.det_u - brute).abs() <= 1e-10 * brute.abs().max(1.0));

        let Ok((rhs, k)) = assemble_rhs_with_kernel(&st, &cv, &model) else {
            return Ok(());
        };
        // row two: A dt + delta B (F dr + G dM) = 0; row three is the chain rule for R_z
        let row2 = [k.a_bare * rhs.dt, k.delta * k.b * k.f * rhs.dr, k.delta * k.b * k.g * rhs.dm];
        let scale2 = row2.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
        prop_assert!(row2.iter().sum::<f64>().abs() <= 1e-9 * scale2);
        let row3 = [k.f * rhs.dr, k.sigma * k.s * rhs.dt, k.g * rhs.dm];
        let scale3 = row3.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
        prop_assert!((row3.iter().sum::<f64>() - cv.drdz(z).unwrap()).abs() <= 1e-9 * scale3);
    }

    #[test]
    fn k_xi_decreasing(a in 0.5001f64..50.0, b in 0.5001f64..50.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(hi - lo > 1e-9);
        prop_assert!(k_xi(hi) < k_xi(lo));
        prop_assert!(k_xi(hi) > 1.5f64.sqrt());
    }

    #[test]
    fn xi_grows_past_critical_point(omega in 0.0f64..0.9, beyond in 1.01f64..10.0, xi in 0.501f64..20.0) {
        let cv = curve(omega);
        let zl = find_z_lambda(CosmoParams::new(omega).unwrap(), 1e-12).unwrap().z_lambda;
        let z = zl * beyond;
        let rate = xi_rhs(z, xi, &cv.jet(z).unwrap(), &DecoupledOptions::default()).unwrap();
        prop_assert!(rate > 0.0);
    }

    #[test]
    fn estimate_chain(omega in 0.0f64..=1.0, z in 0.2f64..6.0, h in 1.0f64..8.0, xi in 0.0f64..5.0, c in 0.5f64..3.0) {
        prop_assume!((2.0 * xi - 1.0).abs() > 1e-3);
        let cv = curve(omega);
        let r_shell = cv.radius(z).unwrap();
        let model = LtbModel::constant_energy(1.0, c, 1.0);
        let j = eval_j1_j2(&DecoupledState::new(z, h * r_shell / c, 1.0, xi), &cv, &model).unwrap();
        let links = j.links(1e-12);
        prop_assert!(links[0] && links[1] && links[3], "{:?}", j);
    }

    #[test]
    fn parametric_identity(c in 0.05f64..5.0, u in 0.01f64..4.0) {
        let p = FrwParams::new(c, 1.0, TimeConvention::ConstraintConsistent).unwrap();
        let eta = p.eta_min() + u;
        let f = scale_factor_param(eta, &p);
        let fp = scale_factor_param_deriv(eta, &p);
        prop_assert!((fp * fp - (f * f + f)).abs() <= 1e-10 * (f * f + f).max(1.0));
        prop_assert!(close(p.k_c * p.k_c, c + c * c, 1e-15));
        let printed = 0.5 * (eta.cosh() - 1.0) + c * eta.cosh() + p.k_c * eta.sinh();
        let terms = (0.5 + c) * eta.cosh() + p.k_c * eta.sinh().abs();
        let cond = (1.0 + 2.0 * c).powi(2);
        prop_assert!((printed - f).abs() <= 16.0 * f64::EPSILON * cond * terms.max(1.0));
    }

    #[test]
    fn inversion_round_trip(c in 0.05f64..5.0, u in 0.001f64..4.0) {
        let p = FrwParams::new(c, 1.0, TimeConvention::ConstraintConsistent).unwrap();
        let eta = p.eta_min() + u;
        let back = inverse_scale_factor(scale_factor_param(eta, &p), &p).unwrap();
        prop_assert!((back - eta).abs() <= 1e-10);
    }

    #[test]
    fn scale_factor_times_one_plus_z(c in 0.1f64..3.0, z0 in 0.1f64..3.0, omega in 0.0f64..=1.0, dz in 0.0f64..5.0) {
        let p = FrwParams::new(c, z0, TimeConvention::default()).unwrap();
        let cv = curve(omega);
        let z = z0 + dz;
        let pt = closed_solution(z, &p, &cv).unwrap();
        prop_assert!(close(pt.a * (1.0 + z), c * (1.0 + z0), 1e-14));
    }

    #[test]
    fn time_rate_on_open_light_cone(c in 0.5f64..2.0, z0 in 0.5f64..2.0, r0 in 0.1f64..1.0, dz in 0.0f64..0.3) {
        let p = FrwParams::new(c, z0, TimeConvention::default()).unwrap();
        let data = OpenFrwData::new(p, r0).unwrap();
        let z = z0 + dz;
        let pt = data.point(z).unwrap();
        let model = LtbModel::frw(c, p.t0());
        let Ok((rhs, _)) = assemble_rhs_with_kernel(&pt.state(), &data, &model) else {
            return Ok(());
        };
        let expected = -pt.a / ((1.0 + z) * p.adot(pt.a));
        prop_assert!((rhs.dt - expected).abs() <= 1e-8 * expected.abs().max(1.0));
    }

    #[test]
    fn removable_slope_aligns_zeros(omega in 0.0f64..0.9, z0 in 0.2f64..1.2) {
        let cv = curve(omega);
        let p = FrwParams::new(c_lambda(&cv, z0).unwrap(), z0, TimeConvention::default()).unwrap();
        let frw = FrwClosed::new(p, &cv).unwrap();
        let zl = frw.z_lambda().unwrap();
        prop_assert!(frw.horizon_gap(zl).unwrap().abs() <= 1e-9);
        for dz in [-1e-2, -1e-4, 0.0, 1e-4, 1e-2] {
            prop_assert!(frw.quotient(zl + dz).unwrap() > 0.0);
        }
    }
}
