//! Constant-energy runs on matter-only data and the certificates for the
//! mass bounds and the power-law growth window.

use ltb_redshift::decoupled::{
    check_upprbnd, solve_decoupled, verify_growth_corollary, verify_thm1, verify_thm2,
    DecoupledOptions, DecoupledState, RHO,
};
use ltb_redshift::kernel::LtbModel;
use ltb_redshift::luminosity::{CosmoParams, LuminosityCurve};
use ltb_redshift::numerics::IvpSpec;

fn main() {
    let curve = LuminosityCurve::new(CosmoParams::new(0.0).unwrap());
    let model = LtbModel::constant_energy(1.0, 2.0, 1.0);
    let spec = IvpSpec::with_tolerances(1e-11, 1e-13);
    let opts = DecoupledOptions::default();

    let run = solve_decoupled(
        &DecoupledState::new(2.0, 1.0, 1.0, 0.3),
        10.0,
        &curve,
        &model,
        &spec,
        &opts,
    )
    .unwrap();
    let c = check_upprbnd(&curve, [2.0, 10.0], 1000).unwrap();
    let cert = verify_thm1(&run, &curve, c.c).unwrap();
    println!(
        "xi0 = 0.3, C = {:.6}: {:?} margin {:.3e}",
        c.c, cert.status, cert.worst_margin
    );

    for xi0 in [1.0, 2.5] {
        let run = solve_decoupled(
            &DecoupledState::new(2.0, 1.0, 1.0, xi0),
            50.0,
            &curve,
            &model,
            &spec,
            &opts,
        )
        .unwrap();
        let t2 = verify_thm2(&run, &curve).unwrap();
        let g = verify_growth_corollary(&run, &curve, 0.1).unwrap();
        println!(
            "xi0 = {xi0}: two-sided bound {:?}, growth {:?}",
            t2.status, g.status
        );
        if let Some(s) = g.constants.get("fitted_slope") {
            println!(
                "  fitted slope {s:.4} in [{:.4}, {:.4}]",
                RHO - 1.0,
                2.0 * RHO - 0.9
            );
        }
    }
}
