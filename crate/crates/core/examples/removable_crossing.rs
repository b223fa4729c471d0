//! Integrating t(z) through the critical redshift: smooth for c = c_Lambda,
//! an order-one blow-up of adot otherwise.

use ltb_redshift::frw::{
    c_lambda, cross_singularity, derivative_jump, quotient_limit, FrwParams, TimeConvention,
};
use ltb_redshift::luminosity::{CosmoParams, LuminosityCurve};
use ltb_redshift::numerics::IvpSpec;

fn main() {
    let curve = LuminosityCurve::new(CosmoParams::new(0.0).unwrap());
    let z0 = 1.0;
    let cl = c_lambda(&curve, z0).unwrap();
    println!(
        "c_Lambda = {cl:.12}, limit of the quotient = {:.12}",
        quotient_limit(&curve, 1.25)
    );
    let spec = IvpSpec::with_tolerances(1e-11, 1e-13);
    for scale in [1.0, 1.2, 0.9] {
        let p = FrwParams::new(scale * cl, z0, TimeConvention::default()).unwrap();
        let run = cross_singularity(&p, &curve, [z0, 1.5], &spec).unwrap();
        match (&run.terminal_event, &run.blow_up) {
            (Some(ev), Some(b)) => println!(
                "c = {scale} c_L: stopped by {} at z = {:.10}, |{}| ~ |z - {:.6}|^{:.4}",
                ev.label, ev.z, b.quantity, b.at, b.exponent
            ),
            _ => {
                let zl = run.z_lambda.unwrap();
                let jump = derivative_jump(|z| run.t(z), zl, 1e-3).unwrap();
                println!(
                    "c = {scale} c_L: crossed to z = {}, dt/dz jump {jump:.2e}",
                    run.z_end()
                );
            }
        }
    }
}
