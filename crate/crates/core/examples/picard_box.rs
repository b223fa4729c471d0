//! Lipschitz box, guaranteed interval and successive approximations against
//! the Runge-Kutta solution.

use ltb_redshift::decoupled::{verify_picard, DecoupledOptions, DecoupledState, LipschitzBox};
use ltb_redshift::kernel::LtbModel;
use ltb_redshift::luminosity::{CosmoParams, LuminosityCurve};
use ltb_redshift::numerics::IvpSpec;

fn main() {
    let unit = LipschitzBox::new(1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
    println!(
        "unit inputs: M1 {:.6} M2 {:.6} M3 {:.6}",
        unit.m1, unit.m2, unit.m3
    );

    let curve = LuminosityCurve::new(CosmoParams::new(1.0).unwrap());
    let model = LtbModel::constant_energy(1.0, 2.0, 1.0);
    let init = DecoupledState::new(1.0, 1.0, 1.0, 1.0);
    let spec = IvpSpec::with_tolerances(1e-12, 1e-14);
    let (cert, res) = verify_picard(
        &init,
        1.0,
        &curve,
        &model,
        &spec,
        &DecoupledOptions::default(),
    )
    .unwrap();
    println!(
        "interval {:?}, {} iterations, last change {:.2e}",
        cert.interval, res.iterations, res.last_change
    );
    for k in ["M", "b", "max_deviation", "max_excursion"] {
        println!("  {k} = {:.6e}", cert.constants[k]);
    }
    println!("{:?}", cert.status);
}
