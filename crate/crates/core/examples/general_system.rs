//! The general (r, t, M) system for a power-law energy profile, with events
//! at horizons, tangencies and the critical redshift.

use ltb_redshift::kernel::{trace_general, GeodesicState, LtbModel, Sign};
use ltb_redshift::luminosity::{CosmoParams, LuminosityCurve, RadiusData};
use ltb_redshift::numerics::IvpSpec;

fn main() {
    let curve = LuminosityCurve::new(CosmoParams::new(0.3).unwrap());
    let model = LtbModel::power_law(0.5, 2.0, 1.0, Sign::Plus, Sign::Plus, 1.0);
    let z0 = 0.5;
    let r0 = curve.radius(z0).unwrap();
    let init = GeodesicState::new(z0, r0, 1.0, 0.2 * r0);
    let trace = trace_general(&init, 4.0, &curve, &model, &IvpSpec::default()).unwrap();
    let traj = &trace.trajectory;

    println!(
        "reached z = {:.6} after {} steps",
        traj.z_end(),
        traj.stats.accepted
    );
    for (z, y) in traj.sample_uniform(8) {
        println!(
            "z {z:>8.4}  r {:>12.8}  t {:>12.8}  M {:>12.8}",
            y[0], y[1], y[2]
        );
    }
    for s in &trace.singularities {
        println!(
            "{} at z = {:.9} (possibly removable: {})",
            s.kind, s.z_location, s.possibly_removable
        );
    }
    if let Some(e) = &trace.stopped {
        println!("stopped: {e}");
    }
}
