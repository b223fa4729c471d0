//! D_L(z), R[z] and dR/dz for several Omega_Lambda, with the closed forms at
//! the two ends of the family.

use ltb_redshift::luminosity::{CosmoParams, LuminosityCurve};

fn main() {
    println!(
        "{:>6} {:>6} {:>14} {:>14} {:>14}",
        "omega", "z", "D_L", "R", "dR/dz"
    );
    for omega in [0.0, 0.3, 0.7, 1.0] {
        let curve = LuminosityCurve::new(CosmoParams::new(omega).unwrap());
        for z in [0.5, 1.25, 3.0, 10.0] {
            println!(
                "{omega:>6.2} {z:>6.2} {:>14.10} {:>14.10} {:>14.10}",
                curve.luminosity_distance(z).unwrap(),
                curve.r(z).unwrap(),
                curve.drdz(z).unwrap()
            );
        }
    }

    // matter only: R = 2(1 - (1+z)^{-1/2})/(1+z); Lambda only: R = z/(1+z)
    let m = LuminosityCurve::new(CosmoParams::new(0.0).unwrap());
    let z: f64 = 4.0;
    let closed = 2.0 * (1.0 - (1.0 + z).powf(-0.5)) / (1.0 + z);
    println!(
        "matter only at z = 4: {:e} off the closed form",
        (m.r(z).unwrap() - closed).abs()
    );
}
