//! The general system with the FRW model, against the closed forms: on
//! luminosity data, and on data generated by an open FRW light cone.

use ltb_redshift::frw::{oracle_compare, FrwParams, OpenFrwData, TimeConvention};
use ltb_redshift::luminosity::{CosmoParams, LuminosityCurve};
use ltb_redshift::numerics::IvpSpec;

fn main() {
    let spec = IvpSpec::with_tolerances(1e-11, 1e-13);
    for (omega, z0) in [(1.0, 1.0), (0.0, 2.0), (0.5, 3.0)] {
        let curve = LuminosityCurve::new(CosmoParams::new(omega).unwrap());
        let p = FrwParams::new(1.0, z0, TimeConvention::default()).unwrap();
        let rep = oracle_compare(&p, &curve, [z0, z0 + 1.0], &spec).unwrap();
        println!(
            "luminosity data omega {omega}: max rel dev (r, t, M) = {:.3e} {:.3e} {:.3e}",
            rep.max_rel_dev[0], rep.max_rel_dev[1], rep.max_rel_dev[2]
        );
    }
    let p = FrwParams::new(1.0, 1.0, TimeConvention::default()).unwrap();
    let open = OpenFrwData::new(p, 0.5).unwrap();
    let rep = open.oracle_compare([1.0, 1.9], &spec).unwrap();
    println!(
        "open FRW light cone: max rel dev (r, t, M) = {:.3e} {:.3e} {:.3e}",
        rep.max_rel_dev[0], rep.max_rel_dev[1], rep.max_rel_dev[2]
    );
}
