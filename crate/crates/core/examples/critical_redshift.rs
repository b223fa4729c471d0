//! z_Lambda across the Omega grid, with the two-sided bound certificate.

use std::time::Instant;

use ltb_redshift::critical::{
    default_omega_grid, find_z_lambda, verify_zlambda_bounds, zlambda_bound_constants,
};
use ltb_redshift::luminosity::CosmoParams;
use ltb_redshift::numerics::QuadratureSpec;

fn main() {
    let start = Instant::now();
    let grid = default_omega_grid();
    let k = zlambda_bound_constants(&grid, &QuadratureSpec::precise()).unwrap();
    println!("c1 = {:.6}  c2 = {:.6}  c3 = {:.6}", k.c1, k.c2, k.c3);
    for &o in &grid {
        let cp = find_z_lambda(CosmoParams::new(o).unwrap(), 1e-12).unwrap();
        let b = k.bounds(o);
        let cert = verify_zlambda_bounds(&cp, &k);
        println!(
            "omega {o:>4.2}: {:.6} <= 1 + z_L = {:<12.9} <= {:<10.4} {:?}",
            b.lower,
            1.0 + cp.z_lambda,
            b.upper,
            cert.status
        );
    }
    println!("{:?}", start.elapsed());
}
