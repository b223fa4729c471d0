//! Brent's method on a few brackets, including the critical-redshift
//! numerator at Omega_Lambda = 0, whose root is 1.25.

use ltb_redshift::numerics::find_root_bracketed;

fn main() {
    let x = find_root_bracketed(|x: f64| x.cos() - x, 0.0, 1.0, 1e-15).unwrap();
    println!("cos x = x at {x:.15}");

    // (1+z) I(1+z) - int_1^{1+z} I with I(y) = y^{-3/2}
    let n = |z: f64| {
        let y = 1.0 + z;
        y.powf(-0.5) - 2.0 * (1.0 - y.powf(-0.5))
    };
    let z = find_root_bracketed(n, 1.0, 2.0, 1e-14).unwrap();
    println!("matter-only critical redshift: {z:.15}");

    let err = find_root_bracketed(|x| x * x + 1.0, -1.0, 1.0, 1e-12).unwrap_err();
    println!("no sign change: {err}");
}
