//! Adaptive Gauss-Kronrod on the luminosity integrand and a kinked function.

use ltb_redshift::numerics::{integrate_adaptive, QuadratureSpec};

fn main() {
    let spec = QuadratureSpec::precise();
    for omega in [0.0, 0.3, 0.7, 1.0] {
        let f = |y: f64| 1.0 / (omega + (1.0 - omega) * y.powi(3)).sqrt();
        let v = integrate_adaptive(f, 1.0, 3.0, &spec).expect("smooth integrand");
        println!("omega = {omega:.1}: int_1^3 I(y) dy = {v:.15}");
    }

    // sqrt(|x|) has a kink at 0; depth-limited runs still hand back an estimate
    let coarse = QuadratureSpec::new(1e-300, 0.0, 4).unwrap();
    match integrate_adaptive(|x: f64| x.abs().sqrt(), -1.0, 1.0, &coarse) {
        Ok(v) => println!("kink: {v}"),
        Err(e) => println!(
            "kink: {e} (best estimate {:?}, exact {})",
            e.best_estimate(),
            4.0 / 3.0
        ),
    }
}
