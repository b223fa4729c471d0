//! The two time normalizations of the conformal-time solution and how well
//! each satisfies adot^2 = 1 + 1/a.

use ltb_redshift::frw::{
    audit_convention, scale_factor_param, time_param, FrwParams, TimeConvention,
};

fn main() {
    for conv in [
        TimeConvention::ConstraintConsistent,
        TimeConvention::Sqrt2Scaled,
    ] {
        let p = FrwParams::new(1.0, 1.0, conv).unwrap();
        let grid: Vec<f64> = (0..=200)
            .map(|i| p.eta_min() + 0.05 + i as f64 * 0.02)
            .collect();
        let a = audit_convention(&p, &grid);
        println!(
            "{conv:?}: t0 = {:.12}, max residual {:.3e}, distance from -(1+1/a)/2: {:.3e}",
            p.t0(),
            a.max_constraint_residual,
            a.max_factor_two_deviation
        );
    }
    let p = FrwParams::new(0.5, 1.0, TimeConvention::ConstraintConsistent).unwrap();
    for eta in [-0.5, 0.0, 0.5, 1.0] {
        println!(
            "eta {eta:>5.2}: a = {:.10}  t = {:.10}",
            scale_factor_param(eta, &p),
            time_param(eta, &p)
        );
    }
}
