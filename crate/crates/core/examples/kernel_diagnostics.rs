//! Kernel coefficients at one state: the J-function partials, F and G,
//! det U, and the local solvability check.

use ltb_redshift::kernel::{
    check_local_solvability, det3, eval_kernel, u_matrix, GeodesicState, LtbModel, Sign,
};

fn main() {
    let model = LtbModel::power_law(0.8, 1.5, 1.3, Sign::Plus, Sign::Plus, 1.0);
    let st = GeodesicState::new(0.7, 0.9, 0.8, 0.3);
    let r_shell = 0.6;
    let k = eval_kernel(&st, r_shell, &model).unwrap();
    println!(
        "J_R {:.10}  J_R0 {:.10}  J_M {:.10}  J_E {:.10}",
        k.j_r, k.j_r0, k.j_m, k.j_e
    );
    println!("F {:.10}  G {:.10}", k.f, k.g);
    let u = u_matrix(&k, st.m);
    println!(
        "det U: product form {:.12e}, expanded {:.12e}",
        k.det_u,
        det3(&u)
    );
    println!(
        "denominators: geometric {:.6e}, solvability {:.6e}",
        k.denom_geo, k.denom_sol
    );
    println!(
        "{:?}",
        check_local_solvability(&st, r_shell, &model).unwrap()
    );
}
