//! Adaptive Dormand-Prince integration with dense output and a terminal
//! event: a falling body that stops when it reaches the ground.

use ltb_redshift::numerics::{solve_ivp, Direction, EventSpec, IvpSpec};

fn main() {
    let g = 9.81;
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| -> Result<(), String> {
        dy[0] = y[1];
        dy[1] = -g;
        Ok(())
    };
    let ground = EventSpec::new("ground", |_t, y: &[f64]| y[0])
        .direction(Direction::Falling)
        .terminal(true);
    let traj = solve_ivp(rhs, &[10.0, 0.0], 0.0, 5.0, &IvpSpec::default(), &[ground]).unwrap();

    let hit = traj.terminated_by_event().expect("hits the ground");
    println!(
        "ground at t = {:.12} (exact {:.12})",
        hit.z,
        (20.0 / g).sqrt()
    );
    println!(
        "accepted {} rejected {}",
        traj.stats.accepted, traj.stats.rejected
    );
    for (t, y) in traj.sample_uniform(5) {
        println!("t = {t:.4}  height = {:.6}", y[0]);
    }
}
