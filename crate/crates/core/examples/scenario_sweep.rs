//! Scenarios from key = value text, one run, and a parallel sweep of c
//! around c_Lambda.

use std::path::Path;

use ltb_redshift::cli::{run_scenario, sweep, Command, Scenario, SweepParam};

fn main() {
    let mut s = Scenario::default();
    s.apply_text("command = zlambda\nomega = 0.3\n", Path::new("inline.cfg"))
        .unwrap();
    let out = run_scenario(&s);
    println!(
        "zlambda: exit {} z_lambda = {}",
        out.exit_code(),
        out.report.summary["z_lambda"]
    );

    let mut base = Scenario::default();
    base.apply_text("omega = 0\nrange = 1:1.5\n", Path::new("inline.cfg"))
        .unwrap();
    let rep = sweep(
        &base,
        Command::Crossing,
        SweepParam::CScale,
        &[1.2, 1.0, 0.9, 1.1],
    );
    print!("{}", rep.table().to_csv());
}
