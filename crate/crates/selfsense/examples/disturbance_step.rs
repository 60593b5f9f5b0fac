//! Hit the levitated rotor with a step force and watch the loop reject it.
//!
//! Run with: cargo run --release -p selfsense --example disturbance_step

use selfsense::config::SimConfig;
use selfsense::sim::{run_closed_loop, ScenarioKind};

fn main() {
    let mut cfg = SimConfig::default();
    cfg.scenario.kind = ScenarioKind::DisturbanceRejection;
    cfg.scenario.initial_x = 0.0;
    let d = cfg.scenario.disturbance;
    println!(
        "step of {} N on the {} axis at t = {} s, rotor starting centered",
        d.amplitude,
        d.axis.as_str(),
        d.start
    );

    let result = run_closed_loop(&cfg).expect("run");

    // show the dip and recovery around the step
    println!("\n{:>8} {:>12} {:>12} {:>12}", "t [ms]", "x [um]", "u_x [A]", "fx [N]");
    for r in &result.records {
        let near_step = (r.t - d.start).abs() < 0.06;
        let on_grid = (r.t * 1e3).rem_euclid(5.0) < 0.05;
        if near_step && on_grid {
            println!(
                "{:>8.1} {:>12.3} {:>12.4} {:>12.4}",
                1e3 * r.t,
                1e6 * r.x,
                r.command.u_x,
                r.fx
            );
        }
    }

    let dip = result
        .records
        .iter()
        .filter(|r| r.t >= d.start)
        .map(|r| r.x.abs())
        .fold(0.0f64, f64::max);
    println!("\nworst excursion after the step: {:.1} um", 1e6 * dip);
    println!("{}", result.summary.to_text());
}
