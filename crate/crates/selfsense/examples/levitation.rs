//! Close the suspension loop on the demodulated position estimate and pull
//! the rotor from a 0.1 mm offset to the center.
//!
//! Run with: cargo run --release -p selfsense --example levitation

use selfsense::config::SimConfig;
use selfsense::sim::run_closed_loop;

fn main() {
    let cfg = SimConfig::default();
    println!(
        "levitating from x0 = {:.1e} m on {} feedback, gains kp={} ki={} kd={}",
        cfg.scenario.initial_x,
        cfg.scenario.feedback.as_str(),
        cfg.controller.kp,
        cfg.controller.ki,
        cfg.controller.kd
    );

    let result = run_closed_loop(&cfg).expect("run");

    println!("\n{:>8} {:>12} {:>12} {:>12} {:>8}", "t [ms]", "x [um]", "x_hat [um]", "u_x [A]", "sat");
    for r in result.records.iter().step_by(250) {
        println!(
            "{:>8.1} {:>12.3} {:>12.3} {:>12.4} {:>8}",
            1e3 * r.t,
            1e6 * r.x,
            1e6 * r.x_hat,
            r.command.u_x,
            if r.flags.saturation { "*" } else { "" }
        );
    }

    println!("\n{}", result.summary.to_text());
}
