//! Sweep the rotor across the x axis with the mechanics frozen and print
//! the demodulated readout at each position, the same experiment the
//! `sweep` subcommand writes to sweep.csv.
//!
//! Run with: cargo run --release -p selfsense --example static_sweep

use selfsense::config::SimConfig;
use selfsense::sim::{run_static_sweep, Axis};

fn main() {
    let cfg = SimConfig::default();
    let g0 = cfg.motor.nominal_gap;
    println!(
        "injection: {} A at {} Hz on coils {:?} (1-based: 1,4,7,10)",
        cfg.injection.amplitude,
        cfg.injection.frequency,
        cfg.injection
            .coils
            .iter()
            .map(|k| k + 1)
            .collect::<Vec<_>>()
    );
    println!("sweeping x over [{:+.1e}, {:+.1e}] m\n", cfg.scenario.sweep_min, cfg.scenario.sweep_max);

    let outcome = run_static_sweep(&cfg, Axis::X).expect("sweep");
    println!("{:>12} {:>14} {:>14}", "x / g0", "x_raw [V]", "y_raw [V]");
    for p in &outcome.points {
        println!(
            "{:>12.3} {:>14.6e} {:>14.6e}",
            p.position / g0,
            p.x_raw,
            p.y_raw
        );
    }

    let span = outcome.points.last().unwrap().x_raw - outcome.points.first().unwrap().x_raw;
    let monotonic = outcome
        .points
        .windows(2)
        .all(|pair| pair[1].x_raw > pair[0].x_raw);
    println!("\nreadout span {span:.4} V over the sweep, strictly monotonic: {monotonic}");
    println!(
        "sensitivity around center: {:.1} V per meter of displacement",
        (outcome.points[11].x_raw - outcome.points[9].x_raw) / (2.0 * cfg.scenario.sweep_step)
    );
}
