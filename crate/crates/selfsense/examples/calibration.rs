//! Fit the volts-to-meters calibration from static sweeps on both axes and
//! print the config fragment the `calibrate` subcommand writes.
//!
//! Run with: cargo run --release -p selfsense --example calibration

use selfsense::config::{calibration_fragment, SimConfig};
use selfsense::signal::calibrate;
use selfsense::sim::{run_static_sweep, Axis};

fn main() {
    let cfg = SimConfig::default();

    let mut fits = Vec::new();
    for axis in [Axis::X, Axis::Y] {
        let outcome = run_static_sweep(&cfg, axis).expect("sweep");
        let table: Vec<(f64, f64)> = outcome
            .points
            .iter()
            .map(|p| {
                let raw = match axis {
                    Axis::X => p.x_raw,
                    Axis::Y => p.y_raw,
                };
                (p.position, raw)
            })
            .collect();
        let fit = calibrate(&table).expect("fit");
        println!(
            "{} axis: gain {:.6e} m/V, offset {:.3e} V, residual rms {:.3e} V over {} points",
            axis.as_str(),
            fit.calibration.gain,
            fit.calibration.offset,
            fit.residual_rms,
            table.len()
        );
        fits.push(fit.calibration);
    }

    println!("\ngenerated fragment:\n");
    print!("{}", calibration_fragment(fits[0], fits[1]));
}
