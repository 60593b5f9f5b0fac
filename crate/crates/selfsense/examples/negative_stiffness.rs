//! Measure the destabilizing stiffness of the 4-pole bias field and let an
//! uncontrolled rotor fall into the stator to show why the loop is needed.
//!
//! Run with: cargo run --release -p selfsense --example negative_stiffness

use selfsense::config::SimConfig;
use selfsense::control::superpose_coil_currents;
use selfsense::signal::InjectionConfig;
use selfsense::sim::{linearized_stiffness, run_closed_loop, ScenarioKind};

fn main() {
    let cfg = SimConfig::default();
    let pattern = cfg.winding.build_pattern();
    let injection_off = InjectionConfig {
        coils: vec![],
        polarity: vec![],
        ..cfg.injection.clone()
    };

    println!("{:>10} {:>16}", "bias [A]", "dFx/dx [N/m]");
    for bias in [0.25, 0.5, 1.0, 2.0] {
        let currents =
            superpose_coil_currents((0.0, 0.0, 0.0), bias, 0.0, &pattern, &injection_off);
        let k = linearized_stiffness(&cfg.motor, &currents);
        println!("{bias:>10.2} {k:>16.1}");
    }
    println!("(positive = force grows toward the closing gap; doubling the bias quadruples it)\n");

    let mut open_loop = SimConfig::default();
    open_loop.scenario.kind = ScenarioKind::OpenLoopInjection;
    open_loop.scenario.duration = 0.2;
    open_loop.scenario.initial_x = 0.01 * open_loop.motor.nominal_gap;
    println!(
        "open loop from x0 = {:.1e} m with the default {} A bias:",
        open_loop.scenario.initial_x, open_loop.winding.torque_bias
    );
    let result = run_closed_loop(&open_loop).expect("run");
    for r in result.records.iter().step_by(40) {
        println!("  t = {:>6.1} ms, x = {:>8.1} um", 1e3 * r.t, 1e6 * r.x);
    }
    let last = result.records.last().unwrap();
    println!(
        "  touchdown at t = {:.1} ms, x = {:.1} um (clamp radius {:.1} um)",
        1e3 * last.t,
        1e6 * last.x,
        1e6 * open_loop.motor.clamp_radius()
    );
}
