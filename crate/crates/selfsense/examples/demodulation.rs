//! The synchronous demodulator on its own: feed synthetic signals through
//! the mix-and-average chain and compare against a single-bin Fourier
//! projection.
//!
//! Run with: cargo run --release -p selfsense --example demodulation

use std::f64::consts::TAU;

use selfsense::signal::{Demodulator, InjectionConfig};

type Input = Box<dyn Fn(f64) -> f64>;

fn main() {
    let cfg = InjectionConfig::default();
    let dt = 5e-6;
    let window = 100; // one carrier period at 2 kHz
    let omega = TAU * cfg.frequency;

    let cases: Vec<(&str, Input)> = vec![
        (
            "in-phase cosine, amplitude 1.0",
            Box::new(move |t: f64| (omega * t).cos()),
        ),
        (
            "quadrature sine, amplitude 1.0",
            Box::new(move |t: f64| (omega * t).sin()),
        ),
        (
            "cosine + strong off-band tones",
            Box::new(move |t: f64| {
                0.4 * (omega * t).cos() + 2.0 * (0.31 * omega * t + 0.7).sin()
                    + 1.5 * (2.7 * omega * t).cos()
            }),
        ),
    ];

    println!("window: {window} samples ({} carrier periods)\n", window as f64 * dt * cfg.frequency);
    for (name, input) in &cases {
        let mut demod = Demodulator::new(&cfg, dt, window).expect("window");
        let (mut re, mut im) = (0.0, 0.0);
        let mut out = 0.0;
        for n in 0..window {
            let t = n as f64 * dt;
            let v = input(t);
            out = demod.push(v, t);
            re += v * (omega * t).cos() / window as f64;
            im += v * (omega * t).sin() / window as f64;
        }
        let phase = cfg.demod_phase_offset;
        let projection = im * phase.cos() + re * phase.sin();
        println!("{name}:");
        println!("  demodulated: {out:+.9e} V");
        println!("  projection:  {projection:+.9e} V");
        println!("  deviation:   {:.2e}\n", (out - projection).abs());
    }
}
