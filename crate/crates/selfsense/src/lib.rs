//! Deterministic simulator and control library for a 12-tooth bearingless
//! hysteresis motor that senses its own rotor position.
//!
//! The machine carries one coil per stator tooth. A high-frequency current
//! injected on the four axis coils modulates each coil's gap-dependent
//! inductance into its terminal voltage; synchronously demodulating the
//! voltage difference of opposing coils yields the rotor's radial position,
//! which closes the magnetic suspension loop without dedicated gap sensors.
//!
//! Module map:
//! - [`motor`]: lumped electromagnetic model and rigid-body rotor dynamics
//! - [`signal`]: carrier injection, demodulation, calibration
//! - [`control`]: suspension PID, dq / three-phase transforms, winding
//!   superposition
//! - [`plant`]: current-drive plant stepping for the scenario engine
//! - [`sim`]: scenarios, traces, summaries, stiffness diagnostics
//! - [`config`]: sectioned key-value configuration with strict validation
//! - [`cli`]: the `selfsense` command-line front end
//!
//! The `examples/` directory has one runnable program per capability; start
//! with `cargo run --release -p selfsense --example static_sweep`.

pub mod cli;
pub mod config;
pub mod control;
pub mod motor;
pub mod plant;
pub mod rk4;
pub mod signal;
pub mod sim;
pub mod trace;

pub use config::SimConfig;
pub use control::{ControllerConfig, PidController, WindingPattern};
pub use motor::{CoilBank, ModelError, MotorParams, RotorState};
pub use signal::{Calibration, Demodulator, InjectionConfig, PositionEstimator};
pub use sim::{run_closed_loop, run_static_sweep, Axis, ScenarioConfig, ScenarioKind};
pub use trace::{RunSummary, SweepPoint, TraceRecord};
