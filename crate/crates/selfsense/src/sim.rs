//! Fixed-step scenario engine: static sweeps, open- and closed-loop runs,
//! trace recording and diagnostic stiffness evaluation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::config::SimConfig;
use crate::control::{
    dq_to_three_phase, superpose_coil_currents, ControlCommand, ControllerConfig, PidController,
    WindingPattern,
};
use crate::motor::{radial_force, ModelError, MotorParams, RotorState, N_TEETH};
use crate::plant::CurrentDrivePlant;
use crate::signal::{PositionEstimator, SignalError};
use crate::trace::{RunSummary, SweepPoint, TraceFlags, TraceRecord};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error("scenario is not runnable: {0}")]
    Scenario(String),
}

// ---------------------------------------------------------------------------
// Scenario configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    StaticSweep,
    OpenLoopInjection,
    ClosedLoopLevitation,
    DisturbanceRejection,
}

impl ScenarioKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::StaticSweep => "static_sweep",
            Self::OpenLoopInjection => "open_loop_injection",
            Self::ClosedLoopLevitation => "closed_loop_levitation",
            Self::DisturbanceRejection => "disturbance_rejection",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "static_sweep" => Some(Self::StaticSweep),
            "open_loop_injection" => Some(Self::OpenLoopInjection),
            "closed_loop_levitation" => Some(Self::ClosedLoopLevitation),
            "disturbance_rejection" => Some(Self::DisturbanceRejection),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeedbackSource {
    /// Close the loop on the demodulated estimate.
    Estimated,
    /// Close the loop on the true rotor position (plus optional noise).
    True,
}

impl FeedbackSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Estimated => "estimated",
            Self::True => "true",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "estimated" => Some(Self::Estimated),
            "true" => Some(Self::True),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DisturbanceKind {
    None,
    Step,
    Sine,
}

impl DisturbanceKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Step => "step",
            Self::Sine => "sine",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(Self::None),
            "step" => Some(Self::Step),
            "sine" => Some(Self::Sine),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::X => "x",
            Self::Y => "y",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "x" => Some(Self::X),
            "y" => Some(Self::Y),
            _ => None,
        }
    }
}

/// External force profile applied to the rotor.
#[derive(Debug, Clone, Copy)]
pub struct Disturbance {
    pub kind: DisturbanceKind,
    /// N
    pub amplitude: f64,
    /// s
    pub start: f64,
    /// Hz, sine profile only
    pub frequency: f64,
    pub axis: Axis,
}

impl Default for Disturbance {
    fn default() -> Self {
        Self {
            kind: DisturbanceKind::Step,
            amplitude: 0.2,
            start: 0.2,
            frequency: 50.0,
            axis: Axis::X,
        }
    }
}

impl Disturbance {
    /// Force at time `t`, N.
    pub fn force(&self, t: f64) -> (f64, f64) {
        let magnitude = match self.kind {
            DisturbanceKind::None => 0.0,
            DisturbanceKind::Step => {
                if t >= self.start {
                    self.amplitude
                } else {
                    0.0
                }
            }
            DisturbanceKind::Sine => {
                if t >= self.start {
                    self.amplitude
                        * (std::f64::consts::TAU * self.frequency * (t - self.start)).sin()
                } else {
                    0.0
                }
            }
        };
        match self.axis {
            Axis::X => (magnitude, 0.0),
            Axis::Y => (0.0, magnitude),
        }
    }
}

/// Timing, initial conditions and feedback selection of one run.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    /// Plant step, s.
    pub dt: f64,
    /// Simulated length, s.
    pub duration: f64,
    /// Controller period, s; must be an integer multiple of `dt`.
    pub control_period: f64,
    /// Static-sweep grid, m.
    pub sweep_min: f64,
    pub sweep_max: f64,
    pub sweep_step: f64,
    /// Initial rotor state.
    pub initial_x: f64,
    pub initial_y: f64,
    pub initial_vx: f64,
    pub initial_vy: f64,
    pub disturbance: Disturbance,
    pub feedback: FeedbackSource,
    /// Standard deviation of the true-feedback sensor noise, m.
    pub sensor_noise_sigma: f64,
    pub seed: u64,
    /// m, settling threshold used in the summary
    pub settle_threshold: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            kind: ScenarioKind::ClosedLoopLevitation,
            dt: 5e-6,
            duration: 0.5,
            control_period: 1e-4,
            sweep_min: -1e-4,
            sweep_max: 1e-4,
            sweep_step: 1e-5,
            initial_x: 1e-4,
            initial_y: 0.0,
            initial_vx: 0.0,
            initial_vy: 0.0,
            disturbance: Disturbance::default(),
            feedback: FeedbackSource::Estimated,
            sensor_noise_sigma: 0.0,
            seed: 42,
            settle_threshold: 5e-6,
        }
    }
}

impl ScenarioConfig {
    /// Plant steps per controller update.
    pub fn steps_per_control(&self) -> usize {
        (self.control_period / self.dt).round() as usize
    }

    pub fn initial_rotor(&self) -> RotorState {
        RotorState {
            x: self.initial_x,
            y: self.initial_y,
            vx: self.initial_vx,
            vy: self.initial_vy,
            t: 0.0,
        }
    }

    pub fn sweep_positions(&self) -> Vec<f64> {
        let n = ((self.sweep_max - self.sweep_min) / self.sweep_step).round() as usize;
        (0..=n)
            .map(|i| self.sweep_min + i as f64 * self.sweep_step)
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Static sweep
// ---------------------------------------------------------------------------

/// Sweep table plus one trace record per grid point (final-sample state).
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub points: Vec<SweepPoint>,
    pub records: Vec<TraceRecord>,
}

/// Hold the rotor at each grid position (mechanics frozen), run injection and
/// demodulation to steady state and record the raw outputs.
///
/// Steady state means the averaging window has filled and a further ten
/// carrier periods have elapsed.
pub fn run_static_sweep(cfg: &SimConfig, axis: Axis) -> Result<SweepOutcome, SimError> {
    let params = &cfg.motor;
    let injection = &cfg.injection;
    let pattern = cfg.winding.build_pattern();
    let dt = cfg.scenario.dt;

    let window_samples = cfg.estimator.window_samples(injection, dt)?;
    let samples_per_period = (1.0 / (injection.frequency * dt)).round() as usize;
    let settle_samples = window_samples + 10 * samples_per_period;
    let point_duration = settle_samples as f64 * dt;

    let base = superpose_coil_currents(
        (0.0, 0.0, 0.0),
        cfg.winding.torque_bias,
        0.0,
        &pattern,
        injection,
    );

    let mut points = Vec::new();
    let mut records = Vec::new();
    for (index, position) in cfg.scenario.sweep_positions().into_iter().enumerate() {
        let (x, y) = match axis {
            Axis::X => (position, 0.0),
            Axis::Y => (0.0, position),
        };
        let rotor = RotorState::at_rest(x, y);
        let mut estimator = cfg.estimator.build(injection, dt)?;
        let mut bank = crate::motor::CoilBank {
            current: add_injection(&base, injection, 0.0),
            ..crate::motor::CoilBank::default()
        };
        let mut gap_clamped = false;

        for n in 1..=settle_samples {
            let t = n as f64 * dt;
            let commanded = add_injection(&base, injection, t);
            bank = crate::motor::current_drive_step(&bank, &commanded, &rotor, dt, params)?;
            estimator.update(&bank.terminal_voltage, t);
        }
        let force = radial_force(&rotor, &bank.current, params)?;
        gap_clamped |= force.gap_clamped;

        points.push(SweepPoint {
            position,
            x_raw: estimator.x_raw(),
            y_raw: estimator.y_raw(),
        });
        records.push(TraceRecord {
            t: index as f64 * point_duration,
            x,
            y,
            x_hat: estimator.x_hat(),
            y_hat: estimator.y_hat(),
            x_raw: estimator.x_raw(),
            y_raw: estimator.y_raw(),
            currents: bank.current,
            voltages: bank.terminal_voltage,
            fx: force.fx,
            fy: force.fy,
            command: ControlCommand::default(),
            flags: TraceFlags {
                gap_clamp: gap_clamped,
                ..TraceFlags::default()
            },
        });
    }
    Ok(SweepOutcome { points, records })
}

fn add_injection(
    base: &[f64; N_TEETH],
    injection: &crate::signal::InjectionConfig,
    t: f64,
) -> [f64; N_TEETH] {
    let mut out = *base;
    let i_s = injection.current(t);
    for (slot, &k) in injection.coils.iter().enumerate() {
        out[k] += i_s * injection.polarity.get(slot).copied().unwrap_or(1.0);
    }
    out
}

// ---------------------------------------------------------------------------
// Time-domain runs
// ---------------------------------------------------------------------------

/// Trace plus summary of a time-domain run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub records: Vec<TraceRecord>,
    pub summary: RunSummary,
}

/// Simulate the full loop: plant advanced at `dt`, controller and trace at
/// `control_period`. Open-loop scenarios skip the controllers but keep the
/// injection and the torque bias.
///
/// Touchdown ends the run early; the partial trace stays valid and the final
/// record carries the touchdown flag.
pub fn run_closed_loop(cfg: &SimConfig) -> Result<RunResult, SimError> {
    if cfg.scenario.kind == ScenarioKind::StaticSweep {
        return Err(SimError::Scenario(
            "static_sweep has no time-domain trace; use run_static_sweep".into(),
        ));
    }
    let scenario = &cfg.scenario;
    let controllers_active = scenario.kind != ScenarioKind::OpenLoopInjection;
    // the configured disturbance profile only drives the rejection scenario
    let disturbance = if scenario.kind == ScenarioKind::DisturbanceRejection {
        scenario.disturbance
    } else {
        Disturbance {
            kind: DisturbanceKind::None,
            ..scenario.disturbance
        }
    };
    let pattern = cfg.winding.build_pattern();
    let dt = scenario.dt;
    let steps_per_control = scenario.steps_per_control();
    let n_control = (scenario.duration / scenario.control_period).round() as usize;

    let controller_cfg = ControllerConfig {
        dt: scenario.control_period,
        ..cfg.controller.gains()
    };
    let mut pid_x = PidController::new();
    let mut pid_y = PidController::new();
    let mut estimator = cfg.estimator.build(&cfg.injection, dt)?;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let noise = Normal::new(0.0, 1.0).expect("unit normal");

    let initial_rotor = scenario.initial_rotor();
    let mut plant = CurrentDrivePlant::new(
        cfg.motor.clone(),
        cfg.injection.clone(),
        cfg.controller.command_filter_tau,
        initial_rotor,
        &bias_base(&pattern, &cfg.injection),
    );

    let mut records: Vec<TraceRecord> = Vec::with_capacity(n_control + 1);
    records.push(initial_record(&plant.rotor, &estimator));

    let mut err_sq_sum = 0.0;
    let mut err_samples = 0usize;
    let mut touchdown = false;
    let mut loop_engaged = false;

    'control: for _period in 0..n_control {
        // the estimated loop engages once the demodulation window holds real
        // samples; closing it on a half-filled filter feeds back garbage
        let feedback_ready = match scenario.feedback {
            FeedbackSource::Estimated => estimator.is_filled(),
            FeedbackSource::True => true,
        };

        // controller update at the period boundary
        let command = if controllers_active && feedback_ready {
            let limit = cfg.motor.clamp_radius();
            let (x_fb, y_fb) = match scenario.feedback {
                FeedbackSource::Estimated => (
                    // a displacement reading beyond the bore is unphysical
                    estimator.x_hat().clamp(-limit, limit),
                    estimator.y_hat().clamp(-limit, limit),
                ),
                FeedbackSource::True => {
                    let mut x = plant.rotor.x;
                    let mut y = plant.rotor.y;
                    if scenario.sensor_noise_sigma > 0.0 {
                        x += scenario.sensor_noise_sigma * noise.sample(&mut rng);
                        y += scenario.sensor_noise_sigma * noise.sample(&mut rng);
                    }
                    (x, y)
                }
            };
            let e_x = -x_fb;
            let e_y = -y_fb;
            if !loop_engaged {
                pid_x.prime(e_x);
                pid_y.prime(e_y);
                loop_engaged = true;
            }
            let u_x = pid_x.step(e_x, &controller_cfg);
            let u_y = pid_y.step(e_y, &controller_cfg);
            let (u_d, u_q) = crate::control::xy_to_dq(u_x, u_y, cfg.controller.dq_angle);
            let (i_u, i_v, i_w) = dq_to_three_phase(u_d, u_q);
            let coil_base = superpose_coil_currents(
                (i_u, i_v, i_w),
                pattern.torque_bias,
                0.0,
                &pattern,
                &cfg.injection,
            );
            ControlCommand {
                e_x,
                e_y,
                u_x,
                u_y,
                u_d,
                u_q,
                i_u,
                i_v,
                i_w,
                coil_base,
                saturated: u_x.abs() >= controller_cfg.output_limit
                    || u_y.abs() >= controller_cfg.output_limit,
            }
        } else {
            ControlCommand {
                coil_base: bias_base(&pattern, &cfg.injection),
                ..ControlCommand::default()
            }
        };

        let base = command.coil_base;

        let mut flags = TraceFlags {
            saturation: command.saturated,
            ..TraceFlags::default()
        };
        let mut last_sample = None;

        for _step in 0..steps_per_control {
            match plant.step(&base, |t| disturbance.force(t), dt) {
                Ok(sample) => {
                    estimator.update(&sample.voltages, sample.rotor.t);
                    flags.gap_clamp |= sample.gap_clamped;
                    if estimator.is_filled() {
                        let ex = estimator.x_hat() - sample.rotor.x;
                        let ey = estimator.y_hat() - sample.rotor.y;
                        err_sq_sum += ex * ex + ey * ey;
                        err_samples += 2;
                    }
                    last_sample = Some(sample);
                }
                Err(ModelError::Touchdown { .. }) => {
                    touchdown = true;
                    flags.touchdown = true;
                    let mut record = match last_sample.take() {
                        Some(s) => sample_record(&s, &estimator, &command, flags),
                        None => {
                            let mut r = initial_record(&plant.rotor, &estimator);
                            r.command = command;
                            r
                        }
                    };
                    record.t = plant.rotor.t;
                    record.x = plant.rotor.x;
                    record.y = plant.rotor.y;
                    record.flags = flags;
                    records.push(record);
                    break 'control;
                }
                Err(e) => return Err(e.into()),
            }
        }

        if let Some(sample) = last_sample {
            records.push(sample_record(&sample, &estimator, &command, flags));
        }
    }

    let summary = summarize(cfg, &records, touchdown, err_sq_sum, err_samples);
    Ok(RunResult { records, summary })
}

fn bias_base(
    pattern: &WindingPattern,
    injection: &crate::signal::InjectionConfig,
) -> [f64; N_TEETH] {
    superpose_coil_currents((0.0, 0.0, 0.0), pattern.torque_bias, 0.0, pattern, injection)
}

fn initial_record(rotor: &RotorState, estimator: &PositionEstimator) -> TraceRecord {
    TraceRecord {
        t: rotor.t,
        x: rotor.x,
        y: rotor.y,
        x_hat: estimator.x_hat(),
        y_hat: estimator.y_hat(),
        x_raw: estimator.x_raw(),
        y_raw: estimator.y_raw(),
        currents: [0.0; N_TEETH],
        voltages: [0.0; N_TEETH],
        fx: 0.0,
        fy: 0.0,
        command: ControlCommand::default(),
        flags: TraceFlags::default(),
    }
}

fn sample_record(
    sample: &crate::plant::PlantSample,
    estimator: &PositionEstimator,
    command: &ControlCommand,
    flags: TraceFlags,
) -> TraceRecord {
    TraceRecord {
        t: sample.rotor.t,
        x: sample.rotor.x,
        y: sample.rotor.y,
        x_hat: estimator.x_hat(),
        y_hat: estimator.y_hat(),
        x_raw: estimator.x_raw(),
        y_raw: estimator.y_raw(),
        currents: sample.currents,
        voltages: sample.voltages,
        fx: sample.fx,
        fy: sample.fy,
        command: *command,
        flags,
    }
}

fn summarize(
    cfg: &SimConfig,
    records: &[TraceRecord],
    touchdown: bool,
    err_sq_sum: f64,
    err_samples: usize,
) -> RunSummary {
    let scenario = &cfg.scenario;
    let threshold = scenario.settle_threshold;

    let mut last_violation: Option<f64> = None;
    let mut settled_after: Option<f64> = None;
    let mut max_abs_x: f64 = 0.0;
    let mut max_abs_y: f64 = 0.0;
    for r in records {
        max_abs_x = max_abs_x.max(r.x.abs());
        max_abs_y = max_abs_y.max(r.y.abs());
        if r.x.abs().max(r.y.abs()) >= threshold {
            last_violation = Some(r.t);
            settled_after = None;
        } else if settled_after.is_none() {
            settled_after = Some(r.t);
        }
    }
    let settling_time = match (last_violation, settled_after) {
        (None, _) => 0.0,
        (Some(_), Some(t)) => t,
        (Some(_), None) => f64::INFINITY,
    };

    // undershoot past center, measured against the dominant initial offset
    let overshoot = {
        let x0 = scenario.initial_x;
        let y0 = scenario.initial_y;
        if x0 == 0.0 && y0 == 0.0 {
            records
                .iter()
                .map(|r| r.x.hypot(r.y))
                .fold(0.0f64, f64::max)
        } else if x0.abs() >= y0.abs() {
            records
                .iter()
                .map(|r| -r.x * x0.signum())
                .fold(0.0f64, f64::max)
        } else {
            records
                .iter()
                .map(|r| -r.y * y0.signum())
                .fold(0.0f64, f64::max)
        }
    };

    let last = records.last();
    RunSummary {
        scenario: scenario.kind.as_str().into(),
        feedback: scenario.feedback.as_str().into(),
        duration: last.map_or(0.0, |r| r.t),
        records: records.len(),
        settling_time,
        settle_threshold: threshold,
        overshoot,
        estimation_error_rms: if err_samples > 0 {
            (err_sq_sum / err_samples as f64).sqrt()
        } else {
            f64::NAN
        },
        touchdown,
        final_x: last.map_or(0.0, |r| r.x),
        final_y: last.map_or(0.0, |r| r.y),
        max_abs_x,
        max_abs_y,
    }
}

// ---------------------------------------------------------------------------
// Stiffness diagnostic
// ---------------------------------------------------------------------------

/// Numerical radial stiffness `dFx/dx` at the centered state for a fixed
/// current set, N/m. Positive values destabilize (force grows toward the
/// closing gap).
pub fn linearized_stiffness(params: &MotorParams, currents: &[f64; N_TEETH]) -> f64 {
    let h = 1e-6 * params.nominal_gap;
    let plus = radial_force(&RotorState::at_rest(h, 0.0), currents, params)
        .expect("probe state is inside the gap")
        .fx;
    let minus = radial_force(&RotorState::at_rest(-h, 0.0), currents, params)
        .expect("probe state is inside the gap")
        .fx;
    (plus - minus) / (2.0 * h)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
