//! Sectioned key-value configuration: parsing, strict key checking, dotted
//! overrides and invariant validation.
//!
//! The format is a flat INI-style file. Sections are `[motor]`,
//! `[injection]`, `[estimator]`, `[controller]`, `[winding]` and
//! `[scenario]`; every key has a built-in default, so a file only needs the
//! keys it changes. Unknown sections or keys are hard errors so typos never
//! fall back to defaults silently, and all diagnostics of a load are
//! reported together.

use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::control::ControllerConfig;
use crate::motor::{MotorParams, N_TEETH};
use crate::signal::{Calibration, InjectionConfig, PositionEstimator, SignalError};
use crate::sim::{Axis, DisturbanceKind, FeedbackSource, ScenarioConfig, ScenarioKind};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },
    /// Unknown keys, unparsable values and invariant violations, all of them.
    #[error("{}", format_diagnostics(.0))]
    Invalid(Vec<String>),
}

fn format_diagnostics(items: &[String]) -> String {
    let mut out = format!("{} configuration error(s):", items.len());
    for item in items {
        out.push_str("\n  - ");
        out.push_str(item);
    }
    out
}

// ---------------------------------------------------------------------------
// Settings sections not owned by other modules
// ---------------------------------------------------------------------------

/// Demodulation window and the per-axis volts-to-meters calibration.
#[derive(Debug, Clone)]
pub struct EstimatorSettings {
    /// Moving-average length in whole carrier periods.
    pub window_periods: u32,
    pub calibration_x: Calibration,
    pub calibration_y: Calibration,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        Self {
            window_periods: 1,
            // fitted by `selfsense calibrate` on the default machine
            calibration_x: Calibration {
                gain: DEFAULT_CALIBRATION_GAIN,
                offset: 0.0,
            },
            calibration_y: Calibration {
                gain: DEFAULT_CALIBRATION_GAIN,
                offset: 0.0,
            },
        }
    }
}

/// Demodulated volts per meter of the default machine, inverted; fitted over
/// the +-0.2 gap sweep. Regenerate with `selfsense calibrate` after changing
/// geometry or injection settings.
pub const DEFAULT_CALIBRATION_GAIN: f64 = 3.8557004553462285e-4;

impl EstimatorSettings {
    /// Window length in samples for a plant step `dt`; errors when the
    /// window cannot span a whole number of carrier periods.
    pub fn window_samples(&self, injection: &InjectionConfig, dt: f64) -> Result<usize, SignalError> {
        let exact = self.window_periods as f64 / (injection.frequency * dt);
        let samples = exact.round() as usize;
        let spanned = samples as f64 * dt * injection.frequency;
        if samples == 0 || (spanned - self.window_periods as f64).abs() > 1e-9 {
            return Err(SignalError::IncommensurateWindow {
                samples,
                dt,
                spanned,
            });
        }
        Ok(samples)
    }

    pub fn build(&self, injection: &InjectionConfig, dt: f64) -> Result<PositionEstimator, SignalError> {
        PositionEstimator::new(
            injection,
            dt,
            self.window_samples(injection, dt)?,
            self.calibration_x,
            self.calibration_y,
        )
    }
}

/// Controller gains plus the dq reference angle of the transform stage.
#[derive(Debug, Clone)]
pub struct ControllerSettings {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub output_limit: f64,
    pub derivative_filter_tau: f64,
    /// Angle driving the xy -> dq rotation; zero keeps the suspension frame
    /// fixed to the stator.
    pub dq_angle: f64,
    /// Time constant of the current regulator tracking the commanded coil
    /// currents, s. Keeps command activity out of the sensing band; zero
    /// means ideal zero-order-hold tracking.
    pub command_filter_tau: f64,
}

impl Default for ControllerSettings {
    fn default() -> Self {
        let c = ControllerConfig::default();
        Self {
            kp: c.kp,
            ki: c.ki,
            kd: c.kd,
            output_limit: c.output_limit,
            derivative_filter_tau: c.derivative_filter_tau,
            dq_angle: 0.0,
            command_filter_tau: 2.0e-3,
        }
    }
}

impl ControllerSettings {
    /// Gains as a [`ControllerConfig`]; the caller supplies the sample time.
    pub fn gains(&self) -> ControllerConfig {
        ControllerConfig {
            kp: self.kp,
            ki: self.ki,
            kd: self.kd,
            output_limit: self.output_limit,
            dt: f64::NAN, // overwritten with the control period by the engine
            derivative_filter_tau: self.derivative_filter_tau,
        }
    }
}

/// Torque-winding bias and optional overrides of the distribution tables.
#[derive(Debug, Clone)]
pub struct WindingSettings {
    pub torque_bias: f64,
    pub torque_angle: f64,
    pub suspension_override: Option<Box<[[f64; 3]; N_TEETH]>>,
    pub torque_override: Option<[f64; N_TEETH]>,
}

impl Default for WindingSettings {
    fn default() -> Self {
        Self {
            // a 4-pole bias must be present for the 2-pole suspension field
            // to produce first-order force
            torque_bias: 0.5,
            torque_angle: 0.0,
            suspension_override: None,
            torque_override: None,
        }
    }
}

impl WindingSettings {
    pub fn build_pattern(&self) -> crate::control::WindingPattern {
        let mut pattern =
            crate::control::WindingPattern::with_bias(self.torque_bias, self.torque_angle);
        if let Some(table) = &self.suspension_override {
            pattern.suspension = **table;
        }
        if let Some(table) = &self.torque_override {
            pattern.torque = *table;
        }
        pattern
    }
}

// ---------------------------------------------------------------------------
// Aggregate
// ---------------------------------------------------------------------------

/// Full configuration of a run.
#[derive(Debug, Clone, Default)]
pub struct SimConfig {
    pub motor: MotorParams,
    pub injection: InjectionConfig,
    pub estimator: EstimatorSettings,
    pub controller: ControllerSettings,
    pub winding: WindingSettings,
    pub scenario: ScenarioConfig,
}

impl SimConfig {
    /// Check every declared invariant; returns the full list of violations.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut problems = Vec::new();
        let m = &self.motor;
        require(&mut problems, m.turns > 0.0, "motor.turns must be > 0");
        require(&mut problems, m.tooth_area > 0.0, "motor.tooth_area must be > 0");
        require(&mut problems, m.mu0 > 0.0, "motor.mu0 must be > 0");
        require(&mut problems, m.nominal_gap > 0.0, "motor.nominal_gap must be > 0");
        require(
            &mut problems,
            m.coil_resistance >= 0.0,
            "motor.coil_resistance must be >= 0",
        );
        require(&mut problems, m.rotor_mass > 0.0, "motor.rotor_mass must be > 0");
        require(
            &mut problems,
            m.max_displacement_fraction > 0.0 && m.max_displacement_fraction < 1.0,
            "motor.max_displacement_fraction must lie in (0, 1)",
        );

        let inj = &self.injection;
        require(&mut problems, inj.amplitude > 0.0, "injection.amplitude must be > 0");
        require(&mut problems, inj.frequency > 0.0, "injection.frequency must be > 0");
        for &coil in &inj.coils {
            require(
                &mut problems,
                coil < N_TEETH,
                "injection.coils entries must name coils 1..=12",
            );
        }
        require(
            &mut problems,
            inj.polarity.len() == inj.coils.len(),
            "injection.polarity must list one value per injected coil",
        );

        require(
            &mut problems,
            self.estimator.window_periods >= 1,
            "estimator.window_periods must be >= 1",
        );

        let c = &self.controller;
        require(&mut problems, c.kp >= 0.0, "controller.kp must be >= 0");
        require(&mut problems, c.ki >= 0.0, "controller.ki must be >= 0");
        require(&mut problems, c.kd >= 0.0, "controller.kd must be >= 0");
        require(
            &mut problems,
            c.output_limit > 0.0,
            "controller.output_limit must be > 0",
        );
        require(
            &mut problems,
            c.derivative_filter_tau >= 0.0,
            "controller.derivative_filter_tau must be >= 0",
        );
        require(
            &mut problems,
            c.command_filter_tau >= 0.0,
            "controller.command_filter_tau must be >= 0",
        );

        let s = &self.scenario;
        require(&mut problems, s.dt > 0.0, "scenario.dt must be > 0");
        require(&mut problems, s.duration > 0.0, "scenario.duration must be > 0");
        require(
            &mut problems,
            s.control_period > 0.0,
            "scenario.control_period must be > 0",
        );
        if s.dt > 0.0 && s.control_period > 0.0 {
            let ratio = s.control_period / s.dt;
            require(
                &mut problems,
                (ratio - ratio.round()).abs() < 1e-9 && ratio.round() >= 1.0,
                "scenario.control_period must be an integer multiple of scenario.dt",
            );
        }
        require(&mut problems, s.sweep_step > 0.0, "scenario.sweep_step must be > 0");
        require(
            &mut problems,
            s.sweep_min < s.sweep_max,
            "scenario.sweep_min must be below scenario.sweep_max",
        );
        if m.nominal_gap > 0.0 && m.max_displacement_fraction > 0.0 {
            let limit = m.clamp_radius();
            require(
                &mut problems,
                s.sweep_min.abs() < limit && s.sweep_max.abs() < limit,
                "scenario sweep range must stay inside the touchdown radius",
            );
            require(
                &mut problems,
                (s.initial_x * s.initial_x + s.initial_y * s.initial_y).sqrt() < limit,
                "scenario initial position must stay inside the touchdown radius",
            );
        }
        require(
            &mut problems,
            s.sensor_noise_sigma >= 0.0,
            "scenario.sensor_noise_sigma must be >= 0",
        );
        require(
            &mut problems,
            s.settle_threshold > 0.0,
            "scenario.settle_threshold must be > 0",
        );

        if inj.frequency > 0.0 && s.dt > 0.0 && self.estimator.window_periods >= 1 {
            if let Err(e) = self.estimator.window_samples(inj, s.dt) {
                problems.push(format!("estimator window: {e}"));
            }
        }

        if problems.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(problems))
        }
    }
}

fn require(problems: &mut Vec<String>, ok: bool, message: &str) {
    if !ok {
        problems.push(message.to_string());
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

/// Load a config file on top of the built-in defaults and validate it.
pub fn load_config(path: &Path) -> Result<SimConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let cfg = parse_config_str(&text, &path.display().to_string())?;
    cfg.validate()?;
    Ok(cfg)
}

/// Parse config text over the defaults. Collects every bad key/value before
/// failing; syntax errors (malformed lines) fail immediately with line info.
pub fn parse_config_str(text: &str, source_name: &str) -> Result<SimConfig, ConfigError> {
    let mut cfg = SimConfig::default();
    let mut section = String::new();
    let mut diagnostics = Vec::new();

    for (index, raw_line) in text.lines().enumerate() {
        let line_no = index + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                return Err(ConfigError::Parse {
                    source_name: source_name.into(),
                    line: line_no,
                    message: format!("malformed section header `{line}`"),
                });
            };
            let name = name.trim();
            if !KNOWN_SECTIONS.contains(&name) {
                diagnostics.push(format!("line {line_no}: unknown section [{name}]"));
                section = String::new();
            } else {
                section = name.to_string();
            }
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Parse {
                source_name: source_name.into(),
                line: line_no,
                message: format!("expected `key = value`, got `{line}`"),
            });
        };
        if section.is_empty() {
            diagnostics.push(format!(
                "line {line_no}: key `{}` outside any known section",
                key.trim()
            ));
            continue;
        }
        if let Err(message) = apply_key(&mut cfg, &section, key.trim(), value.trim()) {
            diagnostics.push(format!("line {line_no}: {message}"));
        }
    }

    if diagnostics.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError::Invalid(diagnostics))
    }
}

/// Apply dotted `section.key=value` overrides on top of a parsed config.
/// All bad overrides are reported together; the caller re-validates.
pub fn apply_overrides(cfg: &mut SimConfig, overrides: &[String]) -> Result<(), ConfigError> {
    let mut diagnostics = Vec::new();
    for item in overrides {
        let Some((dotted, value)) = item.split_once('=') else {
            diagnostics.push(format!("override `{item}` is not of the form section.key=value"));
            continue;
        };
        let Some((section, key)) = dotted.trim().split_once('.') else {
            diagnostics.push(format!("override `{item}` is missing the section prefix"));
            continue;
        };
        if !KNOWN_SECTIONS.contains(&section) {
            diagnostics.push(format!("override `{item}`: unknown section `{section}`"));
            continue;
        }
        if let Err(message) = apply_key(cfg, section, key.trim(), value.trim()) {
            diagnostics.push(format!("override `{item}`: {message}"));
        }
    }
    if diagnostics.is_empty() {
        Ok(())
    } else {
        Err(ConfigError::Invalid(diagnostics))
    }
}

const KNOWN_SECTIONS: [&str; 6] = [
    "motor",
    "injection",
    "estimator",
    "controller",
    "winding",
    "scenario",
];

fn apply_key(cfg: &mut SimConfig, section: &str, key: &str, value: &str) -> Result<(), String> {
    match section {
        "motor" => apply_motor_key(&mut cfg.motor, key, value),
        "injection" => apply_injection_key(&mut cfg.injection, key, value),
        "estimator" => apply_estimator_key(&mut cfg.estimator, key, value),
        "controller" => apply_controller_key(&mut cfg.controller, key, value),
        "winding" => apply_winding_key(&mut cfg.winding, key, value),
        "scenario" => apply_scenario_key(&mut cfg.scenario, key, value),
        other => Err(format!("unknown section `{other}`")),
    }
}

fn parse_f64(section: &str, key: &str, value: &str) -> Result<f64, String> {
    value
        .parse::<f64>()
        .map_err(|_| format!("{section}.{key}: `{value}` is not a number"))
}

fn parse_u64(section: &str, key: &str, value: &str) -> Result<u64, String> {
    value
        .parse::<u64>()
        .map_err(|_| format!("{section}.{key}: `{value}` is not an unsigned integer"))
}

fn parse_list(section: &str, key: &str, value: &str) -> Result<Vec<f64>, String> {
    value
        .split(',')
        .map(|item| {
            item.trim()
                .parse::<f64>()
                .map_err(|_| format!("{section}.{key}: `{}` is not a number", item.trim()))
        })
        .collect()
}

fn apply_motor_key(motor: &mut MotorParams, key: &str, value: &str) -> Result<(), String> {
    match key {
        "turns" => motor.turns = parse_f64("motor", key, value)?,
        "tooth_area" => motor.tooth_area = parse_f64("motor", key, value)?,
        "mu0" => motor.mu0 = parse_f64("motor", key, value)?,
        "nominal_gap" => motor.nominal_gap = parse_f64("motor", key, value)?,
        "coil_resistance" => motor.coil_resistance = parse_f64("motor", key, value)?,
        "rotor_mass" => motor.rotor_mass = parse_f64("motor", key, value)?,
        "rotor_weight_bias" => motor.rotor_weight_bias = parse_f64("motor", key, value)?,
        "max_displacement_fraction" => {
            motor.max_displacement_fraction = parse_f64("motor", key, value)?
        }
        other => return Err(format!("unknown key motor.{other}")),
    }
    Ok(())
}

fn apply_injection_key(inj: &mut InjectionConfig, key: &str, value: &str) -> Result<(), String> {
    match key {
        "amplitude" => inj.amplitude = parse_f64("injection", key, value)?,
        "frequency" => inj.frequency = parse_f64("injection", key, value)?,
        "demod_phase_offset" => inj.demod_phase_offset = parse_f64("injection", key, value)?,
        "coils" => {
            // the file uses the 1-based coil numbering of the winding diagram
            let mut coils = Vec::new();
            for item in value.split(',') {
                let n: usize = item
                    .trim()
                    .parse()
                    .map_err(|_| format!("injection.coils: `{}` is not a coil number", item.trim()))?;
                if !(1..=N_TEETH).contains(&n) {
                    return Err(format!(
                        "injection.coils: coil {n} is outside 1..=12"
                    ));
                }
                coils.push(n - 1);
            }
            // default polarity follows the coil list until overridden
            if inj.polarity.len() != coils.len() {
                inj.polarity = vec![1.0; coils.len()];
            }
            inj.coils = coils;
        }
        "polarity" => inj.polarity = parse_list("injection", key, value)?,
        other => return Err(format!("unknown key injection.{other}")),
    }
    Ok(())
}

fn apply_estimator_key(est: &mut EstimatorSettings, key: &str, value: &str) -> Result<(), String> {
    match key {
        "window_periods" => {
            est.window_periods = parse_u64("estimator", key, value)? as u32;
        }
        "calibration_gain_x" => est.calibration_x.gain = parse_f64("estimator", key, value)?,
        "calibration_offset_x" => est.calibration_x.offset = parse_f64("estimator", key, value)?,
        "calibration_gain_y" => est.calibration_y.gain = parse_f64("estimator", key, value)?,
        "calibration_offset_y" => est.calibration_y.offset = parse_f64("estimator", key, value)?,
        other => return Err(format!("unknown key estimator.{other}")),
    }
    Ok(())
}

fn apply_controller_key(
    ctl: &mut ControllerSettings,
    key: &str,
    value: &str,
) -> Result<(), String> {
    match key {
        "kp" => ctl.kp = parse_f64("controller", key, value)?,
        "ki" => ctl.ki = parse_f64("controller", key, value)?,
        "kd" => ctl.kd = parse_f64("controller", key, value)?,
        "output_limit" => ctl.output_limit = parse_f64("controller", key, value)?,
        "derivative_filter_tau" => {
            ctl.derivative_filter_tau = parse_f64("controller", key, value)?
        }
        "dq_angle" => ctl.dq_angle = parse_f64("controller", key, value)?,
        "command_filter_tau" => ctl.command_filter_tau = parse_f64("controller", key, value)?,
        other => return Err(format!("unknown key controller.{other}")),
    }
    Ok(())
}

fn apply_winding_key(winding: &mut WindingSettings, key: &str, value: &str) -> Result<(), String> {
    match key {
        "torque_bias" => winding.torque_bias = parse_f64("winding", key, value)?,
        "torque_angle" => winding.torque_angle = parse_f64("winding", key, value)?,
        "suspension_pattern" => {
            let values = parse_list("winding", key, value)?;
            if values.len() != 3 * N_TEETH {
                return Err(format!(
                    "winding.suspension_pattern needs {} values (coil-major rows of 3), got {}",
                    3 * N_TEETH,
                    values.len()
                ));
            }
            let mut table = Box::new([[0.0; 3]; N_TEETH]);
            for k in 0..N_TEETH {
                for ph in 0..3 {
                    table[k][ph] = values[3 * k + ph];
                }
            }
            winding.suspension_override = Some(table);
        }
        "torque_pattern" => {
            let values = parse_list("winding", key, value)?;
            if values.len() != N_TEETH {
                return Err(format!(
                    "winding.torque_pattern needs {N_TEETH} values, got {}",
                    values.len()
                ));
            }
            let mut table = [0.0; N_TEETH];
            table.copy_from_slice(&values);
            winding.torque_override = Some(table);
        }
        other => return Err(format!("unknown key winding.{other}")),
    }
    Ok(())
}

fn apply_scenario_key(s: &mut ScenarioConfig, key: &str, value: &str) -> Result<(), String> {
    match key {
        "kind" => {
            s.kind = ScenarioKind::parse(value).ok_or_else(|| {
                format!(
                    "scenario.kind: `{value}` is not one of static_sweep, \
                     open_loop_injection, closed_loop_levitation, disturbance_rejection"
                )
            })?
        }
        "dt" => s.dt = parse_f64("scenario", key, value)?,
        "duration" => s.duration = parse_f64("scenario", key, value)?,
        "control_period" => s.control_period = parse_f64("scenario", key, value)?,
        "sweep_min" => s.sweep_min = parse_f64("scenario", key, value)?,
        "sweep_max" => s.sweep_max = parse_f64("scenario", key, value)?,
        "sweep_step" => s.sweep_step = parse_f64("scenario", key, value)?,
        "initial_x" => s.initial_x = parse_f64("scenario", key, value)?,
        "initial_y" => s.initial_y = parse_f64("scenario", key, value)?,
        "initial_vx" => s.initial_vx = parse_f64("scenario", key, value)?,
        "initial_vy" => s.initial_vy = parse_f64("scenario", key, value)?,
        "disturbance" => {
            s.disturbance.kind = DisturbanceKind::parse(value)
                .ok_or_else(|| format!("scenario.disturbance: `{value}` is not none, step or sine"))?
        }
        "disturbance_amplitude" => s.disturbance.amplitude = parse_f64("scenario", key, value)?,
        "disturbance_start" => s.disturbance.start = parse_f64("scenario", key, value)?,
        "disturbance_frequency" => s.disturbance.frequency = parse_f64("scenario", key, value)?,
        "disturbance_axis" => {
            s.disturbance.axis = Axis::parse(value)
                .ok_or_else(|| format!("scenario.disturbance_axis: `{value}` is not x or y"))?
        }
        "feedback" => {
            s.feedback = FeedbackSource::parse(value)
                .ok_or_else(|| format!("scenario.feedback: `{value}` is not estimated or true"))?
        }
        "sensor_noise_sigma" => s.sensor_noise_sigma = parse_f64("scenario", key, value)?,
        "seed" => s.seed = parse_u64("scenario", key, value)?,
        "settle_threshold" => s.settle_threshold = parse_f64("scenario", key, value)?,
        other => return Err(format!("unknown key scenario.{other}")),
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Generated fragments
// ---------------------------------------------------------------------------

/// Config fragment holding a fitted calibration; values use the shortest
/// representation that round-trips exactly through the parser.
pub fn calibration_fragment(calibration_x: Calibration, calibration_y: Calibration) -> String {
    let mut out = String::from("# generated by `selfsense calibrate`\n[estimator]\n");
    let mut push = |key: &str, value: f64| {
        out.push_str(&format!("{key} = {value}\n"));
    };
    push("calibration_gain_x", calibration_x.gain);
    push("calibration_offset_x", calibration_x.offset);
    push("calibration_gain_y", calibration_y.gain);
    push("calibration_offset_y", calibration_y.offset);
    out
}

impl fmt::Display for SimConfig {
    /// Full configuration in the file format, defaults included.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = &self.motor;
        writeln!(f, "[motor]")?;
        writeln!(f, "turns = {}", m.turns)?;
        writeln!(f, "tooth_area = {}", m.tooth_area)?;
        writeln!(f, "mu0 = {}", m.mu0)?;
        writeln!(f, "nominal_gap = {}", m.nominal_gap)?;
        writeln!(f, "coil_resistance = {}", m.coil_resistance)?;
        writeln!(f, "rotor_mass = {}", m.rotor_mass)?;
        writeln!(f, "rotor_weight_bias = {}", m.rotor_weight_bias)?;
        writeln!(f, "max_displacement_fraction = {}", m.max_displacement_fraction)?;
        writeln!(f)?;

        let inj = &self.injection;
        writeln!(f, "[injection]")?;
        writeln!(f, "amplitude = {}", inj.amplitude)?;
        writeln!(f, "frequency = {}", inj.frequency)?;
        let coils: Vec<String> = inj.coils.iter().map(|k| (k + 1).to_string()).collect();
        writeln!(f, "coils = {}", coils.join(","))?;
        let polarity: Vec<String> = inj.polarity.iter().map(|p| p.to_string()).collect();
        writeln!(f, "polarity = {}", polarity.join(","))?;
        writeln!(f, "demod_phase_offset = {}", inj.demod_phase_offset)?;
        writeln!(f)?;

        let est = &self.estimator;
        writeln!(f, "[estimator]")?;
        writeln!(f, "window_periods = {}", est.window_periods)?;
        writeln!(f, "calibration_gain_x = {}", est.calibration_x.gain)?;
        writeln!(f, "calibration_offset_x = {}", est.calibration_x.offset)?;
        writeln!(f, "calibration_gain_y = {}", est.calibration_y.gain)?;
        writeln!(f, "calibration_offset_y = {}", est.calibration_y.offset)?;
        writeln!(f)?;

        let c = &self.controller;
        writeln!(f, "[controller]")?;
        writeln!(f, "kp = {}", c.kp)?;
        writeln!(f, "ki = {}", c.ki)?;
        writeln!(f, "kd = {}", c.kd)?;
        writeln!(f, "output_limit = {}", c.output_limit)?;
        writeln!(f, "derivative_filter_tau = {}", c.derivative_filter_tau)?;
        writeln!(f, "dq_angle = {}", c.dq_angle)?;
        writeln!(f, "command_filter_tau = {}", c.command_filter_tau)?;
        writeln!(f)?;

        let w = &self.winding;
        writeln!(f, "[winding]")?;
        writeln!(f, "torque_bias = {}", w.torque_bias)?;
        writeln!(f, "torque_angle = {}", w.torque_angle)?;
        writeln!(f)?;

        let s = &self.scenario;
        writeln!(f, "[scenario]")?;
        writeln!(f, "kind = {}", s.kind.as_str())?;
        writeln!(f, "dt = {}", s.dt)?;
        writeln!(f, "duration = {}", s.duration)?;
        writeln!(f, "control_period = {}", s.control_period)?;
        writeln!(f, "sweep_min = {}", s.sweep_min)?;
        writeln!(f, "sweep_max = {}", s.sweep_max)?;
        writeln!(f, "sweep_step = {}", s.sweep_step)?;
        writeln!(f, "initial_x = {}", s.initial_x)?;
        writeln!(f, "initial_y = {}", s.initial_y)?;
        writeln!(f, "initial_vx = {}", s.initial_vx)?;
        writeln!(f, "initial_vy = {}", s.initial_vy)?;
        writeln!(f, "disturbance = {}", s.disturbance.kind.as_str())?;
        writeln!(f, "disturbance_amplitude = {}", s.disturbance.amplitude)?;
        writeln!(f, "disturbance_start = {}", s.disturbance.start)?;
        writeln!(f, "disturbance_frequency = {}", s.disturbance.frequency)?;
        writeln!(f, "disturbance_axis = {}", s.disturbance.axis.as_str())?;
        writeln!(f, "feedback = {}", s.feedback.as_str())?;
        writeln!(f, "sensor_noise_sigma = {}", s.sensor_noise_sigma)?;
        writeln!(f, "seed = {}", s.seed)?;
        writeln!(f, "settle_threshold = {}", s.settle_threshold)
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_cleanly() {
        SimConfig::default().validate().unwrap();
    }

    #[test]
    fn display_round_trips_through_the_parser() {
        let cfg = SimConfig::default();
        let text = cfg.to_string();
        let parsed = parse_config_str(&text, "inline").unwrap();
        parsed.validate().unwrap();
        assert_eq!(parsed.motor.turns, cfg.motor.turns);
        assert_eq!(parsed.motor.mu0, cfg.motor.mu0);
        assert_eq!(parsed.injection.coils, cfg.injection.coils);
        assert_eq!(parsed.estimator.calibration_x, cfg.estimator.calibration_x);
        assert_eq!(parsed.controller.kp, cfg.controller.kp);
        assert_eq!(parsed.scenario.seed, cfg.scenario.seed);
        assert_eq!(parsed.scenario.settle_threshold, cfg.scenario.settle_threshold);
    }

    #[test]
    fn zero_gap_is_rejected_by_name() {
        let mut cfg = SimConfig::default();
        cfg.motor.nominal_gap = 0.0;
        let err = cfg.validate().unwrap_err();
        let text = err.to_string();
        assert!(text.contains("motor.nominal_gap"), "{text}");
    }

    #[test]
    fn all_violations_are_reported_together() {
        let mut cfg = SimConfig::default();
        cfg.motor.nominal_gap = 0.0;
        cfg.motor.rotor_mass = -1.0;
        cfg.scenario.duration = 0.0;
        match cfg.validate().unwrap_err() {
            ConfigError::Invalid(list) => assert!(list.len() >= 3, "{list:?}"),
            other => panic!("expected Invalid, got {other}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse_config_str("[motor]\nturnz = 10\n", "inline").unwrap_err();
        assert!(err.to_string().contains("turnz"));
        let err = parse_config_str("[engine]\nx = 1\n", "inline").unwrap_err();
        assert!(err.to_string().contains("engine"));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_config_str("[motor]\nthis line has no equals\n", "inline").unwrap_err();
        match err {
            ConfigError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected Parse, got {other}"),
        }
    }

    #[test]
    fn overrides_reach_nested_fields() {
        let mut cfg = SimConfig::default();
        apply_overrides(
            &mut cfg,
            &[
                "motor.turns=200".to_string(),
                "scenario.seed=7".to_string(),
                "injection.coils=1,7".to_string(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.motor.turns, 200.0);
        assert_eq!(cfg.scenario.seed, 7);
        assert_eq!(cfg.injection.coils, vec![0, 6]);
        cfg.validate().unwrap();
    }

    #[test]
    fn doubling_turns_quadruples_inductance_through_the_pipeline() {
        let mut cfg = SimConfig::default();
        let l_default =
            crate::motor::coil_inductance(cfg.motor.nominal_gap, &cfg.motor).unwrap();
        apply_overrides(&mut cfg, &["motor.turns=200".to_string()]).unwrap();
        let l_doubled =
            crate::motor::coil_inductance(cfg.motor.nominal_gap, &cfg.motor).unwrap();
        assert!((l_doubled / l_default - 4.0).abs() < 1e-12);
    }

    #[test]
    fn bad_overrides_report_every_problem() {
        let mut cfg = SimConfig::default();
        let err = apply_overrides(
            &mut cfg,
            &[
                "motor.turns".to_string(),
                "sky.color=blue".to_string(),
                "motor.turnz=3".to_string(),
            ],
        )
        .unwrap_err();
        match err {
            ConfigError::Invalid(list) => assert_eq!(list.len(), 3, "{list:?}"),
            other => panic!("expected Invalid, got {other}"),
        }
    }

    #[test]
    fn calibration_fragment_round_trips_exact_values() {
        let cal_x = Calibration {
            gain: 3.956_218_470_981e-4,
            offset: -1.234e-9,
        };
        let cal_y = Calibration {
            gain: 4.0001e-4,
            offset: 7.5e-10,
        };
        let fragment = calibration_fragment(cal_x, cal_y);
        let parsed = parse_config_str(&fragment, "fragment").unwrap();
        assert_eq!(parsed.estimator.calibration_x, cal_x);
        assert_eq!(parsed.estimator.calibration_y, cal_y);
    }

    #[test]
    fn window_samples_requires_commensurate_timing() {
        let cfg = SimConfig::default();
        assert_eq!(
            cfg.estimator.window_samples(&cfg.injection, 5e-6).unwrap(),
            100
        );
        assert!(cfg.estimator.window_samples(&cfg.injection, 3e-6).is_err());
    }
}
