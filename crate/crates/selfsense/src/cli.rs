//! Command-line front end: scenario dispatch, output files and the
//! self-check suite.
//!
//! Exit codes: 0 success, 1 configuration or scenario error, 2 usage error
//! (from argument parsing), 3 touchdown, 4 I/O error.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::config::{
    apply_overrides, calibration_fragment, load_config, ConfigError, SimConfig,
};
use crate::sim::{
    run_closed_loop, run_static_sweep, Axis, FeedbackSource, ScenarioKind, SimError,
};
use crate::trace::{sweep_to_csv, trace_to_csv};

/// Seed environment variable used when `--seed` is absent.
pub const SEED_ENV_VAR: &str = "SELFSENSE_SEED";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Sim(String),
    #[error("touchdown at t = {t:.6} s; partial trace written to {out}")]
    Touchdown { t: f64, out: String },
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
    #[error("self-check failed: {0}")]
    Selftest(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Sim(_) | CliError::Selftest(_) => 1,
            CliError::Touchdown { .. } => 3,
            CliError::Io { .. } => 4,
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Sim(e.to_string())
    }
}

// ---------------------------------------------------------------------------
// Argument surface
// ---------------------------------------------------------------------------

#[derive(Debug, Parser)]
#[command(
    name = "selfsense",
    about = "Simulator for a self-sensing bearingless hysteresis motor",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Static displacement sweep of the demodulated outputs
    Sweep(RunArgs),
    /// Closed-loop levitation from the configured initial state
    Levitate(RunArgs),
    /// Closed-loop run with the configured disturbance profile
    Disturb(RunArgs),
    /// Fit the volts-to-meters calibration from sweeps on both axes
    Calibrate(RunArgs),
    /// Run the built-in invariant checks
    Selftest,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Configuration file; built-in defaults when omitted
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory for trace.csv, summary.txt and friends
    #[arg(long)]
    pub out: PathBuf,
    /// Reuse an existing output directory
    #[arg(long)]
    pub force: bool,
    /// RNG seed; falls back to SELFSENSE_SEED, then the config value
    #[arg(long)]
    pub seed: Option<u64>,
    /// Feedback source: estimated or true
    #[arg(long)]
    pub feedback: Option<String>,
    /// Dotted overrides, e.g. --set motor.turns=200 (repeatable)
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    pub set: Vec<String>,
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

/// Run a parsed invocation to completion. Errors carry their exit code.
pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Sweep(args) => run_sweep(args),
        Command::Levitate(args) => run_time_domain(args, ScenarioKind::ClosedLoopLevitation),
        Command::Disturb(args) => run_time_domain(args, ScenarioKind::DisturbanceRejection),
        Command::Calibrate(args) => run_calibrate(args),
        Command::Selftest => run_selftest(),
    }
}

/// Build the effective configuration: file (or defaults), subcommand kind,
/// flags, dotted overrides, then the final validation pass.
fn effective_config(args: &RunArgs, kind: ScenarioKind) -> Result<SimConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => load_config(path)?,
        None => SimConfig::default(),
    };
    cfg.scenario.kind = kind;

    if let Some(feedback) = &args.feedback {
        let parsed = FeedbackSource::parse(feedback).ok_or_else(|| {
            CliError::Config(ConfigError::Invalid(vec![format!(
                "--feedback must be estimated or true, got `{feedback}`"
            )]))
        })?;
        cfg.scenario.feedback = parsed;
    }

    match args.seed {
        Some(seed) => cfg.scenario.seed = seed,
        None => {
            if let Ok(value) = std::env::var(SEED_ENV_VAR) {
                let seed: u64 = value.parse().map_err(|_| {
                    CliError::Config(ConfigError::Invalid(vec![format!(
                        "{SEED_ENV_VAR}=`{value}` is not an unsigned integer"
                    )]))
                })?;
                cfg.scenario.seed = seed;
            }
        }
    }

    apply_overrides(&mut cfg, &args.set)?;
    cfg.validate()?;
    Ok(cfg)
}

fn prepare_out_dir(path: &Path, force: bool) -> Result<(), CliError> {
    if path.exists() && !force {
        return Err(CliError::Io {
            context: format!(
                "output directory {} already exists (pass --force to reuse)",
                path.display()
            ),
            source: std::io::Error::from(std::io::ErrorKind::AlreadyExists),
        });
    }
    std::fs::create_dir_all(path).map_err(|source| CliError::Io {
        context: format!("cannot create output directory {}", path.display()),
        source,
    })
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|source| CliError::Io {
        context: format!("cannot write {}", path.display()),
        source,
    })
}

fn run_sweep(args: RunArgs) -> Result<(), CliError> {
    let cfg = effective_config(&args, ScenarioKind::StaticSweep)?;
    prepare_out_dir(&args.out, args.force)?;

    let outcome = run_static_sweep(&cfg, Axis::X)?;
    write_file(&args.out, "sweep.csv", &sweep_to_csv(&outcome.points))?;
    write_file(&args.out, "trace.csv", &trace_to_csv(&outcome.records))?;

    let span = outcome.points.last().map(|p| p.x_raw).unwrap_or(0.0)
        - outcome.points.first().map(|p| p.x_raw).unwrap_or(0.0);
    let monotonic = outcome
        .points
        .windows(2)
        .all(|pair| pair[1].x_raw > pair[0].x_raw);
    let max_cross = outcome
        .points
        .iter()
        .map(|p| p.y_raw.abs())
        .fold(0.0f64, f64::max);
    let mut summary = String::new();
    summary.push_str("scenario = static_sweep\n");
    summary.push_str(&format!("points = {}\n", outcome.points.len()));
    summary.push_str(&format!("x_raw_span_v = {span}\n"));
    summary.push_str(&format!("monotonic = {monotonic}\n"));
    summary.push_str(&format!("max_cross_axis_v = {max_cross}\n"));
    write_file(&args.out, "summary.txt", &summary)?;
    println!(
        "sweep: {} points, span {span:.6e} V, monotonic = {monotonic}",
        outcome.points.len()
    );
    Ok(())
}

fn run_time_domain(args: RunArgs, default_kind: ScenarioKind) -> Result<(), CliError> {
    let cfg = effective_config(&args, default_kind)?;
    if cfg.scenario.kind == ScenarioKind::StaticSweep {
        return Err(CliError::Sim(
            "static_sweep runs through the `sweep` subcommand".into(),
        ));
    }
    prepare_out_dir(&args.out, args.force)?;

    let result = run_closed_loop(&cfg)?;
    write_file(&args.out, "trace.csv", &trace_to_csv(&result.records))?;
    write_file(&args.out, "summary.txt", &result.summary.to_text())?;
    println!(
        "{}: settling {} s, estimation rms {:.3e} m, touchdown = {}",
        cfg.scenario.kind.as_str(),
        result.summary.settling_time,
        result.summary.estimation_error_rms,
        result.summary.touchdown
    );

    if result.summary.touchdown {
        return Err(CliError::Touchdown {
            t: result.summary.duration,
            out: args.out.display().to_string(),
        });
    }
    Ok(())
}

fn run_calibrate(args: RunArgs) -> Result<(), CliError> {
    let cfg = effective_config(&args, ScenarioKind::StaticSweep)?;
    prepare_out_dir(&args.out, args.force)?;

    let sweep_x = run_static_sweep(&cfg, Axis::X)?;
    let sweep_y = run_static_sweep(&cfg, Axis::Y)?;
    write_file(&args.out, "sweep_x.csv", &sweep_to_csv(&sweep_x.points))?;
    write_file(&args.out, "sweep_y.csv", &sweep_to_csv(&sweep_y.points))?;

    let table_x: Vec<(f64, f64)> = sweep_x.points.iter().map(|p| (p.position, p.x_raw)).collect();
    let table_y: Vec<(f64, f64)> = sweep_y.points.iter().map(|p| (p.position, p.y_raw)).collect();
    let fit_x = crate::signal::calibrate(&table_x).map_err(|e| CliError::Sim(e.to_string()))?;
    let fit_y = crate::signal::calibrate(&table_y).map_err(|e| CliError::Sim(e.to_string()))?;

    let fragment = calibration_fragment(fit_x.calibration, fit_y.calibration);
    write_file(&args.out, "calibration.ini", &fragment)?;

    let mut summary = String::new();
    summary.push_str("scenario = calibration\n");
    summary.push_str(&format!("gain_x_m_per_v = {}\n", fit_x.calibration.gain));
    summary.push_str(&format!("offset_x_v = {}\n", fit_x.calibration.offset));
    summary.push_str(&format!("residual_rms_x_v = {}\n", fit_x.residual_rms));
    summary.push_str(&format!("gain_y_m_per_v = {}\n", fit_y.calibration.gain));
    summary.push_str(&format!("offset_y_v = {}\n", fit_y.calibration.offset));
    summary.push_str(&format!("residual_rms_y_v = {}\n", fit_y.residual_rms));
    write_file(&args.out, "summary.txt", &summary)?;
    println!(
        "calibrate: gain_x = {:.6e} m/V, gain_y = {:.6e} m/V",
        fit_x.calibration.gain, fit_y.calibration.gain
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// Self test
// ---------------------------------------------------------------------------

/// Fast invariant checks over the shipped defaults; prints one line per
/// check and fails if any check fails.
pub fn run_selftest() -> Result<(), CliError> {
    let mut failures = Vec::new();
    let mut check = |name: &str, ok: bool| {
        println!("{} {name}", if ok { "ok  " } else { "FAIL" });
        if !ok {
            failures.push(name.to_string());
        }
    };

    let cfg = SimConfig::default();
    let params = &cfg.motor;

    // inductance reciprocity: L(g) g constant
    {
        let l1 = crate::motor::coil_inductance(params.nominal_gap, params).unwrap();
        let l2 = crate::motor::coil_inductance(2.0 * params.nominal_gap, params).unwrap();
        check(
            "inductance_reciprocal_gap_law",
            ((l1 * params.nominal_gap) - (l2 * 2.0 * params.nominal_gap)).abs()
                < 1e-14 * l1 * params.nominal_gap,
        );
    }

    // series RL form recovery at fixed gap
    {
        let v = crate::motor::coil_voltage(0.3, 47.0, params.nominal_gap, 0.0, params, 0.1)
            .unwrap();
        let l = crate::motor::coil_inductance(params.nominal_gap, params).unwrap();
        check(
            "voltage_series_rl_recovery",
            v.to_bits() == (params.coil_resistance * 0.3 + l * 47.0 + 0.1).to_bits(),
        );
    }

    // force against coenergy finite differences on a few states
    {
        let coenergy = |x: f64, y: f64, currents: &[f64; crate::motor::N_TEETH]| -> f64 {
            (0..crate::motor::N_TEETH)
                .map(|k| {
                    let gap = crate::motor::gap_at_tooth_index(x, y, k, params);
                    0.5 * crate::motor::coil_inductance(gap.length, params).unwrap()
                        * currents[k]
                        * currents[k]
                })
                .sum()
        };
        let h = 1e-5 * params.nominal_gap;
        let mut ok = true;
        for state in 0..20 {
            let x = 0.25 * params.nominal_gap * ((state as f64 * 0.713).sin());
            let y = 0.25 * params.nominal_gap * ((state as f64 * 1.311).cos());
            let mut currents = [0.0; crate::motor::N_TEETH];
            for (k, c) in currents.iter_mut().enumerate() {
                *c = ((state * 7 + k) as f64 * 0.37).sin() * 1.5;
            }
            let f = crate::motor::radial_force(
                &crate::motor::RotorState::at_rest(x, y),
                &currents,
                params,
            )
            .unwrap();
            let fd = (coenergy(x + h, y, &currents) - coenergy(x - h, y, &currents)) / (2.0 * h);
            ok &= (f.fx - fd).abs() <= 1e-6 * f.fx.abs().max(fd.abs()).max(1e-3);
        }
        check("force_matches_coenergy_gradient", ok);
    }

    // demodulator against the single-bin projection
    {
        let dt = cfg.scenario.dt;
        let window = cfg.estimator.window_samples(&cfg.injection, dt).unwrap();
        let mut demod = crate::signal::Demodulator::new(&cfg.injection, dt, window).unwrap();
        let mut re = 0.0;
        let mut im = 0.0;
        let mut out = 0.0;
        for n in 0..window {
            let t = n as f64 * dt;
            let v = (std::f64::consts::TAU * 2000.0 * t).cos() * 0.7
                + (std::f64::consts::TAU * 5200.0 * t + 0.3).sin();
            out = demod.push(v, t);
            let arg = std::f64::consts::TAU * cfg.injection.frequency * t;
            re += v * arg.cos();
            im += v * arg.sin();
        }
        let phase = cfg.injection.demod_phase_offset;
        let oracle = (im * phase.cos() + re * phase.sin()) / window as f64;
        check(
            "demodulator_matches_fourier_projection",
            (out - oracle).abs() <= 1e-9 * oracle.abs().max(1e-9),
        );
    }

    // transform chain round trip and zero sum
    {
        let (d, q) = crate::control::xy_to_dq(0.37, -1.21, 0.77);
        let (x, y) = crate::control::dq_to_xy(d, q, 0.77);
        let round_trip = (x - 0.37).abs() < 1e-12 && (y + 1.21).abs() < 1e-12;
        let (iu, iv, iw) = crate::control::dq_to_three_phase(d, q);
        check("dq_round_trip_and_zero_sum", round_trip && iu + iv + iw == 0.0);
    }

    // suspension pattern spatial purity
    {
        let pattern = cfg.winding.build_pattern();
        let three = crate::control::dq_to_three_phase(0.8, -0.4);
        let injection_off = crate::signal::InjectionConfig {
            coils: vec![],
            polarity: vec![],
            ..cfg.injection.clone()
        };
        let currents = crate::control::superpose_coil_currents(
            three,
            0.0,
            0.0,
            &pattern,
            &injection_off,
        );
        let harmonic = |n: usize| -> f64 {
            let (mut re, mut im) = (0.0, 0.0);
            for (k, &v) in currents.iter().enumerate() {
                let arg = std::f64::consts::TAU * (n * k) as f64 / 12.0;
                re += v * arg.cos();
                im -= v * arg.sin();
            }
            re.hypot(im)
        };
        let fundamental = harmonic(1);
        check(
            "suspension_pattern_purity",
            harmonic(2) <= 1e-12 * fundamental && harmonic(5) <= 1e-12 * fundamental,
        );
    }

    // stiffness sign under the default bias
    {
        let pattern = cfg.winding.build_pattern();
        let injection_off = crate::signal::InjectionConfig {
            coils: vec![],
            polarity: vec![],
            ..cfg.injection.clone()
        };
        let bias = crate::control::superpose_coil_currents(
            (0.0, 0.0, 0.0),
            pattern.torque_bias,
            0.0,
            &pattern,
            &injection_off,
        );
        check(
            "bias_field_negative_stiffness",
            crate::sim::linearized_stiffness(params, &bias) > 0.0,
        );
    }

    if failures.is_empty() {
        println!("selftest: all checks passed");
        Ok(())
    } else {
        Err(CliError::Selftest(failures.join(", ")))
    }
}
