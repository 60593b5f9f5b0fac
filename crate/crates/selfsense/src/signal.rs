//! High-frequency injection and synchronous demodulation.
//!
//! A small carrier current on four opposing coils makes the gap-dependent
//! inductance observable: the differential voltage of an opposing coil pair
//! is multiplied by the carrier and averaged over a moving window that spans
//! an integer number of carrier periods, leaving the displacement-dependent
//! envelope. An affine calibration maps the demodulated volts to meters.

use std::f64::consts::TAU;

use thiserror::Error;

use crate::motor::N_TEETH;

#[derive(Debug, Error, PartialEq)]
pub enum SignalError {
    #[error(
        "window of {samples} samples at dt = {dt} s spans {spanned:.6} carrier periods; \
         it must span an integer count"
    )]
    IncommensurateWindow {
        samples: usize,
        dt: f64,
        spanned: f64,
    },
    #[error("calibration sweep is degenerate: {0}")]
    DegenerateCalibration(String),
}

// ---------------------------------------------------------------------------
// Injection
// ---------------------------------------------------------------------------

/// Carrier current injected on a set of coils for gap sensing.
#[derive(Debug, Clone)]
pub struct InjectionConfig {
    /// Carrier amplitude, A.
    pub amplitude: f64,
    /// Carrier frequency, Hz.
    pub frequency: f64,
    /// 0-based coil indices carrying the carrier.
    pub coils: Vec<usize>,
    /// Per-coil carrier polarity, aligned with `coils`.
    pub polarity: Vec<f64>,
    /// Phase of the demodulating carrier relative to the injected sine, rad.
    /// The inductive voltage of a sine current is a cosine, so the default
    /// demodulates with the quadrature carrier.
    pub demod_phase_offset: f64,
}

impl Default for InjectionConfig {
    fn default() -> Self {
        Self {
            amplitude: 0.1,
            frequency: 2000.0,
            coils: vec![0, 3, 6, 9],
            polarity: vec![1.0, 1.0, 1.0, 1.0],
            demod_phase_offset: std::f64::consts::FRAC_PI_2,
        }
    }
}

impl InjectionConfig {
    /// Injected current `i_s(t) = I_s sin(2 pi f_s t)`, A.
    pub fn current(&self, t: f64) -> f64 {
        self.amplitude * (TAU * self.frequency * t).sin()
    }

    /// Demodulating carrier `sin(2 pi f_s t + offset)`.
    pub fn carrier(&self, t: f64) -> f64 {
        (TAU * self.frequency * t + self.demod_phase_offset).sin()
    }

    /// One carrier period, s.
    pub fn period(&self) -> f64 {
        1.0 / self.frequency
    }

    /// Per-coil injection sample at time `t` (zero on coils without carrier).
    pub fn coil_currents(&self, t: f64) -> [f64; N_TEETH] {
        let mut out = [0.0; N_TEETH];
        let i_s = self.current(t);
        for (slot, &k) in self.coils.iter().enumerate() {
            out[k] = i_s * self.polarity.get(slot).copied().unwrap_or(1.0);
        }
        out
    }
}

/// Injected current sample; free-function form of [`InjectionConfig::current`].
pub fn injection_current(t: f64, cfg: &InjectionConfig) -> f64 {
    cfg.current(t)
}

// ---------------------------------------------------------------------------
// Demodulator
// ---------------------------------------------------------------------------

/// One synchronous-demodulation channel: multiply by the carrier, average
/// over a ring buffer spanning whole carrier periods.
#[derive(Debug, Clone)]
pub struct Demodulator {
    frequency: f64,
    phase_offset: f64,
    buffer: Vec<f64>,
    head: usize,
    pushed: usize,
    output: f64,
}

impl Demodulator {
    /// `window_samples * dt` must be an integer number of carrier periods,
    /// otherwise the running average would not reject the `2 f_s` image.
    pub fn new(cfg: &InjectionConfig, dt: f64, window_samples: usize) -> Result<Self, SignalError> {
        let spanned = window_samples as f64 * dt * cfg.frequency;
        if window_samples == 0 || (spanned - spanned.round()).abs() > 1e-9 || spanned < 0.5 {
            return Err(SignalError::IncommensurateWindow {
                samples: window_samples,
                dt,
                spanned,
            });
        }
        Ok(Self {
            frequency: cfg.frequency,
            phase_offset: cfg.demod_phase_offset,
            buffer: vec![0.0; window_samples],
            head: 0,
            pushed: 0,
            output: 0.0,
        })
    }

    /// Mix one differential-voltage sample with the carrier and update the
    /// moving average. Returns the new raw output, V.
    pub fn push(&mut self, sample: f64, t: f64) -> f64 {
        let carrier = (TAU * self.frequency * t + self.phase_offset).sin();
        self.buffer[self.head] = sample * carrier;
        self.head = (self.head + 1) % self.buffer.len();
        self.pushed += 1;
        // full re-sum: O(window) per sample, immune to running-sum drift
        self.output = self.buffer.iter().sum::<f64>() / self.buffer.len() as f64;
        self.output
    }

    /// Latest moving-average output, V.
    pub fn output(&self) -> f64 {
        self.output
    }

    /// True once every buffer slot holds a real sample.
    pub fn is_filled(&self) -> bool {
        self.pushed >= self.buffer.len()
    }

    pub fn window_samples(&self) -> usize {
        self.buffer.len()
    }

    pub fn reset(&mut self) {
        self.buffer.fill(0.0);
        self.head = 0;
        self.pushed = 0;
        self.output = 0.0;
    }
}

// ---------------------------------------------------------------------------
// Calibration
// ---------------------------------------------------------------------------

/// Affine map from demodulated volts to meters: `x = gain (raw - offset)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    /// m/V
    pub gain: f64,
    /// V
    pub offset: f64,
}

impl Default for Calibration {
    fn default() -> Self {
        Self {
            gain: 1.0,
            offset: 0.0,
        }
    }
}

impl Calibration {
    pub fn apply(&self, raw: f64) -> f64 {
        self.gain * (raw - self.offset)
    }
}

/// Result of fitting a calibration sweep.
#[derive(Debug, Clone, Copy)]
pub struct CalibrationFit {
    pub calibration: Calibration,
    /// RMS of the fit residual in raw volts.
    pub residual_rms: f64,
}

/// Least-squares affine fit of `raw = slope * displacement + intercept`
/// over `(displacement m, raw V)` pairs; `gain = 1/slope`, `offset =
/// intercept`.
pub fn calibrate(sweep: &[(f64, f64)]) -> Result<CalibrationFit, SignalError> {
    if sweep.len() < 2 {
        return Err(SignalError::DegenerateCalibration(format!(
            "need at least 2 points, got {}",
            sweep.len()
        )));
    }
    let n = sweep.len() as f64;
    let mean_d = sweep.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_r = sweep.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sdd = 0.0;
    let mut sdr = 0.0;
    for &(d, r) in sweep {
        sdd += (d - mean_d) * (d - mean_d);
        sdr += (d - mean_d) * (r - mean_r);
    }
    if sdd == 0.0 {
        return Err(SignalError::DegenerateCalibration(
            "all displacements are equal".into(),
        ));
    }
    let slope = sdr / sdd;
    if slope == 0.0 {
        return Err(SignalError::DegenerateCalibration(
            "raw output does not vary with displacement".into(),
        ));
    }
    let intercept = mean_r - slope * mean_d;

    let mut ss = 0.0;
    for &(d, r) in sweep {
        let residual = r - (slope * d + intercept);
        ss += residual * residual;
    }
    Ok(CalibrationFit {
        calibration: Calibration {
            gain: 1.0 / slope,
            offset: intercept,
        },
        residual_rms: (ss / n).sqrt(),
    })
}

// ---------------------------------------------------------------------------
// Position estimator
// ---------------------------------------------------------------------------

/// Two demodulation channels fed by the opposing-coil voltage differences:
/// coils 1/7 (indices 0/6) for x, coils 4/10 (indices 3/9) for y.
#[derive(Debug, Clone)]
pub struct PositionEstimator {
    channel_x: Demodulator,
    channel_y: Demodulator,
    pub calibration_x: Calibration,
    pub calibration_y: Calibration,
    x_hat: f64,
    y_hat: f64,
}

/// Coil pairs whose voltage difference feeds each channel (0-based).
pub const X_PAIR: (usize, usize) = (0, 6);
pub const Y_PAIR: (usize, usize) = (3, 9);

impl PositionEstimator {
    pub fn new(
        cfg: &InjectionConfig,
        dt: f64,
        window_samples: usize,
        calibration_x: Calibration,
        calibration_y: Calibration,
    ) -> Result<Self, SignalError> {
        Ok(Self {
            channel_x: Demodulator::new(cfg, dt, window_samples)?,
            channel_y: Demodulator::new(cfg, dt, window_samples)?,
            calibration_x,
            calibration_y,
            x_hat: 0.0,
            y_hat: 0.0,
        })
    }

    /// Ingest one set of coil terminal voltages sampled at time `t`.
    pub fn update(&mut self, voltages: &[f64; N_TEETH], t: f64) {
        let diff_x = voltages[X_PAIR.0] - voltages[X_PAIR.1];
        let diff_y = voltages[Y_PAIR.0] - voltages[Y_PAIR.1];
        let raw_x = self.channel_x.push(diff_x, t);
        let raw_y = self.channel_y.push(diff_y, t);
        self.x_hat = self.calibration_x.apply(raw_x);
        self.y_hat = self.calibration_y.apply(raw_y);
    }

    /// Demodulated x output before calibration, V.
    pub fn x_raw(&self) -> f64 {
        self.channel_x.output()
    }

    /// Demodulated y output before calibration, V.
    pub fn y_raw(&self) -> f64 {
        self.channel_y.output()
    }

    /// Calibrated x estimate, m.
    pub fn x_hat(&self) -> f64 {
        self.x_hat
    }

    /// Calibrated y estimate, m.
    pub fn y_hat(&self) -> f64 {
        self.y_hat
    }

    pub fn is_filled(&self) -> bool {
        self.channel_x.is_filled()
    }

    pub fn window_samples(&self) -> usize {
        self.channel_x.window_samples()
    }

    pub fn reset(&mut self) {
        self.channel_x.reset();
        self.channel_y.reset();
        self.x_hat = 0.0;
        self.y_hat = 0.0;
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
