//! Suspension control path: per-axis PID controllers, the xy -> dq ->
//! three-phase transforms, and the per-coil superposition of suspension,
//! torque and injection currents.

use crate::motor::{tooth_angle, N_TEETH, TOOTH_COS, TOOTH_SIN};
use crate::signal::InjectionConfig;

// ---------------------------------------------------------------------------
// PID
// ---------------------------------------------------------------------------

/// Gains and timing of one suspension-axis controller.
#[derive(Debug, Clone)]
pub struct ControllerConfig {
    /// Proportional gain, effort per m.
    pub kp: f64,
    /// Integral gain, effort per m s.
    pub ki: f64,
    /// Derivative gain, effort per m/s.
    pub kd: f64,
    /// Output clamp, A.
    pub output_limit: f64,
    /// Controller sample time, s.
    pub dt: f64,
    /// First-order filter time constant on the derivative, s.
    pub derivative_filter_tau: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            kp: 1.0e3,
            ki: 1.0e4,
            kd: 8.0,
            output_limit: 5.0,
            dt: 1.0e-4,
            derivative_filter_tau: 2.0e-3,
        }
    }
}

/// Discrete PID with trapezoidal integral, filtered derivative and clamping
/// anti-windup: the integrator is held whenever the output is saturated and
/// the error would drive it further into saturation, and is additionally
/// clamped so that `|ki * integral| <= output_limit`.
#[derive(Debug, Clone, Default)]
pub struct PidController {
    integral: f64,
    prev_error: f64,
    derivative_filtered: f64,
}

impl PidController {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn reset(&mut self) {
        *self = Self::default();
    }

    /// Bumpless engagement: seed the error history with the current error so
    /// the first active step produces no derivative kick.
    pub fn prime(&mut self, error: f64) {
        self.prev_error = error;
        self.derivative_filtered = 0.0;
    }

    /// Integrator state, effort-seconds per meter times error.
    pub fn integral(&self) -> f64 {
        self.integral
    }

    pub fn step(&mut self, error: f64, cfg: &ControllerConfig) -> f64 {
        let dt = cfg.dt;

        let d_raw = (error - self.prev_error) / dt;
        let alpha = dt / (cfg.derivative_filter_tau + dt);
        self.derivative_filtered += alpha * (d_raw - self.derivative_filtered);

        let mut integral = self.integral + 0.5 * (error + self.prev_error) * dt;
        if cfg.ki > 0.0 {
            let bound = cfg.output_limit / cfg.ki;
            integral = integral.clamp(-bound, bound);
        }

        let unsaturated =
            cfg.kp * error + cfg.ki * integral + cfg.kd * self.derivative_filtered;
        let output = unsaturated.clamp(-cfg.output_limit, cfg.output_limit);

        let saturated = output != unsaturated;
        let drives_further = (unsaturated - output) * error > 0.0;
        if !(saturated && drives_further) {
            self.integral = integral;
        }
        self.prev_error = error;
        output
    }
}

/// Free-function form of [`PidController::step`].
pub fn pid_step(error: f64, state: &mut PidController, cfg: &ControllerConfig) -> f64 {
    state.step(error, cfg)
}

// ---------------------------------------------------------------------------
// Reference-frame transforms
// ---------------------------------------------------------------------------

/// Rotate `(u_x, u_y)` by `-angle` into the dq frame.
pub fn xy_to_dq(u_x: f64, u_y: f64, angle: f64) -> (f64, f64) {
    let (s, c) = angle.sin_cos();
    (u_x * c + u_y * s, -u_x * s + u_y * c)
}

/// Inverse of [`xy_to_dq`].
pub fn dq_to_xy(u_d: f64, u_q: f64, angle: f64) -> (f64, f64) {
    let (s, c) = angle.sin_cos();
    (u_d * c - u_q * s, u_d * s + u_q * c)
}

/// Amplitude-invariant two-to-three-phase map with phase axes at 0, 120 and
/// 240 degrees. The third phase is formed as `-(i_u + i_v)` so the set sums
/// to zero bit-exactly.
pub fn dq_to_three_phase(u_d: f64, u_q: f64) -> (f64, f64, f64) {
    const SQRT3_2: f64 = 0.866_025_403_784_438_6;
    let i_u = u_d;
    let i_v = -0.5 * u_d + SQRT3_2 * u_q;
    let i_w = -(i_u + i_v);
    (i_u, i_v, i_w)
}

// ---------------------------------------------------------------------------
// Winding pattern and superposition
// ---------------------------------------------------------------------------

/// Per-tooth distribution tables mapping the three-phase suspension set and
/// the torque amplitude onto the twelve coils.
#[derive(Debug, Clone)]
pub struct WindingPattern {
    /// `suspension[k][ph]`: weight of phase `ph` on coil `k`. Rows are the
    /// 2-pole distribution `cos(theta_k - phi_ph)`.
    pub suspension: [[f64; 3]; N_TEETH],
    /// 4-pole torque distribution on coil `k`, `cos(2 theta_k - angle)`.
    pub torque: [f64; N_TEETH],
    /// Spatial angle of the torque distribution, rad.
    pub torque_angle: f64,
    /// Constant torque-winding amplitude superposed in every scenario, A.
    /// The suspension force needs this second field: 2-pole currents alone
    /// produce force only at second order.
    pub torque_bias: f64,
}

/// Suspension phase axes, rad: u on tooth 0, v on tooth 8 (240 deg), w on
/// tooth 4 (120 deg). With the v/w axes in this order a `(u_x, u_y)` command
/// maps to a force along `(+x, +y)` when the 4-pole bias sits at angle zero;
/// ascending order would mirror the y axis.
pub const SUSPENSION_PHASE_ANGLES: [f64; 3] = [
    0.0,
    4.0 * std::f64::consts::FRAC_PI_3,
    2.0 * std::f64::consts::FRAC_PI_3,
];

impl WindingPattern {
    pub fn with_bias(torque_bias: f64, torque_angle: f64) -> Self {
        let mut suspension = [[0.0; 3]; N_TEETH];
        for (k, row) in suspension.iter_mut().enumerate() {
            for (ph, weight) in row.iter_mut().enumerate() {
                let (s, c) = SUSPENSION_PHASE_ANGLES[ph].sin_cos();
                *weight = TOOTH_COS[k] * c + TOOTH_SIN[k] * s;
            }
        }
        let mut torque = [0.0; N_TEETH];
        for (k, w) in torque.iter_mut().enumerate() {
            *w = (2.0 * tooth_angle(k) - torque_angle).cos();
        }
        Self {
            suspension,
            torque,
            torque_angle,
            torque_bias,
        }
    }
}

impl Default for WindingPattern {
    fn default() -> Self {
        Self::with_bias(1.0, 0.0)
    }
}

/// Per-coil current command: suspension distribution of the three-phase set,
/// plus the 4-pole torque pattern, plus the carrier on the injection coils.
pub fn superpose_coil_currents(
    suspension: (f64, f64, f64),
    torque_amplitude: f64,
    injection_sample: f64,
    pattern: &WindingPattern,
    injection: &InjectionConfig,
) -> [f64; N_TEETH] {
    let (i_u, i_v, i_w) = suspension;
    let mut out = [0.0; N_TEETH];
    for (k, slot) in out.iter_mut().enumerate() {
        let s = pattern.suspension[k][0] * i_u
            + pattern.suspension[k][1] * i_v
            + pattern.suspension[k][2] * i_w;
        *slot = s + torque_amplitude * pattern.torque[k];
    }
    for (slot, &k) in injection.coils.iter().enumerate() {
        out[k] += injection_sample * injection.polarity.get(slot).copied().unwrap_or(1.0);
    }
    out
}

/// Every intermediate quantity of one control update, recorded in traces.
#[derive(Debug, Clone, Copy, Default)]
pub struct ControlCommand {
    /// Position errors, m.
    pub e_x: f64,
    pub e_y: f64,
    /// Per-axis control efforts, A.
    pub u_x: f64,
    pub u_y: f64,
    /// Efforts in the dq frame, A.
    pub u_d: f64,
    pub u_q: f64,
    /// Three-phase suspension current commands, A.
    pub i_u: f64,
    pub i_v: f64,
    pub i_w: f64,
    /// Final per-coil command excluding the time-varying carrier, A.
    pub coil_base: [f64; N_TEETH],
    /// True when either axis controller hit its output limit.
    pub saturated: bool,
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
