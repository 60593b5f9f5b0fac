//! Current-drive plant: a current regulator tracks the commanded coil
//! currents, the rotor integrates the resulting radial force, and terminal
//! voltages are reported the way a measurement across each coil would see
//! them.

use crate::motor::{
    current_drive_step, radial_force_at, CoilBank, ModelError, MotorParams, RotorState, N_TEETH,
};
use crate::signal::InjectionConfig;

/// Everything the signal chain and the trace need from one plant step.
#[derive(Debug, Clone)]
pub struct PlantSample {
    pub rotor: RotorState,
    pub currents: [f64; N_TEETH],
    pub voltages: [f64; N_TEETH],
    /// Radial force at the end-of-step state, N.
    pub fx: f64,
    pub fy: f64,
    pub gap_clamped: bool,
}

/// Rotor plus coil electrics advanced at a fixed step under current drive.
///
/// The per-coil current is `base_k(t) + i_s(t)` on the injection coils. The
/// base tracks the controller command through a first-order lag of time
/// constant `command_tau` (the analog current loop); an instantaneous step
/// of the base command would report an `L di/dt` voltage impulse that lands
/// inside the demodulation band, so the lag is what keeps command activity
/// and the sensing carrier spectrally separated. `command_tau = 0` gives
/// ideal zero-order-hold tracking. The carrier is evaluated continuously,
/// including at the RK4 substages of the mechanical integration.
#[derive(Debug, Clone)]
pub struct CurrentDrivePlant {
    params: MotorParams,
    injection: InjectionConfig,
    command_tau: f64,
    pub rotor: RotorState,
    /// Regulator output for the non-carrier part of each coil current.
    base_state: [f64; N_TEETH],
    bank: CoilBank,
}

impl CurrentDrivePlant {
    /// `initial_base` is the coil command active before the first step; the
    /// regulator state and the previous-current memory for the backward
    /// difference `di/dt` are seeded from it at the starting instant so the
    /// first voltage sample sees no artificial command step.
    pub fn new(
        params: MotorParams,
        injection: InjectionConfig,
        command_tau: f64,
        rotor: RotorState,
        initial_base: &[f64; N_TEETH],
    ) -> Self {
        let bank = CoilBank {
            current: with_carrier(initial_base, &injection, rotor.t),
            ..CoilBank::default()
        };
        Self {
            params,
            injection,
            command_tau,
            rotor,
            base_state: *initial_base,
            bank,
        }
    }

    pub fn params(&self) -> &MotorParams {
        &self.params
    }

    /// Regulator output at `elapsed` seconds into a step, with the command
    /// held at `cmd`: exponential approach from the stored state.
    fn base_at(&self, cmd: &[f64; N_TEETH], elapsed: f64) -> [f64; N_TEETH] {
        if self.command_tau <= 0.0 {
            return *cmd;
        }
        let decay = (-elapsed / self.command_tau).exp();
        let mut out = *cmd;
        for k in 0..N_TEETH {
            out[k] += (self.base_state[k] - cmd[k]) * decay;
        }
        out
    }

    /// Advance one step of `dt`: integrate the rotor under the force of the
    /// tracked currents (regulator and carrier evaluated at the substage
    /// times) plus an external disturbance force, then report currents and
    /// voltages at the new sample instant.
    ///
    /// Touchdown terminates with [`ModelError::Touchdown`]; the rotor state
    /// is left at the offending position so a caller can still record it.
    pub fn step(
        &mut self,
        command: &[f64; N_TEETH],
        disturbance: impl Fn(f64) -> (f64, f64),
        dt: f64,
    ) -> Result<PlantSample, ModelError> {
        if dt <= 0.0 {
            return Err(ModelError::NonPositiveDt(dt));
        }
        let params = self.params.clone();
        let injection = self.injection.clone();
        let t0 = self.rotor.t;

        let force = |t: f64, x: f64, y: f64| -> (f64, f64) {
            let currents = with_carrier(&self.base_at(command, t - t0), &injection, t);
            // the gap clamp keeps the force finite even while a stage probes
            // beyond the touchdown radius
            let f = radial_force_at(x, y, &currents, &params)
                .expect("gap floor keeps inductances finite");
            let (dx, dy) = disturbance(t);
            (f.fx + dx, f.fy + dy)
        };

        let step_result = crate::motor::mechanical_step_with(&self.rotor, force, dt, &self.params);
        let next_rotor = match step_result {
            Ok(r) => r,
            Err(ModelError::Touchdown { x, y, t }) => {
                self.rotor = RotorState {
                    x,
                    y,
                    vx: self.rotor.vx,
                    vy: self.rotor.vy,
                    t,
                };
                return Err(ModelError::Touchdown { x, y, t });
            }
            Err(e) => return Err(e),
        };

        let t_new = next_rotor.t;
        let base_new = self.base_at(command, dt);
        let tracked = with_carrier(&base_new, &self.injection, t_new);
        self.bank = current_drive_step(&self.bank, &tracked, &next_rotor, dt, &self.params)?;
        self.base_state = base_new;
        self.rotor = next_rotor;

        let f = radial_force_at(self.rotor.x, self.rotor.y, &tracked, &self.params)?;
        Ok(PlantSample {
            rotor: self.rotor,
            currents: self.bank.current,
            voltages: self.bank.terminal_voltage,
            fx: f.fx,
            fy: f.fy,
            gap_clamped: f.gap_clamped,
        })
    }
}

fn with_carrier(
    base: &[f64; N_TEETH],
    injection: &InjectionConfig,
    t: f64,
) -> [f64; N_TEETH] {
    let mut out = *base;
    let i_s = injection.current(t);
    for (slot, &k) in injection.coils.iter().enumerate() {
        out[k] += i_s * injection.polarity.get(slot).copied().unwrap_or(1.0);
    }
    out
}
