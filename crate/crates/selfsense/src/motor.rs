//! Lumped-parameter model of a 12-tooth bearingless motor.
//!
//! Each stator coil wraps one tooth and is modeled as a gap-dependent
//! inductance `L(g) = N^2 mu0 A / (2 g)` in series with a resistance.
//! The rotor is a 2-DOF point mass in the radial plane; radial force
//! comes from the coenergy gradient `F = grad_{x,y} sum_k L_k i_k^2 / 2`.
//!
//! Coil `k` (0-based) sits at angle `theta_k = 2 pi k / 12`, so coil 0 is
//! on the +x axis, coil 3 on +y, coil 6 on -x and coil 9 on -y.

use thiserror::Error;

use crate::rk4::rk4_step;

/// Number of stator teeth (one coil per tooth).
pub const N_TEETH: usize = 12;

/// Free-space permeability, H/m.
pub const MU0: f64 = 4.0e-7 * std::f64::consts::PI;

const SQRT3_2: f64 = 0.866_025_403_784_438_6;

/// cos(theta_k) at the twelve tooth angles, exact at the 30-degree grid.
pub const TOOTH_COS: [f64; N_TEETH] = [
    1.0, SQRT3_2, 0.5, 0.0, -0.5, -SQRT3_2, -1.0, -SQRT3_2, -0.5, 0.0, 0.5, SQRT3_2,
];

/// sin(theta_k) at the twelve tooth angles, exact at the 30-degree grid.
pub const TOOTH_SIN: [f64; N_TEETH] = [
    0.0, 0.5, SQRT3_2, 1.0, SQRT3_2, 0.5, 0.0, -0.5, -SQRT3_2, -1.0, -SQRT3_2, -0.5,
];

/// Angle of tooth `k` in radians, `2 pi k / 12`.
pub fn tooth_angle(k: usize) -> f64 {
    std::f64::consts::TAU * (k as f64) / N_TEETH as f64
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("air gap must be positive, got {0} m")]
    NonPositiveGap(f64),
    #[error("time step must be positive, got {0} s")]
    NonPositiveDt(f64),
    /// Rotor displacement reached the clamp radius; the carried state is the
    /// offending post-step state.
    #[error("rotor touched down at ({x:.3e}, {y:.3e}) m, t = {t:.6} s")]
    Touchdown { x: f64, y: f64, t: f64 },
}

// ---------------------------------------------------------------------------
// Parameters and states
// ---------------------------------------------------------------------------

/// Geometry and electrical constants of the machine.
#[derive(Debug, Clone)]
pub struct MotorParams {
    /// Turns per coil.
    pub turns: f64,
    /// Stator tooth face area, m^2.
    pub tooth_area: f64,
    /// Magnetic permeability of the gap, H/m.
    pub mu0: f64,
    /// Air gap with the rotor centered, m.
    pub nominal_gap: f64,
    /// Per-coil resistance, Ohm.
    pub coil_resistance: f64,
    /// Rotor mass, kg.
    pub rotor_mass: f64,
    /// Constant force bias along -y (e.g. rotor weight), N.
    pub rotor_weight_bias: f64,
    /// Fraction of the nominal gap the rotor may close before touchdown.
    pub max_displacement_fraction: f64,
}

impl Default for MotorParams {
    fn default() -> Self {
        Self {
            turns: 100.0,
            tooth_area: 8.0e-5,
            mu0: MU0,
            nominal_gap: 5.0e-4,
            coil_resistance: 1.0,
            rotor_mass: 0.15,
            rotor_weight_bias: 0.0,
            max_displacement_fraction: 0.9,
        }
    }
}

impl MotorParams {
    /// Coil inductance with the rotor centered, H.
    pub fn nominal_inductance(&self) -> f64 {
        self.turns * self.turns * self.mu0 * self.tooth_area / (2.0 * self.nominal_gap)
    }

    /// Smallest gap the model allows before clamping, m.
    pub fn gap_floor(&self) -> f64 {
        (1.0 - self.max_displacement_fraction) * self.nominal_gap
    }

    /// Touchdown radius for the rotor center, m.
    pub fn clamp_radius(&self) -> f64 {
        self.max_displacement_fraction * self.nominal_gap
    }
}

/// Radial position and velocity of the rotor center.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RotorState {
    /// m
    pub x: f64,
    /// m
    pub y: f64,
    /// m/s
    pub vx: f64,
    /// m/s
    pub vy: f64,
    /// s
    pub t: f64,
}

impl RotorState {
    pub fn at_rest(x: f64, y: f64) -> Self {
        Self {
            x,
            y,
            vx: 0.0,
            vy: 0.0,
            t: 0.0,
        }
    }

    /// Distance of the rotor center from the stator axis, m.
    pub fn displacement(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

/// Electrical state of the twelve coils.
#[derive(Debug, Clone)]
pub struct CoilBank {
    /// A
    pub current: [f64; N_TEETH],
    /// Wb, `lambda_k = L_k(g_k) i_k`
    pub flux_linkage: [f64; N_TEETH],
    /// V
    pub terminal_voltage: [f64; N_TEETH],
    /// V, additive per-coil disturbance (zero for a hysteresis rotor)
    pub back_emf: [f64; N_TEETH],
}

impl Default for CoilBank {
    fn default() -> Self {
        Self {
            current: [0.0; N_TEETH],
            flux_linkage: [0.0; N_TEETH],
            terminal_voltage: [0.0; N_TEETH],
            back_emf: [0.0; N_TEETH],
        }
    }
}

/// Air gap at one tooth, with a flag set when the clamp floor engaged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gap {
    /// m
    pub length: f64,
    pub clamped: bool,
}

/// Radial force on the rotor plus the clamp flag aggregated over all teeth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialForce {
    /// N
    pub fx: f64,
    /// N
    pub fy: f64,
    pub gap_clamped: bool,
}

// ---------------------------------------------------------------------------
// Gap geometry and coil electrics
// ---------------------------------------------------------------------------

/// First-order air gap at a tooth at angle `theta` for a rotor displaced to
/// `(x, y)`: `g = g0 - x cos(theta) - y sin(theta)`, clamped below at the
/// gap floor.
pub fn gap_at_tooth(x: f64, y: f64, theta: f64, params: &MotorParams) -> Gap {
    gap_from_projection(x * theta.cos() + y * theta.sin(), params)
}

/// Same as [`gap_at_tooth`] for tooth index `k`, using the exact tabulated
/// tooth direction cosines.
pub fn gap_at_tooth_index(x: f64, y: f64, k: usize, params: &MotorParams) -> Gap {
    gap_from_projection(x * TOOTH_COS[k] + y * TOOTH_SIN[k], params)
}

fn gap_from_projection(projection: f64, params: &MotorParams) -> Gap {
    let raw = params.nominal_gap - projection;
    let floor = params.gap_floor();
    if raw < floor {
        Gap {
            length: floor,
            clamped: true,
        }
    } else {
        Gap {
            length: raw,
            clamped: false,
        }
    }
}

/// Lumped coil inductance `L = N^2 mu0 A / (2 g)`, H.
pub fn coil_inductance(g: f64, params: &MotorParams) -> Result<f64, ModelError> {
    if g <= 0.0 {
        return Err(ModelError::NonPositiveGap(g));
    }
    Ok(params.turns * params.turns * params.mu0 * params.tooth_area / (2.0 * g))
}

/// Coil terminal voltage
/// `v = R i + L(g) di/dt + i (dL/dg) dg/dt + e_b` with `dL/dg = -L/g`.
///
/// With `dg_dt = 0` this is exactly `R i + L di/dt + e_b`.
pub fn coil_voltage(
    i: f64,
    di_dt: f64,
    g: f64,
    dg_dt: f64,
    params: &MotorParams,
    back_emf: f64,
) -> Result<f64, ModelError> {
    let l = coil_inductance(g, params)?;
    let dl_dg = -l / g;
    Ok(params.coil_resistance * i + l * di_dt + i * dl_dg * dg_dt + back_emf)
}

// ---------------------------------------------------------------------------
// Radial force from coenergy
// ---------------------------------------------------------------------------

/// Analytic coenergy gradient at constant currents.
///
/// `Fx = sum_k (i_k^2 / 2) (L_k / g_k) cos(theta_k)` and likewise for `Fy`
/// with `sin(theta_k)`; gaps are evaluated through the clamp so the force
/// stays finite at large displacements.
pub fn radial_force(
    rotor: &RotorState,
    currents: &[f64; N_TEETH],
    params: &MotorParams,
) -> Result<RadialForce, ModelError> {
    radial_force_at(rotor.x, rotor.y, currents, params)
}

pub(crate) fn radial_force_at(
    x: f64,
    y: f64,
    currents: &[f64; N_TEETH],
    params: &MotorParams,
) -> Result<RadialForce, ModelError> {
    let mut fx = 0.0;
    let mut fy = 0.0;
    let mut clamped = false;
    for k in 0..N_TEETH {
        let gap = gap_at_tooth_index(x, y, k, params);
        clamped |= gap.clamped;
        let l = coil_inductance(gap.length, params)?;
        let half_i2_l_over_g = 0.5 * currents[k] * currents[k] * l / gap.length;
        fx += half_i2_l_over_g * TOOTH_COS[k];
        fy += half_i2_l_over_g * TOOTH_SIN[k];
    }
    Ok(RadialForce {
        fx,
        fy,
        gap_clamped: clamped,
    })
}

// ---------------------------------------------------------------------------
// Electrical step (voltage drive / current drive)
// ---------------------------------------------------------------------------

/// Advance the coil flux linkages by one RK4 step under applied terminal
/// voltages, with the rotor (and therefore every inductance) frozen over
/// the step: `dlambda_k/dt = v_k - R i_k - e_k`, `i_k = lambda_k / L_k`.
pub fn electrical_step(
    bank: &CoilBank,
    applied_voltage: &[f64; N_TEETH],
    rotor: &RotorState,
    dt: f64,
    params: &MotorParams,
) -> Result<CoilBank, ModelError> {
    if dt <= 0.0 {
        return Err(ModelError::NonPositiveDt(dt));
    }
    let mut inductance = [0.0; N_TEETH];
    for (k, slot) in inductance.iter_mut().enumerate() {
        let gap = gap_at_tooth_index(rotor.x, rotor.y, k, params);
        *slot = coil_inductance(gap.length, params)?;
    }

    let r = params.coil_resistance;
    let flux = rk4_step(rotor.t, &bank.flux_linkage, dt, |_, lambda| {
        let mut d = [0.0; N_TEETH];
        for k in 0..N_TEETH {
            d[k] = applied_voltage[k] - r * lambda[k] / inductance[k] - bank.back_emf[k];
        }
        d
    });

    let mut next = bank.clone();
    next.flux_linkage = flux;
    for k in 0..N_TEETH {
        next.current[k] = flux[k] / inductance[k];
        next.terminal_voltage[k] = applied_voltage[k];
    }
    Ok(next)
}

/// Ideal-current-source update: currents are set directly from the command,
/// flux linkages follow `lambda = L i`, and the reported terminal voltage
/// uses a backward difference of the commanded current for `di/dt` and the
/// analytic `dg/dt = -(vx cos + vy sin)` from the rotor velocity.
pub fn current_drive_step(
    bank: &CoilBank,
    commanded: &[f64; N_TEETH],
    rotor: &RotorState,
    dt: f64,
    params: &MotorParams,
) -> Result<CoilBank, ModelError> {
    if dt <= 0.0 {
        return Err(ModelError::NonPositiveDt(dt));
    }
    let mut next = bank.clone();
    for k in 0..N_TEETH {
        let gap = gap_at_tooth_index(rotor.x, rotor.y, k, params);
        let di_dt = (commanded[k] - bank.current[k]) / dt;
        let dg_dt = -(rotor.vx * TOOTH_COS[k] + rotor.vy * TOOTH_SIN[k]);
        next.terminal_voltage[k] = coil_voltage(
            commanded[k],
            di_dt,
            gap.length,
            dg_dt,
            params,
            bank.back_emf[k],
        )?;
        next.current[k] = commanded[k];
        next.flux_linkage[k] = coil_inductance(gap.length, params)? * commanded[k];
    }
    Ok(next)
}

// ---------------------------------------------------------------------------
// Mechanical step
// ---------------------------------------------------------------------------

/// Advance the rotor under a force held constant over the step.
///
/// Returns [`ModelError::Touchdown`] when the post-step displacement reaches
/// the clamp radius.
pub fn mechanical_step(
    rotor: &RotorState,
    force: (f64, f64),
    dt: f64,
    params: &MotorParams,
) -> Result<RotorState, ModelError> {
    mechanical_step_with(rotor, |_, _, _| force, dt, params)
}

/// Advance the rotor with RK4 over a force field `force(t, x, y)` evaluated
/// at the substage states; `m x'' = Fx`, `m y'' = Fy - rotor_weight_bias`.
pub fn mechanical_step_with(
    rotor: &RotorState,
    force: impl Fn(f64, f64, f64) -> (f64, f64),
    dt: f64,
    params: &MotorParams,
) -> Result<RotorState, ModelError> {
    if dt <= 0.0 {
        return Err(ModelError::NonPositiveDt(dt));
    }
    let inv_m = 1.0 / params.rotor_mass;
    let weight = params.rotor_weight_bias;
    let state = [rotor.x, rotor.y, rotor.vx, rotor.vy];
    let next = rk4_step(rotor.t, &state, dt, |t, s| {
        let (fx, fy) = force(t, s[0], s[1]);
        [s[2], s[3], fx * inv_m, (fy - weight) * inv_m]
    });

    let advanced = RotorState {
        x: next[0],
        y: next[1],
        vx: next[2],
        vy: next[3],
        t: rotor.t + dt,
    };
    if advanced.displacement() >= params.clamp_radius() {
        return Err(ModelError::Touchdown {
            x: advanced.x,
            y: advanced.y,
            t: advanced.t,
        });
    }
    Ok(advanced)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
    }

    fn params_with_area(area: f64) -> MotorParams {
        MotorParams {
            tooth_area: area,
            ..MotorParams::default()
        }
    }

    // -- tooth geometry --

    #[test]
    fn tooth_angles_hit_the_axes() {
        assert_eq!(tooth_angle(0), 0.0);
        assert_eq!(tooth_angle(3), FRAC_PI_2);
        assert_eq!(tooth_angle(6), PI);
        assert_eq!(tooth_angle(9), 1.5 * PI);
    }

    #[test]
    fn tooth_tables_match_trig() {
        for k in 0..N_TEETH {
            assert!((TOOTH_COS[k] - tooth_angle(k).cos()).abs() < 1e-15);
            assert!((TOOTH_SIN[k] - tooth_angle(k).sin()).abs() < 1e-15);
        }
    }

    // -- gap --

    #[test]
    fn centered_rotor_sees_nominal_gap() {
        let p = MotorParams::default();
        let g = gap_at_tooth(0.0, 0.0, 1.234, &p);
        assert_eq!(g.length, p.nominal_gap);
        assert!(!g.clamped);
    }

    #[test]
    fn displacement_toward_tooth_closes_its_gap() {
        let p = MotorParams::default();
        let delta = 1e-4;
        let g = gap_at_tooth(delta, 0.0, 0.0, &p);
        assert_eq!(g.length, p.nominal_gap - delta);
    }

    #[test]
    fn orthogonal_tooth_is_unaffected() {
        let p = MotorParams::default();
        let g = gap_at_tooth(1e-4, 0.0, FRAC_PI_2, &p);
        assert!(approx(g.length, p.nominal_gap, 1e-12));
        // the tabulated direction is exact
        let gi = gap_at_tooth_index(1e-4, 0.0, 3, &p);
        assert_eq!(gi.length, p.nominal_gap);
    }

    #[test]
    fn gap_clamps_at_floor_and_flags() {
        let p = MotorParams::default();
        let g = gap_at_tooth_index(0.99 * p.nominal_gap, 0.0, 0, &p);
        assert_eq!(g.length, p.gap_floor());
        assert!(g.clamped);
    }

    // -- inductance --

    #[test]
    fn inductance_matches_hand_evaluation() {
        // N = 100, A = 1e-4 m^2, g = 0.5e-3 m
        let p = params_with_area(1.0e-4);
        let l = coil_inductance(0.5e-3, &p).unwrap();
        // independent scalar evaluation of N^2 mu0 A / (2 g)
        let expected = 100.0_f64.powi(2) * (4.0e-7 * PI) * 1.0e-4 / (2.0 * 0.5e-3);
        assert_eq!(l, expected);
        assert!(approx(l, 1.2566e-3, 1e-4));
    }

    #[test]
    fn inductance_is_inverse_in_gap() {
        let p = MotorParams::default();
        let g = 3.7e-4;
        let l1 = coil_inductance(g, &p).unwrap();
        let l2 = coil_inductance(2.0 * g, &p).unwrap();
        assert!(approx(l2, l1 / 2.0, 1e-14));
    }

    #[test]
    fn doubling_turns_quadruples_inductance() {
        let base = MotorParams::default();
        let doubled = MotorParams {
            turns: 2.0 * base.turns,
            ..base.clone()
        };
        let l1 = coil_inductance(base.nominal_gap, &base).unwrap();
        let l2 = coil_inductance(base.nominal_gap, &doubled).unwrap();
        assert!(approx(l2, 4.0 * l1, 1e-14));
    }

    #[test]
    fn inductance_rejects_non_positive_gap() {
        let p = MotorParams::default();
        assert_eq!(
            coil_inductance(0.0, &p),
            Err(ModelError::NonPositiveGap(0.0))
        );
        assert!(coil_inductance(-1e-4, &p).is_err());
    }

    #[test]
    fn inductance_times_gap_is_constant() {
        let p = MotorParams::default();
        let reference = coil_inductance(p.nominal_gap, &p).unwrap() * p.nominal_gap;
        for g in [1e-5, 1e-4, 5e-4, 2e-3, 0.1] {
            let product = coil_inductance(g, &p).unwrap() * g;
            assert!(approx(product, reference, 1e-14));
        }
    }

    // -- coil voltage --

    #[test]
    fn dc_steady_state_is_resistive() {
        let p = MotorParams::default();
        let v = coil_voltage(0.7, 0.0, p.nominal_gap, 0.0, &p, 0.0).unwrap();
        assert_eq!(v, p.coil_resistance * 0.7);
    }

    #[test]
    fn static_gap_recovers_series_rl_form_bitwise() {
        let p = MotorParams::default();
        let mut rng_state = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            // xorshift-style generator; keeps the test free of rand
            rng_state ^= rng_state << 13;
            rng_state ^= rng_state >> 7;
            rng_state ^= rng_state << 17;
            (rng_state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for _ in 0..200 {
            let i = 4.0 * next();
            let di_dt = 2000.0 * next();
            let g = p.nominal_gap * (1.0 + next());
            let e = next();
            let v = coil_voltage(i, di_dt, g, 0.0, &p, e).unwrap();
            let l = coil_inductance(g, &p).unwrap();
            let rl_form = p.coil_resistance * i + l * di_dt + e;
            assert_eq!(v.to_bits(), rl_form.to_bits());
        }
    }

    #[test]
    fn hf_voltage_amplitude_matches_phasor_analysis() {
        // i = I sin(w t) at fixed gap: amplitude I sqrt(R^2 + (w L)^2).
        // R = 1 Ohm, L = 1.2566 mH (A = 1e-4, g = 0.5 mm), f = 2 kHz, I = 0.1 A.
        let p = params_with_area(1.0e-4);
        let g = 0.5e-3;
        let l = coil_inductance(g, &p).unwrap();
        let freq = 2000.0;
        let omega = TAU * freq;
        let amp_i = 0.1;

        // projection of sampled v(t) onto sin/cos over one period
        let n = 4096;
        let dt = 1.0 / (freq * n as f64);
        let (mut a_sin, mut a_cos) = (0.0, 0.0);
        for j in 0..n {
            let t = j as f64 * dt;
            let i = amp_i * (omega * t).sin();
            let di_dt = amp_i * omega * (omega * t).cos();
            let v = coil_voltage(i, di_dt, g, 0.0, &p, 0.0).unwrap();
            a_sin += 2.0 * v * (omega * t).sin() / n as f64;
            a_cos += 2.0 * v * (omega * t).cos() / n as f64;
        }
        let sampled_amplitude = a_sin.hypot(a_cos);

        // phasor oracle, evaluated independently
        let phasor_amplitude = amp_i * (p.coil_resistance.powi(2) + (omega * l).powi(2)).sqrt();
        assert!(approx(sampled_amplitude, phasor_amplitude, 1e-9));
        assert!(approx(phasor_amplitude, 1.582, 1e-3));
    }

    #[test]
    fn opposing_coils_see_equal_voltage_when_centered() {
        let p = MotorParams::default();
        let rotor = RotorState::at_rest(0.0, 0.0);
        let bank = CoilBank {
            current: [0.3; N_TEETH],
            ..CoilBank::default()
        };
        let commanded = [0.5; N_TEETH];
        let out = current_drive_step(&bank, &commanded, &rotor, 5e-6, &p).unwrap();
        assert_eq!(
            out.terminal_voltage[0].to_bits(),
            out.terminal_voltage[6].to_bits()
        );
        assert_eq!(
            out.terminal_voltage[3].to_bits(),
            out.terminal_voltage[9].to_bits()
        );
    }

    // -- radial force --

    /// Coenergy `sum_k L_k(g_k) i_k^2 / 2`, used as the independent route for
    /// finite-difference force checks.
    fn coenergy(x: f64, y: f64, currents: &[f64; N_TEETH], params: &MotorParams) -> f64 {
        (0..N_TEETH)
            .map(|k| {
                let gap = gap_at_tooth_index(x, y, k, params);
                0.5 * coil_inductance(gap.length, params).unwrap() * currents[k] * currents[k]
            })
            .sum()
    }

    #[test]
    fn no_excitation_means_no_force() {
        let p = MotorParams::default();
        let rotor = RotorState::at_rest(1e-4, -5e-5);
        let f = radial_force(&rotor, &[0.0; N_TEETH], &p).unwrap();
        assert_eq!((f.fx, f.fy), (0.0, 0.0));
    }

    #[test]
    fn opposing_teeth_cancel_when_centered() {
        let p = MotorParams::default();
        let mut currents = [0.0; N_TEETH];
        currents[0] = 1.5;
        currents[6] = 1.5;
        let f = radial_force(&RotorState::at_rest(0.0, 0.0), &currents, &p).unwrap();
        assert_eq!((f.fx, f.fy), (0.0, 0.0));
    }

    #[test]
    fn offset_rotor_is_pulled_toward_the_closer_tooth() {
        let p = MotorParams::default();
        let x = 0.05 * p.nominal_gap;
        let mut currents = [0.0; N_TEETH];
        currents[0] = 1.0;
        currents[6] = 1.0;
        let f = radial_force(&RotorState::at_rest(x, 0.0), &currents, &p).unwrap();
        assert!(f.fx > 0.0);

        // central finite difference of the coenergy, step 1e-8 g0
        let h = 1e-8 * p.nominal_gap;
        let fd = (coenergy(x + h, 0.0, &currents, &p) - coenergy(x - h, 0.0, &currents, &p))
            / (2.0 * h);
        assert!(approx(f.fx, fd, 1e-6));
    }

    #[test]
    fn force_matches_coenergy_gradient_on_random_states() {
        let p = MotorParams::default();
        let mut state = 0x2545f4914f6cdd1du64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        // larger step than the single-point example: balances truncation
        // against cancellation across the random population
        let h = 1e-5 * p.nominal_gap;
        for _ in 0..300 {
            let x = 0.6 * p.nominal_gap * next();
            let y = 0.6 * p.nominal_gap * next();
            let mut currents = [0.0; N_TEETH];
            for c in currents.iter_mut() {
                *c = 4.0 * next();
            }
            let f = radial_force(&RotorState::at_rest(x, y), &currents, &p).unwrap();
            let fd_x = (coenergy(x + h, y, &currents, &p) - coenergy(x - h, y, &currents, &p))
                / (2.0 * h);
            let fd_y = (coenergy(x, y + h, &currents, &p) - coenergy(x, y - h, &currents, &p))
                / (2.0 * h);
            assert!(
                (f.fx - fd_x).abs() <= 1e-6 * f.fx.abs().max(fd_x.abs()).max(1e-3),
                "fx {} vs fd {}",
                f.fx,
                fd_x
            );
            assert!(
                (f.fy - fd_y).abs() <= 1e-6 * f.fy.abs().max(fd_y.abs()).max(1e-3),
                "fy {} vs fd {}",
                f.fy,
                fd_y
            );
        }
    }

    #[test]
    fn force_respects_tooth_pitch_symmetry() {
        // rotating the displacement by 30 deg and shifting the currents by
        // one coil rotates the force by 30 deg
        let p = MotorParams::default();
        let pitch = TAU / N_TEETH as f64;
        let (s, c) = pitch.sin_cos();
        let x = 0.21 * p.nominal_gap;
        let y = -0.13 * p.nominal_gap;
        let mut currents = [0.0; N_TEETH];
        for (k, cur) in currents.iter_mut().enumerate() {
            *cur = (k as f64 * 0.8).sin() + 0.4;
        }

        let f = radial_force(&RotorState::at_rest(x, y), &currents, &p).unwrap();

        let mut shifted = [0.0; N_TEETH];
        for k in 0..N_TEETH {
            shifted[(k + 1) % N_TEETH] = currents[k];
        }
        let rotated = RotorState::at_rest(c * x - s * y, s * x + c * y);
        let f_rot = radial_force(&rotated, &shifted, &p).unwrap();

        let expected = (c * f.fx - s * f.fy, s * f.fx + c * f.fy);
        let scale = f.fx.hypot(f.fy);
        assert!((f_rot.fx - expected.0).abs() <= 1e-12 * scale);
        assert!((f_rot.fy - expected.1).abs() <= 1e-12 * scale);
    }

    // -- electrical step --

    #[test]
    fn resistive_balance_holds_current() {
        let p = MotorParams::default();
        let rotor = RotorState::at_rest(0.0, 0.0);
        let l = coil_inductance(p.nominal_gap, &p).unwrap();
        let mut bank = CoilBank::default();
        let i0 = 0.8;
        bank.current = [i0; N_TEETH];
        bank.flux_linkage = [l * i0; N_TEETH];
        let v = [p.coil_resistance * i0; N_TEETH];
        let out = electrical_step(&bank, &v, &rotor, 5e-6, &p).unwrap();
        for k in 0..N_TEETH {
            assert!(approx(out.current[k], i0, 1e-13));
        }
    }

    #[test]
    fn voltage_step_follows_rl_charging_curve() {
        let p = MotorParams::default();
        let rotor = RotorState::at_rest(0.0, 0.0);
        let l = coil_inductance(p.nominal_gap, &p).unwrap();
        let v_applied = 2.0;
        let mut applied = [0.0; N_TEETH];
        applied[0] = v_applied;

        let dt = 5e-6;
        let mut bank = CoilBank::default();
        let mut t = 0.0;
        for _ in 0..400 {
            bank = electrical_step(&bank, &applied, &rotor, dt, &p).unwrap();
            t += dt;
        }
        let analytic = v_applied / p.coil_resistance * (1.0 - (-p.coil_resistance * t / l).exp());
        assert!(approx(bank.current[0], analytic, 1e-9));
        assert_eq!(bank.current[1], 0.0);
    }

    #[test]
    fn unpowered_coil_current_decays_monotonically() {
        let p = MotorParams::default();
        let rotor = RotorState::at_rest(0.0, 0.0);
        let l = coil_inductance(p.nominal_gap, &p).unwrap();
        let mut bank = CoilBank::default();
        bank.current[4] = 1.0;
        bank.flux_linkage[4] = l;
        let applied = [0.0; N_TEETH];
        let mut last = 1.0;
        for _ in 0..200 {
            bank = electrical_step(&bank, &applied, &rotor, 1e-5, &p).unwrap();
            assert!(bank.current[4] < last);
            assert!(bank.current[4] > 0.0);
            last = bank.current[4];
        }
    }

    #[test]
    fn flux_current_identity_is_preserved() {
        let p = MotorParams::default();
        let rotor = RotorState::at_rest(0.1 * p.nominal_gap, -0.05 * p.nominal_gap);
        let mut bank = CoilBank::default();
        let mut applied = [0.0; N_TEETH];
        for (k, v) in applied.iter_mut().enumerate() {
            *v = (k as f64 - 3.0) * 0.25;
        }
        for _ in 0..100 {
            bank = electrical_step(&bank, &applied, &rotor, 5e-6, &p).unwrap();
            for k in 0..N_TEETH {
                let gap = gap_at_tooth_index(rotor.x, rotor.y, k, &p);
                let l = coil_inductance(gap.length, &p).unwrap();
                assert!(approx(bank.flux_linkage[k], l * bank.current[k], 1e-12));
            }
        }
    }

    #[test]
    fn electrical_step_rejects_bad_dt() {
        let p = MotorParams::default();
        let bank = CoilBank::default();
        let rotor = RotorState::default();
        let err = electrical_step(&bank, &[0.0; N_TEETH], &rotor, 0.0, &p);
        assert_eq!(err.unwrap_err(), ModelError::NonPositiveDt(0.0));
    }

    #[test]
    fn back_emf_shifts_the_steady_state_current() {
        // with v applied and a constant opposing back-EMF e, the coil settles
        // at i = (v - e) / R
        let p = MotorParams::default();
        let rotor = RotorState::at_rest(0.0, 0.0);
        let mut bank = CoilBank::default();
        bank.back_emf[2] = 0.4;
        let mut applied = [0.0; N_TEETH];
        applied[2] = 1.0;
        for _ in 0..5000 {
            bank = electrical_step(&bank, &applied, &rotor, 5e-6, &p).unwrap();
        }
        let expected = (applied[2] - bank.back_emf[2]) / p.coil_resistance;
        assert!(approx(bank.current[2], expected, 1e-6));
    }

    #[test]
    fn rotor_motion_induces_voltage_at_constant_current() {
        // constant commanded current, rotor closing the gap of coil 0 at vx:
        // dg/dt = -vx there, so v - R i = i (dL/dg) dg/dt = i L vx / g
        let p = MotorParams::default();
        let vx = 0.02;
        let rotor = RotorState {
            x: 0.1 * p.nominal_gap,
            y: 0.0,
            vx,
            vy: 0.0,
            t: 0.0,
        };
        let i0 = 0.5;
        let mut bank = CoilBank::default();
        bank.current = [i0; N_TEETH];
        let out = current_drive_step(&bank, &[i0; N_TEETH], &rotor, 5e-6, &p).unwrap();

        let g = p.nominal_gap - rotor.x;
        let l = coil_inductance(g, &p).unwrap();
        let expected = p.coil_resistance * i0 + i0 * l * vx / g;
        assert!(approx(out.terminal_voltage[0], expected, 1e-12));
        // the widening gap on the opposite tooth induces the opposite sign
        let g7 = p.nominal_gap + rotor.x;
        let l7 = coil_inductance(g7, &p).unwrap();
        let expected7 = p.coil_resistance * i0 - i0 * l7 * vx / g7;
        assert!(approx(out.terminal_voltage[6], expected7, 1e-12));
    }

    // -- mechanical step --

    #[test]
    fn coasting_rotor_only_advances_time() {
        let p = MotorParams::default();
        let rotor = RotorState::at_rest(2e-5, -1e-5);
        let next = mechanical_step(&rotor, (0.0, 0.0), 1e-4, &p).unwrap();
        assert_eq!(next.x, rotor.x);
        assert_eq!(next.y, rotor.y);
        assert_eq!(next.vx, 0.0);
        assert_eq!(next.vy, 0.0);
        assert_eq!(next.t, rotor.t + 1e-4);
    }

    #[test]
    fn constant_force_gives_ballistic_trajectory() {
        let p = MotorParams::default();
        let f = 1.2;
        let dt = 5e-6;
        let steps = 2000;
        let mut rotor = RotorState::at_rest(0.0, 0.0);
        for _ in 0..steps {
            rotor = mechanical_step(&rotor, (f, 0.0), dt, &p).unwrap();
        }
        let t = steps as f64 * dt;
        let analytic = f * t * t / (2.0 * p.rotor_mass);
        assert!(approx(rotor.x, analytic, 1e-12));
    }

    #[test]
    fn rotating_the_force_rotates_the_trajectory() {
        let p = MotorParams::default();
        let f = (0.9, 0.0);
        let mut a = RotorState::at_rest(0.0, 0.0);
        let mut b = RotorState::at_rest(0.0, 0.0);
        for _ in 0..500 {
            a = mechanical_step(&a, f, 1e-5, &p).unwrap();
            b = mechanical_step(&b, (-f.1, f.0), 1e-5, &p).unwrap();
        }
        assert!(approx(b.y, a.x, 1e-14));
        assert!(b.x.abs() < 1e-18);
    }

    #[test]
    fn touchdown_is_reported_with_state() {
        let p = MotorParams::default();
        let rotor = RotorState::at_rest(0.89 * p.nominal_gap, 0.0);
        // strong outward pull
        let result = mechanical_step(&rotor, (50.0, 0.0), 1e-3, &p);
        match result {
            Err(ModelError::Touchdown { x, .. }) => assert!(x >= p.clamp_radius()),
            other => panic!("expected touchdown, got {other:?}"),
        }
    }

    #[test]
    fn weight_bias_accelerates_downward() {
        let p = MotorParams {
            rotor_weight_bias: 0.15 * 9.81,
            ..MotorParams::default()
        };
        let rotor = RotorState::at_rest(0.0, 0.0);
        let next = mechanical_step(&rotor, (0.0, 0.0), 1e-4, &p).unwrap();
        assert!(next.vy < 0.0);
        assert!(approx(next.vy, -9.81 * 1e-4, 1e-12));
    }

    #[test]
    fn rk4_order_on_sinusoidal_forcing() {
        // m x'' = A sin(w t): x(t) = A/(m w) (t - sin(w t)/w) from rest.
        // A constant force is integrated exactly (quadratic solution), so the
        // order measurement needs a force with nonzero higher derivatives.
        let p = MotorParams::default();
        let amp = 1.0;
        let omega = TAU * 1000.0;
        let horizon = 1e-3;
        let analytic = amp / (p.rotor_mass * omega) * (horizon - (omega * horizon).sin() / omega);

        let mut errors = Vec::new();
        for &dt in &[2e-5, 1e-5, 5e-6, 2.5e-6] {
            let steps = (horizon / dt).round() as usize;
            let mut rotor = RotorState::at_rest(0.0, 0.0);
            for _ in 0..steps {
                rotor =
                    mechanical_step_with(&rotor, |t, _, _| ((omega * t).sin() * amp, 0.0), dt, &p)
                        .unwrap();
            }
            errors.push((dt, (rotor.x - analytic).abs()));
        }
        let slope = log_log_slope(&errors);
        assert!(
            (3.7..=4.3).contains(&slope),
            "convergence slope {slope} out of range, errors {errors:?}"
        );
    }

    #[test]
    fn rl_step_response_converges_with_order_at_least_two() {
        let p = MotorParams::default();
        let rotor = RotorState::at_rest(0.0, 0.0);
        let l = coil_inductance(p.nominal_gap, &p).unwrap();
        let v = 1.0;
        let mut applied = [0.0; N_TEETH];
        applied[0] = v;
        let horizon = 1e-3;
        let analytic = v / p.coil_resistance * (1.0 - (-p.coil_resistance * horizon / l).exp());

        let mut errors = Vec::new();
        for &dt in &[2e-5, 1e-5, 5e-6, 2.5e-6] {
            let steps = (horizon / dt).round() as usize;
            let mut bank = CoilBank::default();
            for _ in 0..steps {
                bank = electrical_step(&bank, &applied, &rotor, dt, &p).unwrap();
            }
            errors.push((dt, (bank.current[0] - analytic).abs()));
        }
        let slope = log_log_slope(&errors);
        assert!(
            (1.8..=4.3).contains(&slope),
            "convergence slope {slope} out of range, errors {errors:?}"
        );
    }

    /// Least-squares slope of ln(error) against ln(dt).
    fn log_log_slope(errors: &[(f64, f64)]) -> f64 {
        let n = errors.len() as f64;
        let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
        for &(dt, err) in errors {
            let x = dt.ln();
            let y = err.max(1e-300).ln();
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        (n * sxy - sx * sy) / (n * sxx - sx * sx)
    }
}
