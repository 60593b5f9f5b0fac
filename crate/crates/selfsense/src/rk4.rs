//! Classical fourth-order Runge-Kutta step for small fixed-size states.

/// Advance `state` from `t` to `t + dt` with one classical RK4 step.
///
/// `deriv(t, state)` returns the time derivative of every state component.
pub fn rk4_step<const N: usize>(
    t: f64,
    state: &[f64; N],
    dt: f64,
    deriv: impl Fn(f64, &[f64; N]) -> [f64; N],
) -> [f64; N] {
    let half = 0.5 * dt;

    let k1 = deriv(t, state);
    let k2 = deriv(t + half, &offset(state, &k1, half));
    let k3 = deriv(t + half, &offset(state, &k2, half));
    let k4 = deriv(t + dt, &offset(state, &k3, dt));

    let mut next = *state;
    for i in 0..N {
        next[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    next
}

fn offset<const N: usize>(state: &[f64; N], slope: &[f64; N], h: f64) -> [f64; N] {
    let mut out = *state;
    for i in 0..N {
        out[i] += h * slope[i];
    }
    out
}
