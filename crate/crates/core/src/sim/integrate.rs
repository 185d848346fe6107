use crate::{Error, Result};

/// Advances `state` by one classical fourth-order Runge-Kutta step.
///
/// The scheme is fixed-step and free of data-dependent branching, so the
/// same inputs always produce bit-identical outputs.
pub fn integrate_step<const N: usize, F>(
    state: &[f64; N],
    t: f64,
    dt: f64,
    mut derivative: F,
) -> Result<[f64; N]>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    if !(dt > 0.0) {
        return Err(Error::config(format!(
            "integration step dt = {dt} must be positive"
        )));
    }
    let check = |k: &[f64; N], t: f64| -> Result<()> {
        match k.iter().position(|v| !v.is_finite()) {
            Some(i) => Err(Error::Diverged {
                t,
                channel: format!("state[{i}]"),
            }),
            None => Ok(()),
        }
    };

    let k1 = derivative(t, state);
    check(&k1, t)?;
    let k2 = derivative(t + 0.5 * dt, &axpy(state, 0.5 * dt, &k1));
    check(&k2, t + 0.5 * dt)?;
    let k3 = derivative(t + 0.5 * dt, &axpy(state, 0.5 * dt, &k2));
    check(&k3, t + 0.5 * dt)?;
    let k4 = derivative(t + dt, &axpy(state, dt, &k3));
    check(&k4, t + dt)?;

    let mut next = *state;
    for i in 0..N {
        next[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    check(&next, t + dt)?;
    Ok(next)
}

fn axpy<const N: usize>(x: &[f64; N], a: f64, y: &[f64; N]) -> [f64; N] {
    let mut out = *x;
    for i in 0..N {
        out[i] += a * y[i];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn zero_dynamics_is_identity() {
        let s = [1.5, -2.0, 3.25];
        let next = integrate_step(&s, 0.3, 1e-3, |_, _| [0.0; 3]).unwrap();
        assert_eq!(next, s);
    }

    #[test]
    fn exponential_decay_matches_closed_form() {
        let mut x = [1.0];
        let dt = 1e-3;
        for k in 0..1000 {
            x = integrate_step(&x, k as f64 * dt, dt, |_, s| [-s[0]]).unwrap();
        }
        assert!((x[0] - (-1.0f64).exp()).abs() < 1e-6, "{}", x[0]);
    }

    #[test]
    fn sine_integral_returns_to_zero_after_one_period() {
        let mut x = [0.0];
        let dt = 1e-3;
        for k in 0..1000 {
            x = integrate_step(&x, k as f64 * dt, dt, |t, _| {
                [2.0 * PI * (2.0 * PI * t).cos()]
            })
            .unwrap();
        }
        assert!(x[0].abs() < 1e-6, "{}", x[0]);
    }

    #[test]
    fn non_finite_derivative_reports_time_and_channel() {
        let err = integrate_step(&[1.0, 2.0], 0.5, 1e-3, |_, _| [0.0, f64::NAN]).unwrap_err();
        match err {
            Error::Diverged { t, channel } => {
                assert_eq!(t, 0.5);
                assert_eq!(channel, "state[1]");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn deterministic() {
        let f = |t: f64, s: &[f64; 2]| [s[1], -s[0] + (3.0 * t).sin()];
        let a = integrate_step(&[0.1, 0.2], 0.0, 1e-3, f).unwrap();
        let b = integrate_step(&[0.1, 0.2], 0.0, 1e-3, f).unwrap();
        assert_eq!(a[0].to_bits(), b[0].to_bits());
        assert_eq!(a[1].to_bits(), b[1].to_bits());
    }
}
