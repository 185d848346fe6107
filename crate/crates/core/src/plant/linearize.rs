//! Frequency response of the nonlinear averaged plant measured by
//! time-domain simulation around an equilibrium.

use num_complex::Complex64;

use super::converter::{BatteryTiedPlant, ConverterState, OperatingPoint};
use crate::sim::{extract_tone, integrate_step};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizeOptions {
    pub dt: f64,
    /// Duty perturbation amplitude, per unit.
    pub duty_amplitude: f64,
    /// Time allowed for the start-up transient to decay, s.
    pub settle: f64,
    /// Shortest measurement window, s. Rounded up to whole periods.
    pub min_window: f64,
    /// Largest tolerated equilibrium residual.
    pub max_residual: f64,
}

impl Default for LinearizeOptions {
    fn default() -> Self {
        Self {
            dt: 20e-6,
            duty_amplitude: 1e-4,
            settle: 0.3,
            min_window: 0.2,
            max_residual: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyPoint {
    pub frequency: f64,
    /// `ṽ_pv/d̃`.
    pub voltage_per_duty: Complex64,
    /// `ĩ_L/ṽ_pv`.
    pub current_per_voltage: Complex64,
}

/// Raw phasors `(ṽ_pv, ĩ_L)` for a duty perturbation of `amplitude` at `frequency`.
pub fn measure_response(
    plant: &BatteryTiedPlant,
    op: &OperatingPoint,
    frequency: f64,
    amplitude: f64,
    opts: &LinearizeOptions,
) -> Result<(Complex64, Complex64)> {
    let dt = opts.dt;
    let periods = (opts.min_window * frequency).ceil().max(2.0);
    let window = periods / frequency;
    let settle_steps = (opts.settle / dt).ceil() as usize;
    let window_steps = (window / dt).round() as usize;
    let omega = std::f64::consts::TAU * frequency;

    let eq = op.state();
    let mut x = [eq.v_cap, eq.i_l];
    let mut v = Vec::with_capacity(window_steps + 1);
    let mut i = Vec::with_capacity(window_steps + 1);
    let total = settle_steps + window_steps;
    for n in 0..total {
        let t = n as f64 * dt;
        x = integrate_step(&x, t, dt, |tau, y| {
            let s = ConverterState {
                v_cap: y[0],
                i_l: y[1],
                duty: op.duty + amplitude * (omega * tau).sin(),
            };
            plant.derivatives(&s).0
        })
        .map_err(|e| match e {
            Error::Diverged { t, .. } => Error::Diverged {
                t,
                channel: "linearization".into(),
            },
            e => e,
        })?;
        if n + 1 >= settle_steps {
            let t1 = (n + 1) as f64 * dt;
            let s = ConverterState {
                v_cap: x[0],
                i_l: x[1],
                duty: op.duty + amplitude * (omega * t1).sin(),
            };
            let (_, out) = plant.derivatives(&s);
            v.push(out.v_pv - op.v_pv);
            i.push(x[1] - eq.i_l);
        }
    }
    let t0 = settle_steps as f64 * dt;
    let tv = extract_tone(&v, dt, t0, frequency, window)?;
    let ti = extract_tone(&i, dt, t0, frequency, window)?;
    Ok((tv.phasor(), ti.phasor()))
}

/// Numerical frequency response at each of `freqs` (Hz).
pub fn linearize_numeric(
    plant: &BatteryTiedPlant,
    op: &OperatingPoint,
    freqs: &[f64],
    opts: &LinearizeOptions,
) -> Result<Vec<FrequencyPoint>> {
    let residual = plant.residual(op);
    if !(residual <= opts.max_residual) {
        return Err(Error::NotEquilibrium { residual });
    }
    if !(opts.duty_amplitude > 0.0) {
        return Err(Error::config(
            "duty perturbation amplitude must be positive",
        ));
    }
    freqs
        .iter()
        .map(|&f| {
            let (v, i) = measure_response(plant, op, f, opts.duty_amplitude, opts)?;
            Ok(FrequencyPoint {
                frequency: f,
                voltage_per_duty: v / opts.duty_amplitude,
                current_per_voltage: i / v,
            })
        })
        .collect()
}

/// Largest relative change of `ṽ_pv/d̃` when the perturbation is halved.
pub fn linearity_error(
    plant: &BatteryTiedPlant,
    op: &OperatingPoint,
    freqs: &[f64],
    opts: &LinearizeOptions,
) -> Result<f64> {
    let full = linearize_numeric(plant, op, freqs, opts)?;
    let half_opts = LinearizeOptions {
        duty_amplitude: opts.duty_amplitude / 2.0,
        ..*opts
    };
    let half = linearize_numeric(plant, op, freqs, &half_opts)?;
    Ok(full
        .iter()
        .zip(&half)
        .map(|(a, b)| (a.voltage_per_duty - b.voltage_per_duty).norm() / a.voltage_per_duty.norm())
        .fold(0.0, f64::max))
}
