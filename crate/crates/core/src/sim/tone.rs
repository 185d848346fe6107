use std::f64::consts::TAU;

use crate::{Error, Result};

/// Amplitude and phase of one frequency component, `x(t) ≈ amplitude·sin(2πft + phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tone {
    pub amplitude: f64,
    pub phase: f64,
}

impl Tone {
    /// The component as a phasor `amplitude·e^{j·phase}`.
    pub fn phasor(&self) -> num_complex::Complex64 {
        num_complex::Complex64::from_polar(self.amplitude, self.phase)
    }
}

/// Single-bin Fourier projection over the trailing `window` seconds of a
/// uniformly sampled channel whose first sample is at `t0`.
///
/// The window must hold an integer number of periods (at least two) and an
/// integer number of samples; under those conditions a pure tone plus DC is
/// recovered exactly and other integer-period harmonics are rejected.
pub fn extract_tone(
    samples: &[f64],
    dt: f64,
    t0: f64,
    frequency: f64,
    window: f64,
) -> Result<Tone> {
    if !(frequency > 0.0) || !(dt > 0.0) {
        return Err(Error::config(
            "tone extraction needs positive frequency and dt",
        ));
    }
    let periods = window * frequency;
    if (periods - periods.round()).abs() > 1e-6 * periods.max(1.0) || periods.round() < 2.0 {
        return Err(Error::config(format!(
            "window {window} s is not an integer number (>= 2) of {frequency} Hz periods"
        )));
    }
    if 1.0 / dt < 10.0 * frequency * (1.0 - 1e-9) {
        return Err(Error::config(format!(
            "sample rate {} Hz is below 10x the tone frequency {frequency} Hz",
            1.0 / dt
        )));
    }
    let n_f = window / dt;
    let n = n_f.round() as usize;
    if (n_f - n as f64).abs() > 1e-6 * n_f {
        return Err(Error::config(format!(
            "window {window} s is not an integer number of samples at dt = {dt} s"
        )));
    }
    if n > samples.len() {
        return Err(Error::config(format!(
            "window needs {n} samples but only {} are available",
            samples.len()
        )));
    }
    let start = samples.len() - n;
    let omega = TAU * frequency;
    let (mut s_acc, mut c_acc) = (0.0, 0.0);
    for (k, x) in samples[start..].iter().enumerate() {
        let t = t0 + (start + k) as f64 * dt;
        let (s, c) = (omega * t).sin_cos();
        s_acc += x * s;
        c_acc += x * c;
    }
    let a = 2.0 * s_acc / n as f64;
    let b = 2.0 * c_acc / n as f64;
    Ok(Tone {
        amplitude: a.hypot(b),
        phase: b.atan2(a),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sampled(f: impl Fn(f64) -> f64, dt: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| f(k as f64 * dt)).collect()
    }

    #[test]
    fn tone_plus_dc() {
        let dt = 1e-4;
        let x = sampled(|t| 3.0 * (TAU * 10.0 * t).sin() + 5.0, dt, 2000);
        let tone = extract_tone(&x, dt, 0.0, 10.0, 0.2).unwrap();
        assert!((tone.amplitude - 3.0).abs() < 1e-9, "{tone:?}");
        assert!(tone.phase.abs() < 1e-9);
    }

    #[test]
    fn dc_is_rejected() {
        let x = vec![7.0; 2000];
        let tone = extract_tone(&x, 1e-4, 0.0, 10.0, 0.2).unwrap();
        assert!(tone.amplitude < 1e-9);
    }

    #[test]
    fn harmonic_is_orthogonal() {
        let dt = 1e-4;
        let x = sampled(
            |t| 3.0 * (TAU * 10.0 * t).sin() + 0.5 * (TAU * 100.0 * t).sin(),
            dt,
            2000,
        );
        let tone = extract_tone(&x, dt, 0.0, 10.0, 0.2).unwrap();
        assert!((tone.amplitude - 3.0).abs() < 1e-6);
    }

    #[test]
    fn phase_is_relative_to_absolute_time() {
        let dt = 1e-4;
        let t0 = 0.3;
        let x: Vec<f64> = (0..4000)
            .map(|k| 2.0 * (TAU * 10.0 * (t0 + k as f64 * dt) + 0.7).sin())
            .collect();
        let tone = extract_tone(&x, dt, t0, 10.0, 0.2).unwrap();
        assert!((tone.amplitude - 2.0).abs() < 1e-9);
        assert!((tone.phase - 0.7).abs() < 1e-9);
    }

    #[test]
    fn window_mismatch_is_a_config_error() {
        let x = vec![0.0; 4000];
        assert!(extract_tone(&x, 1e-4, 0.0, 10.0, 0.25).is_err());
        assert!(extract_tone(&x, 1e-4, 0.0, 10.0, 0.1).is_err());
        assert!(extract_tone(&x, 2e-2, 0.0, 10.0, 0.2).is_err());
        assert!(extract_tone(&x[..100], 1e-4, 0.0, 10.0, 0.2).is_err());
    }
}
