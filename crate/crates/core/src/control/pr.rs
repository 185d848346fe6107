use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::tf::RationalTf;
use crate::{Error, Result};

/// `k_p + k_r·s/(s² + 2·damping·ω_0·s + ω_0²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrParams {
    pub k_p: f64,
    /// Resonant gain, 1/s.
    pub k_r: f64,
    /// Resonant frequency, rad/s.
    pub omega_0: f64,
    pub damping: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PrState {
    pub w1: f64,
    pub w2: f64,
}

/// Coefficients of the resonant branch, `(b0, b2, a1, a2)` with `b1 = 0`.
fn coefficients(p: &PrParams, dt: f64) -> (f64, f64, f64, f64) {
    let w = p.omega_0;
    let k = w / (0.5 * w * dt).tan();
    let k2 = k * k;
    let w2 = w * w;
    let zw = 2.0 * p.damping * w * k;
    let a0 = k2 + zw + w2;
    (
        p.k_r * k / a0,
        -p.k_r * k / a0,
        (2.0 * w2 - 2.0 * k2) / a0,
        (k2 - zw + w2) / a0,
    )
}

impl PrParams {
    pub fn validate(&self, dt: f64) -> Result<()> {
        if !(self.omega_0 > 0.0 && self.k_r > 0.0 && self.k_p >= 0.0 && self.damping >= 0.0) {
            return Err(Error::config(format!("invalid PR parameters {self:?}")));
        }
        if dt >= 0.1 / self.omega_0 {
            return Err(Error::config(format!(
                "dt = {dt} s is too coarse to resolve a {:.1} rad/s resonance",
                self.omega_0
            )));
        }
        Ok(())
    }

    pub fn tf(&self) -> RationalTf {
        let w = self.omega_0;
        let den = vec![w * w, 2.0 * self.damping * w, 1.0];
        let num = vec![
            self.k_p * w * w,
            self.k_p * 2.0 * self.damping * w + self.k_r,
            self.k_p,
        ];
        RationalTf::new(num, den).expect("PR transfer function is well formed")
    }

    /// Frequency response of the discretized controller at `f` Hz.
    pub fn discrete_response(&self, f: f64, dt: f64) -> Complex64 {
        let (b0, b2, a1, a2) = coefficients(self, dt);
        let z1 = Complex64::from_polar(1.0, -std::f64::consts::TAU * f * dt);
        let z2 = z1 * z1;
        self.k_p + (b0 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2)
    }
}

/// One update of the bilinear (prewarped at `ω_0`) PR controller.
pub fn pr_step(p: &PrParams, st: &PrState, error: f64, dt: f64) -> (f64, PrState) {
    let (b0, b2, a1, a2) = coefficients(p, dt);
    let y = b0 * error + st.w1;
    let w1 = st.w2 - a1 * y;
    let w2 = b2 * error - a2 * y;
    (p.k_p * error + y, PrState { w1, w2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn params() -> PrParams {
        PrParams {
            k_p: 10.0,
            k_r: 4000.0,
            omega_0: TAU * 50.0,
            damping: 5e-4,
        }
    }

    #[test]
    fn dc_error_gives_proportional_output() {
        let p = params();
        let mut st = PrState::default();
        for _ in 0..200_000 {
            st = pr_step(&p, &st, 1.0, 20e-6).1;
        }
        // the lightly damped resonator still rings; average over whole periods
        let mut acc = 0.0;
        let n = 20_000;
        for _ in 0..n {
            let (u, next) = pr_step(&p, &st, 1.0, 20e-6);
            st = next;
            acc += u;
        }
        assert!((acc / n as f64 - 10.0).abs() < 0.01);
    }

    #[test]
    fn resonant_gain_and_second_harmonic() {
        let p = params();
        let at_w0 = p.tf().at_hz(50.0).norm();
        assert!(20.0 * (at_w0 / p.k_p).log10() >= 60.0);
        let at_2w0 = p.tf().at_hz(100.0).norm();
        assert!((20.0 * (at_2w0 / p.k_p).log10()).abs() < 3.0);
        let d = p.discrete_response(50.0, 20e-6).norm();
        assert!((d / at_w0 - 1.0).abs() < 1e-6, "{d} vs {at_w0}");
    }

    #[test]
    fn discrete_matches_continuous_below_tenth_of_sample_rate() {
        let p = params();
        for f in [1.0, 10.0, 45.0, 55.0, 200.0, 1000.0, 5000.0] {
            let c = p.tf().at_hz(f);
            let d = p.discrete_response(f, 20e-6);
            assert!((d.norm() / c.norm() - 1.0).abs() < 0.01, "{f} Hz");
        }
    }
}
