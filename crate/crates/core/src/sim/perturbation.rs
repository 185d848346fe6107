use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Sinusoidal voltage perturbation added to the inner PV voltage-loop reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSource {
    /// Peak amplitude, volts.
    pub amplitude: f64,
    /// Hz.
    pub frequency: f64,
    pub enabled: bool,
}

impl Default for PerturbationSource {
    fn default() -> Self {
        Self {
            amplitude: 4.8,
            frequency: 10.0,
            enabled: true,
        }
    }
}

impl PerturbationSource {
    /// Checks the source against the nominal PV voltage (amplitude capped at 2 %).
    pub fn validate(&self, nominal_v_pv: f64) -> Result<()> {
        if !(self.frequency > 0.0) {
            return Err(Error::config("perturbation frequency must be positive"));
        }
        if self.enabled && !(self.amplitude > 0.0) {
            return Err(Error::config(
                "an enabled perturbation needs a positive amplitude",
            ));
        }
        if self.amplitude > 0.02 * nominal_v_pv {
            return Err(Error::config(format!(
                "perturbation amplitude {} V exceeds 2% of nominal V_pv ({} V)",
                self.amplitude, nominal_v_pv
            )));
        }
        Ok(())
    }

    pub fn value(&self, t: f64) -> f64 {
        inject_perturbation(self, t)
    }
}

pub fn inject_perturbation(src: &PerturbationSource, t: f64) -> f64 {
    if src.enabled {
        src.amplitude * (TAU * src.frequency * t).sin()
    } else {
        0.0
    }
}
