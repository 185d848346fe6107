use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Fastest closed-loop bandwidth the engine has to resolve (grid current loop).
pub const FASTEST_BANDWIDTH_HZ: f64 = 800.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Integration step, seconds. Controllers update once per step.
    pub dt: f64,
    /// End time, seconds.
    pub t_end: f64,
    /// Record every n-th step in the trace.
    pub sample_decimation: usize,
    /// Grid frequency, Hz (50 or 60).
    pub grid_frequency: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 20e-6,
            t_end: 1.0,
            sample_decimation: 10,
            grid_frequency: 50.0,
        }
    }
}

impl SimConfig {
    pub fn with_t_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let dt_max = 1.0 / (20.0 * FASTEST_BANDWIDTH_HZ);
        if !(self.dt > 0.0 && self.dt <= dt_max * (1.0 + 1e-12)) {
            return Err(Error::config(format!(
                "dt = {} s must be in (0, {dt_max}] s",
                self.dt
            )));
        }
        if !(self.t_end > self.dt) {
            return Err(Error::config(format!(
                "t_end = {} s must exceed dt = {} s",
                self.t_end, self.dt
            )));
        }
        if self.sample_decimation == 0 {
            return Err(Error::config("sample_decimation must be at least 1"));
        }
        if self.grid_frequency != 50.0 && self.grid_frequency != 60.0 {
            return Err(Error::config(format!(
                "grid_frequency = {} Hz must be 50 or 60",
                self.grid_frequency
            )));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn sample_interval(&self) -> f64 {
        self.dt * self.sample_decimation as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        SimConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_coarse_step_and_odd_grid() {
        let c = SimConfig {
            dt: 1e-4,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = SimConfig {
            grid_frequency: 55.0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = SimConfig {
            t_end: 1e-5,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = SimConfig {
            dt: 62.5e-6,
            ..Default::default()
        };
        c.validate().unwrap();
    }
}
