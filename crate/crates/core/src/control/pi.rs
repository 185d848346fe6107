use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiParams {
    pub k_p: f64,
    /// Integral gain, 1/s.
    pub k_i: f64,
    pub min: f64,
    pub max: f64,
    /// Conditional integration: freeze the integrator while saturated and the
    /// error pushes further into saturation.
    pub anti_windup: bool,
}

impl PiParams {
    pub fn new(k_p: f64, k_i: f64) -> Self {
        Self {
            k_p,
            k_i,
            min: f64::NEG_INFINITY,
            max: f64::INFINITY,
            anti_windup: true,
        }
    }

    pub fn with_limits(mut self, min: f64, max: f64) -> Self {
        self.min = min;
        self.max = max;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_p >= 0.0 && self.k_i.is_finite() && self.min < self.max {
            Ok(())
        } else {
            Err(Error::config(format!("invalid PI parameters {self:?}")))
        }
    }

    /// Corner `k_i/k_p` of `k_p·(1 + ω/s)`, rad/s.
    pub fn corner(&self) -> f64 {
        if self.k_p == 0.0 {
            f64::INFINITY
        } else {
            self.k_i / self.k_p
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PiState {
    pub integrator: f64,
    pub prev_error: f64,
    pub saturated: bool,
}

impl PiState {
    /// State whose next output equals `output` when the next error is `error`.
    pub fn preloaded(p: &PiParams, output: f64, error: f64) -> Self {
        Self {
            integrator: clamp(output - p.k_p * error, p.min, p.max),
            prev_error: error,
            saturated: false,
        }
    }
}

fn clamp(x: f64, lo: f64, hi: f64) -> f64 {
    x.max(lo).min(hi)
}

/// One trapezoidal PI update. Returns the clamped output and the new state.
pub fn pi_step(p: &PiParams, st: &PiState, error: f64, dt: f64) -> (f64, PiState) {
    let candidate = st.integrator + 0.5 * p.k_i * dt * (error + st.prev_error);
    let unclamped = p.k_p * error + candidate;
    let high = unclamped > p.max;
    let low = unclamped < p.min;
    let pushing = (high && error * p.k_i > 0.0) || (low && error * p.k_i < 0.0);
    let integrator = if p.anti_windup && pushing {
        st.integrator
    } else if p.anti_windup {
        clamp(candidate, p.min, p.max)
    } else {
        candidate
    };
    let out = p.k_p * error + integrator;
    let clamped = clamp(out, p.min, p.max);
    (
        clamped,
        PiState {
            integrator,
            prev_error: error,
            saturated: clamped != out,
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiLagParams {
    pub pi: PiParams,
    /// Lag corner, rad/s.
    pub omega_n: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PiLagState {
    pub pi: PiState,
    pub lag_out: f64,
    pub lag_in: f64,
}

impl PiLagState {
    pub fn preloaded(p: &PiLagParams, output: f64, error: f64) -> Self {
        Self {
            pi: PiState::preloaded(&p.pi, output, error),
            lag_out: output,
            lag_in: output,
        }
    }
}

/// PI followed by a first-order lag `1/(1 + s/ω_n)`, both bilinear.
pub fn pi_lag_step(p: &PiLagParams, st: &PiLagState, error: f64, dt: f64) -> (f64, PiLagState) {
    let (u, pi) = pi_step(&p.pi, &st.pi, error, dt);
    let k = 2.0 / (dt * p.omega_n);
    let y = (u + st.lag_in - (1.0 - k) * st.lag_out) / (1.0 + k);
    (
        y,
        PiLagState {
            pi,
            lag_out: y,
            lag_in: u,
        },
    )
}
