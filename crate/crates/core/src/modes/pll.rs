//! Single-phase PLL: a resonant-integrator pair (second-order generalized
//! integrator) produces the quadrature signal, and a PI on the normalized
//! phase error drives the frequency estimate.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::control::{pi_step, PiParams, PiState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PllParams {
    pub nominal_omega: f64,
    pub nominal_amplitude: f64,
    /// Quadrature generator gain.
    pub sogi_gain: f64,
    pub loop_filter: PiParams,
    /// Phase error below which lock is declared, degrees.
    pub lock_threshold: f64,
    /// Phase error above which lock is dropped, degrees.
    pub unlock_threshold: f64,
    /// Grid cycles the error must stay below `lock_threshold`.
    pub lock_cycles: f64,
    /// Fraction of the nominal amplitude below which the grid counts as absent.
    pub min_amplitude: f64,
}

impl PllParams {
    pub fn new(nominal_omega: f64, nominal_amplitude: f64, loop_filter: PiParams) -> Self {
        Self {
            nominal_omega,
            nominal_amplitude,
            sogi_gain: std::f64::consts::SQRT_2,
            loop_filter,
            lock_threshold: 2.0,
            unlock_threshold: 10.0,
            lock_cycles: 2.0,
            min_amplitude: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PllState {
    /// Estimated grid phase, rad in [0, 2π).
    pub theta: f64,
    /// Estimated frequency, rad/s.
    pub omega: f64,
    /// In-phase and quadrature outputs of the generator.
    pub alpha: f64,
    pub beta: f64,
    pub filter: PiState,
    pub locked: bool,
    /// Time the error has stayed below the lock threshold, s.
    pub in_lock_for: f64,
    pub prev_input: f64,
    /// Phase error, rad.
    pub error: f64,
}

impl PllState {
    /// Unlocked state at nominal frequency with no signal.
    pub fn idle(p: &PllParams) -> Self {
        Self {
            theta: 0.0,
            omega: p.nominal_omega,
            alpha: 0.0,
            beta: 0.0,
            filter: PiState::default(),
            locked: false,
            in_lock_for: 0.0,
            prev_input: 0.0,
            error: 0.0,
        }
    }

    /// Already locked to `amplitude·sin(phase)` at nominal frequency.
    pub fn locked_to(p: &PllParams, amplitude: f64, phase: f64) -> Self {
        let (s, c) = phase.sin_cos();
        Self {
            theta: phase.rem_euclid(TAU),
            alpha: amplitude * s,
            beta: -amplitude * c,
            locked: true,
            in_lock_for: p.lock_cycles * TAU / p.nominal_omega,
            prev_input: amplitude * s,
            ..Self::idle(p)
        }
    }

    pub fn amplitude(&self) -> f64 {
        self.alpha.hypot(self.beta)
    }
}

/// Advances the PLL by one sample of the grid voltage.
pub fn pll_step(p: &PllParams, st: &PllState, v_g: f64, dt: f64) -> PllState {
    // bilinear discretization of  x' = ω·([−k −1; 1 0]·x + [k; 0]·v)
    let w = st
        .omega
        .max(0.5 * p.nominal_omega)
        .min(1.5 * p.nominal_omega);
    let h = 0.5 * dt * w;
    let k = p.sogi_gain;
    // M = I − h·A, N = I + h·A with A = [−k −1; 1 0]
    let (m11, m12, m21, m22) = (1.0 + h * k, h, -h, 1.0);
    let det = m11 * m22 - m12 * m21;
    let (n11, n12, n21, n22) = (1.0 - h * k, -h, h, 1.0);
    let rhs_a = n11 * st.alpha + n12 * st.beta + h * k * (v_g + st.prev_input);
    let rhs_b = n21 * st.alpha + n22 * st.beta;
    let alpha = (m22 * rhs_a - m12 * rhs_b) / det;
    let beta = (m11 * rhs_b - m21 * rhs_a) / det;

    let amp = alpha.hypot(beta);
    let present = amp > p.min_amplitude * p.nominal_amplitude;
    // phase predicted at this sample
    let theta = (st.theta + st.omega * dt).rem_euclid(TAU);
    let (s, c) = theta.sin_cos();
    let error = if present {
        ((alpha * c + beta * s) / amp).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    let (correction, filter) = if present {
        pi_step(&p.loop_filter, &st.filter, error, dt)
    } else {
        (st.filter.integrator, st.filter)
    };
    let omega = p.nominal_omega + correction;

    let err_deg = error.asin().to_degrees().abs();
    let in_lock_for = if present && err_deg < p.lock_threshold {
        st.in_lock_for + dt
    } else {
        0.0
    };
    let locked = if !present || err_deg > p.unlock_threshold {
        false
    } else {
        st.locked || in_lock_for >= p.lock_cycles * TAU / p.nominal_omega
    };
    PllState {
        theta,
        omega,
        alpha,
        beta,
        filter,
        locked,
        in_lock_for,
        prev_input: v_g,
        error: error.asin(),
    }
}
