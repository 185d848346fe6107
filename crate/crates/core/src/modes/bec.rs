//! Battery-tied control: an inner PV-voltage loop producing the duty ratio,
//! and in emulation mode an outer loop regulating battery current to zero.

use crate::control::{pi_lag_step, pi_step, PiLagParams, PiLagState, PiParams, PiState};

/// Saturation lasting longer than this is reported as a margin collapse, s.
pub const COLLAPSE_AFTER: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BatteryTiedState {
    pub inner: PiState,
    pub outer: PiLagState,
    /// Continuous time the duty has been saturated, s.
    pub saturated_for: f64,
}

impl BatteryTiedState {
    /// State that reproduces `duty` with the voltage reference at `v_pv`.
    pub fn bumpless(inner: &PiParams, outer: &PiLagParams, duty: f64, v_pv: f64) -> Self {
        Self {
            inner: PiState::preloaded(inner, duty, 0.0),
            outer: PiLagState::preloaded(outer, v_pv, 0.0),
            saturated_for: 0.0,
        }
    }

    pub fn margin_collapse(&self) -> bool {
        self.saturated_for > COLLAPSE_AFTER
    }
}

/// Inner loop only. The error is `v_pv − v_ref`: raising the duty draws more
/// current and pulls the PV voltage down.
pub fn voltage_step(
    inner: &PiParams,
    st: &BatteryTiedState,
    v_ref: f64,
    v_pv: f64,
    dt: f64,
) -> (f64, BatteryTiedState) {
    let (duty, pi) = pi_step(inner, &st.inner, v_pv - v_ref, dt);
    let saturated_for = if pi.saturated {
        st.saturated_for + dt
    } else {
        0.0
    };
    (
        duty,
        BatteryTiedState {
            inner: pi,
            saturated_for,
            ..*st
        },
    )
}

/// Battery emulation: outer loop drives `i_b` to zero through the PV voltage
/// reference, `perturb` is added to that reference. Returns the duty and the
/// voltage reference before the perturbation.
pub fn bec_step(
    outer: &PiLagParams,
    inner: &PiParams,
    st: &BatteryTiedState,
    i_b: f64,
    v_pv: f64,
    perturb: f64,
    dt: f64,
) -> (f64, f64, BatteryTiedState) {
    let (v_ref, outer_state) = pi_lag_step(outer, &st.outer, -i_b, dt);
    let (duty, next) = voltage_step(inner, st, v_ref + perturb, v_pv, dt);
    (
        duty,
        v_ref,
        BatteryTiedState {
            outer: outer_state,
            ..next
        },
    )
}
