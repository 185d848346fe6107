//! Grid-tied three-loop control: PV voltage loop → current amplitude →
//! resonant current loop → modulation, synchronized by the PLL.

use serde::{Deserialize, Serialize};

use super::filter::MovingAverage;
use super::pll::{pll_step, PllParams, PllState};
use crate::control::{pi_step, pr_step, PiParams, PiState, PrParams, PrState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridTiedParams {
    pub voltage: PiParams,
    pub current: PrParams,
    pub pll: PllParams,
    /// PV voltage averaging window, s.
    pub filter_window: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridMeasurements {
    pub v_g: f64,
    pub i_ac: f64,
    pub v_pv: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GridTiedOutput {
    pub modulation: f64,
    pub i_ref: f64,
    /// Current amplitude command, A.
    pub iq_ref: f64,
    /// Filtered PV voltage used by the voltage loop.
    pub v_pv_filtered: f64,
    pub saturated: bool,
}

#[derive(Debug, Clone)]
pub struct GridTiedState {
    pub pll: PllState,
    pub voltage: PiState,
    pub current: PrState,
    pub v_filter: MovingAverage,
    pub iq_ref: f64,
}

impl GridTiedState {
    pub fn new(p: &GridTiedParams, pll: PllState, v_pv: f64, iq_ref: f64, dt: f64) -> Self {
        let mut v_filter = MovingAverage::with_window(p.filter_window, dt);
        v_filter.reset(v_pv);
        Self {
            pll,
            voltage: PiState::preloaded(&p.voltage, iq_ref, 0.0),
            current: PrState::default(),
            v_filter,
            iq_ref,
        }
    }
}

/// One control update. With `v_ref = None` the voltage loop is bypassed and
/// `iq_override` is the current amplitude command.
pub fn grid_tied_step(
    p: &GridTiedParams,
    st: &mut GridTiedState,
    meas: &GridMeasurements,
    v_ref: Option<f64>,
    iq_override: f64,
    dt: f64,
) -> GridTiedOutput {
    st.pll = pll_step(&p.pll, &st.pll, meas.v_g, dt);
    let v_f = st.v_filter.push(meas.v_pv);
    let v_pv = meas.v_pv.max(1.0);

    if !st.pll.locked {
        st.current = PrState::default();
        let m = (meas.v_g / v_pv).clamp(-1.0, 1.0);
        return GridTiedOutput {
            modulation: m,
            i_ref: 0.0,
            iq_ref: st.iq_ref,
            v_pv_filtered: v_f,
            saturated: (meas.v_g / v_pv).abs() > 1.0,
        };
    }

    st.iq_ref = match v_ref {
        Some(v_ref) => {
            // exporting more current lowers the PV voltage
            let (iq, next) = pi_step(&p.voltage, &st.voltage, v_f - v_ref, dt);
            st.voltage = next;
            iq
        }
        None => {
            st.voltage = PiState::preloaded(&p.voltage, iq_override, 0.0);
            iq_override
        }
    };
    let i_ref = st.iq_ref * st.pll.theta.sin();
    let (u, next) = pr_step(&p.current, &st.current, i_ref - meas.i_ac, dt);
    st.current = next;
    let m = (u + meas.v_g) / v_pv;
    GridTiedOutput {
        modulation: m.clamp(-1.0, 1.0),
        i_ref,
        iq_ref: st.iq_ref,
        v_pv_filtered: v_f,
        saturated: m.abs() > 1.0,
    }
}
