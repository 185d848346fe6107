//! The operating control laws, the PLL and the power-margin estimator.

mod bec;
mod filter;
mod grid_tied;
mod margin;
mod mppt;
mod pll;

pub use bec::{bec_step, voltage_step, BatteryTiedState, COLLAPSE_AFTER};
pub use filter::MovingAverage;
pub use grid_tied::{
    grid_tied_step, GridMeasurements, GridTiedOutput, GridTiedParams, GridTiedState,
};
pub use margin::{estimate_margin, MarginEstimate, MarginEstimator};
pub use mppt::{mppt_ic_step, mppt_po_step, mppt_step, MpptAlgorithm, MpptParams, MpptState};
pub use pll::{pll_step, PllParams, PllState};
