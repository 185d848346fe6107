//! Controller primitives, frequency-domain analysis and loop design.

mod analysis;
mod design;
mod pi;
mod pr;
mod tuning;

pub use analysis::{freq_response, margins, Crossing, Margins};
pub use design::{
    grid_current_bandwidth, grid_voltage_plant, ControlDesign, DesignTargets, CONTROL_DT,
};
pub use pi::{pi_lag_step, pi_step, PiLagParams, PiLagState, PiParams, PiState};
pub use pr::{pr_step, PrParams, PrState};
pub use tuning::{pi_tf, tune_pi_for_margin};
