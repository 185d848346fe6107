//! Nonlinear averaged plant models and their small-signal transfer functions.

mod battery;
mod converter;
mod linearize;
mod params;
mod pv;
mod small_signal;

pub use battery::{BatteryNode, BatteryParams};
pub use converter::{
    battery_tied_derivatives, bus_voltage, grid_tied_derivatives, BatteryTiedOutputs,
    BatteryTiedPlant, ConverterParams, ConverterState, GridParams, GridTiedOutputs, OperatingPoint,
};
pub use linearize::{
    linearity_error, linearize_numeric, measure_response, FrequencyPoint, LinearizeOptions,
};
pub use params::SystemParams;
pub use pv::{pv_current, pv_dynamic_resistance, PvParams, PvState, MAX_IRRADIANCE};
pub use small_signal::{plant_corners, plant_tf_current, plant_tf_voltage, PlantCorners};
