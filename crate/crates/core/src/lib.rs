//! Averaged-model simulator and control-design toolkit for a reconfigurable
//! grid-tied PV inverter (RGTI).
//!
//! With the grid present the converter runs as a single-phase grid-tied
//! inverter doing MPPT. During an outage it is reconfigured as a DC-DC buck
//! stage tied to the battery bank of an external UPS, where it either tracks
//! the PV maximum power point or emulates a battery by regulating the
//! physical battery current to zero. A supervisor selects between the three
//! modes from three measured flags and never talks to the UPS.
//!
//! Module map:
//!
//! - [`sim`]: fixed-step RK4 engine, perturbation source, tone extraction, traces
//! - [`plant`]: PV/battery/converter averaged models and small-signal transfer functions
//! - [`tf`]: rational transfer functions in `s`
//! - [`control`]: PI, PI+lag and PR controllers, margin analysis and tuning
//! - [`modes`]: MPPT, PLL, battery emulation, grid-tied control, power-margin estimation
//! - [`supervisor`]: decision flags and the mode-transition table
//! - [`scenario`]: scenario files, the closed-loop system runner, reports and Bode export

// `!(x > 0.0)` deliberately rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod error;
pub mod modes;
pub mod plant;
pub mod scenario;
pub mod sim;
pub mod supervisor;
pub mod tf;

pub use error::{Error, Result};
