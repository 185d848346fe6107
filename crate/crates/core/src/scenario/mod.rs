//! Scenario files, the closed-loop system runner, reports and Bode export.

mod bode;
mod format;
mod report;
mod sweep;
mod system;

pub use bode::{emit_bode, named_tf, one_two_five, BodeRequest, NamedTf};
pub use format::{
    parse_scenario, serialize_scenario, Action, Assertion, Event, FlagName, ParseError, Scenario,
    ScenarioErrors, SetPoint, CHANNELS,
};
pub use report::{PhaseMetrics, RunReport, Verdict};
pub use sweep::{sweep_mpp, MppSweep};
pub use system::{emulation_voltage, open_circuit_voltage, RunOptions, RunOutput, System};

use std::path::Path;

use crate::Result;

/// Reads and parses a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    Ok(parse_scenario(&text)?)
}
