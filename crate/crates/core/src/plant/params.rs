use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BatteryParams, ConverterParams, GridParams, PvParams};
use crate::{Error, Result};

/// Complete electrical parameter set, loadable from a TOML file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub pv: PvParams,
    pub battery: BatteryParams,
    pub converter: ConverterParams,
    pub grid: GridParams,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            pv: PvParams::table1(),
            battery: BatteryParams::default(),
            converter: ConverterParams::default(),
            grid: GridParams::default(),
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        self.pv.validate()?;
        self.battery.validate()?;
        self.converter.validate()?;
        if !(self.grid.v_rms > 0.0) || ![50.0, 60.0].contains(&self.grid.frequency) {
            return Err(Error::config(format!(
                "invalid grid parameters {:?}",
                self.grid
            )));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let p: Self = toml::from_str(text).map_err(|e| Error::Params(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("parameters serialize")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }
}
