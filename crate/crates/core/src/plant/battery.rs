use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Linear battery: open-circuit voltage behind an internal resistance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatteryParams {
    pub v_oc_b: f64,
    pub r_b: f64,
    /// Amp-hours.
    pub ampacity: f64,
}

/// Battery node solution for a given inductor current. `i_b > 0` discharges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryNode {
    pub v_node: f64,
    pub i_b: f64,
    pub i_load: f64,
}

impl Default for BatteryParams {
    fn default() -> Self {
        Self {
            v_oc_b: 192.0,
            r_b: 0.10,
            ampacity: 60.0,
        }
    }
}

impl BatteryParams {
    pub fn validate(&self) -> Result<()> {
        // r_b = 0 is accepted so the lossless plant can be exercised.
        if self.v_oc_b > 0.0 && self.r_b >= 0.0 && self.ampacity > 0.0 {
            Ok(())
        } else {
            Err(Error::config(format!(
                "invalid battery parameters {self:?}"
            )))
        }
    }

    /// One-hour (1C) current, A.
    pub fn rated_current(&self) -> f64 {
        self.ampacity
    }

    /// Thevenin equivalent `(v_th, r_th)` of the battery in parallel with the load,
    /// as seen from the converter output. `r_load = ∞` means no load.
    pub fn thevenin(&self, r_load: f64) -> (f64, f64) {
        if r_load.is_infinite() {
            (self.v_oc_b, self.r_b)
        } else {
            let k = r_load / (r_load + self.r_b);
            (self.v_oc_b * k, self.r_b * k)
        }
    }

    pub fn node(&self, i_l: f64, r_load: f64) -> BatteryNode {
        let (v_th, r_th) = self.thevenin(r_load);
        let v_node = v_th + r_th * i_l;
        let i_load = if r_load.is_infinite() {
            0.0
        } else {
            v_node / r_load
        };
        BatteryNode {
            v_node,
            i_b: i_load - i_l,
            i_load,
        }
    }

    /// Load resistance that draws `power` watts at the open-circuit voltage.
    pub fn load_for_power(&self, power: f64) -> f64 {
        if power <= 0.0 {
            f64::INFINITY
        } else {
            self.v_oc_b * self.v_oc_b / power
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn emulation_target() {
        let b = BatteryParams::default();
        let r = 10.0;
        let i_load = b.v_oc_b / r;
        let n = b.node(i_load, r);
        assert!(n.i_b.abs() < 1e-12);
        assert!((n.v_node - b.v_oc_b).abs() < 1e-12);
    }

    #[test]
    fn no_load_discharge_sign() {
        let b = BatteryParams::default();
        let n = b.node(5.0, f64::INFINITY);
        assert_eq!(n.i_b, -5.0);
        assert!((n.v_node - (192.0 + 0.5)).abs() < 1e-12);
        let n = b.node(0.0, 19.2);
        assert!(n.i_b > 0.0);
    }
}
