//! Derivation of every loop gain from the electrical parameters, plus the
//! open-loop transfer functions used to check them.

use std::f64::consts::{SQRT_2, TAU};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::analysis::{margins, Margins};
use super::pi::{PiLagParams, PiParams};
use super::pr::PrParams;
use super::tuning::{pi_tf, tune_pi_for_margin};
use crate::plant::{plant_tf_current, plant_tf_voltage, OperatingPoint, SystemParams};
use crate::tf::RationalTf;
use crate::{Error, Result};

/// Controller update interval assumed by the design, s.
pub const CONTROL_DT: f64 = 20e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignTargets {
    /// Battery-tied PV voltage loop crossover, Hz.
    pub voltage_bw: f64,
    pub voltage_pm: f64,
    /// Battery-current loop crossover, Hz.
    pub current_bw: f64,
    pub current_pm: f64,
    /// Lag corner of the battery-current controller, Hz.
    pub lag_corner: f64,
    /// PV voltage at which the battery-current loop is designed, V.
    pub current_design_v_pv: f64,
    /// Grid-tied PV voltage loop crossover, Hz.
    pub grid_voltage_bw: f64,
    pub grid_voltage_pm: f64,
    /// Grid current loop bandwidth, Hz.
    pub grid_current_bw: f64,
    /// Resonant gain of the grid current controller, 1/s.
    pub resonant_gain: f64,
    /// Resonator damping as a fraction of the grid frequency.
    pub resonant_damping: f64,
    /// PLL natural frequency, Hz.
    pub pll_bw: f64,
    pub pll_damping: f64,
    /// Averaging window of the grid-tied PV voltage measurement, s.
    pub grid_voltage_filter: f64,
    /// Upper limit of the grid current amplitude command, A.
    pub max_grid_current: f64,
}

impl Default for DesignTargets {
    fn default() -> Self {
        Self {
            voltage_bw: 55.0,
            voltage_pm: 35.0,
            current_bw: 0.5,
            current_pm: 80.0,
            lag_corner: 5.0,
            current_design_v_pv: 530.0,
            grid_voltage_bw: 6.0,
            grid_voltage_pm: 50.0,
            grid_current_bw: 800.0,
            resonant_gain: 3500.0,
            resonant_damping: 5e-4,
            pll_bw: 15.0,
            pll_damping: SQRT_2 / 2.0,
            grid_voltage_filter: 0.01,
            max_grid_current: 30.0,
        }
    }
}

/// Every controller gain of the system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlDesign {
    pub targets: DesignTargets,
    /// Battery-tied PV voltage loop (error → duty).
    pub voltage: PiParams,
    /// Battery-current loop (error → PV voltage reference).
    pub current: PiLagParams,
    /// Grid-tied PV voltage loop (error → current amplitude).
    pub grid_voltage: PiParams,
    /// Grid current controller (error → inverter voltage).
    pub grid_current: PrParams,
    /// PLL loop filter (normalized phase error → frequency correction).
    pub pll: PiParams,
}

impl ControlDesign {
    pub fn derive(sys: &SystemParams) -> Result<Self> {
        Self::derive_with(sys, DesignTargets::default())
    }

    pub fn derive_with(sys: &SystemParams, targets: DesignTargets) -> Result<Self> {
        sys.validate()?;
        let pv = &sys.pv;

        let (mpp, _) = OperatingPoint::emulating(pv, 1.0, &sys.battery, &sys.converter, pv.v_mpp)?;
        let gv = -plant_tf_voltage(&mpp, &sys.converter)?;
        let voltage =
            tune_pi_for_margin(&gv, targets.voltage_bw, targets.voltage_pm)?.with_limits(0.0, 1.0);

        let omega_n = TAU * targets.lag_corner;
        let outer = current_plant(sys, &voltage, targets.current_design_v_pv, 1.0, omega_n)?;
        let current = PiLagParams {
            pi: tune_pi_for_margin(&outer, targets.current_bw, targets.current_pm)?
                .with_limits(0.1 * pv.v_oc, pv.v_oc),
            omega_n,
        };

        let mut grid_current = PrParams {
            k_p: TAU * targets.grid_current_bw * sys.converter.l_f,
            k_r: targets.resonant_gain,
            omega_0: sys.grid.omega(),
            damping: targets.resonant_damping,
        };
        // The resonant branch still adds gain near the bandwidth, so k_p is
        // trimmed against the discretized closed loop.
        for _ in 0..50 {
            let bw = grid_current_bandwidth(
                &grid_current,
                sys.converter.l_f,
                sys.converter.r_series,
                CONTROL_DT,
            );
            grid_current.k_p *= targets.grid_current_bw / bw;
            if (bw / targets.grid_current_bw - 1.0).abs() < 1e-9 {
                break;
            }
        }
        let gp = grid_voltage_plant(sys, &targets, pv.v_mpp, 1.0)?;
        let grid_voltage =
            tune_pi_for_margin(&gp, targets.grid_voltage_bw, targets.grid_voltage_pm)?
                .with_limits(0.0, targets.max_grid_current);

        let wn = TAU * targets.pll_bw;
        let pll = PiParams::new(2.0 * targets.pll_damping * wn, wn * wn)
            .with_limits(-0.2 * sys.grid.omega(), 0.2 * sys.grid.omega());

        Ok(Self {
            targets,
            voltage,
            current,
            grid_voltage,
            grid_current,
            pll,
        })
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Params(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("controller parameters serialize")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// `H_v·(−G_pv)` at the emulation equilibrium for `v_pv`, `g`.
    pub fn voltage_loop(&self, sys: &SystemParams, v_pv: f64, g: f64) -> Result<RationalTf> {
        let (op, _) = OperatingPoint::emulating(&sys.pv, g, &sys.battery, &sys.converter, v_pv)?;
        let gv = -plant_tf_voltage(&op, &sys.converter)?;
        Ok(&pi_tf(&self.voltage) * &gv)
    }

    /// Battery-current controller with its lag, as a transfer function.
    pub fn current_controller(&self) -> RationalTf {
        let lag = RationalTf::from_corners(1.0, &[], &[self.current.omega_n])
            .expect("positive lag corner");
        &pi_tf(&self.current.pi) * &lag
    }

    /// Outer loop gain `H_i·lag·(−∂i_B/∂v)·T_v` at the emulation equilibrium.
    pub fn current_loop(&self, sys: &SystemParams, v_pv: f64, g: f64) -> Result<RationalTf> {
        let p = current_plant(sys, &self.voltage, v_pv, g, self.current.omega_n)?;
        Ok(&pi_tf(&self.current.pi) * &p)
    }

    pub fn grid_voltage_loop(&self, sys: &SystemParams, v_pv: f64, g: f64) -> Result<RationalTf> {
        let p = grid_voltage_plant(sys, &self.targets, v_pv, g)?;
        Ok(&pi_tf(&self.grid_voltage) * &p)
    }

    pub fn voltage_margins(&self, sys: &SystemParams, v_pv: f64, g: f64) -> Result<Margins> {
        margins(&self.voltage_loop(sys, v_pv, g)?)
    }

    pub fn current_margins(&self, sys: &SystemParams, v_pv: f64, g: f64) -> Result<Margins> {
        margins(&self.current_loop(sys, v_pv, g)?)
    }
}

/// Outer-loop plant seen by the battery-current controller: the closed
/// voltage loop, the current sensitivity and the lag.
fn current_plant(
    sys: &SystemParams,
    voltage: &PiParams,
    v_pv: f64,
    g: f64,
    omega_n: f64,
) -> Result<RationalTf> {
    let (op, r_load) = OperatingPoint::emulating(&sys.pv, g, &sys.battery, &sys.converter, v_pv)?;
    let lv = &pi_tf(voltage) * &(-plant_tf_voltage(&op, &sys.converter)?);
    let tv = lv.feedback();
    // discharge-positive battery current moves opposite to the inductor current
    let share = r_load / (r_load + sys.battery.r_b);
    let gi = plant_tf_current(&op, &sys.converter)?;
    let lag = RationalTf::from_corners(-share, &[], &[omega_n])?;
    Ok(&(&gi * &tv) * &lag)
}

/// PV voltage response to the grid current amplitude (sign chosen so that a
/// positive controller gain is stabilizing), including the measurement filter
/// and the closed current loop.
pub fn grid_voltage_plant(
    sys: &SystemParams,
    targets: &DesignTargets,
    v_pv: f64,
    g: f64,
) -> Result<RationalTf> {
    let pv = &sys.pv;
    let i = pv.current(v_pv, g)?;
    let r1 = pv.dynamic_resistance(v_pv, g)?;
    let gain = sys.grid.amplitude() / (2.0 * v_pv);
    let bus = RationalTf::new(vec![gain], vec![1.0 / r1 - i / v_pv, sys.converter.c_in])?;
    let filter = RationalTf::from_corners(1.0, &[], &[2.0 / targets.grid_voltage_filter])?;
    let inner = RationalTf::from_corners(1.0, &[], &[TAU * targets.grid_current_bw])?;
    Ok(&(&bus * &filter) * &inner)
}

/// Closed-loop −3 dB bandwidth (Hz) of the discretized grid current loop:
/// PR controller updated every `dt` driving the filter inductor through a
/// zero-order hold.
pub fn grid_current_bandwidth(pr: &PrParams, l_f: f64, r: f64, dt: f64) -> f64 {
    let plant = |f: f64| {
        let z1 = num_complex::Complex64::from_polar(1.0, -TAU * f * dt);
        if r > 0.0 {
            let a = (-r * dt / l_f).exp();
            (1.0 - a) / r * z1 / (1.0 - a * z1)
        } else {
            dt / l_f * z1 / (1.0 - z1)
        }
    };
    let closed = |f: f64| {
        let l = pr.discrete_response(f, dt) * plant(f);
        (l / (1.0 + l)).norm()
    };
    // scan upward from well above the resonance for the −3 dB point
    let target = 0.5f64.sqrt();
    let mut f = 4.0 * pr.omega_0 / TAU;
    let step = 1.001;
    while closed(f) >= target && f < 0.45 / dt {
        f *= step;
    }
    let (mut lo, mut hi) = (f / step, f);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if closed(mid) >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
