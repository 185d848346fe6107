//! Averaged models of the shared H-bridge stage: as a buck converter feeding
//! the battery node, and as a single-phase inverter feeding the grid.

use std::f64::consts::{SQRT_2, TAU};

use serde::{Deserialize, Serialize};

use super::battery::{BatteryNode, BatteryParams};
use super::pv::PvParams;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConverterParams {
    /// DC-bus capacitance, F.
    pub c_in: f64,
    /// Series resistance of the DC-bus capacitor, Ω.
    pub r_esr: f64,
    /// Total filter inductance `L_f1 + L_f2`, H.
    pub l_f: f64,
    /// LCL filter capacitor, F. Not part of the averaged plant.
    pub c_f: f64,
    /// Inductor winding resistance, Ω.
    pub r_series: f64,
    /// Switching frequency, Hz. Only bounds the averaging assumption.
    pub f_sw: f64,
}

impl Default for ConverterParams {
    fn default() -> Self {
        Self {
            c_in: 1230e-6,
            r_esr: 0.08,
            l_f: 2e-3,
            c_f: 4e-6,
            r_series: 0.05,
            f_sw: 20e3,
        }
    }
}

impl ConverterParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.c_in > 0.0
            && self.l_f > 0.0
            && self.r_esr >= 0.0
            && self.r_series >= 0.0
            && self.c_f >= 0.0
            && self.f_sw > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!(
                "invalid converter parameters {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    pub v_rms: f64,
    pub frequency: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        Self {
            v_rms: 200.0,
            frequency: 50.0,
        }
    }
}

impl GridParams {
    pub fn amplitude(&self) -> f64 {
        SQRT_2 * self.v_rms
    }

    pub fn omega(&self) -> f64 {
        TAU * self.frequency
    }

    pub fn voltage(&self, t: f64, phase: f64) -> f64 {
        self.amplitude() * (self.omega() * t + phase).sin()
    }
}

/// Averaged converter state. `v_cap` is the capacitor voltage behind the
/// ESR; the PV terminal voltage follows algebraically from it.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConverterState {
    pub v_cap: f64,
    /// Inductor current: DC into the battery node, or the AC line current.
    pub i_l: f64,
    pub duty: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryTiedOutputs {
    pub v_pv: f64,
    pub i_pv: f64,
    pub battery: BatteryNode,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridTiedOutputs {
    pub v_pv: f64,
    pub i_pv: f64,
    /// Inverter output voltage `m·v_pv`.
    pub v_inv: f64,
}

/// Solves `v = v_cap + r_esr·(i_pv(v) − draw)` for the PV terminal voltage.
pub fn bus_voltage(pv: &PvParams, g: f64, r_esr: f64, v_cap: f64, draw: f64) -> f64 {
    if r_esr == 0.0 {
        return v_cap;
    }
    let mut v = v_cap;
    for _ in 0..60 {
        let f = v - v_cap - r_esr * (pv.current_unchecked(v, g) - draw);
        let df = 1.0 - r_esr * pv.slope_unchecked(v, g);
        let step = f / df;
        v -= step;
        if step.abs() <= 1e-12 * v.abs().max(1.0) {
            break;
        }
    }
    v
}

/// Right-hand side of the battery-tied buck model: `[dv_cap/dt, di_L/dt]`.
pub fn battery_tied_derivatives(
    s: &ConverterState,
    pv: &PvParams,
    g: f64,
    battery: &BatteryParams,
    conv: &ConverterParams,
    r_load: f64,
) -> ([f64; 2], BatteryTiedOutputs) {
    let draw = s.duty * s.i_l;
    let v_pv = bus_voltage(pv, g, conv.r_esr, s.v_cap, draw);
    let i_pv = pv.current_unchecked(v_pv, g);
    let node = battery.node(s.i_l, r_load);
    let dv = (i_pv - draw) / conv.c_in;
    let di = (s.duty * v_pv - node.v_node - conv.r_series * s.i_l) / conv.l_f;
    (
        [dv, di],
        BatteryTiedOutputs {
            v_pv,
            i_pv,
            battery: node,
        },
    )
}

/// Right-hand side of the grid-tied inverter model with modulation `m`
/// (`duty` is ignored): `[dv_cap/dt, di_ac/dt]`.
pub fn grid_tied_derivatives(
    s: &ConverterState,
    m: f64,
    pv: &PvParams,
    g: f64,
    conv: &ConverterParams,
    v_grid: f64,
) -> ([f64; 2], GridTiedOutputs) {
    let draw = m * s.i_l;
    let v_pv = bus_voltage(pv, g, conv.r_esr, s.v_cap, draw);
    let i_pv = pv.current_unchecked(v_pv, g);
    let v_inv = m * v_pv;
    let dv = (i_pv - draw) / conv.c_in;
    let di = (v_inv - v_grid - conv.r_series * s.i_l) / conv.l_f;
    ([dv, di], GridTiedOutputs { v_pv, i_pv, v_inv })
}

/// The battery-tied plant with its environment bundled for repeated evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryTiedPlant {
    pub pv: PvParams,
    pub irradiance: f64,
    pub battery: BatteryParams,
    pub conv: ConverterParams,
    /// Ω; infinite for no load.
    pub r_load: f64,
}

impl BatteryTiedPlant {
    pub fn derivatives(&self, s: &ConverterState) -> ([f64; 2], BatteryTiedOutputs) {
        battery_tied_derivatives(
            s,
            &self.pv,
            self.irradiance,
            &self.battery,
            &self.conv,
            self.r_load,
        )
    }

    pub fn operating_point(&self, v_pv: f64) -> Result<OperatingPoint> {
        OperatingPoint::battery_tied(
            &self.pv,
            self.irradiance,
            &self.battery,
            &self.conv,
            self.r_load,
            v_pv,
        )
    }

    pub fn residual(&self, op: &OperatingPoint) -> f64 {
        op.residual(
            &self.pv,
            self.irradiance,
            &self.battery,
            &self.conv,
            self.r_load,
        )
    }
}

/// DC operating point of the battery-tied buck stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub v_pv: f64,
    pub i_pv: f64,
    pub duty: f64,
    /// Thevenin voltage of the battery node.
    pub v_b: f64,
    /// PV dynamic resistance.
    pub r1: f64,
    /// Total series resistance between the switch node and the battery EMF.
    pub r2: f64,
}

impl OperatingPoint {
    /// Equilibrium of the buck stage with the PV held at `v_pv`.
    pub fn battery_tied(
        pv: &PvParams,
        g: f64,
        battery: &BatteryParams,
        conv: &ConverterParams,
        r_load: f64,
        v_pv: f64,
    ) -> Result<Self> {
        let i_pv = pv.current(v_pv, g)?;
        if i_pv < 0.0 {
            return Err(Error::config(format!(
                "v_pv = {v_pv} V is above open circuit"
            )));
        }
        let r1 = pv.dynamic_resistance(v_pv, g)?;
        let (v_b, r_th) = battery.thevenin(r_load);
        let r2 = conv.r_series + r_th;
        let duty = (v_b + (v_b * v_b + 4.0 * v_pv * r2 * i_pv).sqrt()) / (2.0 * v_pv);
        if duty > 1.0 {
            return Err(Error::config(format!(
                "v_pv = {v_pv} V cannot support the battery voltage (D = {duty:.3})"
            )));
        }
        let op = Self {
            v_pv,
            i_pv,
            duty,
            v_b,
            r1,
            r2,
        };
        op.validate()?;
        Ok(op)
    }

    /// Equilibrium at `v_pv` with the load sized so the battery current is
    /// exactly zero, i.e. the steady state of battery emulation.
    pub fn emulating(
        pv: &PvParams,
        g: f64,
        battery: &BatteryParams,
        conv: &ConverterParams,
        v_pv: f64,
    ) -> Result<(Self, f64)> {
        let i_pv = pv.current(v_pv, g)?;
        if !(i_pv > 0.0) {
            return Err(Error::config(format!(
                "no PV current at {v_pv} V to carry a load"
            )));
        }
        let v_b = battery.v_oc_b;
        let duty = (v_b + (v_b * v_b + 4.0 * v_pv * conv.r_series * i_pv).sqrt()) / (2.0 * v_pv);
        let r_load = v_b * duty / i_pv;
        Ok((
            Self::battery_tied(pv, g, battery, conv, r_load, v_pv)?,
            r_load,
        ))
    }

    pub fn i_l(&self) -> f64 {
        self.i_pv / self.duty
    }

    /// `2·D·V_pv − V_B`.
    pub fn gain_term(&self) -> f64 {
        2.0 * self.duty * self.v_pv - self.v_b
    }

    pub fn state(&self) -> ConverterState {
        ConverterState {
            v_cap: self.v_pv,
            i_l: self.i_l(),
            duty: self.duty,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r1 > 0.0 && self.r1.is_finite() && self.r2 >= 0.0) {
            return Err(Error::config(format!(
                "operating point needs 0 < R1 < ∞ and R2 >= 0 (R1 = {}, R2 = {})",
                self.r1, self.r2
            )));
        }
        if self.gain_term().abs() <= 1e-12 * self.v_pv.abs().max(1.0) {
            return Err(Error::SingularOperatingPoint);
        }
        Ok(())
    }

    /// Relative residual of the averaged model at this point.
    pub fn residual(
        &self,
        pv: &PvParams,
        g: f64,
        battery: &BatteryParams,
        conv: &ConverterParams,
        r_load: f64,
    ) -> f64 {
        let ([dv, di], _) = battery_tied_derivatives(&self.state(), pv, g, battery, conv, r_load);
        let dv_scale = self.i_pv.abs().max(1e-3) / conv.c_in;
        let di_scale = self.v_pv / conv.l_f;
        (dv / dv_scale).abs().max((di / di_scale).abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (PvParams, BatteryParams, ConverterParams) {
        (
            PvParams::table1(),
            BatteryParams::default(),
            ConverterParams::default(),
        )
    }

    #[test]
    fn open_switch_limits() {
        let (pv, b, c) = setup();
        let s = ConverterState {
            v_cap: 300.0,
            i_l: 0.0,
            duty: 0.0,
        };
        let ([dv, di], out) = battery_tied_derivatives(&s, &pv, 1.0, &b, &c, f64::INFINITY);
        assert!((di - (-b.v_oc_b / c.l_f)).abs() < 1e-9);
        assert!((dv - out.i_pv / c.c_in).abs() < 1e-9 && dv > 0.0);
    }

    #[test]
    fn equilibrium_duty_at_rating() {
        let (pv, b, c) = setup();
        let op = OperatingPoint::battery_tied(&pv, 1.0, &b, &c, f64::INFINITY, 480.0).unwrap();
        assert!((0.38..=0.45).contains(&op.duty), "{}", op.duty);
        assert!(op.residual(&pv, 1.0, &b, &c, f64::INFINITY) < 1e-9);
        let (bec, r_load) = OperatingPoint::emulating(&pv, 1.0, &b, &c, 480.0).unwrap();
        assert!(b.node(bec.i_l(), r_load).i_b.abs() < 1e-9);
        assert!(bec.residual(&pv, 1.0, &b, &c, r_load) < 1e-9);
        let lossless = BatteryParams { r_b: 0.0, ..b };
        let c0 = ConverterParams {
            r_series: 0.0,
            r_esr: 0.0,
            ..c
        };
        let op =
            OperatingPoint::battery_tied(&pv, 1.0, &lossless, &c0, f64::INFINITY, 480.0).unwrap();
        assert!((op.duty - 0.4).abs() < 1e-12);
    }

    #[test]
    fn shorted_bridge() {
        let (pv, _, c) = setup();
        let s = ConverterState {
            v_cap: 400.0,
            i_l: 0.0,
            duty: 0.0,
        };
        let ([_, di], _) = grid_tied_derivatives(&s, 0.0, &pv, 1.0, &c, 150.0);
        assert!((di + 150.0 / c.l_f).abs() < 1e-9);
    }

    #[test]
    fn esr_drop() {
        let (pv, _, c) = setup();
        let v = bus_voltage(&pv, 1.0, c.r_esr, 480.0, 10.0);
        let residual = v - 480.0 - c.r_esr * (pv.current_unchecked(v, 1.0) - 10.0);
        assert!(residual.abs() < 1e-9);
        assert!(v < 480.0);
    }
}
