//! Frequency-response export of the plant, controller and loop transfer functions.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use super::system::System;
use crate::control::{freq_response, margins, pi_tf};
use crate::plant::{
    linearize_numeric, plant_tf_current, plant_tf_voltage, BatteryTiedPlant, LinearizeOptions,
    OperatingPoint,
};
use crate::tf::RationalTf;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedTf {
    /// PV voltage per duty ratio.
    Gpv,
    /// Inductor current per PV voltage.
    Gpi,
    /// PV voltage controller.
    Hv,
    /// Battery current controller with its lag.
    Hi,
    /// Grid current resonant controller.
    H2,
    LoopV,
    LoopI,
}

impl NamedTf {
    pub const ALL: [NamedTf; 7] = [
        NamedTf::Gpv,
        NamedTf::Gpi,
        NamedTf::Hv,
        NamedTf::Hi,
        NamedTf::H2,
        NamedTf::LoopV,
        NamedTf::LoopI,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NamedTf::Gpv => "Gpv",
            NamedTf::Gpi => "Gpi",
            NamedTf::Hv => "Hv",
            NamedTf::Hi => "Hi",
            NamedTf::H2 => "H2",
            NamedTf::LoopV => "loop_v",
            NamedTf::LoopI => "loop_i",
        }
    }

    fn is_loop(self) -> bool {
        matches!(self, NamedTf::LoopV | NamedTf::LoopI)
    }
}

impl fmt::Display for NamedTf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NamedTf {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NamedTf::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownTf(s.to_string()))
    }
}

/// Operating point and frequency grid for a Bode export.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodeRequest {
    pub tf: NamedTf,
    /// PV voltage of the battery-emulation equilibrium the plant is linearized at.
    pub v_pv: f64,
    pub irradiance: f64,
    pub f_min: f64,
    pub f_max: f64,
    pub points_per_decade: usize,
    /// Add columns from numerical linearization of the nonlinear model.
    pub numeric: bool,
}

impl BodeRequest {
    pub fn new(tf: NamedTf, sys: &System) -> Self {
        Self {
            tf,
            v_pv: sys.params.pv.v_mpp,
            irradiance: 1.0,
            f_min: 0.1,
            f_max: 1000.0,
            points_per_decade: 20,
            numeric: false,
        }
    }
}

/// The named transfer function at the requested operating point.
pub fn named_tf(sys: &System, req: &BodeRequest) -> Result<RationalTf> {
    let p = &sys.params;
    let d = &sys.design;
    let op = || {
        OperatingPoint::emulating(&p.pv, req.irradiance, &p.battery, &p.converter, req.v_pv)
            .map(|x| x.0)
    };
    match req.tf {
        NamedTf::Gpv => plant_tf_voltage(&op()?, &p.converter),
        NamedTf::Gpi => plant_tf_current(&op()?, &p.converter),
        NamedTf::Hv => Ok(pi_tf(&d.voltage)),
        NamedTf::Hi => Ok(d.current_controller()),
        NamedTf::H2 => Ok(d.grid_current.tf()),
        NamedTf::LoopV => d.voltage_loop(p, req.v_pv, req.irradiance),
        NamedTf::LoopI => d.current_loop(p, req.v_pv, req.irradiance),
    }
}

/// Frequencies of the 1-2-5 series inside `[lo, hi]`; each has a whole
/// number of simulation steps per period.
pub fn one_two_five(lo: f64, hi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut decade = 10f64.powf(lo.log10().floor());
    while decade <= hi * (1.0 + 1e-12) {
        for m in [1.0, 2.0, 5.0] {
            let f = m * decade;
            let f = (f * 1e6).round() / 1e6;
            if f >= lo * (1.0 - 1e-12) && f <= hi * (1.0 + 1e-12) {
                out.push(f);
            }
        }
        decade *= 10.0;
    }
    out
}

/// CSV of `f,dB,deg` rows on a logarithmic grid. With `numeric`, rows sit on
/// the 1-2-5 series and carry the simulated response as extra columns. Loop
/// transfer functions end with a margin summary comment.
pub fn emit_bode(sys: &System, req: &BodeRequest) -> Result<String> {
    if !(req.f_min > 0.0 && req.f_max > req.f_min && req.points_per_decade > 0) {
        return Err(Error::config(format!(
            "invalid frequency range [{}, {}] Hz with {} points per decade",
            req.f_min, req.f_max, req.points_per_decade
        )));
    }
    let tf = named_tf(sys, req)?;
    let mut s = String::new();
    if req.numeric {
        if !matches!(req.tf, NamedTf::Gpv | NamedTf::Gpi) {
            return Err(Error::config(format!(
                "numeric response is only available for plants, not {}",
                req.tf
            )));
        }
        let p = &sys.params;
        let (op, r_load) =
            OperatingPoint::emulating(&p.pv, req.irradiance, &p.battery, &p.converter, req.v_pv)?;
        let plant = BatteryTiedPlant {
            pv: p.pv,
            irradiance: req.irradiance,
            battery: p.battery,
            conv: p.converter,
            r_load,
        };
        let freqs = one_two_five(req.f_min, req.f_max);
        let points = linearize_numeric(&plant, &op, &freqs, &LinearizeOptions::default())?;
        s.push_str("f,dB,deg,numeric_dB,numeric_deg\n");
        for pt in points {
            let (db, deg) = freq_response(&tf, pt.frequency);
            let g = match req.tf {
                NamedTf::Gpv => pt.voltage_per_duty,
                _ => pt.current_per_voltage,
            };
            let _ = writeln!(
                s,
                "{},{db:.6},{deg:.6},{:.6},{:.6}",
                pt.frequency,
                20.0 * g.norm().log10(),
                g.arg().to_degrees()
            );
        }
    } else {
        s.push_str("f,dB,deg\n");
        let decades = (req.f_max / req.f_min).log10();
        let n = (decades * req.points_per_decade as f64).round() as usize;
        for k in 0..=n {
            let f = req.f_min * 10f64.powf(k as f64 / req.points_per_decade as f64);
            let (db, deg) = freq_response(&tf, f);
            let _ = writeln!(s, "{f:.6e},{db:.6},{deg:.6}");
        }
    }
    if req.tf.is_loop() {
        let m = margins(&tf)?;
        let _ = writeln!(
            s,
            "# crossover_hz={:.4} phase_margin_deg={:.3} gain_margin_db={:.3} min_phase_margin_deg={:.3}",
            m.crossover,
            m.phase_margin,
            m.gain_margin,
            m.min_phase_margin()
        );
    }
    Ok(s)
}
