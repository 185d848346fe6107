use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::modes::MarginEstimate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Level {
    L,
    H,
}

impl Level {
    pub fn from_bool(high: bool) -> Self {
        if high {
            Level::H
        } else {
            Level::L
        }
    }

    pub fn is_high(self) -> bool {
        self == Level::H
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::L => "L",
            Level::H => "H",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Flags {
    pub f_grid: Level,
    pub f_chg: Level,
    pub f_g: Level,
}

impl Flags {
    pub fn new(f_grid: Level, f_chg: Level, f_g: Level) -> Self {
        Self { f_grid, f_chg, f_g }
    }

    /// All eight combinations.
    pub fn all() -> impl Iterator<Item = Flags> {
        (0..8u8).map(|k| {
            Flags::new(
                Level::from_bool(k & 4 != 0),
                Level::from_bool(k & 2 != 0),
                Level::from_bool(k & 1 != 0),
            )
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "GT_MPPT")]
    GtMppt,
    #[serde(rename = "BT_MPPT")]
    BtMppt,
    #[serde(rename = "BT_BEC")]
    BtBec,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::GtMppt, Mode::BtMppt, Mode::BtBec];

    pub fn is_battery_tied(self) -> bool {
        self != Mode::GtMppt
    }

    /// Numeric code used in traces.
    pub fn code(self) -> f64 {
        match self {
            Mode::GtMppt => 0.0,
            Mode::BtMppt => 1.0,
            Mode::BtBec => 2.0,
        }
    }

    pub fn from_code(code: f64) -> Option<Self> {
        Mode::ALL.into_iter().find(|m| m.code() == code)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::GtMppt => "GT_MPPT",
            Mode::BtMppt => "BT_MPPT",
            Mode::BtBec => "BT_BEC",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "GT_MPPT" => Ok(Mode::GtMppt),
            "BT_MPPT" => Ok(Mode::BtMppt),
            "BT_BEC" => Ok(Mode::BtBec),
            _ => Err(format!(
                "unknown mode `{s}` (expected GT_MPPT, BT_MPPT or BT_BEC)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub g_r_low: f64,
    pub g_r_high: f64,
    /// A.
    pub i_b_deadband: f64,
    /// s.
    pub debounce: f64,
    /// Time the grid must be continuously present before it counts, s.
    pub grid_qualification: f64,
    /// Time after entering emulation during which f_G is held high, s.
    pub bec_blanking: f64,
}

impl Thresholds {
    /// Defaults for a battery with the given 1C current.
    pub fn for_battery(rated_current: f64) -> Self {
        Self {
            g_r_low: 4.0,
            g_r_high: 1000.0,
            i_b_deadband: 0.005 * rated_current,
            debounce: 0.2,
            grid_qualification: 2.0,
            bec_blanking: 3.0,
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        if 0.0 < self.g_r_low
            && self.g_r_low < self.g_r_high
            && self.i_b_deadband > 0.0
            && self.debounce > 0.0
        {
            Ok(())
        } else {
            Err(crate::Error::config(format!(
                "invalid supervisor thresholds {self:?}"
            )))
        }
    }
}

/// Inputs to the flag computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlagInputs {
    /// PLL locked with grid amplitude in range.
    pub grid_ok: bool,
    /// Averaged battery current, discharge positive.
    pub i_b: f64,
    pub margin: MarginEstimate,
}

/// Flags together with the debounce timers that produce them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlagTracker {
    pub flags: Flags,
    grid_since: Option<f64>,
    charge_since: Option<f64>,
    discharge_since: Option<f64>,
    low_margin_since: Option<f64>,
    margin_ok_since: Option<f64>,
    blank_until: f64,
    /// Last valid estimate was at or above the upper threshold.
    pub near_open_circuit: bool,
}

impl FlagTracker {
    pub fn new(flags: Flags) -> Self {
        Self {
            flags,
            grid_since: None,
            charge_since: None,
            discharge_since: None,
            low_margin_since: None,
            margin_ok_since: None,
            blank_until: f64::NEG_INFINITY,
            near_open_circuit: false,
        }
    }

    /// Forces f_chg low and restarts its timers.
    pub fn reset_charge(&mut self) {
        self.flags.f_chg = Level::L;
        self.charge_since = None;
        self.discharge_since = None;
    }

    /// Forces f_G high and holds it there until `until`.
    pub fn reset_margin(&mut self, until: f64) {
        self.flags.f_g = Level::H;
        self.low_margin_since = None;
        self.margin_ok_since = None;
        self.blank_until = until;
    }
}

fn sustained(since: &mut Option<f64>, active: bool, t: f64, hold: f64) -> bool {
    if !active {
        *since = None;
        return false;
    }
    let start = *since.get_or_insert(t);
    t - start >= hold - 1e-9
}

/// Advances the flags to time `t`.
pub fn update_flags(
    inputs: &FlagInputs,
    th: &Thresholds,
    prev: &FlagTracker,
    t: f64,
) -> FlagTracker {
    let mut next = *prev;
    let flags = &mut next.flags;

    if !inputs.grid_ok {
        flags.f_grid = Level::L;
        next.grid_since = None;
    } else if sustained(&mut next.grid_since, true, t, th.grid_qualification) {
        flags.f_grid = Level::H;
    }

    if sustained(
        &mut next.charge_since,
        inputs.i_b < -th.i_b_deadband,
        t,
        th.debounce,
    ) {
        flags.f_chg = Level::H;
    }
    if sustained(
        &mut next.discharge_since,
        inputs.i_b > th.i_b_deadband,
        t,
        th.debounce,
    ) {
        flags.f_chg = Level::L;
    }

    let m = &inputs.margin;
    if t < next.blank_until {
        flags.f_g = Level::H;
        next.low_margin_since = None;
        next.margin_ok_since = None;
    } else if m.valid {
        next.near_open_circuit = m.g_r >= th.g_r_high;
        if sustained(
            &mut next.low_margin_since,
            m.g_r < th.g_r_low,
            t,
            th.debounce,
        ) {
            flags.f_g = Level::L;
        }
        if sustained(
            &mut next.margin_ok_since,
            m.g_r >= th.g_r_low,
            t,
            th.debounce,
        ) {
            flags.f_g = Level::H;
        }
    } else {
        next.low_margin_since = None;
        next.margin_ok_since = None;
    }
    next
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs(i_b: f64, g_r: f64) -> FlagInputs {
        FlagInputs {
            grid_ok: false,
            i_b,
            margin: MarginEstimate {
                g_tilde: g_r,
                g_dc: 1.0,
                g_r,
                valid: true,
            },
        }
    }

    fn run(inp: FlagInputs, secs: f64) -> Flags {
        let th = Thresholds::for_battery(60.0);
        let mut tr = FlagTracker::new(Flags::new(Level::L, Level::L, Level::H));
        let mut t = 0.0;
        while t <= secs {
            tr = update_flags(&inp, &th, &tr, t);
            t += 0.1;
        }
        tr.flags
    }

    #[test]
    fn low_margin_sets_f_g_low() {
        assert_eq!(run(inputs(0.0, 2.0), 0.5).f_g, Level::L);
        assert_eq!(run(inputs(0.0, 2.0), 0.1).f_g, Level::H);
    }

    #[test]
    fn charging_sets_f_chg() {
        assert_eq!(run(inputs(-3.0, 10.0), 0.5).f_chg, Level::H);
    }

    #[test]
    fn deadband_holds() {
        let th = Thresholds::for_battery(60.0);
        let mut tr = FlagTracker::new(Flags::new(Level::L, Level::H, Level::H));
        for k in 0..50 {
            let i_b = if k % 2 == 0 { 0.1 } else { -0.1 };
            tr = update_flags(&inputs(i_b, 10.0), &th, &tr, k as f64 * 0.1);
        }
        assert_eq!(tr.flags.f_chg, Level::H);
    }

    #[test]
    fn invalid_margin_holds_and_open_circuit_counts_high() {
        let mut inp = inputs(0.0, 2.0);
        inp.margin.valid = false;
        assert_eq!(run(inp, 1.0).f_g, Level::H);
        let th = Thresholds::for_battery(60.0);
        let mut tr = FlagTracker::new(Flags::new(Level::L, Level::L, Level::L));
        for k in 0..10 {
            tr = update_flags(&inputs(0.0, 5000.0), &th, &tr, k as f64 * 0.1);
        }
        assert_eq!(tr.flags.f_g, Level::H);
        assert!(tr.near_open_circuit);
    }

    #[test]
    fn grid_needs_qualification() {
        let th = Thresholds::for_battery(60.0);
        let mut tr = FlagTracker::new(Flags::new(Level::L, Level::L, Level::H));
        let mut inp = inputs(0.0, 10.0);
        inp.grid_ok = true;
        for k in 0..=19 {
            tr = update_flags(&inp, &th, &tr, k as f64 * 0.1);
        }
        assert_eq!(tr.flags.f_grid, Level::L);
        tr = update_flags(&inp, &th, &tr, 2.0);
        assert_eq!(tr.flags.f_grid, Level::H);
        inp.grid_ok = false;
        tr = update_flags(&inp, &th, &tr, 2.1);
        assert_eq!(tr.flags.f_grid, Level::L);
    }
}
