use std::fmt::Write as _;
use std::io::Write;

use super::flags::{update_flags, FlagInputs, FlagTracker, Flags, Level, Mode, Thresholds};
use crate::Result;

/// Mode-transition table, completed so grid presence always selects the
/// grid-tied mode.
pub fn next_mode(current: Mode, flags: Flags) -> Mode {
    if flags.f_grid.is_high() {
        return Mode::GtMppt;
    }
    match current {
        Mode::GtMppt => Mode::BtMppt,
        Mode::BtMppt if flags.f_chg.is_high() => Mode::BtBec,
        Mode::BtMppt => Mode::BtMppt,
        Mode::BtBec if flags.f_g.is_high() => Mode::BtBec,
        Mode::BtBec => Mode::BtMppt,
    }
}

/// One row of the published transition table; `None` is "don't care".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableRow {
    pub number: u8,
    pub present: Mode,
    pub f_grid: Level,
    pub f_chg: Option<Level>,
    pub f_g: Option<Level>,
    pub next: Mode,
}

impl TableRow {
    pub fn matches(&self, mode: Mode, flags: Flags) -> bool {
        self.present == mode
            && self.f_grid == flags.f_grid
            && self.f_chg.is_none_or(|l| l == flags.f_chg)
            && self.f_g.is_none_or(|l| l == flags.f_g)
    }
}

pub const TABLE: [TableRow; 6] = [
    TableRow {
        number: 1,
        present: Mode::GtMppt,
        f_grid: Level::H,
        f_chg: None,
        f_g: None,
        next: Mode::GtMppt,
    },
    TableRow {
        number: 2,
        present: Mode::GtMppt,
        f_grid: Level::L,
        f_chg: None,
        f_g: None,
        next: Mode::BtMppt,
    },
    TableRow {
        number: 3,
        present: Mode::BtMppt,
        f_grid: Level::L,
        f_chg: Some(Level::L),
        f_g: None,
        next: Mode::BtMppt,
    },
    TableRow {
        number: 4,
        present: Mode::BtMppt,
        f_grid: Level::L,
        f_chg: Some(Level::H),
        f_g: None,
        next: Mode::BtBec,
    },
    TableRow {
        number: 5,
        present: Mode::BtBec,
        f_grid: Level::L,
        f_chg: None,
        f_g: Some(Level::H),
        next: Mode::BtBec,
    },
    TableRow {
        number: 6,
        present: Mode::BtBec,
        f_grid: Level::L,
        f_chg: None,
        f_g: Some(Level::L),
        next: Mode::BtMppt,
    },
];

#[derive(Debug, Clone, PartialEq)]
pub struct FsmCase {
    pub mode: Mode,
    pub flags: Flags,
    pub next: Mode,
    /// Table row covering this case, if any.
    pub row: Option<u8>,
    pub agrees: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FsmReport {
    pub cases: Vec<FsmCase>,
    /// Table rows exercised by at least one case.
    pub rows_covered: Vec<u8>,
}

impl FsmReport {
    pub fn passed(&self) -> bool {
        self.cases.iter().all(|c| c.agrees) && self.rows_covered.len() == TABLE.len()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("mode,f_grid,f_chg,f_G,next,row,verdict\n");
        for c in &self.cases {
            let row = c.row.map_or("completion".to_string(), |r| r.to_string());
            let verdict = if c.agrees { "ok" } else { "MISMATCH" };
            let _ = writeln!(
                s,
                "{},{},{},{},{},{row},{verdict}",
                c.mode, c.flags.f_grid, c.flags.f_chg, c.flags.f_g, c.next
            );
        }
        s
    }
}

/// Brute-force check of [`next_mode`] over every mode and flag combination.
/// Rows not covered by the table must go to the grid-tied mode (grid
/// present in a battery-tied mode).
pub fn fsm_check() -> FsmReport {
    let mut cases = Vec::new();
    let mut rows_covered = Vec::new();
    for mode in Mode::ALL {
        for flags in Flags::all() {
            let next = next_mode(mode, flags);
            let row = TABLE.iter().find(|r| r.matches(mode, flags));
            let agrees = match row {
                Some(r) => r.next == next,
                None => flags.f_grid.is_high() && next == Mode::GtMppt,
            };
            if let Some(r) = row {
                if !rows_covered.contains(&r.number) {
                    rows_covered.push(r.number);
                }
            }
            cases.push(FsmCase {
                mode,
                flags,
                next,
                row: row.map(|r| r.number),
                agrees,
            });
        }
    }
    rows_covered.sort_unstable();
    FsmReport {
        cases,
        rows_covered,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub t: f64,
    pub from: Mode,
    pub to: Mode,
    pub flags: Flags,
    pub g_r: f64,
    pub i_b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SupervisorEvent {
    Transition(Transition),
    /// More than the allowed number of transitions inside the chatter window.
    Chatter {
        t: f64,
        count: usize,
    },
    NearOpenCircuit {
        t: f64,
        g_r: f64,
    },
    MarginCollapse {
        t: f64,
    },
}

pub const CHATTER_LIMIT: usize = 5;
pub const CHATTER_WINDOW: f64 = 10.0;

/// Owns the operating mode and applies the transition table on each tick.
#[derive(Debug, Clone)]
pub struct Supervisor {
    pub thresholds: Thresholds,
    mode: Mode,
    tracker: FlagTracker,
    last_transition: f64,
    transitions: Vec<Transition>,
    events: Vec<SupervisorEvent>,
}

impl Supervisor {
    pub fn new(mode: Mode, flags: Flags, thresholds: Thresholds) -> Self {
        Self {
            thresholds,
            mode,
            tracker: FlagTracker::new(flags),
            last_transition: f64::NEG_INFINITY,
            transitions: Vec::new(),
            events: Vec::new(),
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn flags(&self) -> Flags {
        self.tracker.flags
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn events(&self) -> &[SupervisorEvent] {
        &self.events
    }

    pub fn note(&mut self, event: SupervisorEvent) {
        self.events.push(event);
    }

    /// Updates the flags and, if the table calls for it and the minimum dwell
    /// has elapsed, switches mode. Returns the transition taken.
    pub fn tick(&mut self, t: f64, inputs: &FlagInputs) -> Option<Transition> {
        let was_near_oc = self.tracker.near_open_circuit;
        self.tracker = update_flags(inputs, &self.thresholds, &self.tracker, t);
        if self.tracker.near_open_circuit && !was_near_oc && self.mode == Mode::BtBec {
            self.events.push(SupervisorEvent::NearOpenCircuit {
                t,
                g_r: inputs.margin.g_r,
            });
        }
        let next = next_mode(self.mode, self.tracker.flags);
        if next == self.mode || t - self.last_transition < self.thresholds.debounce {
            return None;
        }
        let tr = Transition {
            t,
            from: self.mode,
            to: next,
            flags: self.tracker.flags,
            g_r: inputs.margin.g_r,
            i_b: inputs.i_b,
        };
        self.enter(next, t);
        self.transitions.push(tr);
        self.events.push(SupervisorEvent::Transition(tr));
        let recent = self
            .transitions
            .iter()
            .filter(|x| t - x.t <= CHATTER_WINDOW)
            .count();
        if recent > CHATTER_LIMIT {
            self.events
                .push(SupervisorEvent::Chatter { t, count: recent });
        }
        Some(tr)
    }

    /// Enters `mode`, re-arming the flags that decide how it is left.
    fn enter(&mut self, mode: Mode, t: f64) {
        match mode {
            Mode::BtMppt => self.tracker.reset_charge(),
            Mode::BtBec => self.tracker.reset_margin(t + self.thresholds.bec_blanking),
            Mode::GtMppt => {}
        }
        self.mode = mode;
        self.last_transition = t;
    }

    /// Forces a mode at start-up without logging a transition.
    pub fn start_in(&mut self, mode: Mode, t: f64) {
        self.enter(mode, t);
        self.last_transition = f64::NEG_INFINITY;
    }
}

/// Writes the transition log as CSV.
pub fn write_transition_log<W: Write>(transitions: &[Transition], mut w: W) -> Result<()> {
    writeln!(w, "t,from_mode,to_mode,f_grid,f_chg,f_G,g_r,i_B")?;
    for tr in transitions {
        writeln!(
            w,
            "{:.6},{},{},{},{},{},{:.6e},{:.6e}",
            tr.t, tr.from, tr.to, tr.flags.f_grid, tr.flags.f_chg, tr.flags.f_g, tr.g_r, tr.i_b
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::MarginEstimate;

    #[test]
    fn table_examples() {
        let f = |g, c, m| Flags::new(g, c, m);
        use Level::*;
        assert_eq!(next_mode(Mode::GtMppt, f(L, L, H)), Mode::BtMppt);
        assert_eq!(next_mode(Mode::BtMppt, f(L, H, H)), Mode::BtBec);
        assert_eq!(next_mode(Mode::BtBec, f(L, H, L)), Mode::BtMppt);
        assert_eq!(next_mode(Mode::BtBec, f(H, H, H)), Mode::GtMppt);
    }

    #[test]
    fn brute_force_agrees_with_table() {
        let report = fsm_check();
        assert_eq!(report.cases.len(), 24);
        assert!(report.passed(), "{}", report.to_text());
        assert_eq!(report.rows_covered, vec![1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn enters_emulation_on_sustained_charging() {
        let th = Thresholds::for_battery(60.0);
        let mut sup = Supervisor::new(Mode::BtMppt, Flags::new(Level::L, Level::L, Level::H), th);
        let inputs = FlagInputs {
            grid_ok: false,
            i_b: -2.0,
            margin: MarginEstimate::default(),
        };
        let mut t = 0.0;
        while sup.mode() == Mode::BtMppt && t < 1.0 {
            sup.tick(t, &inputs);
            t += 0.1;
        }
        assert_eq!(sup.mode(), Mode::BtBec);
        let tr = sup.transitions()[0];
        assert_eq!(tr.flags.f_chg, Level::H);
        let mut csv = Vec::new();
        write_transition_log(sup.transitions(), &mut csv).unwrap();
        assert!(String::from_utf8(csv)
            .unwrap()
            .contains("BT_MPPT,BT_BEC,L,H,H"));
    }
}
