//! Scenario text format.
//!
//! ```text
//! # comment
//! name = fig8b
//! duration = 40          # s
//! irradiance = 0.5       # per unit
//! load = none            # Ω, or none
//! grid = off             # on | off
//! rgti = off             # converter enabled at start
//! mode = BT_MPPT         # optional start mode
//! v_pv = 540             # optional start PV voltage, V
//! dt = 2e-5              # optional integration step, s
//! decimation = 50        # optional trace decimation
//! mppt_enable = 0        # any set-point may be given an initial value
//!
//! at 4 load_step 17.4
//! at 8 enable_rgti
//! at 9 set_point perturb_amplitude 2.4
//!
//! assert final_mode BT_BEC
//! assert transition BT_MPPT BT_BEC f_chg=H
//! assert mean i_b_avg 38 40 -0.3 0.3
//! ```

use std::fmt;
use std::str::FromStr;

use crate::supervisor::{Level, Mode};

/// Channels recorded in every trace.
pub const CHANNELS: &[&str] = &[
    "v_pv", "v_pv_avg", "i_pv", "i_l", "i_ac", "i_b", "i_b_avg", "i_load", "v_bat", "duty", "m",
    "v_g", "i_ref", "v_ref", "iq_ref", "g_r", "mode", "f_grid", "f_chg", "f_g", "p_pv", "p_ac",
    "p_load",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    /// 1-based line, or 0 for the file as a whole.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "scenario: {}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

/// Every problem found while parsing a scenario.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct ScenarioErrors(pub Vec<ParseError>);

impl fmt::Display for ScenarioErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lines: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        write!(f, "{}", lines.join("\n"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetPoint {
    MpptEnable,
    VRef,
    VloopEnable,
    IqRef,
    PerturbAmplitude,
    PerturbAllModes,
    MpptAlgorithm,
    MpptStep,
    SupervisorEnable,
}

impl SetPoint {
    pub const ALL: [SetPoint; 9] = [
        SetPoint::MpptEnable,
        SetPoint::VRef,
        SetPoint::VloopEnable,
        SetPoint::IqRef,
        SetPoint::PerturbAmplitude,
        SetPoint::PerturbAllModes,
        SetPoint::MpptAlgorithm,
        SetPoint::MpptStep,
        SetPoint::SupervisorEnable,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SetPoint::MpptEnable => "mppt_enable",
            SetPoint::VRef => "v_ref",
            SetPoint::VloopEnable => "vloop_enable",
            SetPoint::IqRef => "iq_ref",
            SetPoint::PerturbAmplitude => "perturb_amplitude",
            SetPoint::PerturbAllModes => "perturb_all_modes",
            SetPoint::MpptAlgorithm => "mppt_algorithm",
            SetPoint::MpptStep => "mppt_step",
            SetPoint::SupervisorEnable => "supervisor_enable",
        }
    }
}

impl FromStr for SetPoint {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SetPoint::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown set-point `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Action {
    GridLoss,
    GridReturn,
    /// New load resistance, `None` to disconnect.
    LoadStep(Option<f64>),
    IrradianceStep(f64),
    EnableRgti,
    SetPoint(SetPoint, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub t: f64,
    pub action: Action,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlagName {
    Grid,
    Chg,
    G,
}

impl FlagName {
    fn name(self) -> &'static str {
        match self {
            FlagName::Grid => "f_grid",
            FlagName::Chg => "f_chg",
            FlagName::G => "f_g",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Assertion {
    /// Mean over `[t0, t1]` lies in `[lo, hi]`.
    Mean {
        channel: String,
        t0: f64,
        t1: f64,
        lo: f64,
        hi: f64,
    },
    Max {
        channel: String,
        t0: f64,
        t1: f64,
        limit: f64,
    },
    Min {
        channel: String,
        t0: f64,
        t1: f64,
        limit: f64,
    },
    AbsMax {
        channel: String,
        t0: f64,
        t1: f64,
        limit: f64,
    },
    /// Measured from `t_step`, the time after which the channel stays inside
    /// `target ± band` until `t_end` lies in `[earliest, latest]`.
    Settle {
        channel: String,
        t_step: f64,
        t_end: f64,
        target: f64,
        band: f64,
        earliest: f64,
        latest: f64,
    },
    /// `|channel − reference| ≤ limit` throughout `[t0, t1]`.
    Track {
        channel: String,
        reference: String,
        t0: f64,
        t1: f64,
        limit: f64,
    },
    FinalMode(Mode),
    ModeAt {
        t: f64,
        mode: Mode,
    },
    Transition {
        from: Mode,
        to: Mode,
        flag: Option<(FlagName, Level)>,
    },
    /// Means over one window either side of the first `from → to` transition
    /// differ by at most `rel` (relative).
    Continuity {
        channel: String,
        from: Mode,
        to: Mode,
        rel: f64,
    },
    /// Mean of the channel over `[t0, t1]` is at least `ratio` of the
    /// maximum PV power at the irradiance in force at `t1`.
    MppRatio {
        channel: String,
        t0: f64,
        t1: f64,
        ratio: f64,
    },
}

impl fmt::Display for Assertion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Assertion::Mean {
                channel,
                t0,
                t1,
                lo,
                hi,
            } => write!(f, "mean {channel} {t0} {t1} {lo} {hi}"),
            Assertion::Max {
                channel,
                t0,
                t1,
                limit,
            } => write!(f, "max {channel} {t0} {t1} {limit}"),
            Assertion::Min {
                channel,
                t0,
                t1,
                limit,
            } => write!(f, "min {channel} {t0} {t1} {limit}"),
            Assertion::AbsMax {
                channel,
                t0,
                t1,
                limit,
            } => write!(f, "absmax {channel} {t0} {t1} {limit}"),
            Assertion::Settle {
                channel,
                t_step,
                t_end,
                target,
                band,
                earliest,
                latest,
            } => {
                write!(
                    f,
                    "settle {channel} {t_step} {t_end} {target} {band} {earliest} {latest}"
                )
            }
            Assertion::Track {
                channel,
                reference,
                t0,
                t1,
                limit,
            } => {
                write!(f, "track {channel} {reference} {t0} {t1} {limit}")
            }
            Assertion::FinalMode(m) => write!(f, "final_mode {m}"),
            Assertion::ModeAt { t, mode } => write!(f, "mode {t} {mode}"),
            Assertion::Transition { from, to, flag } => match flag {
                Some((name, level)) => write!(f, "transition {from} {to} {}={level}", name.name()),
                None => write!(f, "transition {from} {to}"),
            },
            Assertion::Continuity {
                channel,
                from,
                to,
                rel,
            } => write!(f, "continuity {channel} {from} {to} {rel}"),
            Assertion::MppRatio {
                channel,
                t0,
                t1,
                ratio,
            } => write!(f, "mpp_ratio {channel} {t0} {t1} {ratio}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub duration: f64,
    pub irradiance: f64,
    /// Ω; `None` is no load.
    pub load: Option<f64>,
    pub grid: bool,
    pub rgti: bool,
    pub mode: Option<Mode>,
    pub v_pv: Option<f64>,
    pub dt: Option<f64>,
    pub decimation: Option<usize>,
    /// Set-point values in force from t = 0.
    pub initial: Vec<(SetPoint, f64)>,
    pub events: Vec<Event>,
    pub assertions: Vec<Assertion>,
}

impl Scenario {
    /// A scenario with default initial conditions and nothing scheduled.
    pub fn new(name: impl Into<String>, duration: f64) -> Self {
        Self {
            name: name.into(),
            duration,
            irradiance: 1.0,
            load: None,
            grid: true,
            rgti: true,
            mode: None,
            v_pv: None,
            dt: None,
            decimation: None,
            initial: Vec::new(),
            events: Vec::new(),
            assertions: Vec::new(),
        }
    }

    pub fn initial_mode(&self) -> Mode {
        self.mode.unwrap_or(if self.grid {
            Mode::GtMppt
        } else {
            Mode::BtMppt
        })
    }
}

fn on_off(b: bool) -> &'static str {
    if b {
        "on"
    } else {
        "off"
    }
}

fn load_text(load: Option<f64>) -> String {
    load.map_or_else(|| "none".to_string(), |r| r.to_string())
}

/// Renders a scenario in the text format; [`parse_scenario`] reads it back unchanged.
pub fn serialize_scenario(s: &Scenario) -> String {
    let mut out = String::new();
    let mut line = |l: String| {
        out.push_str(&l);
        out.push('\n');
    };
    line(format!("name = {}", s.name));
    line(format!("duration = {}", s.duration));
    line(format!("irradiance = {}", s.irradiance));
    line(format!("load = {}", load_text(s.load)));
    line(format!("grid = {}", on_off(s.grid)));
    line(format!("rgti = {}", on_off(s.rgti)));
    if let Some(m) = s.mode {
        line(format!("mode = {m}"));
    }
    if let Some(v) = s.v_pv {
        line(format!("v_pv = {v}"));
    }
    if let Some(dt) = s.dt {
        line(format!("dt = {dt}"));
    }
    if let Some(d) = s.decimation {
        line(format!("decimation = {d}"));
    }
    for (sp, v) in &s.initial {
        line(format!("{} = {v}", sp.name()));
    }
    for e in &s.events {
        let action = match e.action {
            Action::GridLoss => "grid_loss".to_string(),
            Action::GridReturn => "grid_return".to_string(),
            Action::LoadStep(r) => format!("load_step {}", load_text(r)),
            Action::IrradianceStep(g) => format!("irradiance_step {g}"),
            Action::EnableRgti => "enable_rgti".to_string(),
            Action::SetPoint(p, v) => format!("set_point {} {v}", p.name()),
        };
        line(format!("at {} {action}", e.t));
    }
    for a in &s.assertions {
        line(format!("assert {a}"));
    }
    out
}

struct Parser {
    errors: Vec<ParseError>,
    line: usize,
}

impl Parser {
    fn err(&mut self, msg: impl Into<String>) {
        self.errors.push(ParseError {
            line: self.line,
            message: msg.into(),
        });
    }

    fn num(&mut self, what: &str, tok: Option<&str>) -> Option<f64> {
        match tok {
            None => {
                self.err(format!("missing {what}"));
                None
            }
            Some(t) => match t.parse::<f64>() {
                Ok(v) if v.is_finite() => Some(v),
                _ => {
                    self.err(format!("{what}: `{t}` is not a number"));
                    None
                }
            },
        }
    }

    fn mode(&mut self, tok: Option<&str>) -> Option<Mode> {
        match tok.map(str::parse::<Mode>) {
            Some(Ok(m)) => Some(m),
            Some(Err(e)) => {
                self.err(e);
                None
            }
            None => {
                self.err("missing mode");
                None
            }
        }
    }

    fn channel(&mut self, tok: Option<&str>) -> Option<String> {
        match tok {
            Some(c) if CHANNELS.contains(&c) => Some(c.to_string()),
            Some(c) => {
                self.err(format!("unknown channel `{c}`"));
                None
            }
            None => {
                self.err("missing channel");
                None
            }
        }
    }

    fn switch(&mut self, key: &str, value: &str) -> Option<bool> {
        match value {
            "on" | "true" | "1" => Some(true),
            "off" | "false" | "0" => Some(false),
            _ => {
                self.err(format!("{key} must be on or off, got `{value}`"));
                None
            }
        }
    }

    fn load(&mut self, value: &str) -> Option<Option<f64>> {
        if value == "none" {
            return Some(None);
        }
        let r = self.num("load", Some(value))?;
        if r > 0.0 {
            Some(Some(r))
        } else {
            self.err(format!("load must be positive or none, got {r}"));
            None
        }
    }

    fn end(&mut self, toks: &mut std::str::SplitWhitespace<'_>) {
        let rest: Vec<&str> = toks.collect();
        if !rest.is_empty() {
            self.err(format!("unexpected trailing `{}`", rest.join(" ")));
        }
    }
}

/// Parses a scenario, collecting every error rather than stopping at the first.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioErrors> {
    let mut p = Parser {
        errors: Vec::new(),
        line: 0,
    };
    let mut s = Scenario::new("", 0.0);
    let mut name = None;
    let mut duration = None;
    let mut seen = Vec::new();
    let mut event_lines = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        p.line = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut toks = line.split_whitespace();
        let head = toks.next().unwrap_or("");
        if head == "at" {
            let Some(t) = p.num("event time", toks.next()) else {
                continue;
            };
            let action = match toks.next() {
                Some("grid_loss") => Some(Action::GridLoss),
                Some("grid_return") => Some(Action::GridReturn),
                Some("enable_rgti") => Some(Action::EnableRgti),
                Some("load_step") => match toks.next() {
                    Some(v) => p.load(v).map(Action::LoadStep),
                    None => {
                        p.err("load_step needs a resistance or none");
                        None
                    }
                },
                Some("irradiance_step") => p.num("irradiance", toks.next()).and_then(|g| {
                    if (0.0..=crate::plant::MAX_IRRADIANCE).contains(&g) {
                        Some(Action::IrradianceStep(g))
                    } else {
                        p.err(format!("irradiance {g} is outside [0, 1.2]"));
                        None
                    }
                }),
                Some("set_point") => {
                    let sp = match toks.next().map(str::parse::<SetPoint>) {
                        Some(Ok(sp)) => Some(sp),
                        Some(Err(e)) => {
                            p.err(e);
                            None
                        }
                        None => {
                            p.err("set_point needs a name");
                            None
                        }
                    };
                    let v = p.num("set-point value", toks.next());
                    sp.zip(v).map(|(sp, v)| Action::SetPoint(sp, v))
                }
                Some(other) => {
                    p.err(format!("unknown action `{other}`"));
                    None
                }
                None => {
                    p.err("missing action");
                    None
                }
            };
            p.end(&mut toks);
            if let Some(action) = action {
                if let Some(prev) = s.events.last() {
                    if t <= prev.t {
                        p.err(format!(
                            "event time {t} is not after the previous event at {}",
                            prev.t
                        ));
                    }
                }
                if t < 0.0 {
                    p.err(format!("event time {t} is negative"));
                }
                s.events.push(Event { t, action });
                event_lines.push(p.line);
            }
        } else if head == "assert" {
            if let Some(a) = parse_assertion(&mut p, &mut toks) {
                s.assertions.push(a);
            }
            p.end(&mut toks);
        } else if let Some((key, value)) = line.split_once('=') {
            let (key, value) = (key.trim(), value.trim());
            if seen.contains(&key.to_string()) {
                p.err(format!("duplicate key `{key}`"));
            }
            seen.push(key.to_string());
            match key {
                "name" if !value.is_empty() && !value.contains(char::is_whitespace) => {
                    name = Some(value.to_string())
                }
                "name" => p.err("name must be a single non-empty word"),
                "duration" => duration = p.num("duration", Some(value)),
                "irradiance" => {
                    if let Some(g) = p.num("irradiance", Some(value)) {
                        if (0.0..=crate::plant::MAX_IRRADIANCE).contains(&g) {
                            s.irradiance = g;
                        } else {
                            p.err(format!("irradiance {g} is outside [0, 1.2]"));
                        }
                    }
                }
                "load" => {
                    if let Some(l) = p.load(value) {
                        s.load = l;
                    }
                }
                "grid" => {
                    if let Some(b) = p.switch(key, value) {
                        s.grid = b;
                    }
                }
                "rgti" => {
                    if let Some(b) = p.switch(key, value) {
                        s.rgti = b;
                    }
                }
                "mode" => s.mode = p.mode(Some(value)),
                "v_pv" => s.v_pv = p.num("v_pv", Some(value)),
                "dt" => {
                    s.dt = p.num("dt", Some(value));
                    if s.dt.is_some_and(|dt| dt <= 0.0) {
                        p.err("dt must be positive");
                    }
                }
                "decimation" => match value.parse::<usize>() {
                    Ok(d) if d >= 1 => s.decimation = Some(d),
                    _ => p.err(format!("decimation must be an integer >= 1, got `{value}`")),
                },
                other => match other.parse::<SetPoint>() {
                    Ok(sp) => {
                        if let Some(v) = p.num(other, Some(value)) {
                            s.initial.push((sp, v));
                        }
                    }
                    Err(_) => p.err(format!("unknown key `{other}`")),
                },
            }
        } else {
            p.err(format!("cannot parse `{line}`"));
        }
    }

    p.line = 0;
    match name {
        Some(n) => s.name = n,
        None => p.err("missing required key `name`"),
    }
    match duration {
        Some(d) if d > 0.0 => s.duration = d,
        Some(d) => p.err(format!("duration must be positive, got {d}")),
        None => p.err("missing required key `duration`"),
    }
    if duration.is_some_and(|d| d > 0.0) {
        for (e, line) in s.events.iter().zip(&event_lines) {
            if e.t > s.duration {
                p.errors.push(ParseError {
                    line: *line,
                    message: format!(
                        "event at {} is after the end of the run ({})",
                        e.t, s.duration
                    ),
                });
            }
        }
    }
    if p.errors.is_empty() {
        Ok(s)
    } else {
        p.errors.sort_by_key(|e| e.line);
        Err(ScenarioErrors(p.errors))
    }
}

fn parse_assertion(p: &mut Parser, toks: &mut std::str::SplitWhitespace<'_>) -> Option<Assertion> {
    let kind = toks.next();
    match kind {
        Some(k @ ("mean" | "max" | "min" | "absmax" | "mpp_ratio")) => {
            let channel = p.channel(toks.next());
            let t0 = p.num("t0", toks.next());
            let t1 = p.num("t1", toks.next());
            let a = p.num("bound", toks.next());
            let b = if k == "mean" {
                p.num("upper bound", toks.next())
            } else {
                Some(0.0)
            };
            let (channel, t0, t1, a, b) = (channel?, t0?, t1?, a?, b?);
            if t1 < t0 {
                p.err(format!("window end {t1} is before its start {t0}"));
            }
            Some(match k {
                "mean" => Assertion::Mean {
                    channel,
                    t0,
                    t1,
                    lo: a,
                    hi: b,
                },
                "max" => Assertion::Max {
                    channel,
                    t0,
                    t1,
                    limit: a,
                },
                "min" => Assertion::Min {
                    channel,
                    t0,
                    t1,
                    limit: a,
                },
                "absmax" => Assertion::AbsMax {
                    channel,
                    t0,
                    t1,
                    limit: a,
                },
                _ => Assertion::MppRatio {
                    channel,
                    t0,
                    t1,
                    ratio: a,
                },
            })
        }
        Some("settle") => {
            let channel = p.channel(toks.next());
            let vals: Vec<Option<f64>> =
                ["t_step", "t_end", "target", "band", "earliest", "latest"]
                    .iter()
                    .map(|w| p.num(w, toks.next()))
                    .collect();
            let channel = channel?;
            let [t_step, t_end, target, band, earliest, latest] =
                [vals[0]?, vals[1]?, vals[2]?, vals[3]?, vals[4]?, vals[5]?];
            Some(Assertion::Settle {
                channel,
                t_step,
                t_end,
                target,
                band,
                earliest,
                latest,
            })
        }
        Some("track") => {
            let channel = p.channel(toks.next());
            let reference = p.channel(toks.next());
            let t0 = p.num("t0", toks.next());
            let t1 = p.num("t1", toks.next());
            let limit = p.num("limit", toks.next());
            Some(Assertion::Track {
                channel: channel?,
                reference: reference?,
                t0: t0?,
                t1: t1?,
                limit: limit?,
            })
        }
        Some("final_mode") => p.mode(toks.next()).map(Assertion::FinalMode),
        Some("mode") => {
            let t = p.num("time", toks.next());
            let mode = p.mode(toks.next());
            Some(Assertion::ModeAt { t: t?, mode: mode? })
        }
        Some("transition") => {
            let from = p.mode(toks.next());
            let to = p.mode(toks.next());
            let flag = match toks.next() {
                None => Some(None),
                Some(tok) => {
                    let parsed = tok.split_once('=').and_then(|(n, l)| {
                        let name = match n {
                            "f_grid" => FlagName::Grid,
                            "f_chg" => FlagName::Chg,
                            "f_g" | "f_G" => FlagName::G,
                            _ => return None,
                        };
                        let level = match l {
                            "H" => Level::H,
                            "L" => Level::L,
                            _ => return None,
                        };
                        Some((name, level))
                    });
                    if parsed.is_none() {
                        p.err(format!("expected flag condition like f_chg=H, got `{tok}`"));
                    }
                    parsed.map(Some)
                }
            };
            Some(Assertion::Transition {
                from: from?,
                to: to?,
                flag: flag?,
            })
        }
        Some("continuity") => {
            let channel = p.channel(toks.next());
            let from = p.mode(toks.next());
            let to = p.mode(toks.next());
            let rel = p.num("relative tolerance", toks.next());
            Some(Assertion::Continuity {
                channel: channel?,
                from: from?,
                to: to?,
                rel: rel?,
            })
        }
        Some(other) => {
            p.err(format!("unknown assertion `{other}`"));
            None
        }
        None => {
            p.err("missing assertion kind");
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_only() {
        let s = parse_scenario("name = idle\nduration = 2\n").unwrap();
        assert!(s.events.is_empty());
        assert_eq!(s.initial_mode(), Mode::GtMppt);
    }

    #[test]
    fn collects_all_errors_with_lines() {
        let text = "name = x\nduration = 10\nat 4 grid_loss\nat 2 grid_return\nat 5 explode\nassert mean nope 0 1 0 1\n";
        let errs = parse_scenario(text).unwrap_err().0;
        let lines: Vec<usize> = errs.iter().map(|e| e.line).collect();
        assert_eq!(lines, vec![4, 5, 6], "{errs:?}");
        assert!(errs[0].message.contains("not after"));
    }

    #[test]
    fn missing_keys() {
        let errs = parse_scenario("at 1 grid_loss\n").unwrap_err().0;
        assert_eq!(errs.len(), 2);
        assert!(errs.iter().all(|e| e.line == 0));
    }

    #[test]
    fn round_trip() {
        let text = "name = rt\nduration = 12.5\nirradiance = 0.75\nload = 17.4\ngrid = off\nrgti = off\nmode = BT_BEC\nmppt_enable = 0\nv_ref = 530\n\
                    at 1 enable_rgti\nat 2.5 set_point perturb_amplitude 2.4\nat 3 load_step none\n\
                    assert transition BT_BEC BT_MPPT f_g=L\nassert settle v_pv_avg 1 2 477 2.65 0.05 0.15\n\
                    assert track i_ac i_ref 0.505 0.6 1.05\nassert continuity i_l BT_BEC BT_MPPT 0.05\n";
        let s = parse_scenario(text).unwrap();
        let again = parse_scenario(&serialize_scenario(&s)).unwrap();
        assert_eq!(s, again);
    }
}
