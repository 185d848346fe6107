//! Run reports and assertion evaluation over a recorded trace.

use std::fmt::Write as _;

use super::format::{Assertion, FlagName};
use crate::sim::Trace;
use crate::supervisor::{Mode, SupervisorEvent, Transition};

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub description: String,
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    fn new(description: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            description: description.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// Steady-state figures over the last part of the interval between events.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseMetrics {
    pub t0: f64,
    pub t1: f64,
    pub i_b: f64,
    pub p_pv: f64,
    pub p_load: f64,
    /// NaN when no valid margin estimate was available.
    pub g_r: f64,
}

impl PhaseMetrics {
    /// Averages over the final second of `[t0, t1]`, or its second half if shorter.
    pub fn measure(trace: &Trace, t0: f64, t1: f64) -> Self {
        let from = (t1 - 1.0).max(0.5 * (t0 + t1));
        let mean = |c: &str| trace.mean(c, from, t1).unwrap_or(f64::NAN);
        let g_r = trace
            .window("g_r", from, t1)
            .and_then(|(w, _)| w.iter().rev().find(|x| x.is_finite()).copied())
            .unwrap_or(f64::NAN);
        Self {
            t0,
            t1,
            i_b: mean("i_b"),
            p_pv: mean("p_pv"),
            p_load: mean("p_load"),
            g_r,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub name: String,
    pub final_mode: Mode,
    pub transitions: Vec<Transition>,
    pub events: Vec<SupervisorEvent>,
    pub phases: Vec<PhaseMetrics>,
    /// One per scenario assertion, in order.
    pub verdicts: Vec<Verdict>,
    /// Battery never charged beyond the deadband while emulating.
    pub safety: Verdict,
    /// Command continuity across battery-tied mode changes.
    pub bumpless: Verdict,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed) && self.safety.passed && self.bumpless.passed
    }

    pub fn all_verdicts(&self) -> impl Iterator<Item = &Verdict> {
        self.verdicts.iter().chain([&self.safety, &self.bumpless])
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let status = if self.passed() { "PASS" } else { "FAIL" };
        let _ = writeln!(
            s,
            "scenario {}: {status} (final mode {})",
            self.name, self.final_mode
        );
        for tr in &self.transitions {
            let _ = writeln!(
                s,
                "  transition t={:.3} {} -> {} (f_grid={} f_chg={} f_G={}, g_r={:.3}, i_B={:.3})",
                tr.t, tr.from, tr.to, tr.flags.f_grid, tr.flags.f_chg, tr.flags.f_g, tr.g_r, tr.i_b
            );
        }
        for e in &self.events {
            match e {
                SupervisorEvent::Transition(_) => {}
                SupervisorEvent::Chatter { t, count } => {
                    let _ = writeln!(
                        s,
                        "  warning t={t:.3}: {count} transitions within the chatter window"
                    );
                }
                SupervisorEvent::NearOpenCircuit { t, g_r } => {
                    let _ = writeln!(
                        s,
                        "  advisory t={t:.3}: operating near open circuit (g_r={g_r:.1})"
                    );
                }
                SupervisorEvent::MarginCollapse { t } => {
                    let _ = writeln!(
                        s,
                        "  warning t={t:.3}: voltage loop saturated, power margin collapsed"
                    );
                }
            }
        }
        for p in &self.phases {
            let _ = writeln!(
                s,
                "  phase [{:.3}, {:.3}] s: i_B={:.4} A, P_pv={:.1} W, P_load={:.1} W, g_r={:.3}",
                p.t0, p.t1, p.i_b, p.p_pv, p.p_load, p.g_r
            );
        }
        for v in self.all_verdicts() {
            let _ = writeln!(
                s,
                "  [{}] {}: {}",
                if v.passed { "pass" } else { "FAIL" },
                v.description,
                v.detail
            );
        }
        s
    }
}

pub(crate) struct Context<'a> {
    pub trace: &'a Trace,
    pub transitions: &'a [Transition],
    pub final_mode: Mode,
    pub mpp_power: &'a dyn Fn(f64) -> f64,
    pub continuity_window: f64,
}

fn window<'t>(trace: &'t Trace, channel: &str, t0: f64, t1: f64) -> Result<&'t [f64], String> {
    let (w, _) = trace
        .window(channel, t0, t1)
        .ok_or_else(|| format!("no channel `{channel}`"))?;
    if w.is_empty() {
        Err(format!("no samples of `{channel}` in [{t0}, {t1})"))
    } else {
        Ok(w)
    }
}

fn mean(w: &[f64]) -> f64 {
    w.iter().sum::<f64>() / w.len() as f64
}

pub(crate) fn evaluate(a: &Assertion, ctx: &Context<'_>) -> Verdict {
    let desc = a.to_string();
    match check(a, ctx) {
        Ok((passed, detail)) => Verdict::new(desc, passed, detail),
        Err(detail) => Verdict::new(desc, false, detail),
    }
}

fn check(a: &Assertion, ctx: &Context<'_>) -> Result<(bool, String), String> {
    let tr = ctx.trace;
    Ok(match a {
        Assertion::Mean {
            channel,
            t0,
            t1,
            lo,
            hi,
        } => {
            let m = mean(window(tr, channel, *t0, *t1)?);
            (*lo <= m && m <= *hi, format!("mean = {m:.6}"))
        }
        Assertion::Max {
            channel,
            t0,
            t1,
            limit,
        } => {
            let m = window(tr, channel, *t0, *t1)?
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            (m <= *limit, format!("max = {m:.6}"))
        }
        Assertion::Min {
            channel,
            t0,
            t1,
            limit,
        } => {
            let m = window(tr, channel, *t0, *t1)?
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            (m >= *limit, format!("min = {m:.6}"))
        }
        Assertion::AbsMax {
            channel,
            t0,
            t1,
            limit,
        } => {
            let m = window(tr, channel, *t0, *t1)?
                .iter()
                .fold(0.0f64, |a, x| a.max(x.abs()));
            (m <= *limit, format!("max |x| = {m:.6}"))
        }
        Assertion::Settle {
            channel,
            t_step,
            t_end,
            target,
            band,
            earliest,
            latest,
        } => {
            let w = window(tr, channel, *t_step, *t_end)?;
            let r = tr.range(*t_step, *t_end);
            let times = &tr.times()[r];
            match w.iter().rposition(|x| (x - target).abs() > *band) {
                None => (
                    *earliest <= 0.0,
                    "inside the band from the step".to_string(),
                ),
                Some(i) if i + 1 == w.len() => {
                    (false, format!("outside the band at the end ({:.4})", w[i]))
                }
                Some(i) => {
                    let ts = times[i + 1] - t_step;
                    (
                        *earliest <= ts && ts <= *latest,
                        format!("settling time = {:.1} ms", 1e3 * ts),
                    )
                }
            }
        }
        Assertion::Track {
            channel,
            reference,
            t0,
            t1,
            limit,
        } => {
            let x = window(tr, channel, *t0, *t1)?;
            let y = window(tr, reference, *t0, *t1)?;
            let e = x
                .iter()
                .zip(y)
                .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
            (e <= *limit, format!("max error = {e:.6}"))
        }
        Assertion::FinalMode(m) => (
            ctx.final_mode == *m,
            format!("final mode {}", ctx.final_mode),
        ),
        Assertion::ModeAt { t, mode } => {
            let code = tr
                .value_at("mode", *t)
                .ok_or("no samples before that time")?;
            let found = Mode::from_code(code);
            let name = found.map_or_else(|| "off".to_string(), |m| m.to_string());
            (found == Some(*mode), format!("mode {name}"))
        }
        Assertion::Transition { from, to, flag } => {
            let hit = ctx.transitions.iter().find(|x| {
                x.from == *from
                    && x.to == *to
                    && flag.is_none_or(|(name, level)| {
                        let f = x.flags;
                        level
                            == match name {
                                FlagName::Grid => f.f_grid,
                                FlagName::Chg => f.f_chg,
                                FlagName::G => f.f_g,
                            }
                    })
            });
            match hit {
                Some(x) => (true, format!("at t = {:.3} s", x.t)),
                None => (
                    false,
                    format!("not found among {} transitions", ctx.transitions.len()),
                ),
            }
        }
        Assertion::Continuity {
            channel,
            from,
            to,
            rel,
        } => {
            let x = ctx
                .transitions
                .iter()
                .find(|x| x.from == *from && x.to == *to)
                .ok_or("transition never happened")?;
            let w = ctx.continuity_window;
            let before = mean(window(tr, channel, x.t - w, x.t)?);
            let after = mean(window(tr, channel, x.t, x.t + w)?);
            let change = (after - before).abs() / before.abs().max(1e-12);
            (
                change <= *rel,
                format!(
                    "{before:.4} -> {after:.4} ({:.2}%) at t = {:.3} s",
                    100.0 * change,
                    x.t
                ),
            )
        }
        Assertion::MppRatio {
            channel,
            t0,
            t1,
            ratio,
        } => {
            let m = mean(window(tr, channel, *t0, *t1)?);
            let p = (ctx.mpp_power)(*t1);
            let r = m / p;
            (
                r >= *ratio,
                format!("{m:.1} W of {p:.1} W available ({:.3}%)", 100.0 * r),
            )
        }
    })
}

/// Battery current never below `−deadband` while emulating, outside the
/// settling interval after each disturbance (event or mode entry).
pub(crate) fn no_charge_check(
    trace: &Trace,
    disturbances: &[f64],
    settle: f64,
    deadband: f64,
) -> Verdict {
    let desc = "battery not charged during emulation";
    let (Some(mode), Some(i_b)) = (trace.channel("mode"), trace.channel("i_b_avg")) else {
        return Verdict::new(desc, false, "trace lacks mode or i_b_avg");
    };
    let mut sorted = disturbances.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut checked = 0usize;
    let mut worst = f64::INFINITY;
    let mut first_bad = None;
    for ((t, m), ib) in trace.times().iter().zip(mode).zip(i_b) {
        if Mode::from_code(*m) != Some(Mode::BtBec) {
            continue;
        }
        let k = sorted.partition_point(|d| d <= t);
        if k > 0 && t - sorted[k - 1] < settle {
            continue;
        }
        checked += 1;
        worst = worst.min(*ib);
        if *ib < -deadband && first_bad.is_none() {
            first_bad = Some((*t, *ib));
        }
    }
    match first_bad {
        Some((t, ib)) => Verdict::new(
            desc,
            false,
            format!("i_B = {ib:.4} A at t = {t:.3} s (deadband {deadband} A)"),
        ),
        None if checked == 0 => Verdict::new(desc, true, "no settled emulation interval"),
        None => Verdict::new(
            desc,
            true,
            format!("{checked} samples, min i_B = {worst:.4} A (deadband {deadband} A)"),
        ),
    }
}

pub(crate) fn bumpless_check(jumps: &[(f64, f64)], limit: f64) -> Verdict {
    let desc = "bumpless mode handover";
    match jumps.iter().copied().max_by(|a, b| a.1.total_cmp(&b.1)) {
        None => Verdict::new(desc, true, "no battery-tied handover"),
        Some((t, j)) => Verdict::new(
            desc,
            j <= limit,
            format!("largest duty step {:.3}% at t = {t:.3} s", 100.0 * j),
        ),
    }
}
