//! Acceptance criteria, one line per criterion with its runtime.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rgti::control::grid_current_bandwidth;
use rgti::plant::{
    linearize_numeric, plant_tf_current, plant_tf_voltage, BatteryTiedPlant, LinearizeOptions,
    OperatingPoint,
};
use rgti::scenario::{load_scenario, one_two_five, sweep_mpp, RunOutput, System};
use rgti::sim::{extract_tone, Trace};
use rgti::supervisor::{fsm_check, Mode};

type Outcome = Result<String, String>;
type Criterion = (&'static str, u64, fn(&Harness) -> Outcome);

struct Harness {
    sys: System,
    runs: RefCell<BTreeMap<String, RunOutput>>,
}

impl Harness {
    fn scenario_dir() -> PathBuf {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
    }

    fn run(&self, name: &str) -> Result<RunOutput, String> {
        if let Some(out) = self.runs.borrow().get(name) {
            return Ok(out.clone());
        }
        let path = Self::scenario_dir().join(format!("{name}.scn"));
        let scenario = load_scenario(&path).map_err(|e| format!("{name}: {e}"))?;
        let out = self
            .sys
            .run(&scenario)
            .map_err(|e| format!("{name}: {e}"))?;
        self.runs.borrow_mut().insert(name.to_string(), out.clone());
        Ok(out)
    }
}

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn samples<'t>(
    trace: &'t Trace,
    channel: &str,
    t0: f64,
    t1: f64,
) -> Result<(&'t [f64], &'t [f64]), String> {
    let (w, _) = trace
        .window(channel, t0, t1)
        .ok_or(format!("no channel {channel}"))?;
    let r = trace.range(t0, t1);
    ensure(
        !w.is_empty(),
        format!("no {channel} samples in [{t0}, {t1})"),
    )?;
    Ok((&trace.times()[r], w))
}

/// Time after `t_step` from which `err` stays within `band` until `t_end`.
fn settling_time(
    times: &[f64],
    err: impl Iterator<Item = f64>,
    band: f64,
    t_step: f64,
) -> Result<f64, String> {
    let errs: Vec<f64> = err.collect();
    match errs.iter().rposition(|e| e.abs() > band) {
        None => Ok(0.0),
        Some(i) if i + 1 == errs.len() => Err(format!("still outside the {band} band at the end")),
        Some(i) => Ok(times[i + 1] - t_step),
    }
}

fn plant_equivalence(h: &Harness) -> Outcome {
    let p = &h.sys.params;
    let freqs = one_two_five(0.1, 1000.0);
    let mut worst = (0.0f64, 0.0f64);
    for v_pv in [400.0, 480.0, 540.0] {
        let (op, r_load) = OperatingPoint::emulating(&p.pv, 1.0, &p.battery, &p.converter, v_pv)
            .map_err(|e| e.to_string())?;
        let plant = BatteryTiedPlant {
            pv: p.pv,
            irradiance: 1.0,
            battery: p.battery,
            conv: p.converter,
            r_load,
        };
        let gv = plant_tf_voltage(&op, &p.converter).map_err(|e| e.to_string())?;
        let gi = plant_tf_current(&op, &p.converter).map_err(|e| e.to_string())?;
        let points = linearize_numeric(&plant, &op, &freqs, &LinearizeOptions::default())
            .map_err(|e| e.to_string())?;
        for pt in points {
            for (name, numeric, analytic) in [
                ("Gpv", pt.voltage_per_duty, gv.at_hz(pt.frequency)),
                ("Gpi", pt.current_per_voltage, gi.at_hz(pt.frequency)),
            ] {
                let mag = (numeric.norm() / analytic.norm() - 1.0).abs();
                let phase = (numeric / analytic).arg().to_degrees().abs();
                worst = (worst.0.max(mag), worst.1.max(phase));
                ensure(
                    mag < 0.02 && phase < 3.0,
                    format!(
                        "{name} at {v_pv} V, {} Hz: magnitude error {:.2}%, phase error {phase:.2} deg",
                        pt.frequency,
                        100.0 * mag
                    ),
                )?;
            }
        }
    }
    Ok(format!(
        "{} frequencies x 3 operating points, worst {:.3}% / {:.3} deg",
        freqs.len(),
        100.0 * worst.0,
        worst.1
    ))
}

fn design_targets(h: &Harness) -> Outcome {
    let (p, d) = (&h.sys.params, &h.sys.design);
    let v = d
        .voltage_margins(p, p.pv.v_mpp, 1.0)
        .map_err(|e| e.to_string())?;
    ensure(
        (v.crossover / 55.0 - 1.0).abs() <= 0.10,
        format!("voltage crossover {:.2} Hz", v.crossover),
    )?;
    ensure(
        (v.phase_margin - 35.0).abs() <= 3.0,
        format!("voltage phase margin {:.2} deg", v.phase_margin),
    )?;
    let i = d
        .current_margins(p, d.targets.current_design_v_pv, 1.0)
        .map_err(|e| e.to_string())?;
    ensure(
        (i.crossover / 0.5 - 1.0).abs() <= 0.20,
        format!("current crossover {:.3} Hz", i.crossover),
    )?;
    let bw = grid_current_bandwidth(
        &d.grid_current,
        p.converter.l_f,
        p.converter.r_series,
        h.sys.options.sim.dt,
    );
    ensure(
        (bw / 800.0 - 1.0).abs() <= 0.15,
        format!("grid current bandwidth {bw:.1} Hz"),
    )?;
    Ok(format!(
        "voltage {:.2} Hz / {:.2} deg, current {:.3} Hz, grid current {bw:.1} Hz",
        v.crossover, v.phase_margin, i.crossover
    ))
}

fn emulation_steady_state(h: &Harness) -> Outcome {
    let out = h.run("fig8a")?;
    let tr = &out.trace;
    let limit = 0.005 * h.sys.params.battery.rated_current();
    let end = tr.times().last().copied().unwrap_or(0.0);
    let mean = tr.mean("i_b", end - 2.0, end + 1e-9).ok_or("no i_b")?;
    ensure(
        mean.abs() < limit,
        format!("mean i_B over the final 2 s = {mean:.4} A (limit {limit} A)"),
    )?;
    let mut settle = Vec::new();
    for (t_step, t_next) in [(5.0, 15.0), (15.0, end + 1e-9)] {
        let (times, i_b) = samples(tr, "i_b_avg", t_step, t_next)?;
        let ts = settling_time(times, i_b.iter().copied(), limit, t_step)?;
        ensure(
            ts <= 5.0,
            format!("step at {t_step} s settles in {ts:.2} s"),
        )?;
        settle.push(ts);
    }
    Ok(format!(
        "mean i_B {mean:.4} A, settling {:.2} s and {:.2} s",
        settle[0], settle[1]
    ))
}

fn conductance_ratio(h: &Harness) -> Outcome {
    let at_mpp = h.run("margin-at-mpp")?;
    let g_mpp = at_mpp.trace.mean("g_r", 4.0, 6.0).ok_or("no g_r")?;
    ensure(
        (g_mpp - 1.0).abs() <= 0.1,
        format!("g_r at the MPP = {g_mpp:.3}"),
    )?;
    let sweep = h.run("margin-sweep")?;
    let g: Vec<f64> = sweep.report.phases.iter().map(|p| p.g_r).collect();
    ensure(
        g.len() == 5,
        format!("expected 5 load levels, found {}", g.len()),
    )?;
    ensure(g[0] > 10.0, format!("g_r near open circuit = {:.2}", g[0]))?;
    ensure(
        g.windows(2).all(|w| w[1] < w[0]),
        format!("g_r not decreasing with load: {g:.2?}"),
    )?;
    Ok(format!("at MPP {g_mpp:.3}, sweep {g:.2?}"))
}

fn fsm_fidelity(h: &Harness) -> Outcome {
    let fsm = fsm_check();
    ensure(
        fsm.passed(),
        "fsm-check disagrees with the transition table",
    )?;
    ensure(
        fsm.rows_covered.len() == 6,
        format!("{} table rows covered", fsm.rows_covered.len()),
    )?;
    let b = h.run("fig8b")?;
    let up = b
        .report
        .transitions
        .iter()
        .find(|t| t.from == Mode::BtMppt && t.to == Mode::BtBec)
        .ok_or("fig8b: no BT_MPPT -> BT_BEC transition")?;
    ensure(
        up.flags.f_chg.is_high(),
        "fig8b: transition not on f_chg = H",
    )?;
    let c = h.run("fig8c")?;
    let down = c
        .report
        .transitions
        .iter()
        .find(|t| t.from == Mode::BtBec && t.to == Mode::BtMppt)
        .ok_or("fig8c: no BT_BEC -> BT_MPPT transition")?;
    ensure(
        !down.flags.f_g.is_high(),
        "fig8c: transition not on f_G = L",
    )?;
    let w = h.sys.options.continuity_window;
    let before = c.trace.mean("i_l", down.t - w, down.t).ok_or("no i_l")?;
    let after = c.trace.mean("i_l", down.t, down.t + w).ok_or("no i_l")?;
    let jump = (after - before).abs() / before.abs();
    ensure(
        jump < 0.05,
        format!("fig8c: inductor current changes {:.2}%", 100.0 * jump),
    )?;
    Ok(format!(
        "{} cases, fig8b at {:.2} s, fig8c at {:.2} s with |di_L| {:.2}%",
        fsm.cases.len(),
        up.t,
        down.t,
        100.0 * jump
    ))
}

fn grid_tied_dynamics(h: &Harness) -> Outcome {
    let b = h.run("fig6b")?;
    let (times, i_ac) = samples(&b.trace, "i_ac", 0.505, 0.8)?;
    let (_, i_ref) = samples(&b.trace, "i_ref", 0.505, 0.8)?;
    let track = settling_time(
        times,
        i_ac.iter().zip(i_ref).map(|(x, r)| x - r),
        0.05 * 21.0,
        0.505,
    )?;
    ensure(
        track <= 5e-3,
        format!("current tracks {:.2} ms after the step", 1e3 * track),
    )?;

    let c = h.run("fig6c")?;
    let (times, v) = samples(&c.trace, "v_pv_avg", 1.0, 1.6)?;
    let settle = settling_time(times, v.iter().map(|v| v - 477.0), 0.05 * 53.0, 1.0)?;
    ensure(
        (0.05..=0.15).contains(&settle),
        format!("voltage settles in {:.1} ms", 1e3 * settle),
    )?;

    let a = h.run("fig7a")?;
    let p_ac = a.trace.mean("p_ac", 6.0, 8.0 + 1e-9).ok_or("no p_ac")?;
    let oracle = sweep_mpp(&h.sys.params.pv, 1.0, 0.01).p_mpp;
    let ratio = p_ac / oracle;
    ensure(
        (ratio - 1.0).abs() <= 0.01,
        format!("AC power {p_ac:.1} W of {oracle:.1} W"),
    )?;
    Ok(format!(
        "tracking {:.2} ms, settling {:.1} ms, MPPT {:.2}% of sweep",
        1e3 * track,
        1e3 * settle,
        100.0 * ratio
    ))
}

fn ripple_signature(h: &Harness) -> Outcome {
    let tone = |name: &str| -> Result<(f64, f64), String> {
        let out = h.run(name)?;
        let tr = &out.trace;
        let dt = tr.dt().ok_or("trace too short")?;
        let (t0, t1) = (7.0, 8.0);
        let (times, v) = samples(tr, "v_pv", t0, t1)?;
        let window = 1.0;
        let n = (window / dt).round() as usize;
        ensure(
            v.len() >= n,
            format!("{name}: {} samples for a {window} s window", v.len()),
        )?;
        let tone = extract_tone(&v[..n], dt, times[0], 100.0, window).map_err(|e| e.to_string())?;
        let p_pv = tr.mean("p_pv", t0, t1).ok_or("no p_pv")?;
        Ok((tone.amplitude, p_pv))
    };
    let (gt, p_gt) = tone("fig7a")?;
    let (bt, p_bt) = tone("fig7b")?;
    ensure(
        (p_gt / p_bt - 1.0).abs() < 0.02,
        format!("unequal power {p_gt:.0} W vs {p_bt:.0} W"),
    )?;
    ensure(
        gt > 10.0 * bt,
        format!("100 Hz ripple {gt:.4} V grid-tied vs {bt:.2e} V battery-tied"),
    )?;
    Ok(format!(
        "100 Hz ripple {gt:.4} V grid-tied vs {bt:.2e} V battery-tied at {p_gt:.0} W"
    ))
}

fn safety_invariant(h: &Harness) -> Outcome {
    let mut names: Vec<String> = std::fs::read_dir(Harness::scenario_dir())
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "scn"))
        .filter_map(|p| p.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .collect();
    names.sort();
    for name in &names {
        let out = h.run(name)?;
        ensure(
            out.report.safety.passed,
            format!("{name}: {}", out.report.safety.detail),
        )?;
    }
    Ok(format!("{} scenarios", names.len()))
}

fn main() -> ExitCode {
    let sys = match System::standard() {
        Ok(sys) => sys,
        Err(e) => {
            eprintln!("cannot build the system: {e}");
            return ExitCode::FAILURE;
        }
    };
    let h = Harness {
        sys,
        runs: RefCell::new(BTreeMap::new()),
    };
    let criteria: [Criterion; 8] = [
        ("1 plant equivalence", 30, plant_equivalence),
        ("2 loop design targets", 5, design_targets),
        ("3 emulation steady state", 20, emulation_steady_state),
        ("4 conductance ratio", 60, conductance_ratio),
        ("5 mode machine fidelity", 60, fsm_fidelity),
        ("6 grid-tied dynamics", 60, grid_tied_dynamics),
        ("7 ripple signature", 30, ripple_signature),
        ("8 no-charge safety", 120, safety_invariant),
    ];
    let mut failed = 0;
    for (name, budget, check) in criteria {
        let start = Instant::now();
        let outcome = check(&h);
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|detail| {
            if elapsed <= Duration::from_secs(budget) {
                Ok(detail)
            } else {
                Err(format!("{detail}; over the {budget} s budget"))
            }
        });
        let (status, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{status} {name} [{:.2} s]: {detail}", elapsed.as_secs_f64());
    }
    println!("{} of 8 criteria passed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
