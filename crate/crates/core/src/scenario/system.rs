//! Closed-loop simulation of the converter, its control laws and the supervisor.

use std::f64::consts::TAU;

use super::format::{Action, Scenario, SetPoint, CHANNELS};
use super::report::{evaluate, PhaseMetrics, RunReport};
use crate::control::ControlDesign;
use crate::modes::{
    bec_step, grid_tied_step, mppt_step, pll_step, voltage_step, BatteryTiedState,
    GridMeasurements, GridTiedParams, GridTiedState, MarginEstimate, MarginEstimator,
    MovingAverage, MpptAlgorithm, MpptParams, MpptState, PllParams, PllState,
};
use crate::plant::{
    battery_tied_derivatives, grid_tied_derivatives, ConverterState, OperatingPoint, PvParams,
    SystemParams,
};
use crate::sim::{integrate_step, SimConfig, Trace};
use crate::supervisor::{FlagInputs, Flags, Level, Mode, Supervisor, SupervisorEvent, Thresholds};
use crate::{Error, Result};

/// Timing of the measurement and supervision layers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub sim: SimConfig,
    /// Supervisor and MPPT update period, s.
    pub supervisor_period: f64,
    /// Averaging window of the battery current fed to the flags, s.
    pub i_b_window: f64,
    /// Averaging window of the PV measurements fed to the MPPT, s.
    pub mppt_window: f64,
    /// Perturbation amplitude as a fraction of the nominal MPP voltage.
    pub perturb_fraction: f64,
    pub perturb_frequency: f64,
    /// Sample rate and window of the margin estimator.
    pub margin_rate: f64,
    pub margin_window: f64,
    /// Time after any event or emulation entry excluded from the no-charge check, s.
    pub safety_settle: f64,
    /// Window either side of a transition for continuity checks, s.
    pub continuity_window: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            sim: SimConfig::default(),
            supervisor_period: 0.1,
            i_b_window: 0.1,
            mppt_window: 0.01,
            perturb_fraction: 0.01,
            perturb_frequency: 10.0,
            margin_rate: 1000.0,
            margin_window: 0.2,
            safety_settle: 5.0,
            continuity_window: 0.1,
        }
    }
}

/// Plant, controllers and supervisor thresholds for a run.
#[derive(Debug, Clone, PartialEq)]
pub struct System {
    pub params: SystemParams,
    pub design: ControlDesign,
    pub thresholds: Thresholds,
    pub mppt: MpptParams,
    pub options: RunOptions,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: Trace,
    pub report: RunReport,
}

impl System {
    pub fn new(params: SystemParams, design: ControlDesign) -> Self {
        Self {
            thresholds: Thresholds::for_battery(params.battery.rated_current()),
            mppt: MpptParams::for_array(params.pv.v_oc),
            options: RunOptions::default(),
            params,
            design,
        }
    }

    /// Default parameters with freshly derived controllers.
    pub fn standard() -> Result<Self> {
        let params = SystemParams::default();
        Ok(Self::new(params, ControlDesign::derive(&params)?))
    }

    pub fn grid_tied_params(&self) -> GridTiedParams {
        let grid = &self.params.grid;
        GridTiedParams {
            voltage: self.design.grid_voltage,
            current: self.design.grid_current,
            pll: PllParams::new(grid.omega(), grid.amplitude(), self.design.pll),
            filter_window: self.design.targets.grid_voltage_filter,
        }
    }

    /// Simulates `scenario` and evaluates its assertions.
    pub fn run(&self, scenario: &Scenario) -> Result<RunOutput> {
        let mut sim = self.options.sim.with_t_end(scenario.duration);
        if let Some(dt) = scenario.dt {
            sim.dt = dt;
        }
        if let Some(d) = scenario.decimation {
            sim.sample_decimation = d;
        }
        sim.grid_frequency = self.params.grid.frequency;
        sim.validate()?;
        self.params.validate()?;
        self.thresholds.validate()?;

        let mut run = Run::new(self, scenario, sim)?;
        let steps = sim.steps();
        let mut trace = Trace::new(CHANNELS);
        let mut row = [0.0; CHANNELS.len()];
        for k in 0..=steps {
            let t = k as f64 * sim.dt;
            run.apply_events(t)?;
            let out = run.control(k, t);
            if k % sim.sample_decimation == 0 {
                run.record(&out, &mut row);
                trace.push(t, &row)?;
            }
            if k < steps {
                run.advance(t, &out)?;
            }
        }

        let report = run.finish(&trace);
        Ok(RunOutput { trace, report })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Topology {
    Grid,
    Battery,
}

/// Measured and commanded quantities at one step.
#[derive(Debug, Clone, Copy, Default)]
struct StepOutputs {
    v_pv: f64,
    v_pv_avg: f64,
    i_pv: f64,
    i_b: f64,
    i_b_avg: f64,
    i_load: f64,
    v_bat: f64,
    v_g: f64,
    duty: f64,
    m: f64,
    i_ref: f64,
    v_ref: f64,
}

struct Run<'a> {
    sys: &'a System,
    scenario: &'a Scenario,
    dt: f64,
    gt_params: GridTiedParams,
    state: [f64; 2],
    topology: Topology,
    enabled: bool,
    grid: bool,
    irradiance: f64,
    /// UPS load resistance; the UPS carries it from the grid when present.
    ups_load: f64,
    supervisor: Supervisor,
    supervisor_enabled: bool,
    gt: GridTiedState,
    bt: BatteryTiedState,
    mppt: MpptState,
    mppt_params: MpptParams,
    mppt_enabled: bool,
    fixed_v_ref: Option<f64>,
    vloop_enabled: bool,
    iq_override: f64,
    perturb_amplitude: f64,
    perturb_all: bool,
    perturb_origin: f64,
    v_avg: MovingAverage,
    i_avg: MovingAverage,
    ib_avg: MovingAverage,
    margin: MarginEstimator,
    last_margin: MarginEstimate,
    duty: f64,
    modulation: f64,
    next_event: usize,
    supervisor_stride: usize,
    /// Times at which the no-charge check is suspended for a settling interval.
    disturbances: Vec<f64>,
    /// Largest command change across a battery-tied mode transition.
    handover_jumps: Vec<(f64, f64)>,
    pending_jump: Option<(f64, f64)>,
}

impl<'a> Run<'a> {
    fn new(sys: &'a System, scenario: &'a Scenario, sim: SimConfig) -> Result<Self> {
        let p = &sys.params;
        let dt = sim.dt;
        let opts = &sys.options;
        let gt_params = sys.grid_tied_params();
        let mode = scenario.initial_mode();
        if mode == Mode::GtMppt && !scenario.grid {
            return Err(Error::config(format!(
                "scenario `{}` starts grid-tied without a grid",
                scenario.name
            )));
        }
        let initial_flags = Flags::new(Level::from_bool(scenario.grid), Level::L, Level::H);
        let pll = if scenario.grid {
            PllState::locked_to(&gt_params.pll, p.grid.amplitude(), 0.0)
        } else {
            PllState::idle(&gt_params.pll)
        };
        let r_load = scenario.load.unwrap_or(f64::INFINITY);
        let g = scenario.irradiance;

        let v_oc = open_circuit_voltage(&p.pv, g);
        let v_start = match (scenario.v_pv, mode) {
            (Some(v), _) => v,
            (None, Mode::BtBec) if scenario.rgti => {
                emulation_voltage(sys, g, r_load).unwrap_or(v_oc)
            }
            _ => v_oc,
        };

        let mut run = Self {
            sys,
            scenario,
            dt,
            gt_params,
            state: [v_start, 0.0],
            topology: if mode.is_battery_tied() {
                Topology::Battery
            } else {
                Topology::Grid
            },
            enabled: scenario.rgti,
            grid: scenario.grid,
            irradiance: g,
            ups_load: r_load,
            supervisor: Supervisor::new(mode, initial_flags, sys.thresholds),
            supervisor_enabled: true,
            gt: GridTiedState::new(&gt_params, pll, v_start, 0.0, dt),
            bt: BatteryTiedState::default(),
            mppt: MpptState::new(v_start),
            mppt_params: sys.mppt,
            mppt_enabled: true,
            fixed_v_ref: None,
            vloop_enabled: true,
            iq_override: 0.0,
            perturb_amplitude: opts.perturb_fraction * p.pv.v_mpp,
            perturb_all: false,
            perturb_origin: 0.0,
            v_avg: MovingAverage::with_window(opts.mppt_window, dt),
            i_avg: MovingAverage::with_window(opts.mppt_window, dt),
            ib_avg: MovingAverage::with_window(opts.i_b_window, dt),
            margin: MarginEstimator::new(
                dt,
                opts.margin_rate,
                opts.perturb_frequency,
                opts.margin_window,
                opts.perturb_fraction * p.pv.v_mpp,
            ),
            last_margin: MarginEstimate::default(),
            duty: 0.0,
            modulation: 0.0,
            next_event: 0,
            supervisor_stride: ((opts.supervisor_period / dt).round() as usize).max(1),
            disturbances: Vec::new(),
            handover_jumps: Vec::new(),
            pending_jump: None,
        };
        for &(sp, v) in &scenario.initial {
            run.set_point(sp, v)?;
        }

        let i_pv0 = p.pv.current_unchecked(v_start, g).max(0.0);
        run.v_avg.reset(v_start);
        run.i_avg.reset(i_pv0);
        run.ib_avg
            .reset(p.battery.node(0.0, run.battery_load()).i_b);
        if scenario.rgti {
            run.start(mode, 0.0, true);
        }
        Ok(run)
    }

    /// Load seen by the battery.
    fn battery_load(&self) -> f64 {
        if self.grid {
            f64::INFINITY
        } else {
            self.ups_load
        }
    }

    fn pv(&self) -> &PvParams {
        &self.sys.params.pv
    }

    /// Initializes the control state for `mode` at start-up or enable,
    /// from steady state where one exists.
    fn start(&mut self, mode: Mode, t: f64, at_equilibrium: bool) {
        let p = self.sys.params;
        let v = self.state[0];
        self.supervisor.start_in(mode, t);
        self.mppt = MpptState::new(self.fixed_v_ref.unwrap_or(v));
        match mode {
            Mode::GtMppt => {
                self.topology = Topology::Grid;
                self.state[1] = 0.0;
                // amplitude that exports the present PV power
                let p_pv = v * p.pv.current_unchecked(v, self.irradiance).max(0.0);
                let iq = if at_equilibrium && self.vloop_enabled {
                    (2.0 * p_pv / p.grid.amplitude()).min(self.gt_params.voltage.max)
                } else {
                    self.iq_override
                };
                self.gt = GridTiedState::new(&self.gt_params, self.gt.pll, v, iq, self.dt);
                self.modulation = 0.0;
            }
            Mode::BtMppt | Mode::BtBec => {
                self.topology = Topology::Battery;
                let op = OperatingPoint::battery_tied(
                    &p.pv,
                    self.irradiance,
                    &p.battery,
                    &p.converter,
                    self.battery_load(),
                    v,
                );
                let duty = match op {
                    Ok(op) if at_equilibrium && op.duty < 1.0 => {
                        self.state[1] = op.i_l();
                        op.duty
                    }
                    _ => {
                        self.state[1] = 0.0;
                        self.zero_current_duty(v)
                    }
                };
                self.bt = BatteryTiedState::bumpless(
                    &self.sys.design.voltage,
                    &self.sys.design.current,
                    duty,
                    v,
                );
                self.duty = duty;
                if mode == Mode::BtBec {
                    self.enter_emulation(t);
                }
            }
        }
        self.disturbances.push(t);
    }

    fn zero_current_duty(&self, v_pv: f64) -> f64 {
        let (v_th, _) = self.sys.params.battery.thevenin(self.battery_load());
        (v_th / v_pv.max(1.0)).clamp(0.0, 1.0)
    }

    fn enter_emulation(&mut self, t: f64) {
        self.margin.clear();
        self.last_margin = MarginEstimate::default();
        self.perturb_origin = t;
        self.disturbances.push(t);
    }

    fn set_point(&mut self, sp: SetPoint, v: f64) -> Result<()> {
        let flag = |v: f64| v != 0.0;
        match sp {
            SetPoint::MpptEnable => {
                self.mppt_enabled = flag(v);
                if self.mppt_enabled {
                    self.fixed_v_ref = None;
                } else if self.fixed_v_ref.is_none() {
                    self.fixed_v_ref = Some(self.mppt.v_ref);
                }
            }
            SetPoint::VRef => {
                self.fixed_v_ref = Some(v);
                self.mppt = MpptState::new(v);
            }
            SetPoint::VloopEnable => self.vloop_enabled = flag(v),
            SetPoint::IqRef => self.iq_override = v,
            SetPoint::PerturbAmplitude => {
                let cap = 0.02 * self.pv().v_mpp;
                if !(0.0..=cap).contains(&v) {
                    return Err(Error::config(format!(
                        "perturbation amplitude {v} V is outside [0, {cap}] V"
                    )));
                }
                self.perturb_amplitude = v;
            }
            SetPoint::PerturbAllModes => self.perturb_all = flag(v),
            SetPoint::MpptAlgorithm => {
                self.mppt_params.algorithm = if flag(v) {
                    MpptAlgorithm::PerturbObserve
                } else {
                    MpptAlgorithm::IncrementalConductance
                }
            }
            SetPoint::MpptStep => {
                if !(v > 0.0) {
                    return Err(Error::config(format!("MPPT step {v} V must be positive")));
                }
                self.mppt_params.step = v;
            }
            SetPoint::SupervisorEnable => self.supervisor_enabled = flag(v),
        }
        Ok(())
    }

    fn apply_events(&mut self, t: f64) -> Result<()> {
        let half = 0.5 * self.dt;
        while let Some(e) = self.scenario.events.get(self.next_event) {
            if e.t > t + half {
                break;
            }
            self.next_event += 1;
            self.disturbances.push(t);
            match e.action {
                Action::GridLoss => self.grid = false,
                Action::GridReturn => self.grid = true,
                Action::LoadStep(r) => self.ups_load = r.unwrap_or(f64::INFINITY),
                Action::IrradianceStep(g) => self.irradiance = g,
                Action::EnableRgti => {
                    if !self.enabled {
                        self.enabled = true;
                        let mode = if self.grid && self.gt.pll.locked {
                            Mode::GtMppt
                        } else {
                            Mode::BtMppt
                        };
                        self.start(mode, t, false);
                    }
                }
                Action::SetPoint(sp, v) => self.set_point(sp, v)?,
            }
        }
        Ok(())
    }

    fn grid_voltage(&self, t: f64) -> f64 {
        if self.grid {
            self.sys.params.grid.voltage(t, 0.0)
        } else {
            0.0
        }
    }

    /// Whether the converter is switching and able to carry current.
    fn active(&self) -> bool {
        self.enabled && !(self.topology == Topology::Grid && !self.grid)
    }

    fn plant_outputs(&self, t: f64) -> (f64, f64, crate::plant::BatteryNode) {
        let p = &self.sys.params;
        let s = ConverterState {
            v_cap: self.state[0],
            i_l: self.state[1],
            duty: self.duty,
        };
        let i_l_dc = if self.topology == Topology::Battery {
            self.state[1]
        } else {
            0.0
        };
        let node = p.battery.node(i_l_dc, self.battery_load());
        match self.topology {
            Topology::Battery => {
                let (_, o) = battery_tied_derivatives(
                    &s,
                    &p.pv,
                    self.irradiance,
                    &p.battery,
                    &p.converter,
                    self.battery_load(),
                );
                (o.v_pv, o.i_pv, node)
            }
            Topology::Grid => {
                let v_g = self.grid_voltage(t);
                let (_, o) = grid_tied_derivatives(
                    &s,
                    self.modulation,
                    &p.pv,
                    self.irradiance,
                    &p.converter,
                    v_g,
                );
                (o.v_pv, o.i_pv, node)
            }
        }
    }

    /// Measures, runs the supervisor and control laws, and returns the
    /// commands to hold over the next step.
    fn control(&mut self, k: usize, t: f64) -> StepOutputs {
        let (v_pv, i_pv, node) = self.plant_outputs(t);
        let v_g = self.grid_voltage(t);
        let v_pv_avg = self.v_avg.push(v_pv);
        let i_pv_avg = self.i_avg.push(i_pv);
        let i_b_avg = self.ib_avg.push(node.i_b);
        let mode = self.supervisor.mode();
        if self.enabled && (mode == Mode::BtBec || self.perturb_all) {
            self.margin.push(v_pv, i_pv);
        }

        if k.is_multiple_of(self.supervisor_stride) && k > 0 {
            if self.enabled {
                self.supervise(t, i_b_avg, v_pv);
            }
            if self.enabled && self.mppt_enabled && self.supervisor.mode() != Mode::BtBec {
                let (_, next) = mppt_step(&self.mppt_params, &self.mppt, v_pv_avg, i_pv_avg);
                self.mppt = next;
            }
        }
        let mode = self.supervisor.mode();
        let v_ref_cmd = self.fixed_v_ref.unwrap_or(self.mppt.v_ref);
        let perturb = if self.enabled && (mode == Mode::BtBec || self.perturb_all) {
            self.perturb_amplitude
                * (TAU * self.sys.options.perturb_frequency * (t - self.perturb_origin)).sin()
        } else {
            0.0
        };

        let mut out = StepOutputs {
            v_pv,
            v_pv_avg,
            i_pv,
            i_b: node.i_b,
            i_b_avg,
            i_load: node.i_load,
            v_bat: node.v_node,
            v_g,
            duty: 0.0,
            m: 0.0,
            i_ref: 0.0,
            v_ref: v_ref_cmd,
        };

        // the PLL tracks the grid whatever the converter is doing
        let grid_active = self.enabled && self.topology == Topology::Grid;
        if !grid_active {
            self.gt.pll = pll_step(&self.gt_params.pll, &self.gt.pll, v_g, self.dt);
        }

        if !self.enabled {
            self.duty = 0.0;
            self.modulation = 0.0;
            return out;
        }
        let design = &self.sys.design;
        match mode {
            Mode::GtMppt => {
                let meas = GridMeasurements {
                    v_g,
                    i_ac: self.state[1],
                    v_pv,
                };
                let v_ref = self.vloop_enabled.then_some(v_ref_cmd + perturb);
                let o = grid_tied_step(
                    &self.gt_params,
                    &mut self.gt,
                    &meas,
                    v_ref,
                    self.iq_override,
                    self.dt,
                );
                self.modulation = if self.grid { o.modulation } else { 0.0 };
                out.m = self.modulation;
                out.i_ref = o.i_ref;
            }
            Mode::BtMppt => {
                let (duty, next) = voltage_step(
                    &design.voltage,
                    &self.bt,
                    v_ref_cmd + perturb,
                    v_pv,
                    self.dt,
                );
                self.bt = next;
                self.duty = duty;
            }
            Mode::BtBec => {
                let (duty, v_ref, next) = bec_step(
                    &design.current,
                    &design.voltage,
                    &self.bt,
                    node.i_b,
                    v_pv,
                    perturb,
                    self.dt,
                );
                if next.margin_collapse() && !self.bt.margin_collapse() {
                    self.supervisor.note(SupervisorEvent::MarginCollapse { t });
                }
                self.bt = next;
                self.duty = duty;
                out.v_ref = v_ref;
            }
        }
        if let Some((t0, before)) = self.pending_jump.take() {
            self.handover_jumps.push((t0, (self.duty - before).abs()));
        }
        out.duty = if self.topology == Topology::Battery {
            self.duty
        } else {
            0.0
        };
        out
    }

    fn supervise(&mut self, t: f64, i_b_avg: f64, v_pv: f64) {
        let mode = self.supervisor.mode();
        if (mode == Mode::BtBec || self.perturb_all) && self.margin.is_ready() {
            self.last_margin = self.margin.estimate();
        }
        let inputs = FlagInputs {
            grid_ok: self.grid && self.gt.pll.locked,
            i_b: i_b_avg,
            margin: if mode == Mode::BtBec {
                self.last_margin
            } else {
                MarginEstimate::default()
            },
        };
        if !self.supervisor_enabled {
            return;
        }
        let Some(tr) = self.supervisor.tick(t, &inputs) else {
            return;
        };
        self.disturbances.push(t);
        if tr.from == Mode::BtBec && !self.perturb_all {
            self.last_margin = MarginEstimate::default();
        }
        let design = &self.sys.design;
        match (tr.from, tr.to) {
            (Mode::BtMppt, Mode::BtBec) => {
                self.pending_jump = Some((t, self.duty));
                self.bt =
                    BatteryTiedState::bumpless(&design.voltage, &design.current, self.duty, v_pv);
                self.enter_emulation(t);
            }
            (Mode::BtBec, Mode::BtMppt) => {
                self.pending_jump = Some((t, self.duty));
                // keep the inner loop; MPPT resumes from the emulation operating point
                self.bt.saturated_for = 0.0;
                self.mppt = MpptState::new(self.fixed_v_ref.unwrap_or(self.bt.outer.lag_out));
            }
            (_, Mode::GtMppt) => {
                self.topology = Topology::Grid;
                self.state[1] = 0.0;
                self.gt = GridTiedState::new(&self.gt_params, self.gt.pll, v_pv, 0.0, self.dt);
                self.mppt = MpptState::new(self.fixed_v_ref.unwrap_or(v_pv));
                self.modulation = 0.0;
            }
            (_, _) => {
                // grid lost: reconnect to the battery with zero initial current
                self.topology = Topology::Battery;
                self.state[1] = 0.0;
                let duty = self.zero_current_duty(v_pv);
                self.bt = BatteryTiedState::bumpless(&design.voltage, &design.current, duty, v_pv);
                self.duty = duty;
                self.mppt = MpptState::new(self.fixed_v_ref.unwrap_or(v_pv));
                if tr.to == Mode::BtBec {
                    self.enter_emulation(t);
                }
            }
        }
    }

    fn advance(&mut self, t: f64, _out: &StepOutputs) -> Result<()> {
        let p = self.sys.params;
        let g = self.irradiance;
        let r_load = self.battery_load();
        let active = self.active();
        let (duty, m) = (self.duty, self.modulation);
        let grid = self.grid;
        let topology = self.topology;
        let next = integrate_step(&self.state, t, self.dt, |tt, x| {
            let s = ConverterState {
                v_cap: x[0],
                i_l: if active { x[1] } else { 0.0 },
                duty,
            };
            let d = match topology {
                Topology::Battery => {
                    battery_tied_derivatives(&s, &p.pv, g, &p.battery, &p.converter, r_load).0
                }
                Topology::Grid => {
                    let v_g = if grid { p.grid.voltage(tt, 0.0) } else { 0.0 };
                    grid_tied_derivatives(&s, m, &p.pv, g, &p.converter, v_g).0
                }
            };
            [d[0], if active { d[1] } else { 0.0 }]
        })
        .map_err(|e| match e {
            Error::Diverged { t, channel } => Error::Diverged {
                t,
                channel: format!(
                    "{} ({channel})",
                    if channel.ends_with("[0]") {
                        "v_cap"
                    } else {
                        "i_l"
                    }
                ),
            },
            other => other,
        })?;
        self.state = next;
        if !active {
            self.state[1] = 0.0;
        }
        Ok(())
    }

    fn record(&self, out: &StepOutputs, row: &mut [f64]) {
        let flags = self.supervisor.flags();
        let level = |l: Level| if l.is_high() { 1.0 } else { 0.0 };
        let (i_l, i_ac) = match self.topology {
            Topology::Battery => (self.state[1], 0.0),
            Topology::Grid => (0.0, self.state[1]),
        };
        let mode = if self.enabled {
            self.supervisor.mode().code()
        } else {
            -1.0
        };
        let values = [
            out.v_pv,
            out.v_pv_avg,
            out.i_pv,
            i_l,
            i_ac,
            out.i_b,
            out.i_b_avg,
            out.i_load,
            out.v_bat,
            out.duty,
            out.m,
            out.v_g,
            out.i_ref,
            out.v_ref,
            if self.topology == Topology::Grid && self.enabled {
                self.gt.iq_ref
            } else {
                0.0
            },
            if self.last_margin.valid {
                self.last_margin.g_r
            } else {
                f64::NAN
            },
            mode,
            level(flags.f_grid),
            level(flags.f_chg),
            level(flags.f_g),
            out.v_pv * out.i_pv,
            out.v_g * i_ac,
            out.v_bat * out.i_load,
        ];
        row.copy_from_slice(&values);
    }

    fn finish(self, trace: &Trace) -> RunReport {
        let sc = self.scenario;
        let pv = self.sys.params.pv;
        let events = &sc.events;
        let irradiance_at = |t: f64| {
            events
                .iter()
                .take_while(|e| e.t <= t)
                .filter_map(|e| match e.action {
                    Action::IrradianceStep(g) => Some(g),
                    _ => None,
                })
                .last()
                .unwrap_or(sc.irradiance)
        };
        let mpp_power = |t: f64| pv.mpp(irradiance_at(t)).1;

        let mut bounds: Vec<f64> = std::iter::once(0.0)
            .chain(events.iter().map(|e| e.t))
            .chain(std::iter::once(sc.duration))
            .collect();
        bounds.dedup();
        let phases = bounds
            .windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| PhaseMetrics::measure(trace, w[0], w[1]))
            .collect();

        let ctx = super::report::Context {
            trace,
            transitions: self.supervisor.transitions(),
            final_mode: self.supervisor.mode(),
            mpp_power: &mpp_power,
            continuity_window: self.sys.options.continuity_window,
        };
        let verdicts = sc.assertions.iter().map(|a| evaluate(a, &ctx)).collect();
        let safety = super::report::no_charge_check(
            trace,
            &self.disturbances,
            self.sys.options.safety_settle,
            self.sys.thresholds.i_b_deadband,
        );
        let bumpless = super::report::bumpless_check(&self.handover_jumps, 0.05);
        RunReport {
            name: sc.name.clone(),
            final_mode: self.supervisor.mode(),
            transitions: self.supervisor.transitions().to_vec(),
            events: self.supervisor.events().to_vec(),
            phases,
            verdicts,
            safety,
            bumpless,
        }
    }
}

/// Open-circuit voltage at irradiance `g`.
pub fn open_circuit_voltage(pv: &PvParams, g: f64) -> f64 {
    if g <= 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, 1.05 * pv.v_oc);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if pv.current_unchecked(mid, g) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// PV voltage above the MPP at which the array exactly carries `r_load`
/// with no battery current, if one exists.
pub fn emulation_voltage(sys: &System, g: f64, r_load: f64) -> Option<f64> {
    let p = &sys.params;
    if !r_load.is_finite() {
        return None;
    }
    let i_b = |v: f64| -> Option<f64> {
        let op =
            OperatingPoint::battery_tied(&p.pv, g, &p.battery, &p.converter, r_load, v).ok()?;
        Some(p.battery.node(op.i_l(), r_load).i_b)
    };
    let (v_mpp, _) = p.pv.mpp(g);
    let v_oc = open_circuit_voltage(&p.pv, g);
    let (mut lo, mut hi) = (v_mpp, v_oc * (1.0 - 1e-9));
    // i_B rises toward open circuit; above the MPP a root exists only if the
    // array can carry the load at all
    if i_b(lo)? > 0.0 {
        return None;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        match i_b(mid) {
            Some(x) if x > 0.0 => hi = mid,
            Some(_) => lo = mid,
            None => hi = mid,
        }
    }
    Some(0.5 * (lo + hi))
}
