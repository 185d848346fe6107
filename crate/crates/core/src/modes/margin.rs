use std::collections::VecDeque;

use crate::sim::extract_tone;
use crate::Result;

/// Conductance-ratio estimate of the PV power margin.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MarginEstimate {
    /// Incremental conductance magnitude, S.
    pub g_tilde: f64,
    /// Static conductance `I_pv/V_pv`, S.
    pub g_dc: f64,
    /// `g_tilde/g_dc`.
    pub g_r: f64,
    pub valid: bool,
}

/// Ratio of the incremental conductance at the perturbation frequency to
/// the static conductance, over the trailing `window` seconds of uniformly
/// sampled PV voltage and current.
///
/// The estimate is marked invalid when the voltage tone is below 1% of
/// `injected` or the PV current is not positive.
pub fn estimate_margin(
    v: &[f64],
    i: &[f64],
    dt: f64,
    frequency: f64,
    window: f64,
    injected: f64,
) -> Result<MarginEstimate> {
    let tv = extract_tone(v, dt, 0.0, frequency, window)?;
    let ti = extract_tone(i, dt, 0.0, frequency, window)?;
    let n = (window / dt).round() as usize;
    let mean = |x: &[f64]| x[x.len() - n..].iter().sum::<f64>() / n as f64;
    let (v_dc, i_dc) = (mean(v), mean(i));
    let valid = tv.amplitude >= 0.01 * injected && i_dc > 0.0 && v_dc > 0.0;
    if !valid {
        return Ok(MarginEstimate::default());
    }
    let g_tilde = ti.amplitude / tv.amplitude;
    let g_dc = i_dc / v_dc;
    Ok(MarginEstimate {
        g_tilde,
        g_dc,
        g_r: g_tilde / g_dc,
        valid: true,
    })
}

/// Streaming form of [`estimate_margin`]: decimates the PV voltage and
/// current into fixed-length buffers and estimates on demand.
#[derive(Debug, Clone)]
pub struct MarginEstimator {
    v: VecDeque<f64>,
    i: VecDeque<f64>,
    len: usize,
    decimation: usize,
    counter: usize,
    sample_dt: f64,
    frequency: f64,
    window: f64,
    injected: f64,
}

impl MarginEstimator {
    /// `sample_rate` is the decimated rate in Hz; `dt` the caller's step.
    pub fn new(dt: f64, sample_rate: f64, frequency: f64, window: f64, injected: f64) -> Self {
        let decimation = ((1.0 / sample_rate) / dt).round().max(1.0) as usize;
        let sample_dt = decimation as f64 * dt;
        let len = (window / sample_dt).round() as usize;
        Self {
            v: VecDeque::with_capacity(len),
            i: VecDeque::with_capacity(len),
            len,
            decimation,
            counter: 0,
            sample_dt,
            frequency,
            window,
            injected,
        }
    }

    pub fn clear(&mut self) {
        self.v.clear();
        self.i.clear();
        self.counter = 0;
    }

    pub fn push(&mut self, v: f64, i: f64) {
        self.counter += 1;
        if self.counter < self.decimation {
            return;
        }
        self.counter = 0;
        if self.v.len() == self.len {
            self.v.pop_front();
            self.i.pop_front();
        }
        self.v.push_back(v);
        self.i.push_back(i);
    }

    pub fn is_ready(&self) -> bool {
        self.v.len() == self.len
    }

    pub fn estimate(&mut self) -> MarginEstimate {
        if !self.is_ready() {
            return MarginEstimate::default();
        }
        let v = self.v.make_contiguous();
        let i = self.i.make_contiguous();
        estimate_margin(
            v,
            i,
            self.sample_dt,
            self.frequency,
            self.window,
            self.injected,
        )
        .unwrap_or_default()
    }
}
