use crate::tf::RationalTf;
use crate::{Error, Result};

const F_MIN: f64 = 1e-2;
const F_MAX: f64 = 1e5;
const POINTS_PER_DECADE: usize = 400;

/// `(magnitude dB, phase degrees)` at `f` Hz. A pole gives `+∞` dB.
pub fn freq_response(tf: &RationalTf, f: f64) -> (f64, f64) {
    let g = tf.at_hz(f);
    if !g.re.is_finite() || !g.im.is_finite() {
        return (f64::INFINITY, 0.0);
    }
    (20.0 * g.norm().log10(), g.arg().to_degrees())
}

/// Unwrapped phase in degrees along a sorted frequency grid.
fn unwrapped_phase(tf: &RationalTf, freqs: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(freqs.len());
    let mut prev: Option<f64> = None;
    for &f in freqs {
        let mut ph = tf.at_hz(f).arg().to_degrees();
        if let Some(p) = prev {
            while ph - p > 180.0 {
                ph -= 360.0;
            }
            while ph - p < -180.0 {
                ph += 360.0;
            }
        }
        prev = Some(ph);
        out.push(ph);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Crossing {
    pub frequency: f64,
    pub phase_margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Margins {
    /// Highest unity-gain crossover, Hz.
    pub crossover: f64,
    /// Phase margin at `crossover`, degrees.
    pub phase_margin: f64,
    /// Smallest gain margin over all −180° crossings, dB (∞ if none).
    pub gain_margin: f64,
    /// Every unity-gain crossing, ascending in frequency.
    pub crossings: Vec<Crossing>,
}

impl Margins {
    pub fn min_phase_margin(&self) -> f64 {
        self.crossings
            .iter()
            .map(|c| c.phase_margin)
            .fold(f64::INFINITY, f64::min)
    }
}

fn log_grid() -> Vec<f64> {
    let decades = (F_MAX / F_MIN).log10();
    let n = (decades * POINTS_PER_DECADE as f64).round() as usize;
    (0..=n)
        .map(|k| F_MIN * 10f64.powf(decades * k as f64 / n as f64))
        .collect()
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let f_lo = f(lo);
    for _ in 0..100 {
        let mid = (lo * hi).sqrt();
        if f(mid).signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-13 {
            break;
        }
    }
    (lo * hi).sqrt()
}

/// `180° + phase`, wrapped to (−180°, 180°].
fn wrap_pm(phase_deg: f64) -> f64 {
    let pm = 180.0 + phase_deg;
    if pm > 180.0 {
        pm - 360.0
    } else {
        pm
    }
}

/// Gain and phase margins of the open loop `L` (unity negative feedback).
pub fn margins(open_loop: &RationalTf) -> Result<Margins> {
    let grid = log_grid();
    let log_mag = |f: f64| open_loop.at_hz(f).norm().ln();
    let mags: Vec<f64> = grid.iter().map(|&f| log_mag(f)).collect();
    let phases = unwrapped_phase(open_loop, &grid);

    let mut crossings = Vec::new();
    let mut gain_margin = f64::INFINITY;
    for k in 0..grid.len() - 1 {
        if mags[k].signum() != mags[k + 1].signum()
            && mags[k].is_finite()
            && mags[k + 1].is_finite()
        {
            let f = bisect(grid[k], grid[k + 1], log_mag);
            let ph = open_loop.at_hz(f).arg().to_degrees();
            crossings.push(Crossing {
                frequency: f,
                phase_margin: wrap_pm(ph),
            });
        }
        // phase crossing of an odd multiple of −180°
        let a = ((phases[k] + 180.0) / 360.0).floor();
        let b = ((phases[k + 1] + 180.0) / 360.0).floor();
        if a != b {
            let target = 360.0 * a.max(b) - 180.0;
            let f = bisect(grid[k], grid[k + 1], |f| {
                let mut ph = open_loop.at_hz(f).arg().to_degrees();
                while ph - phases[k] > 180.0 {
                    ph -= 360.0;
                }
                while ph - phases[k] < -180.0 {
                    ph += 360.0;
                }
                ph - target
            });
            gain_margin = gain_margin.min(-20.0 * open_loop.at_hz(f).norm().log10());
        }
    }
    let last = crossings.last().ok_or(Error::NoCrossover)?;
    Ok(Margins {
        crossover: last.frequency,
        phase_margin: last.phase_margin,
        gain_margin,
        crossings,
    })
}
