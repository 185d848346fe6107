//! Brute-force sweep of the PV curve for its maximum power point.

use crate::plant::PvParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MppSweep {
    pub irradiance: f64,
    pub v_mpp: f64,
    pub p_mpp: f64,
}

/// Evaluates the array at every `resolution` volts from zero to open
/// circuit and refines the best sample on a ten-times finer grid.
pub fn sweep_mpp(pv: &PvParams, g: f64, resolution: f64) -> MppSweep {
    let power = |v: f64| v * pv.current_unchecked(v, g);
    let best = |lo: f64, hi: f64, step: f64| {
        let n = ((hi - lo) / step).ceil() as usize;
        (0..=n)
            .map(|k| (lo + k as f64 * step).min(hi))
            .map(|v| (v, power(v)))
            .fold(
                (lo, f64::NEG_INFINITY),
                |a, b| if b.1 > a.1 { b } else { a },
            )
    };
    let (v0, _) = best(0.0, pv.v_oc, resolution);
    let (v, p) = best(
        (v0 - resolution).max(0.0),
        (v0 + resolution).min(pv.v_oc),
        resolution / 10.0,
    );
    MppSweep {
        irradiance: g,
        v_mpp: v,
        p_mpp: p.max(0.0),
    }
}
