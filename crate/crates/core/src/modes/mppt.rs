use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MpptAlgorithm {
    #[default]
    IncrementalConductance,
    PerturbObserve,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MpptParams {
    pub algorithm: MpptAlgorithm,
    /// Reference step, V.
    pub step: f64,
    /// Update rate, Hz.
    pub rate: f64,
    /// Relative incremental-conductance deadband.
    pub deadband: f64,
    pub v_min: f64,
    pub v_max: f64,
}

impl MpptParams {
    /// Defaults for an array with open-circuit voltage `v_oc`.
    pub fn for_array(v_oc: f64) -> Self {
        Self {
            algorithm: MpptAlgorithm::IncrementalConductance,
            step: 2.0,
            rate: 10.0,
            deadband: 0.01,
            v_min: 0.1 * v_oc,
            v_max: v_oc,
        }
    }
}

/// Voltages below this change are treated as no change, V.
const MIN_DV: f64 = 1e-3;
/// Currents below this change are treated as no change, A.
const MIN_DI: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpptState {
    pub v_ref: f64,
    /// Previous `(v, i, p)` sample.
    pub previous: Option<(f64, f64, f64)>,
    pub direction: f64,
}

impl MpptState {
    pub fn new(v_ref: f64) -> Self {
        Self {
            v_ref,
            previous: None,
            direction: -1.0,
        }
    }
}

fn clamp(p: &MpptParams, v: f64) -> f64 {
    v.max(p.v_min).min(p.v_max)
}

/// One incremental-conductance update from the measured PV voltage and current.
pub fn mppt_ic_step(p: &MpptParams, st: &MpptState, v: f64, i: f64) -> (f64, MpptState) {
    let mut next = *st;
    next.previous = Some((v, i, v * i));
    let Some((v0, i0, _)) = st.previous else {
        next.v_ref = clamp(p, st.v_ref + st.direction * p.step);
        return (next.v_ref, next);
    };
    let dv = v - v0;
    let di = i - i0;
    let move_by = if dv.abs() < MIN_DV {
        if di.abs() < MIN_DI {
            0.0
        } else {
            di.signum()
        }
    } else if v <= 0.0 {
        1.0
    } else {
        let g = i / v;
        let mismatch = di / dv + g;
        if mismatch.abs() < p.deadband * g.abs() {
            0.0
        } else {
            mismatch.signum()
        }
    };
    if move_by != 0.0 {
        next.direction = move_by;
    }
    next.v_ref = clamp(p, st.v_ref + move_by * p.step);
    (next.v_ref, next)
}

/// One perturb-and-observe update.
pub fn mppt_po_step(p: &MpptParams, st: &MpptState, v: f64, i: f64) -> (f64, MpptState) {
    let mut next = *st;
    let power = v * i;
    next.previous = Some((v, i, power));
    if let Some((_, _, p0)) = st.previous {
        if power < p0 {
            next.direction = -st.direction;
        }
    }
    next.v_ref = clamp(p, st.v_ref + next.direction * p.step);
    (next.v_ref, next)
}

pub fn mppt_step(p: &MpptParams, st: &MpptState, v: f64, i: f64) -> (f64, MpptState) {
    match p.algorithm {
        MpptAlgorithm::IncrementalConductance => mppt_ic_step(p, st, v, i),
        MpptAlgorithm::PerturbObserve => mppt_po_step(p, st, v, i),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> MpptParams {
        MpptParams::for_array(560.0)
    }

    #[test]
    fn holds_at_ic_equilibrium() {
        // samples on a line with slope −i/v through the present point
        let (v, i) = (480.0, 7.5);
        let st = MpptState {
            v_ref: 480.0,
            previous: Some((482.0, i - 2.0 * i / v, 0.0)),
            direction: -1.0,
        };
        let (v_ref, _) = mppt_ic_step(&params(), &st, v, i);
        assert_eq!(v_ref, 480.0);
    }

    #[test]
    fn voltage_side_moves_down() {
        let st = MpptState {
            v_ref: 530.0,
            previous: Some((532.0, 5.0, 0.0)),
            direction: -1.0,
        };
        // steep slope: |di/dv| = 0.1 > i/v ≈ 0.01
        let (v_ref, _) = mppt_ic_step(&params(), &st, 530.0, 5.2);
        assert_eq!(v_ref, 528.0);
    }

    #[test]
    fn stays_in_bounds() {
        let p = params();
        let mut st = MpptState::new(p.v_min + 1.0);
        for _ in 0..10 {
            st = mppt_ic_step(&p, &st, 10.0, 8.0).1;
            assert!(st.v_ref >= p.v_min && st.v_ref <= p.v_max);
        }
    }
}
