use std::f64::consts::TAU;

use super::analysis::margins;
use super::pi::PiParams;
use crate::tf::RationalTf;
use crate::{Error, Result};

/// PI as a transfer function, `k_p + k_i/s`.
pub fn pi_tf(p: &PiParams) -> RationalTf {
    RationalTf::new(vec![p.k_i, p.k_p], vec![0.0, 1.0])
        .expect("PI transfer function is well formed")
}

/// Closed-form PI design placing the unity-gain crossover of `pi·plant` at
/// `target_bw` Hz with `target_pm` degrees of phase margin.
///
/// The result is checked with [`margins`]: the crossover must land within
/// 1% and the phase margin within 0.5°.
pub fn tune_pi_for_margin(plant: &RationalTf, target_bw: f64, target_pm: f64) -> Result<PiParams> {
    let w = TAU * target_bw;
    let g = plant.at_hz(target_bw);
    let plant_phase = g.arg().to_degrees();
    let mut pi_phase = -180.0 + target_pm - plant_phase;
    while pi_phase > 180.0 {
        pi_phase -= 360.0;
    }
    while pi_phase <= -180.0 {
        pi_phase += 360.0;
    }
    if !(pi_phase > -90.0 && pi_phase <= 1e-9) {
        let max_pm = (180.0 + plant_phase).rem_euclid(360.0);
        return Err(Error::InfeasibleDesign {
            target_bw,
            target_pm,
            min_pm: max_pm - 90.0,
            max_pm,
        });
    }
    let corner = w * (-pi_phase.min(0.0)).to_radians().tan();
    let k_p = 1.0 / (g.norm() * (1.0 + (corner / w).powi(2)).sqrt());
    let params = PiParams::new(k_p, k_p * corner);

    let m = margins(&(&pi_tf(&params) * plant))?;
    if (m.crossover / target_bw - 1.0).abs() > 0.01 || (m.phase_margin - target_pm).abs() > 0.5 {
        return Err(Error::DesignCheck {
            crossover: m.crossover,
            pm: m.phase_margin,
            target_bw,
            target_pm,
        });
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrator_needs_no_integral_action() {
        let p = tune_pi_for_margin(&RationalTf::integrator(1.0), 10.0, 90.0).unwrap();
        assert!(p.k_i.abs() < 1e-9);
        assert!((p.k_p - TAU * 10.0).abs() < 1e-9);
    }

    #[test]
    fn first_order_plant() {
        let plant = RationalTf::from_corners(3.0, &[], &[TAU * 2.0]).unwrap();
        let p = tune_pi_for_margin(&plant, 20.0, 60.0).unwrap();
        let m = margins(&(&pi_tf(&p) * &plant)).unwrap();
        assert!((m.crossover - 20.0).abs() < 0.2);
        assert!((m.phase_margin - 60.0).abs() < 0.5);
    }

    #[test]
    fn infeasible_target_reports_range() {
        let plant = RationalTf::from_corners(3.0, &[], &[TAU * 2.0]).unwrap();
        match tune_pi_for_margin(&plant, 20.0, 120.0) {
            Err(Error::InfeasibleDesign { min_pm, max_pm, .. }) => {
                assert!(min_pm < 120.0 && max_pm < 120.0 && max_pm > 90.0);
            }
            other => panic!("{other:?}"),
        }
    }
}
