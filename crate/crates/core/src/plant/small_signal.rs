//! Small-signal transfer functions of the battery-tied buck stage.

use super::converter::{ConverterParams, OperatingPoint};
use crate::tf::{poly_mul, RationalTf};
use crate::Result;

/// DC gains and corner frequencies (rad/s) of the two plant transfer functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantCorners {
    pub k_a: f64,
    pub k_b: f64,
    /// `(D²·R1 + R2)/L`.
    pub omega_a: f64,
    /// `1/(R1·C)`.
    pub omega_b: f64,
    /// Duty-to-voltage zero, `(2DV − V_B)/(L·I_L)`; infinite at zero current.
    pub omega_c: f64,
    /// ESR zero, `1/(r_esr·C)`.
    pub omega_d: f64,
}

pub fn plant_corners(op: &OperatingPoint, conv: &ConverterParams) -> Result<PlantCorners> {
    op.validate()?;
    let d2r1 = op.duty * op.duty * op.r1;
    let gain = op.gain_term();
    let i_l = op.i_l();
    Ok(PlantCorners {
        k_a: -op.r1 * gain / (d2r1 + op.r2),
        k_b: -(op.v_pv - op.i_pv * op.r1) / (op.r1 * gain),
        omega_a: (d2r1 + op.r2) / conv.l_f,
        omega_b: 1.0 / (op.r1 * conv.c_in),
        omega_c: if i_l == 0.0 {
            f64::INFINITY
        } else {
            gain / (conv.l_f * i_l)
        },
        omega_d: if conv.r_esr == 0.0 {
            f64::INFINITY
        } else {
            1.0 / (conv.r_esr * conv.c_in)
        },
    })
}

/// PV voltage response to duty, `ṽ_pv/d̃`. DC gain is `k_a`.
pub fn plant_tf_voltage(op: &OperatingPoint, conv: &ConverterParams) -> Result<RationalTf> {
    op.validate()?;
    let (c, r_e, l) = (conv.c_in, conv.r_esr, conv.l_f);
    let (d, r1, r2) = (op.duty, op.r1, op.r2);
    let d2r1 = d * d * r1;
    let norm = r2 + d2r1;
    let num: Vec<f64> = poly_mul(&[1.0, r_e * c], &[op.gain_term(), op.i_l() * l])
        .into_iter()
        .map(|k| -r1 * k / norm)
        .collect();
    let den = vec![
        1.0,
        (l + c * r1 * r2 + c * r2 * r_e + c * d2r1 * r_e) / norm,
        c * l * (r1 + r_e) / norm,
    ];
    RationalTf::new(num, den)
}

/// Inductor (battery-side) current response to PV voltage, `ĩ_L/ṽ_pv`.
/// DC gain is `k_b`. The discharge-positive battery current responds with
/// the opposite sign, scaled by `R_load/(R_load + r_b)`.
pub fn plant_tf_current(op: &OperatingPoint, conv: &ConverterParams) -> Result<RationalTf> {
    op.validate()?;
    let (c, r_e, l) = (conv.c_in, conv.r_esr, conv.l_f);
    let (d, r1, v, i_l) = (op.duty, op.r1, op.v_pv, op.i_l());
    let gain = op.gain_term();
    let norm = r1 * gain;
    let num = vec![
        (d * i_l * r1 - v) / norm,
        c * (d * i_l * r1 * r_e - r1 * v - v * r_e) / norm,
    ];
    let den = poly_mul(&[1.0, r_e * c], &[1.0, i_l * l / gain]);
    RationalTf::new(num, den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::{BatteryParams, PvParams};

    fn mpp() -> (OperatingPoint, ConverterParams) {
        let conv = ConverterParams::default();
        let op = OperatingPoint::battery_tied(
            &PvParams::table1(),
            1.0,
            &BatteryParams::default(),
            &conv,
            f64::INFINITY,
            480.0,
        )
        .unwrap();
        (op, conv)
    }

    #[test]
    fn dc_gains_match_corners() {
        let (op, conv) = mpp();
        let k = plant_corners(&op, &conv).unwrap();
        let gv = plant_tf_voltage(&op, &conv).unwrap();
        let gi = plant_tf_current(&op, &conv).unwrap();
        assert!((gv.dc_gain() - k.k_a).abs() < 1e-9 * k.k_a.abs());
        assert!((gi.dc_gain() - k.k_b).abs() < 1e-12);
        assert!(gv.is_proper() && gi.is_proper());
    }

    #[test]
    fn corner_values() {
        let (op, conv) = mpp();
        let k = plant_corners(&op, &conv).unwrap();
        assert!((k.omega_b - 12.7).abs() < 0.05, "{}", k.omega_b);
        assert!((k.omega_d - 10_162.6).abs() < 1.0, "{}", k.omega_d);
        // zero battery-current sensitivity exactly at the power maximum
        assert!(k.k_b.abs() < 1e-6);
    }

    #[test]
    fn k_b_sign_on_voltage_side() {
        let conv = ConverterParams::default();
        let op = OperatingPoint::battery_tied(
            &PvParams::table1(),
            1.0,
            &BatteryParams::default(),
            &conv,
            f64::INFINITY,
            530.0,
        )
        .unwrap();
        assert!(op.v_pv > op.i_pv * op.r1 && op.gain_term() > 0.0);
        assert!(plant_corners(&op, &conv).unwrap().k_b < 0.0);
    }

    #[test]
    fn singular_point() {
        let conv = ConverterParams::default();
        let op = OperatingPoint {
            v_pv: 200.0,
            i_pv: 0.0,
            duty: 0.5,
            v_b: 200.0,
            r1: 10.0,
            r2: 0.1,
        };
        assert!(matches!(
            plant_tf_voltage(&op, &conv),
            Err(crate::Error::SingularOperatingPoint)
        ));
    }
}
