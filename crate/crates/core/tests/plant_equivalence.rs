use rgti::plant::{
    linearity_error, linearize_numeric, measure_response, plant_tf_current, plant_tf_voltage,
    BatteryParams, BatteryTiedPlant, ConverterParams, LinearizeOptions, PvParams,
};
use rgti::Error;

fn plant() -> BatteryTiedPlant {
    BatteryTiedPlant {
        pv: PvParams::table1(),
        irradiance: 1.0,
        battery: BatteryParams::default(),
        conv: ConverterParams::default(),
        r_load: f64::INFINITY,
    }
}

fn check(v_pv: f64, freqs: &[f64]) {
    let p = plant();
    let op = p.operating_point(v_pv).unwrap();
    let gv = plant_tf_voltage(&op, &p.conv).unwrap();
    let gi = plant_tf_current(&op, &p.conv).unwrap();
    let pts = linearize_numeric(&p, &op, freqs, &LinearizeOptions::default()).unwrap();
    for pt in pts {
        for (num, ana, name) in [
            (pt.voltage_per_duty, gv.at_hz(pt.frequency), "Gpv"),
            (pt.current_per_voltage, gi.at_hz(pt.frequency), "Gpi"),
        ] {
            let mag = (num.norm() / ana.norm() - 1.0).abs();
            let phase = (num / ana).arg().to_degrees().abs();
            assert!(
                mag < 0.02 && phase < 3.0,
                "{name} at {v_pv} V, {} Hz: numeric {num}, analytic {ana}",
                pt.frequency
            );
        }
    }
}

#[test]
fn analytic_matches_numeric_at_mpp() {
    check(480.0, &[1.0, 10.0, 50.0, 200.0, 1000.0]);
}

#[test]
fn analytic_matches_numeric_off_mpp() {
    check(400.0, &[2.0, 40.0, 500.0]);
    check(540.0, &[2.0, 40.0, 500.0]);
}

#[test]
fn zero_perturbation_gives_zero_response() {
    let p = plant();
    let op = p.operating_point(480.0).unwrap();
    let (v, i) = measure_response(&p, &op, 10.0, 0.0, &LinearizeOptions::default()).unwrap();
    assert!(v.norm() < 1e-9 && i.norm() < 1e-9, "{v} {i}");
}

#[test]
fn small_signal_regime_is_linear() {
    let p = plant();
    let op = p.operating_point(500.0).unwrap();
    let err = linearity_error(&p, &op, &[5.0, 40.0, 200.0], &LinearizeOptions::default()).unwrap();
    assert!(err < 0.005, "{err}");
}

#[test]
fn rejects_non_equilibrium() {
    let p = plant();
    let mut op = p.operating_point(480.0).unwrap();
    op.duty += 0.01;
    assert!(matches!(
        linearize_numeric(&p, &op, &[10.0], &LinearizeOptions::default()),
        Err(Error::NotEquilibrium { .. })
    ));
}
