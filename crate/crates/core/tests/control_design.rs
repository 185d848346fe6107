use std::f64::consts::TAU;

use rgti::control::{grid_current_bandwidth, margins, ControlDesign, DesignTargets};
use rgti::plant::SystemParams;

fn design() -> (SystemParams, ControlDesign) {
    let sys = SystemParams::default();
    let d = ControlDesign::derive(&sys).unwrap();
    (sys, d)
}

#[test]
fn voltage_loop_meets_targets_at_mpp() {
    let (sys, d) = design();
    let m = d.voltage_margins(&sys, 480.0, 1.0).unwrap();
    println!("{d:#?}\n{m:#?}");
    assert!((m.crossover / 55.0 - 1.0).abs() < 0.1, "{}", m.crossover);
    assert!((m.phase_margin - 35.0).abs() < 3.0, "{}", m.phase_margin);
}

#[test]
fn voltage_loop_stable_across_range() {
    let (sys, d) = design();
    for v in [300.0, 400.0, 450.0, 480.0, 510.0, 530.0, 545.0, 555.0] {
        let m = d.voltage_margins(&sys, v, 1.0).unwrap();
        println!("{v}: {:?} gm {}", m.crossings, m.gain_margin);
        assert!(m.min_phase_margin() > 25.0, "{v} V: {m:?}");
    }
}

#[test]
fn current_loop_crossover() {
    let (sys, d) = design();
    let m = d.current_margins(&sys, 530.0, 1.0).unwrap();
    assert!((m.crossover / 0.5 - 1.0).abs() < 0.2, "{m:?}");
    for v in [505.0, 515.0, 530.0, 545.0, 555.0] {
        let m = d.current_margins(&sys, v, 1.0).unwrap();
        println!("{v}: {:?} gm {}", m.crossings, m.gain_margin);
        assert!(m.min_phase_margin() > 30.0, "{v} V: {m:?}");
    }
}

#[test]
fn grid_current_loop_bandwidth() {
    let (sys, d) = design();
    let bw = grid_current_bandwidth(
        &d.grid_current,
        sys.converter.l_f,
        sys.converter.r_series,
        20e-6,
    );
    println!("bw {bw}");
    assert!((bw / 800.0 - 1.0).abs() < 0.15, "{bw}");
    let pr = d.grid_current;
    let tf = pr.tf();
    let w0 = pr.omega_0 / TAU;
    assert!(20.0 * (tf.at_hz(w0).norm() / pr.k_p).log10() >= 60.0);
    let second = 20.0 * (tf.at_hz(2.0 * w0).norm() / pr.k_p).log10();
    assert!(second.abs() <= 3.0, "{second}");
    let m = margins(&d.grid_voltage_loop(&sys, 480.0, 1.0).unwrap()).unwrap();
    println!("grid voltage {m:?} {:?}", d.grid_voltage);
    let targets = DesignTargets::default();
    assert!(
        (m.crossover / targets.grid_voltage_bw - 1.0).abs() < 0.01,
        "{m:?}"
    );
    assert!(
        (m.phase_margin - targets.grid_voltage_pm).abs() < 1.0,
        "{m:?}"
    );
}

#[test]
fn shipped_parameter_files_match_defaults() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../params");
    let (sys, d) = design();
    assert_eq!(SystemParams::load(dir.join("table1.toml")).unwrap(), sys);
    assert_eq!(
        ControlDesign::load(dir.join("controllers.toml")).unwrap(),
        d
    );
}
