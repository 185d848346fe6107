//! Single-exponential PV curve `i = g·i_sc·(1 − k1·(exp(v/(k2·v_oc)) − 1))`
//! with `k1 = 1/(exp(1/k2) − 1)` so the curve always passes through
//! `(0, i_sc)` and `(v_oc, 0)`. `k2` is stored as `curve_sharpness`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Upper end of the irradiance domain, per unit.
pub const MAX_IRRADIANCE: f64 = 1.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PvParams {
    /// Open-circuit voltage, V (irradiance independent).
    pub v_oc: f64,
    /// Short-circuit current at full sun, A.
    pub i_sc: f64,
    /// MPP voltage at full sun, V.
    pub v_mpp: f64,
    /// MPP current at full sun, A.
    pub i_mpp: f64,
    /// `k2`, dimensionless.
    pub curve_sharpness: f64,
}

/// Operating point of the PV source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PvState {
    pub v_pv: f64,
    pub i_pv: f64,
    pub irradiance: f64,
}

impl PvParams {
    /// The 3.6 kW / 480 V array with a 560 V open-circuit voltage.
    pub fn table1() -> Self {
        Self::fit_mpp(560.0, 480.0, 7.5).expect("default PV parameters are feasible")
    }

    /// Fits `i_sc` and the sharpness so that `(v_mpp, i_mpp)` lies on the curve
    /// *and* is the stationary point of `v·i`.
    pub fn fit_mpp(v_oc: f64, v_mpp: f64, i_mpp: f64) -> Result<Self> {
        if !(v_oc > 0.0 && v_mpp > 0.0 && i_mpp > 0.0 && v_mpp < v_oc) {
            return Err(Error::config(format!(
                "need 0 < v_mpp ({v_mpp}) < v_oc ({v_oc}) and i_mpp ({i_mpp}) > 0"
            )));
        }
        let x = v_mpp / v_oc;
        if x <= 0.5 {
            return Err(Error::config(format!(
                "v_mpp/v_oc = {x:.3} is too low for a single-exponential curve with a stationary MPP"
            )));
        }
        let k2 = bisect_log(
            |k2| x * shape_slope(x, k2) - (1.0 - shape(x, k2)),
            1e-4,
            1e3,
        )?;
        let i_sc = i_mpp / (1.0 - shape(x, k2));
        let p = Self {
            v_oc,
            i_sc,
            v_mpp,
            i_mpp,
            curve_sharpness: k2,
        };
        p.validate()?;
        Ok(p)
    }

    /// Fits only the sharpness so the curve passes through `(v_mpp, i_mpp)`.
    /// The stationary point of `v·i` then generally differs from `v_mpp`.
    pub fn through_points(v_oc: f64, i_sc: f64, v_mpp: f64, i_mpp: f64) -> Result<Self> {
        if !(v_oc > 0.0 && i_sc > 0.0 && v_mpp > 0.0 && v_mpp < v_oc && i_mpp > 0.0 && i_mpp < i_sc)
        {
            return Err(Error::config("need 0 < v_mpp < v_oc and 0 < i_mpp < i_sc"));
        }
        let x = v_mpp / v_oc;
        let r = i_mpp / i_sc;
        if r <= 1.0 - x {
            return Err(Error::config(format!(
                "MPP ({v_mpp} V, {i_mpp} A) lies below the straight line between the intercepts"
            )));
        }
        let k2 = bisect_log(|k2| r - (1.0 - shape(x, k2)), 1e-4, 1e3)?;
        let p = Self {
            v_oc,
            i_sc,
            v_mpp,
            i_mpp,
            curve_sharpness: k2,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.v_mpp > 0.0
            && self.v_mpp < self.v_oc
            && self.i_mpp > 0.0
            && self.i_mpp < self.i_sc
            && self.v_mpp * self.i_mpp <= self.v_oc * self.i_sc
            && self.curve_sharpness > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!("invalid PV parameters {self:?}")))
        }
    }

    fn check(&self, v: f64, g: f64) -> Result<()> {
        if !(0.0..=1.05 * self.v_oc).contains(&v) {
            return Err(Error::Domain {
                quantity: "v_pv",
                value: v,
                lo: 0.0,
                hi: 1.05 * self.v_oc,
            });
        }
        if !(0.0..=MAX_IRRADIANCE).contains(&g) {
            return Err(Error::Domain {
                quantity: "irradiance",
                value: g,
                lo: 0.0,
                hi: MAX_IRRADIANCE,
            });
        }
        Ok(())
    }

    pub fn current(&self, v: f64, g: f64) -> Result<f64> {
        self.check(v, g)?;
        Ok(self.current_unchecked(v, g))
    }

    /// Curve evaluated without domain checks. Negative voltages are treated
    /// as a short circuit; above `v_oc` the current goes negative.
    pub fn current_unchecked(&self, v: f64, g: f64) -> f64 {
        let x = v.max(0.0) / self.v_oc;
        g * self.i_sc * (1.0 - shape(x, self.curve_sharpness))
    }

    /// `di/dv` (negative).
    pub fn slope_unchecked(&self, v: f64, g: f64) -> f64 {
        if v < 0.0 {
            return 0.0;
        }
        let x = v / self.v_oc;
        -g * self.i_sc * shape_slope(x, self.curve_sharpness) / self.v_oc
    }

    /// `R_1 = −1/(di/dv)`, infinite when there is no irradiance.
    pub fn dynamic_resistance(&self, v: f64, g: f64) -> Result<f64> {
        self.check(v, g)?;
        let slope = self.slope_unchecked(v, g);
        Ok(if slope == 0.0 {
            f64::INFINITY
        } else {
            -1.0 / slope
        })
    }

    pub fn power(&self, v: f64, g: f64) -> Result<f64> {
        Ok(v * self.current(v, g)?)
    }

    pub fn state(&self, v: f64, g: f64) -> Result<PvState> {
        Ok(PvState {
            v_pv: v,
            i_pv: self.current(v, g)?,
            irradiance: g,
        })
    }

    /// Location of the power maximum found by golden-section search.
    pub fn mpp(&self, g: f64) -> (f64, f64) {
        let f = |v: f64| v * self.current_unchecked(v, g);
        let (mut a, mut b) = (0.0, self.v_oc);
        let r = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - r * (b - a);
        let mut d = a + r * (b - a);
        while b - a > 1e-9 * self.v_oc {
            if f(c) > f(d) {
                b = d;
            } else {
                a = c;
            }
            c = b - r * (b - a);
            d = a + r * (b - a);
        }
        let v = 0.5 * (a + b);
        (v, f(v))
    }
}

pub fn pv_current(p: &PvParams, v: f64, g: f64) -> Result<f64> {
    p.current(v, g)
}

pub fn pv_dynamic_resistance(p: &PvParams, v: f64, g: f64) -> Result<f64> {
    p.dynamic_resistance(v, g)
}

/// `(exp(x/k) − 1)/(exp(1/k) − 1)`, evaluated without overflow.
fn shape(x: f64, k: f64) -> f64 {
    ((x - 1.0) / k).exp() * (-(-x / k).exp_m1()) / (-(-1.0 / k).exp_m1())
}

/// d(shape)/dx.
fn shape_slope(x: f64, k: f64) -> f64 {
    ((x - 1.0) / k).exp() / (k * -(-1.0 / k).exp_m1())
}

/// Bisection in `ln k` for a sign change of `f` on `[lo, hi]`.
fn bisect_log(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Result<f64> {
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let fa = f(a.exp());
    let fb = f(b.exp());
    if fa.signum() == fb.signum() {
        return Err(Error::config("PV curve fit has no solution"));
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m.exp());
        if fm.signum() == fa.signum() {
            a = m;
        } else {
            b = m;
        }
        if b - a < 1e-15 {
            break;
        }
    }
    Ok((0.5 * (a + b)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intercepts() {
        let p = PvParams::table1();
        assert!(p.current(p.v_oc, 1.0).unwrap().abs() < 1e-12);
        assert!((p.current(0.0, 1.0).unwrap() - p.i_sc).abs() < 1e-9);
    }

    #[test]
    fn passes_through_rated_mpp() {
        let p = PvParams::table1();
        assert!((p.current(480.0, 1.0).unwrap() - 7.5).abs() < 1e-9);
        let (v, pmax) = p.mpp(1.0);
        assert!((v - 480.0).abs() < 1e-4, "{v}");
        assert!((pmax - 3600.0).abs() < 1e-6);
    }

    #[test]
    fn dynamic_resistance_at_mpp_is_v_over_i() {
        let p = PvParams::table1();
        let r1 = p.dynamic_resistance(480.0, 1.0).unwrap();
        assert!((r1 - 64.0).abs() < 1e-6, "{r1}");
    }

    #[test]
    fn domain_errors() {
        let p = PvParams::table1();
        assert!(p.current(-1.0, 1.0).is_err());
        assert!(p.current(1.06 * p.v_oc, 1.0).is_err());
        assert!(p.current(100.0, -0.1).is_err());
        assert!(p.current(1.04 * p.v_oc, 1.0).unwrap() < 0.0);
    }

    #[test]
    fn through_points_reproduces_point_but_shifts_mpp() {
        let p = PvParams::through_points(560.0, 8.2, 480.0, 7.5).unwrap();
        assert!((p.current(480.0, 1.0).unwrap() - 7.5).abs() < 1e-9);
        let (v, _) = p.mpp(1.0);
        assert!((v - 480.0).abs() > 5.0);
    }

    #[test]
    fn infeasible_fits() {
        assert!(PvParams::fit_mpp(560.0, 200.0, 7.5).is_err());
        assert!(PvParams::through_points(560.0, 8.2, 480.0, 1.0).is_err());
        assert!(PvParams::fit_mpp(400.0, 480.0, 7.5).is_err());
    }
}
