//! Independent single-degree-of-freedom oracle: a point mass pressing
//! on a compliant wall under the same two-level funnel law, written
//! from scratch in plain `f64` arithmetic without using any of the
//! main library modules. The full stack, configured down to pure surge
//! motion, must reproduce this trajectory almost exactly; any drift
//! indicates a defect in one of the large modules.

use crate::sim::{Record, SimLog};
use nalgebra::{DVector, Vector6};

/// Complete description of the 1-DoF problem.
#[derive(Debug, Clone)]
pub struct Oracle1DofConfig {
    pub mass: f64,
    pub added_mass: f64,
    pub d_lin: f64,
    pub d_quad: f64,
    /// Wall stiffness K.
    pub stiffness: f64,
    /// Initial penetration into the wall (may be zero).
    pub initial_penetration: f64,
    pub initial_velocity: f64,
    /// Desired force `offset + amplitude sin(omega t)`.
    pub f_des_offset: f64,
    pub f_des_amplitude: f64,
    pub f_des_omega: f64,
    /// Disturbance force `amplitude sin(omega t)` on the mass.
    pub dist_amplitude: f64,
    pub dist_omega: f64,
    pub k_x: f64,
    pub k_zeta: f64,
    /// Force funnel `(rho_0, rho_inf, decay)`.
    pub rho_x: (f64, f64, f64),
    /// Velocity funnel `(rho_0, rho_inf, decay)`.
    pub rho_zeta: (f64, f64, f64),
    pub duration: f64,
    pub time_step: f64,
}

impl Default for Oracle1DofConfig {
    fn default() -> Self {
        Self {
            mass: 1.0,
            added_mass: 0.0,
            d_lin: 2.0,
            d_quad: 0.0,
            stiffness: 2.0,
            initial_penetration: 0.0,
            initial_velocity: 0.0,
            f_des_offset: 0.4,
            f_des_amplitude: 0.0,
            f_des_omega: 0.0,
            dist_amplitude: 0.0,
            dist_omega: 0.0,
            k_x: 0.2,
            k_zeta: 5.0,
            rho_x: (1.0, 0.2, 3.0),
            rho_zeta: (1.0, 0.2, 2.2),
            duration: 10.0,
            time_step: 1e-3,
        }
    }
}

fn rho(p: (f64, f64, f64), t: f64) -> f64 {
    (p.0 - p.1) * (-p.2 * t).exp() + p.1
}

fn eps(xi: f64) -> f64 {
    ((1.0 + xi) / (1.0 - xi)).ln()
}

/// Run the oracle. The result uses the standard log layout with the
/// single real channel in slot 0 (penetration in `q1`, velocity in
/// `zeta1`); untouched channels carry zero error against a unit
/// envelope.
pub fn oracle_1dof(cfg: &Oracle1DofConfig) -> Result<SimLog, String> {
    let m = cfg.mass + cfg.added_mass;
    let contact = |x: f64| cfg.stiffness * x.max(0.0);
    let accel = |x: f64, v: f64, t: f64, tau: f64| -> f64 {
        let drag = cfg.d_lin * v + cfg.d_quad * v.abs() * v;
        let dist = cfg.dist_amplitude * (cfg.dist_omega * t).sin();
        (tau - drag - contact(x) - dist) / m
    };

    let steps = (cfg.duration / cfg.time_step).round() as usize;
    let h = cfg.time_step;
    let mut x = cfg.initial_penetration;
    let mut v = cfg.initial_velocity;
    let mut records = Vec::with_capacity(steps + 1);

    for k in 0..=steps {
        let t = k as f64 * h;
        let f = contact(x);
        let f_des = cfg.f_des_offset + cfg.f_des_amplitude * (cfg.f_des_omega * t).sin();

        // Level one: force error to reference velocity.
        let e_f = f - f_des;
        let rx = rho(cfg.rho_x, t);
        let xi_x = e_f / rx;
        if xi_x.abs() >= 1.0 {
            return Err(format!("force funnel left at t={t}: xi={xi_x}"));
        }
        let v_ref = -cfg.k_x * eps(xi_x);

        // Level two: velocity error to force.
        let e_v = v - v_ref;
        let rz = rho(cfg.rho_zeta, t);
        let xi_z = e_v / rz;
        if xi_z.abs() >= 1.0 {
            return Err(format!("velocity funnel left at t={t}: xi={xi_z}"));
        }
        let r_gain = 2.0 / (1.0 - xi_z * xi_z);
        let tau = -cfg.k_zeta * r_gain * eps(xi_z) / rz;

        records.push(record(t, x, v, tau, f, f_des, e_f, rx, e_v, rz));
        if k == steps {
            break;
        }

        // Classical RK4 with the force held over the step.
        let k1 = (v, accel(x, v, t, tau));
        let k2 = (
            v + 0.5 * h * k1.1,
            accel(x + 0.5 * h * k1.0, v + 0.5 * h * k1.1, t + 0.5 * h, tau),
        );
        let k3 = (
            v + 0.5 * h * k2.1,
            accel(x + 0.5 * h * k2.0, v + 0.5 * h * k2.1, t + 0.5 * h, tau),
        );
        let k4 = (v + h * k3.1, accel(x + h * k3.0, v + h * k3.1, t + h, tau));
        x += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        v += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    }
    Ok(SimLog { dof: 6, records })
}

#[allow(clippy::too_many_arguments)]
fn record(
    t: f64,
    x: f64,
    v: f64,
    tau: f64,
    f: f64,
    f_des: f64,
    e_f: f64,
    rho_x1: f64,
    e_v: f64,
    rho_z1: f64,
) -> Record {
    let unit = |first: f64| {
        let mut d = DVector::from_element(6, 0.0);
        d[0] = first;
        d
    };
    let mut e_x = Vector6::zeros();
    e_x[0] = e_f;
    let mut rho_x = Vector6::from_element(1.0);
    rho_x[0] = rho_x1;
    let mut rho_zeta = DVector::from_element(6, 1.0);
    rho_zeta[0] = rho_z1;
    Record {
        t,
        q: unit(x),
        zeta: unit(v),
        tau: unit(tau),
        f_true: f,
        f_meas: f,
        f_des,
        e_x,
        rho_x,
        e_zeta: unit(e_v),
        rho_zeta,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_error_stays_zero() {
        // Free plant at rest with zero demand and no disturbance: both
        // errors are identically zero and the controller never acts.
        let cfg = Oracle1DofConfig {
            stiffness: 0.0,
            f_des_offset: 0.0,
            duration: 1.0,
            ..Default::default()
        };
        let log = oracle_1dof(&cfg).unwrap();
        for r in &log.records {
            assert_relative_eq!(r.e_x[0], 0.0, epsilon = 1e-12);
            assert_relative_eq!(r.zeta[0], 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn step_force_settles_into_ultimate_tube() {
        // Contact starts unloaded with a 0.4 N step demand; the error
        // must enter and stay inside the 0.2 N ultimate tube.
        let cfg = Oracle1DofConfig::default();
        let log = oracle_1dof(&cfg).unwrap();
        for r in log.records.iter().filter(|r| r.t >= 3.0) {
            assert!(r.e_x[0].abs() < 0.2, "e={} at t={}", r.e_x[0], r.t);
        }
        // And it converges rather than riding the tube edge.
        let last = log.records.last().unwrap();
        assert!(last.e_x[0].abs() < 0.02, "steady error {}", last.e_x[0]);
    }

    #[test]
    fn containment_holds_across_gain_sweep() {
        for k_zeta in [2.5, 5.0, 10.0] {
            let cfg = Oracle1DofConfig {
                k_zeta,
                dist_amplitude: 0.15,
                dist_omega: 2.0 * std::f64::consts::PI / 7.0,
                ..Default::default()
            };
            let log = oracle_1dof(&cfg).unwrap();
            for r in &log.records {
                assert!(r.e_x[0].abs() < r.rho_x[0], "k_zeta={k_zeta} t={}", r.t);
                assert!(r.e_zeta[0].abs() < r.rho_zeta[0], "k_zeta={k_zeta} t={}", r.t);
            }
        }
    }
}
