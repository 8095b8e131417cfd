//! Two-level model-free prescribed-performance controller.
//!
//! Level one turns force and orientation errors into a task-space
//! reference velocity; level two turns the velocity tracking error into
//! joint/thruster torques. Both levels use the same machinery: each
//! error channel is normalized by a decaying performance envelope
//! `rho(t)`, pushed through the logarithmic transformation
//! `eps = ln((1 + xi) / (1 - xi))`, and fed back with a constant gain.
//! The transformation blows up as the error approaches the envelope,
//! which is what keeps the error inside it.
//!
//! This module deliberately knows nothing about the plant: no inertia,
//! drag, restoring or contact-stiffness information enters the law.
//! Only kinematic quantities (Jacobians) and measured signals are used.

use nalgebra::{DMatrix, DVector, Unit, Vector3, Vector6};
use thiserror::Error;

use crate::kinematics::{
    euler_zyx, frames, jacobian_set, nullspace_projected_velocity, pseudo_inverse, wrap_angle,
    Configuration, KinematicModel, KinematicsError,
};
use crate::Scalar;

/// Which of the two cascaded loops an envelope violation occurred in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// Task-space (force / orientation) funnel.
    Task,
    /// Velocity-tracking funnel.
    Velocity,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("{stage:?} envelope violated on channel {channel} at t = {time}: xi = {xi}")]
    Envelope {
        stage: Stage,
        channel: usize,
        time: f64,
        xi: f64,
    },
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error("controller misconfigured: {0}")]
    Config(String),
}

/// Exponentially decaying performance envelope
/// `rho(t) = (rho_0 - rho_inf) e^(-decay t) + rho_inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceFunction<T: Scalar> {
    pub initial: T,
    pub ultimate: T,
    pub decay: T,
}

impl<T: Scalar> PerformanceFunction<T> {
    pub fn new(initial: T, ultimate: T, decay: T) -> Self {
        Self {
            initial,
            ultimate,
            decay,
        }
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        if !(self.ultimate > T::zero() && self.initial >= self.ultimate && self.decay >= T::zero())
        {
            return Err(ControlError::Config(format!(
                "need rho_0 >= rho_inf > 0 and decay >= 0, got ({:?}, {:?}, {:?})",
                self.initial.to_f64(),
                self.ultimate.to_f64(),
                self.decay.to_f64()
            )));
        }
        Ok(())
    }

    /// Envelope radius at time `t`.
    pub fn value(&self, t: T) -> T {
        (self.initial - self.ultimate) * (-self.decay * t).exp() + self.ultimate
    }
}

/// Normalized error `xi = e / rho`; errors if the error has left the
/// open funnel `(-rho, rho)`.
pub fn normalize_error<T: Scalar>(
    e: T,
    rho: T,
    stage: Stage,
    channel: usize,
    time: T,
) -> Result<T, ControlError> {
    let xi = e / rho;
    if xi.abs() >= T::one() || !xi.is_finite() {
        return Err(ControlError::Envelope {
            stage,
            channel,
            time: time.to_f64().unwrap_or(f64::NAN),
            xi: xi.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(xi)
}

/// Logarithmic error transformation `eps(xi) = ln((1 + xi) / (1 - xi))`.
pub fn transform_error<T: Scalar>(xi: T) -> T {
    ((T::one() + xi) / (T::one() - xi)).ln()
}

/// Slope of the transformation, `r(xi) = d eps / d xi = 2 / (1 - xi^2)`.
pub fn modulation_gain<T: Scalar>(xi: T) -> T {
    (T::one() + T::one()) / (T::one() - xi * xi)
}

/// Full configuration of the cascaded controller.
#[derive(Debug, Clone)]
pub struct ControllerConfig<T: Scalar> {
    /// Task-space gain `k_x`.
    pub k_x: T,
    /// Velocity-loop gain `k_zeta`.
    pub k_zeta: T,
    /// Envelopes for the six task channels (three force, three
    /// orientation).
    pub perf_x: Vec<PerformanceFunction<T>>,
    /// Envelopes for the `n` velocity-error channels.
    pub perf_zeta: Vec<PerformanceFunction<T>>,
    /// Optional symmetric torque saturation.
    pub torque_limit: Option<T>,
    /// Optional secondary joint velocity projected into the task null
    /// space.
    pub secondary: Option<DVector<T>>,
}

impl<T: Scalar> ControllerConfig<T> {
    pub fn validate(&self, n: usize) -> Result<(), ControlError> {
        if self.perf_x.len() != 6 {
            return Err(ControlError::Config(format!(
                "need 6 task envelopes, got {}",
                self.perf_x.len()
            )));
        }
        if self.perf_zeta.len() != n {
            return Err(ControlError::Config(format!(
                "need {n} velocity envelopes, got {}",
                self.perf_zeta.len()
            )));
        }
        if !(self.k_x > T::zero() && self.k_zeta > T::zero()) {
            return Err(ControlError::Config("gains must be positive".into()));
        }
        for p in self.perf_x.iter().chain(self.perf_zeta.iter()) {
            p.validate()?;
        }
        if let Some(s) = &self.secondary {
            if s.len() != n {
                return Err(ControlError::Config(format!(
                    "secondary velocity must have length {n}"
                )));
            }
        }
        Ok(())
    }
}

/// Per-step controller internals, exported for logging and analysis.
#[derive(Debug, Clone)]
pub struct Diagnostics<T: Scalar> {
    /// Task error `[e_f; e_o]`.
    pub e_x: Vector6<T>,
    /// Task envelope radii at this instant.
    pub rho_x: Vector6<T>,
    pub xi_x: Vector6<T>,
    /// Task-space reference velocity.
    pub xdot_r: Vector6<T>,
    /// Velocity reference `zeta^r`.
    pub zeta_r: DVector<T>,
    /// Velocity tracking error `zeta - zeta^r`.
    pub e_zeta: DVector<T>,
    pub rho_zeta: DVector<T>,
    pub xi_zeta: DVector<T>,
}

/// The cascaded force/orientation controller. Holds the chain geometry
/// (for Jacobians), the task description, and the funnel parameters.
#[derive(Debug, Clone)]
pub struct PpcController<T: Scalar> {
    pub kinematics: KinematicModel<T>,
    pub config: ControllerConfig<T>,
    /// Direction in which the desired force is pressed on the
    /// environment (world frame).
    pub force_direction: Unit<Vector3<T>>,
    /// Desired end-effector attitude, ZYX Euler angles.
    pub desired_orientation: Vector3<T>,
}

impl<T: Scalar> PpcController<T> {
    pub fn validate(&self) -> Result<(), ControlError> {
        self.config.validate(self.kinematics.dof())
    }

    /// Task error: measured-minus-desired force vector stacked on the
    /// wrapped orientation error.
    pub fn task_error(
        &self,
        config: &Configuration<T>,
        f_meas: T,
        f_des: T,
    ) -> Result<Vector6<T>, ControlError> {
        let f = frames(&self.kinematics, config)?;
        let e_f = self.force_direction.into_inner() * (f_meas - f_des);
        let euler = euler_zyx(&f.ee_rotation);
        let mut e = Vector6::zeros();
        for i in 0..3 {
            e[i] = e_f[i];
            e[3 + i] = wrap_angle(euler[i] - self.desired_orientation[i]);
        }
        Ok(e)
    }

    /// First control level: task errors to the reference velocity
    /// `xdot_r = -k_x eps(xi_x)` channel by channel.
    pub fn reference_velocity(
        &self,
        e_x: &Vector6<T>,
        t: T,
    ) -> Result<(Vector6<T>, Vector6<T>, Vector6<T>), ControlError> {
        let mut xdot_r = Vector6::zeros();
        let mut rho = Vector6::zeros();
        let mut xi = Vector6::zeros();
        for ch in 0..6 {
            rho[ch] = self.config.perf_x[ch].value(t);
            xi[ch] = normalize_error(e_x[ch], rho[ch], Stage::Task, ch, t)?;
            xdot_r[ch] = -self.config.k_x * transform_error(xi[ch]);
        }
        Ok((xdot_r, rho, xi))
    }

    /// Map the task-space reference velocity to `zeta^r` through the
    /// damped pseudo-inverse, with the optional secondary velocity in
    /// the null space.
    pub fn joint_reference(
        &self,
        config: &Configuration<T>,
        xdot_r: &Vector6<T>,
    ) -> Result<DVector<T>, ControlError> {
        let jset = jacobian_set(&self.kinematics, config)?;
        let n = self.kinematics.dof();
        let j = DMatrix::from_fn(6, n, |r, c| jset.j[(r, c)]);
        Ok(match &self.config.secondary {
            Some(x0) => nullspace_projected_velocity(&j, xdot_r, x0),
            None => DVector::from(pseudo_inverse(&j) * xdot_r),
        })
    }

    /// Second control level: velocity tracking error to torques,
    /// `tau_j = -k_zeta r(xi_j) eps(xi_j) / rho_j`.
    pub fn torque_law(
        &self,
        e_zeta: &DVector<T>,
        t: T,
    ) -> Result<(DVector<T>, DVector<T>, DVector<T>), ControlError> {
        let n = e_zeta.len();
        let mut tau = DVector::zeros(n);
        let mut rho = DVector::zeros(n);
        let mut xi = DVector::zeros(n);
        for ch in 0..n {
            rho[ch] = self.config.perf_zeta[ch].value(t);
            xi[ch] = normalize_error(e_zeta[ch], rho[ch], Stage::Velocity, ch, t)?;
            tau[ch] = -self.config.k_zeta * modulation_gain(xi[ch]) * transform_error(xi[ch])
                / rho[ch];
        }
        if let Some(limit) = self.config.torque_limit {
            for v in tau.iter_mut() {
                *v = (*v).clamp(-limit, limit);
            }
        }
        Ok((tau, rho, xi))
    }

    /// One full control evaluation: measured force and state in,
    /// torques and diagnostics out.
    pub fn control_step(
        &self,
        config: &Configuration<T>,
        zeta: &DVector<T>,
        f_meas: T,
        f_des: T,
        t: T,
    ) -> Result<(DVector<T>, Diagnostics<T>), ControlError> {
        let e_x = self.task_error(config, f_meas, f_des)?;
        let (xdot_r, rho_x, xi_x) = self.reference_velocity(&e_x, t)?;
        let zeta_r = self.joint_reference(config, &xdot_r)?;
        let e_zeta = zeta - &zeta_r;
        let (tau, rho_zeta, xi_zeta) = self.torque_law(&e_zeta, t)?;
        let diag = Diagnostics {
            e_x,
            rho_x,
            xi_x,
            xdot_r,
            zeta_r,
            e_zeta,
            rho_zeta,
            xi_zeta,
        };
        Ok((tau, diag))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::tests::arm4;
    use crate::kinematics::VehiclePose;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn perf(initial: f64, ultimate: f64, decay: f64) -> PerformanceFunction<f64> {
        PerformanceFunction::new(initial, ultimate, decay)
    }

    fn controller() -> PpcController<f64> {
        let rho0_x = [1.0, 1.0, 1.0, 0.9, 0.9, 0.9];
        PpcController {
            kinematics: arm4(),
            config: ControllerConfig {
                k_x: 0.2,
                k_zeta: 5.0,
                perf_x: rho0_x.iter().map(|&r| perf(r, 0.2, 3.0)).collect(),
                perf_zeta: (0..10)
                    .map(|j| perf(1.0, if j < 6 { 0.2 } else { 0.4 }, 2.2))
                    .collect(),
                torque_limit: None,
                secondary: None,
            },
            force_direction: Unit::new_normalize(Vector3::new(1.0, 0.0, 0.0)),
            desired_orientation: Vector3::zeros(),
        }
    }

    #[test]
    fn envelope_closed_form_values() {
        let p = perf(1.0, 0.2, 3.0);
        assert_relative_eq!(p.value(0.0), 1.0, epsilon = 1e-15);
        assert_relative_eq!(p.value(1.0), 0.8 * (-3.0f64).exp() + 0.2, epsilon = 1e-15);
        // Decays monotonically to the ultimate bound.
        assert!(p.value(10.0) < 0.2001 && p.value(10.0) > 0.2);
    }

    #[test]
    fn transformation_closed_form_values() {
        assert_relative_eq!(transform_error(0.5f64), 3.0f64.ln(), epsilon = 1e-15);
        assert_relative_eq!(modulation_gain(0.5f64), 8.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(
            transform_error(-0.1f64),
            (0.9f64 / 1.1).ln(),
            epsilon = 1e-15
        );
        assert_relative_eq!(transform_error(0.0f64), 0.0, epsilon = 1e-15);
        assert_relative_eq!(modulation_gain(0.0f64), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn torque_law_closed_form_value() {
        // xi = 0.5, rho = 1, k_zeta = 5: tau = -5 * (8/3) * ln 3.
        let c = controller();
        let mut e = DVector::zeros(10);
        e[0] = 0.5;
        let (tau, _, _) = c.torque_law(&e, 0.0).unwrap();
        assert_relative_eq!(tau[0], -5.0 * (8.0 / 3.0) * 3.0f64.ln(), epsilon = 1e-12);
        assert_relative_eq!(tau[1], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn modulation_gain_is_transformation_slope() {
        for &xi in &[-0.9, -0.5, -0.1, 0.0, 0.3, 0.7, 0.95] {
            let h = 1e-7;
            let fd = (transform_error(xi + h) - transform_error(xi - h)) / (2.0 * h);
            assert_relative_eq!(modulation_gain(xi), fd, max_relative = 1e-6);
        }
    }

    proptest! {
        #[test]
        fn transformation_is_odd_and_monotone(xi in -0.999f64..0.999) {
            prop_assert!((transform_error(xi) + transform_error(-xi)).abs() < 1e-12);
            prop_assert!(modulation_gain(xi) >= 2.0 - 1e-12);
        }

        #[test]
        fn normalized_error_sign_matches(e in -0.99f64..0.99) {
            let xi = normalize_error(e, 1.0, Stage::Task, 0, 0.0).unwrap();
            prop_assert!((xi - e).abs() < 1e-15);
            prop_assert!(transform_error(xi).signum() == e.signum() || e == 0.0);
        }
    }

    #[test]
    fn normalize_error_rejects_escaped_error() {
        let err = normalize_error(1.2, 1.0, Stage::Velocity, 3, 2.5).unwrap_err();
        match err {
            ControlError::Envelope {
                stage,
                channel,
                time,
                xi,
            } => {
                assert_eq!(stage, Stage::Velocity);
                assert_eq!(channel, 3);
                assert_relative_eq!(time, 2.5);
                assert_relative_eq!(xi, 1.2);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn reference_velocity_pushes_against_error() {
        // Too little contact force (negative force error) commands
        // motion along the force direction; an orientation error
        // commands the opposite rotation.
        let c = controller();
        let config = Configuration::new(
            VehiclePose::new(Vector3::zeros(), Vector3::zeros()),
            DVector::zeros(4),
        );
        let e = c.task_error(&config, 0.1, 0.4).unwrap();
        assert_relative_eq!(e[0], -0.3, epsilon = 1e-12);
        let (xdot_r, _, _) = c.reference_velocity(&e, 0.0).unwrap();
        assert!(xdot_r[0] > 0.0);
        // Flip the sign of the error and the command flips.
        let (xdot_r2, _, _) = c.reference_velocity(&(-e), 0.0).unwrap();
        assert_relative_eq!(xdot_r2[0], -xdot_r[0], epsilon = 1e-12);
    }

    #[test]
    fn joint_reference_reproduces_task_velocity() {
        // J zeta^r must equal xdot_r when the task is feasible.
        let c = controller();
        let config = Configuration::new(
            VehiclePose::new(Vector3::zeros(), Vector3::new(0.05, -0.1, 0.2)),
            DVector::from_vec(vec![0.3, 0.4, -0.5, 0.2]),
        );
        let xdot_r = Vector6::new(0.1, -0.2, 0.05, 0.02, -0.03, 0.04);
        let zeta_r = c.joint_reference(&config, &xdot_r).unwrap();
        let j = jacobian_set(&c.kinematics, &config).unwrap().j;
        let achieved = j * &zeta_r;
        for i in 0..6 {
            assert_relative_eq!(achieved[i], xdot_r[i], epsilon = 1e-9);
        }
    }

    #[test]
    fn secondary_velocity_does_not_disturb_task() {
        let mut c = controller();
        c.config.secondary = Some(DVector::from_fn(10, |i, _| 0.1 * (i as f64 + 1.0)));
        let config = Configuration::new(
            VehiclePose::new(Vector3::zeros(), Vector3::new(0.05, -0.1, 0.2)),
            DVector::from_vec(vec![0.3, 0.4, -0.5, 0.2]),
        );
        let xdot_r = Vector6::new(0.1, -0.2, 0.05, 0.02, -0.03, 0.04);
        let zeta_r = c.joint_reference(&config, &xdot_r).unwrap();
        let j = jacobian_set(&c.kinematics, &config).unwrap().j;
        let achieved = j * &zeta_r;
        for i in 0..6 {
            assert_relative_eq!(achieved[i], xdot_r[i], epsilon = 1e-9);
        }
    }

    #[test]
    fn control_step_requires_errors_inside_initial_funnel() {
        let c = controller();
        let config = Configuration::new(
            VehiclePose::new(Vector3::zeros(), Vector3::zeros()),
            DVector::zeros(4),
        );
        // Force error of 1.5 N exceeds rho_0 = 1.
        let err = c
            .control_step(&config, &DVector::zeros(10), 1.9, 0.4, 0.0)
            .unwrap_err();
        assert!(matches!(
            err,
            ControlError::Envelope {
                stage: Stage::Task,
                channel: 0,
                ..
            }
        ));
    }

    #[test]
    fn control_step_runs_and_saturates() {
        let mut c = controller();
        c.config.torque_limit = Some(1.0);
        let config = Configuration::new(
            VehiclePose::new(Vector3::zeros(), Vector3::zeros()),
            DVector::zeros(4),
        );
        let mut zeta = DVector::zeros(10);
        zeta[0] = 0.9; // deep in the velocity funnel
        let (tau, diag) = c.control_step(&config, &zeta, 0.1, 0.4, 0.0).unwrap();
        assert!(tau.iter().all(|t| t.abs() <= 1.0 + 1e-12));
        assert_eq!(diag.zeta_r.len(), 10);
        assert!(diag.xi_x.iter().all(|x| x.abs() < 1.0));
    }

    #[test]
    fn validate_flags_bad_envelopes() {
        let mut c = controller();
        assert!(c.validate().is_ok());
        c.config.perf_x[2].ultimate = -0.1;
        assert!(matches!(c.validate(), Err(ControlError::Config(_))));
    }

    #[test]
    fn controller_module_is_model_free() {
        // The control law may not reference plant-model or environment
        // internals; it works purely from kinematics and measurements.
        let src = include_str!("ppc.rs");
        for module in ["dynamics", "environment"] {
            let needle = format!("crate::{module}");
            assert!(!src.contains(&needle), "controller references {needle}");
        }
    }
}
