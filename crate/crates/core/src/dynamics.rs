//! Equation of motion of the floating vehicle + manipulator and a
//! fixed-step integrator.
//!
//! The generalized inertia is assembled per rigid body through its
//! center-of-mass Jacobian, with the vehicle added-mass block on top.
//! Coriolis/centrifugal terms use the same body Jacobians plus their
//! directional derivatives along the configuration flow, which keeps
//! `zeta' (Mdot - 2C) zeta = 0` and energy conservation exact up to the
//! finite-difference step.

use nalgebra::{DMatrix, DVector, Dyn, Matrix3, Matrix6, OMatrix, Vector3, Vector6, U6};
use thiserror::Error;

use crate::kinematics::{
    frames, point_jacobian, vehicle_jacobian, BodyIndex, Configuration, Frames, KinematicModel,
    KinematicsError,
};
use crate::Scalar;

/// Finite-difference step for the Jacobian time-derivative and for the
/// `Mdot` oracle used in tests.
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error("inertia matrix factorization failed; model misconfigured")]
    FactorizationFailed,
    #[error("non-finite value in state or derivative")]
    NonFinite,
    #[error("integration step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("model invalid: {0}")]
    InvalidModel(String),
}

/// Inertial and hydrostatic parameters of one rigid body, expressed in
/// its own frame.
#[derive(Debug, Clone)]
pub struct RigidBody<T: Scalar> {
    pub mass: T,
    /// Inertia tensor about the center of mass.
    pub inertia: Matrix3<T>,
    pub center_of_gravity: Vector3<T>,
    pub center_of_buoyancy: Vector3<T>,
    /// Displaced volume used for the buoyancy force.
    pub buoyancy_volume: T,
}

/// Complete plant model: chain geometry plus per-body mass and
/// hydrodynamic coefficients.
#[derive(Debug, Clone)]
pub struct DynamicModel<T: Scalar> {
    pub kinematics: KinematicModel<T>,
    pub vehicle: RigidBody<T>,
    /// One link per joint; link `i` is rigid in the frame after joint `i`.
    pub links: Vec<RigidBody<T>>,
    /// 6x6 vehicle added-mass block, body frame.
    pub added_mass: Matrix6<T>,
    /// Reflected drive-train inertia per joint; enters the joint
    /// diagonal of the inertia matrix directly and decouples otherwise
    /// nearly parallel joints.
    pub rotor_inertia: DVector<T>,
    /// Diagonal linear drag, one coefficient per `zeta` coordinate.
    pub damping_linear: DVector<T>,
    /// Diagonal quadratic drag, one coefficient per `zeta` coordinate.
    pub damping_quadratic: DVector<T>,
    pub fluid_density: T,
    pub gravity: T,
}

impl<T: Scalar> DynamicModel<T> {
    pub fn dof(&self) -> usize {
        self.kinematics.dof()
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let n = self.dof();
        if self.links.len() != self.kinematics.joints.len() {
            return Err(DynamicsError::InvalidModel(format!(
                "{} links for {} joints",
                self.links.len(),
                self.kinematics.joints.len()
            )));
        }
        if self.rotor_inertia.len() != n - 6 {
            return Err(DynamicsError::InvalidModel(format!(
                "rotor inertia must have one entry per joint ({})",
                n - 6
            )));
        }
        if self.rotor_inertia.iter().any(|r| *r < T::zero()) {
            return Err(DynamicsError::InvalidModel(
                "rotor inertia must be non-negative".into(),
            ));
        }
        if self.damping_linear.len() != n || self.damping_quadratic.len() != n {
            return Err(DynamicsError::InvalidModel(format!(
                "damping vectors must have length {n}"
            )));
        }
        for d in self.damping_linear.iter().chain(self.damping_quadratic.iter()) {
            if *d < T::zero() {
                return Err(DynamicsError::InvalidModel(
                    "drag coefficients must be non-negative".into(),
                ));
            }
        }
        if (self.added_mass - self.added_mass.transpose()).norm() > T::from_f64c(1e-9) {
            return Err(DynamicsError::InvalidModel(
                "added-mass matrix must be symmetric".into(),
            ));
        }
        Ok(())
    }

    fn bodies(&self) -> impl Iterator<Item = (BodyIndex, &RigidBody<T>)> {
        std::iter::once((BodyIndex::Vehicle, &self.vehicle)).chain(
            self.links
                .iter()
                .enumerate()
                .map(|(i, b)| (BodyIndex::Link(i), b)),
        )
    }
}

/// Contact wrench at the end-effector.
#[derive(Debug, Clone, PartialEq)]
pub struct Wrench<T: Scalar> {
    pub force: Vector3<T>,
    pub torque: Vector3<T>,
}

impl<T: Scalar> Wrench<T> {
    pub fn zero() -> Self {
        Self {
            force: Vector3::zeros(),
            torque: Vector3::zeros(),
        }
    }

    pub fn to_vector(&self) -> Vector6<T> {
        let mut v = Vector6::zeros();
        v.fixed_rows_mut::<3>(0).copy_from(&self.force);
        v.fixed_rows_mut::<3>(3).copy_from(&self.torque);
        v
    }
}

/// Full plant state: configuration plus generalized velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState<T: Scalar> {
    pub config: Configuration<T>,
    pub zeta: DVector<T>,
}

/// Clamp each torque component to `[-limit, limit]`.
pub fn clamp_torque<T: Scalar>(tau: &mut DVector<T>, limit: T) {
    for t in tau.iter_mut() {
        *t = (*t).clamp(-limit, limit);
    }
}

fn skew<T: Scalar>(v: &Vector3<T>) -> Matrix3<T> {
    Matrix3::new(
        T::zero(),
        -v[2],
        v[1],
        v[2],
        T::zero(),
        -v[0],
        -v[1],
        v[0],
        T::zero(),
    )
}

fn body_point_world<T: Scalar>(f: &Frames<T>, body: BodyIndex, local: &Vector3<T>) -> Vector3<T> {
    match body {
        BodyIndex::Vehicle => f.vehicle_position + f.vehicle_rotation * local,
        BodyIndex::Link(i) => f.joint_positions[i] + f.link_rotations[i] * local,
    }
}

/// Generalized coordinate rates `qdot = [J^a nu; qdot_m]` for a given
/// `zeta`.
pub fn coordinate_rates<T: Scalar>(
    config: &Configuration<T>,
    zeta: &DVector<T>,
) -> Result<DVector<T>, KinematicsError> {
    let ja = vehicle_jacobian(&config.vehicle)?;
    let nu = Vector6::from_iterator(zeta.iter().take(6).copied());
    let qdot_a = ja * nu;
    let mut qdot = DVector::zeros(config.dof());
    qdot.rows_mut(0, 6).copy_from(&qdot_a);
    for k in 6..config.dof() {
        qdot[k] = zeta[k];
    }
    Ok(qdot)
}

/// Shift a configuration by `h * qdot` (no angle wrapping; used for
/// finite differences and integrator stages).
pub fn shifted_config<T: Scalar>(
    config: &Configuration<T>,
    qdot: &DVector<T>,
    h: T,
) -> Configuration<T> {
    let mut c = config.clone();
    for i in 0..3 {
        c.vehicle.position[i] += h * qdot[i];
        c.vehicle.attitude[i] += h * qdot[3 + i];
    }
    for k in 0..c.joints.len() {
        c.joints[k] += h * qdot[6 + k];
    }
    c
}

/// Generalized inertia matrix: composite rigid-body inertia of the
/// floating chain plus the vehicle added-mass block. Symmetric positive
/// definite by construction.
pub fn mass_matrix<T: Scalar>(
    model: &DynamicModel<T>,
    config: &Configuration<T>,
) -> Result<DMatrix<T>, DynamicsError> {
    let f = frames(&model.kinematics, config)?;
    Ok(mass_matrix_at(model, &f, config.dof()))
}

fn mass_matrix_at<T: Scalar>(model: &DynamicModel<T>, f: &Frames<T>, n: usize) -> DMatrix<T> {
    let mut m = DMatrix::zeros(n, n);
    for (body, rb) in model.bodies() {
        let com = body_point_world(f, body, &rb.center_of_gravity);
        let j = point_jacobian(f, n, body, &com);
        let jl = j.rows(0, 3);
        let jw = j.rows(3, 3);
        let r = f.body_rotation(body);
        let iw = r * rb.inertia * r.transpose();
        m += jl.transpose() * jl * rb.mass + jw.transpose() * iw * jw;
    }
    let mut top = m.view_mut((0, 0), (6, 6));
    for i in 0..6 {
        for k in 0..6 {
            top[(i, k)] += model.added_mass[(i, k)];
        }
    }
    for k in 0..model.rotor_inertia.len() {
        m[(6 + k, 6 + k)] += model.rotor_inertia[k];
    }
    // Kill roundoff asymmetry.
    let sym = (&m + m.transpose()) * T::from_f64c(0.5);
    sym
}

/// Coriolis/centrifugal matrix consistent with [`mass_matrix`]:
/// per-body Jacobian transport with finite-difference Jacobian rates
/// plus gyroscopic and added-mass cross terms.
pub fn coriolis_matrix<T: Scalar>(
    model: &DynamicModel<T>,
    config: &Configuration<T>,
    zeta: &DVector<T>,
) -> Result<DMatrix<T>, DynamicsError> {
    let n = config.dof();
    let qdot = coordinate_rates(config, zeta)?;
    let h = T::from_f64c(FD_STEP);
    let f0 = frames(&model.kinematics, config)?;
    let fp = frames(&model.kinematics, &shifted_config(config, &qdot, h))?;
    let fm = frames(&model.kinematics, &shifted_config(config, &qdot, -h))?;

    let mut c = DMatrix::zeros(n, n);
    let two_h = h + h;
    for (body, rb) in model.bodies() {
        let com0 = body_point_world(&f0, body, &rb.center_of_gravity);
        let comp = body_point_world(&fp, body, &rb.center_of_gravity);
        let comm = body_point_world(&fm, body, &rb.center_of_gravity);
        let j = point_jacobian(&f0, n, body, &com0);
        let jp = point_jacobian(&fp, n, body, &comp);
        let jm = point_jacobian(&fm, n, body, &comm);
        let jdot = (jp - jm) / two_h;

        let r = f0.body_rotation(body);
        let iw = r * rb.inertia * r.transpose();

        let jl = j.rows(0, 3);
        let jw = j.rows(3, 3);
        let jdl = jdot.rows(0, 3);
        let jdw = jdot.rows(3, 3);

        let om = jw * zeta;
        let omega = Vector3::new(om[0], om[1], om[2]);
        c += jl.transpose() * jdl * rb.mass
            + jw.transpose() * iw * jdw
            + jw.transpose() * (skew(&omega) * iw) * jw;
    }

    // Fossen-form added-mass cross terms (skew-symmetric, zero power).
    let v = Vector3::new(zeta[0], zeta[1], zeta[2]);
    let w = Vector3::new(zeta[3], zeta[4], zeta[5]);
    let a = &model.added_mass;
    let a11 = a.fixed_view::<3, 3>(0, 0);
    let a12 = a.fixed_view::<3, 3>(0, 3);
    let a21 = a.fixed_view::<3, 3>(3, 0);
    let a22 = a.fixed_view::<3, 3>(3, 3);
    let p_lin = a11 * v + a12 * w;
    let p_ang = a21 * v + a22 * w;
    let s_lin = skew(&p_lin);
    let s_ang = skew(&p_ang);
    for i in 0..3 {
        for k in 0..3 {
            c[(i, 3 + k)] -= s_lin[(i, k)];
            c[(3 + i, k)] -= s_lin[(i, k)];
            c[(3 + i, 3 + k)] -= s_ang[(i, k)];
        }
    }
    Ok(c)
}

/// Dissipative force `D(zeta) * zeta` with diagonal linear plus
/// quadratic drag.
pub fn damping_force<T: Scalar>(model: &DynamicModel<T>, zeta: &DVector<T>) -> DVector<T> {
    DVector::from_fn(zeta.len(), |i, _| {
        (model.damping_linear[i] + model.damping_quadratic[i] * zeta[i].abs()) * zeta[i]
    })
}

/// Generalized gravity + buoyancy vector `g(q)` (enters the equation of
/// motion on the left-hand side).
pub fn restoring_force<T: Scalar>(
    model: &DynamicModel<T>,
    config: &Configuration<T>,
) -> Result<DVector<T>, DynamicsError> {
    let f = frames(&model.kinematics, config)?;
    let n = config.dof();
    let mut q = DVector::zeros(n);
    for (body, rb) in model.bodies() {
        let weight = rb.mass * model.gravity;
        let buoy = model.fluid_density * model.gravity * rb.buoyancy_volume;
        let com = body_point_world(&f, body, &rb.center_of_gravity);
        let cob = body_point_world(&f, body, &rb.center_of_buoyancy);
        let jg = point_jacobian(&f, n, body, &com);
        let jb = point_jacobian(&f, n, body, &cob);
        // World forces: weight down, buoyancy up.
        for col in 0..n {
            q[col] += jg[(2, col)] * (-weight) + jb[(2, col)] * buoy;
        }
    }
    Ok(-q)
}

/// Kinetic energy `0.5 * zeta' M zeta`.
pub fn kinetic_energy<T: Scalar>(
    model: &DynamicModel<T>,
    config: &Configuration<T>,
    zeta: &DVector<T>,
) -> Result<T, DynamicsError> {
    let m = mass_matrix(model, config)?;
    Ok((zeta.transpose() * m * zeta)[(0, 0)] * T::from_f64c(0.5))
}

/// Geometric Jacobian transpose applied to the contact wrench exerted on
/// the environment.
fn contact_generalized<T: Scalar>(
    model: &DynamicModel<T>,
    f: &Frames<T>,
    n: usize,
    contact: &Wrench<T>,
) -> DVector<T> {
    let body = if model.kinematics.joints.is_empty() {
        BodyIndex::Vehicle
    } else {
        BodyIndex::Link(model.kinematics.joints.len() - 1)
    };
    let jg: OMatrix<T, U6, Dyn> = point_jacobian(f, n, body, &f.ee_position.clone());
    jg.transpose() * contact.to_vector()
}

/// Forward dynamics: solve `M zetadot = tau - C zeta - D zeta - g -
/// Jg' lambda - delta` by Cholesky factorization.
///
/// `contact` is the wrench the system exerts on the environment
/// (`lambda` in the equation of motion); `delta` is the exogenous
/// generalized disturbance.
pub fn forward_dynamics<T: Scalar>(
    model: &DynamicModel<T>,
    config: &Configuration<T>,
    zeta: &DVector<T>,
    tau: &DVector<T>,
    contact: &Wrench<T>,
    delta: &DVector<T>,
) -> Result<DVector<T>, DynamicsError> {
    let n = config.dof();
    let f = frames(&model.kinematics, config)?;
    let m = mass_matrix_at(model, &f, n);
    let c = coriolis_matrix(model, config, zeta)?;
    let g = restoring_force(model, config)?;
    let d = damping_force(model, zeta);
    let jlam = contact_generalized(model, &f, n, contact);

    let rhs = tau - c * zeta - d - g - jlam - delta;
    let chol = m.cholesky().ok_or(DynamicsError::FactorizationFailed)?;
    let acc = chol.solve(&rhs);
    if acc.iter().any(|x| !x.is_finite()) {
        return Err(DynamicsError::NonFinite);
    }
    Ok(acc)
}

/// External loads evaluated at an integrator stage.
#[derive(Debug, Clone)]
pub struct ExternalLoad<T: Scalar> {
    /// Wrench exerted on the environment at the end-effector.
    pub contact: Wrench<T>,
    /// Generalized disturbance vector.
    pub disturbance: DVector<T>,
}

fn pack<T: Scalar>(state: &SystemState<T>) -> DVector<T> {
    let n = state.config.dof();
    let mut y = DVector::zeros(2 * n);
    for i in 0..3 {
        y[i] = state.config.vehicle.position[i];
        y[3 + i] = state.config.vehicle.attitude[i];
    }
    for k in 0..n - 6 {
        y[6 + k] = state.config.joints[k];
    }
    for i in 0..n {
        y[n + i] = state.zeta[i];
    }
    y
}

fn unpack<T: Scalar>(y: &DVector<T>, n: usize) -> SystemState<T> {
    let position = Vector3::new(y[0], y[1], y[2]);
    let attitude = Vector3::new(y[3], y[4], y[5]);
    let joints = DVector::from_fn(n - 6, |k, _| y[6 + k]);
    let zeta = DVector::from_fn(n, |i, _| y[n + i]);
    SystemState {
        config: Configuration {
            vehicle: crate::kinematics::VehiclePose { position, attitude },
            joints,
        },
        zeta,
    }
}

fn state_derivative<T: Scalar, F>(
    model: &DynamicModel<T>,
    y: &DVector<T>,
    t: T,
    tau: &DVector<T>,
    external: &F,
) -> Result<DVector<T>, DynamicsError>
where
    F: Fn(&SystemState<T>, T) -> ExternalLoad<T>,
{
    let n = model.dof();
    let state = unpack(y, n);
    let load = external(&state, t);
    let qdot = coordinate_rates(&state.config, &state.zeta)?;
    let acc = forward_dynamics(
        model,
        &state.config,
        &state.zeta,
        tau,
        &load.contact,
        &load.disturbance,
    )?;
    let mut dy = DVector::zeros(2 * n);
    dy.rows_mut(0, n).copy_from(&qdot);
    dy.rows_mut(n, n).copy_from(&acc);
    Ok(dy)
}

/// One classical Runge-Kutta step of the coupled kinematics/dynamics
/// with the control torque held constant over the step. External loads
/// are re-evaluated at each stage. Attitude and joint angles are
/// re-wrapped afterwards.
pub fn rk4_step<T: Scalar, F>(
    model: &DynamicModel<T>,
    state: &SystemState<T>,
    t: T,
    h: T,
    tau: &DVector<T>,
    external: &F,
) -> Result<SystemState<T>, DynamicsError>
where
    F: Fn(&SystemState<T>, T) -> ExternalLoad<T>,
{
    if h <= T::zero() {
        return Err(DynamicsError::NonPositiveStep(
            h.to_f64().unwrap_or(f64::NAN),
        ));
    }
    let y = pack(state);
    if y.iter().any(|x| !x.is_finite()) {
        return Err(DynamicsError::NonFinite);
    }
    let half = T::from_f64c(0.5);
    let sixth = T::one() / T::from_f64c(6.0);
    let two = T::from_f64c(2.0);

    let k1 = state_derivative(model, &y, t, tau, external)?;
    let k2 = state_derivative(model, &(&y + &k1 * (h * half)), t + h * half, tau, external)?;
    let k3 = state_derivative(model, &(&y + &k2 * (h * half)), t + h * half, tau, external)?;
    let k4 = state_derivative(model, &(&y + &k3 * h), t + h, tau, external)?;

    let y_next = &y + (k1 + k2 * two + k3 * two + k4) * (h * sixth);
    if y_next.iter().any(|x| !x.is_finite()) {
        return Err(DynamicsError::NonFinite);
    }
    let mut next = unpack(&y_next, model.dof());
    next.config.vehicle.attitude = next.config.vehicle.attitude.map(crate::kinematics::wrap_angle);
    next.config.joints = next.config.joints.map(crate::kinematics::wrap_angle);
    Ok(next)
}

/// Classical RK4 step for an arbitrary smooth right-hand side; used by
/// convergence-order tests.
pub fn rk4<T: Scalar, F>(f: &F, t: T, y: &DVector<T>, h: T) -> DVector<T>
where
    F: Fn(T, &DVector<T>) -> DVector<T>,
{
    let half = T::from_f64c(0.5);
    let sixth = T::one() / T::from_f64c(6.0);
    let two = T::from_f64c(2.0);
    let k1 = f(t, y);
    let k2 = f(t + h * half, &(y + &k1 * (h * half)));
    let k3 = f(t + h * half, &(y + &k2 * (h * half)));
    let k4 = f(t + h, &(y + &k3 * h));
    y + (k1 + k2 * two + k3 * two + k4) * (h * sixth)
}
