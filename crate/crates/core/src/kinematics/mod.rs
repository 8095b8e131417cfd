//! Frame transforms, Jacobians, and pseudo-inverse redundancy resolution.
//!
//! Conventions: inertial frame z-up, vehicle attitude as roll-pitch-yaw
//! (ZYX) Euler angles, generalized velocity `zeta` with the vehicle
//! body-frame linear and angular velocity first and joint rates after.

mod chain;

pub use chain::{frames, BodyIndex, Frames, JointSpec, KinematicModel};

use nalgebra::{DMatrix, DVector, Dyn, Matrix3, Matrix6, OMatrix, Rotation3, Vector3, Vector6, U6};
use thiserror::Error;

use crate::Scalar;

/// Relative singular-value cutoff for the Moore-Penrose pseudo-inverse.
pub const PINV_TRUNCATION: f64 = 1e-8;

/// Hard cutoff on `|cos(theta)|` below which the Euler-rate map is
/// treated as singular.
pub const EULER_SINGULARITY_EPS: f64 = 1e-6;

/// Default guard band around `theta = +/- pi/2` for pose validation.
pub const DEFAULT_EULER_MARGIN: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("Euler-rate map singular: |cos(theta)| = {cos_theta:.3e}")]
    EulerSingularity { cos_theta: f64 },
    #[error("pitch {theta} rad within margin {margin} of +/-pi/2")]
    PitchNearSingularity { theta: f64, margin: f64 },
    #[error("configuration has {got} joints, model expects {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("joint {index} angle {angle} outside limits [{min}, {max}]")]
    JointLimit {
        index: usize,
        angle: f64,
        min: f64,
        max: f64,
    },
}

/// Wrap an angle to `(-pi, pi]`.
pub fn wrap_angle<T: Scalar>(a: T) -> T {
    let pi = T::pi();
    let two_pi = pi + pi;
    let x = a - two_pi * ((a + pi) / two_pi).floor();
    if x <= -pi {
        x + two_pi
    } else {
        x
    }
}

/// Vehicle position and Euler-angle orientation in the inertial frame.
#[derive(Debug, Clone, PartialEq)]
pub struct VehiclePose<T: Scalar> {
    /// `[x, y, z]` in meters.
    pub position: Vector3<T>,
    /// `[phi, theta, psi]` roll-pitch-yaw in radians, wrapped to `(-pi, pi]`.
    pub attitude: Vector3<T>,
}

impl<T: Scalar> VehiclePose<T> {
    pub fn new(position: Vector3<T>, attitude: Vector3<T>) -> Self {
        Self {
            position,
            attitude: attitude.map(wrap_angle),
        }
    }

    /// Body-to-inertial rotation matrix (ZYX convention).
    pub fn rotation(&self) -> Matrix3<T> {
        Rotation3::from_euler_angles(self.attitude[0], self.attitude[1], self.attitude[2])
            .into_inner()
    }

    /// Check the pitch angle against the Euler singularity guard band.
    pub fn validate(&self, margin: T) -> Result<(), KinematicsError> {
        let theta = self.attitude[1];
        if theta.abs() >= T::frac_pi_2() - margin {
            return Err(KinematicsError::PitchNearSingularity {
                theta: theta.to_f64().unwrap_or(f64::NAN),
                margin: margin.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(())
    }
}

/// Full configuration: vehicle pose plus manipulator joint angles.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration<T: Scalar> {
    pub vehicle: VehiclePose<T>,
    pub joints: DVector<T>,
}

impl<T: Scalar> Configuration<T> {
    pub fn new(vehicle: VehiclePose<T>, joints: DVector<T>) -> Self {
        Self { vehicle, joints }
    }

    /// Total degrees of freedom `n`.
    pub fn dof(&self) -> usize {
        6 + self.joints.len()
    }

    /// Validate joint angles against the model's limits.
    pub fn validate_limits(&self, model: &KinematicModel<T>) -> Result<(), KinematicsError> {
        model.check_dimension(self)?;
        for (i, (spec, angle)) in model.joints.iter().zip(self.joints.iter()).enumerate() {
            if *angle < spec.limits.0 || *angle > spec.limits.1 {
                return Err(KinematicsError::JointLimit {
                    index: i,
                    angle: angle.to_f64().unwrap_or(f64::NAN),
                    min: spec.limits.0.to_f64().unwrap_or(f64::NAN),
                    max: spec.limits.1.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(())
    }
}

/// Generalized velocity: vehicle body twist `[v; omega]` followed by
/// joint rates.
pub type VelocityVector<T> = DVector<T>;

/// The four Jacobians of the velocity kinematics evaluated at one
/// configuration.
#[derive(Debug, Clone)]
pub struct JacobianSet<T: Scalar> {
    /// 6x6 vehicle kinematic map (body velocities to inertial pose rates).
    pub ja: Matrix6<T>,
    /// 6xn geometric Jacobian of the end-effector.
    pub jg: OMatrix<T, U6, Dyn>,
    /// Block-diagonal Euler-rate map `diag(I, J'')` at the end-effector
    /// attitude.
    pub jprime: Matrix6<T>,
    /// 6xn analytical Jacobian `(J')^-1 Jg`.
    pub j: OMatrix<T, U6, Dyn>,
}

/// Euler-rate matrix `J''` mapping roll-pitch-yaw rates to body angular
/// velocity, exactly as defined for ZYX angles:
///
/// ```text
/// [ 1        0            -sin(theta)        ]
/// [ 0    cos(phi)   cos(theta) sin(phi)      ]
/// [ 0   -sin(phi)   cos(theta) cos(phi)      ]
/// ```
pub fn euler_rate_matrix_at<T: Scalar>(attitude: &Vector3<T>) -> Matrix3<T> {
    let (sphi, cphi) = attitude[0].sin_cos();
    let (sth, cth) = attitude[1].sin_cos();
    Matrix3::new(
        T::one(),
        T::zero(),
        -sth,
        T::zero(),
        cphi,
        cth * sphi,
        T::zero(),
        -sphi,
        cth * cphi,
    )
}

/// Euler-rate matrix of a vehicle pose.
pub fn euler_rate_matrix<T: Scalar>(pose: &VehiclePose<T>) -> Matrix3<T> {
    euler_rate_matrix_at(&pose.attitude)
}

/// Closed-form inverse of [`euler_rate_matrix_at`] (body angular velocity
/// to Euler-angle rates). Singular at `cos(theta) = 0`.
fn euler_rate_inverse_at<T: Scalar>(attitude: &Vector3<T>) -> Result<Matrix3<T>, KinematicsError> {
    let (sphi, cphi) = attitude[0].sin_cos();
    let (sth, cth) = attitude[1].sin_cos();
    if cth.abs() < T::from_f64c(EULER_SINGULARITY_EPS) {
        return Err(KinematicsError::EulerSingularity {
            cos_theta: cth.abs().to_f64().unwrap_or(f64::NAN),
        });
    }
    let tth = sth / cth;
    Ok(Matrix3::new(
        T::one(),
        sphi * tth,
        cphi * tth,
        T::zero(),
        cphi,
        -sphi,
        T::zero(),
        sphi / cth,
        cphi / cth,
    ))
}

/// Vehicle kinematic map `J^a`: block-diagonal rotation matrix and
/// inverse Euler-rate transform, so that `qdot_a = J^a * nu`.
pub fn vehicle_jacobian<T: Scalar>(pose: &VehiclePose<T>) -> Result<Matrix6<T>, KinematicsError> {
    let jt = pose.rotation();
    let jr = euler_rate_inverse_at(&pose.attitude)?;
    let mut ja = Matrix6::zeros();
    ja.fixed_view_mut::<3, 3>(0, 0).copy_from(&jt);
    ja.fixed_view_mut::<3, 3>(3, 3).copy_from(&jr);
    Ok(ja)
}

/// Extract ZYX Euler angles from a rotation matrix.
pub fn euler_zyx<T: Scalar>(r: &Matrix3<T>) -> Vector3<T> {
    let theta = -r[(2, 0)].clamp(-T::one(), T::one()).asin();
    let phi = r[(2, 1)].atan2(r[(2, 2)]);
    let psi = r[(1, 0)].atan2(r[(0, 0)]);
    Vector3::new(phi, theta, psi)
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

/// Geometric Jacobian of a world point rigidly attached to `body`,
/// mapping `zeta` to the point's world linear velocity (rows 0..3) and
/// the body's world angular velocity (rows 3..6).
pub fn point_jacobian<T: Scalar>(
    frames: &Frames<T>,
    n: usize,
    body: BodyIndex,
    point: &Vector3<T>,
) -> OMatrix<T, U6, Dyn> {
    let mut j = OMatrix::<T, U6, Dyn>::zeros(n);
    let rv = &frames.vehicle_rotation;
    let arm = point - frames.vehicle_position;
    // Vehicle body velocity: v_p = R v + (R w) x (p - p_v), w_p = R w.
    j.fixed_view_mut::<3, 3>(0, 0).copy_from(rv);
    let lever = -skew(&arm) * rv;
    j.fixed_view_mut::<3, 3>(0, 3).copy_from(&lever);
    j.fixed_view_mut::<3, 3>(3, 3).copy_from(rv);
    // Revolute columns for every joint moving this body.
    for k in 0..frames.moving_joints(body) {
        let z = &frames.joint_axes[k];
        let r = point - frames.joint_positions[k];
        let lin = z.cross(&r);
        let col = 6 + k;
        for i in 0..3 {
            j[(i, col)] = lin[i];
            j[(i + 3, col)] = z[i];
        }
    }
    j
}

/// Geometric Jacobian `J^g` of the end-effector.
pub fn geometric_jacobian<T: Scalar>(
    model: &KinematicModel<T>,
    config: &Configuration<T>,
) -> Result<OMatrix<T, U6, Dyn>, KinematicsError> {
    let f = frames(model, config)?;
    let body = if model.joints.is_empty() {
        BodyIndex::Vehicle
    } else {
        BodyIndex::Link(model.joints.len() - 1)
    };
    Ok(point_jacobian(&f, config.dof(), body, &f.ee_position.clone()))
}

/// Analytical Jacobian `J = (J')^-1 J^g`, mapping `zeta` to the rate of
/// the end-effector coordinates `[position; Euler angles]`.
pub fn analytical_jacobian<T: Scalar>(
    model: &KinematicModel<T>,
    config: &Configuration<T>,
) -> Result<OMatrix<T, U6, Dyn>, KinematicsError> {
    Ok(jacobian_set(model, config)?.j)
}

/// Evaluate all four Jacobians at one configuration.
pub fn jacobian_set<T: Scalar>(
    model: &KinematicModel<T>,
    config: &Configuration<T>,
) -> Result<JacobianSet<T>, KinematicsError> {
    let f = frames(model, config)?;
    let body = if model.joints.is_empty() {
        BodyIndex::Vehicle
    } else {
        BodyIndex::Link(model.joints.len() - 1)
    };
    let jg = point_jacobian(&f, config.dof(), body, &f.ee_position.clone());

    // J'' relates Euler-angle rates to the body-frame angular velocity;
    // the geometric Jacobian carries the world-frame one, so the lower
    // block of J' is R_ee * J''.
    let ee_euler = euler_zyx(&f.ee_rotation);
    let jpp = euler_rate_matrix_at(&ee_euler);
    let jpp_inv = euler_rate_inverse_at(&ee_euler)?;

    let mut jprime = Matrix6::identity();
    let lower = f.ee_rotation * jpp;
    jprime.fixed_view_mut::<3, 3>(3, 3).copy_from(&lower);

    let mut j = jg.clone();
    let angular = jpp_inv * f.ee_rotation.transpose() * jg.rows(3, 3);
    j.rows_mut(3, 3).copy_from(&angular);

    let ja = vehicle_jacobian(&config.vehicle)?;

    Ok(JacobianSet {
        ja,
        jg,
        jprime,
        j,
    })
}

/// Moore-Penrose pseudo-inverse by SVD with relative truncation of
/// singular values below `PINV_TRUNCATION * sigma_max`.
///
/// Uses a one-sided Jacobi factorization rather than the library SVD:
/// the matrices that show up here are short and wide, and bidiagonal
/// reduction occasionally misconverges on exactly rank-deficient
/// inputs of that shape, while Jacobi sweeps over at most six columns
/// are both cheap and accurate to machine precision.
pub fn pseudo_inverse<T: Scalar>(j: &DMatrix<T>) -> DMatrix<T> {
    if j.nrows() < j.ncols() {
        return pseudo_inverse(&j.transpose()).transpose();
    }
    // Tall (or square) input: orthogonalize the columns in place so
    // that `a = w v^T` with `w = u sigma` having orthogonal columns.
    let mut w = j.clone();
    let k = w.ncols();
    let mut v = DMatrix::<T>::identity(k, k);
    let conv = T::default_epsilon() * T::from_f64c(8.0);
    for _ in 0..60 {
        let mut rotated = false;
        for p in 0..k {
            for q in (p + 1)..k {
                let alpha = w.column(p).dot(&w.column(p));
                let beta = w.column(q).dot(&w.column(q));
                let gamma = w.column(p).dot(&w.column(q));
                if gamma.abs() <= conv * (alpha * beta).sqrt() || gamma == T::zero() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (gamma + gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for m in [&mut w, &mut v] {
                    for i in 0..m.nrows() {
                        let mp = m[(i, p)];
                        let mq = m[(i, q)];
                        m[(i, p)] = c * mp - s * mq;
                        m[(i, q)] = s * mp + c * mq;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma: Vec<T> = (0..k).map(|c| w.column(c).norm()).collect();
    let sigma_max = sigma.iter().fold(T::zero(), |a, s| a.max(*s));
    let cutoff = T::from_f64c(PINV_TRUNCATION) * sigma_max;
    // pinv = sum over retained directions of v_i w_i^T / sigma_i^2.
    let mut pinv = DMatrix::<T>::zeros(k, j.nrows());
    for c in 0..k {
        if sigma[c] > cutoff && sigma[c] > T::zero() {
            let scale = T::one() / (sigma[c] * sigma[c]);
            for row in 0..k {
                for col in 0..j.nrows() {
                    pinv[(row, col)] += v[(row, c)] * w[(col, c)] * scale;
                }
            }
        }
    }
    pinv
}

/// Redundancy resolution with a secondary task projected into the null
/// space of `J`:
///
/// `zeta_r = J+ xdot_r + (I - J+ J) xdot_0`
pub fn nullspace_projected_velocity<T: Scalar>(
    j: &DMatrix<T>,
    xdot_r: &Vector6<T>,
    xdot_0: &DVector<T>,
) -> DVector<T> {
    let n = j.ncols();
    let jp = pseudo_inverse(j);
    let projector = DMatrix::identity(n, n) - &jp * j;
    DVector::from(&jp * xdot_r) + projector * xdot_0
}
