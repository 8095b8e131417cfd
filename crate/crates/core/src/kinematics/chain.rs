//! Serial-chain description of the manipulator and forward kinematics of
//! the full vehicle + arm system.

use nalgebra::{Matrix3, Rotation3, Unit, Vector3};

use super::{Configuration, KinematicsError};
use crate::Scalar;

/// One revolute joint of the manipulator.
///
/// `offset` is the joint origin expressed in the parent frame (the mount
/// frame for the first joint, the previous joint frame otherwise). The
/// rotation axis is expressed in the joint's own pre-rotation frame.
#[derive(Debug, Clone)]
pub struct JointSpec<T: Scalar> {
    pub axis: Unit<Vector3<T>>,
    pub offset: Vector3<T>,
    pub limits: (T, T),
}

/// Geometry of the vehicle-mounted manipulator chain.
#[derive(Debug, Clone)]
pub struct KinematicModel<T: Scalar> {
    /// Arm base position in the vehicle frame.
    pub mount_position: Vector3<T>,
    /// Arm base orientation in the vehicle frame (roll-pitch-yaw).
    pub mount_attitude: Vector3<T>,
    pub joints: Vec<JointSpec<T>>,
    /// End-effector position in the last joint frame.
    pub ee_offset: Vector3<T>,
    /// Configurable guard band around the Euler pitch singularity.
    pub euler_margin: T,
}

impl<T: Scalar> KinematicModel<T> {
    /// Total number of generalized coordinates (6 vehicle + joints).
    pub fn dof(&self) -> usize {
        6 + self.joints.len()
    }

    pub fn check_dimension(&self, config: &Configuration<T>) -> Result<(), KinematicsError> {
        if config.joints.len() != self.joints.len() {
            return Err(KinematicsError::DimensionMismatch {
                got: config.joints.len(),
                expected: self.joints.len(),
            });
        }
        Ok(())
    }
}

/// World-frame poses of every frame in the chain at one configuration.
#[derive(Debug, Clone)]
pub struct Frames<T: Scalar> {
    pub vehicle_position: Vector3<T>,
    pub vehicle_rotation: Matrix3<T>,
    /// World position of joint `i`.
    pub joint_positions: Vec<Vector3<T>>,
    /// World direction of the rotation axis of joint `i`.
    pub joint_axes: Vec<Vector3<T>>,
    /// World orientation of the link frame after joint `i`.
    pub link_rotations: Vec<Matrix3<T>>,
    pub ee_position: Vector3<T>,
    pub ee_rotation: Matrix3<T>,
}

/// Forward kinematics of the whole chain.
pub fn frames<T: Scalar>(
    model: &KinematicModel<T>,
    config: &Configuration<T>,
) -> Result<Frames<T>, KinematicsError> {
    model.check_dimension(config)?;
    let r_vehicle = config.vehicle.rotation();
    let p_vehicle = config.vehicle.position;

    let r_mount = r_vehicle
        * Rotation3::from_euler_angles(
            model.mount_attitude[0],
            model.mount_attitude[1],
            model.mount_attitude[2],
        )
        .into_inner();
    let p_mount = p_vehicle + r_vehicle * model.mount_position;

    let mut joint_positions = Vec::with_capacity(model.joints.len());
    let mut joint_axes = Vec::with_capacity(model.joints.len());
    let mut link_rotations = Vec::with_capacity(model.joints.len());

    let mut r_prev = r_mount;
    let mut p_prev = p_mount;
    for (joint, angle) in model.joints.iter().zip(config.joints.iter()) {
        let p = p_prev + r_prev * joint.offset;
        let axis_world = r_prev * joint.axis.into_inner();
        let r = r_prev * Rotation3::from_axis_angle(&joint.axis, *angle).into_inner();
        joint_positions.push(p);
        joint_axes.push(axis_world);
        link_rotations.push(r);
        r_prev = r;
        p_prev = p;
    }

    let ee_position = p_prev + r_prev * model.ee_offset;
    let ee_rotation = r_prev;

    Ok(Frames {
        vehicle_position: p_vehicle,
        vehicle_rotation: r_vehicle,
        joint_positions,
        joint_axes,
        link_rotations,
        ee_position,
        ee_rotation,
    })
}

/// Index of the rigid body a point is attached to: the vehicle or a link.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BodyIndex {
    Vehicle,
    /// Link rigidly attached after joint `i` (0-based).
    Link(usize),
}

impl<T: Scalar> Frames<T> {
    /// Rotation of a body frame in world coordinates.
    pub fn body_rotation(&self, body: BodyIndex) -> &Matrix3<T> {
        match body {
            BodyIndex::Vehicle => &self.vehicle_rotation,
            BodyIndex::Link(i) => &self.link_rotations[i],
        }
    }

    /// Number of joints that move the given body.
    pub fn moving_joints(&self, body: BodyIndex) -> usize {
        match body {
            BodyIndex::Vehicle => 0,
            BodyIndex::Link(i) => i + 1,
        }
    }
}
