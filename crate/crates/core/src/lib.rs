//! Simulation and control library for an underwater vehicle-manipulator
//! system (UVMS) pressing on a compliant environment.
//!
//! The plant is a floating 6-DoF vehicle carrying a serial manipulator,
//! modelled with composite rigid-body dynamics plus marine hydrodynamic
//! terms (added mass, linear/quadratic drag, restoring forces). The
//! controller is a two-level model-free prescribed-performance law: force
//! and orientation errors are kept inside decaying envelopes by a
//! logarithmic error transformation, first producing a task-space
//! reference velocity and then joint-level torques.
//!
//! Core math is generic over the scalar type (`f32`/`f64`) through the
//! [`Scalar`] trait; the harness and file formats are pinned to `f64`.

pub mod dynamics;
pub mod environment;
pub mod kinematics;
pub mod model_file;
pub mod ppc;
pub mod sim;
pub mod verify;

mod scalar;

pub use scalar::Scalar;

/// Scalar type used by the simulation harness and file formats.
pub type Real = f64;

/// Plant model at harness precision.
pub type UvmsModel = dynamics::DynamicModel<Real>;
/// Plant state at harness precision.
pub type UvmsState = dynamics::SystemState<Real>;
/// Controller at harness precision.
pub type UvmsController = ppc::PpcController<Real>;

pub use sim::{run_scenario, Scenario, SimLog};

