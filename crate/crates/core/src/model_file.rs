//! Human-readable model and scenario files (TOML).
//!
//! A *model* file describes the plant: vehicle and link mass
//! properties, hydrodynamic coefficients, and the chain geometry. A
//! *scenario* file references a model and adds everything needed for a
//! run: initial state, environment, exogenous signals, and controller
//! settings. Files are parsed into plain `f64` structures and then
//! assembled into the typed simulation objects.

use std::path::Path;

use nalgebra::{DVector, Matrix3, Matrix6, Unit, Vector3};
use serde::Deserialize;
use thiserror::Error;

use crate::dynamics::{DynamicModel, RigidBody, SystemState};
use crate::environment::{CompliantPlane, DisturbanceSpec, ForceTrajectory, NoiseSpec};
use crate::kinematics::{
    Configuration, JointSpec, KinematicModel, VehiclePose, DEFAULT_EULER_MARGIN,
};
use crate::ppc::{ControllerConfig, PerformanceFunction, PpcController};
use crate::sim::Scenario;

#[derive(Debug, Error)]
pub enum FileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid file: {0}")]
    Invalid(String),
    #[error("unknown built-in model '{0}'")]
    UnknownBuiltin(String),
}

fn vec3(v: &[f64; 3]) -> Vector3<f64> {
    Vector3::new(v[0], v[1], v[2])
}

// ---------------------------------------------------------------------------
// Model file
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BodyRaw {
    mass: f64,
    /// Principal moments of inertia about the center of mass.
    inertia: [f64; 3],
    center_of_gravity: [f64; 3],
    center_of_buoyancy: [f64; 3],
    buoyancy_volume: f64,
}

impl BodyRaw {
    fn build(&self) -> RigidBody<f64> {
        RigidBody {
            mass: self.mass,
            inertia: Matrix3::from_diagonal(&vec3(&self.inertia)),
            center_of_gravity: vec3(&self.center_of_gravity),
            center_of_buoyancy: vec3(&self.center_of_buoyancy),
            buoyancy_volume: self.buoyancy_volume,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct JointRaw {
    axis: [f64; 3],
    offset: [f64; 3],
    limits: [f64; 2],
    /// Reflected drive-train inertia seen at the joint.
    rotor_inertia: f64,
    #[serde(flatten)]
    body: BodyRaw,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct HydroRaw {
    /// Diagonal of the 6x6 vehicle added-mass matrix.
    added_mass: [f64; 6],
    damping_linear: Vec<f64>,
    damping_quadratic: Vec<f64>,
    fluid_density: f64,
    gravity: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MountRaw {
    position: [f64; 3],
    attitude: [f64; 3],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EndEffectorRaw {
    offset: [f64; 3],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelRaw {
    /// Accepted for self-documenting files; not used programmatically.
    #[allow(dead_code)]
    name: Option<String>,
    vehicle: BodyRaw,
    hydrodynamics: HydroRaw,
    mount: MountRaw,
    #[serde(default, rename = "joint")]
    joints: Vec<JointRaw>,
    end_effector: EndEffectorRaw,
}

/// Parse a model definition from TOML text.
pub fn parse_model(text: &str) -> Result<DynamicModel<f64>, FileError> {
    let raw: ModelRaw = toml::from_str(text)?;
    let n = 6 + raw.joints.len();
    let kinematics = KinematicModel {
        mount_position: vec3(&raw.mount.position),
        mount_attitude: vec3(&raw.mount.attitude),
        joints: raw
            .joints
            .iter()
            .map(|j| {
                let axis = vec3(&j.axis);
                if axis.norm() < 1e-12 {
                    return Err(FileError::Invalid("joint axis must be non-zero".into()));
                }
                Ok(JointSpec {
                    axis: Unit::new_normalize(axis),
                    offset: vec3(&j.offset),
                    limits: (j.limits[0], j.limits[1]),
                })
            })
            .collect::<Result<Vec<_>, _>>()?,
        ee_offset: vec3(&raw.end_effector.offset),
        euler_margin: DEFAULT_EULER_MARGIN,
    };
    let mut added = Matrix6::zeros();
    for i in 0..6 {
        added[(i, i)] = raw.hydrodynamics.added_mass[i];
    }
    let model = DynamicModel {
        kinematics,
        vehicle: raw.vehicle.build(),
        links: raw.joints.iter().map(|j| j.body.build()).collect(),
        added_mass: added,
        rotor_inertia: DVector::from_iterator(
            raw.joints.len(),
            raw.joints.iter().map(|j| j.rotor_inertia),
        ),
        damping_linear: DVector::from_vec(raw.hydrodynamics.damping_linear.clone()),
        damping_quadratic: DVector::from_vec(raw.hydrodynamics.damping_quadratic.clone()),
        fluid_density: raw.hydrodynamics.fluid_density,
        gravity: raw.hydrodynamics.gravity,
    };
    if model.damping_linear.len() != n || model.damping_quadratic.len() != n {
        return Err(FileError::Invalid(format!(
            "damping vectors must have {n} entries for a {}-joint model",
            raw.joints.len()
        )));
    }
    model
        .validate()
        .map_err(|e| FileError::Invalid(e.to_string()))?;
    Ok(model)
}

/// Load a model from a TOML file on disk.
pub fn load_model(path: &Path) -> Result<DynamicModel<f64>, FileError> {
    let text = std::fs::read_to_string(path).map_err(|source| FileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_model(&text)
}

/// Built-in model shipped with the library.
pub const BUILTIN_MODEL_LBV150: &str = "lbv150_4dof";

/// TOML source of a built-in model.
pub fn builtin_model(name: &str) -> Result<&'static str, FileError> {
    match name {
        BUILTIN_MODEL_LBV150 => Ok(include_str!("../assets/lbv150_4dof.toml")),
        other => Err(FileError::UnknownBuiltin(other.into())),
    }
}

// ---------------------------------------------------------------------------
// Scenario file
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunRaw {
    name: String,
    duration: f64,
    time_step: f64,
    /// Keep every k-th sample in the log (1 = every step).
    #[serde(default = "default_decimation")]
    log_decimation: usize,
    /// Either `builtin:<name>` or a path relative to the scenario file.
    model: String,
}

fn default_decimation() -> usize {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InitialRaw {
    position: [f64; 3],
    attitude: [f64; 3],
    #[serde(default)]
    joints: Vec<f64>,
    #[serde(default)]
    zeta: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnvironmentRaw {
    /// When true the plane is anchored relative to the initial
    /// end-effector position so the run starts already in (or exactly
    /// at) contact.
    #[serde(default)]
    anchor_at_initial_ee: bool,
    /// Initial penetration depth used with `anchor_at_initial_ee`
    /// (0 = contact onset).
    #[serde(default)]
    initial_penetration: f64,
    #[serde(default)]
    anchor: Option<[f64; 3]>,
    normal: [f64; 3],
    stiffness: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, tag = "type", rename_all = "lowercase")]
enum ForceRaw {
    Constant {
        value: f64,
    },
    Sinusoid {
        amplitude: f64,
        angular_frequency: f64,
        #[serde(default)]
        phase: f64,
        offset: f64,
    },
    Ramp {
        start: f64,
        rate: f64,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DisturbanceRaw {
    /// Single amplitude applied to every generalized coordinate.
    amplitude: f64,
    angular_frequency: f64,
    #[serde(default)]
    phase: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseRaw {
    bound: f64,
    #[serde(default = "default_noise_rate")]
    update_hz: f64,
}

fn default_noise_rate() -> f64 {
    10.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ControllerRaw {
    k_x: f64,
    k_zeta: f64,
    rho0_x: [f64; 6],
    rho_inf_x: [f64; 6],
    decay_x: f64,
    rho0_zeta: f64,
    rho_inf_zeta_vehicle: f64,
    rho_inf_zeta_joint: f64,
    decay_zeta: f64,
    force_direction: [f64; 3],
    desired_orientation: [f64; 3],
    #[serde(default)]
    torque_limit: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioRaw {
    run: RunRaw,
    initial: InitialRaw,
    environment: EnvironmentRaw,
    force: ForceRaw,
    #[serde(default)]
    disturbance: Option<DisturbanceRaw>,
    #[serde(default)]
    noise: Option<NoiseRaw>,
    controller: ControllerRaw,
    /// Default RNG seed; the harness may override it.
    #[serde(default)]
    seed: u64,
}

/// Parse a scenario from TOML text. `model_dir` resolves relative model
/// paths; built-in models need no directory.
pub fn parse_scenario(text: &str, model_dir: Option<&Path>) -> Result<Scenario, FileError> {
    let raw: ScenarioRaw = toml::from_str(text)?;
    let model = if let Some(name) = raw.run.model.strip_prefix("builtin:") {
        parse_model(builtin_model(name)?)?
    } else {
        let p = Path::new(&raw.run.model);
        let path = match (p.is_absolute(), model_dir) {
            (false, Some(dir)) => dir.join(p),
            _ => p.to_path_buf(),
        };
        load_model(&path)?
    };
    build_scenario(raw, model)
}

/// Load a scenario file; relative model paths resolve against the
/// scenario file's directory.
pub fn load_scenario(path: &Path) -> Result<Scenario, FileError> {
    let text = std::fs::read_to_string(path).map_err(|source| FileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario(&text, path.parent())
}

fn build_scenario(raw: ScenarioRaw, model: DynamicModel<f64>) -> Result<Scenario, FileError> {
    let n = model.dof();
    let n_joints = n - 6;
    if raw.initial.joints.len() != n_joints {
        return Err(FileError::Invalid(format!(
            "initial.joints has {} entries, model has {n_joints} joints",
            raw.initial.joints.len()
        )));
    }
    if !raw.initial.zeta.is_empty() && raw.initial.zeta.len() != n {
        return Err(FileError::Invalid(format!(
            "initial.zeta must have {n} entries when given"
        )));
    }
    if raw.run.duration <= 0.0 || raw.run.time_step <= 0.0 {
        return Err(FileError::Invalid(
            "duration and time_step must be positive".into(),
        ));
    }
    if raw.run.log_decimation == 0 {
        return Err(FileError::Invalid("log_decimation must be >= 1".into()));
    }

    let initial = SystemState {
        config: Configuration::new(
            VehiclePose::new(vec3(&raw.initial.position), vec3(&raw.initial.attitude)),
            DVector::from_vec(raw.initial.joints.clone()),
        ),
        zeta: if raw.initial.zeta.is_empty() {
            DVector::zeros(n)
        } else {
            DVector::from_vec(raw.initial.zeta.clone())
        },
    };

    let normal = vec3(&raw.environment.normal);
    if normal.norm() < 1e-12 {
        return Err(FileError::Invalid("environment normal must be non-zero".into()));
    }
    if raw.environment.stiffness <= 0.0 {
        return Err(FileError::Invalid("stiffness must be positive".into()));
    }
    let anchor = match (raw.environment.anchor_at_initial_ee, raw.environment.anchor) {
        (true, None) => {
            let f = crate::kinematics::frames(&model.kinematics, &initial.config)
                .map_err(|e| FileError::Invalid(e.to_string()))?;
            let n = Unit::new_normalize(normal);
            f.ee_position + n.into_inner() * raw.environment.initial_penetration
        }
        (false, Some(a)) => vec3(&a),
        _ => {
            return Err(FileError::Invalid(
                "give exactly one of environment.anchor or anchor_at_initial_ee".into(),
            ))
        }
    };
    let plane = CompliantPlane {
        anchor,
        normal: Unit::new_normalize(normal),
        stiffness: Matrix3::from_diagonal_element(raw.environment.stiffness),
    };

    let force = match raw.force {
        ForceRaw::Constant { value } => ForceTrajectory::Constant(value),
        ForceRaw::Sinusoid {
            amplitude,
            angular_frequency,
            phase,
            offset,
        } => ForceTrajectory::Sinusoid {
            amplitude,
            angular_frequency,
            phase,
            offset,
        },
        ForceRaw::Ramp { start, rate } => ForceTrajectory::Ramp { start, rate },
    };

    let disturbance = match &raw.disturbance {
        Some(d) => DisturbanceSpec {
            amplitude: DVector::from_element(n, d.amplitude),
            angular_frequency: d.angular_frequency,
            phase: d.phase,
        },
        None => DisturbanceSpec::none(n),
    };

    let noise = match &raw.noise {
        Some(nr) => NoiseSpec {
            bound: nr.bound,
            seed: raw.seed,
            update_hz: nr.update_hz,
        },
        None => NoiseSpec::off(),
    };

    let c = &raw.controller;
    let dir = vec3(&c.force_direction);
    if dir.norm() < 1e-12 {
        return Err(FileError::Invalid("force_direction must be non-zero".into()));
    }
    let controller = PpcController {
        kinematics: model.kinematics.clone(),
        config: ControllerConfig {
            k_x: c.k_x,
            k_zeta: c.k_zeta,
            perf_x: (0..6)
                .map(|i| PerformanceFunction::new(c.rho0_x[i], c.rho_inf_x[i], c.decay_x))
                .collect(),
            perf_zeta: (0..n)
                .map(|j| {
                    PerformanceFunction::new(
                        c.rho0_zeta,
                        if j < 6 {
                            c.rho_inf_zeta_vehicle
                        } else {
                            c.rho_inf_zeta_joint
                        },
                        c.decay_zeta,
                    )
                })
                .collect(),
            torque_limit: c.torque_limit,
            secondary: None,
        },
        force_direction: Unit::new_normalize(dir),
        desired_orientation: vec3(&c.desired_orientation),
    };
    controller
        .validate()
        .map_err(|e| FileError::Invalid(e.to_string()))?;

    Ok(Scenario {
        name: raw.run.name,
        duration: raw.run.duration,
        time_step: raw.run.time_step,
        log_decimation: raw.run.log_decimation,
        seed: raw.seed,
        model,
        initial,
        plane,
        force,
        disturbance,
        noise,
        controller,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn builtin_model_parses_and_validates() {
        let model = parse_model(builtin_model(BUILTIN_MODEL_LBV150).unwrap()).unwrap();
        assert_eq!(model.dof(), 10);
        assert!(model.validate().is_ok());
        assert!(model.vehicle.mass > 0.0);
    }

    #[test]
    fn unknown_builtin_is_rejected() {
        assert!(matches!(
            builtin_model("no_such_model"),
            Err(FileError::UnknownBuiltin(_))
        ));
    }

    #[test]
    fn paper_scenario_file_round_trip() {
        let s = parse_scenario(include_str!("../assets/paper.toml"), None).unwrap();
        assert_eq!(s.model.dof(), 10);
        assert_relative_eq!(s.duration, 10.0);
        assert_relative_eq!(s.time_step, 1e-3);
        // The wall is pre-loaded: initial contact force equals the
        // initial desired force.
        let f = crate::kinematics::frames(&s.model.kinematics, &s.initial.config).unwrap();
        assert_relative_eq!(s.plane.penetration(&f.ee_position), 0.2, epsilon = 1e-12);
        assert_relative_eq!(s.plane.normal_force(&f.ee_position), 0.4, epsilon = 1e-12);
    }

    #[test]
    fn scenario_rejects_wrong_joint_count() {
        let text = include_str!("../assets/paper.toml").replace(
            "joints = [0.0, 0.3, -0.6, 0.3]",
            "joints = [0.0, 0.3]",
        );
        assert!(matches!(
            parse_scenario(&text, None),
            Err(FileError::Invalid(_))
        ));
    }

    #[test]
    fn scenario_rejects_unknown_keys() {
        let text = format!("{}\n[extra]\nfoo = 1\n", include_str!("../assets/paper.toml"));
        assert!(matches!(parse_scenario(&text, None), Err(FileError::Parse(_))));
    }

    #[test]
    fn model_rejects_bad_damping_length() {
        let text = builtin_model(BUILTIN_MODEL_LBV150)
            .unwrap()
            .replace("damping_linear = [", "damping_linear = [9.9, ");
        assert!(parse_model(&text).is_err());
    }
}
