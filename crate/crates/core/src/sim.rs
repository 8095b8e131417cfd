//! Closed-loop simulation harness: scenario description, fixed-step
//! run loop, and the CSV log format.
//!
//! A run is fully determined by the scenario and its seed: noise is a
//! pure function of `(t, seed)`, so repeating a run reproduces the log
//! byte for byte.

use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::{DVector, Vector3, Vector6};
use thiserror::Error;

use crate::dynamics::{
    rk4_step, DynamicModel, DynamicsError, ExternalLoad, SystemState, Wrench,
};
use crate::environment::{
    measure_force, CompliantPlane, DisturbanceSpec, ForceTrajectory, NoiseSpec,
};
use crate::kinematics::frames;
use crate::ppc::{ControlError, PpcController};
use crate::Real;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("log I/O failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed log: {0}")]
    Format(String),
}

/// Everything needed to reproduce one closed-loop run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub duration: Real,
    pub time_step: Real,
    /// Keep every k-th control step in the log.
    pub log_decimation: usize,
    pub seed: u64,
    pub model: DynamicModel<Real>,
    pub initial: SystemState<Real>,
    pub plane: CompliantPlane<Real>,
    pub force: ForceTrajectory<Real>,
    pub disturbance: DisturbanceSpec<Real>,
    pub noise: NoiseSpec<Real>,
    pub controller: PpcController<Real>,
}

impl Scenario {
    /// Replace the seed, keeping noise tied to it.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.noise.seed = seed;
        self
    }

    pub fn with_duration(mut self, duration: Real) -> Self {
        self.duration = duration;
        self
    }
}

/// One logged control step.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub t: Real,
    /// Generalized coordinates `[position; attitude; joint angles]`.
    pub q: DVector<Real>,
    pub zeta: DVector<Real>,
    pub tau: DVector<Real>,
    /// True scalar contact force on the environment.
    pub f_true: Real,
    pub f_meas: Real,
    pub f_des: Real,
    pub e_x: Vector6<Real>,
    pub rho_x: Vector6<Real>,
    pub e_zeta: DVector<Real>,
    pub rho_zeta: DVector<Real>,
}

/// Time-series log of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimLog {
    /// Degrees of freedom of the logged system.
    pub dof: usize,
    pub records: Vec<Record>,
}

fn config_vector(state: &SystemState<Real>) -> DVector<Real> {
    let n = state.config.dof();
    let mut q = DVector::zeros(n);
    for i in 0..3 {
        q[i] = state.config.vehicle.position[i];
        q[3 + i] = state.config.vehicle.attitude[i];
    }
    for k in 0..n - 6 {
        q[6 + k] = state.config.joints[k];
    }
    q
}

fn ee_position(
    model: &DynamicModel<Real>,
    state: &SystemState<Real>,
) -> Result<Vector3<Real>, SimError> {
    let f = frames(&model.kinematics, &state.config).map_err(ControlError::from)?;
    Ok(f.ee_position)
}

/// Run a scenario to completion. The control law executes at every
/// integration step with its torque held over the step; contact and
/// disturbance are evaluated at every integrator stage.
pub fn run_scenario(scenario: &Scenario) -> Result<SimLog, SimError> {
    let n = scenario.model.dof();
    let mut state = scenario.initial.clone();
    let steps = (scenario.duration / scenario.time_step).round() as usize;
    let mut records = Vec::with_capacity(steps / scenario.log_decimation + 2);

    let external = |s: &SystemState<Real>, t: Real| {
        let contact = match frames(&scenario.model.kinematics, &s.config) {
            Ok(f) => Wrench {
                force: scenario.plane.force_on_environment(&f.ee_position),
                torque: Vector3::zeros(),
            },
            // A singular configuration fails in the dynamics evaluation
            // itself; report no contact here.
            Err(_) => Wrench::zero(),
        };
        ExternalLoad {
            contact,
            disturbance: scenario.disturbance.disturbance(t),
        }
    };

    for k in 0..=steps {
        let t = k as Real * scenario.time_step;
        let p = ee_position(&scenario.model, &state)?;
        let f_true = scenario.plane.normal_force(&p);
        let f_meas = measure_force(f_true, &scenario.noise, t);
        let f_des = scenario.force.desired_force(t);
        let (tau, diag) =
            scenario
                .controller
                .control_step(&state.config, &state.zeta, f_meas, f_des, t)?;

        if k % scenario.log_decimation == 0 || k == steps {
            records.push(Record {
                t,
                q: config_vector(&state),
                zeta: state.zeta.clone(),
                tau: tau.clone(),
                f_true,
                f_meas,
                f_des,
                e_x: diag.e_x,
                rho_x: diag.rho_x,
                e_zeta: diag.e_zeta.clone(),
                rho_zeta: diag.rho_zeta.clone(),
            });
        }
        if k == steps {
            break;
        }
        state = rk4_step(
            &scenario.model,
            &state,
            t,
            scenario.time_step,
            &tau,
            &external,
        )?;
    }
    Ok(SimLog { dof: n, records })
}

/// Source text of the bundled reference scenario, for emitting a
/// starting point that users can edit.
pub const PAPER_SCENARIO_TOML: &str = include_str!("../assets/paper.toml");

/// The bundled reference scenario (compliant-wall force tracking).
pub fn paper_scenario() -> Scenario {
    crate::model_file::parse_scenario(PAPER_SCENARIO_TOML, None).expect("bundled scenario is valid")
}

// ---------------------------------------------------------------------------
// CSV log format
// ---------------------------------------------------------------------------

fn header(n: usize) -> String {
    let mut cols = vec!["t".to_string()];
    let series = |name: &str, count: usize| -> Vec<String> {
        (1..=count).map(|i| format!("{name}{i}")).collect()
    };
    cols.extend(series("q", n));
    cols.extend(series("zeta", n));
    cols.extend(series("tau", n));
    cols.extend(["f_true".into(), "f_meas".into(), "f_des".into()]);
    cols.extend(series("e_x", 6));
    cols.extend(series("rho_x", 6));
    cols.extend(series("e_zeta", n));
    cols.extend(series("rho_zeta", n));
    cols.join(",")
}

impl SimLog {
    /// Columns per row for a given `dof`.
    fn width(n: usize) -> usize {
        16 + 5 * n
    }

    /// Write the log as CSV: header row, UTF-8, LF line endings, floats
    /// with 17 significant digits (lossless for `f64`).
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", header(self.dof))?;
        let mut row: Vec<String> = Vec::with_capacity(Self::width(self.dof));
        for r in &self.records {
            row.clear();
            row.push(format!("{:.16e}", r.t));
            for v in r
                .q
                .iter()
                .chain(r.zeta.iter())
                .chain(r.tau.iter())
                .chain([r.f_true, r.f_meas, r.f_des].iter())
                .chain(r.e_x.iter())
                .chain(r.rho_x.iter())
                .chain(r.e_zeta.iter())
                .chain(r.rho_zeta.iter())
            {
                row.push(format!("{v:.16e}"));
            }
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> std::io::Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    /// Parse a log written by [`Self::write_csv`].
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self, SimError> {
        let mut lines = r.lines();
        let head = lines
            .next()
            .ok_or_else(|| SimError::Format("empty file".into()))??;
        let cols = head.trim_end().split(',').count();
        if cols < Self::width(6) || (cols - 16) % 5 != 0 {
            return Err(SimError::Format(format!("unexpected column count {cols}")));
        }
        let n = (cols - 16) / 5;
        if head.trim_end() != header(n) {
            return Err(SimError::Format("header does not match schema".into()));
        }
        let mut records = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let vals: Vec<Real> = line
                .trim_end()
                .split(',')
                .map(|s| {
                    s.parse::<Real>().map_err(|e| {
                        SimError::Format(format!("row {}: bad float '{s}': {e}", lineno + 2))
                    })
                })
                .collect::<Result<_, _>>()?;
            if vals.len() != Self::width(n) {
                return Err(SimError::Format(format!(
                    "row {}: expected {} columns, got {}",
                    lineno + 2,
                    Self::width(n),
                    vals.len()
                )));
            }
            let mut it = vals.into_iter();
            let mut take = |k: usize| -> DVector<Real> {
                DVector::from_iterator(k, it.by_ref().take(k))
            };
            let t = take(1)[0];
            let q = take(n);
            let zeta = take(n);
            let tau = take(n);
            let fs = take(3);
            let e_x = Vector6::from_iterator(take(6).iter().copied());
            let rho_x = Vector6::from_iterator(take(6).iter().copied());
            let e_zeta = take(n);
            let rho_zeta = take(n);
            records.push(Record {
                t,
                q,
                zeta,
                tau,
                f_true: fs[0],
                f_meas: fs[1],
                f_des: fs[2],
                e_x,
                rho_x,
                e_zeta,
                rho_zeta,
            });
        }
        Ok(SimLog { dof: n, records })
    }

    pub fn load_csv(path: &Path) -> Result<Self, SimError> {
        let f = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn short_run(seed: u64) -> SimLog {
        let s = paper_scenario().with_seed(seed).with_duration(0.5);
        run_scenario(&s).unwrap()
    }

    #[test]
    fn paper_scenario_starts_pressed_with_set_errors() {
        let log = short_run(1);
        let first = &log.records[0];
        assert_relative_eq!(first.f_true, 0.4, epsilon = 1e-12);
        assert_relative_eq!(first.f_des, 0.4, epsilon = 1e-12);
        // Orientation error channels start at (0.2, 0.2, -0.2).
        assert_relative_eq!(first.e_x[3], 0.2, epsilon = 1e-9);
        assert_relative_eq!(first.e_x[4], 0.2, epsilon = 1e-9);
        assert_relative_eq!(first.e_x[5], -0.2, epsilon = 1e-9);
    }

    #[test]
    fn run_length_and_decimation() {
        let mut s = paper_scenario().with_seed(1).with_duration(0.2);
        s.log_decimation = 10;
        let log = run_scenario(&s).unwrap();
        // 200 steps, every 10th plus the final state.
        assert_eq!(log.records.len(), 21);
        assert_relative_eq!(log.records.last().unwrap().t, 0.2, epsilon = 1e-12);
        for r in &log.records {
            assert!(r.q.iter().all(|v| v.is_finite()));
            assert!(r.f_true >= 0.0);
        }
    }

    #[test]
    fn decimation_only_thins_the_log() {
        let full = run_scenario(&paper_scenario().with_seed(1).with_duration(0.2)).unwrap();
        let mut s = paper_scenario().with_seed(1).with_duration(0.2);
        s.log_decimation = 10;
        let thin = run_scenario(&s).unwrap();
        for (i, r) in thin.records.iter().enumerate().take(thin.records.len() - 1) {
            assert_eq!(r, &full.records[i * 10]);
        }
        assert_eq!(thin.records.last(), full.records.last());
    }

    #[test]
    fn envelopes_contain_errors_during_run() {
        let log = short_run(3);
        for r in &log.records {
            for i in 0..6 {
                assert!(r.e_x[i].abs() < r.rho_x[i], "task funnel left at t={}", r.t);
            }
            for j in 0..log.dof {
                assert!(
                    r.e_zeta[j].abs() < r.rho_zeta[j],
                    "velocity funnel left at t={}",
                    r.t
                );
            }
        }
    }

    #[test]
    fn same_seed_reproduces_bytes_different_seed_does_not() {
        let mut a = Vec::new();
        short_run(7).write_csv(&mut a).unwrap();
        let mut b = Vec::new();
        short_run(7).write_csv(&mut b).unwrap();
        assert_eq!(a, b);
        let mut c = Vec::new();
        short_run(8).write_csv(&mut c).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let log = short_run(5);
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(!text.contains('\r'), "LF line endings only");
        let back = SimLog::read_csv(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(log, back);
    }

    #[test]
    fn read_csv_rejects_malformed_input() {
        assert!(matches!(
            SimLog::read_csv(std::io::Cursor::new(b"a,b,c\n1,2,3\n".to_vec())),
            Err(SimError::Format(_))
        ));
        let log = short_run(2);
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let mut text = String::from_utf8(buf).unwrap();
        text.push_str("1.0,2.0\n");
        assert!(matches!(
            SimLog::read_csv(std::io::Cursor::new(text.into_bytes())),
            Err(SimError::Format(_))
        ));
    }
}
