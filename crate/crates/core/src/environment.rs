//! Compliant environment, exogenous signals, and the force sensor model.
//!
//! The environment is a linear-spring half-space. Measurement noise is
//! generated from a counter-based hash so a run is a pure function of
//! `(t, seed)`: replaying a scenario reproduces the noise bit for bit,
//! and the signal is piecewise-smooth (low-rate samples blended with a
//! smoothstep) rather than white, so it does not inject unbounded
//! derivative content into the control loop.

use nalgebra::{DVector, Matrix3, Unit, Vector3};

use crate::dynamics::Wrench;
use crate::Scalar;

/// Linear-spring half-space. Points with `(p - anchor) . normal < 0`
/// are inside the material; `normal` points out of the surface toward
/// free space.
#[derive(Debug, Clone)]
pub struct CompliantPlane<T: Scalar> {
    pub anchor: Vector3<T>,
    pub normal: Unit<Vector3<T>>,
    /// Contact stiffness matrix `K_f`.
    pub stiffness: Matrix3<T>,
}

impl<T: Scalar> CompliantPlane<T> {
    /// Penetration depth of a point into the half-space (0 when free).
    pub fn penetration(&self, point: &Vector3<T>) -> T {
        let d = (self.anchor - point).dot(&self.normal);
        d.max(T::zero())
    }

    /// Wrench the environment exerts on the end-effector: the spring
    /// pushes the tool back out along the surface normal.
    pub fn wrench_on_effector(&self, point: &Vector3<T>) -> Wrench<T> {
        let d = self.penetration(point);
        Wrench {
            force: self.stiffness * (self.normal.into_inner() * d),
            torque: Vector3::zeros(),
        }
    }

    /// Force the end-effector exerts on the environment (the reaction
    /// of [`Self::wrench_on_effector`]).
    pub fn force_on_environment(&self, point: &Vector3<T>) -> Vector3<T> {
        -self.wrench_on_effector(point).force
    }

    /// Scalar contact force pressed into the surface (non-negative in
    /// contact, zero otherwise).
    pub fn normal_force(&self, point: &Vector3<T>) -> T {
        -self.force_on_environment(point).dot(&self.normal)
    }
}

/// Desired contact-force profile `f^d(t)`.
#[derive(Debug, Clone)]
pub enum ForceTrajectory<T: Scalar> {
    Constant(T),
    /// `offset + amplitude * sin(angular_frequency * t + phase)`.
    Sinusoid {
        amplitude: T,
        angular_frequency: T,
        phase: T,
        offset: T,
    },
    /// `start + rate * t`, clamped below at zero.
    Ramp { start: T, rate: T },
}

impl<T: Scalar> ForceTrajectory<T> {
    pub fn desired_force(&self, t: T) -> T {
        match *self {
            ForceTrajectory::Constant(f) => f,
            ForceTrajectory::Sinusoid {
                amplitude,
                angular_frequency,
                phase,
                offset,
            } => offset + amplitude * (angular_frequency * t + phase).sin(),
            ForceTrajectory::Ramp { start, rate } => (start + rate * t).max(T::zero()),
        }
    }
}

/// Sinusoidal generalized disturbance, one amplitude per `zeta`
/// coordinate.
#[derive(Debug, Clone)]
pub struct DisturbanceSpec<T: Scalar> {
    pub amplitude: DVector<T>,
    pub angular_frequency: T,
    pub phase: T,
}

impl<T: Scalar> DisturbanceSpec<T> {
    pub fn none(n: usize) -> Self {
        Self {
            amplitude: DVector::zeros(n),
            angular_frequency: T::zero(),
            phase: T::zero(),
        }
    }

    /// Disturbance vector at time `t`.
    pub fn disturbance(&self, t: T) -> DVector<T> {
        let s = (self.angular_frequency * t + self.phase).sin();
        &self.amplitude * s
    }
}

/// Bounded smooth measurement noise, reproducible from the seed alone.
#[derive(Debug, Clone)]
pub struct NoiseSpec<T: Scalar> {
    /// Noise stays in `[-bound, bound]`.
    pub bound: T,
    pub seed: u64,
    /// Rate at which fresh random samples are drawn; the signal is
    /// smoothly interpolated between them.
    pub update_hz: f64,
}

impl<T: Scalar> NoiseSpec<T> {
    pub fn off() -> Self {
        Self {
            bound: T::zero(),
            seed: 0,
            update_hz: 10.0,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform sample in `[-1, 1)` for a (seed, sample index, channel)
/// triple.
fn unit_sample(seed: u64, index: u64, channel: u64) -> f64 {
    let h = splitmix64(splitmix64(splitmix64(seed) ^ index) ^ channel.wrapping_mul(0x9E37));
    ((h >> 11) as f64) / (1u64 << 52) as f64 - 1.0
}

/// Smooth bounded noise value for one channel at time `t`.
///
/// Samples are drawn at `update_hz` and joined with a smoothstep, so
/// the result is C^1 in `t`, stays within `[-bound, bound]`, and is a
/// pure function of `(t, seed, channel)`.
pub fn smooth_noise<T: Scalar>(spec: &NoiseSpec<T>, channel: u64, t: T) -> T {
    if spec.bound == T::zero() {
        return T::zero();
    }
    let tf = t.to_f64().unwrap_or(0.0).max(0.0);
    let pos = tf * spec.update_hz;
    let idx = pos.floor();
    let u = pos - idx;
    let a = unit_sample(spec.seed, idx as u64, channel);
    let b = unit_sample(spec.seed, idx as u64 + 1, channel);
    let s = u * u * (3.0 - 2.0 * u);
    spec.bound * T::from_f64c(a + (b - a) * s)
}

/// Force sensor model: true scalar contact force plus smooth bounded
/// noise on channel 0.
pub fn measure_force<T: Scalar>(true_force: T, noise: &NoiseSpec<T>, t: T) -> T {
    true_force + smooth_noise(noise, 0, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Vector3;
    use std::f64::consts::PI;

    fn wall() -> CompliantPlane<f64> {
        // Wall filling x > 1, normal toward the robot on the -x side.
        CompliantPlane {
            anchor: Vector3::new(1.0, 0.0, 0.0),
            normal: Unit::new_normalize(Vector3::new(-1.0, 0.0, 0.0)),
            stiffness: Matrix3::from_diagonal_element(2.0),
        }
    }

    #[test]
    fn no_force_outside_material() {
        let w = wall();
        let p = Vector3::new(0.9, 0.3, -0.2);
        assert_eq!(w.penetration(&p), 0.0);
        assert_eq!(w.wrench_on_effector(&p).force, Vector3::zeros());
        assert_eq!(w.normal_force(&p), 0.0);
    }

    #[test]
    fn spring_force_proportional_to_penetration() {
        let w = wall();
        let p = Vector3::new(1.05, 0.0, 0.0);
        assert_relative_eq!(w.penetration(&p), 0.05, epsilon = 1e-15);
        // K d = 2 * 0.05 = 0.1 N pushing the tool back out (-x).
        let on_ee = w.wrench_on_effector(&p);
        assert_relative_eq!(on_ee.force[0], -0.1, epsilon = 1e-15);
        assert_relative_eq!(on_ee.torque.norm(), 0.0, epsilon = 1e-15);
        // Reaction presses into the wall with the same magnitude.
        assert_relative_eq!(w.force_on_environment(&p)[0], 0.1, epsilon = 1e-15);
        assert_relative_eq!(w.normal_force(&p), 0.1, epsilon = 1e-15);
    }

    #[test]
    fn desired_force_sinusoid_values() {
        // f^d(t) = 0.4 sin(pi t) + 0.4.
        let traj = ForceTrajectory::Sinusoid {
            amplitude: 0.4,
            angular_frequency: PI,
            phase: 0.0,
            offset: 0.4,
        };
        assert_relative_eq!(traj.desired_force(0.0), 0.4, epsilon = 1e-12);
        assert_relative_eq!(traj.desired_force(0.5), 0.8, epsilon = 1e-12);
        assert_relative_eq!(traj.desired_force(1.5), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn ramp_clamps_at_zero() {
        let traj = ForceTrajectory::Ramp {
            start: 1.0,
            rate: -1.0,
        };
        assert_relative_eq!(traj.desired_force(0.5), 0.5, epsilon = 1e-15);
        assert_eq!(traj.desired_force(2.0), 0.0);
    }

    #[test]
    fn disturbance_sinusoid_values() {
        // delta(t) = 0.15 sin(2 pi t / 7) on every channel.
        let spec = DisturbanceSpec {
            amplitude: DVector::from_element(10, 0.15),
            angular_frequency: 2.0 * PI / 7.0,
            phase: 0.0,
        };
        assert_relative_eq!(spec.disturbance(0.0).norm(), 0.0, epsilon = 1e-12);
        assert_relative_eq!(spec.disturbance(7.0 / 4.0)[0], 0.15, epsilon = 1e-12);
        assert_relative_eq!(spec.disturbance(7.0 / 2.0)[3], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn noise_is_bounded_and_deterministic() {
        let spec = NoiseSpec {
            bound: 0.02,
            seed: 42,
            update_hz: 10.0,
        };
        for k in 0..5000 {
            let t = k as f64 * 1e-3;
            let v: f64 = smooth_noise(&spec, 0, t);
            assert!(v.abs() <= 0.02 + 1e-15, "noise {v} exceeds bound at t={t}");
            assert_eq!(v, smooth_noise(&spec, 0, t), "replay mismatch");
        }
    }

    #[test]
    fn noise_is_slew_limited() {
        // At 10 Hz updates the worst-case slope is bounded by
        // 1.5 * range * rate; check on a 1 kHz grid.
        let spec = NoiseSpec {
            bound: 0.02,
            seed: 7,
            update_hz: 10.0,
        };
        let max_slope = 1.5 * 2.0 * 0.02 * 10.0;
        let mut prev: f64 = smooth_noise(&spec, 0, 0.0);
        for k in 1..10_000 {
            let t = k as f64 * 1e-3;
            let v = smooth_noise(&spec, 0, t);
            assert!(
                ((v - prev) / 1e-3).abs() <= max_slope + 1e-9,
                "slope too steep at t={t}"
            );
            prev = v;
        }
    }

    #[test]
    fn noise_channels_and_seeds_differ() {
        let spec = NoiseSpec {
            bound: 1.0,
            seed: 1,
            update_hz: 10.0,
        };
        let other = NoiseSpec { seed: 2, ..spec.clone() };
        let t = 0.33;
        assert_ne!(smooth_noise(&spec, 0, t), smooth_noise(&spec, 1, t));
        assert_ne!(smooth_noise(&spec, 0, t), smooth_noise(&other, 0, t));
    }

    #[test]
    fn measure_force_adds_noise_within_band() {
        let spec = NoiseSpec {
            bound: 0.01,
            seed: 9,
            update_hz: 10.0,
        };
        let m = measure_force(1.0, &spec, 0.42);
        assert!((m - 1.0f64).abs() <= 0.01 + 1e-15);
        assert_eq!(measure_force(1.0, &NoiseSpec::off(), 0.42), 1.0);
    }
}
