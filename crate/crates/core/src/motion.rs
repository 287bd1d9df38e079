//! Trajectory and motion types, interpolation and uniform resampling.
//!
//! Timestamps are seconds. Loaders shift them so the earliest sample of a
//! motion sits at `t = 0`; nothing in this module re-bases time on its own.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::geometry::{Pose, UnitQuaternion, Vec3};
use crate::scalar::Real;
use crate::urdf::RobotModel;

/// Upper bound on the number of samples a resampling call may produce.
pub const MAX_RESAMPLED_SAMPLES: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MotionError {
    #[error("time {t} outside trajectory span [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },
    #[error("invalid resampling rate {0}")]
    InvalidRate(f64),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("{0}")]
    Shape(String),
    #[error("timestamps not strictly increasing at index {index}")]
    NonMonotoneTime { index: usize },
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
}

/// Common behaviour of timestamped sample sequences.
pub trait Trajectory<T: Real>: Sized {
    type Sample: Clone;

    fn timestamps(&self) -> &[T];
    fn sample(&self, index: usize) -> Self::Sample;
    /// Interpolates between two samples, `s` in `[0, 1]`.
    fn blend(a: &Self::Sample, b: &Self::Sample, s: T) -> Self::Sample;
    /// Builds a trajectory of the same kind (same joint names, etc.) from new samples.
    fn rebuild(&self, timestamps: Vec<T>, samples: Vec<Self::Sample>) -> Self;

    fn len(&self) -> usize {
        self.timestamps().len()
    }

    fn is_empty(&self) -> bool {
        self.timestamps().is_empty()
    }

    /// Last timestamp minus first; 0 for a single sample.
    fn duration(&self) -> T {
        let ts = self.timestamps();
        match (ts.first(), ts.last()) {
            (Some(a), Some(b)) => *b - *a,
            _ => T::zero(),
        }
    }

    fn start_time(&self) -> T {
        self.timestamps()[0]
    }

    fn end_time(&self) -> T {
        *self.timestamps().last().expect("non-empty trajectory")
    }

    /// Mean sampling rate in Hz, `None` for fewer than two samples.
    fn mean_rate(&self) -> Option<T> {
        let d = self.duration();
        (self.len() >= 2 && d > T::zero()).then(|| T::from_usize_lossy(self.len() - 1) / d)
    }

    /// Value at time `t`: exact samples are returned verbatim, everything
    /// else is interpolated between the bracketing samples.
    fn interpolate_at(&self, t: T) -> Result<Self::Sample, MotionError> {
        match locate(self.timestamps(), t)? {
            Located::Exact(i) => Ok(self.sample(i)),
            Located::Between(i, s) => Ok(Self::blend(&self.sample(i), &self.sample(i + 1), s)),
        }
    }

    /// Resamples onto `first + k / rate`, always ending with a sample at the
    /// original last timestamp.
    fn resample_uniform(&self, rate: T) -> Result<Self, MotionError> {
        if !(rate > T::zero() && rate.is_finite()) {
            return Err(MotionError::InvalidRate(rate.as_f64()));
        }
        if self.len() < 2 {
            return Err(MotionError::TooFewSamples {
                needed: 2,
                got: self.len(),
            });
        }
        let grid = uniform_grid(self.start_time(), self.end_time(), rate)?;
        let samples = grid
            .iter()
            .map(|t| self.interpolate_at(*t))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.rebuild(grid, samples))
    }
}

/// Position of a query time relative to a sorted timestamp list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Located<T> {
    Exact(usize),
    /// Strictly between `i` and `i + 1`, with blend fraction.
    Between(usize, T),
}

/// Finds `t` in strictly increasing `timestamps`.
pub fn locate<T: Real>(timestamps: &[T], t: T) -> Result<Located<T>, MotionError> {
    let (Some(&first), Some(&last)) = (timestamps.first(), timestamps.last()) else {
        return Err(MotionError::TooFewSamples { needed: 1, got: 0 });
    };
    let eps = T::time_eps();
    if !t.is_finite() || t < first - eps || t > last + eps {
        return Err(MotionError::OutOfRange {
            t: t.as_f64(),
            start: first.as_f64(),
            end: last.as_f64(),
        });
    }
    if t <= first {
        return Ok(Located::Exact(0));
    }
    if t >= last {
        return Ok(Located::Exact(timestamps.len() - 1));
    }
    // first index with timestamp > t; t lies in [i - 1, i)
    let upper = timestamps.partition_point(|x| *x <= t);
    let i = upper - 1;
    if timestamps[i] == t {
        return Ok(Located::Exact(i));
    }
    let s = (t - timestamps[i]) / (timestamps[i + 1] - timestamps[i]);
    Ok(Located::Between(i, s))
}

/// Grid `first + k / rate` (k = 0, 1, ...) strictly below `last`, then `last`.
pub fn uniform_grid<T: Real>(first: T, last: T, rate: T) -> Result<Vec<T>, MotionError> {
    if !(rate > T::zero() && rate.is_finite()) {
        return Err(MotionError::InvalidRate(rate.as_f64()));
    }
    let expected = ((last - first) * rate).to_f64().unwrap_or(f64::INFINITY);
    if !(expected < MAX_RESAMPLED_SAMPLES as f64) {
        return Err(MotionError::InvalidRate(rate.as_f64()));
    }
    let eps = T::time_eps();
    let mut grid = Vec::with_capacity(expected as usize + 2);
    for k in 0usize.. {
        let t = first + T::from_usize_lossy(k) / rate;
        if t >= last - eps {
            break;
        }
        grid.push(t);
    }
    grid.push(last);
    Ok(grid)
}

/// Checks strict monotonicity and finiteness of a timestamp list.
fn check_timestamps<T: Real>(timestamps: &[T]) -> Result<(), MotionError> {
    for (i, t) in timestamps.iter().enumerate() {
        if !t.is_finite() {
            return Err(MotionError::NonFinite { index: i });
        }
        if i > 0 && *t <= timestamps[i - 1] {
            return Err(MotionError::NonMonotoneTime { index: i });
        }
    }
    Ok(())
}

/// Timestamped joint configurations of an n-joint robot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointTrajectory<T> {
    joint_names: Vec<String>,
    timestamps: Vec<T>,
    configurations: Vec<Vec<T>>,
}

impl<T: Real> JointTrajectory<T> {
    /// Builds a trajectory, enforcing every structural invariant.
    pub fn new(
        joint_names: Vec<String>,
        timestamps: Vec<T>,
        configurations: Vec<Vec<T>>,
    ) -> Result<Self, MotionError> {
        let traj = Self::new_unchecked(joint_names, timestamps, configurations)?;
        check_timestamps(&traj.timestamps)?;
        if let Some(i) = traj
            .configurations
            .iter()
            .position(|q| q.iter().any(|v| !v.is_finite()))
        {
            return Err(MotionError::NonFinite { index: i });
        }
        Ok(traj)
    }

    /// Checks shape only (lengths and row widths). Time ordering and
    /// finiteness are left to [`validate`], which reports them as diagnostics.
    pub fn new_unchecked(
        joint_names: Vec<String>,
        timestamps: Vec<T>,
        configurations: Vec<Vec<T>>,
    ) -> Result<Self, MotionError> {
        if timestamps.is_empty() {
            return Err(MotionError::TooFewSamples { needed: 1, got: 0 });
        }
        if timestamps.len() != configurations.len() {
            return Err(MotionError::Shape(format!(
                "{} timestamps but {} configurations",
                timestamps.len(),
                configurations.len()
            )));
        }
        let n = joint_names.len();
        if let Some((i, q)) = configurations.iter().enumerate().find(|(_, q)| q.len() != n) {
            return Err(MotionError::Shape(format!(
                "configuration {i} has {} values, expected {n}",
                q.len()
            )));
        }
        Ok(JointTrajectory {
            joint_names,
            timestamps,
            configurations,
        })
    }

    pub fn joint_names(&self) -> &[String] {
        &self.joint_names
    }

    pub fn dof(&self) -> usize {
        self.joint_names.len()
    }

    pub fn configurations(&self) -> &[Vec<T>] {
        &self.configurations
    }

    pub fn configuration(&self, i: usize) -> &[T] {
        &self.configurations[i]
    }

    /// Values of one joint over time.
    pub fn joint_values(&self, joint: usize) -> Vec<T> {
        self.configurations.iter().map(|q| q[joint]).collect()
    }

    /// Same samples with every timestamp shifted by `-offset`.
    pub fn shifted(&self, offset: T) -> Self {
        JointTrajectory {
            joint_names: self.joint_names.clone(),
            timestamps: self.timestamps.iter().map(|t| *t - offset).collect(),
            configurations: self.configurations.clone(),
        }
    }
}

impl<T: Real> Trajectory<T> for JointTrajectory<T> {
    type Sample = Vec<T>;

    fn timestamps(&self) -> &[T] {
        &self.timestamps
    }

    fn sample(&self, index: usize) -> Vec<T> {
        self.configurations[index].clone()
    }

    fn blend(a: &Vec<T>, b: &Vec<T>, s: T) -> Vec<T> {
        a.iter().zip(b).map(|(x, y)| *x + (*y - *x) * s).collect()
    }

    fn rebuild(&self, timestamps: Vec<T>, samples: Vec<Vec<T>>) -> Self {
        JointTrajectory {
            joint_names: self.joint_names.clone(),
            timestamps,
            configurations: samples,
        }
    }
}

/// Timestamped rigid poses (world frame).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real + Serialize"))]
pub struct PoseTrajectory<T> {
    timestamps: Vec<T>,
    poses: Vec<Pose<T>>,
}

impl<T: Real> PoseTrajectory<T> {
    pub fn new(timestamps: Vec<T>, poses: Vec<Pose<T>>) -> Result<Self, MotionError> {
        let traj = Self::new_unchecked(timestamps, poses)?;
        check_timestamps(&traj.timestamps)?;
        if let Some(i) = traj.poses.iter().position(|p| !p.position.is_finite()) {
            return Err(MotionError::NonFinite { index: i });
        }
        Ok(traj)
    }

    pub fn new_unchecked(timestamps: Vec<T>, poses: Vec<Pose<T>>) -> Result<Self, MotionError> {
        if timestamps.is_empty() {
            return Err(MotionError::TooFewSamples { needed: 1, got: 0 });
        }
        if timestamps.len() != poses.len() {
            return Err(MotionError::Shape(format!(
                "{} timestamps but {} poses",
                timestamps.len(),
                poses.len()
            )));
        }
        Ok(PoseTrajectory { timestamps, poses })
    }

    /// Single static pose at `t = 0`.
    pub fn constant(pose: Pose<T>) -> Self {
        PoseTrajectory {
            timestamps: vec![T::zero()],
            poses: vec![pose],
        }
    }

    pub fn poses(&self) -> &[Pose<T>] {
        &self.poses
    }

    pub fn positions(&self) -> Vec<Vec3<T>> {
        self.poses.iter().map(|p| p.position).collect()
    }

    pub fn orientations(&self) -> Vec<UnitQuaternion<T>> {
        self.poses.iter().map(|p| p.orientation).collect()
    }

    pub fn shifted(&self, offset: T) -> Self {
        PoseTrajectory {
            timestamps: self.timestamps.iter().map(|t| *t - offset).collect(),
            poses: self.poses.clone(),
        }
    }
}

impl<T: Real> Trajectory<T> for PoseTrajectory<T> {
    type Sample = Pose<T>;

    fn timestamps(&self) -> &[T] {
        &self.timestamps
    }

    fn sample(&self, index: usize) -> Pose<T> {
        self.poses[index]
    }

    fn blend(a: &Pose<T>, b: &Pose<T>, s: T) -> Pose<T> {
        Pose::new(
            a.position.lerp(&b.position, s),
            a.orientation.slerp(&b.orientation, s),
        )
    }

    fn rebuild(&self, timestamps: Vec<T>, samples: Vec<Pose<T>>) -> Self {
        PoseTrajectory {
            timestamps,
            poses: samples,
        }
    }
}

/// One recorded robot motion plus the tracks of objects it interacts with.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real + Serialize"))]
pub struct Motion<T> {
    pub id: String,
    pub name: String,
    /// Identifier of the robot model the joints refer to.
    pub robot_ref: String,
    /// Link whose Cartesian path is the main comparison subject.
    pub ee_link: String,
    pub joints: JointTrajectory<T>,
    /// Manipulated objects, operator hand, etc., all in the world frame.
    pub object_tracks: BTreeMap<String, PoseTrajectory<T>>,
}

impl<T: Real> Motion<T> {
    pub fn duration(&self) -> T {
        self.joints.duration()
    }
}

/// Problems found by [`validate`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum Diagnostic {
    /// `index` is the first sample whose timestamp is not above its predecessor.
    NonMonotoneTime { track: String, index: usize },
    NonFinite { track: String, index: usize },
    JointCountMismatch { expected: usize, found: usize },
    UnknownJoint { name: String },
    UnknownEeLink { link: String },
}

/// Name used for the joint trajectory in diagnostics.
pub const JOINTS_TRACK: &str = "joints";

fn time_diagnostics<T: Real>(track: &str, ts: &[T], out: &mut Vec<Diagnostic>) {
    for i in 1..ts.len() {
        if ts[i] <= ts[i - 1] {
            out.push(Diagnostic::NonMonotoneTime {
                track: track.to_owned(),
                index: i,
            });
        }
    }
}

/// Structured check of a motion against its robot. An empty list means valid.
pub fn validate<T: Real>(motion: &Motion<T>, model: &RobotModel<T>) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let joints = &motion.joints;
    time_diagnostics(JOINTS_TRACK, joints.timestamps(), &mut out);
    for (i, (t, q)) in joints
        .timestamps()
        .iter()
        .zip(joints.configurations())
        .enumerate()
    {
        if !t.is_finite() || q.iter().any(|v| !v.is_finite()) {
            out.push(Diagnostic::NonFinite {
                track: JOINTS_TRACK.to_owned(),
                index: i,
            });
        }
    }

    let actuated = model.actuated_joint_names();
    if joints.dof() != actuated.len() {
        out.push(Diagnostic::JointCountMismatch {
            expected: actuated.len(),
            found: joints.dof(),
        });
    }
    for name in joints.joint_names() {
        if !actuated.iter().any(|a| a == name) {
            out.push(Diagnostic::UnknownJoint { name: name.clone() });
        }
    }
    if model.link_index(&motion.ee_link).is_none() {
        out.push(Diagnostic::UnknownEeLink {
            link: motion.ee_link.clone(),
        });
    }

    for (name, track) in &motion.object_tracks {
        time_diagnostics(name, track.timestamps(), &mut out);
        for (i, (t, p)) in track.timestamps().iter().zip(track.poses()).enumerate() {
            if !t.is_finite() || !p.position.is_finite() {
                out.push(Diagnostic::NonFinite {
                    track: name.clone(),
                    index: i,
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(ts: &[f64], vals: &[f64]) -> JointTrajectory<f64> {
        JointTrajectory::new(
            vec!["j1".into()],
            ts.to_vec(),
            vals.iter().map(|v| vec![*v]).collect(),
        )
        .unwrap()
    }

    #[test]
    fn duration_examples() {
        assert_eq!(ramp(&[0.0, 0.5, 1.0], &[0.0; 3]).duration(), 1.0);
        assert_eq!(ramp(&[2.0], &[0.0]).duration(), 0.0);
        assert_eq!(ramp(&[1.0, 3.5], &[0.0; 2]).duration(), 2.5);
    }

    #[test]
    fn interpolate_midpoint_and_exact() {
        let t = ramp(&[0.0, 1.0], &[0.0, 2.0]);
        assert_eq!(t.interpolate_at(0.5).unwrap(), vec![1.0]);
        let t = ramp(&[0.0, 0.3, 1.0], &[0.1, 0.7, -2.0]);
        assert_eq!(t.interpolate_at(0.3).unwrap(), vec![0.7]);
        assert!(matches!(
            t.interpolate_at(1.5),
            Err(MotionError::OutOfRange { .. })
        ));
        assert!(t.interpolate_at(-0.1).is_err());
    }

    #[test]
    fn slerp_pose_interpolation() {
        let q90 = UnitQuaternion::from_axis_angle(&Vec3::unit_z(), std::f64::consts::FRAC_PI_2);
        let traj = PoseTrajectory::new(
            vec![0.0, 1.0],
            vec![Pose::identity(), Pose::from_rotation(q90)],
        )
        .unwrap();
        let p = traj.interpolate_at(0.5).unwrap();
        let q = p.orientation.to_array();
        let expect = [0.0, 0.0, 0.382_683_432_365_089_8, 0.923_879_532_511_286_7];
        for (a, b) in q.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn resample_grid_and_errors() {
        let t = ramp(&[0.0, 1.0], &[0.0, 1.0]);
        let r = t.resample_uniform(4.0).unwrap();
        assert_eq!(r.timestamps(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(r.joint_names(), t.joint_names());
        assert!(matches!(
            t.resample_uniform(0.0),
            Err(MotionError::InvalidRate(_))
        ));
        assert!(t.resample_uniform(-3.0).is_err());
        assert!(ramp(&[0.0], &[1.0]).resample_uniform(10.0).is_err());
    }

    #[test]
    fn resample_quadratic_error_bounded_by_linearization() {
        // v = t^2 sampled at h = 0.1; linear interpolation error <= h^2/8 * max|v''|
        let ts: Vec<f64> = (0..=20).map(|k| k as f64 * 0.1).collect();
        let vs: Vec<f64> = ts.iter().map(|t| t * t).collect();
        let r = ramp(&ts, &vs).resample_uniform(37.0).unwrap();
        let bound = 0.1 * 0.1 / 8.0 * 2.0 + 1e-12;
        for (t, q) in r.timestamps().iter().zip(r.configurations()) {
            assert!((q[0] - t * t).abs() <= bound, "t={t}");
        }
    }

    #[test]
    fn constructor_rejects_bad_time() {
        let e = JointTrajectory::new(vec!["a".into()], vec![0.0, 0.0], vec![vec![0.0], vec![1.0]]);
        assert_eq!(e, Err(MotionError::NonMonotoneTime { index: 1 }));
        let e = JointTrajectory::<f64>::new(vec!["a".into()], vec![], vec![]);
        assert!(e.is_err());
        let e = JointTrajectory::new(vec!["a".into()], vec![0.0], vec![vec![0.0, 1.0]]);
        assert!(matches!(e, Err(MotionError::Shape(_))));
    }

    #[test]
    fn single_sample_pose_track_is_legal() {
        let p = PoseTrajectory::<f64>::constant(Pose::identity());
        assert_eq!(p.duration(), 0.0);
        assert_eq!(p.interpolate_at(0.0).unwrap(), Pose::identity());
    }
}
