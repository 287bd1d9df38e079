//! Synthetic, seeded motions for tests and demos.
//!
//! All robot motions use [`FIXTURE_ARM_URDF`], a six-joint revolute arm, and
//! are sampled at [`FIXTURE_RATE`]. The four cases:
//!
//! * **A** `A-rot{30,60,90,120,150}`: pick-and-place where the carried bottle
//!   and the wrist turn by the given number of degrees about the vertical.
//! * **B** `B-clamped`: a 7 s motion whose `joint6` rests on its lower limit
//!   for `t ∈ [2, 5]`.
//! * **C** `C-near{1..4}`, `C-outlier`: one nominal motion with small seeded
//!   parameter perturbations, plus one with offset shoulder joints.
//! * **D** `D-teleop`: an `operator` track leading the robot end effector by
//!   0.2 s with a small lateral deviation.

use std::f64::consts::PI;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::geometry::{Pose, UnitQuaternion, Vec3};
use crate::io::{content_id, save_motion, LoadedMotion};
use crate::motion::{JointTrajectory, Motion, PoseTrajectory, Trajectory};
use crate::series::ScalarSeries;
use crate::urdf::{parse_urdf, RobotModel};

pub const FIXTURE_RATE: f64 = 50.0;
pub const FIXTURE_EE_LINK: &str = "tool";
pub const CLAMPED_JOINT: &str = "joint6";
pub const CLAMP_START: f64 = 2.0;
pub const CLAMP_END: f64 = 5.0;
pub const TELEOP_DELAY: f64 = 0.2;
pub const ROTATION_SWEEPS_DEG: [f64; 5] = [30.0, 60.0, 90.0, 120.0, 150.0];
const CASE_C_SEED: u64 = 7;

pub const FIXTURE_ARM_URDF: &str = r#"<?xml version="1.0"?>
<robot name="fixture_arm">
  <link name="base_link"/>
  <link name="link1"/>
  <link name="link2"/>
  <link name="link3"/>
  <link name="link4"/>
  <link name="link5"/>
  <link name="link6"/>
  <link name="tool"/>
  <joint name="joint1" type="revolute">
    <parent link="base_link"/><child link="link1"/>
    <origin xyz="0 0 0.3" rpy="0 0 0"/><axis xyz="0 0 1"/>
    <limit lower="-2.9" upper="2.9" effort="100" velocity="2"/>
  </joint>
  <joint name="joint2" type="revolute">
    <parent link="link1"/><child link="link2"/>
    <origin xyz="0 0 0.1" rpy="0 0 0"/><axis xyz="0 1 0"/>
    <limit lower="-2.0" upper="2.0" effort="100" velocity="2"/>
  </joint>
  <joint name="joint3" type="revolute">
    <parent link="link2"/><child link="link3"/>
    <origin xyz="0 0 0.4" rpy="0 0 0"/><axis xyz="0 1 0"/>
    <limit lower="-2.5" upper="2.5" effort="60" velocity="2"/>
  </joint>
  <joint name="joint4" type="revolute">
    <parent link="link3"/><child link="link4"/>
    <origin xyz="0.35 0 0" rpy="0 0 0"/><axis xyz="1 0 0"/>
    <limit lower="-3.0" upper="3.0" effort="30" velocity="3"/>
  </joint>
  <joint name="joint5" type="revolute">
    <parent link="link4"/><child link="link5"/>
    <origin xyz="0.1 0 0" rpy="0 0 0"/><axis xyz="0 1 0"/>
    <limit lower="-2.0" upper="2.0" effort="30" velocity="3"/>
  </joint>
  <joint name="joint6" type="revolute">
    <parent link="link5"/><child link="link6"/>
    <origin xyz="0.08 0 0" rpy="0 0 0"/><axis xyz="1 0 0"/>
    <limit lower="-1.5" upper="1.5" effort="10" velocity="4"/>
  </joint>
  <joint name="tool_mount" type="fixed">
    <parent link="link6"/><child link="tool"/>
    <origin xyz="0.1 0 0" rpy="0 0 0"/>
  </joint>
</robot>
"#;

pub fn fixture_arm() -> RobotModel<f64> {
    parse_urdf(FIXTURE_ARM_URDF).expect("fixture URDF is valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixtureCase {
    A,
    B,
    C,
    D,
}

impl FixtureCase {
    pub const ALL: [FixtureCase; 4] = [FixtureCase::A, FixtureCase::B, FixtureCase::C, FixtureCase::D];

    pub fn motions(self) -> Vec<LoadedMotion> {
        match self {
            FixtureCase::A => case_a(),
            FixtureCase::B => vec![case_b()],
            FixtureCase::C => case_c(),
            FixtureCase::D => vec![case_d()],
        }
    }

    /// `(file name, canonical motion JSON)` for every motion of the case.
    pub fn files(self) -> Vec<(String, Vec<u8>)> {
        self.motions()
            .iter()
            .map(|m| (format!("{}.json", m.motion.name), save_motion(m)))
            .collect()
    }
}

impl FromStr for FixtureCase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "A" => Ok(FixtureCase::A),
            "B" => Ok(FixtureCase::B),
            "C" => Ok(FixtureCase::C),
            "D" => Ok(FixtureCase::D),
            _ => Err(format!("unknown fixture case `{s}` (expected A, B, C or D)")),
        }
    }
}

fn sample_times(duration: f64) -> Vec<f64> {
    let n = (duration * FIXTURE_RATE).round() as usize;
    (0..=n).map(|k| k as f64 / FIXTURE_RATE).collect()
}

/// `0 → 1` with zero slope at both ends.
fn smoothstep(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * (3.0 - 2.0 * s)
}

fn joint_names() -> Vec<String> {
    (1..=6).map(|k| format!("joint{k}")).collect()
}

/// Assembles a fixture-arm motion and gives it its content id.
pub fn arm_motion(
    name: &str,
    timestamps: Vec<f64>,
    configurations: Vec<Vec<f64>>,
    object_tracks: Vec<(String, PoseTrajectory<f64>)>,
) -> LoadedMotion {
    let joints = JointTrajectory::new(joint_names(), timestamps, configurations).expect("fixture joints are valid");
    let mut loaded = LoadedMotion {
        motion: Motion {
            id: String::new(),
            name: name.to_owned(),
            robot_ref: "fixture_arm".into(),
            ee_link: FIXTURE_EE_LINK.into(),
            joints,
            object_tracks: object_tracks.into_iter().collect(),
        },
        robot: fixture_arm(),
        urdf: FIXTURE_ARM_URDF.to_owned(),
    };
    loaded.motion.id = content_id(&save_motion(&loaded));
    loaded
}

/// Nominal reach-and-place path, parameterized by progress `s ∈ [0, 1]`.
fn nominal(s: f64) -> Vec<f64> {
    vec![
        0.8 * s - 0.4,
        -0.3 + 0.5 * s,
        0.6 - 0.4 * s,
        0.2 * (PI * s).sin(),
        0.4 + 0.3 * s,
        0.5 * s - 0.2,
    ]
}

/// Reach in the arm's vertical plane with the tool pitch held fixed
/// (`joint2 + joint3 + joint5` constant), so the wrist roll is the only
/// change of end-effector orientation.
fn planar_reach(s: f64, roll: f64) -> Vec<f64> {
    let (q2, q3) = (-0.3 + 0.5 * s, 0.6 - 0.9 * s);
    vec![0.1, q2, q3, 0.0, 0.7 - q2 - q3, roll]
}

fn case_a() -> Vec<LoadedMotion> {
    let ts = sample_times(3.0);
    ROTATION_SWEEPS_DEG
        .iter()
        .map(|deg| {
            let theta = deg.to_radians();
            let progress: Vec<f64> = ts.iter().map(|t| smoothstep(t / 3.0)).collect();
            let configs = progress.iter().map(|s| planar_reach(*s, -0.2 + theta * 0.5 * s)).collect();
            let poses = progress
                .iter()
                .map(|s| {
                    let p = Vec3::new(0.45 + 0.1 * s, -0.2 + 0.4 * s, 0.1 + 0.05 * (PI * s).sin());
                    Pose::new(p, UnitQuaternion::from_axis_angle(&Vec3::unit_z(), theta * s))
                })
                .collect();
            let bottle = PoseTrajectory::new(ts.clone(), poses).expect("fixture track is valid");
            arm_motion(&format!("A-rot{deg}"), ts.clone(), configs, vec![("bottle".into(), bottle)])
        })
        .collect()
}

/// `joint6` lower limit of the fixture arm.
pub fn clamp_limit() -> f64 {
    fixture_arm()
        .joints()
        .iter()
        .find(|j| j.name == CLAMPED_JOINT)
        .and_then(|j| j.limits)
        .map(|l| l.lower)
        .expect("joint6 is bounded")
}

fn case_b() -> LoadedMotion {
    let lower = clamp_limit();
    let ts = sample_times(7.0);
    let configs = ts
        .iter()
        .map(|t| {
            let mut q = nominal(smoothstep(t / 7.0));
            q[5] = if *t < CLAMP_START {
                lower + 0.25 * (CLAMP_START - t)
            } else if *t <= CLAMP_END {
                lower
            } else {
                lower + 0.25 * (t - CLAMP_END)
            };
            q
        })
        .collect();
    arm_motion("B-clamped", ts, configs, Vec::new())
}

fn case_c() -> Vec<LoadedMotion> {
    let ts = sample_times(2.0);
    let mut rng = ChaCha8Rng::seed_from_u64(CASE_C_SEED);
    let jitter = Normal::new(0.0, 0.02).expect("valid deviation");
    let mut out = Vec::new();
    for k in 1..=4 {
        let offsets: Vec<f64> = (0..6).map(|_| jitter.sample(&mut rng)).collect();
        let gain = 1.0 + jitter.sample(&mut rng);
        let configs = ts
            .iter()
            .map(|t| {
                let s = smoothstep(t / 2.0);
                nominal(s).iter().zip(&offsets).map(|(q, o)| q * gain + o).collect()
            })
            .collect();
        out.push(arm_motion(&format!("C-near{k}"), ts.clone(), configs, Vec::new()));
    }
    let configs = ts
        .iter()
        .map(|t| {
            let mut q = nominal(smoothstep(t / 2.0));
            q[1] += 1.0;
            q[2] -= 1.0;
            q
        })
        .collect();
    out.push(arm_motion("C-outlier", ts, configs, Vec::new()));
    out
}

fn case_d() -> LoadedMotion {
    let duration = 4.0;
    let ts = sample_times(duration);
    let configs: Vec<Vec<f64>> = ts.iter().map(|t| nominal(smoothstep(t / duration))).collect();
    let robot = fixture_arm();
    let joints = JointTrajectory::new(joint_names(), ts.clone(), configs.clone()).expect("valid");
    let ee = robot
        .link_pose_trajectory(&joints, FIXTURE_EE_LINK)
        .expect("fixture FK");
    // the operator hand reaches each point TELEOP_DELAY before the robot does
    let op_times: Vec<f64> = ts.iter().copied().filter(|t| *t <= duration - TELEOP_DELAY + 1e-9).collect();
    let op_poses = op_times
        .iter()
        .map(|t| {
            let lead = ee.interpolate_at(t + TELEOP_DELAY).expect("inside span");
            let wobble = Vec3::new(0.0, 0.005 * (2.0 * PI * t).sin(), 0.0);
            Pose::new(lead.position + wobble, lead.orientation)
        })
        .collect();
    let operator = PoseTrajectory::new(op_times, op_poses).expect("valid");
    arm_motion("D-teleop", ts, configs, vec![("operator".into(), operator)])
}

/// Progress warp for [`warped_pair`]: `s(t) = t + 0.1 t²` on `[0, 1]`,
/// rescaled to end at 1. Convex, so a uniformly faster copy never meets
/// the slow one at equal times after the start.
fn convex_progress(u: f64) -> f64 {
    (u + 0.1 * u * u) / 1.1
}

/// Two motions over the same path: `slow` lasts `duration`, `fast` covers it
/// `factor` times quicker. Returns `(slow, fast)`.
pub fn time_scaled_pair(duration: f64, factor: f64) -> (LoadedMotion, LoadedMotion) {
    let make = |name: &str, span: f64| {
        let ts = sample_times(span);
        let configs = ts.iter().map(|t| nominal(convex_progress(t / span))).collect();
        arm_motion(name, ts, configs, Vec::new())
    };
    (make("slow", duration), make("fast", duration / factor))
}

/// A reference motion of `duration` at uniform progress, and a variant that
/// runs the first half of the path twice as fast and the second half at half
/// speed. Returns `(reference, variant)`.
pub fn piecewise_speed_pair(duration: f64) -> (LoadedMotion, LoadedMotion) {
    let ts = sample_times(duration);
    let reference = arm_motion(
        "uniform",
        ts.clone(),
        ts.iter().map(|t| nominal(t / duration)).collect(),
        Vec::new(),
    );
    // progress 0.5 reached at duration / 4, then 0.5 more over duration
    let t_switch = duration / 4.0;
    let span = t_switch + duration;
    let vts = sample_times(span);
    let variant = arm_motion(
        "piecewise",
        vts.clone(),
        vts.iter()
            .map(|t| {
                let s = if *t <= t_switch {
                    2.0 * t / duration
                } else {
                    0.5 + 0.5 * (t - t_switch) / duration
                };
                nominal(s.min(1.0))
            })
            .collect(),
        Vec::new(),
    );
    (reference, variant)
}

/// Rotation about a fixed axis from 0 to `degrees`, as a pose track.
pub fn rotation_sweep(degrees: f64, axis: Vec3<f64>, samples: usize) -> PoseTrajectory<f64> {
    let n = samples.max(2);
    let ts: Vec<f64> = (0..n).map(|k| k as f64 / (n - 1) as f64).collect();
    let poses = ts
        .iter()
        .map(|s| Pose::from_rotation(UnitQuaternion::from_axis_angle(&axis, degrees.to_radians() * s)))
        .collect();
    PoseTrajectory::new(ts, poses).expect("valid sweep")
}

/// Two isotropic Gaussian clusters of 100 points each in R⁷ (σ = 1, centres
/// 10 apart along the first axis), each returned as a 7-joint trajectory.
pub fn gaussian_clusters(seed: u64) -> [JointTrajectory<f64>; 2] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).expect("valid deviation");
    let names: Vec<String> = (1..=7).map(|k| format!("j{k}")).collect();
    let mut cluster = |centre: f64| {
        let ts: Vec<f64> = (0..100).map(|k| k as f64 * 0.01).collect();
        let rows = (0..100)
            .map(|_| {
                let mut p: Vec<f64> = (0..7).map(|_| unit.sample(&mut rng)).collect();
                p[0] += centre;
                p
            })
            .collect();
        JointTrajectory::new(names.clone(), ts, rows).expect("valid cluster")
    };
    [cluster(0.0), cluster(10.0)]
}

/// `sin(2πt)` sampled at `h` for `n` samples, clean and with seeded Gaussian
/// noise of deviation `sigma`.
pub fn noisy_sine(seed: u64, n: usize, h: f64, sigma: f64) -> (ScalarSeries<f64>, ScalarSeries<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).expect("valid deviation");
    let ts: Vec<f64> = (0..n).map(|k| k as f64 * h).collect();
    let clean: Vec<f64> = ts.iter().map(|t| (2.0 * PI * t).sin()).collect();
    let noisy = clean.iter().map(|v| v + noise.sample(&mut rng)).collect();
    (
        ScalarSeries::new("sine", "", ts.clone(), clean).expect("valid"),
        ScalarSeries::new("sine", "", ts, noisy).expect("valid"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::validate;

    #[test]
    fn every_case_validates() {
        for case in FixtureCase::ALL {
            for m in case.motions() {
                assert!(validate(&m.motion, &m.robot).is_empty(), "{}", m.motion.name);
            }
        }
    }

    #[test]
    fn fixtures_are_deterministic() {
        for case in FixtureCase::ALL {
            assert_eq!(case.files(), case.files());
        }
    }

    #[test]
    fn clamped_joint_touches_only_in_window() {
        let m = case_b();
        let k = m.motion.joints.joint_names().iter().position(|n| n == CLAMPED_JOINT).unwrap();
        for (t, q) in m.motion.joints.timestamps().iter().zip(m.motion.joints.configurations()) {
            let at = q[k] == clamp_limit();
            assert_eq!(at, (CLAMP_START..=CLAMP_END).contains(t), "t = {t}");
        }
    }
}
