//! URDF subset parser and forward kinematics.
//!
//! Supported: `robot`, `link`, `joint` with `origin` (xyz, rpy), `parent`,
//! `child`, `axis` and `limit` (lower, upper). Visual, collision and inertial
//! blocks are ignored. Mimic joints and planar/floating joints are rejected.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::geometry::{Pose, UnitQuaternion, Vec3};
use crate::motion::{JointTrajectory, PoseTrajectory, Trajectory};
use crate::scalar::Real;

/// Margin used by [`RobotModel::joint_limit_violations`] callers that have no
/// better idea: catches exact clamps despite float noise.
pub const DEFAULT_LIMIT_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinematicsError {
    #[error("URDF parse error: {0}")]
    Parse(String),
    #[error("joint `{joint}` has unsupported type `{kind}`")]
    UnsupportedJointType { joint: String, kind: String },
    #[error("kinematic cycle through link `{link}`")]
    Cycle { link: String },
    #[error("link `{link}` is not connected to the kinematic tree")]
    DanglingLink { link: String },
    #[error("joint `{joint}`: {reason}")]
    InvalidJoint { joint: String, reason: String },
    #[error("expected {expected} joint values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unknown link `{0}`")]
    UnknownLink(String),
    #[error("trajectory joints {found:?} do not match robot joints {expected:?}")]
    JointNameMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("limit margin must be non-negative, got {0}")]
    InvalidMargin(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum JointKind {
    Revolute,
    Continuous,
    Prismatic,
    Fixed,
}

impl JointKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            JointKind::Revolute => "revolute",
            JointKind::Continuous => "continuous",
            JointKind::Prismatic => "prismatic",
            JointKind::Fixed => "fixed",
        }
    }

    pub fn is_actuated(&self) -> bool {
        !matches!(self, JointKind::Fixed)
    }
}

impl fmt::Display for JointKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JointLimits<T> {
    pub lower: T,
    pub upper: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real + Serialize"))]
pub struct JointSpec<T> {
    pub name: String,
    pub kind: JointKind,
    pub parent_link: String,
    pub child_link: String,
    pub origin: Pose<T>,
    /// Unit axis in the joint frame.
    pub axis: Vec3<T>,
    pub limits: Option<JointLimits<T>>,
}

impl<T: Real> JointSpec<T> {
    /// Transform contributed by the joint at position `value`.
    pub fn motion(&self, value: T) -> Pose<T> {
        match self.kind {
            JointKind::Revolute | JointKind::Continuous => {
                Pose::from_rotation(UnitQuaternion::from_axis_angle(&self.axis, value))
            }
            JointKind::Prismatic => Pose::from_translation(self.axis * value),
            JointKind::Fixed => Pose::identity(),
        }
    }
}

/// Kinematic tree. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotModel<T> {
    name: String,
    links: Vec<String>,
    joints: Vec<JointSpec<T>>,
    root: usize,
    /// Joint whose child is the link, by link index.
    parent_joint: Vec<Option<usize>>,
    joint_parent_link: Vec<usize>,
    joint_child_link: Vec<usize>,
    /// Joint indices, parents before children.
    topo_order: Vec<usize>,
    /// Joint indices of non-fixed joints in document order.
    actuated: Vec<usize>,
    /// Position of each joint in the configuration vector.
    config_slot: Vec<Option<usize>>,
}

impl<T: Real> RobotModel<T> {
    /// Builds and checks the tree. Limits and axes are validated here as well,
    /// so programmatically built models obey the same rules as parsed ones.
    pub fn new(
        name: impl Into<String>,
        links: Vec<String>,
        mut joints: Vec<JointSpec<T>>,
    ) -> Result<Self, KinematicsError> {
        if links.is_empty() {
            return Err(KinematicsError::Parse("robot has no links".into()));
        }
        let mut link_index = HashMap::new();
        for (i, l) in links.iter().enumerate() {
            if link_index.insert(l.as_str(), i).is_some() {
                return Err(KinematicsError::Parse(format!("duplicate link `{l}`")));
            }
        }
        let mut seen_joints = HashMap::new();
        for (i, j) in joints.iter().enumerate() {
            if seen_joints.insert(j.name.as_str(), i).is_some() {
                return Err(KinematicsError::Parse(format!("duplicate joint `{}`", j.name)));
            }
        }

        for j in joints.iter_mut() {
            normalize_joint(j)?;
        }

        let mut parent_joint = vec![None; links.len()];
        let mut joint_parent_link = Vec::with_capacity(joints.len());
        let mut joint_child_link = Vec::with_capacity(joints.len());
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); links.len()];
        for (ji, j) in joints.iter().enumerate() {
            let p = *link_index
                .get(j.parent_link.as_str())
                .ok_or_else(|| KinematicsError::DanglingLink {
                    link: j.parent_link.clone(),
                })?;
            let c = *link_index
                .get(j.child_link.as_str())
                .ok_or_else(|| KinematicsError::DanglingLink {
                    link: j.child_link.clone(),
                })?;
            if p == c || parent_joint[c].is_some() {
                return Err(KinematicsError::Cycle {
                    link: j.child_link.clone(),
                });
            }
            parent_joint[c] = Some(ji);
            joint_parent_link.push(p);
            joint_child_link.push(c);
            children[p].push(ji);
        }

        let roots: Vec<usize> = (0..links.len())
            .filter(|l| parent_joint[*l].is_none())
            .collect();
        let Some(&root) = roots.first() else {
            return Err(KinematicsError::Cycle {
                link: links[0].clone(),
            });
        };

        let mut topo_order = Vec::with_capacity(joints.len());
        let mut reached = vec![false; links.len()];
        reached[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(l) = queue.pop_front() {
            for &ji in &children[l] {
                topo_order.push(ji);
                let c = joint_child_link[ji];
                reached[c] = true;
                queue.push_back(c);
            }
        }
        if let Some(l) = (0..links.len()).find(|l| !reached[*l]) {
            // unreachable with a parent => part of a cycle; without => second root
            return Err(if parent_joint[l].is_some() {
                KinematicsError::Cycle {
                    link: links[l].clone(),
                }
            } else {
                KinematicsError::DanglingLink {
                    link: links[l].clone(),
                }
            });
        }

        let actuated: Vec<usize> = joints
            .iter()
            .enumerate()
            .filter(|(_, j)| j.kind.is_actuated())
            .map(|(i, _)| i)
            .collect();
        let mut config_slot = vec![None; joints.len()];
        for (slot, ji) in actuated.iter().enumerate() {
            config_slot[*ji] = Some(slot);
        }

        Ok(RobotModel {
            name: name.into(),
            links,
            joints,
            root,
            parent_joint,
            joint_parent_link,
            joint_child_link,
            topo_order,
            actuated,
            config_slot,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn links(&self) -> &[String] {
        &self.links
    }

    pub fn joints(&self) -> &[JointSpec<T>] {
        &self.joints
    }

    pub fn root_link(&self) -> &str {
        &self.links[self.root]
    }

    pub fn link_index(&self, link: &str) -> Option<usize> {
        self.links.iter().position(|l| l == link)
    }

    /// Number of actuated joints (the configuration dimension).
    pub fn dof(&self) -> usize {
        self.actuated.len()
    }

    pub fn actuated_joints(&self) -> impl Iterator<Item = &JointSpec<T>> {
        self.actuated.iter().map(|i| &self.joints[*i])
    }

    pub fn actuated_joint_names(&self) -> Vec<String> {
        self.actuated_joints().map(|j| j.name.clone()).collect()
    }

    fn check_dim(&self, config: &[T]) -> Result<(), KinematicsError> {
        if config.len() != self.dof() {
            return Err(KinematicsError::DimensionMismatch {
                expected: self.dof(),
                got: config.len(),
            });
        }
        Ok(())
    }

    fn joint_transform(&self, ji: usize, config: &[T]) -> Pose<T> {
        let j = &self.joints[ji];
        let value = self.config_slot[ji].map_or(T::zero(), |s| config[s]);
        j.origin.compose(&j.motion(value))
    }

    /// World pose of every link, indexed like [`links`](Self::links).
    pub fn link_poses(&self, config: &[T]) -> Result<Vec<Pose<T>>, KinematicsError> {
        self.check_dim(config)?;
        let mut poses = vec![Pose::identity(); self.links.len()];
        for &ji in &self.topo_order {
            let parent = poses[self.joint_parent_link[ji]];
            poses[self.joint_child_link[ji]] = parent.compose(&self.joint_transform(ji, config));
        }
        Ok(poses)
    }

    /// World pose of every link keyed by name. The root sits at identity.
    pub fn forward_kinematics(
        &self,
        config: &[T],
    ) -> Result<BTreeMap<String, Pose<T>>, KinematicsError> {
        let poses = self.link_poses(config)?;
        Ok(self.links.iter().cloned().zip(poses).collect())
    }

    /// Joint indices from the root down to `link`.
    fn chain_to(&self, link: usize) -> Vec<usize> {
        let mut chain = Vec::new();
        let mut l = link;
        while let Some(ji) = self.parent_joint[l] {
            chain.push(ji);
            l = self.joint_parent_link[ji];
        }
        chain.reverse();
        chain
    }

    fn pose_along(&self, chain: &[usize], config: &[T]) -> Pose<T> {
        chain.iter().fold(Pose::identity(), |acc, ji| {
            acc.compose(&self.joint_transform(*ji, config))
        })
    }

    /// World pose of a single link.
    pub fn link_pose(&self, config: &[T], link: &str) -> Result<Pose<T>, KinematicsError> {
        self.check_dim(config)?;
        let l = self
            .link_index(link)
            .ok_or_else(|| KinematicsError::UnknownLink(link.to_owned()))?;
        Ok(self.pose_along(&self.chain_to(l), config))
    }

    /// Maps a trajectory's joint order onto this model's configuration order.
    fn joint_permutation(&self, names: &[String]) -> Result<Vec<usize>, KinematicsError> {
        let expected = self.actuated_joint_names();
        let mismatch = || KinematicsError::JointNameMismatch {
            expected: expected.clone(),
            found: names.to_vec(),
        };
        if names.len() != expected.len() {
            return Err(mismatch());
        }
        // perm[slot] = column in the trajectory holding that joint
        expected
            .iter()
            .map(|e| names.iter().position(|n| n == e).ok_or_else(mismatch))
            .collect()
    }

    /// Trajectory configurations reordered to this model's actuated-joint order.
    pub fn reorder_configurations(
        &self,
        joints: &JointTrajectory<T>,
    ) -> Result<Vec<Vec<T>>, KinematicsError> {
        let perm = self.joint_permutation(joints.joint_names())?;
        Ok(joints
            .configurations()
            .iter()
            .map(|q| perm.iter().map(|c| q[*c]).collect())
            .collect())
    }

    /// Pose of `link` at every sample of `joints`, timestamps preserved.
    /// Joint order in the trajectory may differ from the model's.
    pub fn link_pose_trajectory(
        &self,
        joints: &JointTrajectory<T>,
        link: &str,
    ) -> Result<PoseTrajectory<T>, KinematicsError> {
        let l = self
            .link_index(link)
            .ok_or_else(|| KinematicsError::UnknownLink(link.to_owned()))?;
        let chain = self.chain_to(l);
        let poses = self
            .reorder_configurations(joints)?
            .iter()
            .map(|q| self.pose_along(&chain, q))
            .collect();
        Ok(PoseTrajectory::new_unchecked(joints.timestamps().to_vec(), poses)
            .expect("one pose per sample"))
    }

    /// Maximal time spans during which a joint sits within `margin` of a
    /// limit (or beyond it), sorted by start time.
    pub fn joint_limit_violations(
        &self,
        joints: &JointTrajectory<T>,
        margin: T,
    ) -> Result<Vec<LimitViolation<T>>, KinematicsError> {
        if !(margin >= T::zero()) {
            return Err(KinematicsError::InvalidMargin(margin.as_f64()));
        }
        let perm = self.joint_permutation(joints.joint_names())?;
        let ts = joints.timestamps();
        let mut out = Vec::new();
        for (slot, spec) in self.actuated_joints().enumerate() {
            let Some(lim) = spec.limits else { continue };
            let column = perm[slot];
            for side in [LimitSide::AtLower, LimitSide::AtUpper] {
                let hit = |q: &Vec<T>| match side {
                    LimitSide::AtLower => q[column] <= lim.lower + margin,
                    LimitSide::AtUpper => q[column] >= lim.upper - margin,
                };
                let mut run_start: Option<usize> = None;
                for (i, q) in joints.configurations().iter().enumerate() {
                    match (hit(q), run_start) {
                        (true, None) => run_start = Some(i),
                        (false, Some(s)) => {
                            out.push(LimitViolation::new(spec, slot, side, s, i - 1, ts));
                            run_start = None;
                        }
                        _ => {}
                    }
                }
                if let Some(s) = run_start {
                    out.push(LimitViolation::new(spec, slot, side, s, ts.len() - 1, ts));
                }
            }
        }
        out.sort_by(|a, b| {
            a.start
                .partial_cmp(&b.start)
                .expect("finite timestamps")
                .then(a.joint_index.cmp(&b.joint_index))
                .then(a.kind.cmp(&b.kind))
        });
        Ok(out)
    }

    /// Serializes the model back to URDF text (kinematic subset only).
    pub fn to_urdf(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "<robot name=\"{}\">", xml_escape(&self.name));
        for l in &self.links {
            let _ = writeln!(s, "  <link name=\"{}\"/>", xml_escape(l));
        }
        for j in &self.joints {
            let _ = writeln!(
                s,
                "  <joint name=\"{}\" type=\"{}\">",
                xml_escape(&j.name),
                j.kind
            );
            let p = j.origin.position;
            let (r, pi, y) = rpy_of(&j.origin.orientation);
            let _ = writeln!(
                s,
                "    <origin xyz=\"{} {} {}\" rpy=\"{} {} {}\"/>",
                p.x, p.y, p.z, r, pi, y
            );
            let _ = writeln!(s, "    <parent link=\"{}\"/>", xml_escape(&j.parent_link));
            let _ = writeln!(s, "    <child link=\"{}\"/>", xml_escape(&j.child_link));
            let _ = writeln!(s, "    <axis xyz=\"{} {} {}\"/>", j.axis.x, j.axis.y, j.axis.z);
            if let Some(l) = j.limits {
                let _ = writeln!(s, "    <limit lower=\"{}\" upper=\"{}\"/>", l.lower, l.upper);
            }
            let _ = writeln!(s, "  </joint>");
        }
        s.push_str("</robot>\n");
        s
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Inverse of [`UnitQuaternion::from_rpy`].
fn rpy_of<T: Real>(q: &UnitQuaternion<T>) -> (T, T, T) {
    let (x, y, z, w) = (q.x(), q.y(), q.z(), q.w());
    let two = T::lit(2.0);
    let one = T::one();
    let roll = (two * (w * x + y * z)).atan2(one - two * (x * x + y * y));
    let sp = (two * (w * y - z * x)).max(-one).min(one);
    let pitch = sp.asin();
    let yaw = (two * (w * z + x * y)).atan2(one - two * (y * y + z * z));
    (roll, pitch, yaw)
}

fn normalize_joint<T: Real>(j: &mut JointSpec<T>) -> Result<(), KinematicsError> {
    let invalid = |reason: &str| KinematicsError::InvalidJoint {
        joint: j.name.clone(),
        reason: reason.to_owned(),
    };
    if j.kind.is_actuated() {
        j.axis = j.axis.try_normalize().ok_or_else(|| invalid("zero axis"))?;
    }
    match (j.kind, j.limits) {
        (JointKind::Revolute | JointKind::Prismatic, None) => {
            return Err(invalid("revolute and prismatic joints need position limits"))
        }
        (JointKind::Continuous | JointKind::Fixed, Some(_)) => {
            return Err(invalid("continuous and fixed joints take no position limits"))
        }
        (_, Some(l)) if !(l.lower <= l.upper) => return Err(invalid("lower limit above upper")),
        _ => {}
    }
    if !j.origin.position.is_finite() {
        return Err(invalid("non-finite origin"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitSide {
    AtLower,
    AtUpper,
}

/// A maximal span during which one joint rests on (or passes) a limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitViolation<T> {
    pub joint: String,
    /// Position in the actuated-joint order.
    pub joint_index: usize,
    pub kind: LimitSide,
    pub start: T,
    pub end: T,
    pub start_sample: usize,
    pub end_sample: usize,
}

impl<T: Real> LimitViolation<T> {
    fn new(
        spec: &JointSpec<T>,
        joint_index: usize,
        kind: LimitSide,
        first: usize,
        last: usize,
        ts: &[T],
    ) -> Self {
        LimitViolation {
            joint: spec.name.clone(),
            joint_index,
            kind,
            start: ts[first],
            end: ts[last],
            start_sample: first,
            end_sample: last,
        }
    }
}

fn parse_triple<T: Real>(attr: Option<&str>, what: &str) -> Result<Option<Vec3<T>>, KinematicsError> {
    let Some(text) = attr else { return Ok(None) };
    let vals: Vec<f64> = text
        .split_whitespace()
        .map(f64::from_str)
        .collect::<Result<_, _>>()
        .map_err(|e| KinematicsError::Parse(format!("bad {what} `{text}`: {e}")))?;
    match vals[..] {
        [x, y, z] => Ok(Some(Vec3::new(T::lit(x), T::lit(y), T::lit(z)))),
        _ => Err(KinematicsError::Parse(format!(
            "{what} needs three numbers, got `{text}`"
        ))),
    }
}

fn parse_scalar<T: Real>(attr: Option<&str>, what: &str) -> Result<Option<T>, KinematicsError> {
    attr.map(|s| {
        s.trim()
            .parse::<f64>()
            .map(T::lit)
            .map_err(|e| KinematicsError::Parse(format!("bad {what} `{s}`: {e}")))
    })
    .transpose()
}

/// Parses a URDF document into a [`RobotModel`].
pub fn parse_urdf<T: Real>(document: &str) -> Result<RobotModel<T>, KinematicsError> {
    let doc = roxmltree::Document::parse(document)
        .map_err(|e| KinematicsError::Parse(e.to_string()))?;
    let robot = doc.root_element();
    if robot.tag_name().name() != "robot" {
        return Err(KinematicsError::Parse(format!(
            "root element is <{}>, expected <robot>",
            robot.tag_name().name()
        )));
    }
    let name = robot.attribute("name").unwrap_or("").to_owned();

    let mut links = Vec::new();
    let mut joints = Vec::new();
    for node in robot.children().filter(|n| n.is_element()) {
        match node.tag_name().name() {
            "link" => {
                let name = node
                    .attribute("name")
                    .ok_or_else(|| KinematicsError::Parse("link without name".into()))?;
                links.push(name.to_owned());
            }
            "joint" => joints.push(parse_joint(node)?),
            // materials, transmissions, gazebo tags, ...
            _ => {}
        }
    }
    RobotModel::new(name, links, joints)
}

fn parse_joint<T: Real>(node: roxmltree::Node<'_, '_>) -> Result<JointSpec<T>, KinematicsError> {
    let name = node
        .attribute("name")
        .ok_or_else(|| KinematicsError::Parse("joint without name".into()))?
        .to_owned();
    let type_attr = node.attribute("type").unwrap_or("");
    let kind = match type_attr {
        "revolute" => JointKind::Revolute,
        "continuous" => JointKind::Continuous,
        "prismatic" => JointKind::Prismatic,
        "fixed" => JointKind::Fixed,
        other => {
            return Err(KinematicsError::UnsupportedJointType {
                joint: name,
                kind: other.to_owned(),
            })
        }
    };
    let child = |tag: &str| node.children().find(|c| c.has_tag_name(tag));
    if child("mimic").is_some() {
        return Err(KinematicsError::UnsupportedJointType {
            joint: name,
            kind: "mimic".into(),
        });
    }
    let link_of = |tag: &str| {
        child(tag)
            .and_then(|c| c.attribute("link"))
            .map(str::to_owned)
            .ok_or_else(|| KinematicsError::Parse(format!("joint `{name}` missing <{tag} link>")))
    };
    let parent_link = link_of("parent")?;
    let child_link = link_of("child")?;

    let origin = match child("origin") {
        Some(o) => {
            let xyz = parse_triple::<T>(o.attribute("xyz"), "origin xyz")?.unwrap_or_default();
            let rpy = parse_triple::<T>(o.attribute("rpy"), "origin rpy")?.unwrap_or_default();
            Pose::new(xyz, UnitQuaternion::from_rpy(rpy.x, rpy.y, rpy.z))
        }
        None => Pose::identity(),
    };
    let axis = match child("axis") {
        Some(a) => parse_triple(a.attribute("xyz"), "axis")?.unwrap_or_else(Vec3::unit_x),
        None => Vec3::unit_x(),
    };
    let limits = match child("limit") {
        Some(l) => {
            let lower = parse_scalar::<T>(l.attribute("lower"), "limit lower")?;
            let upper = parse_scalar::<T>(l.attribute("upper"), "limit upper")?;
            match kind {
                // URDF defaults absent bounds to zero for bounded joints
                JointKind::Revolute | JointKind::Prismatic => Some(JointLimits {
                    lower: lower.unwrap_or_else(T::zero),
                    upper: upper.unwrap_or_else(T::zero),
                }),
                // effort/velocity-only limit tags are common on continuous joints
                _ if lower.is_none() && upper.is_none() => None,
                _ => Some(JointLimits {
                    lower: lower.unwrap_or_else(T::zero),
                    upper: upper.unwrap_or_else(T::zero),
                }),
            }
        }
        None => None,
    };
    Ok(JointSpec {
        name,
        kind,
        parent_link,
        child_link,
        origin,
        axis,
        limits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    pub(crate) const PLANAR2: &str = r#"
<robot name="planar2">
  <link name="base"/><link name="l1"/><link name="l2"/><link name="tip"/>
  <joint name="j1" type="revolute">
    <parent link="base"/><child link="l1"/><axis xyz="0 0 1"/>
    <limit lower="-3.2" upper="3.2" effort="1" velocity="1"/>
  </joint>
  <joint name="j2" type="revolute">
    <origin xyz="1 0 0"/>
    <parent link="l1"/><child link="l2"/><axis xyz="0 0 2"/>
    <limit lower="-3.2" upper="3.2"/>
  </joint>
  <joint name="tool" type="fixed">
    <origin xyz="1 0 0"/>
    <parent link="l2"/><child link="tip"/>
  </joint>
</robot>"#;

    fn assert_pos(p: Vec3<f64>, x: f64, y: f64, z: f64) {
        assert!(
            (p.x - x).abs() < 1e-12 && (p.y - y).abs() < 1e-12 && (p.z - z).abs() < 1e-12,
            "{p:?} != ({x}, {y}, {z})"
        );
    }

    #[test]
    fn planar_arm_examples() {
        let m = parse_urdf::<f64>(PLANAR2).unwrap();
        assert_eq!(m.dof(), 2);
        assert_eq!(m.root_link(), "base");
        assert_pos(m.link_pose(&[0.0, 0.0], "tip").unwrap().position, 2.0, 0.0, 0.0);
        assert_pos(m.link_pose(&[FRAC_PI_2, 0.0], "tip").unwrap().position, 0.0, 2.0, 0.0);
        assert_pos(
            m.link_pose(&[FRAC_PI_2, -FRAC_PI_2], "tip").unwrap().position,
            1.0,
            1.0,
            0.0,
        );
        // axis given as (0 0 2) is normalized
        assert_eq!(m.joints()[1].axis, Vec3::unit_z());
    }

    #[test]
    fn single_link_and_fixed_offset() {
        let m = parse_urdf::<f64>(r#"<robot name="r"><link name="a"/></robot>"#).unwrap();
        assert_eq!(m.dof(), 0);
        let m = parse_urdf::<f64>(
            r#"<robot name="r"><link name="a"><visual><geometry><box size="1 1 1"/></geometry></visual></link><link name="b"/>
            <joint name="f" type="fixed"><origin xyz="0 0 1"/><parent link="a"/><child link="b"/></joint></robot>"#,
        )
        .unwrap();
        let fk = m.forward_kinematics(&[]).unwrap();
        assert_pos(fk["b"].position, 0.0, 0.0, 1.0);
        assert_eq!(fk["a"], Pose::identity());
    }

    #[test]
    fn rejects_unsupported_and_malformed() {
        let floating = r#"<robot name="r"><link name="a"/><link name="b"/>
            <joint name="f" type="floating"><parent link="a"/><child link="b"/></joint></robot>"#;
        assert!(matches!(
            parse_urdf::<f64>(floating),
            Err(KinematicsError::UnsupportedJointType { .. })
        ));
        let mimic = r#"<robot name="r"><link name="a"/><link name="b"/>
            <joint name="f" type="continuous"><parent link="a"/><child link="b"/><mimic joint="x"/></joint></robot>"#;
        assert!(matches!(
            parse_urdf::<f64>(mimic),
            Err(KinematicsError::UnsupportedJointType { .. })
        ));
        assert!(matches!(
            parse_urdf::<f64>("<robot><link"),
            Err(KinematicsError::Parse(_))
        ));
        let dangling = r#"<robot name="r"><link name="a"/>
            <joint name="f" type="fixed"><parent link="a"/><child link="ghost"/></joint></robot>"#;
        assert!(matches!(
            parse_urdf::<f64>(dangling),
            Err(KinematicsError::DanglingLink { .. })
        ));
        let two_roots = r#"<robot name="r"><link name="a"/><link name="b"/></robot>"#;
        assert!(matches!(
            parse_urdf::<f64>(two_roots),
            Err(KinematicsError::DanglingLink { .. })
        ));
        let cycle = r#"<robot name="r"><link name="a"/><link name="b"/><link name="c"/>
            <joint name="f" type="fixed"><parent link="b"/><child link="c"/></joint>
            <joint name="g" type="fixed"><parent link="c"/><child link="b"/></joint></robot>"#;
        assert!(matches!(
            parse_urdf::<f64>(cycle),
            Err(KinematicsError::Cycle { .. })
        ));
        let no_limits = r#"<robot name="r"><link name="a"/><link name="b"/>
            <joint name="f" type="revolute"><parent link="a"/><child link="b"/></joint></robot>"#;
        assert!(matches!(
            parse_urdf::<f64>(no_limits),
            Err(KinematicsError::InvalidJoint { .. })
        ));
    }

    #[test]
    fn dimension_mismatch() {
        let m = parse_urdf::<f64>(PLANAR2).unwrap();
        assert_eq!(
            m.link_pose(&[0.0], "tip"),
            Err(KinematicsError::DimensionMismatch {
                expected: 2,
                got: 1
            })
        );
        assert!(matches!(
            m.link_pose(&[0.0, 0.0], "nope"),
            Err(KinematicsError::UnknownLink(_))
        ));
    }

    #[test]
    fn to_urdf_roundtrip() {
        let m = parse_urdf::<f64>(PLANAR2).unwrap();
        let again = parse_urdf::<f64>(&m.to_urdf()).unwrap();
        for q in [[0.3, -1.0], [2.0, 0.5]] {
            let a = m.forward_kinematics(&q).unwrap();
            let b = again.forward_kinematics(&q).unwrap();
            for (k, p) in &a {
                assert!(p.position.distance(&b[k].position) < 1e-12);
            }
        }
    }

    #[test]
    fn limit_spans_sorted_and_maximal() {
        let m = parse_urdf::<f64>(PLANAR2).unwrap();
        let ts: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let cfg: Vec<Vec<f64>> = (0..10)
            .map(|k| match k {
                2..=4 => vec![-3.2, 3.2],
                7 => vec![0.0, 3.2],
                _ => vec![0.0, 0.0],
            })
            .collect();
        let jt = JointTrajectory::new(vec!["j2".into(), "j1".into()], ts, cfg).unwrap();
        let v = m.joint_limit_violations(&jt, 0.0).unwrap();
        assert_eq!(v.len(), 3);
        // column 0 is j2; ties on start time order by model joint order
        assert_eq!((v[0].joint.as_str(), v[0].kind, v[0].start, v[0].end), ("j1", LimitSide::AtUpper, 2.0, 4.0));
        assert_eq!((v[1].joint.as_str(), v[1].kind, v[1].start, v[1].end), ("j2", LimitSide::AtLower, 2.0, 4.0));
        assert_eq!((v[2].start, v[2].end), (7.0, 7.0));
        assert!(m.joint_limit_violations(&jt, -1.0).is_err());
    }
}
