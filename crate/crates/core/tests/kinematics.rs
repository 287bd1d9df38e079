use std::f64::consts::PI;

use mocomp_core::geometry::Vec3;
use mocomp_core::urdf::parse_urdf;
use mocomp_core::RobotModel;
use nalgebra as na;
use proptest::prelude::*;

fn planar_chain(lengths: &[f64]) -> String {
    let mut s = String::from("<robot name=\"planar\">\n<link name=\"l0\"/>\n");
    for k in 0..lengths.len() {
        let x = if k == 0 { 0.0 } else { lengths[k - 1] };
        s += &format!(
            "<link name=\"l{}\"/>\n<joint name=\"j{k}\" type=\"continuous\"><parent link=\"l{k}\"/><child link=\"l{}\"/>\
             <origin xyz=\"{x} 0 0\"/><axis xyz=\"0 0 1\"/></joint>\n",
            k + 1,
            k + 1
        );
    }
    s += &format!(
        "<link name=\"tip\"/><joint name=\"tip_mount\" type=\"fixed\"><parent link=\"l{}\"/><child link=\"tip\"/>\
         <origin xyz=\"{} 0 0\"/></joint>\n</robot>",
        lengths.len(),
        lengths[lengths.len() - 1]
    );
    s
}

fn closed_form(lengths: &[f64], q: &[f64]) -> (f64, f64) {
    let mut angle = 0.0;
    let (mut x, mut y) = (0.0, 0.0);
    for (l, t) in lengths.iter().zip(q) {
        angle += t;
        x += l * angle.cos();
        y += l * angle.sin();
    }
    (x, y)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn two_link_matches_closed_form(q in prop::collection::vec(-PI..PI, 2)) {
        let lengths = [0.7, 0.4];
        let robot: RobotModel = parse_urdf(&planar_chain(&lengths)).unwrap();
        let p = robot.link_pose(&q, "tip").unwrap().position;
        let (x, y) = closed_form(&lengths, &q);
        prop_assert!((p.x - x).abs() <= 1e-9 && (p.y - y).abs() <= 1e-9 && p.z.abs() <= 1e-9);
    }

    #[test]
    fn three_link_matches_closed_form(q in prop::collection::vec(-PI..PI, 3)) {
        let lengths = [0.5, 0.35, 0.2];
        let robot: RobotModel = parse_urdf(&planar_chain(&lengths)).unwrap();
        let p = robot.link_pose(&q, "tip").unwrap().position;
        let (x, y) = closed_form(&lengths, &q);
        prop_assert!((p.x - x).abs() <= 1e-9 && (p.y - y).abs() <= 1e-9 && p.z.abs() <= 1e-9);
    }

    #[test]
    fn base_rotation_is_equivariant(q in prop::collection::vec(-PI..PI, 3), delta in -PI..PI) {
        let robot: RobotModel = parse_urdf(&planar_chain(&[0.5, 0.35, 0.2])).unwrap();
        let p = robot.link_pose(&q, "tip").unwrap().position;
        let mut q2 = q.clone();
        q2[0] += delta;
        let p2 = robot.link_pose(&q2, "tip").unwrap().position;
        let (c, s) = (delta.cos(), delta.sin());
        prop_assert!((p2.x - (c * p.x - s * p.y)).abs() < 1e-12);
        prop_assert!((p2.y - (s * p.x + c * p.y)).abs() < 1e-12);
    }
}

#[derive(Debug, Clone)]
struct RandJoint {
    xyz: [f64; 3],
    rpy: [f64; 3],
    axis: [f64; 3],
    prismatic: bool,
}

fn rand_joint() -> impl Strategy<Value = RandJoint> {
    (
        prop::array::uniform3(-1.0..1.0f64),
        prop::array::uniform3(-PI..PI),
        prop::array::uniform3(-1.0..1.0f64).prop_filter("non-zero axis", |a| a.iter().map(|v| v * v).sum::<f64>() > 1e-2),
        prop::bool::weighted(0.2),
    )
        .prop_map(|(xyz, rpy, axis, prismatic)| RandJoint { xyz, rpy, axis, prismatic })
}

fn serial_urdf(joints: &[RandJoint]) -> String {
    let mut s = String::from("<robot name=\"r\"><link name=\"l0\"/>");
    for (k, j) in joints.iter().enumerate() {
        let kind = if j.prismatic { "prismatic" } else { "revolute" };
        s += &format!(
            "<link name=\"l{n}\"/><joint name=\"j{k}\" type=\"{kind}\"><parent link=\"l{k}\"/><child link=\"l{n}\"/>\
             <origin xyz=\"{} {} {}\" rpy=\"{} {} {}\"/><axis xyz=\"{} {} {}\"/><limit lower=\"-4\" upper=\"4\"/></joint>",
            j.xyz[0], j.xyz[1], j.xyz[2], j.rpy[0], j.rpy[1], j.rpy[2], j.axis[0], j.axis[1], j.axis[2],
            n = k + 1
        );
    }
    s + "</robot>"
}

/// Same chain composed with nalgebra isometries.
fn nalgebra_fk(joints: &[RandJoint], q: &[f64]) -> na::Isometry3<f64> {
    let mut pose = na::Isometry3::identity();
    for (j, v) in joints.iter().zip(q) {
        let origin = na::Isometry3::from_parts(
            na::Translation3::new(j.xyz[0], j.xyz[1], j.xyz[2]),
            na::UnitQuaternion::from_euler_angles(j.rpy[0], j.rpy[1], j.rpy[2]),
        );
        let axis = na::Unit::new_normalize(na::Vector3::new(j.axis[0], j.axis[1], j.axis[2]));
        let motion = if j.prismatic {
            na::Isometry3::translation(axis.x * v, axis.y * v, axis.z * v)
        } else {
            na::Isometry3::from_parts(na::Translation3::identity(), na::UnitQuaternion::from_axis_angle(&axis, *v))
        };
        pose = pose * origin * motion;
    }
    pose
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn spatial_chain_matches_nalgebra(
        (joints, q) in prop::collection::vec(rand_joint(), 1..7)
            .prop_flat_map(|j| { let n = j.len(); (Just(j), prop::collection::vec(-3.0..3.0f64, n)) })
    ) {
        let robot: RobotModel = parse_urdf(&serial_urdf(&joints)).unwrap();
        let pose = robot.link_pose(&q, &format!("l{}", joints.len())).unwrap();
        let oracle = nalgebra_fk(&joints, &q);
        let t = oracle.translation.vector;
        prop_assert!(pose.position.distance(&Vec3::new(t.x, t.y, t.z)) < 1e-9);
        let o = oracle.rotation;
        let ours = na::UnitQuaternion::from_quaternion(na::Quaternion::new(
            pose.orientation.w(), pose.orientation.x(), pose.orientation.y(), pose.orientation.z(),
        ));
        prop_assert!(ours.angle_to(&o) < 1e-9);
    }
}

#[test]
fn root_and_zero_configuration_are_exact() {
    let robot: RobotModel = parse_urdf(&planar_chain(&[1.0, 1.0])).unwrap();
    let fk = robot.forward_kinematics(&[0.0, 0.0]).unwrap();
    assert_eq!(fk["l0"].position, Vec3::zeros());
    assert_eq!(fk["tip"].position, Vec3::new(2.0, 0.0, 0.0));
    assert_eq!(fk["l2"].position, Vec3::new(1.0, 0.0, 0.0));
}

#[test]
fn round_trip_through_urdf_text() {
    let joints: Vec<RandJoint> = (0..4)
        .map(|k| RandJoint {
            xyz: [0.1 * k as f64, -0.2, 0.3],
            rpy: [0.3, -1.2 + k as f64, 2.0],
            axis: [0.0, 1.0, k as f64],
            prismatic: k == 2,
        })
        .collect();
    let robot: RobotModel = parse_urdf(&serial_urdf(&joints)).unwrap();
    let again: RobotModel = parse_urdf(&robot.to_urdf()).unwrap();
    let q = [0.4, -1.0, 0.2, 2.5];
    let a = robot.link_pose(&q, "l4").unwrap();
    let b = again.link_pose(&q, "l4").unwrap();
    assert!(a.position.distance(&b.position) < 1e-12);
    assert!(a.orientation.geodesic_distance(&b.orientation) < 1e-7);
}
