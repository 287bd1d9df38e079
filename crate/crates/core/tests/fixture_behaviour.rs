use mocomp_core::fixtures::{
    piecewise_speed_pair, time_scaled_pair, FixtureCase, CLAMPED_JOINT, CLAMP_END, CLAMP_START, FIXTURE_EE_LINK,
    FIXTURE_RATE, TELEOP_DELAY,
};
use mocomp_core::io::LoadedMotion;
use mocomp_core::motion::Trajectory;
use mocomp_core::series::{cartesian_distance_series, Alignment};
use mocomp_core::trace::{quaternion_trace, trace_arc_length};
use mocomp_core::urdf::{LimitSide, DEFAULT_LIMIT_MARGIN};
use mocomp_core::warp::{
    dtw_align, relative_speed, remap_time, warping_curve, AlignInput, CostTerm, DiagonalSide, DtwOptions, LocalCost,
    Subject,
};
use mocomp_core::WarpingPath;

fn align(a: &LoadedMotion, b: &LoadedMotion) -> WarpingPath {
    dtw_align(
        &AlignInput::from_motion(&a.motion, &a.robot),
        &AlignInput::from_motion(&b.motion, &b.robot),
        &LocalCost::Single(CostTerm::JointL2),
        &DtwOptions::default(),
    )
    .unwrap()
}

fn sign_changes(v: &[f64]) -> usize {
    let signs: Vec<bool> = v.iter().filter(|x| **x != 0.0).map(|x| *x > 0.0).collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

#[test]
fn self_alignment() {
    for m in FixtureCase::A.motions() {
        let path = align(&m, &m);
        assert!(path.total_cost() <= 1e-12);
        assert!(path.is_diagonal());
        assert_eq!(warping_curve(&path).side(), DiagonalSide::On);
        for t in m.motion.joints.timestamps() {
            assert!((remap_time(&path, *t).unwrap() - t).abs() <= 1.0 / FIXTURE_RATE);
        }
    }
}

#[test]
fn double_speed_pair() {
    let (slow, fast) = time_scaled_pair(4.0, 2.0);
    let path = align(&fast, &slow);
    assert_eq!(warping_curve(&path).side(), DiagonalSide::Above);
    assert_eq!(warping_curve(&align(&slow, &fast)).side(), DiagonalSide::Below);
    for t in fast.motion.joints.timestamps() {
        assert!((remap_time(&path, *t).unwrap() - 2.0 * t).abs() <= 2.0 / FIXTURE_RATE, "t = {t}");
    }
    let speed = relative_speed(&path, Subject::A).unwrap();
    for (r, c) in speed.ratio.iter().zip(&speed.color_scalar) {
        assert!((1.9..=2.1).contains(r), "ratio {r}");
        assert!(*c > 0.0);
    }
    let other = relative_speed(&path, Subject::B).unwrap();
    assert!(other.color_scalar.iter().all(|c| *c < 0.0));
}

#[test]
fn piecewise_pair_changes_sign_once() {
    let (reference, variant) = piecewise_speed_pair(4.0);
    let path = align(&variant, &reference);
    let speed = relative_speed(&path, Subject::A).unwrap();
    assert_eq!(sign_changes(&speed.color_scalar), 1, "{:?}", speed.color_scalar);
    assert!(speed.color_scalar[0] > 0.0);
}

#[test]
fn clamped_joint_report() {
    let m = &FixtureCase::B.motions()[0];
    let spans = m.robot.joint_limit_violations(&m.motion.joints, DEFAULT_LIMIT_MARGIN).unwrap();
    assert_eq!(spans.len(), 1, "{spans:?}");
    assert_eq!(spans[0].joint, CLAMPED_JOINT);
    assert_eq!(spans[0].kind, LimitSide::AtLower);
    assert!((spans[0].start - CLAMP_START).abs() <= 1.0 / FIXTURE_RATE);
    assert!((spans[0].end - CLAMP_END).abs() <= 1.0 / FIXTURE_RATE);
}

#[test]
fn rotation_cases_order_by_arc_length() {
    let lengths: Vec<f64> = FixtureCase::A
        .motions()
        .iter()
        .map(|m| trace_arc_length(&quaternion_trace(&m.motion.object_tracks["bottle"])))
        .collect();
    assert!(lengths.windows(2).all(|w| w[1] > w[0]), "{lengths:?}");
    let ee: Vec<f64> = FixtureCase::A
        .motions()
        .iter()
        .map(|m| {
            let track = m.robot.link_pose_trajectory(&m.motion.joints, FIXTURE_EE_LINK).unwrap();
            trace_arc_length(&quaternion_trace(&track))
        })
        .collect();
    assert!(ee.windows(2).all(|w| w[1] > w[0]), "{ee:?}");
}

#[test]
fn teleop_delay_is_recovered() {
    let m = &FixtureCase::D.motions()[0];
    let operator = &m.motion.object_tracks["operator"];
    let ee = m.robot.link_pose_trajectory(&m.motion.joints, FIXTURE_EE_LINK).unwrap();
    let path = dtw_align_tracks(operator, &ee);
    // the robot reaches the operator's point TELEOP_DELAY later
    let mid = operator.timestamps()[operator.len() / 2];
    let lag = remap_time(&path, mid).unwrap() - mid;
    assert!((lag - TELEOP_DELAY).abs() <= 2.0 / FIXTURE_RATE, "lag {lag}");
    let aligned = cartesian_distance_series(operator, &ee, Alignment::Path(&path)).unwrap();
    assert!(aligned.values.iter().all(|d| *d < 0.01));
}

fn dtw_align_tracks(
    a: &mocomp_core::PoseTrajectory,
    b: &mocomp_core::PoseTrajectory,
) -> WarpingPath {
    mocomp_core::warp::align_sequences(
        &a.positions(),
        &b.positions(),
        a.timestamps(),
        b.timestamps(),
        &DtwOptions::default(),
        |p, q| p.distance(q),
    )
    .unwrap()
}
