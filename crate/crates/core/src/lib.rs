//! Robot motion comparison: kinematics, temporal alignment, traces,
//! time-series analytics and joint-space embedding.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod embed;
pub mod fixtures;
pub mod geometry;
pub mod io;
pub mod motion;
pub mod scalar;
pub mod series;
pub mod trace;
pub mod urdf;
pub mod warp;

pub use scalar::Real;

pub type Vec3 = geometry::Vec3<f64>;
pub type UnitQuaternion = geometry::UnitQuaternion<f64>;
pub type Pose = geometry::Pose<f64>;
pub type JointTrajectory = motion::JointTrajectory<f64>;
pub type PoseTrajectory = motion::PoseTrajectory<f64>;
pub type Motion = motion::Motion<f64>;
pub type RobotModel = urdf::RobotModel<f64>;
pub type WarpingPath = warp::WarpingPath<f64>;
pub type ScalarSeries = series::ScalarSeries<f64>;
pub type Embedding = embed::Embedding<f64>;

pub type Vec3f32 = geometry::Vec3<f32>;
pub type UnitQuaternionF32 = geometry::UnitQuaternion<f32>;
pub type Motion32 = motion::Motion<f32>;
pub type JointTrajectory32 = motion::JointTrajectory<f32>;
pub type RobotModel32 = urdf::RobotModel<f32>;
