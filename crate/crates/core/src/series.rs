//! Scalar time series: derivatives, smoothing filters, difference series and
//! per-motion summary metrics.
//!
//! The metric formulas in [`motion_metrics`] are this crate's own choices:
//! path length for efficiency, RMS jerk for smoothness and RMS distance to a
//! reference polyline for accuracy.

use serde::Serialize;
use thiserror::Error;

use crate::geometry::Vec3;
use crate::motion::{uniform_grid, JointTrajectory, Motion, MotionError, PoseTrajectory, Trajectory};
use crate::scalar::Real;
use crate::urdf::{KinematicsError, RobotModel};
use crate::warp::WarpingPath;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeriesError {
    #[error("series `{name}` needs at least {needed} samples, got {got}")]
    TooShort {
        name: String,
        needed: usize,
        got: usize,
    },
    #[error("derivative order must be 1, 2 or 3, got {0}")]
    InvalidOrder(usize),
    #[error("invalid filter: {0}")]
    InvalidWindow(String),
    #[error("series spans differ: [{a0}, {a1}] vs [{b0}, {b1}]")]
    SpanMismatch { a0: f64, a1: f64, b0: f64, b1: f64 },
    #[error("correspondence ({i}, {j}) outside series of length {len_a} and {len_b}")]
    IndexOutOfRange {
        i: usize,
        j: usize,
        len_a: usize,
        len_b: usize,
    },
    #[error("timestamps of `{0}` are not strictly increasing")]
    NonMonotoneTime(String),
    #[error("{0}")]
    Shape(String),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Motion(#[from] MotionError),
}

/// Named scalar signal over time.
///
/// Timestamps are non-decreasing. They are strictly increasing for every
/// series sampled from a trajectory; only differences taken along a warping
/// path repeat a timestamp (one sample per path pair).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarSeries<T> {
    pub name: String,
    pub unit: String,
    pub timestamps: Vec<T>,
    pub values: Vec<T>,
}

impl<T: Real> ScalarSeries<T> {
    pub fn new(
        name: impl Into<String>,
        unit: impl Into<String>,
        timestamps: Vec<T>,
        values: Vec<T>,
    ) -> Result<Self, SeriesError> {
        let name = name.into();
        if timestamps.len() != values.len() {
            return Err(SeriesError::Shape(format!(
                "series `{name}`: {} timestamps but {} values",
                timestamps.len(),
                values.len()
            )));
        }
        if timestamps.windows(2).any(|w| !(w[1] >= w[0])) {
            return Err(SeriesError::NonMonotoneTime(name));
        }
        Ok(ScalarSeries {
            name,
            unit: unit.into(),
            timestamps,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn strictly_increasing(&self) -> Result<(), SeriesError> {
        if self.timestamps.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(SeriesError::NonMonotoneTime(self.name.clone()));
        }
        Ok(())
    }

    /// Linear interpolation at `t` within the series span.
    fn value_at(&self, t: T) -> Result<T, SeriesError> {
        match crate::motion::locate(&self.timestamps, t)? {
            crate::motion::Located::Exact(i) => Ok(self.values[i]),
            crate::motion::Located::Between(i, s) => {
                Ok(self.values[i] + (self.values[i + 1] - self.values[i]) * s)
            }
        }
    }

    fn mean_rate(&self) -> Option<T> {
        let n = self.len();
        if n < 2 {
            return None;
        }
        let d = self.timestamps[n - 1] - self.timestamps[0];
        (d > T::zero()).then(|| T::from_usize_lossy(n - 1) / d)
    }

    /// Resamples onto `first + k / rate` plus the last timestamp.
    pub fn resample_uniform(&self, rate: T) -> Result<Self, SeriesError> {
        self.strictly_increasing()?;
        if self.len() < 2 {
            return Err(SeriesError::TooShort {
                name: self.name.clone(),
                needed: 2,
                got: self.len(),
            });
        }
        let grid = uniform_grid(self.timestamps[0], self.timestamps[self.len() - 1], rate)?;
        let values = grid
            .iter()
            .map(|t| self.value_at(*t))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ScalarSeries {
            name: self.name.clone(),
            unit: self.unit.clone(),
            timestamps: grid,
            values,
        })
    }
}

/// One differentiation pass.
///
/// Interior points use `(v[i+1] − v[i−1]) / (t[i+1] − t[i−1])`. Endpoints use
/// the three-point one-sided stencil (two-point when only two samples exist),
/// which keeps quadratics exact at the boundary too.
fn differentiate<T: Real>(ts: &[T], vs: &[T]) -> Vec<T> {
    let n = vs.len();
    if n == 2 {
        let d = (vs[1] - vs[0]) / (ts[1] - ts[0]);
        return vec![d, d];
    }
    let mut out = Vec::with_capacity(n);
    let (h1, h2) = (ts[1] - ts[0], ts[2] - ts[1]);
    let two = T::lit(2.0);
    out.push(
        (two * h1 + h2) / (h1 * (h1 + h2)) * (vs[1] - vs[0]) - h1 / (h2 * (h1 + h2)) * (vs[2] - vs[1]),
    );
    for i in 1..n - 1 {
        out.push((vs[i + 1] - vs[i - 1]) / (ts[i + 1] - ts[i - 1]));
    }
    let (g1, g2) = (ts[n - 1] - ts[n - 2], ts[n - 2] - ts[n - 3]);
    out.push(
        (two * g1 + g2) / (g1 * (g1 + g2)) * (vs[n - 1] - vs[n - 2])
            - g1 / (g2 * (g1 + g2)) * (vs[n - 2] - vs[n - 3]),
    );
    out
}

/// Velocity (1), acceleration (2) or jerk (3) by repeated differentiation.
pub fn derivative<T: Real>(series: &ScalarSeries<T>, order: usize) -> Result<ScalarSeries<T>, SeriesError> {
    if !(1..=3).contains(&order) {
        return Err(SeriesError::InvalidOrder(order));
    }
    if series.len() < order + 1 {
        return Err(SeriesError::TooShort {
            name: series.name.clone(),
            needed: order + 1,
            got: series.len(),
        });
    }
    series.strictly_increasing()?;
    let mut values = series.values.clone();
    for _ in 0..order {
        values = differentiate(&series.timestamps, &values);
    }
    let unit = match order {
        1 => format!("{}/s", series.unit),
        k => format!("{}/s^{k}", series.unit),
    };
    Ok(ScalarSeries {
        name: format!("{}'{}", series.name, "'".repeat(order - 1)),
        unit,
        timestamps: series.timestamps.clone(),
        values,
    })
}

/// Smoothing filter menu.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Filter<T> {
    /// Centred moving average over an odd number of samples, truncated at the ends.
    MovingAverage { window: usize },
    /// `s_i = α·v_i + (1 − α)·s_{i−1}`, `s_0 = v_0`.
    Exponential { alpha: T },
}

impl<T: Real> Filter<T> {
    fn tag(&self) -> String {
        match self {
            Filter::MovingAverage { window } => format!("ma{window}"),
            Filter::Exponential { alpha } => format!("ema{alpha}"),
        }
    }
}

pub fn smooth<T: Real>(series: &ScalarSeries<T>, filter: Filter<T>) -> Result<ScalarSeries<T>, SeriesError> {
    let v = &series.values;
    let values = match filter {
        Filter::MovingAverage { window } => {
            if window == 0 || window % 2 == 0 {
                return Err(SeriesError::InvalidWindow(format!(
                    "moving-average window must be odd and >= 1, got {window}"
                )));
            }
            let half = window / 2;
            (0..v.len())
                .map(|i| {
                    let lo = i.saturating_sub(half);
                    let hi = (i + half).min(v.len() - 1);
                    let slice = &v[lo..=hi];
                    // anchored at the centre sample so constants come out bit-exact
                    let dev: T = slice.iter().map(|x| *x - v[i]).sum();
                    let mean = v[i] + dev / T::from_usize_lossy(slice.len());
                    let (mn, mx) = slice
                        .iter()
                        .fold((v[i], v[i]), |(a, b), x| (a.min(*x), b.max(*x)));
                    mean.max(mn).min(mx)
                })
                .collect()
        }
        Filter::Exponential { alpha } => {
            if !(alpha > T::zero() && alpha <= T::one()) {
                return Err(SeriesError::InvalidWindow(format!(
                    "exponential alpha must be in (0, 1], got {alpha}"
                )));
            }
            let mut out = Vec::with_capacity(v.len());
            let mut s = match v.first() {
                Some(x) => *x,
                None => T::zero(),
            };
            for x in v {
                s += alpha * (*x - s);
                out.push(s);
            }
            out
        }
    };
    Ok(ScalarSeries {
        name: format!("{}[{}]", series.name, filter.tag()),
        unit: series.unit.clone(),
        timestamps: series.timestamps.clone(),
        values,
    })
}

/// How two series are put in correspondence.
#[derive(Debug, Clone, Copy)]
pub enum Alignment<'a, T> {
    /// One output sample per path pair, stamped with the `a` timestamp.
    Path(&'a WarpingPath<T>),
    /// Both resampled to the coarser of their mean rates over a shared span.
    Resampled,
}

fn check_path<T: Real>(path: &WarpingPath<T>, len_a: usize, len_b: usize) -> Result<(), SeriesError> {
    match path.pairs().iter().find(|(i, j)| *i >= len_a || *j >= len_b) {
        Some((i, j)) => Err(SeriesError::IndexOutOfRange {
            i: *i,
            j: *j,
            len_a,
            len_b,
        }),
        None => Ok(()),
    }
}

fn shared_grid<T: Real>(ta: &[T], tb: &[T], rate_a: Option<T>, rate_b: Option<T>) -> Result<Vec<T>, SeriesError> {
    let (a0, a1) = (ta[0], ta[ta.len() - 1]);
    let (b0, b1) = (tb[0], tb[tb.len() - 1]);
    let eps = T::time_eps();
    if (a0 - b0).abs() > eps || (a1 - b1).abs() > eps {
        return Err(SeriesError::SpanMismatch {
            a0: a0.as_f64(),
            a1: a1.as_f64(),
            b0: b0.as_f64(),
            b1: b1.as_f64(),
        });
    }
    match (rate_a, rate_b) {
        (Some(ra), Some(rb)) => Ok(uniform_grid(a0, a1.min(b1), ra.min(rb))?),
        _ => Ok(vec![a0]),
    }
}

/// `a − b` under the given alignment.
pub fn difference_series<T: Real>(
    a: &ScalarSeries<T>,
    b: &ScalarSeries<T>,
    alignment: Alignment<'_, T>,
) -> Result<ScalarSeries<T>, SeriesError> {
    let name = format!("{} - {}", a.name, b.name);
    match alignment {
        Alignment::Path(path) => {
            check_path(path, a.len(), b.len())?;
            let (ts, vs) = path
                .pairs()
                .iter()
                .map(|(i, j)| (a.timestamps[*i], a.values[*i] - b.values[*j]))
                .unzip();
            ScalarSeries::new(name, a.unit.clone(), ts, vs)
        }
        Alignment::Resampled => {
            for s in [a, b] {
                if s.is_empty() {
                    return Err(SeriesError::TooShort {
                        name: s.name.clone(),
                        needed: 1,
                        got: 0,
                    });
                }
                s.strictly_increasing()?;
            }
            let grid = shared_grid(&a.timestamps, &b.timestamps, a.mean_rate(), b.mean_rate())?;
            let vs = grid
                .iter()
                .map(|t| Ok(a.value_at(*t)? - b.value_at(*t)?))
                .collect::<Result<Vec<_>, SeriesError>>()?;
            ScalarSeries::new(name, a.unit.clone(), grid, vs)
        }
    }
}

/// Distance between corresponding positions of two pose trajectories.
pub fn cartesian_distance_series<T: Real>(
    a: &PoseTrajectory<T>,
    b: &PoseTrajectory<T>,
    alignment: Alignment<'_, T>,
) -> Result<ScalarSeries<T>, SeriesError> {
    let name = "distance";
    match alignment {
        Alignment::Path(path) => {
            check_path(path, a.len(), b.len())?;
            let (ts, vs) = path
                .pairs()
                .iter()
                .map(|(i, j)| {
                    (
                        a.timestamps()[*i],
                        a.poses()[*i].position.distance(&b.poses()[*j].position),
                    )
                })
                .unzip();
            ScalarSeries::new(name, "m", ts, vs)
        }
        Alignment::Resampled => {
            let grid = shared_grid(a.timestamps(), b.timestamps(), a.mean_rate(), b.mean_rate())?;
            let vs = grid
                .iter()
                .map(|t| {
                    let pa = a.interpolate_at(*t)?.position;
                    let pb = b.interpolate_at(*t)?.position;
                    Ok(pa.distance(&pb))
                })
                .collect::<Result<Vec<_>, SeriesError>>()?;
            ScalarSeries::new(name, "m", grid, vs)
        }
    }
}

/// Position of one joint over time (radians or meters).
pub fn joint_series<T: Real>(
    joints: &JointTrajectory<T>,
    model: &RobotModel<T>,
    joint: usize,
) -> Result<ScalarSeries<T>, SeriesError> {
    let spec = model.actuated_joints().nth(joint).ok_or_else(|| {
        SeriesError::Shape(format!("joint index {joint} out of range (dof {})", model.dof()))
    })?;
    let column = joints
        .joint_names()
        .iter()
        .position(|n| *n == spec.name)
        .ok_or_else(|| KinematicsError::JointNameMismatch {
            expected: model.actuated_joint_names(),
            found: joints.joint_names().to_vec(),
        })?;
    let unit = match spec.kind {
        crate::urdf::JointKind::Prismatic => "m",
        _ => "rad",
    };
    ScalarSeries::new(
        spec.name.clone(),
        unit,
        joints.timestamps().to_vec(),
        joints.joint_values(column),
    )
}

/// One Cartesian component (0 = x, 1 = y, 2 = z) of a pose track.
pub fn position_component_series<T: Real>(
    track: &PoseTrajectory<T>,
    axis: usize,
    name: &str,
) -> Result<ScalarSeries<T>, SeriesError> {
    if axis > 2 {
        return Err(SeriesError::Shape(format!("axis {axis} out of range")));
    }
    let label = ["x", "y", "z"][axis];
    ScalarSeries::new(
        format!("{name}.{label}"),
        "m",
        track.timestamps().to_vec(),
        track.poses().iter().map(|p| p.position.component(axis)).collect(),
    )
}

/// Speed along a pose track, from differentiated position components.
pub fn speed_series<T: Real>(track: &PoseTrajectory<T>, name: &str) -> Result<ScalarSeries<T>, SeriesError> {
    let v = vector_derivative(track, 1)?;
    ScalarSeries::new(
        format!("{name}.speed"),
        "m/s",
        track.timestamps().to_vec(),
        v.iter().map(|d| d.norm()).collect(),
    )
}

fn vector_derivative<T: Real>(track: &PoseTrajectory<T>, order: usize) -> Result<Vec<Vec3<T>>, SeriesError> {
    let comps = (0..3)
        .map(|axis| derivative(&position_component_series(track, axis, "p")?, order))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((0..track.len())
        .map(|i| Vec3::new(comps[0].values[i], comps[1].values[i], comps[2].values[i]))
        .collect())
}

/// Summary numbers for one motion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MotionMetrics<T> {
    /// Seconds.
    pub duration: T,
    /// End-effector path length, meters.
    pub ee_path_length: T,
    /// RMS magnitude of end-effector jerk, m/s³ (0 below four samples).
    pub jerk_rms: T,
    /// RMS distance from each end-effector sample to the reference polyline, meters.
    pub tracking_error_rms: Option<T>,
}

fn point_segment_distance<T: Real>(p: &Vec3<T>, a: &Vec3<T>, b: &Vec3<T>) -> T {
    let ab = *b - *a;
    let len2 = ab.norm_squared();
    if len2 == T::zero() {
        return p.distance(a);
    }
    let s = ((*p - *a).dot(&ab) / len2).max(T::zero()).min(T::one());
    p.distance(&a.lerp(b, s))
}

/// Distance from `p` to the polyline through `points`.
pub fn polyline_distance<T: Real>(p: &Vec3<T>, points: &[Vec3<T>]) -> T {
    match points {
        [] => T::infinity(),
        [only] => p.distance(only),
        _ => points
            .windows(2)
            .map(|w| point_segment_distance(p, &w[0], &w[1]))
            .fold(T::infinity(), T::min),
    }
}

pub fn motion_metrics<T: Real>(
    motion: &Motion<T>,
    model: &RobotModel<T>,
    ee_link: &str,
    reference_path: Option<&PoseTrajectory<T>>,
) -> Result<MotionMetrics<T>, SeriesError> {
    let ee = model.link_pose_trajectory(&motion.joints, ee_link)?;
    let positions = ee.positions();
    let ee_path_length = positions.windows(2).map(|w| w[0].distance(&w[1])).sum();
    let jerk_rms = if ee.len() >= 4 {
        let jerk = vector_derivative(&ee, 3)?;
        let ms = jerk.iter().map(|j| j.norm_squared()).sum::<T>() / T::from_usize_lossy(jerk.len());
        ms.sqrt()
    } else {
        T::zero()
    };
    let tracking_error_rms = reference_path.map(|reference| {
        let refp = reference.positions();
        let ms = positions
            .iter()
            .map(|p| {
                let d = polyline_distance(p, &refp);
                d * d
            })
            .sum::<T>()
            / T::from_usize_lossy(positions.len());
        ms.sqrt()
    });
    Ok(MotionMetrics {
        duration: motion.duration(),
        ee_path_length,
        jerk_rms,
        tracking_error_rms,
    })
}
