//! Geometric comparison primitives: position traces with cone glyphs,
//! quaternion traces, arc lengths and distance ribbons between traces.

use serde::Serialize;
use thiserror::Error;

use crate::geometry::{UnitQuaternion, Vec3};
use crate::motion::{PoseTrajectory, Trajectory};
use crate::scalar::{clamp, Real};
use crate::warp::WarpingPath;

/// Cone scale bounds, as multiples of the base scale.
pub const CONE_SCALE_MIN: f64 = 0.2;
pub const CONE_SCALE_MAX: f64 = 3.0;
/// Base cone size as a fraction of the trace bounding-box diagonal.
pub const CONE_BASE_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceError {
    #[error("position trace needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("cone stride must be positive, got {0}")]
    InvalidStride(f64),
    #[error("correspondence ({i}, {j}) outside traces of length {len_a} and {len_b}")]
    IndexOutOfRange {
        i: usize,
        j: usize,
        len_a: usize,
        len_b: usize,
    },
}

/// Timestamped 3D polyline.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real + Serialize"))]
pub struct TracePolyline<T> {
    pub timestamps: Vec<T>,
    pub points: Vec<Vec3<T>>,
}

impl<T: Real> TracePolyline<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Direction/speed marker along a position trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real + Serialize"))]
pub struct ConeGlyph<T> {
    pub t: T,
    pub position: Vec3<T>,
    pub direction: Vec3<T>,
    pub scale: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real + Serialize"))]
pub struct PositionTrace<T> {
    pub polyline: TracePolyline<T>,
    pub cones: Vec<ConeGlyph<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeOptions<T> {
    /// Time between consecutive cones, seconds.
    pub stride: T,
    /// Cone size at the reference speed. Defaults to 1% of the bounding-box diagonal.
    pub base_scale: Option<T>,
    /// Speed drawn at base size. Defaults to the trajectory's mean speed.
    pub reference_speed: Option<T>,
}

impl<T: Real> ConeOptions<T> {
    pub fn with_stride(stride: T) -> Self {
        ConeOptions {
            stride,
            base_scale: None,
            reference_speed: None,
        }
    }
}

fn bbox_diagonal<T: Real>(points: &[Vec3<T>]) -> T {
    let mut lo = points[0];
    let mut hi = points[0];
    for p in points {
        lo = Vec3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z));
        hi = Vec3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z));
    }
    (hi - lo).norm()
}

/// Position trace of `traj` with cones every `stride` seconds.
pub fn position_trace<T: Real>(
    traj: &PoseTrajectory<T>,
    stride: T,
) -> Result<PositionTrace<T>, TraceError> {
    position_trace_with(traj, &ConeOptions::with_stride(stride))
}

/// Position trace with explicit cone calibration.
///
/// Cones sit at `t0 + k·stride`. Each points along the velocity of the
/// segment it lies on and is scaled by `base · clamp(|v| / v_ref, 0.2, 3)`,
/// so larger cones mean faster motion. Instants with zero velocity get no cone.
pub fn position_trace_with<T: Real>(
    traj: &PoseTrajectory<T>,
    options: &ConeOptions<T>,
) -> Result<PositionTrace<T>, TraceError> {
    if traj.len() < 2 {
        return Err(TraceError::TooFewSamples(traj.len()));
    }
    if !(options.stride > T::zero() && options.stride.is_finite()) {
        return Err(TraceError::InvalidStride(options.stride.as_f64()));
    }
    let ts = traj.timestamps();
    let points = traj.positions();
    let polyline = TracePolyline {
        timestamps: ts.to_vec(),
        points: points.clone(),
    };

    let v_ref = options
        .reference_speed
        .unwrap_or_else(|| trace_arc_length(&polyline) / traj.duration());
    let base = options
        .base_scale
        .unwrap_or_else(|| T::lit(CONE_BASE_FRACTION) * bbox_diagonal(&points));
    let mut cones = Vec::new();
    if !(v_ref > T::zero() && base > T::zero()) {
        return Ok(PositionTrace { polyline, cones });
    }

    let (t0, t_end) = (ts[0], ts[ts.len() - 1]);
    let stationary = T::epsilon() * v_ref;
    let mut seg = 0;
    for k in 0usize.. {
        let t = t0 + T::from_usize_lossy(k) * options.stride;
        if t > t_end + T::time_eps() {
            break;
        }
        let t = t.min(t_end);
        while seg + 2 < ts.len() && ts[seg + 1] <= t {
            seg += 1;
        }
        let dt = ts[seg + 1] - ts[seg];
        let velocity = (points[seg + 1] - points[seg]) * dt.recip();
        let speed = velocity.norm();
        if speed <= stationary {
            continue;
        }
        let s = clamp((t - ts[seg]) / dt, T::zero(), T::one());
        cones.push(ConeGlyph {
            t,
            position: points[seg].lerp(&points[seg + 1], s),
            direction: velocity * speed.recip(),
            scale: base * clamp(speed / v_ref, T::lit(CONE_SCALE_MIN), T::lit(CONE_SCALE_MAX)),
        });
    }
    Ok(PositionTrace { polyline, cones })
}

/// Projects a rotation onto the `w = 0` hyperplane.
///
/// After hemisphere normalization the result is `sin(θ/2)·axis`, θ ∈ [0, π]:
/// collinear with the rotation axis, longer for larger rotations.
pub fn project_quaternion<T: Real>(q: &UnitQuaternion<T>) -> Vec3<T> {
    q.hemisphere_normalized().vector_part()
}

/// Quaternion trace: signs made continuous along the sequence (seeded by the
/// hemisphere of the first sample), then the `w` component dropped.
pub fn quaternion_trace<T: Real>(traj: &PoseTrajectory<T>) -> TracePolyline<T> {
    let mut prev: Option<UnitQuaternion<T>> = None;
    let points = traj
        .poses()
        .iter()
        .map(|p| {
            let q = match prev {
                None => p.orientation.hemisphere_normalized(),
                Some(last) if p.orientation.dot(&last) < T::zero() => -p.orientation,
                Some(_) => p.orientation,
            };
            prev = Some(q);
            q.vector_part()
        })
        .collect();
    TracePolyline {
        timestamps: traj.timestamps().to_vec(),
        points,
    }
}

/// Sum of segment lengths; zero for fewer than two points.
pub fn trace_arc_length<T: Real>(polyline: &TracePolyline<T>) -> T {
    polyline
        .points
        .windows(2)
        .map(|w| w[0].distance(&w[1]))
        .sum()
}

/// Band connecting corresponding points of two traces.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real + Serialize"))]
pub struct DistanceRibbon<T> {
    /// Corners `(a_i, b_j, b_j', a_i')` for consecutive correspondences.
    pub quads: Vec<[Vec3<T>; 4]>,
    /// Distance along each quad's leading edge `‖a_i − b_j‖`.
    pub distances: Vec<T>,
}

pub fn distance_ribbon<T: Real>(
    a: &TracePolyline<T>,
    b: &TracePolyline<T>,
    path: &WarpingPath<T>,
) -> Result<DistanceRibbon<T>, TraceError> {
    let (na, nb) = (a.len(), b.len());
    if let Some((i, j)) = path.pairs().iter().find(|(i, j)| *i >= na || *j >= nb) {
        return Err(TraceError::IndexOutOfRange {
            i: *i,
            j: *j,
            len_a: na,
            len_b: nb,
        });
    }
    let (quads, distances) = path
        .pairs()
        .windows(2)
        .map(|w| {
            let (i0, j0) = w[0];
            let (i1, j1) = w[1];
            let quad = [a.points[i0], b.points[j0], b.points[j1], a.points[i1]];
            (quad, a.points[i0].distance(&b.points[j0]))
        })
        .unzip();
    Ok(DistanceRibbon { quads, distances })
}
