//! Dynamic time warping between two motions and the encodings built on it:
//! warping curves, relative-speed colour scalars and scrubber time remapping.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{UnitQuaternion, Vec3};
use crate::motion::{JointTrajectory, Motion, MotionError, Trajectory};
use crate::scalar::{clamp, Real};
use crate::urdf::{KinematicsError, RobotModel};

/// Half-width, in subject samples, of the window used for relative speed.
pub const SPEED_WINDOW_HALF: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WarpError {
    #[error("dimension mismatch: {a} vs {b}")]
    DimensionMismatch { a: usize, b: usize },
    #[error("cannot align an empty sequence")]
    EmptyMotion,
    #[error("path has a single pair")]
    DegeneratePath,
    #[error("time {t} outside span [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },
    #[error("cost weights must be finite, non-negative and not all zero")]
    InvalidWeights,
    #[error("no admissible path inside the window")]
    NoPath,
    #[error("invalid warping path: {0}")]
    InvalidPath(String),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Motion(#[from] MotionError),
}

/// Per-pair distance terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostTerm {
    /// `‖ξa(i) − ξb(j)‖₂` in joint space.
    JointL2,
    /// Euclidean distance between end-effector positions.
    #[serde(alias = "ee")]
    EePosition,
    /// `2 acos(|⟨qa, qb⟩|)` between end-effector orientations.
    #[serde(alias = "quat")]
    QuaternionGeodesic,
}

/// Local cost used inside DTW: one term or a weighted sum of terms.
///
/// JSON form: `"joint_l2"` for a single term, or
/// `[{"term": "ee_position", "weight": 0.5}, ...]` for a weighted sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
#[serde(bound(serialize = "T: Serialize + Copy", deserialize = "T: Deserialize<'de>"))]
pub enum LocalCost<T> {
    Single(CostTerm),
    WeightedSum(#[serde(with = "weighted_terms")] Vec<(CostTerm, T)>),
}

mod weighted_terms {
    use super::CostTerm;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Term<T> {
        term: CostTerm,
        weight: T,
    }

    pub fn serialize<S: Serializer, T: Serialize + Copy>(v: &[(CostTerm, T)], s: S) -> Result<S::Ok, S::Error> {
        let terms: Vec<Term<T>> = v.iter().map(|(term, weight)| Term { term: *term, weight: *weight }).collect();
        terms.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>, T: Deserialize<'de>>(d: D) -> Result<Vec<(CostTerm, T)>, D::Error> {
        let terms: Vec<Term<T>> = Vec::deserialize(d)?;
        Ok(terms.into_iter().map(|t| (t.term, t.weight)).collect())
    }
}

impl<T: Real> LocalCost<T> {
    fn terms(&self) -> Result<Cow<'_, [(CostTerm, T)]>, WarpError> {
        match self {
            LocalCost::Single(t) => Ok(Cow::Owned(vec![(*t, T::one())])),
            LocalCost::WeightedSum(terms) => {
                let valid = !terms.is_empty()
                    && terms.iter().all(|(_, w)| w.is_finite() && *w >= T::zero())
                    && terms.iter().any(|(_, w)| *w > T::zero());
                if valid {
                    Ok(Cow::Borrowed(terms))
                } else {
                    Err(WarpError::InvalidWeights)
                }
            }
        }
    }

    fn needs(&self, term: CostTerm) -> bool {
        match self {
            LocalCost::Single(t) => *t == term,
            LocalCost::WeightedSum(terms) => terms.iter().any(|(t, w)| *t == term && *w > T::zero()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DtwOptions {
    /// Sakoe-Chiba band radius in samples; widened to `|len_a − len_b|` so a
    /// path always exists. `None` means unconstrained.
    pub window: Option<usize>,
}

/// Monotone correspondence between the samples of two sequences.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WarpingPath<T> {
    pairs: Vec<(usize, usize)>,
    total_cost: T,
    timestamps_a: Vec<T>,
    timestamps_b: Vec<T>,
}

impl<T: Real> WarpingPath<T> {
    /// Checks boundary, step and index invariants.
    pub fn new(
        pairs: Vec<(usize, usize)>,
        total_cost: T,
        timestamps_a: Vec<T>,
        timestamps_b: Vec<T>,
    ) -> Result<Self, WarpError> {
        let (na, nb) = (timestamps_a.len(), timestamps_b.len());
        if na == 0 || nb == 0 {
            return Err(WarpError::EmptyMotion);
        }
        let bad = |m: String| Err(WarpError::InvalidPath(m));
        if pairs.first() != Some(&(0, 0)) {
            return bad("path must start at (0, 0)".into());
        }
        if pairs.last() != Some(&(na - 1, nb - 1)) {
            return bad(format!("path must end at ({}, {})", na - 1, nb - 1));
        }
        for w in pairs.windows(2) {
            let (di, dj) = (w[1].0.wrapping_sub(w[0].0), w[1].1.wrapping_sub(w[0].1));
            if !matches!((di, dj), (1, 0) | (0, 1) | (1, 1)) {
                return bad(format!("illegal step {:?} -> {:?}", w[0], w[1]));
            }
        }
        Ok(WarpingPath {
            pairs,
            total_cost,
            timestamps_a,
            timestamps_b,
        })
    }

    /// Diagonal correspondence of a sequence with itself.
    pub fn identity(timestamps: Vec<T>) -> Self {
        let pairs = (0..timestamps.len()).map(|i| (i, i)).collect();
        WarpingPath {
            pairs,
            total_cost: T::zero(),
            timestamps_b: timestamps.clone(),
            timestamps_a: timestamps,
        }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn total_cost(&self) -> T {
        self.total_cost
    }

    pub fn timestamps_a(&self) -> &[T] {
        &self.timestamps_a
    }

    pub fn timestamps_b(&self) -> &[T] {
        &self.timestamps_b
    }

    pub fn len_a(&self) -> usize {
        self.timestamps_a.len()
    }

    pub fn len_b(&self) -> usize {
        self.timestamps_b.len()
    }

    /// Same correspondence with the roles of `a` and `b` swapped.
    pub fn transposed(&self) -> Self {
        WarpingPath {
            pairs: self.pairs.iter().map(|(i, j)| (*j, *i)).collect(),
            total_cost: self.total_cost,
            timestamps_a: self.timestamps_b.clone(),
            timestamps_b: self.timestamps_a.clone(),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        self.pairs.iter().all(|(i, j)| i == j)
    }
}

/// Classic DTW over an `n × m` grid with a caller-supplied local cost.
///
/// `D(i,j) = d(i,j) + min(D(i−1,j), D(i,j−1), D(i−1,j−1))`. Backtracking
/// prefers the diagonal on ties, then a step in `j`, then a step in `i`.
pub fn dtw_grid<T, F>(
    n: usize,
    m: usize,
    options: &DtwOptions,
    mut local: F,
) -> Result<(Vec<(usize, usize)>, T), WarpError>
where
    T: Real,
    F: FnMut(usize, usize) -> T,
{
    if n == 0 || m == 0 {
        return Err(WarpError::EmptyMotion);
    }
    let radius = options.window.map(|w| w.max(n.abs_diff(m)));
    let inside = |i: usize, j: usize| radius.is_none_or(|r| i.abs_diff(j) <= r);
    let inf = T::infinity();
    let mut acc = vec![inf; n * m];
    let at = |i: usize, j: usize| i * m + j;
    for i in 0..n {
        for j in 0..m {
            if !inside(i, j) {
                continue;
            }
            let best_prev = if i == 0 && j == 0 {
                T::zero()
            } else {
                let mut b = inf;
                if i > 0 && j > 0 {
                    b = b.min(acc[at(i - 1, j - 1)]);
                }
                if j > 0 {
                    b = b.min(acc[at(i, j - 1)]);
                }
                if i > 0 {
                    b = b.min(acc[at(i - 1, j)]);
                }
                b
            };
            if best_prev.is_finite() {
                acc[at(i, j)] = local(i, j) + best_prev;
            }
        }
    }
    let total = acc[at(n - 1, m - 1)];
    if !total.is_finite() {
        return Err(WarpError::NoPath);
    }

    let mut path = Vec::with_capacity(n + m);
    let (mut i, mut j) = (n - 1, m - 1);
    path.push((i, j));
    while (i, j) != (0, 0) {
        let (ni, nj) = if i == 0 {
            (0, j - 1)
        } else if j == 0 {
            (i - 1, 0)
        } else {
            let diag = acc[at(i - 1, j - 1)];
            let left = acc[at(i, j - 1)];
            let up = acc[at(i - 1, j)];
            if diag <= left && diag <= up {
                (i - 1, j - 1)
            } else if left <= up {
                (i, j - 1)
            } else {
                (i - 1, j)
            }
        };
        i = ni;
        j = nj;
        path.push((i, j));
    }
    path.reverse();
    Ok((path, total))
}

/// DTW between two arbitrary sample sequences.
pub fn align_sequences<S, T, F>(
    a: &[S],
    b: &[S],
    timestamps_a: &[T],
    timestamps_b: &[T],
    options: &DtwOptions,
    mut dist: F,
) -> Result<WarpingPath<T>, WarpError>
where
    T: Real,
    F: FnMut(&S, &S) -> T,
{
    if a.len() != timestamps_a.len() || b.len() != timestamps_b.len() {
        return Err(WarpError::InvalidPath(
            "timestamps and samples differ in length".into(),
        ));
    }
    let (pairs, total) = dtw_grid(a.len(), b.len(), options, |i, j| dist(&a[i], &b[j]))?;
    WarpingPath::new(pairs, total, timestamps_a.to_vec(), timestamps_b.to_vec())
}

/// One side of a motion alignment.
#[derive(Debug, Clone, Copy)]
pub struct AlignInput<'a, T> {
    pub joints: &'a JointTrajectory<T>,
    pub model: &'a RobotModel<T>,
    pub ee_link: &'a str,
}

impl<'a, T: Real> AlignInput<'a, T> {
    pub fn from_motion(motion: &'a Motion<T>, model: &'a RobotModel<T>) -> Self {
        AlignInput {
            joints: &motion.joints,
            model,
            ee_link: &motion.ee_link,
        }
    }
}

pub type RatePair<'a, T> = (Cow<'a, JointTrajectory<T>>, Cow<'a, JointTrajectory<T>>);

/// Resamples both trajectories to the faster of their mean rates when the
/// rates differ; otherwise borrows them unchanged.
pub fn common_rate_pair<'a, T: Real>(
    a: &'a JointTrajectory<T>,
    b: &'a JointTrajectory<T>,
) -> Result<RatePair<'a, T>, MotionError> {
    match (a.mean_rate(), b.mean_rate()) {
        (Some(ra), Some(rb)) if (ra - rb).abs() > T::lit(1e-6) * ra.max(rb) => {
            let rate = ra.max(rb);
            Ok((
                Cow::Owned(a.resample_uniform(rate)?),
                Cow::Owned(b.resample_uniform(rate)?),
            ))
        }
        _ => Ok((Cow::Borrowed(a), Cow::Borrowed(b))),
    }
}

struct Features<T> {
    joints: Vec<Vec<T>>,
    positions: Vec<Vec3<T>>,
    orientations: Vec<UnitQuaternion<T>>,
}

fn features<T: Real>(
    input: &AlignInput<'_, T>,
    joints: &JointTrajectory<T>,
    cost: &LocalCost<T>,
) -> Result<Features<T>, WarpError> {
    let q = input.model.reorder_configurations(joints)?;
    let need_ee = cost.needs(CostTerm::EePosition) || cost.needs(CostTerm::QuaternionGeodesic);
    let (positions, orientations) = if need_ee {
        let ee = input.model.link_pose_trajectory(joints, input.ee_link)?;
        (ee.positions(), ee.orientations())
    } else {
        (Vec::new(), Vec::new())
    };
    Ok(Features {
        joints: q,
        positions,
        orientations,
    })
}

fn joint_l2<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(x, y)| (*x - *y) * (*x - *y))
        .sum::<T>()
        .sqrt()
}

/// Aligns two motions with DTW under the chosen local cost.
///
/// Motions with different mean sampling rates are first resampled to the
/// faster rate, so path indices refer to the trajectories returned by
/// [`common_rate_pair`].
pub fn dtw_align<T: Real>(
    a: &AlignInput<'_, T>,
    b: &AlignInput<'_, T>,
    cost: &LocalCost<T>,
    options: &DtwOptions,
) -> Result<WarpingPath<T>, WarpError> {
    let terms = cost.terms()?;
    if a.joints.is_empty() || b.joints.is_empty() {
        return Err(WarpError::EmptyMotion);
    }
    if cost.needs(CostTerm::JointL2) && a.joints.dof() != b.joints.dof() {
        return Err(WarpError::DimensionMismatch {
            a: a.joints.dof(),
            b: b.joints.dof(),
        });
    }
    let (ja, jb) = common_rate_pair(a.joints, b.joints)?;
    let fa = features(a, &ja, cost)?;
    let fb = features(b, &jb, cost)?;
    let local = |i: usize, j: usize| {
        terms
            .iter()
            .map(|(term, w)| {
                let d = match term {
                    CostTerm::JointL2 => joint_l2(&fa.joints[i], &fb.joints[j]),
                    CostTerm::EePosition => fa.positions[i].distance(&fb.positions[j]),
                    CostTerm::QuaternionGeodesic => {
                        fa.orientations[i].geodesic_distance(&fb.orientations[j])
                    }
                };
                *w * d
            })
            .sum::<T>()
    };
    let (pairs, total) = dtw_grid(ja.len(), jb.len(), options, local)?;
    WarpingPath::new(
        pairs,
        total,
        ja.timestamps().to_vec(),
        jb.timestamps().to_vec(),
    )
}

/// Aligned time pairs for plotting, with the equal-time reference line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WarpingCurve<T> {
    /// `(t_a, t_b)`; `t_a` on the x-axis.
    pub points: Vec<[T; 2]>,
    /// Endpoints of the diagonal `t_b = t_a` spanning both motions.
    pub diagonal: [[T; 2]; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagonalSide {
    On,
    /// The x-axis motion is faster.
    Above,
    /// The x-axis motion is slower.
    Below,
    Crossing,
}

impl<T: Real> WarpingCurve<T> {
    /// Where the curve sits relative to the diagonal, ignoring the first
    /// point (both motions start together).
    pub fn side(&self) -> DiagonalSide {
        let eps = T::time_eps();
        let last = self.points.len().saturating_sub(1);
        let (mut above, mut below, mut touching) = (0usize, 0usize, 0usize);
        for (k, p) in self.points.iter().enumerate().skip(1) {
            if p[1] > p[0] + eps {
                above += 1;
            } else if p[1] < p[0] - eps {
                below += 1;
            } else if k != last {
                // both motions may end together; touching elsewhere is not strict
                touching += 1;
            }
        }
        match (above, below, touching) {
            (0, 0, _) => DiagonalSide::On,
            (_, 0, 0) => DiagonalSide::Above,
            (0, _, 0) => DiagonalSide::Below,
            _ => DiagonalSide::Crossing,
        }
    }
}

pub fn warping_curve<T: Real>(path: &WarpingPath<T>) -> WarpingCurve<T> {
    let ta = path.timestamps_a();
    let tb = path.timestamps_b();
    let points = path.pairs().iter().map(|(i, j)| [ta[*i], tb[*j]]).collect();
    let lo = ta[0].min(tb[0]);
    let hi = ta[ta.len() - 1].max(tb[tb.len() - 1]);
    WarpingCurve {
        points,
        diagonal: [[lo, lo], [hi, hi]],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subject {
    A,
    B,
}

/// Speed of one motion relative to the other along a warping path.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real + Serialize"))]
pub struct RelativeSpeedSeries<T> {
    /// Timestamps of the subject motion.
    pub timestamps: Vec<T>,
    /// `Δt_reference / Δt_subject` over the window around each sample.
    pub ratio: Vec<T>,
    /// `clamp(log2(ratio) / 2, −1, 1)`; positive means the subject is faster.
    pub color_scalar: Vec<T>,
}

/// Reference time matched to each `a` sample: the midpoint of its run of
/// `b` times, except the first and last samples which take the run's
/// minimum and maximum so the map covers both spans.
fn warp_knots<T: Real>(path: &WarpingPath<T>) -> Vec<T> {
    let tb = path.timestamps_b();
    let n = path.len_a();
    let mut lo = vec![T::infinity(); n];
    let mut hi = vec![T::neg_infinity(); n];
    for (i, j) in path.pairs() {
        lo[*i] = lo[*i].min(tb[*j]);
        hi[*i] = hi[*i].max(tb[*j]);
    }
    (0..n)
        .map(|i| {
            if i == 0 {
                lo[0]
            } else if i == n - 1 {
                hi[n - 1]
            } else {
                (lo[i] + hi[i]) * T::lit(0.5)
            }
        })
        .collect()
}

/// Relative speed of `subject` with respect to the other motion.
///
/// The ratio at subject sample `i` is the slope of the time map
/// (see [`remap_time`]) over samples `i ± SPEED_WINDOW_HALF`, clipped at the
/// ends of the motion.
pub fn relative_speed<T: Real>(
    path: &WarpingPath<T>,
    subject: Subject,
) -> Result<RelativeSpeedSeries<T>, WarpError> {
    let oriented = match subject {
        Subject::A => Cow::Borrowed(path),
        Subject::B => Cow::Owned(path.transposed()),
    };
    let n = oriented.len_a();
    if n < 2 {
        return Err(WarpError::DegeneratePath);
    }
    let ts = oriented.timestamps_a();
    let knots = warp_knots(&oriented);
    let two = T::lit(2.0);
    let (ratio, color_scalar) = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(SPEED_WINDOW_HALF);
            let hi = (i + SPEED_WINDOW_HALF).min(n - 1);
            let r = (knots[hi] - knots[lo]) / (ts[hi] - ts[lo]);
            (r, clamp(r.log2() / two, -T::one(), T::one()))
        })
        .unzip();
    Ok(RelativeSpeedSeries {
        timestamps: ts.to_vec(),
        ratio,
        color_scalar,
    })
}

/// Maps a time on motion `a` to the corresponding time on motion `b`.
///
/// Each `a` sample maps to the midpoint of its run of `b` times, except the
/// first and last samples which map to the span endpoints; between samples
/// the map is linear. The result is monotone non-decreasing in `t_a`.
pub fn remap_time<T: Real>(path: &WarpingPath<T>, t_a: T) -> Result<T, WarpError> {
    let ta = path.timestamps_a();
    let n = ta.len();
    let knots = warp_knots(path);
    let out_of_range = || WarpError::OutOfRange {
        t: t_a.as_f64(),
        start: ta[0].as_f64(),
        end: ta[n - 1].as_f64(),
    };
    if n == 1 {
        return if (t_a - ta[0]).abs() <= T::time_eps() {
            Ok(knots[0])
        } else {
            Err(out_of_range())
        };
    }
    match crate::motion::locate(ta, t_a) {
        Ok(crate::motion::Located::Exact(i)) => Ok(knots[i]),
        Ok(crate::motion::Located::Between(i, s)) => Ok(knots[i] + (knots[i + 1] - knots[i]) * s),
        Err(_) => Err(out_of_range()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_path(a: &[f64], b: &[f64]) -> WarpingPath<f64> {
        let ta: Vec<f64> = (0..a.len()).map(|i| i as f64).collect();
        let tb: Vec<f64> = (0..b.len()).map(|i| i as f64).collect();
        align_sequences(a, b, &ta, &tb, &DtwOptions::default(), |x, y| (x - y).abs()).unwrap()
    }

    #[test]
    fn enumerated_example() {
        // exhaustive enumeration of monotone paths gives cost 0 via this path
        let p = scalar_path(&[0.0, 0.0, 1.0], &[0.0, 1.0]);
        assert_eq!(p.total_cost(), 0.0);
        assert_eq!(p.pairs(), &[(0, 0), (1, 0), (2, 1)]);
    }

    #[test]
    fn self_alignment_is_diagonal() {
        let a = [0.3, 1.0, -2.0, 4.0, 4.0, 0.1];
        let p = scalar_path(&a, &a);
        assert!(p.is_diagonal());
        assert_eq!(p.total_cost(), 0.0);
        let curve = warping_curve(&p);
        assert_eq!(curve.side(), DiagonalSide::On);
        for t in [0.0, 0.5, 2.25, 5.0] {
            assert_eq!(remap_time(&p, t).unwrap(), t);
        }
        let rs = relative_speed(&p, Subject::A).unwrap();
        assert!(rs.ratio.iter().all(|r| *r == 1.0));
        assert!(rs.color_scalar.iter().all(|c| *c == 0.0));
    }

    #[test]
    fn window_restricts_but_keeps_a_path() {
        let a: Vec<f64> = (0..20).map(|i| (i as f64 * 0.3).sin()).collect();
        let b: Vec<f64> = (0..12).map(|i| (i as f64 * 0.5).sin()).collect();
        let ta: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let tb: Vec<f64> = (0..12).map(|i| i as f64).collect();
        let free = align_sequences(&a, &b, &ta, &tb, &DtwOptions::default(), |x, y| (x - y).abs()).unwrap();
        let banded = align_sequences(&a, &b, &ta, &tb, &DtwOptions { window: Some(0) }, |x, y| {
            (x - y).abs()
        })
        .unwrap();
        assert!(banded.total_cost() >= free.total_cost());
        assert!(banded.pairs().iter().all(|(i, j)| i.abs_diff(*j) <= 8));
    }

    #[test]
    fn path_validation() {
        assert!(WarpingPath::new(vec![(0, 0), (2, 1)], 0.0, vec![0.0, 1.0, 2.0], vec![0.0, 1.0]).is_err());
        assert!(WarpingPath::new(vec![(0, 1)], 0.0, vec![0.0], vec![0.0, 1.0]).is_err());
        assert!(WarpingPath::new(vec![(0, 0), (0, 1)], 0.0, vec![0.0], vec![0.0, 1.0]).is_ok());
    }

    #[test]
    fn remap_errors_and_degenerate_speed() {
        let p = WarpingPath::identity(vec![0.0]);
        assert_eq!(relative_speed(&p, Subject::A), Err(WarpError::DegeneratePath));
        let p = WarpingPath::identity(vec![0.0, 1.0]);
        assert!(matches!(remap_time(&p, 2.0), Err(WarpError::OutOfRange { .. })));
    }

    #[test]
    fn weights_are_checked() {
        let bad: LocalCost<f64> = LocalCost::WeightedSum(vec![(CostTerm::JointL2, 0.0)]);
        assert_eq!(bad.terms().unwrap_err(), WarpError::InvalidWeights);
        let bad: LocalCost<f64> = LocalCost::WeightedSum(vec![(CostTerm::JointL2, -1.0)]);
        assert!(bad.terms().is_err());
    }
}
