//! Request types and response bodies.
//!
//! Every body is built by a pure function of the stored motions and the
//! request, so the HTTP server and the command line produce the same bytes.
//! Success bodies are compact JSON objects whose first field is
//! `format_version`.

use std::borrow::Cow;

use mocomp_core::embed::{embed_joint_states, joint_trace_polyline, Embedding, EmbeddingParams, JointTrace};
use mocomp_core::io::LoadedMotion;
use mocomp_core::motion::{PoseTrajectory, Trajectory};
use mocomp_core::series::{
    derivative, difference_series, joint_series, motion_metrics, position_component_series, smooth, speed_series,
    Alignment, Filter, MotionMetrics, ScalarSeries,
};
use mocomp_core::trace::{position_trace, quaternion_trace, trace_arc_length, ConeGlyph, TracePolyline};
use mocomp_core::urdf::{LimitViolation, DEFAULT_LIMIT_MARGIN};
use mocomp_core::warp::{
    common_rate_pair, dtw_align, relative_speed, warping_curve, AlignInput, CostTerm, DiagonalSide, DtwOptions,
    LocalCost, RelativeSpeedSeries, Subject, WarpingPath,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{ApiError, ErrorCode};

pub const API_FORMAT_VERSION: u64 = 1;
pub const DEFAULT_CONE_STRIDE: f64 = 0.5;

#[derive(Serialize)]
struct Versioned<'a, B: Serialize> {
    format_version: u64,
    #[serde(flatten)]
    body: &'a B,
}

fn encode<B: Serialize>(body: &B) -> Vec<u8> {
    serde_json::to_vec(&Versioned {
        format_version: API_FORMAT_VERSION,
        body,
    })
    .expect("response bodies serialize")
}

/// Parses a JSON request body, reporting the failing field path.
pub fn parse_json<T: DeserializeOwned>(bytes: &[u8]) -> Result<T, ApiError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let err = ApiError::new(ErrorCode::SchemaError, inner.to_string());
        if path == "." {
            err
        } else {
            err.at(path)
        }
    })
}

/// Parses a URL query string.
pub fn parse_query<T: DeserializeOwned>(query: Option<&str>) -> Result<T, ApiError> {
    serde_urlencoded::from_str(query.unwrap_or("")).map_err(|e| ApiError::invalid(format!("query: {e}")))
}

fn default_cost() -> LocalCost<f64> {
    LocalCost::Single(CostTerm::JointL2)
}

#[derive(Serialize)]
pub struct MotionSummary<'a> {
    pub id: &'a str,
    pub name: &'a str,
    pub robot: &'a str,
    pub ee_link: &'a str,
    pub n_samples: usize,
    pub duration: f64,
    pub joint_names: &'a [String],
    pub links: &'a [String],
    pub object_tracks: Vec<&'a str>,
}

pub fn summary(m: &LoadedMotion) -> MotionSummary<'_> {
    MotionSummary {
        id: &m.motion.id,
        name: &m.motion.name,
        robot: &m.motion.robot_ref,
        ee_link: &m.motion.ee_link,
        n_samples: m.motion.joints.len(),
        duration: m.motion.duration(),
        joint_names: m.motion.joints.joint_names(),
        links: m.robot.links(),
        object_tracks: m.motion.object_tracks.keys().map(String::as_str).collect(),
    }
}

pub fn created_body(id: &str) -> Vec<u8> {
    #[derive(Serialize)]
    struct Created<'a> {
        id: &'a str,
    }
    encode(&Created { id })
}

pub fn summary_body(m: &LoadedMotion) -> Vec<u8> {
    encode(&summary(m))
}

pub fn list_body<'a>(motions: impl IntoIterator<Item = &'a LoadedMotion>) -> Vec<u8> {
    #[derive(Serialize)]
    struct List<'a> {
        motions: Vec<MotionSummary<'a>>,
    }
    encode(&List {
        motions: motions.into_iter().map(summary).collect(),
    })
}

pub fn share_url(session_id: &str) -> String {
    format!("/s/{session_id}")
}

pub fn session_created_body(id: &str) -> Vec<u8> {
    #[derive(Serialize)]
    struct Created<'a> {
        id: &'a str,
        share_url: String,
    }
    encode(&Created {
        id,
        share_url: share_url(id),
    })
}

/// A pose track of a motion: a robot link through forward kinematics, or an
/// object track.
///
/// Accepted forms: `link:NAME`, `track:NAME`, or a bare `NAME` which is tried
/// as a link first. `None` selects the motion's end-effector link.
pub fn resolve_frame(m: &LoadedMotion, frame: Option<&str>) -> Result<(String, PoseTrajectory<f64>), ApiError> {
    let link = |name: &str| -> Result<(String, PoseTrajectory<f64>), ApiError> {
        let traj = m.robot.link_pose_trajectory(&m.motion.joints, name)?;
        Ok((format!("link:{name}"), traj))
    };
    let track = |name: &str| -> Result<(String, PoseTrajectory<f64>), ApiError> {
        match m.motion.object_tracks.get(name) {
            Some(t) => Ok((format!("track:{name}"), t.clone())),
            None => Err(ApiError::new(
                ErrorCode::UnknownTrack,
                format!("motion has no object track `{name}`"),
            )),
        }
    };
    match frame {
        None => link(&m.motion.ee_link),
        Some(f) => {
            if let Some(name) = f.strip_prefix("link:") {
                link(name)
            } else if let Some(name) = f.strip_prefix("track:") {
                track(name)
            } else if m.robot.link_index(f).is_some() {
                link(f)
            } else if m.motion.object_tracks.contains_key(f) {
                track(f)
            } else {
                Err(ApiError::new(
                    ErrorCode::UnknownLink,
                    format!("motion has no link or object track `{f}`"),
                ))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    #[default]
    Position,
    Quaternion,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceQuery {
    #[serde(default)]
    pub kind: TraceKind,
    pub frame: Option<String>,
    /// Seconds between cones (position traces only).
    pub stride: Option<f64>,
}

pub fn trace_body(m: &LoadedMotion, q: &TraceQuery) -> Result<Vec<u8>, ApiError> {
    #[derive(Serialize)]
    struct Body<'a> {
        motion: &'a str,
        kind: TraceKind,
        frame: String,
        arc_length: f64,
        polyline: &'a TracePolyline<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        cones: Option<&'a [ConeGlyph<f64>]>,
    }
    let (frame, traj) = resolve_frame(m, q.frame.as_deref())?;
    match q.kind {
        TraceKind::Position => {
            let trace = position_trace(&traj, q.stride.unwrap_or(DEFAULT_CONE_STRIDE))?;
            Ok(encode(&Body {
                motion: &m.motion.id,
                kind: q.kind,
                frame,
                arc_length: trace_arc_length(&trace.polyline),
                polyline: &trace.polyline,
                cones: Some(&trace.cones),
            }))
        }
        TraceKind::Quaternion => {
            if q.stride.is_some() {
                return Err(ApiError::invalid("stride applies to position traces only").at("stride"));
            }
            let polyline = quaternion_trace(&traj);
            Ok(encode(&Body {
                motion: &m.motion.id,
                kind: q.kind,
                frame,
                arc_length: trace_arc_length(&polyline),
                polyline: &polyline,
                cones: None,
            }))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Joint,
    EePos,
    EeSpeed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Which scalar signal to extract from a motion.
///
/// `joint` needs `joint` (actuated-joint index); `ee_pos` needs `axis`.
/// `frame` (see [`resolve_frame`]) applies to `ee_pos` and `ee_speed`.
/// `smooth` is `ma:<odd window>` or `ema:<alpha>` and is applied before
/// differentiating `deriv` times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub motion: Option<String>,
    pub quantity: Quantity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<Axis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<String>,
    #[serde(default)]
    pub deriv: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smooth: Option<String>,
}

impl SeriesSpec {
    pub fn new(quantity: Quantity) -> Self {
        SeriesSpec {
            motion: None,
            quantity,
            joint: None,
            axis: None,
            frame: None,
            deriv: 0,
            smooth: None,
        }
    }
}

pub fn parse_filter(text: &str) -> Result<Filter<f64>, ApiError> {
    let bad = || ApiError::invalid(format!("smooth must be `ma:<window>` or `ema:<alpha>`, got `{text}`")).at("smooth");
    let (kind, arg) = text.split_once(':').ok_or_else(bad)?;
    match kind {
        "ma" => Ok(Filter::MovingAverage {
            window: arg.parse().map_err(|_| bad())?,
        }),
        "ema" => Ok(Filter::Exponential {
            alpha: arg.parse().map_err(|_| bad())?,
        }),
        _ => Err(bad()),
    }
}

pub fn compute_series(m: &LoadedMotion, spec: &SeriesSpec) -> Result<ScalarSeries<f64>, ApiError> {
    if spec.deriv > 3 {
        return Err(ApiError::invalid(format!("deriv must be 0..3, got {}", spec.deriv)).at("deriv"));
    }
    let filter = spec.smooth.as_deref().map(parse_filter).transpose()?;
    let needs = |field: &str, ok: bool| {
        if ok {
            Ok(())
        } else {
            Err(ApiError::invalid(format!("`{field}` does not apply to this quantity")).at(field.to_owned()))
        }
    };
    let base = match spec.quantity {
        Quantity::Joint => {
            needs("axis", spec.axis.is_none())?;
            needs("frame", spec.frame.is_none())?;
            let k = spec
                .joint
                .ok_or_else(|| ApiError::invalid("quantity `joint` needs `joint`").at("joint"))?;
            joint_series(&m.motion.joints, &m.robot, k)?
        }
        Quantity::EePos => {
            needs("joint", spec.joint.is_none())?;
            let axis = spec
                .axis
                .ok_or_else(|| ApiError::invalid("quantity `ee_pos` needs `axis`").at("axis"))?;
            let (frame, traj) = resolve_frame(m, spec.frame.as_deref())?;
            position_component_series(&traj, axis as usize, &frame)?
        }
        Quantity::EeSpeed => {
            needs("joint", spec.joint.is_none())?;
            needs("axis", spec.axis.is_none())?;
            let (frame, traj) = resolve_frame(m, spec.frame.as_deref())?;
            speed_series(&traj, &frame)?
        }
    };
    let smoothed = match filter {
        Some(f) => smooth(&base, f)?,
        None => base,
    };
    Ok(if spec.deriv == 0 {
        smoothed
    } else {
        derivative(&smoothed, spec.deriv)?
    })
}

#[derive(Serialize)]
struct SeriesBody<'a> {
    motion: &'a str,
    series: &'a ScalarSeries<f64>,
}

pub fn series_body(m: &LoadedMotion, spec: &SeriesSpec) -> Result<Vec<u8>, ApiError> {
    if spec.motion.as_deref().is_some_and(|id| id != m.motion.id) {
        return Err(ApiError::invalid("`motion` conflicts with the motion in the URL").at("motion"));
    }
    let series = compute_series(m, spec)?;
    Ok(encode(&SeriesBody {
        motion: &m.motion.id,
        series: &series,
    }))
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsQuery {
    pub margin: Option<f64>,
}

pub fn limits_body(m: &LoadedMotion, q: &LimitsQuery) -> Result<Vec<u8>, ApiError> {
    #[derive(Serialize)]
    struct Body<'a> {
        motion: &'a str,
        margin: f64,
        violations: Vec<LimitViolation<f64>>,
    }
    let margin = q.margin.unwrap_or(DEFAULT_LIMIT_MARGIN);
    let violations = m.robot.joint_limit_violations(&m.motion.joints, margin)?;
    Ok(encode(&Body {
        motion: &m.motion.id,
        margin,
        violations,
    }))
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsQuery {
    /// Frame (usually `track:NAME`) whose path the end effector should follow.
    pub reference: Option<String>,
}

pub fn metrics_body(m: &LoadedMotion, q: &MetricsQuery) -> Result<Vec<u8>, ApiError> {
    #[derive(Serialize)]
    struct Body<'a> {
        motion: &'a str,
        #[serde(skip_serializing_if = "Option::is_none")]
        reference: Option<String>,
        metrics: MotionMetrics<f64>,
    }
    let reference = q
        .reference
        .as_deref()
        .map(|r| resolve_frame(m, Some(r)))
        .transpose()?;
    let metrics = motion_metrics(
        &m.motion,
        &m.robot,
        &m.motion.ee_link,
        reference.as_ref().map(|(_, t)| t),
    )?;
    Ok(encode(&Body {
        motion: &m.motion.id,
        reference: reference.map(|(name, _)| name),
        metrics,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlignRequest {
    pub a: String,
    pub b: String,
    #[serde(default = "default_cost")]
    pub cost: LocalCost<f64>,
    #[serde(default)]
    pub window: Option<usize>,
}

fn check_dof(a: &LoadedMotion, b: &LoadedMotion, cost: &LocalCost<f64>) -> Result<(), ApiError> {
    let joint_term = match cost {
        LocalCost::Single(t) => *t == CostTerm::JointL2,
        LocalCost::WeightedSum(ts) => ts.iter().any(|(t, _)| *t == CostTerm::JointL2),
    };
    if joint_term && a.motion.joints.joint_names() != b.motion.joints.joint_names() {
        let (da, db) = (a.motion.joints.dof(), b.motion.joints.dof());
        return Err(if da != db {
            ApiError::new(
                ErrorCode::DimensionMismatch,
                format!("joint-space cost needs equal joint counts, got {da} and {db}"),
            )
        } else {
            ApiError::new(ErrorCode::JointNameMismatch, "joint-space cost needs the same joints on both motions")
        });
    }
    Ok(())
}

fn align_paths(a: &LoadedMotion, b: &LoadedMotion, cost: &LocalCost<f64>, window: Option<usize>) -> Result<WarpingPath<f64>, ApiError> {
    check_dof(a, b, cost)?;
    Ok(dtw_align(
        &AlignInput::from_motion(&a.motion, &a.robot),
        &AlignInput::from_motion(&b.motion, &b.robot),
        cost,
        &DtwOptions { window },
    )?)
}

pub fn align_body(a: &LoadedMotion, b: &LoadedMotion, req: &AlignRequest) -> Result<Vec<u8>, ApiError> {
    #[derive(Serialize)]
    struct Curve<'a> {
        points: &'a [[f64; 2]],
        diagonal: [[f64; 2]; 2],
        side: DiagonalSide,
    }
    #[derive(Serialize)]
    struct Speeds {
        a: RelativeSpeedSeries<f64>,
        b: RelativeSpeedSeries<f64>,
    }
    #[derive(Serialize)]
    struct Body<'a> {
        a: &'a str,
        b: &'a str,
        cost: &'a LocalCost<f64>,
        window: Option<usize>,
        total_cost: f64,
        path: &'a WarpingPath<f64>,
        warping_curve: Curve<'a>,
        relative_speed: Speeds,
    }
    let path = align_paths(a, b, &req.cost, req.window)?;
    let curve = warping_curve(&path);
    let relative = Speeds {
        a: relative_speed(&path, Subject::A)?,
        b: relative_speed(&path, Subject::B)?,
    };
    Ok(encode(&Body {
        a: &a.motion.id,
        b: &b.motion.id,
        cost: &req.cost,
        window: req.window,
        total_cost: path.total_cost(),
        path: &path,
        warping_curve: Curve {
            points: &curve.points,
            diagonal: curve.diagonal,
            side: curve.side(),
        },
        relative_speed: relative,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum DiffAlignment {
    /// Both series on a shared uniform grid.
    Resampled,
    /// One sample per DTW path pair of the two motions.
    Dtw {
        #[serde(default = "default_cost")]
        cost: LocalCost<f64>,
        #[serde(default)]
        window: Option<usize>,
    },
}

impl Default for DiffAlignment {
    fn default() -> Self {
        DiffAlignment::Dtw {
            cost: default_cost(),
            window: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffRequest {
    pub a: SeriesSpec,
    pub b: SeriesSpec,
    #[serde(default)]
    pub alignment: DiffAlignment,
}

fn with_joints(m: &LoadedMotion, joints: Cow<'_, mocomp_core::motion::JointTrajectory<f64>>) -> LoadedMotion {
    let mut out = m.clone();
    if let Cow::Owned(j) = joints {
        out.motion.joints = j;
    }
    out
}

/// `a − b` for two series specs, each naming its motion.
pub fn diff_body(a: &LoadedMotion, b: &LoadedMotion, req: &DiffRequest) -> Result<Vec<u8>, ApiError> {
    #[derive(Serialize)]
    struct Body<'a> {
        a: &'a str,
        b: &'a str,
        alignment: &'a DiffAlignment,
        #[serde(skip_serializing_if = "Option::is_none")]
        total_cost: Option<f64>,
        series: ScalarSeries<f64>,
    }
    let (series, total_cost) = match &req.alignment {
        DiffAlignment::Resampled => {
            let sa = compute_series(a, &req.a)?;
            let sb = compute_series(b, &req.b)?;
            (difference_series(&sa, &sb, Alignment::Resampled)?, None)
        }
        DiffAlignment::Dtw { cost, window } => {
            let (ja, jb) = common_rate_pair(&a.motion.joints, &b.motion.joints)?;
            let (ma, mb) = (with_joints(a, ja), with_joints(b, jb));
            let path = align_paths(&ma, &mb, cost, *window)?;
            let sa = compute_series(&ma, &req.a)?;
            let sb = compute_series(&mb, &req.b)?;
            if sa.len() != path.len_a() || sb.len() != path.len_b() {
                return Err(ApiError::invalid(
                    "series are not sampled on the motions' joint timestamps; use `resampled` alignment",
                )
                .at("alignment"));
            }
            (difference_series(&sa, &sb, Alignment::Path(&path))?, Some(path.total_cost()))
        }
    };
    Ok(encode(&Body {
        a: &a.motion.id,
        b: &b.motion.id,
        alignment: &req.alignment,
        total_cost,
        series,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbedRequest {
    pub motion_ids: Vec<String>,
    #[serde(default)]
    pub params: EmbeddingParams,
}

/// Parses an embed request; `params.seed` defaults to `default_seed`.
pub fn parse_embed_request(bytes: &[u8], default_seed: u64) -> Result<EmbedRequest, ApiError> {
    let mut value: serde_json::Value = parse_json(bytes)?;
    if let Some(obj) = value.as_object_mut() {
        let params = obj
            .entry("params")
            .or_insert_with(|| serde_json::Value::Object(Default::default()));
        if let Some(p) = params.as_object_mut() {
            p.entry("seed").or_insert(default_seed.into());
        }
    }
    parse_json(&serde_json::to_vec(&value).expect("JSON values serialize"))
}

pub fn embed_body(motions: &[&LoadedMotion], params: &EmbeddingParams) -> Result<Vec<u8>, ApiError> {
    #[derive(Serialize)]
    struct Trace<'a> {
        motion: &'a str,
        #[serde(flatten)]
        trace: JointTrace<f64>,
    }
    #[derive(Serialize)]
    struct Body<'a> {
        motion_ids: Vec<&'a str>,
        params: &'a EmbeddingParams,
        embedding: &'a Embedding<f64>,
        joint_traces: Vec<Trace<'a>>,
    }
    if let Some(first) = motions.first() {
        for (index, m) in motions.iter().enumerate() {
            let (expected, found) = (first.motion.joints.dof(), m.motion.joints.dof());
            if expected != found {
                return Err(ApiError::new(
                    ErrorCode::JointCountMismatch,
                    format!("motion {index} has {found} joints, expected {expected}"),
                )
                .at(format!("motion_ids[{index}]")));
            }
            if m.motion.joints.joint_names() != first.motion.joints.joint_names() {
                return Err(ApiError::new(
                    ErrorCode::JointNameMismatch,
                    format!("motion {index} has different joints than motion 0"),
                )
                .at(format!("motion_ids[{index}]")));
            }
        }
    }
    let joints: Vec<_> = motions.iter().map(|m| m.motion.joints.clone()).collect();
    let embedding = embed_joint_states(&joints, params)?;
    let joint_traces = motions
        .iter()
        .enumerate()
        .map(|(k, m)| {
            Ok(Trace {
                motion: &m.motion.id,
                trace: joint_trace_polyline(&embedding, k)?,
            })
        })
        .collect::<Result<Vec<_>, ApiError>>()?;
    Ok(encode(&Body {
        motion_ids: motions.iter().map(|m| m.motion.id.as_str()).collect(),
        params,
        embedding: &embedding,
        joint_traces,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use mocomp_core::fixtures::{time_scaled_pair, FixtureCase};
    use serde_json::Value;

    fn json(bytes: &[u8]) -> Value {
        serde_json::from_slice(bytes).unwrap()
    }

    #[test]
    fn bodies_start_with_format_version() {
        let m = &FixtureCase::B.motions()[0];
        let body = String::from_utf8(summary_body(m)).unwrap();
        assert!(body.starts_with(r#"{"format_version":1,"id":""#), "{body}");
    }

    #[test]
    fn frames_resolve_links_then_tracks() {
        let m = &FixtureCase::D.motions()[0];
        assert_eq!(resolve_frame(m, None).unwrap().0, "link:tool");
        assert_eq!(resolve_frame(m, Some("operator")).unwrap().0, "track:operator");
        assert_eq!(resolve_frame(m, Some("link3")).unwrap().0, "link:link3");
        assert_eq!(resolve_frame(m, Some("nope")).unwrap_err().code, ErrorCode::UnknownLink);
        assert_eq!(resolve_frame(m, Some("track:nope")).unwrap_err().code, ErrorCode::UnknownTrack);
        assert_eq!(resolve_frame(m, Some("link:nope")).unwrap_err().code, ErrorCode::UnknownLink);
    }

    #[test]
    fn series_spec_validation() {
        let m = &FixtureCase::B.motions()[0];
        let mut spec = SeriesSpec::new(Quantity::Joint);
        assert_eq!(compute_series(m, &spec).unwrap_err().path.as_deref(), Some("joint"));
        spec.joint = Some(2);
        spec.deriv = 4;
        assert_eq!(compute_series(m, &spec).unwrap_err().code, ErrorCode::InvalidParameter);
        spec.deriv = 1;
        spec.smooth = Some("ma:4".into());
        assert_eq!(compute_series(m, &spec).unwrap_err().code, ErrorCode::InvalidParameter);
        spec.smooth = Some("ma:5".into());
        let s = compute_series(m, &spec).unwrap();
        assert_eq!(s.len(), m.motion.joints.len());
        assert_eq!(parse_filter("ema:0.25").unwrap(), Filter::Exponential { alpha: 0.25 });
        assert!(parse_filter("gauss:1").is_err());
    }

    #[test]
    fn self_diff_is_zero_under_both_alignments() {
        let m = &FixtureCase::D.motions()[0];
        for alignment in [DiffAlignment::Resampled, DiffAlignment::default()] {
            let mut spec = SeriesSpec::new(Quantity::EePos);
            spec.axis = Some(Axis::Z);
            let req = DiffRequest {
                a: spec.clone(),
                b: spec,
                alignment,
            };
            let v = json(&diff_body(m, m, &req).unwrap());
            assert!(v["series"]["values"].as_array().unwrap().iter().all(|x| x.as_f64() == Some(0.0)));
        }
    }

    #[test]
    fn dtw_diff_of_time_scaled_pair_uses_common_rate() {
        let (slow, fast) = time_scaled_pair(2.0, 2.0);
        let mut spec = SeriesSpec::new(Quantity::Joint);
        spec.joint = Some(0);
        let req = DiffRequest {
            a: spec.clone(),
            b: spec,
            alignment: DiffAlignment::default(),
        };
        let v = json(&diff_body(&slow, &fast, &req).unwrap());
        let vals: Vec<f64> = v["series"]["values"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        let max = vals.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        assert!(max < 0.05, "aligned joint difference {max}");
    }

    #[test]
    fn align_rejects_mismatched_joints() {
        let a = &FixtureCase::B.motions()[0];
        let mut b = a.clone();
        let j = &b.motion.joints;
        let names = j.joint_names()[..5].to_vec();
        let configs = j.configurations().iter().map(|q| q[..5].to_vec()).collect();
        b.motion.joints = mocomp_core::motion::JointTrajectory::new(names, j.timestamps().to_vec(), configs).unwrap();
        let req = AlignRequest {
            a: String::new(),
            b: String::new(),
            cost: default_cost(),
            window: None,
        };
        assert_eq!(align_body(a, &b, &req).unwrap_err().code, ErrorCode::DimensionMismatch);
    }

    #[test]
    fn embed_request_takes_default_seed() {
        let r = parse_embed_request(br#"{"motion_ids":["x"]}"#, 42).unwrap();
        assert_eq!(r.params.seed, 42);
        let r = parse_embed_request(br#"{"motion_ids":["x"],"params":{"seed":3}}"#, 42).unwrap();
        assert_eq!(r.params.seed, 3);
        let e = parse_embed_request(br#"{"motion_ids":["x"],"params":{"n_neighbours":3}}"#, 0).unwrap_err();
        assert_eq!(e.code, ErrorCode::SchemaError);
        assert_eq!(e.path.as_deref(), Some("params.n_neighbours"));
    }
}
