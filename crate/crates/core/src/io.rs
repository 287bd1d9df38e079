//! Motion files, session documents and numeric exports.
//!
//! # Motion JSON (`format_version: 1`)
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "name": "pick-3",
//!   "robot": { "urdf": "<robot ...>", "ee_link": "tool" },
//!   "joints": {
//!     "names": ["j1", "j2"],
//!     "units": ["deg", "rad"],
//!     "rows": [[0.0, 10.0, 0.1], [0.1, 11.0, 0.12]]
//!   },
//!   "object_tracks": { "bottle": { "rows": [[0.0, 0.4, 0.0, 0.1, 0, 0, 0, 1]] } }
//! }
//! ```
//!
//! `robot` carries either inline `urdf` text or a `urdf_file` path resolved
//! against [`LoadOptions::base_dir`]. `units` is optional (radians and metres
//! by default). Track rows are `[t, x, y, z, qx, qy, qz, qw]`.
//!
//! # Motion CSV
//!
//! Header `t,j1[deg],j2,...` (bracketed unit tag optional), one row per
//! sample. The robot comes from [`LoadOptions::sidecar`].
//!
//! Loaded motions have joints in the robot's actuated-joint order, angles in
//! radians, and time shifted so the earliest sample of any track is `t = 0`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::geometry::{Pose, UnitQuaternion, Vec3};
use crate::motion::{JointTrajectory, Motion, PoseTrajectory, Trajectory};
use crate::series::ScalarSeries;
use crate::trace::{ConeGlyph, TracePolyline};
use crate::urdf::{parse_urdf, JointKind, RobotModel};
use crate::warp::LocalCost;

pub const MOTION_FORMAT_VERSION: u64 = 1;
pub const SESSION_FORMAT_VERSION: u64 = 1;
const PROPORTION_TOLERANCE: f64 = 1e-9;
const TRACE_MAGIC: &str = "mocomp-trace 1";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IoError {
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{path}: unit `{unit}` is unknown or does not fit the joint")]
    Unit { path: String, unit: String },
    #[error("{path}: timestamp at index {index} is not after its predecessor")]
    Monotonicity { path: String, index: usize },
    #[error("unsupported format_version {found}")]
    Version { found: String },
}

impl IoError {
    pub fn code(&self) -> &'static str {
        match self {
            IoError::Schema { .. } => "SchemaError",
            IoError::Unit { .. } => "UnitError",
            IoError::Monotonicity { .. } => "MonotonicityError",
            IoError::Version { .. } => "VersionError",
        }
    }

    /// Location of the offending field, when there is one.
    pub fn path(&self) -> Option<&str> {
        match self {
            IoError::Schema { path, .. } | IoError::Unit { path, .. } | IoError::Monotonicity { path, .. } => {
                Some(path)
            }
            IoError::Version { .. } => None,
        }
    }
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> IoError {
    IoError::Schema {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionFormat {
    Json,
    Csv,
}

impl FromStr for MotionFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(MotionFormat::Json),
            "csv" => Ok(MotionFormat::Csv),
            other => Err(format!("unknown motion format `{other}` (expected json or csv)")),
        }
    }
}

/// Robot description accompanying a motion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RobotSpec {
    pub urdf: String,
    pub ee_link: String,
}

#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    /// Robot for CSV input, and for JSON files without a `robot` entry.
    pub sidecar: Option<RobotSpec>,
    /// Directory for resolving `urdf_file`. `None` rejects file references.
    pub base_dir: Option<PathBuf>,
    /// Motion name for CSV input (defaults to `"motion"`).
    pub name: Option<String>,
}

/// A motion together with the robot it was recorded on.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedMotion {
    pub motion: Motion<f64>,
    pub robot: RobotModel<f64>,
    /// URDF text the robot was parsed from.
    pub urdf: String,
}

pub fn load_motion(bytes: &[u8], format: MotionFormat, options: &LoadOptions) -> Result<LoadedMotion, IoError> {
    let raw = match format {
        MotionFormat::Json => read_json(bytes, options)?,
        MotionFormat::Csv => read_csv(bytes, options)?,
    };
    assemble(raw)
}

struct RawJoints {
    names: Vec<String>,
    units: Vec<Option<String>>,
    rows: Vec<(f64, Vec<f64>)>,
    row_paths: Vec<String>,
}

struct RawTrack {
    rows: Vec<[f64; 8]>,
    row_paths: Vec<String>,
}

struct RawMotion {
    name: String,
    robot: RobotSpec,
    robot_path: &'static str,
    joints: RawJoints,
    names_path: String,
    units_path: String,
    rows_path: String,
    tracks: BTreeMap<String, RawTrack>,
}

fn field<'a>(obj: &'a serde_json::Map<String, Value>, key: &str, path: &str) -> Result<&'a Value, IoError> {
    obj.get(key)
        .ok_or_else(|| schema(join(path, key), "missing required field"))
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_owned()
    } else {
        format!("{path}.{key}")
    }
}

fn as_object<'a>(v: &'a Value, path: &str) -> Result<&'a serde_json::Map<String, Value>, IoError> {
    v.as_object().ok_or_else(|| schema(path, "expected an object"))
}

fn as_array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>, IoError> {
    v.as_array().ok_or_else(|| schema(path, "expected an array"))
}

fn as_str<'a>(v: &'a Value, path: &str) -> Result<&'a str, IoError> {
    v.as_str().ok_or_else(|| schema(path, "expected a string"))
}

fn as_number(v: &Value, path: &str) -> Result<f64, IoError> {
    v.as_f64().ok_or_else(|| schema(path, "expected a number"))
}

fn reject_unknown(obj: &serde_json::Map<String, Value>, allowed: &[&str], path: &str) -> Result<(), IoError> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(schema(join(path, k), "unknown field")),
        None => Ok(()),
    }
}

fn read_json(bytes: &[u8], options: &LoadOptions) -> Result<RawMotion, IoError> {
    let doc: Value = serde_json::from_slice(bytes).map_err(|e| {
        schema(
            format!("line {}", e.line()),
            format!("invalid JSON at column {}: {e}", e.column()),
        )
    })?;
    let top = as_object(&doc, "$")?;
    reject_unknown(top, &["format_version", "name", "robot", "joints", "object_tracks"], "")?;
    match field(top, "format_version", "")? {
        Value::Number(n) if n.as_u64() == Some(MOTION_FORMAT_VERSION) => {}
        other => return Err(IoError::Version { found: other.to_string() }),
    }
    let name = as_str(field(top, "name", "")?, "name")?.to_owned();

    let robot = match top.get("robot") {
        Some(r) => {
            let r = as_object(r, "robot")?;
            reject_unknown(r, &["urdf", "urdf_file", "ee_link"], "robot")?;
            let ee_link = as_str(field(r, "ee_link", "robot")?, "robot.ee_link")?.to_owned();
            let urdf = match (r.get("urdf"), r.get("urdf_file")) {
                (Some(u), None) => as_str(u, "robot.urdf")?.to_owned(),
                (None, Some(f)) => {
                    let rel = as_str(f, "robot.urdf_file")?;
                    let base = options
                        .base_dir
                        .as_ref()
                        .ok_or_else(|| schema("robot.urdf_file", "file references are not accepted here; inline the URDF"))?;
                    std::fs::read_to_string(base.join(rel))
                        .map_err(|e| schema("robot.urdf_file", format!("cannot read `{rel}`: {e}")))?
                }
                _ => return Err(schema("robot", "exactly one of `urdf` and `urdf_file` is required")),
            };
            RobotSpec { urdf, ee_link }
        }
        None => options
            .sidecar
            .clone()
            .ok_or_else(|| schema("robot", "missing required field"))?,
    };

    let joints = as_object(field(top, "joints", "")?, "joints")?;
    reject_unknown(joints, &["names", "units", "rows"], "joints")?;
    let names = as_array(field(joints, "names", "joints")?, "joints.names")?
        .iter()
        .enumerate()
        .map(|(k, v)| as_str(v, &format!("joints.names[{k}]")).map(str::to_owned))
        .collect::<Result<Vec<_>, _>>()?;
    let units = match joints.get("units") {
        None => vec![None; names.len()],
        Some(u) => {
            let u = as_array(u, "joints.units")?;
            if u.len() != names.len() {
                return Err(schema(
                    "joints.units",
                    format!("{} units for {} joints", u.len(), names.len()),
                ));
            }
            u.iter()
                .enumerate()
                .map(|(k, v)| as_str(v, &format!("joints.units[{k}]")).map(|s| Some(s.to_owned())))
                .collect::<Result<Vec<_>, _>>()?
        }
    };
    let mut rows = Vec::new();
    let mut row_paths = Vec::new();
    for (i, row) in as_array(field(joints, "rows", "joints")?, "joints.rows")?.iter().enumerate() {
        let path = format!("joints.rows[{i}]");
        let vals = as_array(row, &path)?;
        if vals.len() != names.len() + 1 {
            return Err(schema(
                path,
                format!("row has {} values, expected {} (t plus one per joint)", vals.len(), names.len() + 1),
            ));
        }
        let nums = vals
            .iter()
            .enumerate()
            .map(|(k, v)| as_number(v, &format!("{path}[{k}]")))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push((nums[0], nums[1..].to_vec()));
        row_paths.push(path);
    }

    let mut tracks = BTreeMap::new();
    if let Some(t) = top.get("object_tracks") {
        for (tname, track) in as_object(t, "object_tracks")? {
            let tpath = format!("object_tracks.{tname}");
            let track = as_object(track, &tpath)?;
            reject_unknown(track, &["rows"], &tpath)?;
            let mut raw = RawTrack {
                rows: Vec::new(),
                row_paths: Vec::new(),
            };
            for (i, row) in as_array(field(track, "rows", &tpath)?, &format!("{tpath}.rows"))?
                .iter()
                .enumerate()
            {
                let path = format!("{tpath}.rows[{i}]");
                let vals = as_array(row, &path)?;
                if vals.len() != 8 {
                    return Err(schema(
                        path,
                        format!("row has {} values, expected 8 (t, x, y, z, qx, qy, qz, qw)", vals.len()),
                    ));
                }
                let mut r = [0.0; 8];
                for (k, v) in vals.iter().enumerate() {
                    r[k] = as_number(v, &format!("{path}[{k}]"))?;
                }
                raw.rows.push(r);
                raw.row_paths.push(path);
            }
            tracks.insert(tname.clone(), raw);
        }
    }

    Ok(RawMotion {
        name,
        robot,
        robot_path: "robot",
        joints: RawJoints {
            names,
            units,
            rows,
            row_paths,
        },
        names_path: "joints.names".into(),
        units_path: "joints.units".into(),
        rows_path: "joints.rows".into(),
        tracks,
    })
}

fn read_csv(bytes: &[u8], options: &LoadOptions) -> Result<RawMotion, IoError> {
    let robot = options
        .sidecar
        .clone()
        .ok_or_else(|| schema("robot", "CSV input needs a robot reference"))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut records = reader.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| schema("line 1", e.to_string()))?,
        None => return Err(schema("line 1", "missing header row")),
    };
    if header.get(0) != Some("t") {
        return Err(schema("line 1", "first column must be `t`"));
    }
    let mut names = Vec::new();
    let mut units = Vec::new();
    for col in header.iter().skip(1) {
        match col.split_once('[') {
            Some((name, rest)) => {
                let unit = rest
                    .strip_suffix(']')
                    .ok_or_else(|| schema("line 1", format!("malformed column `{col}`")))?;
                names.push(name.trim().to_owned());
                units.push(Some(unit.trim().to_owned()));
            }
            None => {
                names.push(col.to_owned());
                units.push(None);
            }
        }
    }
    let mut rows = Vec::new();
    let mut row_paths = Vec::new();
    for record in records {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            schema(format!("line {line}"), e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let path = format!("line {line}");
        if record.len() != names.len() + 1 {
            return Err(schema(
                path,
                format!("row has {} values, expected {}", record.len(), names.len() + 1),
            ));
        }
        let nums = record
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| schema(path.clone(), format!("`{f}` is not a finite number")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push((nums[0], nums[1..].to_vec()));
        row_paths.push(path);
    }
    Ok(RawMotion {
        name: options.name.clone().unwrap_or_else(|| "motion".into()),
        robot,
        robot_path: "robot",
        joints: RawJoints {
            names,
            units,
            rows,
            row_paths,
        },
        names_path: "line 1".into(),
        units_path: "line 1".into(),
        rows_path: "rows".into(),
        tracks: BTreeMap::new(),
    })
}

fn check_increasing(ts: impl Iterator<Item = f64>, paths: &[String], fallback: &str) -> Result<(), IoError> {
    let mut prev = f64::NEG_INFINITY;
    for (i, t) in ts.enumerate() {
        if !(t > prev) {
            return Err(IoError::Monotonicity {
                path: paths.get(i).cloned().unwrap_or_else(|| fallback.to_owned()),
                index: i,
            });
        }
        prev = t;
    }
    Ok(())
}

fn assemble(raw: RawMotion) -> Result<LoadedMotion, IoError> {
    let robot: RobotModel<f64> =
        parse_urdf(&raw.robot.urdf).map_err(|e| schema(format!("{}.urdf", raw.robot_path), e.to_string()))?;
    if robot.link_index(&raw.robot.ee_link).is_none() {
        return Err(schema(
            format!("{}.ee_link", raw.robot_path),
            format!("robot has no link `{}`", raw.robot.ee_link),
        ));
    }
    let joints = raw.joints;
    if joints.rows.is_empty() {
        return Err(schema(raw.rows_path, "at least one sample is required"));
    }

    let actuated: Vec<_> = robot.actuated_joints().collect();
    if joints.names.len() != actuated.len() {
        return Err(schema(
            raw.names_path,
            format!("{} joints given, robot has {} actuated joints", joints.names.len(), actuated.len()),
        ));
    }
    // column in the file for each actuated joint, plus its angle scale
    let mut columns = Vec::with_capacity(actuated.len());
    for spec in &actuated {
        let k = joints
            .names
            .iter()
            .position(|n| n == &spec.name)
            .ok_or_else(|| schema(raw.names_path.clone(), format!("joint `{}` missing", spec.name)))?;
        let unit_path = if raw.units_path.starts_with("line") {
            raw.units_path.clone()
        } else {
            format!("{}[{k}]", raw.units_path)
        };
        let angular = matches!(spec.kind, JointKind::Revolute | JointKind::Continuous);
        let scale = match (joints.units[k].as_deref(), angular) {
            (None, _) | (Some("rad"), true) | (Some("m"), false) => 1.0,
            (Some("deg"), true) => std::f64::consts::PI / 180.0,
            (Some(u), _) => {
                return Err(IoError::Unit {
                    path: unit_path,
                    unit: u.to_owned(),
                })
            }
        };
        columns.push((k, scale));
    }
    if let Some((k, n)) = joints
        .names
        .iter()
        .enumerate()
        .find(|(k, n)| joints.names[..*k].contains(n))
    {
        return Err(schema(raw.names_path.to_string(), format!("duplicate joint `{n}` at column {k}")));
    }

    check_increasing(joints.rows.iter().map(|r| r.0), &joints.row_paths, &raw.rows_path)?;
    for (name, track) in &raw.tracks {
        check_increasing(
            track.rows.iter().map(|r| r[0]),
            &track.row_paths,
            &format!("object_tracks.{name}.rows"),
        )?;
    }

    let t0 = raw
        .tracks
        .values()
        .filter_map(|t| t.rows.first().map(|r| r[0]))
        .fold(joints.rows[0].0, f64::min);

    let timestamps: Vec<f64> = joints.rows.iter().map(|r| r.0 - t0).collect();
    let configurations: Vec<Vec<f64>> = joints
        .rows
        .iter()
        .map(|(_, q)| columns.iter().map(|(k, s)| if *s == 1.0 { q[*k] } else { q[*k] * s }).collect())
        .collect();
    let names = actuated.iter().map(|s| s.name.clone()).collect();
    let joint_traj = JointTrajectory::new(names, timestamps, configurations)
        .map_err(|e| schema(raw.rows_path.clone(), e.to_string()))?;

    let mut object_tracks = BTreeMap::new();
    for (name, track) in raw.tracks {
        let tpath = format!("object_tracks.{name}.rows");
        if track.rows.is_empty() {
            return Err(schema(tpath, "at least one sample is required"));
        }
        let mut ts = Vec::with_capacity(track.rows.len());
        let mut poses = Vec::with_capacity(track.rows.len());
        for (r, path) in track.rows.iter().zip(&track.row_paths) {
            let q = UnitQuaternion::try_new(r[4], r[5], r[6], r[7])
                .ok_or_else(|| schema(path.clone(), "orientation quaternion is zero"))?;
            ts.push(r[0] - t0);
            poses.push(Pose::new(Vec3::new(r[1], r[2], r[3]), q));
        }
        let traj = PoseTrajectory::new(ts, poses).map_err(|e| schema(tpath, e.to_string()))?;
        object_tracks.insert(name, traj);
    }

    let mut loaded = LoadedMotion {
        motion: Motion {
            id: String::new(),
            name: raw.name,
            robot_ref: robot.name().to_owned(),
            ee_link: raw.robot.ee_link,
            joints: joint_traj,
            object_tracks,
        },
        robot,
        urdf: raw.robot.urdf,
    };
    loaded.motion.id = content_id(&save_motion(&loaded));
    Ok(loaded)
}

/// Content-derived identifier (first 12 bytes of SHA-256, hex): identical
/// documents get identical ids.
pub fn content_id(document: &[u8]) -> String {
    let digest = Sha256::digest(document);
    digest[..12].iter().fold(String::with_capacity(24), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Serialize)]
struct MotionFileOut<'a> {
    format_version: u64,
    name: &'a str,
    robot: RobotOut<'a>,
    joints: JointsOut<'a>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    object_tracks: BTreeMap<&'a str, TrackOut>,
}

#[derive(Serialize)]
struct RobotOut<'a> {
    urdf: &'a str,
    ee_link: &'a str,
}

#[derive(Serialize)]
struct JointsOut<'a> {
    names: &'a [String],
    units: Vec<&'static str>,
    rows: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct TrackOut {
    rows: Vec<[f64; 8]>,
}

/// Canonical motion JSON (radians and metres, inline URDF, newline-terminated).
pub fn save_motion(loaded: &LoadedMotion) -> Vec<u8> {
    let m = &loaded.motion;
    let units = m
        .joints
        .joint_names()
        .iter()
        .map(|n| {
            let prismatic = loaded
                .robot
                .joints()
                .iter()
                .any(|j| &j.name == n && j.kind == JointKind::Prismatic);
            if prismatic {
                "m"
            } else {
                "rad"
            }
        })
        .collect();
    let rows = m
        .joints
        .timestamps()
        .iter()
        .zip(m.joints.configurations())
        .map(|(t, q)| std::iter::once(*t).chain(q.iter().copied()).collect())
        .collect();
    let object_tracks = m
        .object_tracks
        .iter()
        .map(|(name, track)| {
            let rows = track
                .timestamps()
                .iter()
                .zip(track.poses())
                .map(|(t, p)| {
                    let [qx, qy, qz, qw] = p.orientation.to_array();
                    [*t, p.position.x, p.position.y, p.position.z, qx, qy, qz, qw]
                })
                .collect();
            (name.as_str(), TrackOut { rows })
        })
        .collect();
    let doc = MotionFileOut {
        format_version: MOTION_FORMAT_VERSION,
        name: &m.name,
        robot: RobotOut {
            urdf: &loaded.urdf,
            ee_link: &m.ee_link,
        },
        joints: JointsOut {
            names: m.joints.joint_names(),
            units,
            rows,
        },
        object_tracks,
    };
    let mut out = serde_json::to_vec(&doc).expect("motion documents serialize");
    out.push(b'\n');
    out
}

/// Panel kinds of the workbench.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PanelKind {
    Scene3d,
    QuaternionSpace,
    Timeseries,
    UmapGraph,
    Timeline,
    MotionLibrary,
    Options,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitDirection {
    Horizontal,
    Vertical,
}

/// Dock layout: leaves are panels, inner nodes split space among children.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LayoutNode {
    Panel {
        /// Key into [`Session::views`].
        id: String,
        kind: PanelKind,
    },
    Split {
        direction: SplitDirection,
        /// One share per child; they sum to 1.
        proportions: Vec<f64>,
        children: Vec<LayoutNode>,
    },
}

impl Default for LayoutNode {
    fn default() -> Self {
        LayoutNode::Panel {
            id: "library".into(),
            kind: PanelKind::MotionLibrary,
        }
    }
}

impl LayoutNode {
    fn check(&self, path: &str) -> Result<(), IoError> {
        let LayoutNode::Split {
            proportions, children, ..
        } = self
        else {
            return Ok(());
        };
        let ppath = format!("{path}.proportions");
        if children.len() < 2 {
            return Err(schema(format!("{path}.children"), "a split needs at least two children"));
        }
        if proportions.len() != children.len() {
            return Err(schema(
                ppath,
                format!("{} proportions for {} children", proportions.len(), children.len()),
            ));
        }
        if proportions.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(schema(ppath, "proportions must be positive"));
        }
        let sum: f64 = proportions.iter().sum();
        if (sum - 1.0).abs() > PROPORTION_TOLERANCE {
            return Err(schema(ppath, format!("proportions sum to {sum}, expected 1")));
        }
        for (k, c) in children.iter().enumerate() {
            c.check(&format!("{path}.children[{k}]"))?;
        }
        Ok(())
    }

    /// Panel ids in depth-first order.
    pub fn panel_ids(&self) -> Vec<&str> {
        match self {
            LayoutNode::Panel { id, .. } => vec![id.as_str()],
            LayoutNode::Split { children, .. } => children.iter().flat_map(LayoutNode::panel_ids).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarpPair {
    pub a: String,
    pub b: String,
    pub cost: LocalCost<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CameraPose {
    pub position: [f64; 3],
    pub target: [f64; 3],
    pub up: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fov_deg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SyncFlags {
    /// Scenes sharing a group name share their camera.
    pub camera_group: Option<String>,
    pub follow_cursor: bool,
}

/// Per-panel configuration.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ViewConfig {
    pub motion_ids: Vec<String>,
    pub visible_traces: Vec<String>,
    pub selected_joints: Vec<usize>,
    pub warp: Option<WarpPair>,
    pub camera: Option<CameraPose>,
    pub sync: SyncFlags,
    /// Fields from newer writers, kept as-is.
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

/// Shareable workbench state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub format_version: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_id: Option<String>,
    #[serde(default)]
    pub motion_ids: Vec<String>,
    #[serde(default)]
    pub layout: LayoutNode,
    #[serde(default)]
    pub views: BTreeMap<String, ViewConfig>,
    /// Global time cursor, seconds.
    #[serde(default)]
    pub cursor: f64,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

impl Default for Session {
    fn default() -> Self {
        Session {
            format_version: SESSION_FORMAT_VERSION,
            session_id: None,
            motion_ids: Vec::new(),
            layout: LayoutNode::default(),
            views: BTreeMap::new(),
            cursor: 0.0,
            extra: BTreeMap::new(),
        }
    }
}

impl Session {
    pub fn validate(&self) -> Result<(), IoError> {
        if self.format_version != SESSION_FORMAT_VERSION {
            return Err(IoError::Version {
                found: self.format_version.to_string(),
            });
        }
        if !self.cursor.is_finite() {
            return Err(schema("cursor", "must be finite"));
        }
        self.layout.check("layout")
    }

    /// Every motion id the session refers to, sorted and deduplicated.
    pub fn referenced_motions(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.motion_ids.clone();
        for v in self.views.values() {
            ids.extend(v.motion_ids.iter().cloned());
            if let Some(w) = &v.warp {
                ids.push(w.a.clone());
                ids.push(w.b.clone());
            }
        }
        ids.sort();
        ids.dedup();
        ids
    }
}

/// Canonical session document: sorted keys, two-space indent, trailing newline.
pub fn save_session(session: &Session) -> Result<Vec<u8>, IoError> {
    session.validate()?;
    let value = serde_json::to_value(session).map_err(|e| schema("$", e.to_string()))?;
    let mut out = serde_json::to_vec_pretty(&value).expect("JSON values serialize");
    out.push(b'\n');
    Ok(out)
}

pub fn load_session(bytes: &[u8]) -> Result<Session, IoError> {
    let value: Value = serde_json::from_slice(bytes).map_err(|e| {
        schema(
            format!("line {}", e.line()),
            format!("invalid JSON at column {}: {e}", e.column()),
        )
    })?;
    match value.get("format_version") {
        Some(Value::Number(n)) if n.as_u64() == Some(SESSION_FORMAT_VERSION) => {}
        Some(other) => return Err(IoError::Version { found: other.to_string() }),
        None => return Err(schema("format_version", "missing required field")),
    }
    let session: Session = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        schema(path, e.into_inner().to_string())
    })?;
    session.validate()?;
    Ok(session)
}

const SERIES_HEADER: [&str; 4] = ["series", "unit", "t", "value"];

/// Long-format CSV `series,unit,t,value`, one line per sample.
pub fn export_series_csv(series: &[ScalarSeries<f64>]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(SERIES_HEADER).expect("in-memory write");
    for s in series {
        for (t, v) in s.timestamps.iter().zip(&s.values) {
            w.write_record([s.name.as_str(), s.unit.as_str(), &t.to_string(), &v.to_string()])
                .expect("in-memory write");
        }
    }
    w.into_inner().expect("in-memory write")
}

/// Inverse of [`export_series_csv`]. Consecutive rows with the same name form one series.
pub fn parse_series_csv(bytes: &[u8]) -> Result<Vec<ScalarSeries<f64>>, IoError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
    let header = reader.headers().map_err(|e| schema("line 1", e.to_string()))?;
    if header.iter().ne(SERIES_HEADER) {
        return Err(schema("line 1", "expected header `series,unit,t,value`"));
    }
    let mut out: Vec<(String, String, Vec<f64>, Vec<f64>)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            schema(format!("line {line}"), e.to_string())
        })?;
        let path = format!("line {}", record.position().map_or(0, |p| p.line()));
        let num = |k: usize| {
            record[k]
                .parse::<f64>()
                .map_err(|_| schema(path.clone(), format!("`{}` is not a number", &record[k])))
        };
        let (t, v) = (num(2)?, num(3)?);
        match out.last_mut() {
            Some(last) if last.0 == record[0] && last.1 == record[1] => {
                last.2.push(t);
                last.3.push(v);
            }
            _ => out.push((record[0].to_owned(), record[1].to_owned(), vec![t], vec![v])),
        }
    }
    out.into_iter()
        .map(|(name, unit, ts, vs)| {
            ScalarSeries::new(name.clone(), unit, ts, vs).map_err(|e| schema(format!("series {name}"), e.to_string()))
        })
        .collect()
}

/// Plain-text line-set geometry:
///
/// ```text
/// mocomp-trace 1
/// vertex <t> <x> <y> <z>        one per polyline vertex, in order
/// polyline <i0> <i1> ...        vertex indices of the connected line
/// cone <t> <x> <y> <z> <dx> <dy> <dz> <scale>
/// ```
///
/// `polyline` is omitted for an empty trace. Numbers use shortest
/// round-trip decimal form.
pub fn export_trace(polyline: &TracePolyline<f64>, cones: &[ConeGlyph<f64>]) -> Vec<u8> {
    let mut s = String::new();
    s.push_str(TRACE_MAGIC);
    s.push('\n');
    for (t, p) in polyline.timestamps.iter().zip(&polyline.points) {
        let _ = writeln!(s, "vertex {t} {} {} {}", p.x, p.y, p.z);
    }
    if !polyline.points.is_empty() {
        s.push_str("polyline");
        for i in 0..polyline.points.len() {
            let _ = write!(s, " {i}");
        }
        s.push('\n');
    }
    for c in cones {
        let _ = writeln!(
            s,
            "cone {} {} {} {} {} {} {} {}",
            c.t, c.position.x, c.position.y, c.position.z, c.direction.x, c.direction.y, c.direction.z, c.scale
        );
    }
    s.into_bytes()
}

pub fn parse_trace(bytes: &[u8]) -> Result<(TracePolyline<f64>, Vec<ConeGlyph<f64>>), IoError> {
    let text = std::str::from_utf8(bytes).map_err(|e| schema("$", e.to_string()))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, TRACE_MAGIC)) => {}
        _ => return Err(schema("line 1", format!("expected `{TRACE_MAGIC}`"))),
    }
    let mut timestamps = Vec::new();
    let mut points = Vec::new();
    let mut cones = Vec::new();
    for (i, line) in lines {
        let path = format!("line {}", i + 1);
        let mut words = line.split_ascii_whitespace();
        let tag = words.next().unwrap_or("");
        let nums = words
            .map(|w| w.parse::<f64>().map_err(|_| schema(path.clone(), format!("`{w}` is not a number"))))
            .collect::<Result<Vec<_>, _>>()?;
        match (tag, nums.len()) {
            ("vertex", 4) => {
                timestamps.push(nums[0]);
                points.push(Vec3::new(nums[1], nums[2], nums[3]));
            }
            ("polyline", n) => {
                let sequential = n == points.len() && nums.iter().enumerate().all(|(k, v)| *v == k as f64);
                if !sequential {
                    return Err(schema(path, "polyline must list every vertex in order"));
                }
            }
            ("cone", 8) => cones.push(ConeGlyph {
                t: nums[0],
                position: Vec3::new(nums[1], nums[2], nums[3]),
                direction: Vec3::new(nums[4], nums[5], nums[6]),
                scale: nums[7],
            }),
            _ => return Err(schema(path, format!("unrecognized record `{line}`"))),
        }
    }
    Ok((TracePolyline { timestamps, points }, cones))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{FixtureCase, FIXTURE_ARM_URDF};

    const ONE_JOINT: &str = r#"<robot name="r">
      <link name="base"/><link name="arm"/>
      <joint name="j1" type="revolute"><parent link="base"/><child link="arm"/>
        <axis xyz="0 0 1"/><limit lower="-3" upper="3"/></joint>
    </robot>"#;

    fn minimal(rows: &str, units: &str) -> Vec<u8> {
        let urdf = serde_json::to_string(ONE_JOINT).unwrap();
        format!(
            r#"{{"format_version":1,"name":"m","robot":{{"urdf":{urdf},"ee_link":"arm"}},
               "joints":{{"names":["j1"],{units}"rows":{rows}}}}}"#
        )
        .into_bytes()
    }

    fn sidecar() -> LoadOptions {
        LoadOptions {
            sidecar: Some(RobotSpec {
                urdf: ONE_JOINT.into(),
                ee_link: "arm".into(),
            }),
            ..Default::default()
        }
    }

    #[test]
    fn minimal_json_loads() {
        let m = load_motion(&minimal("[[1.0,0.1],[1.5,0.2],[2.0,0.3]]", ""), MotionFormat::Json, &LoadOptions::default())
            .unwrap();
        assert_eq!(m.motion.joints.dof(), 1);
        assert_eq!(m.motion.joints.len(), 3);
        assert_eq!(m.motion.joints.timestamps(), &[0.0, 0.5, 1.0]);
        assert_eq!(m.motion.id.len(), 24);
    }

    #[test]
    fn degrees_become_radians() {
        let m = load_motion(
            &minimal("[[0,90],[1,0]]", r#""units":["deg"],"#),
            MotionFormat::Json,
            &LoadOptions::default(),
        )
        .unwrap();
        assert!((m.motion.joints.configuration(0)[0] - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        let err = load_motion(
            &minimal("[[0,90],[1,0]]", r#""units":["m"],"#),
            MotionFormat::Json,
            &LoadOptions::default(),
        )
        .unwrap_err();
        assert_eq!(err.code(), "UnitError");
        assert_eq!(err.path(), Some("joints.units[0]"));
    }

    #[test]
    fn json_errors_carry_paths() {
        let err = load_motion(&minimal("[[0,1],[1,2,3]]", ""), MotionFormat::Json, &LoadOptions::default()).unwrap_err();
        assert_eq!(err.path(), Some("joints.rows[1]"));
        let err = load_motion(&minimal("[[0,1],[0,2]]", ""), MotionFormat::Json, &LoadOptions::default()).unwrap_err();
        assert_eq!(
            err,
            IoError::Monotonicity {
                path: "joints.rows[1]".into(),
                index: 1
            }
        );
        let bad = String::from_utf8(minimal("[[0,1]]", "")).unwrap().replace("\"format_version\":1", "\"format_version\":2");
        assert_eq!(
            load_motion(bad.as_bytes(), MotionFormat::Json, &LoadOptions::default()).unwrap_err().code(),
            "VersionError"
        );
        let bad_urdf = br#"{"format_version":1,"name":"m","robot":{"urdf":"<robot","ee_link":"a"},"joints":{"names":[],"rows":[[0]]}}"#;
        let err = load_motion(bad_urdf, MotionFormat::Json, &LoadOptions::default()).unwrap_err();
        assert_eq!(err.path(), Some("robot.urdf"));
        let file_ref = br#"{"format_version":1,"name":"m","robot":{"urdf_file":"x.urdf","ee_link":"a"},"joints":{"names":[],"rows":[[0]]}}"#;
        assert_eq!(
            load_motion(file_ref, MotionFormat::Json, &LoadOptions::default()).unwrap_err().path(),
            Some("robot.urdf_file")
        );
    }

    #[test]
    fn csv_width_error_names_line() {
        let csv = "t,j1[deg]\n0,1\n0.1,2\n0.2,3\n0.3,4\n0.4,5\n0.5,6,7\n";
        let err = load_motion(csv.as_bytes(), MotionFormat::Csv, &sidecar()).unwrap_err();
        assert_eq!(err.code(), "SchemaError");
        assert_eq!(err.path(), Some("line 7"));
    }

    #[test]
    fn csv_loads_and_converts() {
        let m = load_motion(b"t,j1[deg]\n2,180\n3,90\n", MotionFormat::Csv, &sidecar()).unwrap();
        assert_eq!(m.motion.joints.timestamps(), &[0.0, 1.0]);
        assert!((m.motion.joints.configuration(0)[0] - PI_F).abs() < 1e-15);
        assert!(load_motion(b"t,j1\n0,1\n", MotionFormat::Csv, &LoadOptions::default()).is_err());
        assert!(load_motion(b"t,j1\n0,nan\n", MotionFormat::Csv, &sidecar()).is_err());
    }

    const PI_F: f64 = std::f64::consts::PI;

    #[test]
    fn motion_save_load_is_value_exact() {
        for case in FixtureCase::ALL {
            for m in case.motions() {
                let bytes = save_motion(&m);
                let back = load_motion(&bytes, MotionFormat::Json, &LoadOptions::default()).unwrap();
                assert_eq!(back.motion, m.motion);
                assert_eq!(save_motion(&back), bytes);
            }
        }
        assert!(FIXTURE_ARM_URDF.contains("joint6"));
    }

    fn three_panel() -> Session {
        let mut views = BTreeMap::new();
        views.insert(
            "scene".to_owned(),
            ViewConfig {
                motion_ids: vec!["a".into(), "b".into()],
                visible_traces: vec!["ee".into()],
                camera: Some(CameraPose {
                    position: [1.0, 2.0, 3.0],
                    target: [0.0, 0.0, 0.1],
                    up: [0.0, 0.0, 1.0],
                    fov_deg: Some(45.0),
                }),
                sync: SyncFlags {
                    camera_group: Some("g".into()),
                    follow_cursor: true,
                },
                ..Default::default()
            },
        );
        views.insert(
            "timeline".to_owned(),
            ViewConfig {
                warp: Some(WarpPair {
                    a: "a".into(),
                    b: "b".into(),
                    cost: LocalCost::WeightedSum(vec![
                        (crate::warp::CostTerm::JointL2, 1.0),
                        (crate::warp::CostTerm::EePosition, 0.5),
                    ]),
                }),
                selected_joints: vec![0, 5],
                ..Default::default()
            },
        );
        Session {
            motion_ids: vec!["a".into(), "b".into()],
            layout: LayoutNode::Split {
                direction: SplitDirection::Horizontal,
                proportions: vec![0.5, 0.5],
                children: vec![
                    LayoutNode::Panel {
                        id: "scene".into(),
                        kind: PanelKind::Scene3d,
                    },
                    LayoutNode::Split {
                        direction: SplitDirection::Vertical,
                        proportions: vec![0.3, 0.7],
                        children: vec![
                            LayoutNode::Panel {
                                id: "timeline".into(),
                                kind: PanelKind::Timeline,
                            },
                            LayoutNode::Panel {
                                id: "plot".into(),
                                kind: PanelKind::Timeseries,
                            },
                        ],
                    },
                ],
            },
            views,
            cursor: 1.25,
            ..Default::default()
        }
    }

    #[test]
    fn sessions_round_trip() {
        for s in [Session::default(), three_panel()] {
            let bytes = save_session(&s).unwrap();
            let back = load_session(&bytes).unwrap();
            assert_eq!(back, s);
            assert_eq!(save_session(&back).unwrap(), bytes);
        }
        assert_eq!(three_panel().referenced_motions(), vec!["a", "b"]);
    }

    #[test]
    fn unknown_fields_survive() {
        let mut v: Value = serde_json::from_slice(&save_session(&three_panel()).unwrap()).unwrap();
        v["future_toggle"] = serde_json::json!({"x": [1, 2.5]});
        v["views"]["scene"]["opacity"] = serde_json::json!(0.4);
        let s = load_session(&serde_json::to_vec(&v).unwrap()).unwrap();
        assert_eq!(s.extra["future_toggle"], serde_json::json!({"x": [1, 2.5]}));
        assert_eq!(s.views["scene"].extra["opacity"], serde_json::json!(0.4));
        let again: Value = serde_json::from_slice(&save_session(&s).unwrap()).unwrap();
        assert_eq!(again, v);
    }

    #[test]
    fn bad_sessions_are_rejected() {
        let text = String::from_utf8(save_session(&three_panel()).unwrap()).unwrap();
        let tampered = text.replacen("0.3,", "0.8,", 1);
        let err = load_session(tampered.as_bytes()).unwrap_err();
        assert_eq!(err.code(), "SchemaError");
        assert_eq!(err.path(), Some("layout.children[1].proportions"));
        let v2 = text.replace("\"format_version\": 1", "\"format_version\": 2");
        assert_eq!(load_session(v2.as_bytes()).unwrap_err().code(), "VersionError");
        let bad_kind = text.replace("\"scene3d\"", "\"hologram\"");
        let err = load_session(bad_kind.as_bytes()).unwrap_err();
        assert_eq!(err.code(), "SchemaError");
        assert!(err.path().unwrap().starts_with("layout"));
    }

    #[test]
    fn series_csv() {
        assert_eq!(export_series_csv(&[]), b"series,unit,t,value\n");
        let s = ScalarSeries::new(
            "v, x",
            "m/s",
            (0..1000).map(|k| k as f64 / 3.0).collect(),
            (0..1000).map(|k| (k as f64).sqrt()).collect(),
        )
        .unwrap();
        let bytes = export_series_csv(std::slice::from_ref(&s));
        assert_eq!(bytes.iter().filter(|b| **b == b'\n').count(), 1001);
        let back = parse_series_csv(&bytes).unwrap();
        assert_eq!(back, vec![s]);
        assert_eq!(export_series_csv(&back), bytes);
    }

    #[test]
    fn trace_text_round_trip() {
        let poly = TracePolyline {
            timestamps: vec![0.0, 0.1, 0.2],
            points: vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(0.1, 1e-17, -2.5), Vec3::new(1.0 / 3.0, 0.0, 0.0)],
        };
        let cones = vec![ConeGlyph {
            t: 0.0,
            position: Vec3::zeros(),
            direction: Vec3::unit_x(),
            scale: 0.01,
        }];
        let bytes = export_trace(&poly, &cones);
        let (p, c) = parse_trace(&bytes).unwrap();
        assert_eq!((p.clone(), c.clone()), (poly, cones));
        assert_eq!(export_trace(&p, &c), bytes);
        assert!(parse_trace(b"mocomp-trace 1\nvertex 0 1\n").is_err());
        let empty = export_trace(&TracePolyline { timestamps: vec![], points: vec![] }, &[]);
        assert_eq!(empty, b"mocomp-trace 1\n");
    }
}
