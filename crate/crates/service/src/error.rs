//! Stable machine-readable error codes and their HTTP statuses.

use std::fmt;

use mocomp_core::embed::EmbedError;
use mocomp_core::io::IoError;
use mocomp_core::motion::MotionError;
use mocomp_core::series::SeriesError;
use mocomp_core::trace::TraceError;
use mocomp_core::urdf::KinematicsError;
use mocomp_core::warp::WarpError;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ErrorCode {
    SchemaError,
    UnitError,
    MonotonicityError,
    VersionError,
    InvalidParameter,
    DimensionMismatch,
    JointCountMismatch,
    JointNameMismatch,
    TooFewSamples,
    SpanMismatch,
    UnknownMotion,
    UnknownSession,
    UnknownLink,
    UnknownTrack,
    UnknownRoute,
    MethodNotAllowed,
    StaleMotionRefs,
    PayloadTooLarge,
    Internal,
}

impl ErrorCode {
    pub const ALL: [ErrorCode; 19] = [
        ErrorCode::SchemaError,
        ErrorCode::UnitError,
        ErrorCode::MonotonicityError,
        ErrorCode::VersionError,
        ErrorCode::InvalidParameter,
        ErrorCode::DimensionMismatch,
        ErrorCode::JointCountMismatch,
        ErrorCode::JointNameMismatch,
        ErrorCode::TooFewSamples,
        ErrorCode::SpanMismatch,
        ErrorCode::UnknownMotion,
        ErrorCode::UnknownSession,
        ErrorCode::UnknownLink,
        ErrorCode::UnknownTrack,
        ErrorCode::UnknownRoute,
        ErrorCode::MethodNotAllowed,
        ErrorCode::StaleMotionRefs,
        ErrorCode::PayloadTooLarge,
        ErrorCode::Internal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::SchemaError => "SchemaError",
            ErrorCode::UnitError => "UnitError",
            ErrorCode::MonotonicityError => "MonotonicityError",
            ErrorCode::VersionError => "VersionError",
            ErrorCode::InvalidParameter => "InvalidParameter",
            ErrorCode::DimensionMismatch => "DimensionMismatch",
            ErrorCode::JointCountMismatch => "JointCountMismatch",
            ErrorCode::JointNameMismatch => "JointNameMismatch",
            ErrorCode::TooFewSamples => "TooFewSamples",
            ErrorCode::SpanMismatch => "SpanMismatch",
            ErrorCode::UnknownMotion => "UnknownMotion",
            ErrorCode::UnknownSession => "UnknownSession",
            ErrorCode::UnknownLink => "UnknownLink",
            ErrorCode::UnknownTrack => "UnknownTrack",
            ErrorCode::UnknownRoute => "UnknownRoute",
            ErrorCode::MethodNotAllowed => "MethodNotAllowed",
            ErrorCode::StaleMotionRefs => "StaleMotionRefs",
            ErrorCode::PayloadTooLarge => "PayloadTooLarge",
            ErrorCode::Internal => "Internal",
        }
    }

    pub fn status(self) -> u16 {
        match self {
            ErrorCode::UnknownMotion
            | ErrorCode::UnknownSession
            | ErrorCode::UnknownLink
            | ErrorCode::UnknownTrack
            | ErrorCode::UnknownRoute => 404,
            ErrorCode::MethodNotAllowed => 405,
            ErrorCode::StaleMotionRefs => 409,
            ErrorCode::PayloadTooLarge => 413,
            ErrorCode::Internal => 500,
            _ => 400,
        }
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Error body of every non-2xx response: `{"code", "message", "path"?, "missing"?}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    /// Offending field or location, e.g. `joints.rows[3]` or `line 4`.
    pub path: Option<String>,
    /// Motion ids a session refers to that are not stored.
    pub missing: Vec<String>,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    code: &'static str,
    message: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    path: Option<&'a str>,
    #[serde(skip_serializing_if = "<[String]>::is_empty")]
    missing: &'a [String],
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        ApiError {
            code,
            message: message.into(),
            path: None,
            missing: Vec::new(),
        }
    }

    pub fn at(mut self, path: impl Into<String>) -> Self {
        self.path = Some(path.into());
        self
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        ApiError::new(ErrorCode::InvalidParameter, message)
    }

    pub fn unknown_motion(id: &str) -> Self {
        ApiError::new(ErrorCode::UnknownMotion, format!("no motion with id `{id}`"))
    }

    pub fn unknown_session(id: &str) -> Self {
        ApiError::new(ErrorCode::UnknownSession, format!("no session with id `{id}`"))
    }

    pub fn stale_refs(missing: Vec<String>) -> Self {
        ApiError {
            code: ErrorCode::StaleMotionRefs,
            message: format!("session refers to {} motion(s) that are not loaded", missing.len()),
            path: None,
            missing,
        }
    }

    pub fn status(&self) -> u16 {
        self.code.status()
    }

    pub fn body(&self) -> Vec<u8> {
        serde_json::to_vec(&ErrorBody {
            code: self.code.as_str(),
            message: &self.message,
            path: self.path.as_deref(),
            missing: &self.missing,
        })
        .expect("error bodies serialize")
    }
}

impl fmt::Display for ApiError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)?;
        if let Some(p) = &self.path {
            write!(f, " (at {p})")?;
        }
        if !self.missing.is_empty() {
            write!(f, " [missing: {}]", self.missing.join(", "))?;
        }
        Ok(())
    }
}

impl std::error::Error for ApiError {}

impl From<IoError> for ApiError {
    fn from(e: IoError) -> Self {
        let code = match e {
            IoError::Schema { .. } => ErrorCode::SchemaError,
            IoError::Unit { .. } => ErrorCode::UnitError,
            IoError::Monotonicity { .. } => ErrorCode::MonotonicityError,
            IoError::Version { .. } => ErrorCode::VersionError,
        };
        let path = e.path().map(str::to_owned);
        let message = match &e {
            IoError::Schema { message, .. } => message.clone(),
            other => other.to_string(),
        };
        ApiError {
            code,
            message,
            path,
            missing: Vec::new(),
        }
    }
}

impl From<KinematicsError> for ApiError {
    fn from(e: KinematicsError) -> Self {
        let code = match &e {
            KinematicsError::Parse(_)
            | KinematicsError::UnsupportedJointType { .. }
            | KinematicsError::Cycle { .. }
            | KinematicsError::DanglingLink { .. }
            | KinematicsError::InvalidJoint { .. } => ErrorCode::SchemaError,
            KinematicsError::DimensionMismatch { .. } => ErrorCode::DimensionMismatch,
            KinematicsError::UnknownLink(_) => ErrorCode::UnknownLink,
            KinematicsError::JointNameMismatch { .. } => ErrorCode::JointNameMismatch,
            KinematicsError::InvalidMargin(_) => ErrorCode::InvalidParameter,
        };
        ApiError::new(code, e.to_string())
    }
}

impl From<MotionError> for ApiError {
    fn from(e: MotionError) -> Self {
        let code = match &e {
            MotionError::OutOfRange { .. } | MotionError::InvalidRate(_) => ErrorCode::InvalidParameter,
            MotionError::TooFewSamples { .. } => ErrorCode::TooFewSamples,
            MotionError::Shape(_) | MotionError::NonFinite { .. } => ErrorCode::SchemaError,
            MotionError::NonMonotoneTime { .. } => ErrorCode::MonotonicityError,
        };
        ApiError::new(code, e.to_string())
    }
}

impl From<WarpError> for ApiError {
    fn from(e: WarpError) -> Self {
        let code = match e {
            WarpError::Kinematics(k) => return k.into(),
            WarpError::Motion(m) => return m.into(),
            WarpError::DimensionMismatch { .. } => ErrorCode::DimensionMismatch,
            WarpError::EmptyMotion | WarpError::DegeneratePath => ErrorCode::TooFewSamples,
            WarpError::OutOfRange { .. }
            | WarpError::InvalidWeights
            | WarpError::NoPath
            | WarpError::InvalidPath(_) => ErrorCode::InvalidParameter,
        };
        ApiError::new(code, e.to_string())
    }
}

impl From<SeriesError> for ApiError {
    fn from(e: SeriesError) -> Self {
        let code = match e {
            SeriesError::Kinematics(k) => return k.into(),
            SeriesError::Motion(m) => return m.into(),
            SeriesError::TooShort { .. } => ErrorCode::TooFewSamples,
            SeriesError::SpanMismatch { .. } => ErrorCode::SpanMismatch,
            SeriesError::NonMonotoneTime(_) => ErrorCode::MonotonicityError,
            SeriesError::InvalidOrder(_)
            | SeriesError::InvalidWindow(_)
            | SeriesError::IndexOutOfRange { .. }
            | SeriesError::Shape(_) => ErrorCode::InvalidParameter,
        };
        ApiError::new(code, e.to_string())
    }
}

impl From<TraceError> for ApiError {
    fn from(e: TraceError) -> Self {
        let code = match &e {
            TraceError::TooFewSamples(_) => ErrorCode::TooFewSamples,
            TraceError::InvalidStride(_) | TraceError::IndexOutOfRange { .. } => ErrorCode::InvalidParameter,
        };
        ApiError::new(code, e.to_string())
    }
}

impl From<EmbedError> for ApiError {
    fn from(e: EmbedError) -> Self {
        let code = match &e {
            EmbedError::TooFewSamples { .. } => ErrorCode::TooFewSamples,
            EmbedError::JointCountMismatch { .. } => ErrorCode::JointCountMismatch,
            EmbedError::InvalidParams(_) | EmbedError::InvalidK { .. } | EmbedError::IndexOutOfRange { .. } => {
                ErrorCode::InvalidParameter
            }
        };
        ApiError::new(code, e.to_string())
    }
}
