//! HTTP service for comparing robot motions: upload motions, request traces,
//! series, alignments and embeddings, and store shareable sessions.
//!
//! Response bodies come from [`api`], which the command line reuses so both
//! front ends emit identical JSON.

pub mod api;
pub mod error;
pub mod server;
pub mod store;

pub use error::{ApiError, ErrorCode};
pub use server::{router, serve, AppState, Config};
pub use store::Store;
