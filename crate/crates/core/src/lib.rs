//! Decentralized learning model predictive control for minimum-time
//! multi-agent trajectory optimization with coupled collision constraints.

pub mod datastore;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod lmpc_agent;
pub mod orchestrator;
pub mod synthesis;
pub mod trajopt;

pub use error::{Error, Result};
