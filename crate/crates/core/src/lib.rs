pub mod analytic;
pub mod channels;
pub mod error;
pub mod filtration;
pub mod gates;
pub mod metrics;
pub mod optimizer;
pub mod qstate;
pub mod sweep;
pub mod tasks;

pub use error::{Error, Result};
