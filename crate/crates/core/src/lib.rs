//! Two-sided bounds and monotone iterations for state discrimination,
//! maximum overlap, channel reversal and conditional min-entropy.

pub mod channel;
pub mod error;
pub mod iterate;
pub mod measure;
pub mod numlin;
pub mod overlap;
pub mod random;

pub use error::{Error, Result};
pub use measure::BoundReport;
