pub mod analysis;
pub mod cli;
pub mod error;
pub mod measurements;
pub mod stats;
pub mod store;
pub mod survey;
pub mod synth;

pub use error::{Error, ErrorCategory, Result};
