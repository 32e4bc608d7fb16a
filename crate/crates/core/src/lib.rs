pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod fields;
pub mod flow;
pub mod gkconstruct;
pub mod linalg4;

pub use error::{GkError, Result};
