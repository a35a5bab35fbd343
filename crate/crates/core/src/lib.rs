pub mod cli;
pub mod ctmp;
pub mod diagnostics;
pub mod importance;
pub mod io;
pub mod error;
pub mod estimation;
pub mod hidden;
pub mod model;
pub mod oracle;
pub mod rng;

pub use error::{Error, Result};
