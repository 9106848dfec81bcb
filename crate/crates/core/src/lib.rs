pub mod algorithms;
pub mod convex;
pub mod error;
pub mod harness;
pub mod model;
pub mod rate;

pub use error::{Error, Result};
