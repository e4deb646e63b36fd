pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod kernels;
pub mod linalg;
pub mod net;
pub mod tasks;

pub use error::{Error, Result};
