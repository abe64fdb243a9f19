pub mod assembly;
pub mod error;
pub mod errors;
pub mod fespace;
pub mod harness;
pub mod linalg;
pub mod manufactured;
pub mod mesh;
pub mod operators;
pub mod timegrid;
pub mod transient;

pub use error::{Error, Result};
