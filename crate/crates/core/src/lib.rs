pub mod bounds;
pub mod derivation;
pub mod error;
pub mod harness;
pub mod numerics;
pub mod perturbation;
pub mod polyring;

pub use error::{Error, Result};
