pub mod certificate;
pub mod cli;
pub mod critical;
pub mod decoupled;
pub mod error;
pub mod frw;
pub mod kernel;
pub mod luminosity;
pub mod numerics;

pub use error::{Error, Result};
