pub mod analytics;
pub mod cli;
pub mod error;
pub mod harness;
pub mod integrators;
pub mod model;
pub mod noise;
pub mod observable;
pub mod space;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
