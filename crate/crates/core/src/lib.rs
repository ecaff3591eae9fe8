pub mod config;
pub mod controller;
pub mod devices;
pub mod domain;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod objective;
pub mod optimizer;
pub mod profiles;
pub mod theory;

pub use error::{Error, Result};
