pub mod controllers;
pub mod envs;
pub mod error;
pub mod harness;
pub mod io;
pub mod ocsvm;
pub mod policy;
pub mod rng;
pub mod support;
pub mod supervisor;
pub mod trajectory;

pub use error::{Error, Result};
