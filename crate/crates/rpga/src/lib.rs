//! File formats, run management and the command line around `rpga-core`.

pub mod checkpoint;
pub mod commands;
pub mod demo;
pub mod error;
pub mod export;
pub mod json;
pub mod ppm;
pub mod run_config;
pub mod scene_file;
pub mod verify;

pub use error::{Error, Result};
