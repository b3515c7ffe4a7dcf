//! Differentiable Gaussian-splat rendering and hard-configuration mining for
//! physical adversarial camouflage.
//!
//! The crate is `no_std` (with `alloc`). Everything here is a pure function of
//! its inputs; file formats, checkpoints and the command line live in the
//! `rpga` companion crate. Enable the `parallel` feature to spread tiles and
//! batch lanes over a rayon pool; results are bit-identical either way.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod analysis;
pub mod attack;
pub mod composite;
pub mod detector;
mod error;
pub mod hpcm;
pub mod image;
pub mod math;
mod par;
pub mod render;
pub mod rng;
pub mod scene;
pub mod shading;

pub use error::{Error, Result};
pub use image::{Image, Mask};
pub use math::{Mat3, Vec3};
