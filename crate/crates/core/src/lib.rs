//! Core of an agent-based epidemic laboratory.
//!
//! Everything in this crate is pure computation over in-memory data: building a
//! synthetic regional population, stepping the daily contagion model, applying
//! intervention calendars, batch statistics and second-wave selection,
//! reproduction-number estimation, vaccination planning with a genetic
//! optimizer, input-output economic accounting and SVG rendering.
//!
//! The crate is `no_std` with `alloc`; file formats, parallel batch execution
//! and the command-line front end live in the `epilab` companion crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod batch;
pub mod calendar;
pub mod econ;
pub mod engine;
pub mod error;
pub mod params;
pub mod rt;
pub mod script;
pub mod stats;
pub mod vaccine;
pub mod viz;
pub mod world;

pub use error::{Error, Result};
