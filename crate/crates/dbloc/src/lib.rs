//! File formats, staged pipeline and command-line front end for
//! detection-by-localization change detection.
//!
//! The algorithms live in [`dbloc_core`]; this crate reads and writes the
//! on-disk artifacts and runs the four stages:
//!
//! * `synth`: generate a seeded benchmark (images, proposals, manifest).
//! * `index`: build and persist the reference-subimage database.
//! * `detect`: localize query proposals, fuse ranks, export LoC maps and
//!   per-qBB records.
//! * `eval`: label qBBs and compute the AP table.

pub mod config;
pub mod error;
pub mod formats;
pub mod pipeline;

pub use config::PipelineConfig;
pub use error::{Error, Result};
