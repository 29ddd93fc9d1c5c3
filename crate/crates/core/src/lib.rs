//! Object-level change detection by self-localization.
//!
//! A query image is cut into overlapping subimage proposals. Each proposal is
//! localized against a database of reference subimages, and the rank at which
//! the correct ("ground-truth") reference image shows up is the evidence of
//! change: a proposal that localizes badly probably contains something that
//! was not there when the reference was recorded. Ranks of overlapping
//! proposals are fused pixel by pixel into a likelihood-of-change (LoC) map.
//!
//! The crate is `no_std` (it needs `alloc`). All IO lives in the companion
//! `dbloc` crate.
//!
//! Stages:
//!
//! 1. [`geometry`]: boxes, the five-box proposal grid, intersection closure.
//! 2. [`descriptor`]: subimage -> unit-norm feature vector.
//! 3. [`retrieval`]: exact nearest-neighbour ranking and ground-truth rank.
//! 4. [`fusion`]: pixel-wise rank fusion, baselines, LoC maps.
//! 5. [`evaluation`]: difficulty indices, labelling, 101-point AP, reports.
//! 6. [`synth`]: seeded synthetic reference/query pairs for benchmarking.

#![no_std]
#![deny(rust_2018_idioms)]

extern crate alloc;

mod error;
mod hash;

pub mod descriptor;
pub mod evaluation;
pub mod fusion;
pub mod geometry;
pub mod raster;
pub mod retrieval;
pub mod synth;

pub use error::{Error, Result};
pub use geometry::{BBox, Proposal, ProposalSource};
pub use raster::Raster;
