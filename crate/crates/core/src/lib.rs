//! Object-oriented semantic mapping.
//!
//! Per-keyframe depth clouds, camera poses and 2D object detections are fused
//! into a map whose entities are individual 3D object instances. Each object
//! carries an incrementally built point-cloud model, the keyframes it was
//! observed from, and an accumulated per-class confidence vector.
//!
//! The processing chain for one keyframe is:
//!
//! 1. normal estimation and supervoxel over-segmentation ([`supervoxel`]),
//! 2. supporting-plane extraction, edge weighting and a Kruskal cut of the
//!    supervoxel adjacency graph ([`segmentation`]),
//! 3. assignment of 3D segments to 2D detections,
//! 4. two-stage data association against existing objects ([`association`]),
//! 5. insertion or update of object landmarks ([`objectmap`]).
//!
//! [`pipeline`] wires the stages together, [`synth`] generates synthetic
//! scenes with ground truth and [`frameio`] owns every on-disk format.

pub mod association;
pub mod cli;
pub mod error;
pub mod frameio;
pub mod geometry;
pub mod objectmap;
pub mod pipeline;
pub mod segmentation;
pub mod supervoxel;
pub mod synth;

pub use error::{Error, Result};
