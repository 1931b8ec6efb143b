//! Geometric analysis of narrative text.
//!
//! The pipeline implemented by this crate:
//!
//! 1. [`ingest`] turns raw sources (dialogue CSV, plain text, tweet exports)
//!    into an ordered sequence of tokenized [`ingest::TextUnit`]s under
//!    configurable normalization rules.
//! 2. [`contingency`] cross-tabulates units against words into a sparse
//!    frequency table with chi-squared geometry (profiles, masses, inertia).
//! 3. [`ca`] fits Correspondence Analysis on the table: a Euclidean factor
//!    embedding of the dual unit/word clouds, with per-point contributions
//!    and squared cosines, plus supplementary projection.
//! 4. [`cluster`] builds sequence-constrained complete-link hierarchies over
//!    the embedded units and segments the sequence with permutation-test
//!    significance gates.
//! 5. [`track`] follows individual terms and character dyads through the
//!    full-dimensional factor space, unit by unit or segment by segment.
//!
//! [`svg`] renders the resulting series and factor planes as minimal
//! self-contained SVG markup.

pub mod ca;
pub mod cluster;
pub mod contingency;
mod error;
pub mod ingest;
pub mod reference;
pub mod svg;
pub mod track;

pub use error::{Error, Result};
