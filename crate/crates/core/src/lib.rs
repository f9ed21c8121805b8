//! Hierarchical indoor scene graphs and the pure algorithms around them.
//!
//! The crate is `no_std` (with `alloc`) so it can be embedded anywhere; the
//! `std` feature only forwards to the dependencies. IO, HTTP and the CLI live
//! in the companion `hscene` crate.
//!
//! - [`scenegraph`]: parse, validate, serialize and decompose scene graphs.
//! - [`metrics`]: PRA / OWA / LWA / NDA scoring, distance-band accuracy.
//! - [`geometry`]: depth back-projection, centroids, bounding boxes, masks.
//! - [`perception`]: the iterative object-perception state machine.
//! - [`scenevqa`]: GraphVQA / DistanceVQA record generation and filters.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod geometry;
pub mod metrics;
pub mod perception;
pub mod scenegraph;
pub mod scenevqa;

pub use scenegraph::{RelationTriple, RelationType, SceneGraph};
