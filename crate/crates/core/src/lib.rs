//! Indoor visible-light channel simulator for angle-diversity laser-diode
//! transmitters, a four-branch angle-diversity receiver and quadrant-search
//! beam steering.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod receivers;
pub mod scenario;
pub mod sources;
pub mod steering;

pub use error::{Error, Result};
