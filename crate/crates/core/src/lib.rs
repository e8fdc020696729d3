//! Numerical checks for the symmetric-operator calculus of isometric
//! immersions.
//!
//! The crate is organised bottom-up:
//!
//! - [`symop`]: pointwise algebra of symmetric operators and Newton operators;
//! - [`geometry`]: parametrized immersions into Euclidean or hyperbolic space,
//!   with fundamental forms and ambient radial data;
//! - [`fields`]: operator fields on a chart, their divergence, Φ-mean curvature
//!   and the Φ-divergence of ambient vector fields;
//! - [`comparison`]: solutions of `h'' + 𝒦h = 0` and the validity window
//!   `μ_{𝒦,α}` of the growth estimates;
//! - [`ballgrowth`]: meshed intrinsic balls and measured growth curves checked
//!   against the explicit lower bounds;
//! - [`scenario`]: the configuration format, built-in scenarios and reports
//!   consumed by the command-line driver.

// `!(x > 0.0)` is used on purpose: it rejects NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ballgrowth;
pub mod comparison;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod numdiff;
pub mod scenario;
pub mod symop;

pub use error::{Error, Result};
