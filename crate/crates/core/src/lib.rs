//! Finite-volume machinery for one-sided long-range Ising measures and the
//! g-measures built from them.
//!
//! The crate is organised by subsystem:
//!
//! * [`space`] and [`potential`]: symbolic windows, the coordinatewise order,
//!   the one-point potential of the long-range Ising chain and its variations.
//! * [`gibbs`]: exact enumeration and heat-bath sampling of finite-volume
//!   Gibbs specifications with plus/minus/free/fixed boundaries.
//! * [`berbee`]: the absorbing chain that controls mixing of `[0,N)`-Gibbsian
//!   measures, and the transfer operator on cylinder tables.
//! * [`rc`]: the long-range random-cluster model, Edwards-Sokal sampling,
//!   stochastic-dominance checks and the folding map.
//! * [`factor`]: the four-symbol g-function, its three-symbol factor and the
//!   plus/minus gap of the induced g-function.

pub mod berbee;
pub mod error;
pub mod factor;
pub mod gibbs;
pub mod potential;
pub mod rc;
pub mod seed;
pub mod space;
pub mod stats;

/// Crate version, echoed in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{Error, Result};
pub use gibbs::{ExactDistribution, HeatBath, SpinWindow};
pub use potential::{PotentialSpec, VariationSequence};
pub use space::{Alphabet, BoundaryCondition, Sign, Window};
pub use stats::MeasureEstimate;
