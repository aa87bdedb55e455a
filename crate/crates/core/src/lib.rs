//! Dimensionally-aware symbolic regression by greedy local search, with
//! local optima network extraction, graph metrics and a standard GP baseline.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below fix the common double-precision case.

pub mod dataset;
pub mod expr;
pub mod fitness;
pub mod gp;
pub mod initializer;
pub mod localsearch;
pub mod lon;
pub mod metrics;
pub mod neighbourhood;
pub mod scalar;
pub mod units;

pub use dataset::{Dataset, EquationSpec};
pub use expr::{CanonicalKey, Expr};
pub use fitness::FitnessValue;
pub use gp::{GpConfig, GpRunOutcome, GpTree};
pub use localsearch::{DagpConfig, MultiStart, SearchResult};
pub use lon::{Lon, LonOptions};
pub use metrics::{Graph, MetricsRow};
pub use neighbourhood::{Neighbourhood, NeighbourhoodConfig, Operator};
pub use scalar::Scalar;
pub use units::UnitSignature;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Dataset64 = Dataset<f64>;
pub type Dataset32 = Dataset<f32>;
pub type Fitness64 = FitnessValue<f64>;
pub type SearchResult64 = SearchResult<f64>;
pub type MultiStart64 = MultiStart<f64>;
pub type Lon64 = Lon<f64>;
pub type GpRunOutcome64 = GpRunOutcome<f64>;
