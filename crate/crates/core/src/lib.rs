//! Analysis toolkit for cross-border financial asset networks.
//!
//! The pipeline runs from bilateral asset and GDP panels ([`ingest`]) to
//! thresholded binary networks ([`netbuild`]), their path and clustering
//! statistics ([`metrics`]), random comparison graphs ([`nullmodels`]),
//! node-removal robustness experiments ([`knockout`]) and loss-given-default
//! contagion cascades ([`lgd`]).

// `!(x > 0.0)` is used on purpose: it rejects NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod bits;
pub mod error;
pub mod ingest;
pub mod knockout;
pub mod lgd;
pub mod metrics;
pub mod netbuild;
pub mod network;
pub mod nullmodels;
pub mod seed;
pub mod stats;

pub use error::{Error, Result};
pub use ingest::{core_slice, parse_asset_table, parse_gdp_table, AssetPanel, AssetSlice, Country, GdpPanel};
pub use knockout::{CiReport, CurveSummary, KnockoutTrace, Position, Strategy};
pub use lgd::{CascadeResult, ImpactSummary, LgdSpec};
pub use metrics::{DegreePairing, Measure, MeasureVector, SplMatrix};
pub use netbuild::{threshold, threshold_a, threshold_b, ExportFormat, ExposureAverage};
pub use network::{BinaryNetwork, ThresholdRule};
pub use nullmodels::{LogNormalFit, NullModelKind, NullModelSpec};
