//! Available-bandwidth estimation from packet delays measured at several probe sizes.
//!
//! The fixed part of a path's delay grows affinely with packet size. Probing with
//! two or more sizes, keeping the per-size minimum delay, and solving for the slope
//! gives an available-bandwidth estimate (the inverse slope) together with the
//! size-independent intercept.
//!
//! Crate layout:
//!
//! - [`estimator`]: minimum-delay filtering and the bandwidth/intercept formulas.
//! - [`intercept_model`]: the hop-count / route-length model of the intercept.
//! - [`probe`]: live ICMP / UDP echo probing and TTL hop discovery.
//! - [`sim`]: a seeded multi-hop path simulator with analytic ground truth.
//! - [`stats`]: trimmed delay statistics, jitter and loss.
//! - [`store`]: JSONL session files and CSV import/export.
//! - [`cli`]: the `delaybw` command-line front end.

pub mod cli;
pub mod estimator;
pub mod intercept_model;
pub mod probe;
pub mod sample;
pub mod sim;
pub mod stats;
pub mod store;
pub mod units;

pub use estimator::{BandwidthEstimate, DelayProfile, EstimateMethod, LinearFit, SizeDelayPoint};
pub use intercept_model::{InterceptModel, PathFeatures};
pub use sample::{ProbeMethod, ProbeSample};
pub use sim::{Hop, SimPath};
pub use stats::DelaySummary;
