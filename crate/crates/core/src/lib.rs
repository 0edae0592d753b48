//! Zeroth-order primal-dual methods for distributed nonconvex optimization.
//!
//! Agents only observe noisy function values of their local objectives and
//! build Gaussian-smoothing gradient estimates from them. Two algorithms are
//! provided:
//!
//! * [`zone_m`]: a primal-dual scheme over an arbitrary connected mesh network,
//!   available both in its matrix form and as the equivalent per-agent
//!   neighbor recursion.
//! * [`zone_s`]: a randomized primal-dual scheme over a star network in which a
//!   central controller owns a nonsmooth term handled through its prox.
//!
//! The remaining modules supply the graph operators, the stochastic oracle,
//! benchmark problems, baselines, stationarity measures and an experiment
//! harness that writes CSV traces.

pub mod baselines;
pub mod error;
pub mod graph;
pub mod harness;
pub mod metrics;
pub mod problems;
pub mod prox;
pub mod streams;
pub mod szo;
pub mod zone_m;
pub mod zone_s;

pub use error::{Error, Result};
pub use graph::{GraphOperators, Topology};
pub use metrics::TraceRecord;
pub use problems::{LocalObjective, Nonsmooth, Problem};
pub use prox::{ProxKind, ProxSpec};
pub use szo::{EstimatorSample, NoiseCoupling, OracleSpec, ScalarField};

/// Agent-stacked iterate: row `i` holds agent `i`'s local copy.
pub type Stacked = nalgebra::DMatrix<f64>;
