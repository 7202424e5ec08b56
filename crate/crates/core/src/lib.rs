//! Epidemic simulation over temporal contact networks with sequential
//! network assimilation and graph-based vaccination strategies.
//!
//! The crate is organised bottom-up:
//!
//! * [`graph`]: sparse weighted graphs, temporal sequences, degree and
//!   betweenness centrality.
//! * [`contact_data`]: contact-log ingestion, condensation into snapshots,
//!   partial-observation masks and the synthetic fallback dataset.
//! * [`epidemic`]: network SIR propagation and the ODE reference model.
//! * [`strategies`]: per-step selection of vaccination targets.
//! * [`community`]: fluid community detection and partition performance.
//! * [`assimilation`]: BLUE / Kalman gain / 3D-VAR kernel and the
//!   network-edge parametrization.
//! * [`multilayer`]: Barabási-Albert layered networks with drifting
//!   per-layer infectious probabilities and their assimilation.
//! * [`harness`]: scenario orchestration, Monte Carlo aggregation and
//!   CSV/SVG output.
//!
//! Monte Carlo runs, betweenness sources and community scans are spread over
//! a rayon pool when the `parallel` feature is enabled (the default); see
//! [`exec::Execution`].

// `!(x > 0.0)` is how NaN gets rejected alongside non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assimilation;
pub mod community;
pub mod contact_data;
pub mod epidemic;
pub mod error;
pub mod exec;
pub mod graph;
pub mod harness;
pub mod multilayer;
pub mod rng;
pub mod strategies;

pub use error::{Error, Result};
