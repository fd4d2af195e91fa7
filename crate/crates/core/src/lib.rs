//! chansched: scheduling capacity modifications on payment-channel networks.
//!
//! Given a network of channels and a fixed sequence of payments, find when and
//! how to reset channel capacities so every payment routes, at minimum cost.
//! Two cost models are supported: linear (total absolute change, solved
//! exactly by [`lp`]) and step (number of changes, searched by
//! [`heuristics`]). [`oracle`] holds brute-force optima for tiny instances,
//! [`hardness`] the caching reduction and the online adversary, and
//! [`toolkit`] ingestion, workload generation and the benchmark harness.

pub mod error;
pub mod hardness;
pub mod heuristics;
pub mod io;
pub mod lp;
pub mod model;
pub mod num;
pub mod oracle;
pub mod sim;
pub mod toolkit;

pub use error::{Error, Result};
pub use model::{
    capital_at, validate_network, Channel, Direction, Hop, Instance, Mode, Modification, Network,
    Node, Schedule, Transaction, TransactionSet, ValidationReport,
};
pub use sim::{linear_cost, simulate, step_cost, PenaltyConfig, Trace, Violation};
