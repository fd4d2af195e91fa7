//! Brute-force optima for tiny instances.
//!
//! These exist to check the real solvers. Every search here gives up with
//! `Unknown` instead of guessing once a budget cap is hit.

use std::time::Duration;

use serde::{Deserialize, Serialize};

mod caching;
mod linear;
mod step;

pub use caching::{brute_force_caching, CachingOptimum, MAX_CACHE_PAGES, MAX_CACHE_REQUESTS};
pub use linear::{brute_force_linear_opt, LinearOracleReport, LinearOutcome};
pub use step::{brute_force_step_opt, StepOracleReport, StepOracleStats, StepOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleBudget {
    /// Largest support size tried by the step oracle.
    pub max_modifications: usize,
    /// Cap on supports examined (step) or grid states held (linear).
    pub max_lattice: usize,
    pub time_limit: Duration,
}

impl Default for OracleBudget {
    fn default() -> Self {
        Self {
            max_modifications: 64,
            max_lattice: 5_000_000,
            time_limit: Duration::from_secs(60),
        }
    }
}
