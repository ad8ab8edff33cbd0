//! Equilibrium computation on a [`SecModel`](crate::graph::SecModel).
//!
//! The pipeline is [`bay_exp`] (defender weights become posterior
//! expectations), [`stratify`] (SCC condensation, solved sinks first),
//! [`iterate_scc`] (value iteration of the weight pairs inside one cluster) and
//! [`find_nes`], which returns every Nash equilibrium strategy. [`verify_nes`]
//! checks a strategy independently of the search.

mod bayes;
mod iterate;
mod nes;
mod payoff;
mod scc;
mod verify;

pub use bayes::{bay_exp, bay_exp_with, posterior, Beliefs};
pub use iterate::{iterate_scc, IterOutcome};
pub use nes::{enumerate_strategies, find_nes, solve_nes, NesDocument, NesResult, Strategy, StrategyEntry};
pub use payoff::{execution_payoff, lasso_values, Execution};
pub use scc::{stratify, Cluster, ClusterKind, Condensation};
pub use verify::{verify_nes, Player, Verdict};

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    /// Discount factor, strictly inside (0,1).
    pub beta: f64,
    /// Value iteration stops once the weights are within this of their fixed point.
    pub epsilon: f64,
    pub max_iters: usize,
    /// Upper bound on the number of strategies kept during the search.
    pub max_strategies: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { beta: 0.9, epsilon: 1e-6, max_iters: 10_000, max_strategies: 100_000 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(SolverError::Config(format!("beta must lie in (0,1), got {}", self.beta)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(SolverError::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_iters == 0 {
            return Err(SolverError::Config("max_iters must be positive".into()));
        }
        Ok(())
    }
}

/// Absolute slack used when comparing payoffs of magnitude `x` for equality.
pub fn ne_tol(x: f64) -> f64 {
    1e-9 * (1.0 + x.abs())
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("value iteration for type `{ty}` on {{{}}} did not converge in {iterations} iterations (last change {delta:e})", cluster.join(","))]
    NonConvergence { ty: String, cluster: Vec<String>, iterations: usize, delta: f64 },
    #[error("user action `{user}` has zero probability under every type at `{state}`")]
    ZeroPosterior { state: String, user: String },
    #[error("more than {cap} strategies")]
    TooManyStrategies { cap: usize },
    #[error("strategy entry does not name an edge: {0}")]
    DanglingEdge(String),
}
