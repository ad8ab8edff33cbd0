//! The two worked scenarios: a single-state flooding game swept over a grid of
//! attack and firewall settings, and a campus network given as a scenario file.

mod ddos;

pub use ddos::{
    ddos_model, ddos_sweep, defender_action, divisor_pairs, drop_fraction, evaluate, grid_points, user_action,
    DdosBeliefs, DdosParams, DdosPoint, DdosSweep, MpGrid, Reference, ReferencePoint, SweepRow, TypeSummary, UserType,
    DDOS_STATE,
};

use thiserror::Error;

use crate::scenario::Scenario;
use crate::solver::SolverError;

/// The campus network scenario: six tabulated states plus the targets their
/// rows name.
pub const CAMPUS_JSON: &str = include_str!("../../data/campus.json");

/// Parameters that reproduce the reference flooding figures (positive `ρ`).
pub const DDOS_TOML: &str = include_str!("../../data/ddos.toml");

pub fn campus_scenario() -> Scenario {
    Scenario::from_json(CAMPUS_JSON).expect("bundled campus scenario is valid")
}

pub fn ddos_params() -> DdosParams {
    DdosParams::from_toml(DDOS_TOML).expect("bundled flooding parameters are valid")
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CasesError {
    #[error("{0}")]
    Io(String),
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("empty {0} grid")]
    EmptyGrid(&'static str),
    #[error(transparent)]
    Solver(#[from] SolverError),
}
