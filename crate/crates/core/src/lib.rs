//! Exclusivity graphs of causal scenarios with one latent common cause.
//!
//! Events of a scenario become vertices; edges join events that no single
//! deterministic response function can produce together. Weighted
//! independence numbers then give classical bounds for linear inequalities,
//! the Lovász theta function gives an upper bound on quantum values, and a
//! see-saw search over explicit quantum strategies gives lower bounds.

pub mod catalog;
pub mod classical;
pub mod graph;
pub mod quantum;
pub mod scenario;
pub mod structure;

pub use catalog::{catalog_get, catalog_names, cglmp_alpha, cglmp_full, cglmp_s, pearl_family, LinearInequality};
pub use classical::{alpha, classical_max_oracle, enumerate_strategies, DeterministicStrategy, StableSetResult};
pub use graph::{are_exclusive, build_graph, build_graph_with, BuildStrategy, ExclusivityGraph, Graph};
pub use quantum::{lovasz_theta, seesaw_lower_bound, SeesawOptions, SeesawResult, ThetaResult};
pub use scenario::{parse_scenario, CausalScenario, Distribution, Event};
pub use structure::{find_odd_antiholes, find_odd_holes, perfect_verdict, HoleReport};

pub use exclusivity_sdp as sdp;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("causal structure has a directed cycle through {0}")]
    Cycle(String),
    #[error("event does not fit the scenario: {0}")]
    EventMismatch(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("need at least 2 samples, got {0}")]
    InsufficientSamples(usize),
    #[error("instrument is too weak: Cov(X, A) = {0:e}")]
    WeakInstrument(f64),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("index {index} out of range for {len} vertices")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("{count} deterministic strategies exceed the cap of {cap}")]
    StrategyCapExceeded { count: String, cap: u64 },
    #[error("unknown inequality `{0}`")]
    UnknownInequality(String),
    #[error("invalid inequality: {0}")]
    InvalidInequality(String),
    #[error("distribution lacks p({0})")]
    MissingProbability(String),
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("solver failed: {0}")]
    SolverFailed(String),
    #[error(transparent)]
    Sdp(#[from] exclusivity_sdp::SdpError),
    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),
    #[error("problem too large: {0}")]
    TooLarge(String),
    #[error("hole certificate failed: {0}")]
    UnverifiedHole(String),
}

pub type Result<T> = std::result::Result<T, Error>;
