//! Interactive quantization for distributed extremum computation.
//!
//! A center queries `N` users who each hold an i.i.d. value on `{1..L}`.
//! Every round each active user reports which bin of a shared quantizer its
//! value falls in; only users in the highest occupied bin stay active, and
//! the surviving interval shrinks to that bin. The crate provides:
//!
//! * the round-by-round model ([`State`], [`transitions`], [`stage_cost`]),
//! * candidate quantizer spaces ([`SearchSpace`] and the enumerations),
//! * a Bellman solver for the scalarized objective
//!   `(1 - lambda) * rate + lambda * delay` ([`solve`], [`sweep_lambda`]),
//! * analytical baselines for uniform sources (`closed_form`),
//! * and a seeded Monte Carlo simulator (`sim`).

pub mod closed_form;
mod error;
mod pmf;
mod quantizer;
pub mod sim;
mod solver;
mod spaces;
mod state;

/// Tolerance for "these probabilities sum to one".
pub const MASS_TOL: f64 = 1e-12;

/// Tolerance for comparing scalarized costs computed along different routes.
pub const COST_TOL: f64 = 1e-9;

pub use error::{Error, Result};
pub use pmf::{binary_entropy, binomial_coefficient, entropy_bits, Pmf};
pub use quantizer::{induced_pmf, Quantizer};
pub use sim::{empirical_max_distribution, run as simulate, SimConfig, SimPolicy, SimReport};
pub use solver::{
    argmax_max_gap, compare_quantizer_costs, default_lambda_grid, evaluate_policy, gap_metrics,
    lambda_grid, solve, solve_with_feedback, sweep_lambda, CostPoint, GapPoint, GapReport, Policy,
    Solution, SolveConfig, SweepPoint, ACTION_TIE_TOL,
};
pub use spaces::{
    binary_split_quantizer, enumerate_compositions, enumerate_compositions_capped,
    enumerate_partitions, enumerate_partitions_capped, extended_max_search_family,
    hardy_ramanujan_estimate, partition_count, SearchSpace, COMPOSITION_ENUM_CAP,
    PARTITION_ENUM_CAP,
};
pub use state::{stage_cost, transitions, State, StateKey, Target, TransitionOutcome};
