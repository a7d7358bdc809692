//! Sequential structural causal model simulator and causal-effect benchmark harness.
//!
//! The pipeline runs in five stages:
//!
//! 1. [`data`] loads and cleans the Adult census table.
//! 2. [`graph`] holds the two-layer causal DAG (initial-state and transition edges)
//!    and answers adjustment-set queries on the time-unrolled graph.
//! 3. [`samplers`] and [`transitions`] implement the structural equations: fitted
//!    initial-state samplers and hand-designed yearly transitions.
//! 4. [`engine`] fits an SCM from a [`config::Config`], simulates panels by ancestral
//!    sampling under observational or atomic policies, and builds coupled
//!    counterfactual benchmarks.
//! 5. [`estimators`] and [`evaluation`] run treatment-effect estimators on the
//!    benchmark and score them against simulated ground truth.
//!
//! All randomness in simulation is counter-based ([`noise`]), so results do not
//! depend on thread scheduling. Data-parallel loops go through [`par`], which uses
//! rayon when the `parallel` feature is enabled and plain iterators otherwise.

#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::too_many_arguments,
    clippy::large_enum_variant
)]

pub mod config;
pub mod data;
pub mod engine;
pub mod error;
pub mod estimators;
pub mod evaluation;
pub mod graph;
pub mod learners;
pub mod noise;
pub mod par;
pub mod samplers;
pub mod table;
pub mod transitions;

pub use error::{Error, Result};
