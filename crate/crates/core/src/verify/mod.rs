//! Ground-truth checks: exhaustive reachability with bottom-SCC analysis,
//! halting checks, checks specific to reversible dynamic initialization, and
//! a seeded stochastic simulator.

pub mod check;
pub mod engine;
pub mod explore;
pub mod rdi;
pub mod simulate;

pub use check::{check_computes, check_config, check_halting, check_input, inputs_of_size, InputReport, Verdict, VerificationReport};
pub use rdi::{check_rdi, random_init_sequences, RdiCheckParams, RdiReport};
pub use explore::{default_node_cap, explore, ReachGraph, DEFAULT_NODE_CAP};
pub use simulate::{simulate, Outcome, SimulationParams, SimulationReport};
