//! Multi-objective inference orchestration across trust-tiered computational
//! islands: privacy-constrained routing, reversible context sanitization,
//! capacity-aware offloading, mesh membership, and a deterministic scenario
//! simulator.

pub mod lighthouse;
pub mod mist;
pub mod registry;
pub mod tide;
pub mod waves;

pub mod config;
pub mod harness;
