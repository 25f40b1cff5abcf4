//! Node-injection poisoning attacks on graph convolutional node classifiers.
//!
//! The crate covers the whole pipeline: attributed graphs and their statistics,
//! a from-scratch two-layer GCN, a hierarchical deep Q-learning attacker that
//! wires injected nodes and chooses their labels, baseline attackers, and an
//! experiment runner that evaluates a victim GCN on poisoned graphs.

pub mod agent;
pub mod baselines;
pub mod embedding;
pub mod env;
pub mod error;
pub mod experiment;
pub mod gcn;
pub mod graph;
pub mod numerics;
pub mod rng;

pub use error::{Error, Result};
