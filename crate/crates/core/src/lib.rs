//! Probabilistic model of Kademlia routing with `α = 1` greedy lookups.

pub mod cli;
pub mod constants;
pub mod error;
pub mod idspace;
pub mod minimize;
pub mod montecarlo;
pub mod network;
pub mod trie;
pub mod verify;

pub use error::{Error, Result};
pub use idspace::{Distance, NodeId};
pub use network::{Network, RoutingTrace};
pub use trie::{IdTrie, SubtreeRef};
