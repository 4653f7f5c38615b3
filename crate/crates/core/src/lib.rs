//! Entropy-style counting for measured group actions over finite models:
//! groups with normal forms, sofic approximations into Sym(m), shift-model
//! partitions, good-pattern counting, and Bernoulli-shift experiments.

pub mod ap;
pub mod bernoulli;
pub mod error;
pub mod fin;
pub mod group;
pub mod perm;
pub mod partition;
pub mod sofic;
pub mod space;
pub mod verify;

pub use error::{Error, Result};
