//! Word metrics, hyperbolicity certificates and boundary invariants for
//! semidirect products `G = H ⋊_α Z` where `α` confines `H` into a subset `A`.
//!
//! Elements of `G` are pairs `(h, m)` with product
//! `(h, m)·(h', m') = (h·α^m(h'), m + m')`, so that `α h α⁻¹ = α(h)`.
//! The generating set is `A ∪ {α, α⁻¹}`.

pub mod boundary;
pub mod error;
pub mod groups;
pub mod metric;
pub mod trees;
pub mod word;

pub use error::{FocalError, Result};
