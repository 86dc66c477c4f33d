//! Score-based structure learning for maximal ancestral graphs.
//!
//! The crate covers mixed graphs and m-separation, heads and tails with the
//! parametrizing sets they generate, ordered Markov properties and the
//! imset score built on them, partial ancestral graphs and the moves between
//! equivalence classes, and a greedy search that strings those moves
//! together. Simulation, CSV input and evaluation metrics round it off.
//!
//! Vertices are `0..n` with `n <= 64`; sets of vertices are [`VertexSet`]
//! bitsets.
//!
//! ```
//! use gesmag_core::{graph::m_separated, GraphKind, MixedGraph, VertexSet};
//!
//! let mut g = MixedGraph::new(3, GraphKind::Mag).unwrap();
//! g.add_directed(0, 1).unwrap();
//! g.add_directed(2, 1).unwrap();
//! let (a, b) = (VertexSet::singleton(0), VertexSet::singleton(2));
//! assert!(m_separated(&g, a, b, VertexSet::EMPTY).unwrap());
//! assert!(!m_separated(&g, a, b, VertexSet::singleton(1)).unwrap());
//! ```

pub mod data;
pub mod entropy;
pub mod error;
pub mod eval;
pub mod exec;
pub mod graph;
pub mod heads;
pub mod imset;
pub mod markov;
pub mod moves;
pub mod orient;
pub mod pag;
pub mod probe;
pub mod search;
pub mod set;
pub mod simulate;
pub mod textfmt;

pub use error::{Error, Result};
pub use graph::{GraphKind, Mark, MixedGraph};
pub use pag::Mec;
pub use search::{gesmag, SearchConfig, SearchResult};
pub use set::VertexSet;
