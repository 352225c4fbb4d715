//! Combinatorial Conley theory on finite cell complexes: homology of pairs,
//! multivalued flows on top cells, attractor analysis, isolating blocks and
//! checkers for the cohomological obstructions to unstable attractors.

pub mod algebra;
pub mod attractor;
pub mod blocks;
pub mod complex;
pub mod constructions;
pub mod error;
pub mod flow;
pub mod theorems;

pub use algebra::{HomologyResult, PoincarePolynomial, Ring};
pub use attractor::{AttractorReport, Classification};
pub use blocks::IsolatingBlock;
pub use complex::{CellComplex, CellMap, CellSet, Orientability};
pub use error::{Error, Result};
pub use flow::{CombinatorialFlow, LimitEnclosure};
pub use theorems::TheoremVerdict;
