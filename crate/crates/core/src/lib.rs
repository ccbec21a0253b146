//! Stallings folding paths between free bases of `F_N`, vertices and distance
//! witnesses for the free bases graph and the free factor complex, and a
//! finite-graph toolkit for measuring hyperbolicity.

pub mod agraph;
pub mod complexes;
pub mod folding;
pub mod hyperbolicity;
pub mod words;

pub use agraph::{labeled_isomorphic, AGraph, GraphError, MarkingGraph};
pub use complexes::{ComplexError, FBVertex, FFVertex, SplittingVertex, WitnessPath};
pub use folding::{FoldError, FoldingPath};
pub use hyperbolicity::{FiniteGraph, HyperbolicityError};
pub use words::{FreeWord, Letter, Rank};
