//! Tree-shaped feature structures with disjunctive leaf values.
//!
//! Structures are trees, never graphs: there is no reentrancy, so every
//! operation here works by copying. Leaves hold a [`ValueSet`], read as a
//! disjunction of atomic values.

mod tree;
mod value;

pub use tree::{FeatureNode, FeatureTree, Node, Path, Tree, TreeError};
pub use value::{is_symbol_text, quote, Atom, AtomKind, ValueSet, ValueSetError, RESERVED_CHARS};
