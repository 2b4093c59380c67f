//! Lexicon compiler and unification-based morphological engine.
//!
//! A source lexical base, written in a sectioned text format, is parsed
//! ([`source`]), resolved through default multiple inheritance
//! ([`inherit`]) with allomorphy rules evaluated per entry ([`alo`]),
//! type-checked against declared features ([`typecheck`]), and expanded into
//! an allomorph-keyed object dictionary ([`compile`], [`objdict`]).
//! Analysis and generation then run over that dictionary by unification
//! under word-formation rules ([`morph`]).

pub mod alo;
pub mod compile;
pub mod diag;
pub mod feature;
pub mod inherit;
pub mod morph;
pub mod objdict;
pub mod source;
pub mod typecheck;
