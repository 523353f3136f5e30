//! A bidirectional grammar engine built on free-group relators.
//!
//! Grammars are group computation structures: a vocabulary of phonological
//! tokens and logical forms together with a lexicon of relator schemes.
//! Parsing and generation both amount to finding a computation — a product of
//! conjugated relator instances — whose result is the target word, and every
//! computation folds into a cancellation diagram that certifies it.

pub mod analysis;
pub mod computation;
#[cfg(test)]
pub(crate) mod fixtures;
pub mod diagram;
pub mod engine;
pub mod freegroup;
pub mod lexicon;
pub mod term;

pub use computation::{Computation, ComputationGroup, QuasiRelator};
pub use freegroup::{parse_word, Atom, Generator, Sign, Word};
pub use lexicon::{parse_grammar, Grammar};
pub use term::{parse_term, Substitution, Term};
