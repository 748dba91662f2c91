//! Entity-relationship (E-R) retrieval over an entity-linked text corpus.
//!
//! An E-R query asks for tuples of related entities ("football players who
//! dated top models") and is expressed as a chain of entity sub-queries and
//! relationship sub-queries. The engine builds a meta-document per entity and
//! per co-occurring entity pair from sentence-level contexts, scores
//! meta-documents with Dirichlet-smoothed language models or BM25, and fuses
//! the sub-query scores into a ranked list of entity tuples.
//!
//! Pipeline: [`corpus`] parses annotated documents → [`extract`] produces
//! entity and entity-pair contexts → [`index`] aggregates them into two
//! inverted meta-document indexes → [`retrieval`] scores sub-queries →
//! [`fusion`] joins candidates into scored tuples → [`eval`] measures runs
//! against relevance judgments.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod extract;
pub mod fusion;
pub mod index;
pub mod retrieval;

pub use error::{Error, Result};
