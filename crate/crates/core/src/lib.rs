//! Hyper-relational knowledge graph benchmarking: metadata representation
//! conversions (reification, singleton properties, RDF-star), quoted-triple
//! aware walks, word2vec-style embeddings and translational link prediction.

pub mod convert;
pub mod embed;
pub mod error;
pub mod graph;
pub mod linkpred;
pub mod pipeline;
pub mod rdf_io;
pub mod search;
pub mod synthetic;
pub mod task;
pub mod vocab;
pub mod walks;

pub use convert::Mrm;
pub use graph::{Graph, HyperFact, QtId, Term, Triple};
