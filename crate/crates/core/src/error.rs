use thiserror::Error;

use crate::graph::QtId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("malformed term: {0}")]
    MalformedTerm(String),
    #[error("unknown quoted triple {0}")]
    UnknownQt(QtId),
    #[error("index inconsistency: {0}")]
    IndexCorrupt(String),
}

/// Errors raised while reading any of the supported text formats.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}: malformed row: {message}")]
    MalformedRow { line: usize, message: String },
    #[error("byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("byte {offset}: unknown prefix {prefix:?}")]
    UnknownPrefix { offset: usize, prefix: String },
    #[error("byte {offset}: {source}")]
    Graph { offset: usize, source: GraphError },
    #[error("line {line}: {message}")]
    Table { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SerializeError {
    #[error("graph shape not expressible as {format}: {reason}")]
    UnsupportedShape { format: &'static str, reason: String },
    #[error(transparent)]
    Token(#[from] TokenError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TokenError {
    #[error("token {token:?} contains reserved character '|'")]
    ReservedCharacter { token: String },
    #[error("token {token:?} contains whitespace")]
    Whitespace { token: String },
    #[error("cannot decode token {token:?}: {message}")]
    Decode { token: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConvertError {
    #[error("extraction failed at node {node}: {message}")]
    Extraction { node: String, message: String },
    #[error("unresolved statement references: {}", .0.join(", "))]
    UnresolvedReference(Vec<String>),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TaskError {
    #[error("no eligible triples for the link prediction task")]
    EmptyTask,
    #[error("invalid split ratios {0:?}: must be non-negative and sum to 1")]
    InvalidRatios([f64; 3]),
    #[error("graph is not in RDF-star form: {0}")]
    WrongMrm(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EmbedError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("vocabulary empty after pruning tokens below count {0}")]
    EmptyVocabulary(usize),
    #[error("invalid embedding config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinkPredError {
    #[error("unknown token {0}")]
    UnknownToken(String),
    #[error("no training triples")]
    EmptyTrain,
    #[error("no test triples")]
    EmptyTest,
    #[error("invalid link prediction config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("importance analysis needs at least {needed} trials, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("invalid search space: {0}")]
    InvalidSpace(String),
}

/// A pipeline stage failure.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{stage} stage failed: {message}")]
pub struct PipelineError {
    pub stage: crate::pipeline::Stage,
    pub message: String,
}
