//! Model inputs: per-molecule atom graphs and the molecule–motif association
//! graph with TF-IDF and PMI edge weights.

mod assoc;
mod features;
mod vocab;

pub use assoc::{
    build_association_graph, AssocEdge, AssocNode, AssociationGraph, CorpusMolecule, EdgeKind,
    ASSOC_VERSION,
};
pub use features::{
    featurize_molecule, FeatureStats, MolecularGraphTensors, EDGE_FEATURES, NODE_COLUMNS,
    NODE_FEATURES, NUMERIC_COLUMNS,
};
pub use vocab::{
    build_vocabulary, pmi_weight, term_counts, tfidf_weight, MotifVocabulary, VocabEntry,
    VOCAB_VERSION,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("motif {0:?} is not in the vocabulary")]
    UnknownMotif(String),
    #[error("no motif of {0:?} is in the vocabulary")]
    NoKnownMotif(String),
    #[error("drug id {0:?} appears twice")]
    DuplicateDrug(String),
    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
