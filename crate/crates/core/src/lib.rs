//! Expertise search over organizational structure and document content.
//!
//! People are ranked against topic queries by summing BM25 scores of their
//! evidence documents, each scaled by a weight that reflects how closely the
//! document sits to the person's own pages in the intranet link graph.

pub mod corpus;
pub mod eval;
pub mod evidence;
pub mod graph;
pub mod org;
pub mod pipeline;
pub mod retrieval;
pub mod synth;
pub mod scalar;
pub mod store;
pub mod text;
pub mod urls;

pub use scalar::{Real, Scalar};

/// Floating point weight and score type used by the pipeline.
pub type Score = f64;
/// Exact rational weights.
pub type Exact = num_rational::Ratio<i64>;

pub type PropagationConfig = evidence::PropagationConfig<Score>;
pub type EvidenceConfig = evidence::EvidenceConfig<Score>;
pub type TypeFactors = evidence::TypeFactors<Score>;
pub type EvidenceFragment = evidence::EvidenceFragment<Score>;
pub type EvidenceSet = evidence::EvidenceSet<Score>;
pub type ExactEvidenceSet = evidence::EvidenceSet<Exact>;
pub type IndexConfig = retrieval::IndexConfig<Score>;
pub type FragmentIndex = retrieval::FragmentIndex<Score>;
pub type ExpertResult = retrieval::ExpertResult<Score>;
