//! Temporal citation embeddings.
//!
//! The pipeline turns full-text scholarly XML into per-year embedding models
//! in which cited publications are tokens alongside ordinary words:
//!
//! 1. [`corpus`] parses JATS-like XML and emits citing paragraphs with
//!    resolved citation placeholders.
//! 2. [`preprocess`] segments them into sentences and normalizes tokens.
//! 3. [`vocab`] builds the joint word/citation vocabulary.
//! 4. [`sgns`] trains one skip-gram negative-sampling model per year.
//! 5. [`align`] rotates every year into a common frame (orthogonal Procrustes).
//! 6. [`change`] scores how much each publication's vector moved between
//!    consecutive years, with grouped statistics and rankings.
//! 7. [`query`] retrieves nearest neighbours and builds per-publication role
//!    reports.

pub mod align;
pub mod change;
pub mod corpus;
pub mod format;
pub mod linalg;
pub mod preprocess;
pub mod query;
pub mod sgns;
pub mod synthetic;
pub mod vocab;

pub use align::{align_series, procrustes, shared_rows, AlignOptions, AlignedSeries, Rotation};
pub use change::{
    change_score, compute_records, histogram, rank_by_avg, yearly_stats, ChangeRecord,
    CountMode, GroupStat, RankedPublication, ThresholdMode,
};
pub use corpus::{
    build_meta_key, extract_citing_spans, parse_document, resolve_identifier, CitationId,
    CitationKind, CitingSpan, RawDocument, RefMetadata,
};
pub use preprocess::{normalize, run_preprocess, segment, NormConfig, PhraseDict, Sentence, Token, TokenKind};
pub use query::{nearest, role_report, Neighbor, RoleReport};
pub use sgns::{train, EmbeddingModel, TrainConfig, VectorTable};
pub use vocab::{build_vocab, NegativeTable, Vocabulary};
