//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: malformed JSON line: {message}")]
    JsonLine {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate doc_id {0}")]
    DuplicateDocId(String),

    #[error("unknown entity type {name}; valid types: {}", valid.join(", "))]
    UnknownEntityType { name: String, valid: Vec<String> },

    #[error("{path}:{row}: empty surface form")]
    EmptySurface { path: PathBuf, row: usize },

    #[error("{path}:{row}: expected {expected} tab-separated columns, found {found}")]
    BadColumnCount {
        path: PathBuf,
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("{path}:{row}: unknown provenance {value:?} (expected GOLD or SILVER)")]
    BadProvenance {
        path: PathBuf,
        row: usize,
        value: String,
    },

    #[error("surface {0:?} normalizes to zero tokens")]
    EmptyNormalization(String),

    #[error("gold seed conflict: {surface:?} listed as both {first_type} and {second_type}")]
    GoldSeedConflict {
        surface: String,
        first_type: String,
        second_type: String,
    },

    #[error("invalid transition at line {line}: {label:?} after {previous:?}")]
    InvalidBioTransition {
        line: usize,
        label: String,
        previous: String,
    },

    #[error("invalid BIO label at index {index}: {label:?}")]
    InvalidBioLabel { index: usize, label: String },

    #[error("invalid BIO transition at index {index}: {label:?} after {previous:?}")]
    BioTransitionAt {
        index: usize,
        label: String,
        previous: String,
    },

    #[error("{path}:{line}: {message}")]
    ConllFormat {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("ragged sentence {index}: {tokens} tokens vs {labels} labels")]
    RaggedSentence {
        index: usize,
        tokens: usize,
        labels: usize,
    },

    #[error("sentence ids differ between gold and prediction: {0}")]
    SentIdMismatch(String),

    #[error("unknown sentence id {0}")]
    UnknownSentId(String),

    #[error("span {start}..{end} out of bounds in {sent_id} ({len} tokens)")]
    SpanOutOfBounds {
        sent_id: String,
        start: usize,
        end: usize,
        len: usize,
    },

    #[error("invalid span {start}..{end} in {sent_id}: start must be < end")]
    EmptySpan {
        sent_id: String,
        start: usize,
        end: usize,
    },

    #[error(
        "overlapping spans in {sent_id}: {a_start}..{a_end} ({a_type}) and {b_start}..{b_end} ({b_type})"
    )]
    OverlappingSpans {
        sent_id: String,
        a_start: usize,
        a_end: usize,
        a_type: String,
        b_start: usize,
        b_end: usize,
        b_type: String,
    },

    #[error("fetch failed for {entity_type} from {endpoint}: {message}")]
    Fetch {
        endpoint: String,
        entity_type: String,
        message: String,
    },

    #[error("malformed SPARQL response from {endpoint}: {message}")]
    SparqlResponse { endpoint: String, message: String },

    #[error("agreement table row {row} sums to {got}, expected {want}")]
    BadRowSum { row: usize, got: u64, want: u64 },

    #[error("agreement table is empty or ragged")]
    BadAgreementTable,

    #[error("degenerate agreement table: chance agreement is 1 with imperfect agreement")]
    DegenerateAgreement,

    #[error("no scores to aggregate")]
    EmptyScores,

    #[error("config error: {0}")]
    Config(String),

    #[error("{0}")]
    InputMismatch(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors that indicate bad usage or configuration rather than a
    /// runtime failure. The CLI maps these to exit code 2.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Config(_) | Error::InputMismatch(_))
    }
}
