//! Error type shared by every module in the crate.

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed MIDI: {0}")]
    MalformedMidi(String),

    #[error("no usable note events in score")]
    EmptyScore,

    #[error("unsupported time signature {num}/{den}: {reason}")]
    UnsupportedTimeSig { num: u8, den: u8, reason: String },

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("truncated file: needed {needed} more byte(s) at offset {offset}")]
    TruncatedFile { offset: usize, needed: usize },

    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("invalid encoding config: {0}")]
    ConfigInvariantViolation(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("bar length {bar_steps} not divisible by frame length {frame_len}")]
    BarAlignmentError { bar_steps: u32, frame_len: u16 },

    #[error("non-canonical token sequence at position {pos}: {reason}")]
    NonCanonicalSequence { pos: usize, reason: String },

    #[error("structure mismatch at position {pos}: {reason}")]
    StructureMismatch { pos: usize, reason: String },

    #[error("unknown token id {id} at position {pos}")]
    UnknownToken { pos: usize, id: u32 },

    #[error("config hash mismatch: sequence carries {found:016x}, expected {expected:016x}")]
    ConfigHashMismatch { expected: u64, found: u64 },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("sequences come from different vocabularies ({0:016x} vs {1:016x})")]
    MixedVocabularies(u64, u64),

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("roll has no active cells")]
    EmptyRoll,

    #[error("need at least {needed} complete bars, roll has {got}")]
    TooFewBars { needed: u32, got: u32 },

    #[error("need at least {needed} samples per set, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("no input files found under {0}")]
    NoInputFiles(String),

    #[error("malformed file: {0}")]
    MalformedFile(String),

    /// Wraps an error with the file or piece it came from, for batch operations.
    #[error("{context}: {source}")]
    WithContext {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn with_context(self, context: impl Into<String>) -> Error {
        Error::WithContext {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
