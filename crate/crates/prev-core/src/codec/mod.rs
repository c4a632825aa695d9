//! The pianoroll-event codec: typed events over fixed-size blocks, a
//! deterministic vocabulary, and a strict (canonical-form) decoder.
//!
//! A frame of `L` steps is cut into `K = ceil(88/h)` blocks of `h` pitch rows.
//! Each non-empty block becomes a pattern token carrying its exact bit
//! configuration; leading empty blocks are folded into the frame token,
//! trailing ones are dropped, and internal runs become gap tokens. Bar and
//! time-signature tokens mark measure boundaries when structure emission is
//! on. The decoder accepts exactly the sequences the encoder produces.

mod decode;
mod encode;
mod io;
mod vocab;

pub use decode::decode_tokens;
pub use encode::{encode_frame, encode_pianoroll, pattern_block, pattern_id};
pub use io::{
    read_tokens, read_tokens_binary, read_tokens_file, read_tokens_text, write_tokens_binary,
    write_tokens_file, write_tokens_text,
};
pub use vocab::{build_vocabulary, Token, Vocabulary, BOS_ID, EOS_ID, NUM_SPECIALS, PAD_ID};

use crate::error::{Error, Result};
use crate::hashing::Fnv64;
use crate::pianoroll::PITCH_ROWS;

/// Ablation modes: pattern tokens only; plus leading-empty compression via the
/// frame token; plus trailing-empty drop; plus internal gap tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EncodingMode {
    P,
    PfPlus,
    Pf,
    Full,
}

impl EncodingMode {
    pub const ALL: [EncodingMode; 4] = [
        EncodingMode::P,
        EncodingMode::PfPlus,
        EncodingMode::Pf,
        EncodingMode::Full,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EncodingMode::P => "p",
            EncodingMode::PfPlus => "pf+",
            EncodingMode::Pf => "pf",
            EncodingMode::Full => "full",
        }
    }

    fn tag(self) -> u8 {
        match self {
            EncodingMode::P => 0,
            EncodingMode::PfPlus => 1,
            EncodingMode::Pf => 2,
            EncodingMode::Full => 3,
        }
    }
}

impl std::str::FromStr for EncodingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "p" => Ok(EncodingMode::P),
            "pf+" => Ok(EncodingMode::PfPlus),
            "pf" => Ok(EncodingMode::Pf),
            "full" => Ok(EncodingMode::Full),
            other => Err(Error::ConfigInvariantViolation(format!(
                "unknown mode {other:?} (expected p, pf+, pf, or full)"
            ))),
        }
    }
}

/// Everything that determines the token stream for a given roll.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodingConfig {
    /// Frame length L in steps.
    pub frame_len: u16,
    /// Block height h in pitch rows.
    pub block_height: u16,
    pub mode: EncodingMode,
    /// Grid resolution the token geometry assumes; must match the roll's.
    pub steps_per_beat: u16,
    /// Signatures the vocabulary carries tokens for, in id order.
    pub timesig_set: Vec<(u8, u8)>,
    /// Emit bar and time-signature tokens at measure boundaries.
    pub emit_structure: bool,
}

impl Default for EncodingConfig {
    fn default() -> Self {
        Self {
            frame_len: 4,
            block_height: 2,
            mode: EncodingMode::Full,
            steps_per_beat: 16,
            timesig_set: vec![(4, 4), (3, 4), (2, 4), (6, 8)],
            emit_structure: true,
        }
    }
}

impl EncodingConfig {
    pub fn with_mode(mode: EncodingMode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
    }

    /// Block count K = ceil(88 / h).
    pub fn num_blocks(&self) -> u16 {
        PITCH_ROWS.div_ceil(self.block_height)
    }

    /// Structural invariants that every codec operation relies on.
    pub(crate) fn validate_core(&self) -> Result<()> {
        if self.frame_len == 0 {
            return Err(Error::ConfigInvariantViolation(
                "frame length must be positive".into(),
            ));
        }
        if self.block_height == 0 {
            return Err(Error::ConfigInvariantViolation(
                "block height must be positive".into(),
            ));
        }
        if self.steps_per_beat == 0 {
            return Err(Error::ConfigInvariantViolation(
                "steps_per_beat must be positive".into(),
            ));
        }
        let bits = self.block_height as u32 * self.frame_len as u32;
        if bits > 16 {
            return Err(Error::ConfigInvariantViolation(format!(
                "block bit count h*L = {bits} exceeds 16; the enumerated pattern vocabulary would not fit"
            )));
        }
        if self.num_blocks() < 3 {
            return Err(Error::ConfigInvariantViolation(format!(
                "block height {} leaves fewer than 3 blocks",
                self.block_height
            )));
        }
        Ok(())
    }

    /// Full validation, including the time-signature set.
    pub fn validate(&self) -> Result<()> {
        self.validate_core()?;
        for (i, &(num, den)) in self.timesig_set.iter().enumerate() {
            let steps = crate::pianoroll::bar_steps(num, den, self.steps_per_beat)
                .map_err(|e| Error::ConfigInvariantViolation(e.to_string()))?;
            if steps % self.frame_len as u32 != 0 {
                return Err(Error::ConfigInvariantViolation(format!(
                    "bar length {} of {num}/{den} is not divisible by frame length {}",
                    steps, self.frame_len
                )));
            }
            if self.timesig_set[..i].contains(&(num, den)) {
                return Err(Error::ConfigInvariantViolation(format!(
                    "duplicate {num}/{den} in time-signature set"
                )));
            }
        }
        Ok(())
    }

    /// Stable 64-bit fingerprint of every field; token files carry it so a
    /// decode under a different config fails loudly.
    pub fn hash(&self) -> u64 {
        let mut h = Fnv64::new();
        h.write(b"PREVCFG1");
        h.write(&PITCH_ROWS.to_le_bytes());
        h.write(&self.frame_len.to_le_bytes());
        h.write(&self.block_height.to_le_bytes());
        h.write(&[self.mode.tag()]);
        h.write(&self.steps_per_beat.to_le_bytes());
        h.write(&[self.emit_structure as u8]);
        h.write(&(self.timesig_set.len() as u16).to_le_bytes());
        for &(num, den) in &self.timesig_set {
            h.write(&[num, den]);
        }
        h.finish()
    }
}

/// One typed codec event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Event {
    /// Frame boundary; carries the index of the first non-empty block,
    /// saturating at K for an entirely empty frame.
    Frame(u16),
    /// Exact bit configuration of one block.
    Pattern(u16),
    /// Run of empty blocks strictly between non-empty ones.
    Gap(u16),
    Bar,
    TimeSig(u8, u8),
}

/// Token ids plus the config fingerprint that produced them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    pub ids: Vec<u32>,
    pub config_hash: u64,
    /// Step count of the source roll. Not persisted by the file formats;
    /// sequences read back from disk derive it from the frame count.
    pub true_t: Option<u32>,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}
