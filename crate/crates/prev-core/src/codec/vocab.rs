//! Deterministic event↔id mapping.

use super::{EncodingConfig, EncodingMode, Event};
use crate::error::Result;

pub const PAD_ID: u32 = 0;
pub const BOS_ID: u32 = 1;
pub const EOS_ID: u32 = 2;
pub const NUM_SPECIALS: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Token {
    Pad,
    Bos,
    Eos,
    Evt(Event),
}

/// Arithmetic id layout shared by the encoder, decoder, and vocabulary table,
/// so the mapping has a single definition.
#[derive(Debug, Clone)]
pub(crate) struct IdLayout {
    pub k: u16,
    /// Largest pattern mask, 2^(h·L) − 1.
    pub mask_max: u16,
    /// Smallest pattern mask carried in the vocabulary (0 except in full mode).
    pub pattern_lo: u16,
    pub frame_base: Option<u32>,
    pub gap_base: Option<u32>,
    pub pattern_base: u32,
    pub bar_id: Option<u32>,
    pub ts_base: Option<u32>,
    pub timesig_set: Vec<(u8, u8)>,
    pub num_tokens: u32,
}

impl IdLayout {
    pub fn new(config: &EncodingConfig) -> Result<Self> {
        config.validate_core()?;
        let k = config.num_blocks();
        let bits = config.block_height as u32 * config.frame_len as u32;
        let mask_max = ((1u32 << bits) - 1) as u16;
        let (has_frames, has_gaps, pattern_lo) = match config.mode {
            EncodingMode::P => (false, false, 0),
            EncodingMode::PfPlus | EncodingMode::Pf => (true, false, 0),
            EncodingMode::Full => (true, true, 1),
        };
        let mut next = NUM_SPECIALS;
        let frame_base = has_frames.then(|| {
            let base = next;
            next += k as u32 + 1;
            base
        });
        let gap_base = has_gaps.then(|| {
            let base = next;
            next += k as u32 - 2;
            base
        });
        let pattern_base = next;
        next += mask_max as u32 + 1 - pattern_lo as u32;
        let bar_id = config.emit_structure.then(|| {
            let id = next;
            next += 1;
            id
        });
        let ts_base = config.emit_structure.then(|| {
            let base = next;
            next += config.timesig_set.len() as u32;
            base
        });
        Ok(Self {
            k,
            mask_max,
            pattern_lo: pattern_lo as u16,
            frame_base,
            gap_base,
            pattern_base,
            bar_id,
            ts_base,
            timesig_set: config.timesig_set.clone(),
            num_tokens: next,
        })
    }

    pub fn id_of(&self, event: Event) -> Option<u32> {
        match event {
            Event::Frame(s) => {
                let base = self.frame_base?;
                (s <= self.k).then(|| base + s as u32)
            }
            Event::Pattern(mask) => (self.pattern_lo..=self.mask_max)
                .contains(&mask)
                .then(|| self.pattern_base + (mask - self.pattern_lo) as u32),
            Event::Gap(run) => {
                let base = self.gap_base?;
                (1..=self.k - 2)
                    .contains(&run)
                    .then(|| base + run as u32 - 1)
            }
            Event::Bar => self.bar_id,
            Event::TimeSig(num, den) => {
                let base = self.ts_base?;
                self.timesig_set
                    .iter()
                    .position(|&sig| sig == (num, den))
                    .map(|i| base + i as u32)
            }
        }
    }

    pub fn token(&self, id: u32) -> Option<Token> {
        match id {
            PAD_ID => return Some(Token::Pad),
            BOS_ID => return Some(Token::Bos),
            EOS_ID => return Some(Token::Eos),
            _ => {}
        }
        if id >= self.num_tokens {
            return None;
        }
        if let Some(base) = self.frame_base {
            if id < base + self.k as u32 + 1 {
                return Some(Token::Evt(Event::Frame((id - base) as u16)));
            }
        }
        if let Some(base) = self.gap_base {
            if id < base + self.k as u32 - 2 {
                return Some(Token::Evt(Event::Gap((id - base) as u16 + 1)));
            }
        }
        if id < self.pattern_base + self.mask_max as u32 + 1 - self.pattern_lo as u32 {
            return Some(Token::Evt(Event::Pattern(
                (id - self.pattern_base) as u16 + self.pattern_lo,
            )));
        }
        if self.bar_id == Some(id) {
            return Some(Token::Evt(Event::Bar));
        }
        if let Some(base) = self.ts_base {
            let (num, den) = self.timesig_set[(id - base) as usize];
            return Some(Token::Evt(Event::TimeSig(num, den)));
        }
        None
    }
}

/// The full token table for a config: contiguous ids, specials first, then
/// frame, gap, pattern, bar, and time-signature tokens as the mode dictates.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    config_hash: u64,
    layout: IdLayout,
    tokens: Vec<Token>,
}

/// Builds the vocabulary for a config. Pure: identical configs yield
/// byte-identical serialized tables.
pub fn build_vocabulary(config: &EncodingConfig) -> Result<Vocabulary> {
    config.validate()?;
    let layout = IdLayout::new(config)?;
    let tokens = (0..layout.num_tokens)
        .map(|id| layout.token(id).expect("layout covers its own id range"))
        .collect();
    Ok(Vocabulary {
        config_hash: config.hash(),
        layout,
        tokens,
    })
}

impl Vocabulary {
    pub fn config_hash(&self) -> u64 {
        self.config_hash
    }

    /// Total table size including the three specials.
    pub fn len(&self) -> u32 {
        self.tokens.len() as u32
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Reported vocabulary size V; specials are excluded.
    pub fn reported_size(&self) -> u32 {
        self.tokens.len() as u32 - NUM_SPECIALS
    }

    pub fn id_of(&self, event: Event) -> Option<u32> {
        self.layout.id_of(event)
    }

    pub fn token(&self, id: u32) -> Option<Token> {
        self.tokens.get(id as usize).copied()
    }

    pub fn name(&self, id: u32) -> Option<String> {
        self.token(id).map(token_name)
    }

    /// JSON object mapping token names to ids, in id order.
    pub fn export_json(&self) -> String {
        let mut map = serde_json::Map::new();
        for (id, token) in self.tokens.iter().enumerate() {
            map.insert(
                token_name(*token),
                serde_json::Value::Number((id as u32).into()),
            );
        }
        let mut out = serde_json::to_string_pretty(&serde_json::Value::Object(map))
            .expect("token names serialize");
        out.push('\n');
        out
    }
}

pub(crate) fn token_name(token: Token) -> String {
    match token {
        Token::Pad => "PAD".into(),
        Token::Bos => "BOS".into(),
        Token::Eos => "EOS".into(),
        Token::Evt(Event::Frame(s)) => format!("Frame_{s}"),
        Token::Evt(Event::Pattern(m)) => format!("Pat_{m}"),
        Token::Evt(Event::Gap(r)) => format!("Gap_{r}"),
        Token::Evt(Event::Bar) => "Bar".into(),
        Token::Evt(Event::TimeSig(num, den)) => format!("TS_{num}/{den}"),
    }
}

pub(crate) fn layout_for(config: &EncodingConfig) -> Result<IdLayout> {
    IdLayout::new(config)
}
