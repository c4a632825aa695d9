//! Token → roll decoding.
//!
//! The decoder accepts exactly the encoder's output for the same config:
//! canonical frame structure, bars on reconstructed measure boundaries,
//! time-signature tokens only where the signature changes. Everything else is
//! rejected with a position-carrying error.

use super::vocab::{layout_for, IdLayout, Token};
use super::{EncodingConfig, EncodingMode, Event, TokenSequence, BOS_ID};
use crate::error::{Error, Result};
use crate::pianoroll::{bar_steps, Pianoroll, TimeSignatureEvent, PITCH_ROWS};

/// Reconstructs the pianoroll a token sequence encodes. Exact inverse of
/// [`super::encode_pianoroll`] under the same config.
pub fn decode_tokens(tokens: &TokenSequence, config: &EncodingConfig) -> Result<Pianoroll> {
    config.validate_core()?;
    let expected = config.hash();
    if tokens.config_hash != expected {
        return Err(Error::ConfigHashMismatch {
            expected,
            found: tokens.config_hash,
        });
    }
    Decoder::new(config)?.run(tokens)
}

struct Decoder<'a> {
    config: &'a EncodingConfig,
    layout: IdLayout,
    k: u16,
    l: usize,
    cols: Vec<u128>,
    frames_done: u64,
    // open-frame state
    open: bool,
    cursor: u16,
    need_pattern: bool,
    first_pattern: bool,
    last_mask: u16,
    // structure state
    cur_sig: (u8, u8),
    timesigs: Vec<TimeSignatureEvent>,
    measure: u32,
    next_boundary: u64,
    expect_bar: bool,
    /// Set between a bar token and the next token; holds the boundary step.
    after_bar: Option<u64>,
    after_ts: bool,
}

impl<'a> Decoder<'a> {
    fn new(config: &'a EncodingConfig) -> Result<Self> {
        let layout = layout_for(config)?;
        Ok(Self {
            config,
            k: layout.k,
            l: config.frame_len as usize,
            layout,
            cols: Vec::new(),
            frames_done: 0,
            open: false,
            cursor: 0,
            need_pattern: false,
            first_pattern: false,
            last_mask: 0,
            cur_sig: (0, 0),
            timesigs: Vec::new(),
            measure: 0,
            next_boundary: 0,
            expect_bar: false,
            after_bar: None,
            after_ts: false,
        })
    }

    fn run(mut self, tokens: &TokenSequence) -> Result<Pianoroll> {
        let ids = &tokens.ids;
        if ids.is_empty() {
            return Err(non_canonical(0, "empty sequence"));
        }
        if ids[0] != BOS_ID {
            return Err(non_canonical(0, "sequence must start with BOS"));
        }
        let mut start = 1usize;
        if self.config.emit_structure {
            let tok = ids
                .get(1)
                .and_then(|&id| self.layout.token(id))
                .ok_or_else(|| structure_mismatch(1, "missing initial time signature"))?;
            let Token::Evt(Event::TimeSig(num, den)) = tok else {
                return Err(structure_mismatch(1, "missing initial time signature"));
            };
            self.cur_sig = (num, den);
            self.timesigs.push(TimeSignatureEvent::new(0, num, den));
            self.next_boundary = self.validated_bar_steps(num, den)? as u64;
            start = 2;
        }

        let mut saw_eos = false;
        for (pos, &id) in ids.iter().enumerate().skip(start) {
            let tok = self
                .layout
                .token(id)
                .ok_or(Error::UnknownToken { pos, id })?;

            // A frame stays open until the token after its last pattern.
            if self.open
                && matches!(
                    tok,
                    Token::Eos | Token::Evt(Event::Frame(_) | Event::Bar | Event::TimeSig(..))
                )
            {
                self.close_open_frame(pos)?;
            }
            if self.expect_bar && !matches!(tok, Token::Evt(Event::Bar)) {
                return Err(structure_mismatch(pos, "missing bar at measure boundary"));
            }
            if let Some(base) = self.after_bar {
                if !matches!(tok, Token::Evt(Event::TimeSig(..))) {
                    self.next_boundary =
                        base + self.validated_bar_steps(self.cur_sig.0, self.cur_sig.1)? as u64;
                    self.after_bar = None;
                }
            }
            if self.after_ts && matches!(tok, Token::Eos) {
                return Err(structure_mismatch(
                    pos,
                    "time-signature change at the end of the roll",
                ));
            }
            self.after_ts = false;

            match tok {
                Token::Pad => return Err(non_canonical(pos, "padding inside the sequence")),
                Token::Bos => return Err(non_canonical(pos, "BOS after the start")),
                Token::Eos => {
                    if pos != ids.len() - 1 {
                        return Err(non_canonical(pos, "tokens after EOS"));
                    }
                    saw_eos = true;
                }
                Token::Evt(Event::Frame(s)) => self.open_frame(pos, s)?,
                Token::Evt(Event::Pattern(mask)) => self.pattern(pos, mask)?,
                Token::Evt(Event::Gap(run)) => self.gap(pos, run)?,
                Token::Evt(Event::Bar) => {
                    if !self.expect_bar {
                        return Err(structure_mismatch(pos, "bar off the measure boundary"));
                    }
                    self.expect_bar = false;
                    self.measure += 1;
                    self.after_bar = Some(self.next_boundary);
                }
                Token::Evt(Event::TimeSig(num, den)) => {
                    let Some(base) = self.after_bar else {
                        return Err(structure_mismatch(
                            pos,
                            "time signature outside a measure boundary",
                        ));
                    };
                    if (num, den) == self.cur_sig {
                        return Err(structure_mismatch(pos, "redundant time signature"));
                    }
                    self.cur_sig = (num, den);
                    self.timesigs
                        .push(TimeSignatureEvent::new(self.measure, num, den));
                    self.next_boundary = base + self.validated_bar_steps(num, den)? as u64;
                    self.after_bar = None;
                    self.after_ts = true;
                }
            }
        }
        if !saw_eos {
            return Err(non_canonical(ids.len(), "missing EOS"));
        }
        self.assemble(tokens)
    }

    fn validated_bar_steps(&self, num: u8, den: u8) -> Result<u32> {
        let steps = bar_steps(num, den, self.config.steps_per_beat)?;
        if steps % self.config.frame_len as u32 != 0 {
            return Err(Error::BarAlignmentError {
                bar_steps: steps,
                frame_len: self.config.frame_len,
            });
        }
        Ok(steps)
    }

    fn open_frame(&mut self, pos: usize, start: u16) -> Result<()> {
        debug_assert!(!self.open);
        if start > self.k {
            return Err(non_canonical(pos, "frame start beyond the block count"));
        }
        self.cols.resize(self.cols.len() + self.l, 0);
        if start == self.k {
            self.finish_frame();
        } else {
            self.open = true;
            self.cursor = start;
            self.need_pattern = true;
            self.first_pattern = true;
            self.last_mask = 0;
        }
        Ok(())
    }

    fn pattern(&mut self, pos: usize, mask: u16) -> Result<()> {
        if !self.open {
            if self.config.mode == EncodingMode::P {
                self.cols.resize(self.cols.len() + self.l, 0);
                self.open = true;
                self.cursor = 0;
            } else {
                return Err(non_canonical(pos, "pattern before a frame event"));
            }
        }
        if self.cursor >= self.k {
            return Err(non_canonical(pos, "pattern overflows the frame"));
        }
        if self.first_pattern && mask == 0 {
            return Err(non_canonical(pos, "frame start points at an empty block"));
        }
        self.write_block(pos, mask)?;
        self.cursor += 1;
        self.need_pattern = false;
        self.first_pattern = false;
        self.last_mask = mask;
        if self.cursor == self.k
            && matches!(self.config.mode, EncodingMode::P | EncodingMode::PfPlus)
        {
            self.open = false;
            self.finish_frame();
        }
        Ok(())
    }

    fn gap(&mut self, pos: usize, run: u16) -> Result<()> {
        if !self.open {
            return Err(non_canonical(pos, "gap outside a frame"));
        }
        if self.need_pattern {
            return Err(non_canonical(pos, "gap must follow a pattern"));
        }
        if run == 0 || run > self.k - 2 {
            return Err(non_canonical(pos, "gap run out of range"));
        }
        if self.cursor + run > self.k - 1 {
            return Err(non_canonical(pos, "gap runs past the last block"));
        }
        self.cursor += run;
        self.need_pattern = true;
        Ok(())
    }

    fn write_block(&mut self, pos: usize, mask: u16) -> Result<()> {
        if mask == 0 {
            return Ok(());
        }
        let h = self.config.block_height as u32;
        let top = self.cursor as u32 * h;
        if top + h > PITCH_ROWS as u32 {
            let avail = PITCH_ROWS as u32 - top;
            for r in avail..h {
                for c in 0..self.l {
                    if mask >> (r as usize * self.l + c) & 1 == 1 {
                        return Err(non_canonical(
                            pos,
                            "pattern writes above the top pitch row",
                        ));
                    }
                }
            }
        }
        let base = self.cols.len() - self.l;
        for c in 0..self.l {
            let mut bits = 0u128;
            for r in 0..h as usize {
                bits |= ((mask >> (r * self.l + c) & 1) as u128) << r;
            }
            self.cols[base + c] |= bits << top;
        }
        Ok(())
    }

    fn close_open_frame(&mut self, pos: usize) -> Result<()> {
        match self.config.mode {
            EncodingMode::P | EncodingMode::PfPlus => {
                // Complete frames close eagerly, so an open frame here is short.
                return Err(non_canonical(pos, "frame is missing blocks"));
            }
            EncodingMode::Pf | EncodingMode::Full => {
                if self.need_pattern {
                    return Err(non_canonical(pos, "expected a pattern"));
                }
                if self.config.mode == EncodingMode::Pf && self.last_mask == 0 {
                    return Err(non_canonical(pos, "frame ends with an empty pattern"));
                }
            }
        }
        self.open = false;
        self.finish_frame();
        Ok(())
    }

    fn finish_frame(&mut self) {
        self.frames_done += 1;
        if self.config.emit_structure && self.frames_done * self.l as u64 == self.next_boundary {
            self.expect_bar = true;
        }
    }

    fn assemble(self, tokens: &TokenSequence) -> Result<Pianoroll> {
        if self.frames_done == 0 {
            return Err(non_canonical(tokens.ids.len() - 1, "sequence has no frames"));
        }
        let nominal = self.frames_done * self.l as u64;
        if nominal > u32::MAX as u64 {
            return Err(Error::InvariantViolation("decoded roll exceeds u32 steps".into()));
        }
        let t = tokens.true_t.unwrap_or(nominal as u32) as u64;
        if t == 0 || t > nominal || nominal - t >= self.l as u64 {
            return Err(Error::InvariantViolation(format!(
                "true step count {t} inconsistent with {} frames of {}",
                self.frames_done, self.l
            )));
        }
        let mut cols = self.cols;
        if cols[t as usize..].iter().any(|&c| c != 0) {
            return Err(Error::InvariantViolation(
                "content beyond the declared step count".into(),
            ));
        }
        cols.truncate(t as usize);
        Pianoroll::from_cols(cols, self.config.steps_per_beat, self.timesigs)
    }
}

fn non_canonical(pos: usize, reason: &str) -> Error {
    Error::NonCanonicalSequence {
        pos,
        reason: reason.into(),
    }
}

fn structure_mismatch(pos: usize, reason: &str) -> Error {
    Error::StructureMismatch {
        pos,
        reason: reason.into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{build_vocabulary, encode_pianoroll, Vocabulary};

    fn seq_of(events: &[Event], vocab: &Vocabulary) -> TokenSequence {
        let mut ids = vec![BOS_ID];
        ids.extend(events.iter().map(|&ev| vocab.id_of(ev).unwrap()));
        ids.push(super::super::EOS_ID);
        TokenSequence {
            ids,
            config_hash: vocab.config_hash(),
            true_t: None,
        }
    }

    fn structure_off() -> EncodingConfig {
        EncodingConfig {
            emit_structure: false,
            ..EncodingConfig::default()
        }
    }

    #[test]
    fn decodes_a_single_pattern_frame() {
        let config = structure_off();
        let vocab = build_vocabulary(&config).unwrap();
        let seq = seq_of(&[Event::Frame(5), Event::Pattern(255)], &vocab);
        let roll = decode_tokens(&seq, &config).unwrap();
        assert_eq!(roll.num_steps(), 4);
        for step in 0..4 {
            assert!(roll.cell(step, 31));
            assert!(roll.cell(step, 32));
        }
        assert_eq!(roll.note_cells(), 8);
    }

    #[test]
    fn round_trips_with_structure_and_signature_changes() {
        let mut roll = Pianoroll::new(
            64 + 48 + 48,
            16,
            vec![
                TimeSignatureEvent::new(0, 4, 4),
                TimeSignatureEvent::new(1, 3, 4),
            ],
        )
        .unwrap();
        roll.add_note(60, 0, 64);
        roll.add_note(21, 70, 3);
        roll.add_note(108, 100, 60);
        for mode in EncodingMode::ALL {
            let config = EncodingConfig::with_mode(mode);
            let seq = encode_pianoroll(&roll, &config).unwrap();
            assert_eq!(decode_tokens(&seq, &config).unwrap(), roll, "mode {mode:?}");
        }
    }

    #[test]
    fn round_trips_unaligned_tail() {
        let mut roll = Pianoroll::new(70, 16, vec![]).unwrap();
        roll.add_note(40, 60, 10);
        for mode in EncodingMode::ALL {
            for emit_structure in [true, false] {
                let config = EncodingConfig {
                    emit_structure,
                    ..EncodingConfig::with_mode(mode)
                };
                let seq = encode_pianoroll(&roll, &config).unwrap();
                assert_eq!(decode_tokens(&seq, &config).unwrap(), roll);
            }
        }
    }

    #[test]
    fn gap_after_frame_event_is_rejected() {
        let config = structure_off();
        let vocab = build_vocabulary(&config).unwrap();
        let seq = seq_of(
            &[Event::Frame(0), Event::Gap(3), Event::Pattern(1)],
            &vocab,
        );
        assert!(matches!(
            decode_tokens(&seq, &config),
            Err(Error::NonCanonicalSequence { pos: 2, .. })
        ));
    }

    #[test]
    fn trailing_gap_is_rejected() {
        let config = structure_off();
        let vocab = build_vocabulary(&config).unwrap();
        let seq = seq_of(
            &[Event::Frame(0), Event::Pattern(1), Event::Gap(2)],
            &vocab,
        );
        assert!(matches!(
            decode_tokens(&seq, &config),
            Err(Error::NonCanonicalSequence { .. })
        ));
    }

    #[test]
    fn gap_cannot_reach_past_the_last_block() {
        let config = structure_off();
        let vocab = build_vocabulary(&config).unwrap();
        // cursor after pattern = 2; 42 would put the next pattern at 44.
        let seq = seq_of(
            &[
                Event::Frame(1),
                Event::Pattern(1),
                Event::Gap(42),
                Event::Pattern(1),
            ],
            &vocab,
        );
        assert!(matches!(
            decode_tokens(&seq, &config),
            Err(Error::NonCanonicalSequence { pos: 3, .. })
        ));
    }

    #[test]
    fn pattern_before_frame_event_is_rejected() {
        let config = structure_off();
        let vocab = build_vocabulary(&config).unwrap();
        let seq = seq_of(&[Event::Pattern(7)], &vocab);
        assert!(matches!(
            decode_tokens(&seq, &config),
            Err(Error::NonCanonicalSequence { pos: 1, .. })
        ));
    }

    #[test]
    fn hash_mismatch_is_rejected() {
        let config = structure_off();
        let roll = Pianoroll::new(4, 16, vec![]).unwrap();
        let mut seq = encode_pianoroll(&roll, &config).unwrap();
        seq.config_hash ^= 1;
        assert!(matches!(
            decode_tokens(&seq, &config),
            Err(Error::ConfigHashMismatch { .. })
        ));
    }

    #[test]
    fn out_of_table_id_is_rejected() {
        let config = structure_off();
        let vocab = build_vocabulary(&config).unwrap();
        let mut seq = seq_of(&[Event::Frame(44)], &vocab);
        seq.ids.insert(2, vocab.len());
        assert!(matches!(
            decode_tokens(&seq, &config),
            Err(Error::UnknownToken { pos: 2, .. })
        ));
    }

    #[test]
    fn missing_bar_is_rejected() {
        let config = EncodingConfig::default();
        let roll = Pianoroll::new(64, 16, vec![]).unwrap();
        let mut seq = encode_pianoroll(&roll, &config).unwrap();
        let vocab = build_vocabulary(&config).unwrap();
        let bar = vocab.id_of(Event::Bar).unwrap();
        seq.ids.retain(|&id| id != bar);
        assert!(matches!(
            decode_tokens(&seq, &config),
            Err(Error::StructureMismatch { .. })
        ));
    }

    #[test]
    fn early_bar_is_rejected() {
        let config = EncodingConfig::default();
        let vocab = build_vocabulary(&config).unwrap();
        let seq = seq_of(
            &[
                Event::TimeSig(4, 4),
                Event::Frame(44),
                Event::Bar,
            ],
            &vocab,
        );
        assert!(matches!(
            decode_tokens(&seq, &config),
            Err(Error::StructureMismatch { pos: 3, .. })
        ));
    }

    #[test]
    fn redundant_timesig_is_rejected() {
        let config = EncodingConfig::default();
        let vocab = build_vocabulary(&config).unwrap();
        let mut events = vec![Event::TimeSig(4, 4)];
        events.extend([Event::Frame(44); 16]);
        events.push(Event::Bar);
        events.push(Event::TimeSig(4, 4));
        events.extend([Event::Frame(44); 16]);
        events.push(Event::Bar);
        let seq = seq_of(&events, &vocab);
        assert!(matches!(
            decode_tokens(&seq, &config),
            Err(Error::StructureMismatch { .. })
        ));
    }

    #[test]
    fn missing_initial_timesig_is_rejected() {
        let config = EncodingConfig::default();
        let vocab = build_vocabulary(&config).unwrap();
        let mut events = vec![Event::Frame(44); 16];
        events.push(Event::Bar);
        let seq = seq_of(&events, &vocab);
        assert!(matches!(
            decode_tokens(&seq, &config),
            Err(Error::StructureMismatch { pos: 1, .. })
        ));
    }

    #[test]
    fn incomplete_frames_are_rejected_in_fixed_width_modes() {
        for mode in [EncodingMode::P, EncodingMode::PfPlus] {
            let config = EncodingConfig {
                emit_structure: false,
                ..EncodingConfig::with_mode(mode)
            };
            let vocab = build_vocabulary(&config).unwrap();
            let events = match mode {
                EncodingMode::P => vec![Event::Pattern(1); 43],
                _ => vec![Event::Frame(40), Event::Pattern(1)],
            };
            let seq = seq_of(&events, &vocab);
            assert!(
                matches!(
                    decode_tokens(&seq, &config),
                    Err(Error::NonCanonicalSequence { .. })
                ),
                "mode {mode:?}"
            );
        }
    }

    #[test]
    fn pf_rejects_trailing_empty_pattern() {
        let config = EncodingConfig {
            emit_structure: false,
            ..EncodingConfig::with_mode(EncodingMode::Pf)
        };
        let vocab = build_vocabulary(&config).unwrap();
        let seq = seq_of(
            &[Event::Frame(3), Event::Pattern(9), Event::Pattern(0)],
            &vocab,
        );
        assert!(matches!(
            decode_tokens(&seq, &config),
            Err(Error::NonCanonicalSequence { .. })
        ));
    }

    #[test]
    fn leading_empty_pattern_is_rejected_after_frame_event() {
        for mode in [EncodingMode::PfPlus, EncodingMode::Pf] {
            let config = EncodingConfig {
                emit_structure: false,
                ..EncodingConfig::with_mode(mode)
            };
            let vocab = build_vocabulary(&config).unwrap();
            let mut events = vec![Event::Frame(42), Event::Pattern(0), Event::Pattern(1)];
            if mode == EncodingMode::PfPlus {
                events.push(Event::Pattern(1));
            }
            let seq = seq_of(&events, &vocab);
            assert!(matches!(
                decode_tokens(&seq, &config),
                Err(Error::NonCanonicalSequence { pos: 2, .. })
            ));
        }
    }

    #[test]
    fn true_t_trims_final_frame_padding() {
        let mut roll = Pianoroll::new(5, 16, vec![]).unwrap();
        roll.add_note(50, 0, 5);
        let config = structure_off();
        let seq = encode_pianoroll(&roll, &config).unwrap();
        assert_eq!(seq.true_t, Some(5));
        let back = decode_tokens(&seq, &config).unwrap();
        assert_eq!(back, roll);

        let mut without = seq.clone();
        without.true_t = None;
        let padded = decode_tokens(&without, &config).unwrap();
        assert_eq!(padded.num_steps(), 8);
    }

    #[test]
    fn inconsistent_true_t_is_rejected() {
        let mut roll = Pianoroll::new(8, 16, vec![]).unwrap();
        roll.add_note(50, 0, 8);
        let config = structure_off();
        let mut seq = encode_pianoroll(&roll, &config).unwrap();
        seq.true_t = Some(3);
        assert!(decode_tokens(&seq, &config).is_err());
        seq.true_t = Some(9);
        assert!(decode_tokens(&seq, &config).is_err());
    }

    #[test]
    fn partial_top_block_round_trips_and_rejects_overflow() {
        let config = EncodingConfig {
            block_height: 3,
            emit_structure: false,
            ..EncodingConfig::default()
        };
        // K = 30; block 29 covers rows 87..89, of which only 87 exists.
        let mut roll = Pianoroll::new(4, 16, vec![]).unwrap();
        roll.add_note(108, 0, 4);
        let seq = encode_pianoroll(&roll, &config).unwrap();
        assert_eq!(decode_tokens(&seq, &config).unwrap(), roll);

        let vocab = build_vocabulary(&config).unwrap();
        // row 1 of block 29 would be pitch row 88.
        let bad_mask = 1u16 << 4;
        let seq = seq_of(
            &[Event::Frame(29), Event::Pattern(bad_mask)],
            &vocab,
        );
        assert!(matches!(
            decode_tokens(&seq, &config),
            Err(Error::NonCanonicalSequence { .. })
        ));
    }
}
