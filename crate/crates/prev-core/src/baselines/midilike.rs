//! MIDI-like-lite: a raw event stream of note-ons, note-offs, and time
//! shifts, with no bar or meter structure.
//!
//! At equal time, note-offs come first, each group in ascending pitch order;
//! silences longer than the shift cap emit several shift tokens. Nothing is
//! emitted after the final note-off, so trailing silence is not recorded.

use super::extract_notes;
use crate::codec::TokenSequence;
use crate::error::{Error, Result};
use crate::hashing::Fnv64;
use crate::pianoroll::{Pianoroll, LOWEST_PITCH, PITCH_ROWS};

/// Token inventory parameters for MIDI-like-lite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MidiLikeScheme {
    pub steps_per_beat: u16,
    /// Largest time shift one token can carry, in steps.
    pub max_shift: u32,
}

impl MidiLikeScheme {
    /// Builds a scheme whose shift cap spans four beats (one 4/4 bar).
    pub fn new(steps_per_beat: u16) -> Result<Self> {
        if steps_per_beat == 0 {
            return Err(Error::ConfigInvariantViolation(
                "steps per beat must be positive".into(),
            ));
        }
        Ok(Self {
            steps_per_beat,
            max_shift: 4 * steps_per_beat as u32,
        })
    }

    /// Total number of distinct tokens.
    pub fn vocab_size(&self) -> u32 {
        2 * PITCH_ROWS as u32 + self.max_shift
    }

    /// Fingerprint for file compatibility checks.
    pub fn hash(&self) -> u64 {
        let mut h = Fnv64::new();
        h.write(b"MDLK1");
        h.write(&self.steps_per_beat.to_le_bytes());
        h.write(&self.max_shift.to_le_bytes());
        h.finish()
    }

    fn note_on(&self, pitch: u8) -> u32 {
        (pitch - LOWEST_PITCH) as u32
    }

    fn note_off(&self, pitch: u8) -> u32 {
        PITCH_ROWS as u32 + (pitch - LOWEST_PITCH) as u32
    }

    fn time_shift(&self, d: u32) -> u32 {
        debug_assert!(d >= 1 && d <= self.max_shift);
        2 * PITCH_ROWS as u32 + (d - 1)
    }
}

/// Tokenizes a roll under MIDI-like-lite.
pub fn midilike_tokenize(roll: &Pianoroll, scheme: &MidiLikeScheme) -> Result<TokenSequence> {
    if roll.steps_per_beat() != scheme.steps_per_beat {
        return Err(Error::DimensionMismatch(format!(
            "roll at {} steps/beat, scheme at {}",
            roll.steps_per_beat(),
            scheme.steps_per_beat
        )));
    }
    let notes = extract_notes(roll);
    // (step, 0=off 1=on, pitch); sorting puts offs before ons at equal time.
    let mut events: Vec<(u32, u8, u8)> = Vec::with_capacity(notes.len() * 2);
    for note in &notes {
        events.push((note.onset, 1, note.pitch));
        events.push((note.onset + note.len, 0, note.pitch));
    }
    events.sort_unstable();

    let mut ids = Vec::new();
    let mut clock = 0u32;
    for &(step, kind, pitch) in &events {
        let mut gap = step - clock;
        while gap > 0 {
            let d = gap.min(scheme.max_shift);
            ids.push(scheme.time_shift(d));
            gap -= d;
        }
        clock = step;
        ids.push(if kind == 1 {
            scheme.note_on(pitch)
        } else {
            scheme.note_off(pitch)
        });
    }
    Ok(TokenSequence {
        ids,
        config_hash: scheme.hash(),
        true_t: Some(roll.num_steps()),
    })
}

/// Rebuilds a roll from a MIDI-like-lite stream. `num_steps` supplies the
/// roll length, since the stream ends at the last note-off.
pub fn midilike_detokenize(
    tokens: &TokenSequence,
    scheme: &MidiLikeScheme,
    num_steps: u32,
) -> Result<Pianoroll> {
    if tokens.config_hash != scheme.hash() {
        return Err(Error::ConfigHashMismatch {
            expected: scheme.hash(),
            found: tokens.config_hash,
        });
    }
    let off_base = PITCH_ROWS as u32;
    let shift_base = 2 * PITCH_ROWS as u32;
    let mut roll = Pianoroll::new(num_steps, scheme.steps_per_beat, vec![])?;
    let mut clock = 0u32;
    let mut onset: [Option<u32>; 88] = [None; 88];
    let bad = |pos: usize, what: &str| -> Error {
        Error::NonCanonicalSequence {
            pos,
            reason: what.into(),
        }
    };
    for (pos, &id) in tokens.ids.iter().enumerate() {
        if id >= shift_base + scheme.max_shift {
            return Err(Error::UnknownToken { pos, id });
        }
        if id >= shift_base {
            clock += id - shift_base + 1;
        } else if id >= off_base {
            let row = (id - off_base) as usize;
            let start = onset[row]
                .take()
                .ok_or_else(|| bad(pos, "note-off without a sounding note"))?;
            roll.add_note(row as u8 + LOWEST_PITCH, start, clock - start);
        } else {
            let row = id as usize;
            if onset[row].is_some() {
                return Err(bad(pos, "note-on while the pitch is sounding"));
            }
            onset[row] = Some(clock);
        }
    }
    if onset.iter().any(Option::is_some) {
        return Err(bad(tokens.ids.len(), "note never switched off"));
    }
    Ok(roll)
}
