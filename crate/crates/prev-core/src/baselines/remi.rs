//! REMI-lite: bar tokens plus beat-grid positions, pitches, and durations.
//!
//! Stream shape: an initial time-signature token, then per measure a bar
//! token (preceded by a new time-signature token when the meter changes),
//! then the measure's onset groups — one position token per distinct onset,
//! followed by (pitch, duration) pairs in ascending pitch order. Durations
//! above the bin cap are carried by splitting the note into cap-sized
//! chunks, which keeps detokenization exact.

use super::{extract_notes, Note};
use crate::codec::TokenSequence;
use crate::error::{Error, Result};
use crate::hashing::Fnv64;
use crate::pianoroll::{bar_steps, Pianoroll, TimeSignatureEvent, LOWEST_PITCH, PITCH_ROWS};

/// Token inventory parameters for REMI-lite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemiScheme {
    pub steps_per_beat: u16,
    /// Time signatures the scheme can name, in token order.
    pub timesig_set: Vec<(u8, u8)>,
    /// Position bins per bar; sized to the longest bar in the set.
    pub position_bins: u32,
    /// Largest duration a single token can carry, in steps.
    pub max_duration: u32,
}

impl RemiScheme {
    /// Builds a scheme whose position and duration bins cover the longest
    /// bar the signature set can produce.
    pub fn new(steps_per_beat: u16, timesig_set: Vec<(u8, u8)>) -> Result<Self> {
        if timesig_set.is_empty() {
            return Err(Error::ConfigInvariantViolation(
                "time-signature set must not be empty".into(),
            ));
        }
        let mut longest = 0u32;
        for &(num, den) in &timesig_set {
            longest = longest.max(bar_steps(num, den, steps_per_beat)?);
        }
        for (i, sig) in timesig_set.iter().enumerate() {
            if timesig_set[..i].contains(sig) {
                return Err(Error::ConfigInvariantViolation(format!(
                    "duplicate time signature {}/{} in set",
                    sig.0, sig.1
                )));
            }
        }
        Ok(Self {
            steps_per_beat,
            timesig_set,
            position_bins: longest,
            max_duration: longest,
        })
    }

    /// Total number of distinct tokens.
    pub fn vocab_size(&self) -> u32 {
        1 + self.position_bins + PITCH_ROWS as u32 + self.max_duration + self.timesig_set.len() as u32
    }

    /// Fingerprint for file compatibility checks; fills the token-sequence
    /// config-hash slot.
    pub fn hash(&self) -> u64 {
        let mut h = Fnv64::new();
        h.write(b"RMLT1");
        h.write(&self.steps_per_beat.to_le_bytes());
        h.write(&self.position_bins.to_le_bytes());
        h.write(&self.max_duration.to_le_bytes());
        h.write(&(self.timesig_set.len() as u32).to_le_bytes());
        for &(num, den) in &self.timesig_set {
            h.write(&[num, den]);
        }
        h.finish()
    }

    const BAR: u32 = 0;

    fn position(&self, p: u32) -> u32 {
        debug_assert!(p < self.position_bins);
        1 + p
    }

    fn pitch(&self, pitch: u8) -> u32 {
        1 + self.position_bins + (pitch - LOWEST_PITCH) as u32
    }

    fn duration(&self, d: u32) -> u32 {
        debug_assert!(d >= 1 && d <= self.max_duration);
        1 + self.position_bins + PITCH_ROWS as u32 + (d - 1)
    }

    fn timesig(&self, num: u8, den: u8) -> Option<u32> {
        let i = self.timesig_set.iter().position(|&s| s == (num, den))?;
        Some(1 + self.position_bins + PITCH_ROWS as u32 + self.max_duration + i as u32)
    }
}

/// Tokenizes a roll under REMI-lite.
pub fn remi_tokenize(roll: &Pianoroll, scheme: &RemiScheme) -> Result<TokenSequence> {
    if roll.steps_per_beat() != scheme.steps_per_beat {
        return Err(Error::DimensionMismatch(format!(
            "roll at {} steps/beat, scheme at {}",
            roll.steps_per_beat(),
            scheme.steps_per_beat
        )));
    }
    let spans = roll.measure_spans();
    for span in &spans {
        if scheme.timesig(span.numerator, span.denominator).is_none() {
            return Err(Error::UnsupportedTimeSig {
                num: span.numerator,
                den: span.denominator,
                reason: "not in the scheme's time-signature set".into(),
            });
        }
    }

    // Split long runs so every duration fits one token.
    let mut notes: Vec<Note> = Vec::new();
    for note in extract_notes(roll) {
        let mut onset = note.onset;
        let mut left = note.len;
        while left > scheme.max_duration {
            notes.push(Note { pitch: note.pitch, onset, len: scheme.max_duration });
            onset += scheme.max_duration;
            left -= scheme.max_duration;
        }
        notes.push(Note { pitch: note.pitch, onset, len: left });
    }
    notes.sort_by_key(|n| (n.onset, n.pitch));

    let mut ids = Vec::new();
    let mut next = 0usize;
    let mut cur_sig = (0u8, 0u8);
    for span in &spans {
        let sig = (span.numerator, span.denominator);
        if sig != cur_sig {
            ids.push(scheme.timesig(sig.0, sig.1).expect("validated above"));
            cur_sig = sig;
        }
        ids.push(RemiScheme::BAR);
        let span_end = span.start + span.steps;
        let mut group_onset = None;
        while next < notes.len() && notes[next].onset < span_end {
            let note = notes[next];
            next += 1;
            if group_onset != Some(note.onset) {
                ids.push(scheme.position(note.onset - span.start));
                group_onset = Some(note.onset);
            }
            ids.push(scheme.pitch(note.pitch));
            ids.push(scheme.duration(note.len));
        }
    }
    Ok(TokenSequence {
        ids,
        config_hash: scheme.hash(),
        true_t: Some(roll.num_steps()),
    })
}

/// Rebuilds the roll a REMI-lite sequence encodes. The reconstructed roll is
/// padded to whole measures; the recorded true step count trims it back when
/// present.
pub fn remi_detokenize(tokens: &TokenSequence, scheme: &RemiScheme) -> Result<Pianoroll> {
    if tokens.config_hash != scheme.hash() {
        return Err(Error::ConfigHashMismatch {
            expected: scheme.hash(),
            found: tokens.config_hash,
        });
    }
    let pitch_base = 1 + scheme.position_bins;
    let dur_base = pitch_base + PITCH_ROWS as u32;
    let ts_base = dur_base + scheme.max_duration;

    let mut timesigs: Vec<TimeSignatureEvent> = Vec::new();
    let mut pending_sig: Option<(u8, u8)> = None;
    let mut bars = 0u32;
    let mut bar_start = 0u64;
    let mut bar_len = 0u64;
    let mut cursor = 0u64;
    let mut pending_pitch: Option<u8> = None;
    // (pitch, onset, len) gathered before the roll length is known.
    let mut notes: Vec<(u8, u64, u32)> = Vec::new();

    let bad = |pos: usize, what: &str| -> Error {
        Error::NonCanonicalSequence {
            pos,
            reason: what.into(),
        }
    };

    for (pos, &id) in tokens.ids.iter().enumerate() {
        if id >= ts_base {
            let i = (id - ts_base) as usize;
            let &(num, den) = scheme
                .timesig_set
                .get(i)
                .ok_or(Error::UnknownToken { pos, id })?;
            if pending_pitch.is_some() {
                return Err(bad(pos, "time signature between pitch and duration"));
            }
            pending_sig = Some((num, den));
        } else if id == RemiScheme::BAR {
            if pending_pitch.is_some() {
                return Err(bad(pos, "bar between pitch and duration"));
            }
            if bars > 0 {
                bar_start += bar_len;
            }
            if let Some((num, den)) = pending_sig.take() {
                timesigs.push(TimeSignatureEvent::new(bars, num, den));
                bar_len = bar_steps(num, den, scheme.steps_per_beat)? as u64;
            }
            if bar_len == 0 {
                return Err(bad(pos, "bar before any time signature"));
            }
            bars += 1;
        } else if id >= dur_base {
            let d = id - dur_base + 1;
            let pitch = pending_pitch
                .take()
                .ok_or_else(|| bad(pos, "duration without a pitch"))?;
            notes.push((pitch, cursor, d));
        } else if id >= pitch_base {
            if pending_pitch.is_some() {
                return Err(bad(pos, "pitch directly after pitch"));
            }
            if bars == 0 {
                return Err(bad(pos, "pitch before the first bar"));
            }
            pending_pitch = Some((id - pitch_base) as u8 + LOWEST_PITCH);
        } else if id >= 1 {
            if pending_pitch.is_some() {
                return Err(bad(pos, "position between pitch and duration"));
            }
            if bars == 0 {
                return Err(bad(pos, "position before the first bar"));
            }
            let p = (id - 1) as u64;
            if p >= bar_len {
                return Err(bad(pos, "position outside the current bar"));
            }
            cursor = bar_start + p;
        } else {
            unreachable!("all id ranges covered");
        }
    }
    if pending_pitch.is_some() {
        return Err(bad(tokens.ids.len(), "trailing pitch without a duration"));
    }
    if bars == 0 {
        return Err(bad(tokens.ids.len(), "sequence has no bars"));
    }

    let nominal = bar_start + bar_len;
    let t = tokens.true_t.map(u64::from).unwrap_or(nominal);
    if t == 0 || t > nominal || t <= nominal - bar_len {
        return Err(Error::InvariantViolation(format!(
            "true step count {t} inconsistent with {bars} bars ending at {nominal}"
        )));
    }
    let mut roll = Pianoroll::new(t as u32, scheme.steps_per_beat, timesigs)?;
    for (pitch, onset, len) in notes {
        if onset >= t {
            return Err(Error::InvariantViolation(
                "note onset beyond the end of the roll".into(),
            ));
        }
        roll.add_note(pitch, onset as u32, len);
    }
    Ok(roll)
}
