//! ABC-lite: a plain-text serializer in the style of ABC notation, used as a
//! character-count baseline. It is not a full ABC dialect.
//!
//! Output: `X:`/`M:`/`L:`/`K:` header lines, then one body line — onset
//! groups as notes (`C16`) or chords with per-note durations (`[C16E8]`),
//! rests `z<n>` over empty columns (split at barlines), ` |` at measure
//! boundaries, and `[M:n/d]` inline where the meter changes. The unit note
//! length is one grid step, pitch spelling is sharps-only, and the sequence
//! length of a piece is its byte count.

use std::fmt::Write as _;

use super::extract_notes;
use crate::error::{Error, Result};
use crate::pianoroll::Pianoroll;

/// Parameters for the ABC-lite serializer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AbcScheme {
    pub steps_per_beat: u16,
}

impl AbcScheme {
    pub fn new(steps_per_beat: u16) -> Result<Self> {
        if steps_per_beat == 0 {
            return Err(Error::ConfigInvariantViolation(
                "steps per beat must be positive".into(),
            ));
        }
        Ok(Self { steps_per_beat })
    }

    /// The alphabet is plain ASCII.
    pub fn vocab_size(&self) -> u32 {
        128
    }
}

/// Spells a MIDI pitch in ABC: octave 5 (MIDI 60..=71) is plain upper case;
/// lower octaves add commas, higher ones switch to lower case and add
/// apostrophes.
fn pitch_text(pitch: u8, out: &mut String) {
    const UPPER: [&str; 12] = [
        "C", "^C", "D", "^D", "E", "F", "^F", "G", "^G", "A", "^A", "B",
    ];
    const LOWER: [&str; 12] = [
        "c", "^c", "d", "^d", "e", "f", "^f", "g", "^g", "a", "^a", "b",
    ];
    let pc = (pitch % 12) as usize;
    let oct = (pitch / 12) as i32 - 5;
    if oct <= 0 {
        out.push_str(UPPER[pc]);
        for _ in 0..-oct {
            out.push(',');
        }
    } else {
        out.push_str(LOWER[pc]);
        for _ in 0..oct - 1 {
            out.push('\'');
        }
    }
}

/// Renders a roll as ABC-lite text.
pub fn abc_serialize(roll: &Pianoroll, scheme: &AbcScheme) -> Result<String> {
    if roll.steps_per_beat() != scheme.steps_per_beat {
        return Err(Error::DimensionMismatch(format!(
            "roll at {} steps/beat, scheme at {}",
            roll.steps_per_beat(),
            scheme.steps_per_beat
        )));
    }
    let t = roll.num_steps();
    let spans = roll.measure_spans();
    // Measure boundaries after the first span, tagged with a meter change
    // when one starts there; plus the closing barline when the roll is
    // measure-aligned.
    let mut boundaries: Vec<(u32, Option<(u8, u8)>)> = Vec::new();
    for pair in spans.windows(2) {
        let (prev, span) = (&pair[0], &pair[1]);
        let sig = (span.numerator, span.denominator);
        let change = (sig != (prev.numerator, prev.denominator)).then_some(sig);
        boundaries.push((span.start, change));
    }
    let last = spans.last().expect("rolls have at least one measure");
    if last.start + last.steps == t {
        boundaries.push((t, None));
    }

    let mut out = String::new();
    write!(
        out,
        "X:1\nM:{}/{}\nL:1/{}\nK:C\n",
        spans[0].numerator,
        spans[0].denominator,
        4 * scheme.steps_per_beat as u32
    )
    .unwrap();

    let notes = extract_notes(roll);
    let mut next_boundary = 0usize;
    let mut cursor = 0u32;
    let mut sound_end = 0u32;
    // Emits the rests and barlines covering [cursor, to).
    let mut advance = |out: &mut String, cursor: &mut u32, sound_end: u32, to: u32| {
        while next_boundary < boundaries.len() && boundaries[next_boundary].0 <= to {
            let (step, change) = boundaries[next_boundary];
            next_boundary += 1;
            let rest_from = sound_end.max(*cursor);
            if step > rest_from {
                write!(out, "z{}", step - rest_from).unwrap();
            }
            out.push_str(" |");
            if let Some((num, den)) = change {
                write!(out, "[M:{num}/{den}]").unwrap();
            }
            *cursor = step;
        }
        let rest_from = sound_end.max(*cursor);
        if to > rest_from {
            write!(out, "z{}", to - rest_from).unwrap();
        }
        *cursor = to;
    };

    let mut i = 0usize;
    while i < notes.len() {
        let onset = notes[i].onset;
        advance(&mut out, &mut cursor, sound_end, onset);
        let group_end = notes[i..]
            .iter()
            .position(|n| n.onset != onset)
            .map_or(notes.len(), |k| i + k);
        if group_end - i > 1 {
            out.push('[');
        }
        for note in &notes[i..group_end] {
            pitch_text(note.pitch, &mut out);
            write!(out, "{}", note.len).unwrap();
            sound_end = sound_end.max(onset + note.len);
        }
        if group_end - i > 1 {
            out.push(']');
        }
        i = group_end;
    }
    advance(&mut out, &mut cursor, sound_end, t);
    out.push('\n');
    Ok(out)
}
