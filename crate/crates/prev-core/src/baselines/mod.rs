//! Reference tokenizers to compare the pattern codec against: REMI-lite,
//! MIDI-like-lite, an ABC serializer, and a BPE trainer.
//!
//! These are deliberately simplified — velocity, tempo, and program tokens
//! are out of scope — but each is a faithful length/vocabulary measuring
//! stick, and the two event schemes reconstruct the roll exactly.

mod abc;
mod bpe;
mod midilike;
mod remi;

pub use abc::{abc_serialize, AbcScheme};
pub use bpe::{bpe_apply, bpe_decode, bpe_train, BpeModel};
pub use midilike::{midilike_detokenize, midilike_tokenize, MidiLikeScheme};
pub use remi::{remi_detokenize, remi_tokenize, RemiScheme};

use crate::pianoroll::Pianoroll;

/// A note recovered from a binary roll: one maximal horizontal run of 1s.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Note {
    pub pitch: u8,
    pub onset: u32,
    pub len: u32,
}

/// Extracts every maximal per-pitch run, sorted by (onset, pitch) — the only
/// well-defined note inventory a binary roll supports.
pub(crate) fn extract_notes(roll: &Pianoroll) -> Vec<Note> {
    let mut notes = Vec::new();
    let mut run_start = [0u32; 88];
    let mut prev = 0u128;
    for step in 0..roll.num_steps() {
        let col = roll.column_mask(step);
        let mut changed = col ^ prev;
        while changed != 0 {
            let row = changed.trailing_zeros() as u8;
            changed &= changed - 1;
            if col >> row & 1 == 1 {
                run_start[row as usize] = step;
            } else {
                notes.push(Note {
                    pitch: crate::pianoroll::pitch_of_row(row),
                    onset: run_start[row as usize],
                    len: step - run_start[row as usize],
                });
            }
        }
        prev = col;
    }
    let t = roll.num_steps();
    let mut still_on = prev;
    while still_on != 0 {
        let row = still_on.trailing_zeros() as u8;
        still_on &= still_on - 1;
        notes.push(Note {
            pitch: crate::pianoroll::pitch_of_row(row),
            onset: run_start[row as usize],
            len: t - run_start[row as usize],
        });
    }
    notes.sort_by_key(|n| (n.onset, n.pitch));
    notes
}
