//! Standard MIDI file → pianoroll import.
//!
//! All tracks and channels are merged onto one 88-row grid. Overlapping
//! same-pitch notes are union-merged, velocities are discarded, onsets
//! quantize down and offsets up (every note keeps at least one step), and the
//! roll is padded to whole measures. Time-signature events snap forward to
//! the nearest measure boundary. Non-fatal oddities in the input are counted
//! rather than rejected.

use std::path::Path;

use midly::{MetaMessage, MidiMessage, Smf, Timing, TrackEventKind};

use crate::error::{Error, Result};
use crate::pianoroll::{bar_steps, Pianoroll, TimeSignatureEvent, LOWEST_PITCH};

/// An imported roll plus counters for everything the importer had to
/// smooth over. Zero counters mean a clean file.
#[derive(Debug)]
pub struct MidiImport {
    pub roll: Pianoroll,
    /// Merged note intervals written into the roll.
    pub notes: u64,
    /// Note-ons outside the 88-key range, skipped.
    pub dropped_notes: u64,
    /// Notes never switched off, closed at the end of the data.
    pub dangling_notes: u64,
    /// Note-offs with no sounding note, ignored.
    pub stray_offs: u64,
    /// Time-signature events that were overridden at the same boundary,
    /// repeated the signature already in force, or landed past the end.
    pub dropped_timesigs: u64,
}

pub fn import_midi_file(path: &Path, steps_per_beat: u16) -> Result<MidiImport> {
    import_midi(&std::fs::read(path)?, steps_per_beat)
}

/// Parses a standard MIDI file and quantizes it onto a `steps_per_beat`
/// grid (steps per quarter note).
pub fn import_midi(bytes: &[u8], steps_per_beat: u16) -> Result<MidiImport> {
    if steps_per_beat == 0 {
        return Err(Error::InvariantViolation(
            "steps per beat must be positive".into(),
        ));
    }
    let smf = Smf::parse(bytes).map_err(|e| Error::MalformedMidi(e.to_string()))?;
    let Timing::Metrical(ppq) = smf.header.timing else {
        return Err(Error::MalformedMidi(
            "SMPTE timing is not supported".into(),
        ));
    };
    let ppq = ppq.as_int() as u64;
    if ppq == 0 {
        return Err(Error::MalformedMidi("zero ticks per quarter note".into()));
    }

    let mut import = Importer::new(steps_per_beat, ppq);
    for track in &smf.tracks {
        let mut tick = 0u64;
        for event in track {
            tick += event.delta.as_int() as u64;
            import.end_tick = import.end_tick.max(tick);
            match event.kind {
                TrackEventKind::Midi { message, .. } => match message {
                    MidiMessage::NoteOn { key, vel } => {
                        import.note_event(tick, key.as_int(), vel.as_int() > 0)
                    }
                    MidiMessage::NoteOff { key, .. } => {
                        import.note_event(tick, key.as_int(), false)
                    }
                    _ => {}
                },
                TrackEventKind::Meta(MetaMessage::TimeSignature(num, den_exp, _, _)) => {
                    let den = 1u32 << den_exp.min(31);
                    if num == 0 || den > 16 {
                        return Err(Error::UnsupportedTimeSig {
                            num,
                            den: den.min(u8::MAX as u32) as u8,
                            reason: "outside the importable range".into(),
                        });
                    }
                    import.timesig_events.push((tick, num, den as u8));
                }
                _ => {}
            }
        }
    }
    import.finish()
}

struct Importer {
    steps_per_beat: u16,
    ppq: u64,
    note_events: Vec<(u64, bool, u8)>,
    timesig_events: Vec<(u64, u8, u8)>,
    end_tick: u64,
    dropped_notes: u64,
}

impl Importer {
    fn new(steps_per_beat: u16, ppq: u64) -> Self {
        Self {
            steps_per_beat,
            ppq,
            note_events: Vec::new(),
            timesig_events: Vec::new(),
            end_tick: 0,
            dropped_notes: 0,
        }
    }

    fn note_event(&mut self, tick: u64, key: u8, on: bool) {
        if !(LOWEST_PITCH..=LOWEST_PITCH + 87).contains(&key) {
            if on {
                self.dropped_notes += 1;
            }
            return;
        }
        self.note_events.push((tick, on, key));
    }

    fn step_floor(&self, tick: u64) -> u64 {
        tick * self.steps_per_beat as u64 / self.ppq
    }

    fn step_ceil(&self, tick: u64) -> u64 {
        (tick * self.steps_per_beat as u64).div_ceil(self.ppq)
    }

    fn finish(mut self) -> Result<MidiImport> {
        // Union-merge notes per pitch: a pitch sounds while any instance of
        // it is held. Off-before-on at equal ticks cannot split a cell, so
        // the order only needs to be deterministic.
        self.note_events
            .sort_by_key(|&(tick, on, key)| (tick, on, key));
        let mut active = [0u32; 88];
        let mut onset = [0u64; 88];
        let mut intervals: Vec<(u8, u64, u64)> = Vec::new();
        let mut stray_offs = 0u64;
        for &(tick, on, key) in &self.note_events {
            let row = (key - LOWEST_PITCH) as usize;
            if on {
                if active[row] == 0 {
                    onset[row] = tick;
                }
                active[row] += 1;
            } else if active[row] == 0 {
                stray_offs += 1;
            } else {
                active[row] -= 1;
                if active[row] == 0 {
                    intervals.push((key, onset[row], tick));
                }
            }
        }
        let mut dangling_notes = 0u64;
        for row in 0..88 {
            if active[row] > 0 {
                dangling_notes += 1;
                intervals.push((row as u8 + LOWEST_PITCH, onset[row], self.end_tick));
            }
        }
        if intervals.is_empty() {
            return Err(Error::EmptyScore);
        }

        let mut max_off = 0u64;
        let mut notes: Vec<(u8, u64, u64)> = Vec::with_capacity(intervals.len());
        for &(key, on_tick, off_tick) in &intervals {
            let on = self.step_floor(on_tick);
            let mut off = self.step_ceil(off_tick);
            if off <= on {
                off = on + 1;
            }
            max_off = max_off.max(off);
            notes.push((key, on, off));
        }

        let (timesigs, total_steps, dropped_timesigs) = self.measure_map(max_off)?;
        if total_steps > u32::MAX as u64 {
            return Err(Error::MalformedMidi(format!(
                "quantized length {total_steps} exceeds the supported step count"
            )));
        }
        let mut roll = Pianoroll::new(total_steps as u32, self.steps_per_beat, timesigs)?;
        for &(key, on, off) in &notes {
            roll.add_note(key, on as u32, (off - on) as u32);
        }
        Ok(MidiImport {
            roll,
            notes: notes.len() as u64,
            dropped_notes: self.dropped_notes,
            dangling_notes,
            stray_offs,
            dropped_timesigs,
        })
    }

    /// Snaps time-signature events to measure boundaries, resolves
    /// duplicates, and rounds the roll length up to a whole measure.
    fn measure_map(&mut self, max_off: u64) -> Result<(Vec<TimeSignatureEvent>, u64, u64)> {
        let spb = self.steps_per_beat;
        self.timesig_events.sort_by_key(|&(tick, ..)| tick);
        let mut events: Vec<TimeSignatureEvent> = Vec::new();
        let mut starts: Vec<u64> = Vec::new();
        let mut dropped = 0u64;
        // Anchor of the signature currently in force.
        let mut cur_measure = 0u32;
        let mut cur_start = 0u64;
        let mut cur_bar = 0u64;
        for &(tick, num, den) in &self.timesig_events {
            let bar = bar_steps(num, den, spb)? as u64;
            let raw = self.step_floor(tick);
            if events.is_empty() {
                if raw == 0 {
                    events.push(TimeSignatureEvent::new(0, num, den));
                    starts.push(0);
                    cur_bar = bar;
                    continue;
                }
                events.push(TimeSignatureEvent::new(0, 4, 4));
                starts.push(0);
                cur_bar = bar_steps(4, 4, spb)? as u64;
            }
            let measures = (raw - cur_start).div_ceil(cur_bar);
            if measures == 0 {
                // A second event claiming the current boundary: last wins.
                events.pop();
                starts.pop();
                dropped += 1;
                let prev = events.last().map(|ev| (ev.numerator, ev.denominator));
                if prev == Some((num, den)) {
                    // The override restored the signature already in force.
                    cur_bar = bar;
                    cur_measure = events.last().expect("prior event").start_measure;
                    cur_start = *starts.last().expect("prior start");
                    dropped += 1;
                    continue;
                }
                events.push(TimeSignatureEvent::new(cur_measure, num, den));
                starts.push(cur_start);
                cur_bar = bar;
                continue;
            }
            let target_measure = cur_measure + u32::try_from(measures).map_err(|_| {
                Error::MalformedMidi("time-signature event beyond the supported measure count".into())
            })?;
            let target_start = cur_start + measures * cur_bar;
            let in_force = events.last().expect("anchor event");
            if (in_force.numerator, in_force.denominator) == (num, den) {
                dropped += 1;
                continue;
            }
            events.push(TimeSignatureEvent::new(target_measure, num, den));
            starts.push(target_start);
            cur_measure = target_measure;
            cur_start = target_start;
            cur_bar = bar;
        }
        if events.is_empty() {
            events.push(TimeSignatureEvent::new(0, 4, 4));
            starts.push(0);
        }

        // Find the signature region holding the final sounding step, round
        // the length up to its next boundary, and drop any events past it.
        let last_step = max_off - 1;
        let region = starts.iter().rposition(|&s| s <= last_step).expect("start 0");
        let bar = bar_steps(events[region].numerator, events[region].denominator, spb)? as u64;
        let total = starts[region] + (max_off - starts[region]).div_ceil(bar) * bar;
        let keep = starts.iter().take_while(|&&s| s < total).count();
        dropped += (events.len() - keep) as u64;
        events.truncate(keep);
        Ok((events, total, dropped))
    }
}
