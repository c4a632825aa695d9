//! Binary pianoroll representation, temporal framing, and the PRL on-disk format.
//!
//! A pianoroll is an 88-row binary matrix over a fixed step grid: cell
//! `(pitch, step)` is 1 while that pitch sounds. Columns are stored as
//! `u128` bit masks (bit r = pitch row r, row 0 = MIDI pitch 21), which keeps
//! block extraction and file serialization cheap.

use crate::bytes::Reader;
use crate::error::{Error, Result};

/// Number of pitch rows; the standard piano range.
pub const PITCH_ROWS: u16 = 88;
/// MIDI pitch of row 0 (A0).
pub const LOWEST_PITCH: u8 = 21;
/// MIDI pitch of row 87 (C8).
pub const HIGHEST_PITCH: u8 = 108;

const PRL_MAGIC: [u8; 4] = *b"PRL1";
const COL_BYTES: usize = (PITCH_ROWS as usize).div_ceil(8);

/// A time-signature change taking effect at the start of a measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeSignatureEvent {
    /// 0-based measure index at which the signature takes effect.
    pub start_measure: u32,
    pub numerator: u8,
    pub denominator: u8,
}

impl TimeSignatureEvent {
    pub fn new(start_measure: u32, numerator: u8, denominator: u8) -> Self {
        Self {
            start_measure,
            numerator,
            denominator,
        }
    }
}

/// Steps in one bar of `num`/`den` at the given grid resolution.
///
/// Errors unless `num × steps_per_beat × 4 / den` is a positive integer.
pub fn bar_steps(num: u8, den: u8, steps_per_beat: u16) -> Result<u32> {
    validate_signature(num, den)?;
    let total = num as u64 * steps_per_beat as u64 * 4;
    if !total.is_multiple_of(den as u64) || total == 0 {
        return Err(Error::UnsupportedTimeSig {
            num,
            den,
            reason: format!(
                "bar length {total}/{den} is not a whole number of steps at {steps_per_beat} steps/beat"
            ),
        });
    }
    Ok((total / den as u64) as u32)
}

fn validate_signature(num: u8, den: u8) -> Result<()> {
    if num == 0 {
        return Err(Error::UnsupportedTimeSig {
            num,
            den,
            reason: "numerator must be positive".into(),
        });
    }
    if !matches!(den, 1 | 2 | 4 | 8 | 16) {
        return Err(Error::UnsupportedTimeSig {
            num,
            den,
            reason: "denominator must be a power of two in 1..=16".into(),
        });
    }
    Ok(())
}

/// One measure's position on the step grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeasureSpan {
    pub index: u32,
    pub start: u32,
    pub steps: u32,
    pub numerator: u8,
    pub denominator: u8,
}

/// An 88×T binary matrix with grid and time-signature metadata.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pianoroll {
    cols: Vec<u128>,
    steps_per_beat: u16,
    timesigs: Vec<TimeSignatureEvent>,
}

impl Pianoroll {
    /// An all-zero roll of `num_steps` columns. An empty `timesigs` list
    /// defaults to a single 4/4 at measure 0.
    pub fn new(
        num_steps: u32,
        steps_per_beat: u16,
        timesigs: Vec<TimeSignatureEvent>,
    ) -> Result<Self> {
        Self::from_cols(vec![0u128; num_steps as usize], steps_per_beat, timesigs)
    }

    pub(crate) fn from_cols(
        cols: Vec<u128>,
        steps_per_beat: u16,
        mut timesigs: Vec<TimeSignatureEvent>,
    ) -> Result<Self> {
        if cols.is_empty() {
            return Err(Error::InvariantViolation(
                "pianoroll must span at least one step".into(),
            ));
        }
        if cols.len() > u32::MAX as usize {
            return Err(Error::InvariantViolation("step count exceeds u32".into()));
        }
        if steps_per_beat == 0 {
            return Err(Error::InvariantViolation(
                "steps_per_beat must be positive".into(),
            ));
        }
        if timesigs.is_empty() {
            timesigs.push(TimeSignatureEvent::new(0, 4, 4));
        }
        if timesigs.len() > u16::MAX as usize {
            return Err(Error::InvariantViolation(
                "too many time-signature events".into(),
            ));
        }
        if timesigs[0].start_measure != 0 {
            return Err(Error::InvariantViolation(
                "first time signature must start at measure 0".into(),
            ));
        }
        for pair in timesigs.windows(2) {
            if pair[1].start_measure <= pair[0].start_measure {
                return Err(Error::InvariantViolation(
                    "time-signature start measures must be strictly increasing".into(),
                ));
            }
            if (pair[1].numerator, pair[1].denominator)
                == (pair[0].numerator, pair[0].denominator)
            {
                return Err(Error::InvariantViolation(
                    "consecutive time-signature events must change the signature".into(),
                ));
            }
        }
        for ev in &timesigs {
            bar_steps(ev.numerator, ev.denominator, steps_per_beat)?;
        }
        let roll = Self {
            cols,
            steps_per_beat,
            timesigs,
        };
        roll.walk_measures()?;
        Ok(roll)
    }

    /// True step count T.
    pub fn num_steps(&self) -> u32 {
        self.cols.len() as u32
    }

    pub fn steps_per_beat(&self) -> u16 {
        self.steps_per_beat
    }

    pub fn timesigs(&self) -> &[TimeSignatureEvent] {
        &self.timesigs
    }

    /// Column `step` as a bit mask, bit r = pitch row r.
    pub fn column_mask(&self, step: u32) -> u128 {
        self.cols[step as usize]
    }

    pub(crate) fn columns(&self) -> &[u128] {
        &self.cols
    }

    pub fn cell(&self, step: u32, pitch: u8) -> bool {
        let row = row_of_pitch(pitch);
        self.cols[step as usize] >> row & 1 == 1
    }

    pub fn set_cell(&mut self, step: u32, pitch: u8, on: bool) {
        let row = row_of_pitch(pitch);
        if on {
            self.cols[step as usize] |= 1u128 << row;
        } else {
            self.cols[step as usize] &= !(1u128 << row);
        }
    }

    /// Marks `pitch` sounding for `len` steps starting at `onset`, clipped to
    /// the end of the roll.
    pub fn add_note(&mut self, pitch: u8, onset: u32, len: u32) {
        let row = row_of_pitch(pitch);
        let end = (onset.saturating_add(len)).min(self.num_steps());
        for step in onset..end {
            self.cols[step as usize] |= 1u128 << row;
        }
    }

    /// Total count of active cells.
    pub fn note_cells(&self) -> u64 {
        self.cols.iter().map(|c| c.count_ones() as u64).sum()
    }

    /// Measures covering `[0, T)`, in order. The final span may extend past T
    /// when the roll is not measure-aligned.
    pub fn measure_spans(&self) -> Vec<MeasureSpan> {
        self.walk_measures()
            .expect("measure map validated at construction")
    }

    /// True when T lands exactly on a measure boundary.
    pub fn is_measure_aligned(&self) -> bool {
        let spans = self.measure_spans();
        let last = spans.last().expect("at least one measure");
        last.start as u64 + last.steps as u64 == self.num_steps() as u64
    }

    fn walk_measures(&self) -> Result<Vec<MeasureSpan>> {
        let limit = self.cols.len() as u64;
        let mut spans = Vec::new();
        let mut events = self.timesigs.iter().peekable();
        let first = events.next().expect("timesigs are never empty");
        let (mut num, mut den) = (first.numerator, first.denominator);
        let mut start = 0u64;
        let mut index = 0u32;
        while start < limit {
            if let Some(ev) = events.peek() {
                if ev.start_measure == index {
                    num = ev.numerator;
                    den = ev.denominator;
                    events.next();
                }
            }
            let steps = bar_steps(num, den, self.steps_per_beat)?;
            spans.push(MeasureSpan {
                index,
                start: start as u32,
                steps,
                numerator: num,
                denominator: den,
            });
            start += steps as u64;
            index = index.checked_add(1).ok_or_else(|| {
                Error::InvariantViolation("measure count exceeds u32".into())
            })?;
        }
        if events.peek().is_some() {
            return Err(Error::InvariantViolation(
                "time-signature event starts at or beyond the end of the roll".into(),
            ));
        }
        Ok(spans)
    }
}

pub fn row_of_pitch(pitch: u8) -> u8 {
    assert!(
        (LOWEST_PITCH..=HIGHEST_PITCH).contains(&pitch),
        "pitch {pitch} outside piano range"
    );
    pitch - LOWEST_PITCH
}

pub fn pitch_of_row(row: u8) -> u8 {
    assert!((row as u16) < PITCH_ROWS, "row {row} out of range");
    row + LOWEST_PITCH
}

/// A fixed-width temporal slice of a pianoroll.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    /// Exactly `frame_len` column masks; the last frame of a roll is
    /// zero-padded on the right.
    pub cols: Vec<u128>,
    /// 1-based frame ordinal.
    pub index: u32,
}

/// Splits a roll into `ceil(T / frame_len)` frames of exactly `frame_len`
/// columns, zero-padding the final frame. Concatenating the frames and
/// trimming the padding reproduces the roll.
pub fn split_frames(roll: &Pianoroll, frame_len: u16) -> Result<Vec<Frame>> {
    if frame_len == 0 {
        return Err(Error::InvariantViolation(
            "frame length must be positive".into(),
        ));
    }
    let l = frame_len as usize;
    let cols = roll.columns();
    let n = cols.len().div_ceil(l);
    let mut frames = Vec::with_capacity(n);
    for i in 0..n {
        let lo = i * l;
        let hi = ((i + 1) * l).min(cols.len());
        let mut frame_cols = Vec::with_capacity(l);
        frame_cols.extend_from_slice(&cols[lo..hi]);
        frame_cols.resize(l, 0);
        frames.push(Frame {
            cols: frame_cols,
            index: (i + 1) as u32,
        });
    }
    Ok(frames)
}

/// Serializes a roll to the PRL byte format.
///
/// Layout (little-endian): magic `PRL1`, u16 pitch-row count, u32 true step
/// count, u16 steps per beat, u16 time-signature count, then per signature
/// (u32 start measure, u8 numerator, u8 denominator), then one 11-byte column
/// per step, bit k of byte j = pitch row 8j+k.
pub fn write_prl(roll: &Pianoroll) -> Vec<u8> {
    let mut out = Vec::with_capacity(
        14 + roll.timesigs.len() * 6 + roll.cols.len() * COL_BYTES,
    );
    out.extend_from_slice(&PRL_MAGIC);
    out.extend_from_slice(&PITCH_ROWS.to_le_bytes());
    out.extend_from_slice(&roll.num_steps().to_le_bytes());
    out.extend_from_slice(&roll.steps_per_beat.to_le_bytes());
    out.extend_from_slice(&(roll.timesigs.len() as u16).to_le_bytes());
    for ev in &roll.timesigs {
        out.extend_from_slice(&ev.start_measure.to_le_bytes());
        out.push(ev.numerator);
        out.push(ev.denominator);
    }
    for col in &roll.cols {
        for j in 0..COL_BYTES {
            out.push((col >> (8 * j)) as u8);
        }
    }
    out
}

/// Parses a PRL byte stream. Inverse of [`write_prl`].
pub fn read_prl(bytes: &[u8]) -> Result<Pianoroll> {
    let mut r = Reader::new(bytes);
    let magic = r.take::<4>()?;
    if magic != PRL_MAGIC {
        return Err(Error::BadMagic {
            expected: PRL_MAGIC,
            found: magic,
        });
    }
    let rows = u16::from_le_bytes(r.take::<2>()?);
    if rows != PITCH_ROWS {
        return Err(Error::InvariantViolation(format!(
            "unsupported pitch-row count {rows} (expected {PITCH_ROWS})"
        )));
    }
    let t = u32::from_le_bytes(r.take::<4>()?);
    let steps_per_beat = u16::from_le_bytes(r.take::<2>()?);
    let n_timesigs = u16::from_le_bytes(r.take::<2>()?);
    let mut timesigs = Vec::with_capacity(n_timesigs as usize);
    for _ in 0..n_timesigs {
        let start_measure = u32::from_le_bytes(r.take::<4>()?);
        let [numerator] = r.take::<1>()?;
        let [denominator] = r.take::<1>()?;
        timesigs.push(TimeSignatureEvent {
            start_measure,
            numerator,
            denominator,
        });
    }
    if n_timesigs == 0 {
        return Err(Error::InvariantViolation(
            "header declares zero time-signature events".into(),
        ));
    }
    let payload = t as usize * COL_BYTES;
    let remaining = r.remaining();
    if remaining < payload {
        return Err(Error::TruncatedFile {
            offset: r.len(),
            needed: payload - remaining,
        });
    }
    if remaining > payload {
        return Err(Error::InvariantViolation(format!(
            "{} trailing byte(s) after payload",
            remaining - payload
        )));
    }
    let mut cols = Vec::with_capacity(t as usize);
    for _ in 0..t {
        let raw = r.take::<11>()?;
        let mut col = 0u128;
        for (j, byte) in raw.iter().enumerate() {
            col |= (*byte as u128) << (8 * j);
        }
        cols.push(col);
    }
    Pianoroll::from_cols(cols, steps_per_beat, timesigs)
}

pub fn write_prl_file(roll: &Pianoroll, path: &std::path::Path) -> Result<()> {
    Ok(std::fs::write(path, write_prl(roll))?)
}

pub fn read_prl_file(path: &std::path::Path) -> Result<Pianoroll> {
    read_prl(&std::fs::read(path)?)
}
