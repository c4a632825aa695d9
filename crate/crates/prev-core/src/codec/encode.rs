//! Roll → token encoding.

use super::vocab::layout_for;
use super::{EncodingConfig, EncodingMode, Event, TokenSequence, BOS_ID, EOS_ID};
use crate::error::{Error, Result};
use crate::pianoroll::{bar_steps, Frame, Pianoroll};

/// Packs an h×L binary block (`block[row][col]`, row 0 = lowest pitch, col 0 =
/// earliest step) into its pattern mask: bit weight 2^(row·L + col).
pub fn pattern_id(block: &[Vec<bool>]) -> u16 {
    let rows = block.len();
    assert!(rows > 0, "block must have at least one row");
    let cols = block[0].len();
    assert!(
        rows * cols > 0 && rows * cols <= 16,
        "block bit count must be in 1..=16"
    );
    let mut mask = 0u16;
    for (r, row) in block.iter().enumerate() {
        assert_eq!(row.len(), cols, "ragged block");
        for (c, &bit) in row.iter().enumerate() {
            if bit {
                mask |= 1 << (r * cols + c);
            }
        }
    }
    mask
}

/// Inverse of [`pattern_id`] for the given block dimensions.
pub fn pattern_block(mask: u16, block_height: u16, frame_len: u16) -> Vec<Vec<bool>> {
    let bits = block_height as u32 * frame_len as u32;
    assert!(bits > 0 && bits <= 16, "block bit count must be in 1..=16");
    assert!(
        bits == 16 || mask < 1 << bits,
        "mask {mask} out of range for {block_height}x{frame_len} block"
    );
    (0..block_height)
        .map(|r| {
            (0..frame_len)
                .map(|c| mask >> (r * frame_len + c) & 1 == 1)
                .collect()
        })
        .collect()
}

/// Extracts the K block masks of one frame, bottom block first.
pub(super) fn fill_block_masks(buf: &mut Vec<u16>, cols: &[u128], config: &EncodingConfig) {
    buf.clear();
    let h = config.block_height as u32;
    let l = cols.len();
    let row_mask = (1u128 << h) - 1;
    for j in 0..config.num_blocks() as u32 {
        let shift = j * h;
        let mut mask = 0u16;
        for (c, &col) in cols.iter().enumerate() {
            let bits = (col >> shift & row_mask) as u16;
            if bits != 0 {
                for r in 0..h as usize {
                    mask |= (bits >> r & 1) << (r * l + c);
                }
            }
        }
        buf.push(mask);
    }
}

/// Emits one frame's events for the given mode.
fn frame_events(masks: &[u16], mode: EncodingMode, emit: &mut impl FnMut(Event)) {
    let k = masks.len() as u16;
    let first = masks.iter().position(|&m| m != 0);
    match mode {
        EncodingMode::P => {
            for &mask in masks {
                emit(Event::Pattern(mask));
            }
        }
        EncodingMode::PfPlus => match first {
            None => emit(Event::Frame(k)),
            Some(s) => {
                emit(Event::Frame(s as u16));
                for &mask in &masks[s..] {
                    emit(Event::Pattern(mask));
                }
            }
        },
        EncodingMode::Pf => match first {
            None => emit(Event::Frame(k)),
            Some(s) => {
                let e = masks.iter().rposition(|&m| m != 0).expect("some is nonzero");
                emit(Event::Frame(s as u16));
                for &mask in &masks[s..=e] {
                    emit(Event::Pattern(mask));
                }
            }
        },
        EncodingMode::Full => match first {
            None => emit(Event::Frame(k)),
            Some(s) => {
                let e = masks.iter().rposition(|&m| m != 0).expect("some is nonzero");
                emit(Event::Frame(s as u16));
                let mut j = s;
                while j <= e {
                    if masks[j] != 0 {
                        emit(Event::Pattern(masks[j]));
                        j += 1;
                    } else {
                        let run_end = (j..=e).find(|&x| masks[x] != 0).expect("e is nonzero");
                        emit(Event::Gap((run_end - j) as u16));
                        j = run_end;
                    }
                }
            }
        },
    }
}

/// Encodes a single frame into events. The frame's width must equal the
/// configured frame length.
pub fn encode_frame(frame: &Frame, config: &EncodingConfig) -> Result<Vec<Event>> {
    config.validate_core()?;
    if frame.cols.len() != config.frame_len as usize {
        return Err(Error::DimensionMismatch(format!(
            "frame {} has width {}, config expects {}",
            frame.index,
            frame.cols.len(),
            config.frame_len
        )));
    }
    let mut masks = Vec::with_capacity(config.num_blocks() as usize);
    fill_block_masks(&mut masks, &frame.cols, config);
    let mut events = Vec::new();
    frame_events(&masks, config.mode, &mut |ev| events.push(ev));
    Ok(events)
}

/// Encodes a whole roll: BOS, the initial time signature (when structure is
/// on), per-frame events with bar/time-signature tokens at measure
/// boundaries, then EOS.
pub fn encode_pianoroll(roll: &Pianoroll, config: &EncodingConfig) -> Result<TokenSequence> {
    config.validate_core()?;
    if roll.steps_per_beat() != config.steps_per_beat {
        return Err(Error::DimensionMismatch(format!(
            "roll is gridded at {} steps/beat, config expects {}",
            roll.steps_per_beat(),
            config.steps_per_beat
        )));
    }
    for ev in roll.timesigs() {
        let steps = bar_steps(ev.numerator, ev.denominator, roll.steps_per_beat())?;
        if steps % config.frame_len as u32 != 0 {
            return Err(Error::BarAlignmentError {
                bar_steps: steps,
                frame_len: config.frame_len,
            });
        }
        if config.emit_structure
            && !config
                .timesig_set
                .contains(&(ev.numerator, ev.denominator))
        {
            return Err(Error::UnsupportedTimeSig {
                num: ev.numerator,
                den: ev.denominator,
                reason: "signature is not in the configured set".into(),
            });
        }
    }

    let layout = layout_for(config)?;
    let l = config.frame_len as usize;
    let cols = roll.columns();
    let n_frames = cols.len().div_ceil(l);
    let spans = roll.measure_spans();

    fn push(ids: &mut Vec<u32>, layout: &super::vocab::IdLayout, ev: Event) {
        ids.push(layout.id_of(ev).expect("encoder emits only in-mode events"));
    }

    let mut ids: Vec<u32> = Vec::with_capacity(n_frames * 4 + 2);
    ids.push(BOS_ID);
    if config.emit_structure {
        push(
            &mut ids,
            &layout,
            Event::TimeSig(spans[0].numerator, spans[0].denominator),
        );
    }

    let mut masks = Vec::with_capacity(layout.k as usize);
    let mut pad_buf = vec![0u128; l];
    let mut span_idx = 0usize;
    for i in 0..n_frames {
        let lo = i * l;
        let hi = ((i + 1) * l).min(cols.len());
        let frame_cols: &[u128] = if hi - lo == l {
            &cols[lo..hi]
        } else {
            pad_buf[..hi - lo].copy_from_slice(&cols[lo..hi]);
            pad_buf[hi - lo..].fill(0);
            &pad_buf
        };
        fill_block_masks(&mut masks, frame_cols, config);
        frame_events(&masks, config.mode, &mut |ev| push(&mut ids, &layout, ev));

        if config.emit_structure && span_idx < spans.len() {
            let span = spans[span_idx];
            if ((i + 1) * l) as u64 == span.start as u64 + span.steps as u64 {
                push(&mut ids, &layout, Event::Bar);
                span_idx += 1;
                if span_idx < spans.len() {
                    let next = spans[span_idx];
                    if (next.numerator, next.denominator) != (span.numerator, span.denominator) {
                        push(
                            &mut ids,
                            &layout,
                            Event::TimeSig(next.numerator, next.denominator),
                        );
                    }
                }
            }
        }
    }
    ids.push(EOS_ID);
    Ok(TokenSequence {
        ids,
        config_hash: config.hash(),
        true_t: Some(roll.num_steps()),
    })
}
