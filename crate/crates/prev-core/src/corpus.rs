//! Batch MIDI ingestion and a seeded synthetic-corpus generator.
//!
//! [`ingest_directory`] converts every `.mid`/`.midi` file under a
//! directory to a PRL file plus a JSONL manifest, containing one entry
//! per converted file sorted by source path; per-file failures are
//! collected, not fatal. [`generate_synthetic`] builds reproducible
//! desk-scale corpora: the generator is ChaCha8 (`rand_chacha`), whose
//! output is specified and portable, so one seed yields bit-identical
//! corpora on every platform.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::midi::import_midi;
use crate::pianoroll::{bar_steps, write_prl, Pianoroll, TimeSignatureEvent};

/// One successfully ingested file, as recorded in `manifest.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Source path relative to the ingest root, `/`-separated.
    pub source: String,
    /// PRL file name inside the output directory.
    pub prl: String,
    pub num_steps: u32,
    pub bars: u32,
    pub note_cells: u64,
    /// Events the importer had to drop or repair (out-of-range notes,
    /// dangling note-ons, stray note-offs, discarded time signatures).
    pub warnings: u64,
    /// SHA-256 of the PRL bytes, lowercase hex.
    pub sha256: String,
}

/// A file the importer rejected; the batch continues without it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestFailure {
    pub source: String,
    pub error: String,
}

/// Outcome of one ingest run.
#[derive(Debug, Clone)]
pub struct IngestReport {
    /// Entries sorted by source path; also written to `manifest.jsonl`.
    pub entries: Vec<ManifestEntry>,
    /// Rejected files, sorted by source path; also written to
    /// `failures.jsonl` when non-empty.
    pub failures: Vec<IngestFailure>,
    pub manifest_path: PathBuf,
}

/// Converts every MIDI file under `input` (recursively) into a PRL file
/// in `out_dir`, writing `manifest.jsonl` with one entry per success.
///
/// Output names are the relative source paths with path separators
/// replaced by `__` and the extension swapped for `.prl`, so the mapping
/// is stable and collision-free for distinct sources. Re-running on
/// unchanged inputs rewrites byte-identical files.
pub fn ingest_directory(input: &Path, out_dir: &Path, steps_per_beat: u16) -> Result<IngestReport> {
    let mut sources = Vec::new();
    collect_midi_files(input, Path::new(""), &mut sources)?;
    if sources.is_empty() {
        return Err(Error::NoInputFiles(input.display().to_string()));
    }
    sources.sort();
    fs::create_dir_all(out_dir)?;

    let outcomes: Vec<std::result::Result<ManifestEntry, IngestFailure>> = sources
        .par_iter()
        .map(|rel| {
            ingest_one(input, out_dir, rel, steps_per_beat).map_err(|e| IngestFailure {
                source: rel.clone(),
                error: e.to_string(),
            })
        })
        .collect();

    let mut entries = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(entry) => entries.push(entry),
            Err(failure) => failures.push(failure),
        }
    }

    let manifest_path = out_dir.join("manifest.jsonl");
    let mut manifest = String::new();
    for entry in &entries {
        manifest.push_str(&serde_json::to_string(entry).expect("plain fields"));
        manifest.push('\n');
    }
    fs::write(&manifest_path, manifest)?;
    let failures_path = out_dir.join("failures.jsonl");
    if failures.is_empty() {
        // Leave no stale failure list behind from a previous run.
        let _ = fs::remove_file(&failures_path);
    } else {
        let mut text = String::new();
        for failure in &failures {
            text.push_str(&serde_json::to_string(failure).expect("plain fields"));
            text.push('\n');
        }
        fs::write(&failures_path, text)?;
    }

    Ok(IngestReport {
        entries,
        failures,
        manifest_path,
    })
}

fn collect_midi_files(root: &Path, rel: &Path, out: &mut Vec<String>) -> Result<()> {
    for entry in fs::read_dir(root.join(rel))? {
        let entry = entry?;
        let name = entry.file_name();
        let rel_child = rel.join(&name);
        let kind = entry.file_type()?;
        if kind.is_dir() {
            collect_midi_files(root, &rel_child, out)?;
        } else if kind.is_file() {
            let is_midi = Path::new(&name)
                .extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| e.eq_ignore_ascii_case("mid") || e.eq_ignore_ascii_case("midi"));
            if is_midi {
                // Normalize to `/` so manifests match across platforms.
                let text = rel_child
                    .components()
                    .map(|c| c.as_os_str().to_string_lossy())
                    .collect::<Vec<_>>()
                    .join("/");
                out.push(text);
            }
        }
    }
    Ok(())
}

fn ingest_one(
    input: &Path,
    out_dir: &Path,
    rel: &str,
    steps_per_beat: u16,
) -> Result<ManifestEntry> {
    let bytes = fs::read(input.join(rel))?;
    let import = import_midi(&bytes, steps_per_beat)?;
    let roll = &import.roll;
    let prl_bytes = write_prl(roll);
    let stem = rel.replace('/', "__");
    let prl_name = match stem.rsplit_once('.') {
        Some((base, _ext)) => format!("{base}.prl"),
        None => format!("{stem}.prl"),
    };
    fs::write(out_dir.join(&prl_name), &prl_bytes)?;
    let digest = Sha256::digest(&prl_bytes);
    let warnings = import.dropped_notes
        + import.dangling_notes
        + import.stray_offs
        + import.dropped_timesigs;
    Ok(ManifestEntry {
        source: rel.to_string(),
        prl: prl_name,
        num_steps: roll.num_steps(),
        bars: roll.measure_spans().len() as u32,
        note_cells: roll.note_cells(),
        warnings,
        sha256: format!("{digest:x}"),
    })
}

/// Reads a `manifest.jsonl` back into entries.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .map(|(n, line)| {
            serde_json::from_str(line)
                .map_err(|e| Error::MalformedFile(format!("manifest line {}: {e}", n + 1)))
        })
        .collect()
}

/// Settings for [`generate_synthetic`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub seed: u64,
    pub pieces: u32,
    pub bars_per_piece: u32,
    pub timesig: (u8, u8),
    /// Per-beat probability of an accompanying triad.
    pub chord_probability: f64,
    /// Melody random-walk half-range in semitones per slot.
    pub walk_half_range: u8,
    /// Per-slot probability of a melody note (8 half-beat slots per beat).
    pub note_density: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            seed: 0,
            pieces: 16,
            bars_per_piece: 8,
            timesig: (4, 4),
            chord_probability: 0.3,
            walk_half_range: 5,
            note_density: 0.6,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: &str| Err(Error::DomainError(reason.into()));
        if self.pieces == 0 {
            return bad("piece count must be ≥ 1");
        }
        if self.bars_per_piece == 0 {
            return bad("bars per piece must be ≥ 1");
        }
        if !(0.0..=1.0).contains(&self.chord_probability) {
            return bad("chord probability must be in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.note_density) {
            return bad("note density must be in [0, 1]");
        }
        if self.walk_half_range > 24 {
            return bad("walk half-range must be ≤ 24 semitones");
        }
        bar_steps(self.timesig.0, self.timesig.1, GRID)?;
        Ok(())
    }
}

/// Grid resolution of generated pieces (steps per quarter note).
const GRID: u16 = 16;
/// Melody slots are half a beat: 8 per beat at the fixed grid.
const SLOT_STEPS: u32 = 2;
/// Melody pitches walk inside this band (triads sit an octave lower).
const MELODY_LO: i32 = 45;
const MELODY_HI: i32 = 96;

/// Generates `params.pieces` rolls deterministically from the seed.
///
/// Each piece has a random-walk melody (one optional 2-step note per
/// half-beat slot) over occasional beat-long major triads rooted an
/// octave below the melody. Piece `i` uses an independent ChaCha8 stream
/// seeded from `seed` and `i`, so corpora are stable under reordering
/// and identical across platforms.
pub fn generate_synthetic(params: &SynthParams) -> Result<Vec<Pianoroll>> {
    params.validate()?;
    let (num, den) = params.timesig;
    let steps_per_bar = bar_steps(num, den, GRID)?;
    let num_steps = steps_per_bar
        .checked_mul(params.bars_per_piece)
        .filter(|&t| t <= 1 << 24)
        .ok_or_else(|| Error::DomainError("piece length overflows the step grid".into()))?;

    (0..params.pieces)
        .map(|idx| {
            let stream = params.seed ^ u64::from(idx).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            let mut rng = ChaCha8Rng::seed_from_u64(stream);
            let mut roll = Pianoroll::new(
                num_steps,
                GRID,
                vec![TimeSignatureEvent::new(0, num, den)],
            )?;
            let mut melody: i32 = rng.gen_range(60..=84);
            let beats = num_steps / u32::from(GRID);
            for beat in 0..beats {
                let beat_start = beat * u32::from(GRID);
                if rng.gen_bool(params.chord_probability) {
                    for offset in [-12, -8, -5] {
                        let pitch = (melody + offset).clamp(21, 108) as u8;
                        roll.add_note(pitch, beat_start, u32::from(GRID));
                    }
                }
                for slot in 0..u32::from(GRID) / SLOT_STEPS {
                    if rng.gen_bool(params.note_density) {
                        roll.add_note(melody as u8, beat_start + slot * SLOT_STEPS, SLOT_STEPS);
                    }
                    melody += rng.gen_range(-i32::from(params.walk_half_range)..=i32::from(params.walk_half_range));
                    while !(MELODY_LO..=MELODY_HI).contains(&melody) {
                        if melody < MELODY_LO {
                            melody = 2 * MELODY_LO - melody;
                        } else {
                            melody = 2 * MELODY_HI - melody;
                        }
                    }
                }
            }
            Ok(roll)
        })
        .collect()
}
