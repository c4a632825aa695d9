//! `prev` — command-line frontend for the pianoroll-event toolkit.
//!
//! One binary, batch-oriented: MIDI→PRL conversion, token encoding and
//! decoding, baseline tokenizers, BPE training/application, corpus
//! statistics, musical metrics, and synthetic corpus generation.
//!
//! Exit codes: 0 success, 1 partial batch failure, 2 usage error,
//! 3 data error. Diagnostics go to stderr; data to stdout or files.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use prev_core::baselines::{
    abc_serialize, bpe_apply, bpe_decode, bpe_train, midilike_tokenize, remi_tokenize, AbcScheme,
    BpeModel, MidiLikeScheme, RemiScheme,
};
use prev_core::codec::{read_tokens_file, write_tokens_file, NUM_SPECIALS};
use prev_core::corpus::{generate_synthetic, ingest_directory, SynthParams};
use prev_core::metrics::{
    corpus_stats, js_similarity, piece_metrics, render_table, MetricsReport, PieceMetrics, Scheme,
};
use prev_core::midi::import_midi_file;
use prev_core::pianoroll::{read_prl_file, write_prl, write_prl_file};
use prev_core::{
    build_vocabulary, decode_tokens, encode_pianoroll, EncodingConfig, EncodingMode,
    Error as CoreError, Pianoroll,
};

#[derive(Parser)]
#[command(
    name = "prev",
    version,
    about = "Pianoroll-event codec, tokenizer baselines, and metrics"
)]
struct Cli {
    /// Worker threads for batch subcommands (default: all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a MIDI file (or a directory, recursively) to PRL
    Midi2roll(Midi2Roll),
    /// Encode a PRL file to pianoroll-event tokens
    Encode(Encode),
    /// Decode a token file back to PRL
    Decode(Decode),
    /// Check encode→decode bit-exactness on a PRL file
    Roundtrip(Roundtrip),
    /// Tokenize a PRL file with a baseline scheme
    Tokenize(Tokenize),
    /// Learn BPE merges from token files
    BpeTrain(BpeTrain),
    /// Apply (or invert) a BPE model on a token file
    BpeApply(BpeApply),
    /// Encoding-efficiency table over a PRL corpus
    Stats(Stats),
    /// Musical metrics per piece, or similarity between two sets
    Metrics(Metrics),
    /// Generate a seeded synthetic PRL corpus
    GenCorpus(GenCorpus),
    /// Print the token vocabulary as JSON
    Vocab(Vocab),
}

/// Encoding-geometry flags shared by codec subcommands. Every flag can
/// also be given in a `--config` key=value file; explicit flags win.
#[derive(Args, Debug, Clone, Default)]
struct CodecOpts {
    /// Frame length L in steps
    #[arg(long)]
    frame_len: Option<u16>,
    /// Block height h in pitch rows
    #[arg(long)]
    block_height: Option<u16>,
    /// Encoding mode: p, pf+, pf, or full
    #[arg(long)]
    mode: Option<String>,
    /// Grid resolution in steps per quarter note
    #[arg(long)]
    steps_per_beat: Option<u16>,
    /// Comma-separated time-signature set, e.g. 4/4,3/4,2/4,6/8
    #[arg(long)]
    timesigs: Option<String>,
    /// Omit bar and time-signature tokens
    #[arg(long)]
    no_structure: bool,
    /// Key=value file with defaults for these flags (and format/jobs)
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
}

#[derive(Args)]
struct Midi2Roll {
    /// MIDI file, or a directory scanned recursively for .mid/.midi
    input: PathBuf,
    /// Output PRL file (file input) or directory (directory input)
    #[arg(short, long)]
    output: PathBuf,
    #[command(flatten)]
    codec: CodecOpts,
}

#[derive(Args)]
struct Encode {
    /// Input PRL file
    input: PathBuf,
    /// Output token file
    #[arg(short, long)]
    output: PathBuf,
    /// Write the binary token format instead of text
    #[arg(long)]
    binary: bool,
    #[command(flatten)]
    codec: CodecOpts,
}

#[derive(Args)]
struct Decode {
    /// Input token file (text or binary, sniffed)
    input: PathBuf,
    /// Output PRL file
    #[arg(short, long)]
    output: PathBuf,
    #[command(flatten)]
    codec: CodecOpts,
}

#[derive(Args)]
struct Roundtrip {
    /// Input PRL file
    input: PathBuf,
    #[command(flatten)]
    codec: CodecOpts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BaselineKind {
    Remi,
    Midilike,
    Abc,
}

#[derive(Args)]
struct Tokenize {
    /// Input PRL file
    input: PathBuf,
    /// Baseline scheme
    #[arg(long, value_enum)]
    scheme: BaselineKind,
    /// Output file (tokens, or ABC text for --scheme abc)
    #[arg(short, long)]
    output: PathBuf,
    /// Write the binary token format instead of text
    #[arg(long)]
    binary: bool,
    #[command(flatten)]
    codec: CodecOpts,
}

#[derive(Args)]
struct BpeTrain {
    /// Token files, or directories scanned recursively for .tok files
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Number of merges to learn (training may stop early)
    #[arg(long)]
    merges: usize,
    /// Base vocabulary size (default: one past the largest id seen)
    #[arg(long)]
    base_size: Option<u32>,
    /// Output model file
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct BpeApply {
    /// BPE model file from bpe-train
    model: PathBuf,
    /// Input token file
    input: PathBuf,
    /// Output token file
    #[arg(short, long)]
    output: PathBuf,
    /// Expand merged tokens instead of merging
    #[arg(long)]
    invert: bool,
    /// Write the binary token format instead of text
    #[arg(long)]
    binary: bool,
}

#[derive(Args)]
struct Stats {
    /// Directory scanned recursively for .prl files
    corpus: PathBuf,
    /// Comma-separated schemes: full, p, pf, pf+, remi, midilike, abc, bpe:N
    #[arg(long, default_value = "full,p,pf,pf+,remi,midilike,abc")]
    schemes: String,
    #[arg(long, value_enum)]
    format: Option<ReportFormat>,
    #[command(flatten)]
    codec: CodecOpts,
}

#[derive(Args)]
struct Metrics {
    /// PRL files or directories; with --js, exactly two sets
    #[arg(required = true)]
    paths: Vec<PathBuf>,
    /// Compare the two given sets and print the similarity score
    #[arg(long)]
    js: bool,
    #[arg(long, value_enum)]
    format: Option<ReportFormat>,
    /// Key=value defaults file (format/jobs)
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct GenCorpus {
    /// Output directory for the generated .prl files
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 16)]
    pieces: u32,
    #[arg(long, default_value_t = 8)]
    bars: u32,
    /// Time signature, e.g. 4/4
    #[arg(long, default_value = "4/4")]
    timesig: String,
    /// Per-beat probability of an accompanying triad
    #[arg(long, default_value_t = 0.3)]
    chord_prob: f64,
    /// Melody random-walk half-range in semitones
    #[arg(long, default_value_t = 5)]
    walk: u8,
    /// Per-slot probability of a melody note
    #[arg(long, default_value_t = 0.6)]
    density: f64,
}

#[derive(Args)]
struct Vocab {
    /// Output file (default: stdout)
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    codec: CodecOpts,
}

/// Errors mapped to exit codes: usage → 2, data → 3.
#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(CoreError),
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Data(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(CoreError::Io(e))
    }
}

/// Successful runs either finish cleanly or skip some batch items.
#[derive(Debug, PartialEq, Eq)]
enum Outcome {
    Clean,
    Partial,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Clean) => ExitCode::SUCCESS,
        Ok(Outcome::Partial) => ExitCode::from(1),
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Midi2roll(args) => cmd_midi2roll(args, cli.jobs),
        Command::Encode(args) => cmd_encode(args),
        Command::Decode(args) => cmd_decode(args),
        Command::Roundtrip(args) => cmd_roundtrip(args),
        Command::Tokenize(args) => cmd_tokenize(args),
        Command::BpeTrain(args) => cmd_bpe_train(args),
        Command::BpeApply(args) => cmd_bpe_apply(args),
        Command::Stats(args) => cmd_stats(args, cli.jobs),
        Command::Metrics(args) => cmd_metrics(args, cli.jobs),
        Command::GenCorpus(args) => cmd_gen_corpus(args),
        Command::Vocab(args) => cmd_vocab(args),
    }
}

// ---------------------------------------------------------------------
// Flag resolution

/// Codec flags merged with the `--config` file; flags win over the file,
/// the file wins over built-in defaults.
struct Settings {
    config: EncodingConfig,
    kv: HashMap<String, String>,
}

const KNOWN_KEYS: [&str; 8] = [
    "frame-len",
    "block-height",
    "mode",
    "steps-per-beat",
    "timesigs",
    "no-structure",
    "format",
    "jobs",
];

fn load_kv(path: &Path) -> Result<HashMap<String, String>, CliError> {
    let text = fs::read_to_string(path)?;
    let mut kv = HashMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!(
                "{}:{}: expected key=value, got {raw:?}",
                path.display(),
                n + 1
            ))
        })?;
        let key = key.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(CliError::Usage(format!(
                "{}:{}: unknown key {key:?} (known: {})",
                path.display(),
                n + 1,
                KNOWN_KEYS.join(", ")
            )));
        }
        kv.insert(key, value.trim().to_string());
    }
    Ok(kv)
}

fn kv_get<T: std::str::FromStr>(
    kv: &HashMap<String, String>,
    key: &str,
) -> Result<Option<T>, CliError> {
    match kv.get(key) {
        None => Ok(None),
        Some(raw) => raw.parse().map(Some).map_err(|_| {
            CliError::Usage(format!("config file: bad value {raw:?} for {key}"))
        }),
    }
}

fn parse_mode(text: &str) -> Result<EncodingMode, CliError> {
    match text.to_ascii_lowercase().as_str() {
        "p" => Ok(EncodingMode::P),
        "pf+" => Ok(EncodingMode::PfPlus),
        "pf" => Ok(EncodingMode::Pf),
        "full" => Ok(EncodingMode::Full),
        other => Err(CliError::Usage(format!(
            "unknown mode {other:?} (expected p, pf+, pf, or full)"
        ))),
    }
}

fn parse_timesig(text: &str) -> Result<(u8, u8), CliError> {
    let bad = || CliError::Usage(format!("bad time signature {text:?} (expected e.g. 4/4)"));
    let (num, den) = text.split_once('/').ok_or_else(bad)?;
    Ok((
        num.trim().parse().map_err(|_| bad())?,
        den.trim().parse().map_err(|_| bad())?,
    ))
}

fn parse_timesig_set(text: &str) -> Result<Vec<(u8, u8)>, CliError> {
    text.split(',').map(|part| parse_timesig(part.trim())).collect()
}

impl CodecOpts {
    /// `fallback_spb` supplies the grid of an input roll so users only
    /// need `--steps-per-beat` when overriding it.
    fn settings(&self, fallback_spb: Option<u16>) -> Result<Settings, CliError> {
        let kv = match &self.config {
            Some(path) => load_kv(path)?,
            None => HashMap::new(),
        };
        let defaults = EncodingConfig::default();
        let mode_text = self
            .mode
            .clone()
            .or_else(|| kv.get("mode").cloned());
        let mode = match mode_text {
            Some(text) => parse_mode(&text)?,
            None => defaults.mode,
        };
        let timesig_text = self
            .timesigs
            .clone()
            .or_else(|| kv.get("timesigs").cloned());
        let timesig_set = match timesig_text {
            Some(text) => parse_timesig_set(&text)?,
            None => defaults.timesig_set.clone(),
        };
        let emit_structure = if self.no_structure {
            false
        } else {
            !kv_get::<bool>(&kv, "no-structure")?.unwrap_or(false)
        };
        let config = EncodingConfig {
            frame_len: self
                .frame_len
                .map(Ok)
                .unwrap_or_else(|| kv_get(&kv, "frame-len").map(|v| v.unwrap_or(defaults.frame_len)))?,
            block_height: self.block_height.map(Ok).unwrap_or_else(|| {
                kv_get(&kv, "block-height").map(|v| v.unwrap_or(defaults.block_height))
            })?,
            mode,
            steps_per_beat: match self.steps_per_beat {
                Some(v) => v,
                None => kv_get(&kv, "steps-per-beat")?
                    .or(fallback_spb)
                    .unwrap_or(defaults.steps_per_beat),
            },
            timesig_set,
            emit_structure,
        };
        config
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(Settings { config, kv })
    }
}

impl Settings {
    fn format(&self, flag: Option<ReportFormat>) -> Result<ReportFormat, CliError> {
        if let Some(f) = flag {
            return Ok(f);
        }
        match self.kv.get("format").map(String::as_str) {
            None => Ok(ReportFormat::Text),
            Some("text") => Ok(ReportFormat::Text),
            Some("json") => Ok(ReportFormat::Json),
            Some(other) => Err(CliError::Usage(format!(
                "config file: bad value {other:?} for format"
            ))),
        }
    }

    fn init_jobs(&self, flag: Option<usize>) -> Result<(), CliError> {
        let jobs = match flag {
            Some(n) => Some(n),
            None => kv_get(&self.kv, "jobs")?,
        };
        if let Some(n) = jobs {
            if n == 0 {
                return Err(CliError::Usage("--jobs must be ≥ 1".into()));
            }
            // Ignore the error when a pool already exists (e.g. tests
            // running several commands in one process).
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------
// File collection

/// Files under `path` (recursively) with the given extension, sorted by
/// path; a plain file is returned as-is.
fn collect_files(path: &Path, ext: &str) -> Result<Vec<PathBuf>, CliError> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    if !path.is_dir() {
        return Err(CliError::Data(CoreError::NoInputFiles(
            path.display().to_string(),
        )));
    }
    let mut out = Vec::new();
    let mut stack = vec![path.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir)? {
            let entry = entry?;
            let p = entry.path();
            if p.is_dir() {
                stack.push(p);
            } else if p
                .extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| e.eq_ignore_ascii_case(ext))
            {
                out.push(p);
            }
        }
    }
    out.sort();
    Ok(out)
}

fn load_corpus(path: &Path) -> Result<Vec<(String, Pianoroll)>, CliError> {
    let files = collect_files(path, "prl")?;
    if files.is_empty() {
        return Err(CliError::Data(CoreError::NoInputFiles(
            path.display().to_string(),
        )));
    }
    files
        .iter()
        .map(|f| {
            let name = f
                .strip_prefix(path)
                .unwrap_or(f)
                .display()
                .to_string();
            let roll = read_prl_file(f).map_err(|e| e.with_context(f.display().to_string()))?;
            Ok((name, roll))
        })
        .collect()
}

// ---------------------------------------------------------------------
// Subcommands

fn cmd_midi2roll(args: Midi2Roll, jobs: Option<usize>) -> Result<Outcome, CliError> {
    let settings = args.codec.settings(None)?;
    settings.init_jobs(jobs)?;
    let spb = settings.config.steps_per_beat;
    if args.input.is_dir() {
        let report = ingest_directory(&args.input, &args.output, spb)?;
        for failure in &report.failures {
            eprintln!("skipped {}: {}", failure.source, failure.error);
        }
        eprintln!(
            "wrote {} PRL file(s) and {} ({} failure(s))",
            report.entries.len(),
            report.manifest_path.display(),
            report.failures.len()
        );
        if report.failures.is_empty() {
            Ok(Outcome::Clean)
        } else {
            Ok(Outcome::Partial)
        }
    } else {
        let import = import_midi_file(&args.input, spb)?;
        write_prl_file(&import.roll, &args.output)?;
        let warnings = import.dropped_notes
            + import.dangling_notes
            + import.stray_offs
            + import.dropped_timesigs;
        eprintln!(
            "{}: {} notes, {} steps, {} bars, {} warning(s) -> {}",
            args.input.display(),
            import.notes,
            import.roll.num_steps(),
            import.roll.measure_spans().len(),
            warnings,
            args.output.display()
        );
        Ok(Outcome::Clean)
    }
}

fn cmd_encode(args: Encode) -> Result<Outcome, CliError> {
    let roll = read_prl_file(&args.input)?;
    let settings = args.codec.settings(Some(roll.steps_per_beat()))?;
    let seq = encode_pianoroll(&roll, &settings.config)?;
    write_tokens_file(&seq, &args.output, args.binary)?;
    eprintln!(
        "{} tokens ({} mode) -> {}",
        seq.ids.len(),
        settings.config.mode.name(),
        args.output.display()
    );
    Ok(Outcome::Clean)
}

fn cmd_decode(args: Decode) -> Result<Outcome, CliError> {
    let seq = read_tokens_file(&args.input)?;
    let settings = args.codec.settings(None)?;
    let roll = decode_tokens(&seq, &settings.config)?;
    write_prl_file(&roll, &args.output)?;
    eprintln!(
        "{} steps, {} note cells -> {}",
        roll.num_steps(),
        roll.note_cells(),
        args.output.display()
    );
    Ok(Outcome::Clean)
}

fn cmd_roundtrip(args: Roundtrip) -> Result<Outcome, CliError> {
    let roll = read_prl_file(&args.input)?;
    let settings = args.codec.settings(Some(roll.steps_per_beat()))?;
    let seq = encode_pianoroll(&roll, &settings.config)?;
    let back = decode_tokens(&seq, &settings.config)?;
    if write_prl(&roll) == write_prl(&back) {
        println!(
            "OK bit-exact: {} steps, {} tokens ({} mode)",
            roll.num_steps(),
            seq.ids.len(),
            settings.config.mode.name()
        );
        Ok(Outcome::Clean)
    } else {
        let mut differing_cells = 0u64;
        let mut first_step = None;
        for step in 0..roll.num_steps().max(back.num_steps()) {
            let a = if step < roll.num_steps() { roll.column_mask(step) } else { 0 };
            let b = if step < back.num_steps() { back.column_mask(step) } else { 0 };
            if a != b {
                differing_cells += u64::from((a ^ b).count_ones());
                first_step.get_or_insert(step);
            }
        }
        println!(
            "MISMATCH: {} cell(s) differ starting at step {:?}; {} vs {} steps",
            differing_cells,
            first_step,
            roll.num_steps(),
            back.num_steps()
        );
        Err(CliError::Data(CoreError::InvariantViolation(
            "round-trip is not bit-exact".into(),
        )))
    }
}

fn cmd_tokenize(args: Tokenize) -> Result<Outcome, CliError> {
    let roll = read_prl_file(&args.input)?;
    let settings = args.codec.settings(Some(roll.steps_per_beat()))?;
    let spb = settings.config.steps_per_beat;
    match args.scheme {
        BaselineKind::Remi => {
            let scheme = RemiScheme::new(spb, settings.config.timesig_set.clone())?;
            let seq = remi_tokenize(&roll, &scheme)?;
            write_tokens_file(&seq, &args.output, args.binary)?;
            eprintln!("{} REMI-lite tokens -> {}", seq.ids.len(), args.output.display());
        }
        BaselineKind::Midilike => {
            let scheme = MidiLikeScheme::new(spb)?;
            let seq = midilike_tokenize(&roll, &scheme)?;
            write_tokens_file(&seq, &args.output, args.binary)?;
            eprintln!(
                "{} MIDI-like-lite tokens -> {}",
                seq.ids.len(),
                args.output.display()
            );
        }
        BaselineKind::Abc => {
            if args.binary {
                return Err(CliError::Usage(
                    "--binary does not apply to the abc scheme".into(),
                ));
            }
            let scheme = AbcScheme::new(spb)?;
            let text = abc_serialize(&roll, &scheme)?;
            fs::write(&args.output, &text)?;
            eprintln!("{} ABC chars -> {}", text.len(), args.output.display());
        }
    }
    Ok(Outcome::Clean)
}

fn cmd_bpe_train(args: BpeTrain) -> Result<Outcome, CliError> {
    let mut files = Vec::new();
    for input in &args.inputs {
        files.extend(collect_files(input, "tok")?);
    }
    files.sort();
    if files.is_empty() {
        return Err(CliError::Data(CoreError::NoInputFiles(
            "no .tok files among the inputs".into(),
        )));
    }
    let seqs = files
        .iter()
        .map(|f| read_tokens_file(f).map_err(|e| e.with_context(f.display().to_string())))
        .collect::<prev_core::Result<Vec<_>>>()?;
    let base_size = match args.base_size {
        Some(n) => n,
        None => seqs
            .iter()
            .flat_map(|s| s.ids.iter())
            .max()
            .map(|&m| m + 1)
            .ok_or_else(|| {
                CliError::Usage("cannot infer --base-size from empty sequences".into())
            })?,
    };
    let model = bpe_train(&seqs, args.merges, base_size)?;
    fs::write(&args.output, model.to_text())?;
    eprintln!(
        "learned {} merge(s) on {} file(s), base size {} -> {}",
        model.merges().len(),
        files.len(),
        base_size,
        args.output.display()
    );
    Ok(Outcome::Clean)
}

fn cmd_bpe_apply(args: BpeApply) -> Result<Outcome, CliError> {
    let model = BpeModel::from_text(&fs::read_to_string(&args.model)?)?;
    let seq = read_tokens_file(&args.input)?;
    let out = if args.invert {
        bpe_decode(&model, &seq)?
    } else {
        bpe_apply(&model, &seq)?
    };
    write_tokens_file(&out, &args.output, args.binary)?;
    eprintln!(
        "{} -> {} tokens -> {}",
        seq.ids.len(),
        out.ids.len(),
        args.output.display()
    );
    Ok(Outcome::Clean)
}

fn parse_schemes(text: &str) -> Result<Vec<Scheme>, CliError> {
    text.split(',')
        .map(|part| match part.trim().to_ascii_lowercase().as_str() {
            "full" => Ok(Scheme::PianorollEvent(EncodingMode::Full)),
            "p" => Ok(Scheme::PianorollEvent(EncodingMode::P)),
            "pf" => Ok(Scheme::PianorollEvent(EncodingMode::Pf)),
            "pf+" => Ok(Scheme::PianorollEvent(EncodingMode::PfPlus)),
            "remi" => Ok(Scheme::RemiLite),
            "midilike" => Ok(Scheme::MidiLikeLite),
            "abc" => Ok(Scheme::AbcLite),
            other => match other.strip_prefix("bpe:").map(str::parse) {
                Some(Ok(merges)) => Ok(Scheme::RemiBpe { merges }),
                _ => Err(CliError::Usage(format!(
                    "unknown scheme {part:?} (expected full, p, pf, pf+, remi, midilike, abc, or bpe:N)"
                ))),
            },
        })
        .collect()
}

fn cmd_stats(args: Stats, jobs: Option<usize>) -> Result<Outcome, CliError> {
    let pieces = load_corpus(&args.corpus)?;
    let settings = args.codec.settings(Some(pieces[0].1.steps_per_beat()))?;
    settings.init_jobs(jobs)?;
    let schemes = parse_schemes(&args.schemes)?;
    let rows = corpus_stats(&pieces, &schemes, &settings.config)?;
    match settings.format(args.format)? {
        ReportFormat::Text => print!("{}", render_table(&rows)),
        ReportFormat::Json => {
            println!("{}", serde_json::to_string_pretty(&rows).expect("plain fields"))
        }
    }
    Ok(Outcome::Clean)
}

fn metric_set(paths: &[PathBuf]) -> Result<(Vec<(String, PieceMetrics)>, usize), CliError> {
    let mut files = Vec::new();
    for path in paths {
        files.extend(collect_files(path, "prl")?);
    }
    files.sort();
    if files.is_empty() {
        return Err(CliError::Data(CoreError::NoInputFiles(
            "no .prl files among the inputs".into(),
        )));
    }
    let mut rows = Vec::new();
    let mut skipped = 0usize;
    for file in &files {
        let outcome = read_prl_file(file).and_then(|roll| piece_metrics(&roll));
        match outcome {
            Ok(metrics) => rows.push((file.display().to_string(), metrics)),
            Err(e) => {
                eprintln!("skipped {}: {e}", file.display());
                skipped += 1;
            }
        }
    }
    Ok((rows, skipped))
}

fn cmd_metrics(args: Metrics, jobs: Option<usize>) -> Result<Outcome, CliError> {
    let settings = Settings {
        config: EncodingConfig::default(),
        kv: match &args.config {
            Some(path) => load_kv(path)?,
            None => HashMap::new(),
        },
    };
    settings.init_jobs(jobs)?;
    let format = settings.format(args.format)?;

    if args.js {
        if args.paths.len() != 2 {
            return Err(CliError::Usage(
                "--js needs exactly two paths (one per set)".into(),
            ));
        }
        let (set_a, skipped_a) = metric_set(&args.paths[0..1])?;
        let (set_b, skipped_b) = metric_set(&args.paths[1..2])?;
        let values_a: Vec<PieceMetrics> = set_a.iter().map(|(_, m)| *m).collect();
        let values_b: Vec<PieceMetrics> = set_b.iter().map(|(_, m)| *m).collect();
        let similarity = js_similarity(&values_a, &values_b)?;
        match format {
            ReportFormat::Text => println!("JS similarity: {similarity:.4}"),
            ReportFormat::Json => println!(
                "{}",
                serde_json::json!({
                    "js_similarity": similarity,
                    "set_a_pieces": values_a.len(),
                    "set_b_pieces": values_b.len(),
                })
            ),
        }
        return Ok(if skipped_a + skipped_b > 0 {
            Outcome::Partial
        } else {
            Outcome::Clean
        });
    }

    let (rows, skipped) = metric_set(&args.paths)?;
    if rows.is_empty() {
        return Err(CliError::Data(CoreError::DomainError(
            "no piece produced metrics".into(),
        )));
    }
    let values: Vec<PieceMetrics> = rows.iter().map(|(_, m)| *m).collect();
    let report = if values.len() >= 2 {
        Some(MetricsReport::from_pieces(values)?)
    } else {
        None
    };
    match format {
        ReportFormat::Text => {
            let name_width = rows
                .iter()
                .map(|(n, _)| n.len())
                .chain(std::iter::once(8))
                .max()
                .unwrap();
            println!("{:<name_width$}  {:>8}  {:>8}  {:>8}", "piece", "PR", "GC", "SC");
            for (name, m) in &rows {
                println!(
                    "{:<name_width$}  {:>8.4}  {:>8.4}  {:>8.4}",
                    name, m.polyphony_rate, m.groove_consistency, m.scale_consistency
                );
            }
            if let Some(report) = &report {
                println!(
                    "{:<name_width$}  {:>8.4}  {:>8.4}  {:>8.4}",
                    "mean",
                    report.mean.polyphony_rate,
                    report.mean.groove_consistency,
                    report.mean.scale_consistency
                );
                println!(
                    "{:<name_width$}  {:>8.4}  {:>8.4}  {:>8.4}",
                    "variance",
                    report.variance.polyphony_rate,
                    report.variance.groove_consistency,
                    report.variance.scale_consistency
                );
            }
        }
        ReportFormat::Json => {
            let pieces: Vec<serde_json::Value> = rows
                .iter()
                .map(|(name, m)| {
                    serde_json::json!({
                        "piece": name,
                        "polyphony_rate": m.polyphony_rate,
                        "groove_consistency": m.groove_consistency,
                        "scale_consistency": m.scale_consistency,
                    })
                })
                .collect();
            let mut doc = serde_json::json!({ "pieces": pieces });
            if let Some(report) = &report {
                doc["mean"] = serde_json::to_value(report.mean).expect("plain fields");
                doc["variance"] = serde_json::to_value(report.variance).expect("plain fields");
            }
            println!("{}", serde_json::to_string_pretty(&doc).expect("plain fields"));
        }
    }
    Ok(if skipped > 0 { Outcome::Partial } else { Outcome::Clean })
}

fn cmd_gen_corpus(args: GenCorpus) -> Result<Outcome, CliError> {
    let params = SynthParams {
        seed: args.seed,
        pieces: args.pieces,
        bars_per_piece: args.bars,
        timesig: parse_timesig(&args.timesig)?,
        chord_probability: args.chord_prob,
        walk_half_range: args.walk,
        note_density: args.density,
    };
    let rolls = generate_synthetic(&params)?;
    fs::create_dir_all(&args.output)?;
    for (i, roll) in rolls.iter().enumerate() {
        write_prl_file(roll, &args.output.join(format!("synth_{i:04}.prl")))?;
    }
    eprintln!(
        "wrote {} piece(s) (seed {}) to {}",
        rolls.len(),
        args.seed,
        args.output.display()
    );
    Ok(Outcome::Clean)
}

fn cmd_vocab(args: Vocab) -> Result<Outcome, CliError> {
    let settings = args.codec.settings(None)?;
    let vocab = build_vocabulary(&settings.config)?;
    let json = vocab.export_json();
    match &args.output {
        Some(path) => fs::write(path, &json)?,
        None => println!("{json}"),
    }
    eprintln!(
        "V = {} content tokens (+{} specials), config {:016x}",
        vocab.reported_size(),
        NUM_SPECIALS,
        vocab.config_hash()
    );
    Ok(Outcome::Clean)
}
