//! Token-sequence file formats.
//!
//! Text: a `#prev-tokens v1 config=<16 hex digits>` header line, then one
//! decimal token id per line. Binary: magic `PRVT`, u64 LE config hash,
//! u32 LE token count, then the ids as u32 LE. Neither format records the
//! true step count, so a roll decoded from a file ends on a frame boundary.

use std::fmt::Write as _;
use std::path::Path;

use super::TokenSequence;
use crate::bytes::Reader;
use crate::error::{Error, Result};

const MAGIC: [u8; 4] = *b"PRVT";
const TEXT_HEADER: &str = "#prev-tokens v1 config=";

/// Renders a sequence in the line-oriented text format.
pub fn write_tokens_text(seq: &TokenSequence) -> String {
    let mut out = String::with_capacity(seq.ids.len() * 4 + 44);
    writeln!(out, "{TEXT_HEADER}{:016x}", seq.config_hash).unwrap();
    for id in &seq.ids {
        writeln!(out, "{id}").unwrap();
    }
    out
}

/// Parses the text format. Inverse of [`write_tokens_text`].
pub fn read_tokens_text(text: &str) -> Result<TokenSequence> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| malformed("empty token file".into()))?;
    let hex = header
        .strip_prefix(TEXT_HEADER)
        .ok_or_else(|| malformed(format!("expected `{TEXT_HEADER}...` header")))?;
    let config_hash = u64::from_str_radix(hex, 16)
        .map_err(|_| malformed(format!("bad config hash {hex:?}")))?;
    let mut ids = Vec::new();
    for (n, line) in lines.enumerate() {
        let id = line
            .parse::<u32>()
            .map_err(|_| malformed(format!("line {}: expected a token id, got {line:?}", n + 2)))?;
        ids.push(id);
    }
    Ok(TokenSequence {
        ids,
        config_hash,
        true_t: None,
    })
}

/// Renders a sequence in the binary format.
pub fn write_tokens_binary(seq: &TokenSequence) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + seq.ids.len() * 4);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&seq.config_hash.to_le_bytes());
    out.extend_from_slice(&u32::try_from(seq.ids.len()).expect("token count").to_le_bytes());
    for id in &seq.ids {
        out.extend_from_slice(&id.to_le_bytes());
    }
    out
}

/// Parses the binary format. Inverse of [`write_tokens_binary`].
pub fn read_tokens_binary(bytes: &[u8]) -> Result<TokenSequence> {
    let mut r = Reader::new(bytes);
    let magic = r.take::<4>()?;
    if magic != MAGIC {
        return Err(Error::BadMagic {
            expected: MAGIC,
            found: magic,
        });
    }
    let config_hash = u64::from_le_bytes(r.take::<8>()?);
    let count = u32::from_le_bytes(r.take::<4>()?) as usize;
    let payload = count * 4;
    if r.remaining() < payload {
        return Err(Error::TruncatedFile {
            offset: r.len(),
            needed: payload - r.remaining(),
        });
    }
    if r.remaining() > payload {
        return Err(Error::InvariantViolation(format!(
            "{} trailing byte(s) after payload",
            r.remaining() - payload
        )));
    }
    let mut ids = Vec::with_capacity(count);
    for _ in 0..count {
        ids.push(u32::from_le_bytes(r.take::<4>()?));
    }
    Ok(TokenSequence {
        ids,
        config_hash,
        true_t: None,
    })
}

/// Parses either format, telling them apart by their first bytes.
pub fn read_tokens(bytes: &[u8]) -> Result<TokenSequence> {
    if bytes.starts_with(&MAGIC) {
        read_tokens_binary(bytes)
    } else if bytes.starts_with(b"#") {
        let text = std::str::from_utf8(bytes)
            .map_err(|_| malformed("token text is not valid UTF-8".into()))?;
        read_tokens_text(text)
    } else {
        Err(malformed(
            "neither a PRVT binary nor a #prev-tokens text file".into(),
        ))
    }
}

pub fn write_tokens_file(seq: &TokenSequence, path: &Path, binary: bool) -> Result<()> {
    if binary {
        std::fs::write(path, write_tokens_binary(seq))?;
    } else {
        std::fs::write(path, write_tokens_text(seq))?;
    }
    Ok(())
}

pub fn read_tokens_file(path: &Path) -> Result<TokenSequence> {
    read_tokens(&std::fs::read(path)?)
}

fn malformed(reason: String) -> Error {
    Error::MalformedFile(reason)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> TokenSequence {
        TokenSequence {
            ids: vec![1, 3, 90, 345, 2],
            config_hash: 0x0123_4567_89ab_cdef,
            true_t: None,
        }
    }

    #[test]
    fn text_round_trip_is_byte_identical() {
        let seq = sample();
        let text = write_tokens_text(&seq);
        let back = read_tokens_text(&text).unwrap();
        assert_eq!(back, seq);
        assert_eq!(write_tokens_text(&back), text);
    }

    #[test]
    fn text_format_is_exactly_as_documented() {
        let text = write_tokens_text(&sample());
        assert_eq!(
            text,
            "#prev-tokens v1 config=0123456789abcdef\n1\n3\n90\n345\n2\n"
        );
    }

    #[test]
    fn binary_round_trip_is_byte_identical() {
        let seq = sample();
        let bytes = write_tokens_binary(&seq);
        let back = read_tokens_binary(&bytes).unwrap();
        assert_eq!(back, seq);
        assert_eq!(write_tokens_binary(&back), bytes);
    }

    #[test]
    fn sniffing_reads_both_formats() {
        let seq = sample();
        assert_eq!(read_tokens(&write_tokens_binary(&seq)).unwrap(), seq);
        assert_eq!(
            read_tokens(write_tokens_text(&seq).as_bytes()).unwrap(),
            seq
        );
        assert!(matches!(
            read_tokens(b"PRL1whatever"),
            Err(Error::MalformedFile(_))
        ));
    }

    #[test]
    fn text_parser_rejects_junk() {
        assert!(read_tokens_text("").is_err());
        assert!(read_tokens_text("#prev-tokens v2 config=00\n1\n").is_err());
        assert!(read_tokens_text("#prev-tokens v1 config=zz\n1\n").is_err());
        let err = read_tokens_text("#prev-tokens v1 config=00\n1\nfoo\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        assert!(read_tokens_text("#prev-tokens v1 config=00\n-1\n").is_err());
        assert!(read_tokens_text("#prev-tokens v1 config=00\n\n1\n").is_err());
    }

    #[test]
    fn binary_parser_rejects_damage() {
        let seq = sample();
        let good = write_tokens_binary(&seq);

        let mut wrong_magic = good.clone();
        wrong_magic[..4].copy_from_slice(b"PRVX");
        assert!(matches!(
            read_tokens_binary(&wrong_magic),
            Err(Error::BadMagic { .. })
        ));

        assert!(matches!(
            read_tokens_binary(&good[..good.len() - 1]),
            Err(Error::TruncatedFile { .. })
        ));

        let mut trailing = good.clone();
        trailing.push(0);
        assert!(matches!(
            read_tokens_binary(&trailing),
            Err(Error::InvariantViolation(_))
        ));
    }

    #[test]
    fn tokens_survive_a_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let seq = sample();
        for binary in [false, true] {
            let path = dir.path().join(if binary { "t.prvt" } else { "t.txt" });
            write_tokens_file(&seq, &path, binary).unwrap();
            assert_eq!(read_tokens_file(&path).unwrap(), seq);
        }
    }
}
