//! Greedy byte-pair encoding over token sequences.
//!
//! Training repeatedly merges the most frequent adjacent id pair — counted
//! over every adjacent position, overlaps included — breaking ties toward
//! the smaller (left, right) pair, and stops early once no pair occurs
//! twice. Merge `i` mints id `base_size + i`, so the extended vocabulary
//! stays contiguous.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::codec::TokenSequence;
use crate::error::{Error, Result};

/// An ordered list of learned merges over a base vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpeModel {
    base_hash: u64,
    base_size: u32,
    merges: Vec<(u32, u32)>,
}

impl BpeModel {
    /// Builds a model from parts, checking that each merge only references
    /// ids minted before it.
    pub fn new(base_hash: u64, base_size: u32, merges: Vec<(u32, u32)>) -> Result<Self> {
        for (i, &(left, right)) in merges.iter().enumerate() {
            let minted = base_size + i as u32;
            if left >= minted || right >= minted {
                return Err(Error::InvariantViolation(format!(
                    "merge {i} references id {} not yet minted",
                    left.max(right)
                )));
            }
        }
        Ok(Self {
            base_hash,
            base_size,
            merges,
        })
    }

    /// A model with no merges; apply and decode are the identity.
    pub fn identity(base_hash: u64, base_size: u32) -> Self {
        Self {
            base_hash,
            base_size,
            merges: Vec::new(),
        }
    }

    pub fn base_hash(&self) -> u64 {
        self.base_hash
    }

    pub fn base_size(&self) -> u32 {
        self.base_size
    }

    pub fn merges(&self) -> &[(u32, u32)] {
        &self.merges
    }

    /// Base vocabulary plus one id per merge.
    pub fn extended_size(&self) -> u32 {
        self.base_size.saturating_add(self.merges.len() as u32)
    }

    /// Renders the model file: a header line, then one `left right new`
    /// line per merge.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "#bpe v1 base={:016x} merges={}",
            self.base_hash,
            self.merges.len()
        )
        .unwrap();
        for (i, &(left, right)) in self.merges.iter().enumerate() {
            writeln!(out, "{left} {right} {}", self.base_size + i as u32).unwrap();
        }
        out
    }

    /// Parses [`Self::to_text`] output. A file with no merges leaves the
    /// base size unknowable; such a model behaves as the identity.
    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |reason: String| Error::MalformedFile(reason);
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty model file".into()))?;
        let rest = header
            .strip_prefix("#bpe v1 base=")
            .ok_or_else(|| bad("expected a `#bpe v1` header".into()))?;
        let (hash_hex, merges_field) = rest
            .split_once(" merges=")
            .ok_or_else(|| bad("header is missing the merge count".into()))?;
        let base_hash = u64::from_str_radix(hash_hex, 16)
            .map_err(|_| bad(format!("bad vocabulary hash {hash_hex:?}")))?;
        let declared: usize = merges_field
            .parse()
            .map_err(|_| bad(format!("bad merge count {merges_field:?}")))?;

        let mut base_size = u32::MAX;
        let mut merges = Vec::with_capacity(declared);
        for (n, line) in lines.enumerate() {
            let mut fields = line.split_ascii_whitespace();
            let mut next = || -> Result<u32> {
                fields
                    .next()
                    .and_then(|f| f.parse().ok())
                    .ok_or_else(|| bad(format!("line {}: expected `left right new`", n + 2)))
            };
            let (left, right, new) = (next()?, next()?, next()?);
            if merges.is_empty() {
                base_size = new;
            }
            let expected = base_size + merges.len() as u32;
            if new != expected {
                return Err(bad(format!(
                    "line {}: new id {new} breaks contiguity (expected {expected})",
                    n + 2
                )));
            }
            if left >= new || right >= new {
                return Err(bad(format!(
                    "line {}: merge references id {} not yet minted",
                    n + 2,
                    left.max(right)
                )));
            }
            merges.push((left, right));
        }
        if merges.len() != declared {
            return Err(bad(format!(
                "header declares {declared} merges, file has {}",
                merges.len()
            )));
        }
        Ok(Self {
            base_hash,
            base_size,
            merges,
        })
    }
}

/// Learns `merges` greedy pair merges from a corpus sharing one vocabulary
/// of `base_size` ids.
pub fn bpe_train(
    corpus: &[TokenSequence],
    merges: usize,
    base_size: u32,
) -> Result<BpeModel> {
    let first = corpus.first().ok_or(Error::EmptyCorpus)?;
    let base_hash = first.config_hash;
    for seq in corpus {
        if seq.config_hash != base_hash {
            return Err(Error::MixedVocabularies(base_hash, seq.config_hash));
        }
        check_ids(&seq.ids, base_size)?;
    }
    let mut seqs: Vec<Vec<u32>> = corpus.iter().map(|s| s.ids.clone()).collect();
    let mut learned: Vec<(u32, u32)> = Vec::with_capacity(merges);
    for step in 0..merges {
        let mut counts: HashMap<(u32, u32), u64> = HashMap::new();
        for seq in &seqs {
            for w in seq.windows(2) {
                *counts.entry((w[0], w[1])).or_insert(0) += 1;
            }
        }
        // Deterministic selection regardless of map iteration order.
        let mut best: Option<((u32, u32), u64)> = None;
        for (&pair, &n) in &counts {
            let better = match best {
                None => true,
                Some((bp, bn)) => n > bn || (n == bn && pair < bp),
            };
            if better {
                best = Some((pair, n));
            }
        }
        let Some((pair, n)) = best else { break };
        if n < 2 {
            break;
        }
        let new_id = base_size + step as u32;
        for seq in &mut seqs {
            merge_in_place(seq, pair, new_id);
        }
        learned.push(pair);
    }
    Ok(BpeModel {
        base_hash,
        base_size,
        merges: learned,
    })
}

/// Compresses a sequence by replaying the model's merges in training order.
pub fn bpe_apply(model: &BpeModel, tokens: &TokenSequence) -> Result<TokenSequence> {
    if tokens.config_hash != model.base_hash {
        return Err(Error::MixedVocabularies(model.base_hash, tokens.config_hash));
    }
    check_ids(&tokens.ids, model.base_size)?;
    let mut ids = tokens.ids.clone();
    for (step, &pair) in model.merges.iter().enumerate() {
        merge_in_place(&mut ids, pair, model.base_size + step as u32);
    }
    Ok(TokenSequence {
        ids,
        config_hash: tokens.config_hash,
        true_t: tokens.true_t,
    })
}

/// Expands merged ids back to the base vocabulary. Inverse of
/// [`bpe_apply`].
pub fn bpe_decode(model: &BpeModel, tokens: &TokenSequence) -> Result<TokenSequence> {
    if tokens.config_hash != model.base_hash {
        return Err(Error::MixedVocabularies(model.base_hash, tokens.config_hash));
    }
    let extended = model.extended_size();
    let mut ids = Vec::with_capacity(tokens.ids.len());
    let mut stack = Vec::new();
    for (pos, &id) in tokens.ids.iter().enumerate() {
        if id >= extended {
            return Err(Error::UnknownToken { pos, id });
        }
        stack.push(id);
        while let Some(x) = stack.pop() {
            if x >= model.base_size {
                let (left, right) = model.merges[(x - model.base_size) as usize];
                stack.push(right);
                stack.push(left);
            } else {
                ids.push(x);
            }
        }
    }
    Ok(TokenSequence {
        ids,
        config_hash: tokens.config_hash,
        true_t: tokens.true_t,
    })
}

fn check_ids(ids: &[u32], bound: u32) -> Result<()> {
    for (pos, &id) in ids.iter().enumerate() {
        if id >= bound {
            return Err(Error::UnknownToken { pos, id });
        }
    }
    Ok(())
}

/// One left-to-right pass replacing non-overlapping occurrences of `pair`.
fn merge_in_place(seq: &mut Vec<u32>, pair: (u32, u32), new_id: u32) {
    let mut write = 0usize;
    let mut read = 0usize;
    while read < seq.len() {
        if read + 1 < seq.len() && seq[read] == pair.0 && seq[read + 1] == pair.1 {
            seq[write] = new_id;
            read += 2;
        } else {
            seq[write] = seq[read];
            read += 1;
        }
        write += 1;
    }
    seq.truncate(write);
}
