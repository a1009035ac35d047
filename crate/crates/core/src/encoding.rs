//! Pitch-difference tokens and the input vocabulary.
//!
//! A hand's notes are flattened in time order (chords low to high) and each
//! note becomes one coded integer:
//!
//! * the first note of a sequence codes as `n * 100`;
//! * a step of less than an octave codes as `interval + n * 100`;
//! * a step of an octave or more codes as `+80` or `-80`.
//!
//! `n` is the number of *other* same-hand notes sharing the note's onset, so
//! single tones have `n = 0` and every note of a triad has `n = 2`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pig::NoteEvent;

/// Coded value used for steps of an octave or more.
pub const LEAP_CODE: i32 = 80;
/// Multiplier that separates chord sizes.
pub const CHORD_STRIDE: i32 = 100;
/// Interval (in semitones) at which a step becomes a leap.
pub const OCTAVE: i32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PdToken {
    pub d: i32,
    pub raw_diff: i32,
    pub n: u32,
    pub is_leap: bool,
    pub direction: i8,
}

impl PdToken {
    pub fn is_single(&self) -> bool {
        self.n == 0
    }
}

/// Encodes one hand's notes, which must already be in (onset, pitch) order.
pub fn compute_pd(notes: &[NoteEvent]) -> Result<Vec<PdToken>> {
    if notes.is_empty() {
        return Err(Error::EmptySequence);
    }
    let sim = simultaneity_counts(notes);
    let mut out = Vec::with_capacity(notes.len());
    for (t, note) in notes.iter().enumerate() {
        let n = sim[t];
        let token = if t == 0 {
            PdToken {
                d: n as i32 * CHORD_STRIDE,
                raw_diff: 0,
                n,
                is_leap: false,
                direction: 0,
            }
        } else {
            let raw = note.midi as i32 - notes[t - 1].midi as i32;
            let direction = raw.signum() as i8;
            if raw.abs() >= OCTAVE {
                PdToken {
                    d: LEAP_CODE * raw.signum(),
                    raw_diff: raw,
                    n,
                    is_leap: true,
                    direction,
                }
            } else {
                PdToken {
                    d: raw + n as i32 * CHORD_STRIDE,
                    raw_diff: raw,
                    n,
                    is_leap: false,
                    direction,
                }
            }
        };
        out.push(token);
    }
    Ok(out)
}

/// For each note, how many other notes share its onset exactly.
fn simultaneity_counts(notes: &[NoteEvent]) -> Vec<u32> {
    let mut counts = vec![0u32; notes.len()];
    let mut start = 0;
    while start < notes.len() {
        let mut end = start + 1;
        while end < notes.len() && notes[end].onset == notes[start].onset {
            end += 1;
        }
        for c in &mut counts[start..end] {
            *c = (end - start - 1) as u32;
        }
        start = end;
    }
    counts
}

/// Groups consecutive notes that share an onset. Returns half-open ranges.
pub fn onset_groups(notes: &[NoteEvent]) -> Vec<std::ops::Range<usize>> {
    let mut groups = Vec::new();
    let mut start = 0;
    while start < notes.len() {
        let mut end = start + 1;
        while end < notes.len() && notes[end].onset == notes[start].onset {
            end += 1;
        }
        groups.push(start..end);
        start = end;
    }
    groups
}

/// Which integer symbol a note feeds to the tagger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputMode {
    /// Coded pitch difference.
    #[default]
    PitchDifference,
    /// The bare MIDI number, with no timing or chord information.
    RawNote,
}

impl InputMode {
    pub fn symbols(self, notes: &[NoteEvent], tokens: &[PdToken]) -> Vec<i32> {
        match self {
            InputMode::PitchDifference => tokens.iter().map(|t| t.d).collect(),
            InputMode::RawNote => notes.iter().map(|n| n.midi as i32).collect(),
        }
    }
}

/// Distinct pitch sets of the onset groups (single notes and chords) of one
/// hand across a corpus.
pub fn note_combinations<'a>(hands: impl IntoIterator<Item = &'a [NoteEvent]>) -> BTreeSet<Vec<u8>> {
    let mut set = BTreeSet::new();
    for notes in hands {
        for g in onset_groups(notes) {
            set.insert(notes[g].iter().map(|n| n.midi).collect());
        }
    }
    set
}

/// Ordered token set plus a reserved unknown slot at the end.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<i32>", into = "Vec<i32>")]
pub struct PdVocabulary {
    tokens: Vec<i32>,
    index: BTreeMap<i32, usize>,
}

impl From<Vec<i32>> for PdVocabulary {
    fn from(tokens: Vec<i32>) -> Self {
        PdVocabulary::from_tokens(tokens)
    }
}

impl From<PdVocabulary> for Vec<i32> {
    fn from(v: PdVocabulary) -> Self {
        v.tokens
    }
}

impl PdVocabulary {
    pub fn build<'a>(sequences: impl IntoIterator<Item = &'a [i32]>) -> Self {
        let set: BTreeSet<i32> = sequences.into_iter().flatten().copied().collect();
        Self::from_tokens(set.into_iter().collect())
    }

    /// Tokens must be strictly ascending.
    pub fn from_tokens(tokens: Vec<i32>) -> Self {
        let index = tokens.iter().enumerate().map(|(i, &d)| (d, i)).collect();
        PdVocabulary { tokens, index }
    }

    pub fn tokens(&self) -> &[i32] {
        &self.tokens
    }

    pub fn unknown_id(&self) -> usize {
        self.tokens.len()
    }

    /// Input dimension, including the unknown slot.
    pub fn dim(&self) -> usize {
        self.tokens.len() + 1
    }

    pub fn id(&self, d: i32) -> usize {
        self.index.get(&d).copied().unwrap_or(self.unknown_id())
    }

    pub fn ids(&self, symbols: &[i32]) -> Vec<usize> {
        symbols.iter().map(|&d| self.id(d)).collect()
    }

    pub fn encode(&self, d: i32) -> Vec<f64> {
        let mut v = vec![0.0; self.dim()];
        v[self.id(d)] = 1.0;
        v
    }

    /// Two columns, `d<TAB>id`, one line per token; the unknown slot is
    /// written as `UNK`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, d) in self.tokens.iter().enumerate() {
            let _ = writeln!(out, "{d}\t{i}");
        }
        let _ = writeln!(out, "UNK\t{}", self.unknown_id());
        out
    }

    pub fn parse_dump(text: &str) -> Result<Self> {
        let mut tokens = Vec::new();
        let mut saw_unknown = false;
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            if saw_unknown {
                return Err(Error::parse(line_no, "entry after UNK"));
            }
            let (left, right) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(line_no, "expected two tab-separated columns"))?;
            let id: usize = right
                .trim()
                .parse()
                .map_err(|_| Error::parse(line_no, "bad id"))?;
            if id != tokens.len() {
                return Err(Error::parse(line_no, "ids must be dense and in order"));
            }
            if left.trim() == "UNK" {
                saw_unknown = true;
                continue;
            }
            let d: i32 = left
                .trim()
                .parse()
                .map_err(|_| Error::parse(line_no, "bad token"))?;
            if tokens.last().is_some_and(|&prev| prev >= d) {
                return Err(Error::parse(line_no, "tokens must be strictly ascending"));
            }
            tokens.push(d);
        }
        if !saw_unknown {
            return Err(Error::parse(0, "missing UNK entry"));
        }
        Ok(Self::from_tokens(tokens))
    }
}
