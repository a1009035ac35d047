//! Reading and writing fingering files in the PIG text layout.
//!
//! Each record is eight tab-separated fields:
//!
//! ```text
//! note_id  onset  offset  spelled_pitch  onset_vel  offset_vel  channel  finger
//! ```
//!
//! Channel 0 is the right hand and channel 1 the left. Left-hand fingers are
//! conventionally written negative (`-3`), and a substitution on a held key
//! is written `a_b`; both are normalized to a single finger in `1..=5`.

mod pitch;

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use pitch::{midi_to_spelled, spelled_to_midi};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Hand {
    Left,
    Right,
}

impl Hand {
    pub const BOTH: [Hand; 2] = [Hand::Left, Hand::Right];

    pub fn channel(self) -> u8 {
        match self {
            Hand::Right => 0,
            Hand::Left => 1,
        }
    }

    pub fn from_channel(channel: u8) -> Option<Hand> {
        match channel {
            0 => Some(Hand::Right),
            1 => Some(Hand::Left),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Hand::Left => "left",
            Hand::Right => "right",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoteEvent {
    pub note_id: u32,
    pub onset: f64,
    pub offset: f64,
    pub midi: u8,
    /// Spelling as it appeared in the source file; written back verbatim.
    pub spelled: String,
    pub onset_velocity: i32,
    pub offset_velocity: i32,
    pub hand: Hand,
    pub finger: u8,
}

impl NoteEvent {
    /// Builds a note with canonical sharp spelling and default velocities.
    pub fn new(note_id: u32, onset: f64, offset: f64, midi: u8, hand: Hand, finger: u8) -> Self {
        NoteEvent {
            note_id,
            onset,
            offset,
            midi,
            spelled: midi_to_spelled(midi),
            onset_velocity: 64,
            offset_velocity: 64,
            hand,
            finger,
        }
    }

    fn order(&self, other: &Self) -> Ordering {
        self.onset
            .total_cmp(&other.onset)
            .then(self.midi.cmp(&other.midi))
    }
}

/// One annotated performance of one score, split by hand.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Piece {
    pub score_id: String,
    pub annotator_id: String,
    pub left: Vec<NoteEvent>,
    pub right: Vec<NoteEvent>,
}

impl Piece {
    pub fn hand(&self, hand: Hand) -> &[NoteEvent] {
        match hand {
            Hand::Left => &self.left,
            Hand::Right => &self.right,
        }
    }

    pub fn hand_mut(&mut self, hand: Hand) -> &mut Vec<NoteEvent> {
        match hand {
            Hand::Left => &mut self.left,
            Hand::Right => &mut self.right,
        }
    }

    pub fn len(&self) -> usize {
        self.left.len() + self.right.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty() && self.right.is_empty()
    }

    pub fn fingers(&self, hand: Hand) -> Vec<u8> {
        self.hand(hand).iter().map(|n| n.finger).collect()
    }

    /// Replaces the finger labels of one hand, keeping every other field.
    pub fn set_fingers(&mut self, hand: Hand, fingers: &[u8]) -> Result<()> {
        let notes = self.hand_mut(hand);
        if notes.len() != fingers.len() {
            return Err(Error::Length {
                expected: notes.len(),
                actual: fingers.len(),
            });
        }
        for (note, &f) in notes.iter_mut().zip(fingers) {
            if !(1..=5).contains(&f) {
                return Err(Error::Label { label: f, k: 5 });
            }
            note.finger = f;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DiagnosticKind {
    /// `a_b` collapsed to `a`.
    Substitution { original: String },
    /// A negative finger on the right-hand channel; the channel wins.
    HandSignMismatch { finger_text: String, channel: u8 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub kind: DiagnosticKind,
}

pub fn parse_pig(text: &str) -> Result<Piece> {
    parse_pig_with_diagnostics(text).map(|(piece, _)| piece)
}

pub fn parse_pig_with_diagnostics(text: &str) -> Result<(Piece, Vec<Diagnostic>)> {
    let mut piece = Piece::default();
    let mut diagnostics = Vec::new();

    for (idx, raw_line) in text.split('\n').enumerate() {
        let line_no = idx + 1;
        let line = raw_line.strip_suffix('\r').unwrap_or(raw_line);
        if line.starts_with("//") || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 8 {
            return Err(Error::parse(
                line_no,
                format!("expected 8 tab-separated fields, found {}", fields.len()),
            ));
        }
        let number = |i: usize, what: &str| -> Result<f64> {
            let v: f64 = fields[i]
                .trim()
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad {what} {:?}", fields[i])))?;
            if !v.is_finite() {
                return Err(Error::parse(line_no, format!("non-finite {what}")));
            }
            Ok(v)
        };
        let integer = |i: usize, what: &str| -> Result<i64> {
            fields[i]
                .trim()
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad {what} {:?}", fields[i])))
        };

        let note_id = u32::try_from(integer(0, "note id")?)
            .map_err(|_| Error::parse(line_no, "note id out of range"))?;
        let onset = number(1, "onset")?;
        let offset = number(2, "offset")?;
        if onset < 0.0 {
            return Err(Error::parse(line_no, "negative onset"));
        }
        if offset < onset {
            return Err(Error::parse(line_no, "offset before onset"));
        }
        let spelled = fields[3].trim();
        let midi = spelled_to_midi(spelled).map_err(|e| Error::parse(line_no, e.to_string()))?;
        let onset_velocity = i32::try_from(integer(4, "onset velocity")?)
            .map_err(|_| Error::parse(line_no, "velocity out of range"))?;
        let offset_velocity = i32::try_from(integer(5, "offset velocity")?)
            .map_err(|_| Error::parse(line_no, "velocity out of range"))?;
        let channel = integer(6, "channel")?;
        let hand = u8::try_from(channel)
            .ok()
            .and_then(Hand::from_channel)
            .ok_or_else(|| Error::parse(line_no, format!("channel {channel} is not 0 or 1")))?;

        let finger_text = fields[7].trim();
        let (finger, negative, substituted) = parse_finger(finger_text)
            .ok_or_else(|| Error::parse(line_no, format!("bad finger {finger_text:?}")))?;
        if substituted {
            diagnostics.push(Diagnostic {
                line: line_no,
                kind: DiagnosticKind::Substitution {
                    original: finger_text.to_string(),
                },
            });
        }
        if negative && hand == Hand::Right {
            diagnostics.push(Diagnostic {
                line: line_no,
                kind: DiagnosticKind::HandSignMismatch {
                    finger_text: finger_text.to_string(),
                    channel: hand.channel(),
                },
            });
        }

        piece.hand_mut(hand).push(NoteEvent {
            note_id,
            onset,
            offset,
            midi,
            spelled: spelled.to_string(),
            onset_velocity,
            offset_velocity,
            hand,
            finger,
        });
    }

    for hand in Hand::BOTH {
        let notes = piece.hand_mut(hand);
        notes.sort_by(NoteEvent::order);
        if let Some(w) = notes
            .windows(2)
            .find(|w| w[0].order(&w[1]) == Ordering::Equal)
        {
            return Err(Error::parse(
                0,
                format!(
                    "{} hand has two notes {} at onset {} (ids {} and {})",
                    hand.name(),
                    w[0].spelled,
                    w[0].onset,
                    w[0].note_id,
                    w[1].note_id
                ),
            ));
        }
    }
    Ok((piece, diagnostics))
}

/// Returns `(finger, first part was negative, was a substitution)`.
fn parse_finger(text: &str) -> Option<(u8, bool, bool)> {
    let mut parts = text.split('_');
    let first = parts.next()?;
    let (finger, negative) = parse_one_finger(first)?;
    let mut substituted = false;
    for part in parts {
        parse_one_finger(part)?;
        substituted = true;
    }
    Some((finger, negative, substituted))
}

fn parse_one_finger(text: &str) -> Option<(u8, bool)> {
    let (negative, digits) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    if digits.len() != 1 {
        return None;
    }
    let f = digits.parse::<u8>().ok()?;
    (1..=5).contains(&f).then_some((f, negative))
}

/// Emits a piece in the same layout `parse_pig` reads, records ordered by note id.
pub fn write_pig(piece: &Piece) -> String {
    let mut notes: Vec<&NoteEvent> = piece.left.iter().chain(&piece.right).collect();
    notes.sort_by(|a, b| {
        a.note_id
            .cmp(&b.note_id)
            .then(a.onset.total_cmp(&b.onset))
            .then(a.midi.cmp(&b.midi))
    });
    let mut out = String::from("//Version: PianoFingeringDataset v1.2\n");
    for n in notes {
        let finger = match n.hand {
            Hand::Right => n.finger.to_string(),
            Hand::Left => format!("-{}", n.finger),
        };
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            n.note_id,
            n.onset,
            n.offset,
            n.spelled,
            n.onset_velocity,
            n.offset_velocity,
            n.hand.channel(),
            finger
        );
    }
    out
}

/// Splits a dataset file name such as `001-2_fingering.txt` into
/// `("001", "2")`. Names without the dash convention keep the stem as the
/// score id and use annotator `"1"`.
pub fn ids_from_file_name(path: &Path) -> (String, String) {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let stem = stem.strip_suffix("_fingering").unwrap_or(&stem);
    match stem.rsplit_once('-') {
        Some((score, annotator)) if !score.is_empty() && !annotator.is_empty() => {
            (score.to_string(), annotator.to_string())
        }
        _ => (stem.to_string(), "1".to_string()),
    }
}

pub fn read_pig_file(path: &Path) -> Result<Piece> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut piece = parse_pig(&text).map_err(|e| match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })?;
    let (score_id, annotator_id) = ids_from_file_name(path);
    piece.score_id = score_id;
    piece.annotator_id = annotator_id;
    Ok(piece)
}
