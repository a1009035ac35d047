//! Spelled pitch names ("C4", "F#3", "Bbb-1") to MIDI numbers, with C4 = 60.

use crate::error::{Error, Result};

const SHARP_NAMES: [&str; 12] = [
    "C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B",
];

/// Parses `Letter Accidental Octave` where the letter is `A`-`G`, the
/// accidental one of `#`, `##`, `b`, `bb` or nothing, and the octave a
/// signed integer.
pub fn spelled_to_midi(name: &str) -> Result<u8> {
    let err = |reason| Error::Pitch {
        token: name.to_string(),
        reason,
    };
    let mut chars = name.char_indices().peekable();
    let (_, letter) = chars.next().ok_or_else(|| err("empty pitch"))?;
    let pitch_class: i32 = match letter {
        'C' => 0,
        'D' => 2,
        'E' => 4,
        'F' => 5,
        'G' => 7,
        'A' => 9,
        'B' => 11,
        _ => return Err(err("letter must be A-G")),
    };

    let mut shift = 0i32;
    let mut octave_start = name.len();
    let mut accidental: Option<char> = None;
    while let Some(&(idx, c)) = chars.peek() {
        match c {
            '#' | 'b' => {
                if accidental.is_some_and(|a| a != c) {
                    return Err(err("mixed accidentals"));
                }
                accidental = Some(c);
                shift += if c == '#' { 1 } else { -1 };
                if shift.abs() > 2 {
                    return Err(err("at most two accidentals"));
                }
                chars.next();
            }
            _ => {
                octave_start = idx;
                break;
            }
        }
    }

    let octave_text = &name[octave_start..];
    let digits = octave_text.strip_prefix('-').unwrap_or(octave_text);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(err("octave must be a signed integer"));
    }
    let octave: i32 = octave_text
        .parse()
        .map_err(|_| err("octave out of range"))?;

    let midi = 12i64 * (octave as i64 + 1) + (pitch_class + shift) as i64;
    if !(0..=127).contains(&midi) {
        return Err(err("outside MIDI range 0-127"));
    }
    Ok(midi as u8)
}

/// Canonical sharp spelling of a MIDI number (60 -> "C4").
pub fn midi_to_spelled(midi: u8) -> String {
    let octave = midi as i32 / 12 - 1;
    format!("{}{}", SHARP_NAMES[midi as usize % 12], octave)
}
