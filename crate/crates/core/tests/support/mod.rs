//! Deterministic rule-fingered corpus used when the real dataset is absent.
//!
//! Each score is a random melodic line with occasional chords. Fingers
//! follow a simple positional rule: move by scale steps, pass the thumb
//! under when running out of fingers going outward, cross over the thumb
//! going inward. The finger therefore depends on the interval history, not
//! only on the current interval. The left hand is the right-hand line
//! mirrored in pitch, which mirrors the kinematics too.

#![allow(dead_code)]

use std::path::{Path, PathBuf};

use piano_fingering::harness::Dataset;
use piano_fingering::pig::{midi_to_spelled, Hand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Variations between annotators of the same score.
#[derive(Clone, Copy)]
struct Style {
    cross_to: u8,
    repeat_changes: bool,
}

const STYLES: [Style; 2] = [
    Style {
        cross_to: 3,
        repeat_changes: false,
    },
    Style {
        cross_to: 4,
        repeat_changes: true,
    },
];

/// One event in "outward" orientation: positive steps move away from the
/// thumb.
enum Ev {
    Single(i32),
    Chord(i32, Vec<i32>),
}

fn sample_events(rng: &mut impl Rng, len: usize) -> Vec<Ev> {
    let mut events = Vec::new();
    let mut notes = 0;
    while notes < len {
        let r: f64 = rng.gen();
        if r < 0.12 {
            let shape = match rng.gen_range(0..4) {
                0 => vec![4, 3],
                1 => vec![3, 4],
                2 => vec![3],
                _ => vec![4],
            };
            notes += shape.len() + 1;
            events.push(Ev::Chord(rng.gen_range(-5..=5), shape));
        } else if r < 0.16 {
            let leap = rng.gen_range(12..=16);
            events.push(Ev::Single(if rng.gen() { leap } else { -leap }));
            notes += 1;
        } else if r < 0.22 {
            events.push(Ev::Single(0));
            notes += 1;
        } else {
            let step = rng.gen_range(1..=4);
            events.push(Ev::Single(if rng.gen() { step } else { -step }));
            notes += 1;
        }
    }
    events
}

/// Largest distance from the starting pitch.
const RANGE: i32 = 14;

fn scale_steps(d: i32) -> i32 {
    (d.abs() + 1) / 2
}

/// Fingers a line of events; returns (offset from start pitch, finger) per
/// onset group.
fn finger_line(events: &[Ev], style: Style) -> Vec<Vec<(i32, u8)>> {
    let mut out = Vec::new();
    let first_up = events
        .iter()
        .find_map(|e| match e {
            Ev::Single(d) if *d != 0 => Some(*d > 0),
            _ => None,
        })
        .unwrap_or(true);
    let mut f: u8 = if first_up { 1 } else { 5 };
    let mut pitch = 0;
    out.push(vec![(0, f)]);
    for ev in events {
        match ev {
            Ev::Single(d) => {
                let mut d = *d;
                if d.abs() >= 12 {
                    // leaps head back toward the middle
                    d = if pitch > 0 { -d.abs() } else { d.abs() };
                }
                // finger 5 cannot go further out without moving the hand
                if f == 5 && (1..12).contains(&d) {
                    d = -d;
                }
                if (pitch + d).abs() > RANGE {
                    d = -d;
                }
                if f == 5 && (1..12).contains(&d) {
                    d = 0;
                }
                f = if d == 0 {
                    if style.repeat_changes && f < 5 {
                        f + 1
                    } else {
                        f
                    }
                } else if d.abs() >= 12 {
                    if d > 0 {
                        2
                    } else {
                        4
                    }
                } else if d > 0 {
                    let nf = f as i32 + scale_steps(d);
                    if nf > 5 {
                        1
                    } else {
                        nf as u8
                    }
                } else {
                    let nf = f as i32 - scale_steps(d);
                    if nf >= 1 {
                        nf as u8
                    } else if f == 1 {
                        style.cross_to
                    } else {
                        1
                    }
                };
                pitch += d;
                out.push(vec![(pitch, f)]);
            }
            Ev::Chord(entry, shape) => {
                let span: i32 = shape.iter().sum();
                let entry = if pitch > 0 {
                    -entry.abs() - span
                } else {
                    entry.abs()
                };
                let mut p = pitch + entry;
                let fingers: &[u8] = match shape.as_slice() {
                    [4, 3] | [3, 4] => &[1, 3, 5],
                    [3] => &[1, 3],
                    _ => &[2, 4],
                };
                let mut group = vec![(p, fingers[0])];
                for (&s, &fg) in shape.iter().zip(&fingers[1..]) {
                    p += s;
                    group.push((p, fg));
                }
                pitch = p;
                f = *fingers.last().unwrap();
                out.push(group);
            }
        }
    }
    out
}

fn render(groups_r: &[Vec<(i32, u8)>], groups_l: &[Vec<(i32, u8)>], base_r: i32, base_l: i32) -> String {
    let mut lines = Vec::new();
    for (hand, groups) in [(Hand::Right, groups_r), (Hand::Left, groups_l)] {
        for (k, g) in groups.iter().enumerate() {
            let onset = k as f64 * 0.25 + if hand == Hand::Left { 0.125 } else { 0.0 };
            for &(off, f) in g {
                let midi = match hand {
                    Hand::Right => base_r + off,
                    Hand::Left => base_l - off,
                };
                assert!((21..=108).contains(&midi));
                let midi = midi as u8;
                let finger = match hand {
                    Hand::Right => f as i32,
                    Hand::Left => -(f as i32),
                };
                lines.push((onset, midi, hand.channel(), finger));
            }
        }
    }
    lines.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut text = String::from("//Version: PianoFingeringDataset v1.2\n");
    for (i, (onset, midi, ch, finger)) in lines.into_iter().enumerate() {
        text.push_str(&format!(
            "{i}\t{onset:.6}\t{:.6}\t{}\t64\t80\t{ch}\t{finger}\n",
            onset + 0.2,
            midi_to_spelled(midi)
        ));
    }
    text
}

/// Writes `scores` scores to `dir`. Every third score has a second
/// annotator. Returns the file paths.
pub fn write_proxy_corpus(dir: &Path, scores: usize, seed: u64) -> Vec<PathBuf> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut paths = Vec::new();
    for s in 1..=scores {
        let len = rng.gen_range(90..=140);
        let right = sample_events(&mut rng, len);
        let left = sample_events(&mut rng, len);
        let base_r = rng.gen_range(66..=74);
        let base_l = rng.gen_range(46..=54);
        let annotators = if s % 3 == 0 { 2 } else { 1 };
        for (a, style) in STYLES.iter().take(annotators).enumerate() {
            let text = render(
                &finger_line(&right, *style),
                &finger_line(&left, *style),
                base_r,
                base_l,
            );
            let path = dir.join(format!("{s:03}-{}_fingering.txt", a + 1));
            std::fs::write(&path, text).unwrap();
            paths.push(path);
        }
    }
    paths
}

/// Real corpus when `PIG_DATASET_DIR` is set, otherwise the proxy corpus in
/// a fresh temporary directory (kept alive by the returned guard).
pub struct Corpus {
    pub dataset: Dataset,
    pub is_proxy: bool,
    _dir: Option<tempfile::TempDir>,
}

pub fn real_corpus() -> Option<Dataset> {
    let dir = std::env::var_os("PIG_DATASET_DIR")?;
    Some(Dataset::load_dir(Path::new(&dir)).expect("PIG_DATASET_DIR is readable"))
}

pub fn corpus(scores: usize, seed: u64) -> Corpus {
    if let Some(dataset) = real_corpus() {
        return Corpus {
            dataset,
            is_proxy: false,
            _dir: None,
        };
    }
    let dir = tempfile::tempdir().unwrap();
    write_proxy_corpus(dir.path(), scores, seed);
    Corpus {
        dataset: Dataset::load_dir(dir.path()).unwrap(),
        is_proxy: true,
        _dir: Some(dir),
    }
}
