//! Synthetic training sequences sampled from corpus fingering statistics.
//!
//! A hand's notes are grouped into events (a chord is one event). For every
//! pair of consecutive events the corpus gives a count for
//! `(previous finger, next finger, next event type)` and, inside that cell,
//! the exact pitch-difference pattern that was played. Patterns holding at
//! most the frequency threshold of their cell are dropped, and finger pairs
//! that are not playable for a single-tone step are never sampled.
//!
//! The generator walks this chain: event type, then direction for single
//! tones, then the next finger, then a pattern, until the target length.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::{compute_pd, onset_groups, PdToken, CHORD_STRIDE, LEAP_CODE};
use crate::error::{Error, Result};
use crate::pig::{Hand, NoteEvent, Piece};
use crate::prior::playable;
use crate::transition::{StepKind, K};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EventType {
    SingleUp,
    SingleDown,
    Harmony,
    Triad,
    Seventh,
}

impl EventType {
    pub const ALL: [EventType; 5] = [
        EventType::SingleUp,
        EventType::SingleDown,
        EventType::Harmony,
        EventType::Triad,
        EventType::Seventh,
    ];

    fn of_group(size: usize, entry_raw_diff: i32) -> EventType {
        match size {
            1 if entry_raw_diff < 0 => EventType::SingleDown,
            // repeated notes count as non-falling
            1 => EventType::SingleUp,
            2 => EventType::Harmony,
            3 => EventType::Triad,
            _ => EventType::Seventh,
        }
    }

    fn step_kind(self) -> Option<StepKind> {
        match self {
            EventType::SingleUp => Some(StepKind::SingleUp),
            EventType::SingleDown => Some(StepKind::SingleDown),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            EventType::SingleUp => "single-up",
            EventType::SingleDown => "single-down",
            EventType::Harmony => "harmony",
            EventType::Triad => "triad",
            EventType::Seventh => "seventh",
        }
    }
}

/// The coded pitch differences and fingers of one event, low note first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EventPattern {
    pub d: Vec<i32>,
    pub fingers: Vec<u8>,
}

pub type CellKey = (u8, u8, EventType);

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct HandStats {
    /// Distribution of event fingers, index 0 = finger 1.
    pub finger_freq: [f64; K],
    /// Observations per cell before thresholding and masking.
    pub observed: BTreeMap<CellKey, usize>,
    /// Sampling mass per cell: kept patterns only, forbidden cells absent.
    pub transition_counts: BTreeMap<CellKey, usize>,
    /// Kept patterns per cell with their conditional probabilities.
    pub pd_by_transition: BTreeMap<CellKey, Vec<(EventPattern, f64)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentStats {
    pub threshold: f64,
    pub left: HandStats,
    pub right: HandStats,
}

impl AugmentStats {
    pub fn hand(&self, hand: Hand) -> &HandStats {
        match hand {
            Hand::Left => &self.left,
            Hand::Right => &self.right,
        }
    }
}

/// Finger that stands for a chord: the thumb side of the hand.
fn anchor_finger(hand: Hand, fingers: &[u8]) -> u8 {
    match hand {
        Hand::Right => fingers[0],
        Hand::Left => fingers[fingers.len() - 1],
    }
}

struct Event {
    ty: EventType,
    entry_is_leap: bool,
    anchor: u8,
    pattern: EventPattern,
}

fn events(hand: Hand, notes: &[NoteEvent], tokens: &[PdToken]) -> Vec<Event> {
    onset_groups(notes)
        .into_iter()
        .map(|g| {
            let fingers: Vec<u8> = notes[g.clone()].iter().map(|n| n.finger).collect();
            let entry = &tokens[g.start];
            Event {
                ty: EventType::of_group(g.len(), entry.raw_diff),
                entry_is_leap: entry.is_leap,
                anchor: anchor_finger(hand, &fingers),
                pattern: EventPattern {
                    d: tokens[g].iter().map(|t| t.d).collect(),
                    fingers,
                },
            }
        })
        .collect()
}

/// Gathers per-hand statistics. Transitions whose step is a leap are not
/// counted, since their fingering depends on where the hand lands.
pub fn collect_stats<'a>(
    corpus: impl IntoIterator<Item = &'a Piece>,
    threshold: f64,
) -> Result<AugmentStats> {
    let corpus: Vec<&Piece> = corpus.into_iter().collect();
    if corpus.is_empty() {
        return Err(Error::EmptySequence);
    }
    let mut out = AugmentStats {
        threshold,
        left: HandStats::default(),
        right: HandStats::default(),
    };
    for hand in Hand::BOTH {
        let mut finger_counts = [0usize; K];
        let mut raw: BTreeMap<CellKey, BTreeMap<EventPattern, usize>> = BTreeMap::new();
        for piece in &corpus {
            let notes = piece.hand(hand);
            if notes.is_empty() {
                continue;
            }
            let tokens = compute_pd(notes)?;
            let evs = events(hand, notes, &tokens);
            for e in &evs {
                finger_counts[e.anchor as usize - 1] += 1;
            }
            for pair in evs.windows(2) {
                let (prev, next) = (&pair[0], &pair[1]);
                if next.entry_is_leap {
                    continue;
                }
                *raw.entry((prev.anchor, next.anchor, next.ty))
                    .or_default()
                    .entry(next.pattern.clone())
                    .or_default() += 1;
            }
        }

        let stats = match hand {
            Hand::Left => &mut out.left,
            Hand::Right => &mut out.right,
        };
        let total: usize = finger_counts.iter().sum();
        if total > 0 {
            for (f, c) in stats.finger_freq.iter_mut().zip(finger_counts) {
                *f = c as f64 / total as f64;
            }
        }
        for (key, patterns) in raw {
            let cell_total: usize = patterns.values().sum();
            stats.observed.insert(key, cell_total);
            let (f_prev, f_next, ty) = key;
            if let Some(kind) = ty.step_kind() {
                if !playable(hand, kind, f_prev, f_next) {
                    continue;
                }
            }
            let kept: Vec<(EventPattern, usize)> = patterns
                .into_iter()
                .filter(|(_, c)| *c as f64 / cell_total as f64 > threshold)
                .collect();
            let kept_total: usize = kept.iter().map(|(_, c)| c).sum();
            if kept_total == 0 {
                continue;
            }
            stats.transition_counts.insert(key, kept_total);
            stats.pd_by_transition.insert(
                key,
                kept.into_iter()
                    .map(|(p, c)| (p, c as f64 / kept_total as f64))
                    .collect(),
            );
        }
    }
    Ok(out)
}

impl HandStats {
    /// Marginal next-finger distribution of the sampling chain, rows = previous finger.
    pub fn finger_chain(&self) -> [[f64; K]; K] {
        let mut m = [[0.0; K]; K];
        for (&(a, b, _), &c) in &self.transition_counts {
            m[a as usize - 1][b as usize - 1] += c as f64;
        }
        for row in &mut m {
            let s: f64 = row.iter().sum();
            if s > 0.0 {
                row.iter_mut().for_each(|v| *v /= s);
            }
        }
        m
    }

    /// Long-run finger distribution of the sampling chain (power iteration
    /// from `finger_freq`).
    pub fn stationary(&self) -> [f64; K] {
        let chain = self.finger_chain();
        let mut p = self.finger_freq;
        for _ in 0..10_000 {
            let mut next = [0.0; K];
            for i in 0..K {
                for j in 0..K {
                    next[j] += p[i] * chain[i][j];
                }
            }
            let s: f64 = next.iter().sum();
            if s == 0.0 {
                break;
            }
            next.iter_mut().for_each(|v| *v /= s);
            let delta: f64 = next.iter().zip(&p).map(|(a, b)| (a - b).abs()).sum();
            p = next;
            if delta < 1e-14 {
                break;
            }
        }
        p
    }
}

impl AugmentStats {
    /// Human-readable dump of both hands.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# threshold {}", self.threshold);
        for hand in Hand::BOTH {
            let s = self.hand(hand);
            let _ = writeln!(out, "[{}]", hand.name());
            let _ = writeln!(out, "finger_freq {:?}", s.finger_freq);
            for (&(a, b, ty), patterns) in &s.pd_by_transition {
                let _ = write!(
                    out,
                    "{a} -> {b} {:<11} n={:<5}",
                    ty.name(),
                    s.transition_counts[&(a, b, ty)]
                );
                for (p, prob) in patterns {
                    let _ = write!(out, " {:?}@{:?}:{:.3}", p.d, p.fingers, prob);
                }
                out.push('\n');
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerateConfig {
    pub count: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub seed: u64,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        GenerateConfig {
            count: 50,
            min_len: 150,
            max_len: 300,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedSequence {
    pub hand: Hand,
    pub tokens: Vec<PdToken>,
    pub fingers: Vec<u8>,
    pub piece: Piece,
}

const LOWEST_KEY: i32 = 21;
const HIGHEST_KEY: i32 = 108;
const PLACEMENT_ATTEMPTS: usize = 64;

fn start_pitch(hand: Hand) -> i32 {
    match hand {
        Hand::Right => 67,
        Hand::Left => 48,
    }
}

/// Pitches a pattern lands on after `last`.
fn pattern_pitches(pattern: &EventPattern, last: i32) -> Vec<i32> {
    let n = pattern.d.len() as i32 - 1;
    let mut prev = last;
    pattern
        .d
        .iter()
        .map(|&d| {
            let raw = if d.abs() == LEAP_CODE && n == 0 || d == LEAP_CODE && n > 0 {
                12 * d.signum()
            } else {
                d - n * CHORD_STRIDE
            };
            prev += raw;
            prev
        })
        .collect()
}

fn sample_index(weights: &[f64], rng: &mut impl Rng) -> Option<usize> {
    WeightedIndex::new(weights).ok().map(|w| w.sample(rng))
}

/// `count` sequences per hand.
pub fn generate(stats: &AugmentStats, cfg: &GenerateConfig) -> Result<Vec<AugmentedSequence>> {
    if cfg.min_len == 0 || cfg.min_len > cfg.max_len {
        return Err(Error::Config(format!(
            "bad length range [{}, {}]",
            cfg.min_len, cfg.max_len
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::with_capacity(2 * cfg.count);
    for hand in Hand::BOTH {
        for i in 0..cfg.count {
            let target = rng.gen_range(cfg.min_len..=cfg.max_len);
            let seq = generate_one(stats.hand(hand), hand, target, cfg.max_len, &mut rng)?;
            let piece = render_piece(hand, &format!("aug-{}-{:03}", hand.name(), i), &seq);
            let notes = piece.hand(hand);
            let tokens = compute_pd(notes)?;
            out.push(AugmentedSequence {
                hand,
                fingers: notes.iter().map(|n| n.finger).collect(),
                tokens,
                piece,
            });
        }
    }
    Ok(out)
}

/// Sampled events as (pitches, fingers) per event.
type Walk = Vec<(Vec<i32>, Vec<u8>)>;

fn generate_one(
    stats: &HandStats,
    hand: Hand,
    target: usize,
    max_len: usize,
    rng: &mut impl Rng,
) -> Result<Walk> {
    let mut finger = sample_index(&stats.finger_freq, rng)
        .ok_or_else(|| Error::DeadEnd(format!("{} hand has no finger statistics", hand.name())))?
        as u8
        + 1;
    let mut last = start_pitch(hand);
    let mut walk: Walk = vec![(vec![last], vec![finger])];
    let mut len = 1;

    'outer: while len < target {
        let kinds = [
            None,
            Some(EventType::Harmony),
            Some(EventType::Triad),
            Some(EventType::Seventh),
        ];
        let mass = |ty: EventType| -> f64 {
            (1..=K as u8)
                .map(|b| *stats.transition_counts.get(&(finger, b, ty)).unwrap_or(&0) as f64)
                .sum()
        };
        let kind_weights: Vec<f64> = kinds
            .iter()
            .map(|k| match k {
                None => mass(EventType::SingleUp) + mass(EventType::SingleDown),
                Some(ty) => mass(*ty),
            })
            .collect();
        if kind_weights.iter().all(|&w| w == 0.0) {
            return Err(Error::DeadEnd(format!(
                "{} hand finger {finger} has no outgoing transitions",
                hand.name()
            )));
        }

        let mut overflowed = false;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let ty = match kinds[sample_index(&kind_weights, rng).expect("non-zero mass")] {
                Some(ty) => ty,
                None => {
                    let dirs = [EventType::SingleUp, EventType::SingleDown];
                    let w: Vec<f64> = dirs.iter().map(|&t| mass(t)).collect();
                    dirs[sample_index(&w, rng).expect("non-zero mass")]
                }
            };
            let next_w: Vec<f64> = (1..=K as u8)
                .map(|b| *stats.transition_counts.get(&(finger, b, ty)).unwrap_or(&0) as f64)
                .collect();
            let next = sample_index(&next_w, rng).expect("non-zero mass") as u8 + 1;
            let patterns = &stats.pd_by_transition[&(finger, next, ty)];
            let pw: Vec<f64> = patterns.iter().map(|(_, p)| *p).collect();
            let pattern = &patterns[sample_index(&pw, rng).expect("non-empty cell")].0;

            // a chord that would overshoot the cap is resampled
            if len + pattern.d.len() > max_len {
                overflowed = true;
                continue;
            }
            let pitches = pattern_pitches(pattern, last);
            if pitches.iter().any(|p| !(LOWEST_KEY..=HIGHEST_KEY).contains(p)) {
                continue;
            }
            last = *pitches.last().expect("patterns are non-empty");
            len += pitches.len();
            walk.push((pitches, pattern.fingers.clone()));
            finger = next;
            continue 'outer;
        }
        if overflowed {
            break;
        }
        return Err(Error::DeadEnd(format!(
            "{} hand could not stay on the keyboard near pitch {last}",
            hand.name()
        )));
    }
    Ok(walk)
}

fn render_piece(hand: Hand, score_id: &str, walk: &Walk) -> Piece {
    let mut piece = Piece {
        score_id: score_id.to_string(),
        annotator_id: "1".to_string(),
        ..Default::default()
    };
    let notes = piece.hand_mut(hand);
    for (k, (pitches, fingers)) in walk.iter().enumerate() {
        let onset = k as f64 * 0.25;
        for (&p, &f) in pitches.iter().zip(fingers) {
            let id = notes.len() as u32;
            notes.push(NoteEvent::new(id, onset, onset + 0.25, p as u8, hand, f));
        }
    }
    piece
}
