use std::collections::BTreeMap;

use crate::encoding::compute_pd;
use crate::error::Result;
use crate::metrics::Fingering;
use crate::pig::{Hand, Piece};
use crate::transition::K;

fn most_frequent(counts: &[usize; K]) -> u8 {
    // ties go to the lower finger
    let mut best = 0;
    for f in 1..K {
        if counts[f] > counts[best] {
            best = f;
        }
    }
    best as u8 + 1
}

/// Always the training set's most frequent finger for each hand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MajorityBaseline {
    pub left: u8,
    pub right: u8,
}

impl MajorityBaseline {
    pub fn fit(pieces: &[&Piece]) -> Self {
        let count = |hand| {
            let mut c = [0usize; K];
            for p in pieces {
                for n in p.hand(hand) {
                    c[n.finger as usize - 1] += 1;
                }
            }
            most_frequent(&c)
        };
        MajorityBaseline {
            left: count(Hand::Left),
            right: count(Hand::Right),
        }
    }

    fn finger(&self, hand: Hand) -> u8 {
        match hand {
            Hand::Left => self.left,
            Hand::Right => self.right,
        }
    }

    pub fn predict(&self, piece: &Piece) -> Fingering {
        Fingering {
            left: vec![self.left; piece.left.len()],
            right: vec![self.right; piece.right.len()],
        }
    }
}

/// Most frequent training finger for each pitch-difference token, with no
/// context. Unseen tokens fall back to the majority finger.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenBaseline {
    left: BTreeMap<i32, u8>,
    right: BTreeMap<i32, u8>,
    fallback: MajorityBaseline,
}

impl TokenBaseline {
    pub fn fit(pieces: &[&Piece]) -> Result<Self> {
        let table = |hand| -> Result<BTreeMap<i32, u8>> {
            let mut counts: BTreeMap<i32, [usize; K]> = BTreeMap::new();
            for p in pieces {
                let notes = p.hand(hand);
                if notes.is_empty() {
                    continue;
                }
                for (t, n) in compute_pd(notes)?.iter().zip(notes) {
                    counts.entry(t.d).or_default()[n.finger as usize - 1] += 1;
                }
            }
            Ok(counts.iter().map(|(&d, c)| (d, most_frequent(c))).collect())
        };
        Ok(TokenBaseline {
            left: table(Hand::Left)?,
            right: table(Hand::Right)?,
            fallback: MajorityBaseline::fit(pieces),
        })
    }

    pub fn predict(&self, piece: &Piece) -> Result<Fingering> {
        let mut out = Fingering::default();
        for hand in Hand::BOTH {
            let notes = piece.hand(hand);
            if notes.is_empty() {
                continue;
            }
            let table = match hand {
                Hand::Left => &self.left,
                Hand::Right => &self.right,
            };
            let fingers = compute_pd(notes)?
                .iter()
                .map(|t| *table.get(&t.d).unwrap_or(&self.fallback.finger(hand)))
                .collect();
            match hand {
                Hand::Left => out.left = fingers,
                Hand::Right => out.right = fingers,
            }
        }
        Ok(out)
    }
}
