//! Hard kinematic feasibility of finger transitions, used at decode time.
//!
//! For a step between two single tones less than an octave apart, a finger
//! crossing whose finger product exceeds a threshold cannot be played
//! without moving the hand. The right hand uses threshold 4.5; the left hand
//! uses 5.5, which lets the 1/5 crossing through.
//!
//! The reference grid below covers the right hand descending / left hand
//! ascending case; the other two cases are its transpose.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::pig::Hand;
use crate::tensor::{argmax, softmax};
use crate::transition::{transition_scores, StepKind, TransitionMatrices, K};

/// `REFERENCE_GRID[prev - 1][next - 1]`: right hand descending and left hand
/// ascending, without hand movement.
pub const REFERENCE_GRID: [[bool; 5]; 5] = [
    [true, true, true, true, false],
    [true, true, false, false, false],
    [true, true, true, false, false],
    [true, true, true, true, false],
    [true, true, true, true, true],
];

pub const RIGHT_THRESHOLD: f64 = 4.5;
pub const LEFT_THRESHOLD: f64 = 5.5;
/// The playability index flags with this threshold for both hands.
pub const PSI_THRESHOLD: f64 = 4.5;

/// True when `step` is a within-octave single-tone step and the finger
/// movement is a crossing for `hand`.
fn is_crossing(hand: Hand, step: StepKind, f_prev: u8, f_next: u8) -> bool {
    let dir = step.direction();
    if dir == 0 {
        return false;
    }
    let movement = dir * (f_next as i32 - f_prev as i32);
    match hand {
        Hand::Right => movement < 0,
        Hand::Left => movement > 0,
    }
}

/// The decision function: 1 when the transition is allowed, 0 when pruned.
pub fn decision_t(hand: Hand, step: StepKind, f_prev: u8, f_next: u8) -> u8 {
    let threshold = match hand {
        Hand::Right => RIGHT_THRESHOLD,
        Hand::Left => LEFT_THRESHOLD,
    };
    if is_crossing(hand, step, f_prev, f_next) && (f_prev as f64 * f_next as f64) > threshold {
        0
    } else {
        1
    }
}

pub fn allowed(hand: Hand, step: StepKind, f_prev: u8, f_next: u8) -> bool {
    decision_t(hand, step, f_prev, f_next) == 1
}

/// Allowed by the decision function and not flagged by the playability
/// index. The two differ only on the left-hand 1/5 crossing.
pub fn playable(hand: Hand, step: StepKind, f_prev: u8, f_next: u8) -> bool {
    allowed(hand, step, f_prev, f_next) && psi(hand, step, f_prev, f_next) == 0
}

/// The playability flag: 1 for a within-octave single-tone crossing whose
/// finger product exceeds 4.5, for either hand.
pub fn psi(hand: Hand, step: StepKind, f_prev: u8, f_next: u8) -> u8 {
    u8::from(
        is_crossing(hand, step, f_prev, f_next) && (f_prev as f64 * f_next as f64) > PSI_THRESHOLD,
    )
}

/// Expected feasibility grid for one hand and direction, built from the
/// reference grid by transposition. The left hand additionally admits the
/// 1/5 crossing (finger product 5 is under its threshold).
pub fn literal_table(hand: Hand, direction: i32) -> [[bool; 5]; 5] {
    let base_orientation = matches!(
        (hand, direction),
        (Hand::Right, -1) | (Hand::Left, 1)
    );
    let mut grid = [[true; 5]; 5];
    for (i, row) in grid.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = if base_orientation {
                REFERENCE_GRID[i][j]
            } else {
                REFERENCE_GRID[j][i]
            };
        }
    }
    if hand == Hand::Left {
        let (a, b) = if base_orientation { (0, 4) } else { (4, 0) };
        grid[a][b] = true;
    }
    grid
}

/// The closed-form decision function tabulated over all finger pairs.
pub fn closed_form_table(hand: Hand, direction: i32) -> [[bool; 5]; 5] {
    let step = if direction > 0 {
        StepKind::SingleUp
    } else {
        StepKind::SingleDown
    };
    let mut grid = [[true; 5]; 5];
    for (i, row) in grid.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = allowed(hand, step, i as u8 + 1, j as u8 + 1);
        }
    }
    grid
}

/// The four (hand, direction) cases, in display order.
pub const CASES: [(Hand, i32); 4] = [
    (Hand::Right, -1),
    (Hand::Right, 1),
    (Hand::Left, 1),
    (Hand::Left, -1),
];

/// One disagreement between the closed form and the literal grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableMismatch {
    pub hand: Hand,
    pub direction: i32,
    pub f_prev: u8,
    pub f_next: u8,
}

/// Compares closed form and literal grid on all 100 cases.
pub fn check_tables() -> Vec<TableMismatch> {
    let mut out = Vec::new();
    for (hand, direction) in CASES {
        let lit = literal_table(hand, direction);
        let closed = closed_form_table(hand, direction);
        for i in 0..5 {
            for j in 0..5 {
                if lit[i][j] != closed[i][j] {
                    out.push(TableMismatch {
                        hand,
                        direction,
                        f_prev: i as u8 + 1,
                        f_next: j as u8 + 1,
                    });
                }
            }
        }
    }
    out
}

/// Renders the four closed-form tables with check marks.
pub fn render_tables() -> String {
    let mut out = String::new();
    for (hand, direction) in CASES {
        let name = if direction > 0 { "ascending" } else { "descending" };
        let grid = closed_form_table(hand, direction);
        let _ = writeln!(out, "{} hand, {name}", hand.name());
        let _ = writeln!(out, "prev\\next  1  2  3  4  5");
        for (i, row) in grid.iter().enumerate() {
            let _ = write!(out, "{:>9}", i + 1);
            for &ok in row {
                let _ = write!(out, "  {}", if ok { "o" } else { "x" });
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

/// Output of the pruned decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct PrunedOutput {
    /// Per-position distributions; pruned labels are exactly zero.
    pub probs: Vec<Vec<f64>>,
    /// Decoded fingers, 1-based.
    pub fingers: Vec<u8>,
}

/// Transition recurrence with infeasible paths removed.
///
/// At each step the score contribution along a forbidden `(i, j)` edge is
/// dropped, then every successor that is not [`playable`] from the finger
/// actually decoded at the previous position is removed before the softmax.
/// Decoding is greedy, so the realized path is both allowed and unflagged.
pub fn pruned_forward(
    matrices: &TransitionMatrices,
    lambdas: &[Vec<f64>],
    steps: &[StepKind],
    hand: Hand,
    use_transition: bool,
) -> Result<PrunedOutput> {
    if lambdas.len() != steps.len() {
        return Err(Error::Length {
            expected: lambdas.len(),
            actual: steps.len(),
        });
    }
    let mut probs: Vec<Vec<f64>> = Vec::with_capacity(lambdas.len());
    let mut fingers: Vec<u8> = Vec::with_capacity(lambdas.len());
    for (t, lambda) in lambdas.iter().enumerate() {
        let p = match (probs.last(), fingers.last()) {
            (Some(prev), Some(&prev_finger)) => {
                let step = steps[t];
                let w = if use_transition {
                    matrices.select(step.into())
                } else {
                    None
                };
                let scores = match w {
                    Some(w) => {
                        let mut masked = w.clone();
                        for i in 0..K {
                            for j in 0..K {
                                if !allowed(hand, step, i as u8 + 1, j as u8 + 1) {
                                    masked.set(i, j, 0.0);
                                }
                            }
                        }
                        transition_scores(Some(&masked), prev, lambda)
                    }
                    None => lambda.clone(),
                };
                let survivors: Vec<usize> = (0..K)
                    .filter(|&j| playable(hand, step, prev_finger, j as u8 + 1))
                    .collect();
                if survivors.is_empty() {
                    return Err(Error::NoFeasibleFinger(t));
                }
                let sub: Vec<f64> = survivors.iter().map(|&j| scores[j]).collect();
                let sub_p = softmax(&sub);
                let mut full = vec![0.0; K];
                for (&j, &q) in survivors.iter().zip(&sub_p) {
                    full[j] = q;
                }
                full
            }
            _ => softmax(lambda),
        };
        fingers.push(argmax(&p) as u8 + 1);
        probs.push(p);
    }
    Ok(PrunedOutput { probs, fingers })
}

/// Final fingering from pruned distributions: per-position argmax.
pub fn decode_playable(probs: &[Vec<f64>]) -> Vec<u8> {
    probs.iter().map(|p| argmax(p) as u8 + 1).collect()
}

/// Positions `t` (1-based step index into the hand sequence) where
/// consecutive fingers violate the decision function.
pub fn infeasible_steps(hand: Hand, steps: &[StepKind], fingers: &[u8]) -> Vec<usize> {
    (1..fingers.len().min(steps.len()))
        .filter(|&t| !allowed(hand, steps[t], fingers[t - 1], fingers[t]))
        .collect()
}
