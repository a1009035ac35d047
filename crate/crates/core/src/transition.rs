//! Learned finger-transition scores applied on top of the tagger output.
//!
//! For a step between two single tones within an octave, the previous
//! position's label distribution is pushed through an ascending or a
//! descending 5x5 score matrix and added to the current scores:
//!
//! ```text
//! ytilde[j] = sum_i yhat_prev[i] * W[i][j] + lambda[j]
//! yhat      = softmax(ytilde)
//! ```
//!
//! Rows index the previous finger, columns the next finger. Any other step
//! (chords, leaps, repeated notes, the first note) uses no matrix, so the
//! output there is just `softmax(lambda)`.

use serde::{Deserialize, Serialize};

use crate::encoding::PdToken;
use crate::error::{Error, Result};
use crate::tensor::{argmax, softmax, Matrix};

/// Number of finger labels.
pub const K: usize = 5;

/// What kind of step leads into a position, decided from the token stream alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StepKind {
    Start,
    SingleUp,
    SingleDown,
    /// Same pitch repeated between two single tones.
    Repeat,
    /// Single tones an octave or more apart.
    Leap,
    /// Either endpoint belongs to a chord.
    Polyphonic,
}

impl StepKind {
    pub fn classify(prev: Option<&PdToken>, cur: &PdToken) -> StepKind {
        let Some(prev) = prev else {
            return StepKind::Start;
        };
        if !(prev.is_single() && cur.is_single()) {
            return StepKind::Polyphonic;
        }
        if cur.is_leap {
            return StepKind::Leap;
        }
        match cur.raw_diff.signum() {
            1 => StepKind::SingleUp,
            -1 => StepKind::SingleDown,
            _ => StepKind::Repeat,
        }
    }

    /// Sign of the pitch movement for within-octave single-tone steps, 0 otherwise.
    pub fn direction(self) -> i32 {
        match self {
            StepKind::SingleUp => 1,
            StepKind::SingleDown => -1,
            _ => 0,
        }
    }
}

pub fn classify_steps(tokens: &[PdToken]) -> Vec<StepKind> {
    tokens
        .iter()
        .enumerate()
        .map(|(t, tok)| StepKind::classify(t.checked_sub(1).map(|p| &tokens[p]), tok))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    Up,
    Down,
    Zero,
}

impl From<StepKind> for Selection {
    fn from(kind: StepKind) -> Self {
        match kind {
            StepKind::SingleUp => Selection::Up,
            StepKind::SingleDown => Selection::Down,
            _ => Selection::Zero,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrices {
    pub up: Matrix,
    pub down: Matrix,
}

impl Default for TransitionMatrices {
    fn default() -> Self {
        Self::zeros()
    }
}

impl TransitionMatrices {
    pub fn zeros() -> Self {
        TransitionMatrices {
            up: Matrix::zeros(K, K),
            down: Matrix::zeros(K, K),
        }
    }

    /// The matrix for a selection; `None` stands for the all-zero matrix.
    pub fn select(&self, selection: Selection) -> Option<&Matrix> {
        match selection {
            Selection::Up => Some(&self.up),
            Selection::Down => Some(&self.down),
            Selection::Zero => None,
        }
    }

    pub fn select_mut(&mut self, selection: Selection) -> Option<&mut Matrix> {
        match selection {
            Selection::Up => Some(&mut self.up),
            Selection::Down => Some(&mut self.down),
            Selection::Zero => None,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        self.up.check("transition up", K, K)?;
        self.down.check("transition down", K, K)?;
        Ok(())
    }

    /// Two 5x5 tables, rows = previous finger.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (name, m) in [("ascending", &self.up), ("descending", &self.down)] {
            out.push_str(&format!("# {name}\nfrom\\to"));
            for j in 1..=K {
                out.push_str(&format!("\t{j}"));
            }
            out.push('\n');
            for i in 0..K {
                out.push_str(&format!("{}", i + 1));
                for j in 0..K {
                    out.push_str(&format!("\t{:.6}", m.get(i, j)));
                }
                out.push('\n');
            }
        }
        out
    }
}

/// `ytilde = W^T yprev + lambda`, where `W` may be absent (zero).
pub(crate) fn transition_scores(w: Option<&Matrix>, prev: &[f64], lambda: &[f64]) -> Vec<f64> {
    let mut out = lambda.to_vec();
    if let Some(w) = w {
        for (i, &p) in prev.iter().enumerate() {
            for (j, o) in out.iter_mut().enumerate() {
                *o += p * w.get(i, j);
            }
        }
    }
    out
}

/// Runs the transition recurrence over a whole sequence of tagger scores.
/// Returns the per-position label distributions.
pub fn constrained_forward(
    matrices: &TransitionMatrices,
    lambdas: &[Vec<f64>],
    steps: &[StepKind],
) -> Result<Vec<Vec<f64>>> {
    if lambdas.len() != steps.len() {
        return Err(Error::Length {
            expected: lambdas.len(),
            actual: steps.len(),
        });
    }
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(lambdas.len());
    for (t, lambda) in lambdas.iter().enumerate() {
        let scores = match out.last() {
            None => lambda.clone(),
            Some(prev) => transition_scores(matrices.select(steps[t].into()), prev, lambda),
        };
        out.push(softmax(&scores));
    }
    Ok(out)
}

/// Per-position most likely finger (1-based); ties go to the smaller finger.
pub fn decode_argmax(probs: &[Vec<f64>]) -> Vec<u8> {
    probs.iter().map(|p| argmax(p) as u8 + 1).collect()
}
