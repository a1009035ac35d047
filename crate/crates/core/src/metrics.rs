//! Matching rates and the incapable-performing fingering rate.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pig::{Hand, Piece};
use crate::prior::{decision_t, psi};
use crate::transition::StepKind;

/// Finger labels of both hands of one piece.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Fingering {
    pub left: Vec<u8>,
    pub right: Vec<u8>,
}

impl Fingering {
    pub fn of(piece: &Piece) -> Self {
        Fingering {
            left: piece.fingers(Hand::Left),
            right: piece.fingers(Hand::Right),
        }
    }

    pub fn hand(&self, hand: Hand) -> &[u8] {
        match hand {
            Hand::Left => &self.left,
            Hand::Right => &self.right,
        }
    }

    pub fn len(&self) -> usize {
        self.left.len() + self.right.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `1 - mismatches / n` over both hands.
pub fn matching_rate(gold: &Fingering, pred: &Fingering) -> Result<f64> {
    let mut mismatches = 0usize;
    for hand in Hand::BOTH {
        let (g, p) = (gold.hand(hand), pred.hand(hand));
        if g.len() != p.len() {
            return Err(Error::Length {
                expected: g.len(),
                actual: p.len(),
            });
        }
        mismatches += g.iter().zip(p).filter(|(a, b)| a != b).count();
    }
    let n = gold.len();
    if n == 0 {
        return Err(Error::EmptySequence);
    }
    Ok(1.0 - mismatches as f64 / n as f64)
}

/// Mean of every (score, ground truth) matching rate.
pub fn m_gen(alphas: &[Vec<f64>]) -> f64 {
    let n_gen: usize = alphas.iter().map(Vec::len).sum();
    if n_gen == 0 {
        return 0.0;
    }
    alphas.iter().flatten().sum::<f64>() / n_gen as f64
}

/// Mean over scores of the best matching rate per score.
pub fn m_high(alphas: &[Vec<f64>]) -> f64 {
    let scored: Vec<f64> = alphas
        .iter()
        .filter(|a| !a.is_empty())
        .map(|a| a.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    if scored.is_empty() {
        return 0.0;
    }
    scored.iter().sum::<f64>() / scored.len() as f64
}

/// One ground-truth annotation of a score, with the prediction made on its notes.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationEval {
    pub annotator_id: String,
    pub left_steps: Vec<StepKind>,
    pub right_steps: Vec<StepKind>,
    pub gold: Fingering,
    pub pred: Fingering,
}

impl AnnotationEval {
    pub fn from_pieces(gold: &Piece, pred: &Fingering) -> Result<Self> {
        let steps = |hand| -> Result<Vec<StepKind>> {
            let notes = gold.hand(hand);
            if notes.is_empty() {
                return Ok(Vec::new());
            }
            let tokens = crate::encoding::compute_pd(notes)?;
            Ok(crate::transition::classify_steps(&tokens))
        };
        Ok(AnnotationEval {
            annotator_id: gold.annotator_id.clone(),
            left_steps: steps(Hand::Left)?,
            right_steps: steps(Hand::Right)?,
            gold: Fingering::of(gold),
            pred: pred.clone(),
        })
    }

    fn steps(&self, hand: Hand) -> &[StepKind] {
        match hand {
            Hand::Left => &self.left_steps,
            Hand::Right => &self.right_steps,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreEval {
    pub score_id: String,
    pub annotations: Vec<AnnotationEval>,
}

/// Per-score playability counts.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlayabilityCounts {
    /// Steps flagged by the playability index.
    pub flagged: usize,
    /// Flagged steps whose finger pair matches the nearest ground truth.
    pub s: usize,
    /// Flagged steps the decision function would have allowed.
    pub discrepancies: usize,
    pub notes: usize,
}

/// Counts flagged steps of a prediction against one ground truth.
pub fn playability_counts(ann: &AnnotationEval) -> Result<PlayabilityCounts> {
    let mut counts = PlayabilityCounts {
        notes: ann.pred.len(),
        ..Default::default()
    };
    for hand in Hand::BOTH {
        let steps = ann.steps(hand);
        let pred = ann.pred.hand(hand);
        let gold = ann.gold.hand(hand);
        if steps.len() != pred.len() || gold.len() != pred.len() {
            return Err(Error::Length {
                expected: steps.len(),
                actual: pred.len(),
            });
        }
        for t in 1..pred.len() {
            if psi(hand, steps[t], pred[t - 1], pred[t]) == 1 {
                counts.flagged += 1;
                if gold[t - 1] == pred[t - 1] && gold[t] == pred[t] {
                    counts.s += 1;
                }
                if decision_t(hand, steps[t], pred[t - 1], pred[t]) == 1 {
                    counts.discrepancies += 1;
                }
            }
        }
    }
    Ok(counts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PieceAlpha {
    pub score_id: String,
    pub annotator_id: String,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorePlayability {
    pub score_id: String,
    /// Annotator whose ground truth was nearest to the prediction.
    pub nearest_annotator: String,
    pub counts: PlayabilityCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub label: String,
    pub per_piece: Vec<PieceAlpha>,
    pub m_gen: f64,
    pub m_high: f64,
    pub ifr: f64,
    pub s_counts: Vec<ScorePlayability>,
    /// Total flagged steps that the decision function allows.
    pub psi_t_discrepancies: usize,
}

/// Scores every annotation and aggregates matching rates and IFR.
///
/// IFR averages, over scores, `(flagged - s) / n` computed against the
/// ground truth nearest to the prediction.
pub fn evaluate_scores(label: &str, scores: &[ScoreEval]) -> Result<EvalReport> {
    let mut per_piece = Vec::new();
    let mut grouped = Vec::with_capacity(scores.len());
    let mut s_counts = Vec::with_capacity(scores.len());
    let mut ifr_sum = 0.0;
    let mut discrepancies = 0;
    for score in scores {
        if score.annotations.is_empty() {
            return Err(Error::MissingPredictions(vec![score.score_id.clone()]));
        }
        let mut alphas = Vec::with_capacity(score.annotations.len());
        for ann in &score.annotations {
            let alpha = matching_rate(&ann.gold, &ann.pred)?;
            per_piece.push(PieceAlpha {
                score_id: score.score_id.clone(),
                annotator_id: ann.annotator_id.clone(),
                alpha,
            });
            alphas.push(alpha);
        }
        let nearest = alphas
            .iter()
            .enumerate()
            .fold(0, |best, (i, &a)| if a > alphas[best] { i } else { best });
        let ann = &score.annotations[nearest];
        let counts = playability_counts(ann)?;
        ifr_sum += (counts.flagged as f64 - counts.s as f64) / counts.notes as f64;
        discrepancies += counts.discrepancies;
        s_counts.push(ScorePlayability {
            score_id: score.score_id.clone(),
            nearest_annotator: ann.annotator_id.clone(),
            counts,
        });
        grouped.push(alphas);
    }
    let ifr = if scores.is_empty() {
        0.0
    } else {
        ifr_sum / scores.len() as f64
    };
    Ok(EvalReport {
        label: label.to_string(),
        per_piece,
        m_gen: m_gen(&grouped),
        m_high: m_high(&grouped),
        ifr,
        s_counts,
        psi_t_discrepancies: discrepancies,
    })
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned plain-text table.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "report: {}", self.label);
        let _ = writeln!(out, "{:<12} {:<10} {:>8}", "score", "annotator", "alpha");
        for p in &self.per_piece {
            let _ = writeln!(
                out,
                "{:<12} {:<10} {:>8.4}",
                p.score_id, p.annotator_id, p.alpha
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<12} {:>8} {:>8} {:>8}", "score", "flagged", "s", "notes");
        for s in &self.s_counts {
            let _ = writeln!(
                out,
                "{:<12} {:>8} {:>8} {:>8}",
                s.score_id, s.counts.flagged, s.counts.s, s.counts.notes
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "M_gen   {:.4}", self.m_gen);
        let _ = writeln!(out, "M_high  {:.4}", self.m_high);
        let _ = writeln!(out, "IFR     {:.6}", self.ifr);
        let _ = writeln!(out, "psi/T discrepancies  {}", self.psi_t_discrepancies);
        out
    }
}
