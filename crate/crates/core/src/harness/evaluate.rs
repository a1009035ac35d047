use std::fmt::Write as _;

use super::checkpoint::Checkpoint;
use super::dataset::Dataset;
use super::model::{DecodeOptions, FingeringModel};
use crate::error::{Error, Result};
use crate::metrics::{evaluate_scores, AnnotationEval, EvalReport, Fingering, ScoreEval};
use crate::pig::Piece;

/// Runs `predict` on every annotation of the listed scores.
pub fn score_evals(
    dataset: &Dataset,
    scores: &[String],
    predict: impl Fn(&Piece) -> Result<Fingering>,
) -> Result<Vec<ScoreEval>> {
    let by_score = dataset.by_score();
    let missing: Vec<String> = scores
        .iter()
        .filter(|s| !by_score.contains_key(s.as_str()))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingPredictions(missing));
    }
    scores
        .iter()
        .map(|s| {
            let annotations = by_score[s.as_str()]
                .iter()
                .map(|p| AnnotationEval::from_pieces(p, &predict(p)?))
                .collect::<Result<_>>()?;
            Ok(ScoreEval {
                score_id: s.clone(),
                annotations,
            })
        })
        .collect()
}

/// One report over the union of every fold's test scores.
pub fn evaluate_folds(
    label: &str,
    dataset: &Dataset,
    folds: &[(&FingeringModel, &[String])],
    opts: DecodeOptions,
) -> Result<EvalReport> {
    let mut evals = Vec::new();
    for (model, scores) in folds {
        evals.extend(score_evals(dataset, scores, |p| model.predict(p, opts))?);
    }
    evaluate_scores(label, &evals)
}

pub fn evaluate_checkpoints(
    label: &str,
    dataset: &Dataset,
    checkpoints: &[Checkpoint],
    opts: DecodeOptions,
) -> Result<EvalReport> {
    let pairs: Vec<(&FingeringModel, &[String])> = checkpoints
        .iter()
        .map(|c| (&c.model, c.test_scores.as_slice()))
        .collect();
    evaluate_folds(label, dataset, &pairs, opts)
}

/// Summary table of several reports with deltas against the first.
pub fn compare_reports(reports: &[EvalReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<20} {:>8} {:>8} {:>9} {:>9} {:>9} {:>9}",
        "config", "M_gen", "M_high", "IFR", "dM_gen", "dM_high", "dIFR"
    );
    let Some(base) = reports.first() else {
        return out;
    };
    for r in reports {
        let _ = writeln!(
            out,
            "{:<20} {:>8.4} {:>8.4} {:>9.5} {:>+9.4} {:>+9.4} {:>+9.5}",
            r.label,
            r.m_gen,
            r.m_high,
            r.ifr,
            r.m_gen - base.m_gen,
            r.m_high - base.m_high,
            r.ifr - base.ifr
        );
    }
    out
}
