use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{derive_seed, RunConfig};
use super::cv::{cv_split, validation_fold};
use super::dataset::Dataset;
use super::evaluate::evaluate_folds;
use super::model::{encode_notes, DecodeOptions, Encoded, FingeringModel, HandModel};
use crate::augment::{collect_stats, generate};
use crate::encoding::{compute_pd, PdVocabulary};
use crate::error::{Error, Result};
use crate::metrics::EvalReport;
use crate::pig::{Hand, Piece};
use crate::rnn::{adam_step, clip_grad_norm, AdamState, ModelParams};

const AUGMENT_STREAM: u64 = 0xa11;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean per-piece loss seen during the epoch, before each update.
    pub train_loss: f64,
    /// Mean matching rate of this hand on the validation pieces.
    pub val_alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub hand: Hand,
    /// Mean loss over the training pieces before the first update.
    pub initial_loss: f64,
    pub history: Vec<EpochLog>,
    /// Epoch whose parameters were kept.
    pub best_epoch: usize,
    pub best_val: Option<f64>,
}

struct Example {
    enc: Encoded,
    gold: Vec<u8>,
}

fn decode_options(cfg: &RunConfig) -> DecodeOptions {
    DecodeOptions {
        use_transition: cfg.use_transition,
        use_prior: cfg.use_prior,
    }
}

pub fn build_vocab(cfg: &RunConfig, hand: Hand, pieces: &[&Piece]) -> Result<PdVocabulary> {
    let mut symbols = Vec::new();
    for p in pieces {
        let notes = p.hand(hand);
        if notes.is_empty() {
            continue;
        }
        let tokens = compute_pd(notes)?;
        symbols.push(cfg.input_mode.symbols(notes, &tokens));
    }
    Ok(PdVocabulary::build(symbols.iter().map(Vec::as_slice)))
}

fn hand_alpha(model: &HandModel, pieces: &[&Piece], opts: DecodeOptions) -> Result<Option<f64>> {
    let mut sum = 0.0;
    let mut count = 0;
    for p in pieces {
        let notes = p.hand(model.hand);
        if notes.is_empty() {
            continue;
        }
        let pred = model.predict(notes, opts)?;
        let hits = pred.iter().zip(notes).filter(|(f, n)| **f == n.finger).count();
        sum += hits as f64 / notes.len() as f64;
        count += 1;
    }
    Ok((count > 0).then(|| sum / count as f64))
}

/// Trains one hand's tagger with early stopping on `val`. `None` when no
/// training piece has notes in this hand.
pub fn train_hand(
    hand: Hand,
    train: &[&Piece],
    val: &[&Piece],
    cfg: &RunConfig,
    seed: u64,
) -> Result<Option<(HandModel, TrainLog)>> {
    let vocab = build_vocab(cfg, hand, train)?;
    let examples: Vec<Example> = train
        .iter()
        .filter(|p| !p.hand(hand).is_empty())
        .map(|p| {
            let notes = p.hand(hand);
            Ok(Example {
                enc: encode_notes(&vocab, cfg.input_mode, notes)?,
                gold: notes.iter().map(|n| n.finger).collect(),
            })
        })
        .collect::<Result<_>>()?;
    if examples.is_empty() {
        return Ok(None);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ModelParams::init(vocab.dim(), cfg.hidden_size, cfg.depth, &mut rng);
    let loss_of = |params: &ModelParams, ex: &Example| {
        params.loss_and_gradients(&ex.enc.inputs, &ex.enc.steps, &ex.gold, cfg.use_transition)
    };
    let mut initial_loss = 0.0;
    for ex in &examples {
        initial_loss += loss_of(&params, ex)?.0;
    }
    initial_loss /= examples.len() as f64;

    let hyper = cfg.adam();
    let opts = decode_options(cfg);
    let mut adam = AdamState::new(&params);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut model = HandModel {
        hand,
        input_mode: cfg.input_mode,
        vocab,
        params: params.clone(),
    };
    let mut log = TrainLog {
        hand,
        initial_loss,
        history: Vec::new(),
        best_epoch: 0,
        best_val: None,
    };
    let mut stale = 0;
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for &i in &order {
            let (loss, mut grads) = loss_of(&params, &examples[i]).map_err(|e| {
                Error::NonFinite(format!("{} hand, epoch {epoch}: {e}", hand.name()))
            })?;
            clip_grad_norm(&mut grads, cfg.clip);
            adam_step(&mut params, &grads, &mut adam, &hyper)?;
            loss_sum += loss;
        }
        let train_loss = loss_sum / examples.len() as f64;

        let current = HandModel {
            params: params.clone(),
            ..model.clone()
        };
        let val_alpha = hand_alpha(&current, val, opts)?;
        log.history.push(EpochLog {
            epoch,
            train_loss,
            val_alpha,
        });
        info!(
            "{} hand epoch {epoch}: loss {train_loss:.4} val {:?}",
            hand.name(),
            val_alpha
        );
        match val_alpha {
            Some(v) if log.best_val.is_some_and(|b| v <= b) => {
                stale += 1;
                if stale >= cfg.patience {
                    break;
                }
            }
            _ => {
                model = current;
                log.best_epoch = epoch;
                log.best_val = val_alpha;
                stale = 0;
            }
        }
    }
    Ok(Some((model, log)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldOutcome {
    pub fold: usize,
    pub test_scores: Vec<String>,
    pub val_scores: Vec<String>,
    pub model: FingeringModel,
    pub logs: Vec<TrainLog>,
    /// Number of synthetic pieces added to training.
    pub augmented: usize,
}

/// Trains both hands with `folds[test]` held out. The next fold serves as
/// validation when there are at least three folds. Vocabulary and augmented
/// data come from the training folds only.
pub fn train_fold(
    dataset: &Dataset,
    folds: &[Vec<String>],
    test: usize,
    cfg: &RunConfig,
) -> Result<FoldOutcome> {
    let val = validation_fold(test, folds.len());
    let train_scores: Vec<String> = folds
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != test && Some(*i) != val)
        .flat_map(|(_, f)| f.iter().cloned())
        .collect();
    let mut train = dataset.select(&train_scores);
    if train.is_empty() {
        return Err(Error::Folds {
            folds: folds.len(),
            scores: dataset.score_ids().len(),
        });
    }
    let val_scores = val.map(|v| folds[v].clone()).unwrap_or_default();
    let val_pieces = dataset.select(&val_scores);

    let synthetic: Vec<Piece> = if cfg.augment {
        let stats = collect_stats(train.iter().copied(), cfg.augment_threshold)?;
        let gen = cfg.generate_config(derive_seed(cfg.seed, &[test as u64, AUGMENT_STREAM]));
        generate(&stats, &gen)?.into_iter().map(|s| s.piece).collect()
    } else {
        Vec::new()
    };
    train.extend(synthetic.iter());

    let mut model = FingeringModel::default();
    let mut logs = Vec::new();
    for hand in Hand::BOTH {
        let seed = derive_seed(cfg.seed, &[test as u64, hand.channel() as u64]);
        if let Some((m, log)) = train_hand(hand, &train, &val_pieces, cfg, seed)? {
            match hand {
                Hand::Left => model.left = Some(m),
                Hand::Right => model.right = Some(m),
            }
            logs.push(log);
        }
    }
    Ok(FoldOutcome {
        fold: test,
        test_scores: folds[test].clone(),
        val_scores,
        model,
        logs,
        augmented: synthetic.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvRun {
    pub folds: Vec<FoldOutcome>,
    pub report: EvalReport,
}

/// Trains the listed folds (all when `only` is `None`) and evaluates each on
/// its held-out scores.
pub fn cross_validate(
    dataset: &Dataset,
    cfg: &RunConfig,
    label: &str,
    only: Option<&[usize]>,
) -> Result<CvRun> {
    let folds = cv_split(dataset.score_ids(), cfg.folds, cfg.seed)?;
    let which: Vec<usize> = match only {
        Some(list) => list.to_vec(),
        None => (0..folds.len()).collect(),
    };
    let mut outcomes = Vec::with_capacity(which.len());
    for i in which {
        if i >= folds.len() {
            return Err(Error::Config(format!("fold {i} out of range 0..{}", folds.len())));
        }
        info!("fold {i}: testing on {} scores", folds[i].len());
        outcomes.push(train_fold(dataset, &folds, i, cfg)?);
    }
    let pairs: Vec<(&FingeringModel, &[String])> = outcomes
        .iter()
        .map(|o| (&o.model, o.test_scores.as_slice()))
        .collect();
    let report = evaluate_folds(label, dataset, &pairs, decode_options(cfg))?;
    Ok(CvRun {
        folds: outcomes,
        report,
    })
}
