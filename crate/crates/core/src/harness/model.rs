use log::warn;
use serde::{Deserialize, Serialize};

use crate::encoding::{compute_pd, InputMode, PdToken, PdVocabulary};
use crate::error::{Error, Result};
use crate::metrics::Fingering;
use crate::pig::{Hand, NoteEvent, Piece};
use crate::prior::pruned_forward;
use crate::rnn::ModelParams;
use crate::transition::{classify_steps, constrained_forward, decode_argmax, StepKind, TransitionMatrices};

/// Which inference stages run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecodeOptions {
    pub use_transition: bool,
    pub use_prior: bool,
}

impl Default for DecodeOptions {
    fn default() -> Self {
        DecodeOptions {
            use_transition: true,
            use_prior: true,
        }
    }
}

/// Model inputs for one hand of one piece.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoded {
    pub tokens: Vec<PdToken>,
    pub steps: Vec<StepKind>,
    pub inputs: Vec<Vec<f64>>,
}

pub fn encode_notes(vocab: &PdVocabulary, mode: InputMode, notes: &[NoteEvent]) -> Result<Encoded> {
    let tokens = compute_pd(notes)?;
    let steps = classify_steps(&tokens);
    let inputs = mode
        .symbols(notes, &tokens)
        .into_iter()
        .map(|s| vocab.encode(s))
        .collect();
    Ok(Encoded {
        tokens,
        steps,
        inputs,
    })
}

/// A trained tagger for one hand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandModel {
    pub hand: Hand,
    pub input_mode: InputMode,
    pub vocab: PdVocabulary,
    pub params: ModelParams,
}

impl HandModel {
    pub fn validate(&self) -> Result<()> {
        if !self.vocab.tokens().windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Checkpoint(format!(
                "{} hand vocabulary is not strictly ascending",
                self.hand.name()
            )));
        }
        if self.vocab.dim() != self.params.input_size {
            return Err(Error::Checkpoint(format!(
                "{} hand vocabulary has dimension {} but the model expects {}",
                self.hand.name(),
                self.vocab.dim(),
                self.params.input_size
            )));
        }
        self.params.validate()
    }

    pub fn encode(&self, notes: &[NoteEvent]) -> Result<Encoded> {
        encode_notes(&self.vocab, self.input_mode, notes)
    }

    /// Per-position finger distributions after the enabled stages, and the
    /// decoded fingers.
    pub fn infer(&self, notes: &[NoteEvent], opts: DecodeOptions) -> Result<(Vec<Vec<f64>>, Vec<u8>)> {
        let enc = self.encode(notes)?;
        let lambdas = self.params.bilstm_forward(&enc.inputs)?;
        let zero = TransitionMatrices::zeros();
        let matrices = if opts.use_transition {
            &self.params.transitions
        } else {
            &zero
        };
        if opts.use_prior {
            let out = pruned_forward(matrices, &lambdas, &enc.steps, self.hand, true)?;
            Ok((out.probs, out.fingers))
        } else {
            let probs = constrained_forward(matrices, &lambdas, &enc.steps)?;
            let fingers = decode_argmax(&probs);
            Ok((probs, fingers))
        }
    }

    pub fn predict(&self, notes: &[NoteEvent], opts: DecodeOptions) -> Result<Vec<u8>> {
        Ok(self.infer(notes, opts)?.1)
    }
}

/// One model per hand. A hand without a model can only annotate empty parts.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FingeringModel {
    pub left: Option<HandModel>,
    pub right: Option<HandModel>,
}

impl FingeringModel {
    pub fn hand(&self, hand: Hand) -> Option<&HandModel> {
        match hand {
            Hand::Left => self.left.as_ref(),
            Hand::Right => self.right.as_ref(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for hand in Hand::BOTH {
            if let Some(m) = self.hand(hand) {
                if m.hand != hand {
                    return Err(Error::Checkpoint(format!(
                        "{} hand slot holds a {} hand model",
                        hand.name(),
                        m.hand.name()
                    )));
                }
                m.validate()?;
            }
        }
        Ok(())
    }

    pub fn predict(&self, piece: &Piece, opts: DecodeOptions) -> Result<Fingering> {
        let mut out = Fingering::default();
        for hand in Hand::BOTH {
            let notes = piece.hand(hand);
            if notes.is_empty() {
                warn!("{}: {} hand is empty, skipped", piece.score_id, hand.name());
                continue;
            }
            let model = self.hand(hand).ok_or_else(|| {
                Error::Checkpoint(format!("no {} hand model", hand.name()))
            })?;
            let fingers = model.predict(notes, opts)?;
            match hand {
                Hand::Left => out.left = fingers,
                Hand::Right => out.right = fingers,
            }
        }
        Ok(out)
    }

    /// Copy of `piece` with every finger replaced by the prediction.
    pub fn annotate(&self, piece: &Piece, opts: DecodeOptions) -> Result<Piece> {
        let pred = self.predict(piece, opts)?;
        let mut out = piece.clone();
        for hand in Hand::BOTH {
            if !piece.hand(hand).is_empty() {
                out.set_fingers(hand, pred.hand(hand))?;
            }
        }
        Ok(out)
    }
}
