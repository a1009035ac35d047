//! Configuration, cross-validation, training, checkpoints, annotation and
//! evaluation.

pub mod baselines;
pub mod checkpoint;
pub mod config;
pub mod cv;
pub mod dataset;
pub mod evaluate;
pub mod model;
pub mod train;

pub use checkpoint::{checkpoint_file_name, Checkpoint, CHECKPOINT_FORMAT};
pub use config::{derive_seed, RunConfig};
pub use cv::{cv_split, validation_fold};
pub use dataset::Dataset;
pub use evaluate::{compare_reports, evaluate_checkpoints, evaluate_folds, score_evals};
pub use model::{encode_notes, DecodeOptions, Encoded, FingeringModel, HandModel};
pub use train::{build_vocab, cross_validate, train_fold, train_hand, CvRun, EpochLog, FoldOutcome, TrainLog};
