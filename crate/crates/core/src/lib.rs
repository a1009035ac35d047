//! Piano fingering estimation from pitch-difference sequences.
//!
//! A bidirectional LSTM tags each note of a hand with a finger (1 = thumb
//! .. 5 = little finger). The input is the coded pitch difference to the
//! previous note, so the model sees intervals rather than absolute keys. A
//! learned finger-to-finger transition layer carries the previous
//! distribution forward on stepwise melodic motion, and kinematic rules
//! remove unplayable crossings at decode time.

pub mod augment;
pub mod encoding;
pub mod harness;
pub mod error;
pub mod metrics;
pub mod pig;
pub mod prior;
pub mod rnn;
pub mod tensor;
pub mod transition;

pub use error::{Error, Result};
