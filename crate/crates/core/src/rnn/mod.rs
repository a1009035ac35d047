//! Bidirectional LSTM tagger with hand-written backpropagation.

mod adam;
mod cell;
mod model;

pub use adam::{adam_step, clip_grad_norm, AdamHyper, AdamState};
pub use cell::{lstm_cell_step, CellState, LstmCellParams};
pub use model::{BiLayer, ModelParams};
