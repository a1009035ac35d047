use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{all_finite, sigmoid, Matrix};

/// Weights of one LSTM cell. Every gate matrix is
/// `hidden_size x (hidden_size + input_size)` and acts on `[h_prev, e]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmCellParams {
    pub w_f: Matrix,
    pub w_i: Matrix,
    pub w_c: Matrix,
    pub w_o: Matrix,
    pub b_f: Vec<f64>,
    pub b_i: Vec<f64>,
    pub b_c: Vec<f64>,
    pub b_o: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl CellState {
    pub fn zeros(hidden_size: usize) -> Self {
        CellState {
            h: vec![0.0; hidden_size],
            c: vec![0.0; hidden_size],
        }
    }
}

impl LstmCellParams {
    pub fn zeros(hidden_size: usize, input_size: usize) -> Self {
        let m = || Matrix::zeros(hidden_size, hidden_size + input_size);
        let b = || vec![0.0; hidden_size];
        LstmCellParams {
            w_f: m(),
            w_i: m(),
            w_c: m(),
            w_o: m(),
            b_f: b(),
            b_i: b(),
            b_c: b(),
            b_o: b(),
        }
    }

    /// Uniform weights in `[-r, r]` with `r = 1/sqrt(hidden + input)`,
    /// zero biases except the forget gate, which starts at 1.
    pub fn init(hidden_size: usize, input_size: usize, rng: &mut impl Rng) -> Self {
        let cols = hidden_size + input_size;
        let r = 1.0 / (cols as f64).sqrt();
        LstmCellParams {
            w_f: Matrix::uniform(hidden_size, cols, r, rng),
            w_i: Matrix::uniform(hidden_size, cols, r, rng),
            w_c: Matrix::uniform(hidden_size, cols, r, rng),
            w_o: Matrix::uniform(hidden_size, cols, r, rng),
            b_f: vec![1.0; hidden_size],
            b_i: vec![0.0; hidden_size],
            b_c: vec![0.0; hidden_size],
            b_o: vec![0.0; hidden_size],
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.b_f.len()
    }

    pub fn input_size(&self) -> usize {
        self.w_f.cols - self.hidden_size()
    }

    pub(crate) fn validate(&self, hidden: usize, input: usize) -> Result<()> {
        for (name, w) in [
            ("w_f", &self.w_f),
            ("w_i", &self.w_i),
            ("w_c", &self.w_c),
            ("w_o", &self.w_o),
        ] {
            w.check(name, hidden, hidden + input)?;
        }
        for (name, b) in [
            ("b_f", &self.b_f),
            ("b_i", &self.b_i),
            ("b_c", &self.b_c),
            ("b_o", &self.b_o),
        ] {
            if b.len() != hidden {
                return Err(Error::Dimension(format!(
                    "{name}: expected {hidden}, got {}",
                    b.len()
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn tensors(&self) -> [&[f64]; 8] {
        [
            &self.w_f.data,
            &self.w_i.data,
            &self.w_c.data,
            &self.w_o.data,
            &self.b_f,
            &self.b_i,
            &self.b_c,
            &self.b_o,
        ]
    }

    pub(crate) fn tensors_mut(&mut self) -> [&mut [f64]; 8] {
        [
            &mut self.w_f.data,
            &mut self.w_i.data,
            &mut self.w_c.data,
            &mut self.w_o.data,
            &mut self.b_f,
            &mut self.b_i,
            &mut self.b_c,
            &mut self.b_o,
        ]
    }
}

/// One step of the cell from `prev` with input `e`.
pub fn lstm_cell_step(params: &LstmCellParams, prev: &CellState, e: &[f64]) -> Result<CellState> {
    let hidden = params.hidden_size();
    if prev.h.len() != hidden || prev.c.len() != hidden {
        return Err(Error::Dimension(format!(
            "state has h={} c={}, cell hidden size is {hidden}",
            prev.h.len(),
            prev.c.len()
        )));
    }
    if e.len() != params.input_size() {
        return Err(Error::Dimension(format!(
            "input has {} values, cell expects {}",
            e.len(),
            params.input_size()
        )));
    }
    let cache = step(params, &prev.h, &prev.c, &sparse(e));
    Ok(CellState {
        h: cache.h,
        c: cache.c,
    })
}

/// Non-zero entries of an input vector. One-hot inputs become a single entry.
pub(crate) fn sparse(x: &[f64]) -> Vec<(usize, f64)> {
    x.iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, v)| (i, *v))
        .collect()
}

/// Everything the backward pass needs from one forward step.
#[derive(Debug, Clone)]
pub(crate) struct StepCache {
    pub h_prev: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub f: Vec<f64>,
    pub i: Vec<f64>,
    pub g: Vec<f64>,
    pub o: Vec<f64>,
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub h: Vec<f64>,
}

#[inline]
fn preactivation(w: &Matrix, b: &[f64], h_prev: &[f64], input: &[(usize, f64)], r: usize) -> f64 {
    let hidden = h_prev.len();
    let row = w.row(r);
    let mut z = b[r];
    for (wj, hj) in row[..hidden].iter().zip(h_prev) {
        z += wj * hj;
    }
    for &(j, v) in input {
        z += row[hidden + j] * v;
    }
    z
}

pub(crate) fn step(
    p: &LstmCellParams,
    h_prev: &[f64],
    c_prev: &[f64],
    input: &[(usize, f64)],
) -> StepCache {
    let hidden = h_prev.len();
    let mut f = vec![0.0; hidden];
    let mut i = vec![0.0; hidden];
    let mut g = vec![0.0; hidden];
    let mut o = vec![0.0; hidden];
    let mut c = vec![0.0; hidden];
    let mut tanh_c = vec![0.0; hidden];
    let mut h = vec![0.0; hidden];
    for r in 0..hidden {
        f[r] = sigmoid(preactivation(&p.w_f, &p.b_f, h_prev, input, r));
        i[r] = sigmoid(preactivation(&p.w_i, &p.b_i, h_prev, input, r));
        g[r] = preactivation(&p.w_c, &p.b_c, h_prev, input, r).tanh();
        o[r] = sigmoid(preactivation(&p.w_o, &p.b_o, h_prev, input, r));
        c[r] = f[r] * c_prev[r] + i[r] * g[r];
        tanh_c[r] = c[r].tanh();
        h[r] = o[r] * tanh_c[r];
    }
    StepCache {
        h_prev: h_prev.to_vec(),
        c_prev: c_prev.to_vec(),
        f,
        i,
        g,
        o,
        c,
        tanh_c,
        h,
    }
}

/// Runs a cell over a sequence from a zero state. Caches come back indexed by
/// sequence position, whichever way the cell walked.
pub(crate) fn run_direction(
    p: &LstmCellParams,
    inputs: &[Vec<(usize, f64)>],
    reverse: bool,
) -> Vec<StepCache> {
    let hidden = p.hidden_size();
    let n = inputs.len();
    let mut caches: Vec<Option<StepCache>> = vec![None; n];
    let mut h = vec![0.0; hidden];
    let mut c = vec![0.0; hidden];
    for k in 0..n {
        let t = if reverse { n - 1 - k } else { k };
        let cache = step(p, &h, &c, &inputs[t]);
        h.clone_from(&cache.h);
        c.clone_from(&cache.c);
        caches[t] = Some(cache);
    }
    caches.into_iter().map(|c| c.expect("every position visited")).collect()
}

/// Backpropagation through time for one direction.
///
/// `dh_out[t]` is the loss gradient arriving at `h` of position `t` from
/// above. Gradients accumulate into `grads`; when `input_dim` is given, the
/// gradient with respect to each position's input is returned.
pub(crate) fn backward_direction(
    p: &LstmCellParams,
    inputs: &[Vec<(usize, f64)>],
    caches: &[StepCache],
    dh_out: &[Vec<f64>],
    reverse: bool,
    grads: &mut LstmCellParams,
    input_dim: Option<usize>,
) -> Option<Vec<Vec<f64>>> {
    let hidden = p.hidden_size();
    let n = caches.len();
    let mut d_inputs = input_dim.map(|dim| vec![vec![0.0; dim]; n]);
    let mut dh_next = vec![0.0; hidden];
    let mut dc_next = vec![0.0; hidden];
    let mut dz = [
        vec![0.0; hidden],
        vec![0.0; hidden],
        vec![0.0; hidden],
        vec![0.0; hidden],
    ];

    for k in (0..n).rev() {
        let t = if reverse { n - 1 - k } else { k };
        let cache = &caches[t];
        for r in 0..hidden {
            let dh = dh_out[t][r] + dh_next[r];
            let dc = dc_next[r] + dh * cache.o[r] * (1.0 - cache.tanh_c[r] * cache.tanh_c[r]);
            let d_o = dh * cache.tanh_c[r];
            let d_f = dc * cache.c_prev[r];
            let d_i = dc * cache.g[r];
            let d_g = dc * cache.i[r];
            dz[0][r] = d_f * cache.f[r] * (1.0 - cache.f[r]);
            dz[1][r] = d_i * cache.i[r] * (1.0 - cache.i[r]);
            dz[2][r] = d_g * (1.0 - cache.g[r] * cache.g[r]);
            dz[3][r] = d_o * cache.o[r] * (1.0 - cache.o[r]);
            dc_next[r] = dc * cache.f[r];
        }

        dh_next.iter_mut().for_each(|v| *v = 0.0);
        let weights = [&p.w_f, &p.w_i, &p.w_c, &p.w_o];
        let grad_parts: [(&mut Matrix, &mut Vec<f64>); 4] = [
            (&mut grads.w_f, &mut grads.b_f),
            (&mut grads.w_i, &mut grads.b_i),
            (&mut grads.w_c, &mut grads.b_c),
            (&mut grads.w_o, &mut grads.b_o),
        ];
        for ((w, (gw, gb)), dz_gate) in weights.into_iter().zip(grad_parts).zip(&dz) {
            for r in 0..hidden {
                let d = dz_gate[r];
                if d == 0.0 {
                    continue;
                }
                gb[r] += d;
                let grow = gw.row_mut(r);
                for (gj, hj) in grow[..hidden].iter_mut().zip(&cache.h_prev) {
                    *gj += d * hj;
                }
                for &(j, v) in &inputs[t] {
                    grow[hidden + j] += d * v;
                }
                let wrow = w.row(r);
                for (dhj, wj) in dh_next.iter_mut().zip(&wrow[..hidden]) {
                    *dhj += d * wj;
                }
                if let Some(d_inputs) = d_inputs.as_mut() {
                    for (dx, wj) in d_inputs[t].iter_mut().zip(&wrow[hidden..]) {
                        *dx += d * wj;
                    }
                }
            }
        }
    }
    d_inputs
}

pub(crate) fn finite(p: &LstmCellParams) -> bool {
    p.tensors().iter().all(|t| all_finite(t))
}
