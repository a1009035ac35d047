use rand::Rng;
use serde::{Deserialize, Serialize};

use super::cell::{backward_direction, finite, run_direction, sparse, LstmCellParams, StepCache};
use crate::error::{Error, Result};
use crate::tensor::{all_finite, dot, softmax, Matrix};
use crate::transition::{transition_scores, Selection, StepKind, TransitionMatrices, K};

/// One bidirectional layer: a left-to-right and a right-to-left cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiLayer {
    pub forward: LstmCellParams,
    pub backward: LstmCellParams,
}

/// All trainable tensors of one hand's tagger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub input_size: usize,
    pub hidden_size: usize,
    pub layers: Vec<BiLayer>,
    /// `K x 2*hidden_size`, maps `[h_fwd, h_bwd]` to label scores.
    pub projection: Matrix,
    pub projection_bias: Vec<f64>,
    pub transitions: TransitionMatrices,
}

impl ModelParams {
    pub fn init(input_size: usize, hidden_size: usize, depth: usize, rng: &mut impl Rng) -> Self {
        assert!(depth >= 1, "at least one layer");
        let layers = (0..depth)
            .map(|l| {
                let inp = if l == 0 { input_size } else { 2 * hidden_size };
                BiLayer {
                    forward: LstmCellParams::init(hidden_size, inp, rng),
                    backward: LstmCellParams::init(hidden_size, inp, rng),
                }
            })
            .collect();
        let r = 1.0 / ((2 * hidden_size) as f64).sqrt();
        ModelParams {
            input_size,
            hidden_size,
            layers,
            projection: Matrix::uniform(K, 2 * hidden_size, r, rng),
            projection_bias: vec![0.0; K],
            transitions: TransitionMatrices::zeros(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.iter_mut().for_each(|v| *v = 0.0);
        }
        z
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Dimension("model has no layers".into()));
        }
        let h = self.hidden_size;
        for (l, layer) in self.layers.iter().enumerate() {
            let inp = if l == 0 { self.input_size } else { 2 * h };
            layer.forward.validate(h, inp)?;
            layer.backward.validate(h, inp)?;
        }
        self.projection.check("projection", K, 2 * h)?;
        if self.projection_bias.len() != K {
            return Err(Error::Dimension("projection bias".into()));
        }
        self.transitions.validate()?;
        if !self.is_finite() {
            return Err(Error::NonFinite("model parameters".into()));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| finite(&l.forward) && finite(&l.backward))
            && all_finite(&self.projection.data)
            && all_finite(&self.projection_bias)
            && all_finite(&self.transitions.up.data)
            && all_finite(&self.transitions.down.data)
    }

    /// Every tensor in a fixed order, for optimizers and norms.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for l in &self.layers {
            out.extend(l.forward.tensors());
            out.extend(l.backward.tensors());
        }
        out.push(&self.projection.data);
        out.push(&self.projection_bias);
        out.push(&self.transitions.up.data);
        out.push(&self.transitions.down.data);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for l in &mut self.layers {
            out.extend(l.forward.tensors_mut());
            out.extend(l.backward.tensors_mut());
        }
        out.push(&mut self.projection.data);
        out.push(&mut self.projection_bias);
        out.push(&mut self.transitions.up.data);
        out.push(&mut self.transitions.down.data);
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|t| t.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= factor);
        }
    }

    fn check_inputs(&self, inputs: &[Vec<f64>]) -> Result<()> {
        if inputs.is_empty() {
            return Err(Error::EmptySequence);
        }
        if let Some(bad) = inputs.iter().find(|x| x.len() != self.input_size) {
            return Err(Error::Dimension(format!(
                "input vector has {} values, model expects {}",
                bad.len(),
                self.input_size
            )));
        }
        Ok(())
    }

    fn forward_cached(&self, inputs: &[Vec<f64>]) -> ForwardCache {
        let mut layer_inputs: Vec<Vec<(usize, f64)>> = inputs.iter().map(|x| sparse(x)).collect();
        let mut layers = Vec::with_capacity(self.layers.len());
        let mut outputs: Vec<Vec<f64>> = Vec::new();
        for layer in &self.layers {
            let fwd = run_direction(&layer.forward, &layer_inputs, false);
            let bwd = run_direction(&layer.backward, &layer_inputs, true);
            outputs = fwd
                .iter()
                .zip(&bwd)
                .map(|(f, b)| f.h.iter().chain(&b.h).copied().collect())
                .collect();
            let next: Vec<Vec<(usize, f64)>> = outputs
                .iter()
                .map(|o| o.iter().copied().enumerate().collect())
                .collect();
            layers.push(LayerCache {
                inputs: std::mem::replace(&mut layer_inputs, next),
                fwd,
                bwd,
            });
        }
        let lambdas = outputs
            .iter()
            .map(|o| {
                (0..K)
                    .map(|j| self.projection_bias[j] + dot(self.projection.row(j), o))
                    .collect()
            })
            .collect();
        ForwardCache {
            layers,
            top: outputs,
            lambdas,
        }
    }

    /// Per-position label scores `lambda` (before the transition layer).
    pub fn bilstm_forward(&self, inputs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        self.check_inputs(inputs)?;
        Ok(self.forward_cached(inputs).lambdas)
    }

    /// Forward through the transition recurrence; returns the label
    /// distributions. With `use_transition` off every step selects the zero
    /// matrix.
    pub fn predict_probs(
        &self,
        inputs: &[Vec<f64>],
        steps: &[StepKind],
        use_transition: bool,
    ) -> Result<Vec<Vec<f64>>> {
        let lambdas = self.bilstm_forward(inputs)?;
        if steps.len() != lambdas.len() {
            return Err(Error::Length {
                expected: lambdas.len(),
                actual: steps.len(),
            });
        }
        Ok(transition_forward(&self.transitions, &lambdas, steps, use_transition))
    }

    /// Mean per-position cross-entropy of the post-transition distribution
    /// against `gold` (fingers 1..=5), and its gradient for every parameter.
    pub fn loss_and_gradients(
        &self,
        inputs: &[Vec<f64>],
        steps: &[StepKind],
        gold: &[u8],
        use_transition: bool,
    ) -> Result<(f64, ModelParams)> {
        self.check_inputs(inputs)?;
        let n = inputs.len();
        for len in [steps.len(), gold.len()] {
            if len != n {
                return Err(Error::Length {
                    expected: n,
                    actual: len,
                });
            }
        }
        if let Some(&bad) = gold.iter().find(|&&g| !(1..=K as u8).contains(&g)) {
            return Err(Error::Label { label: bad, k: K });
        }

        let cache = self.forward_cached(inputs);
        let probs = transition_forward(&self.transitions, &cache.lambdas, steps, use_transition);
        let scale = 1.0 / n as f64;
        let loss = -probs
            .iter()
            .zip(gold)
            .map(|(p, &g)| p[g as usize - 1].ln())
            .sum::<f64>()
            * scale;
        if !loss.is_finite() {
            return Err(Error::NonFinite("loss".into()));
        }

        let mut grads = self.zeros_like();

        // Transition layer, newest position first.
        let mut d_lambda = vec![vec![0.0; K]; n];
        let mut carry = [0.0; K];
        for t in (0..n).rev() {
            let p = &probs[t];
            let u_dot_p: f64 = carry.iter().zip(p).map(|(u, q)| u * q).sum();
            let mut g = [0.0; K];
            for j in 0..K {
                let gold_ind = if j + 1 == gold[t] as usize { 1.0 } else { 0.0 };
                g[j] = (p[j] - gold_ind) * scale + p[j] * (carry[j] - u_dot_p);
            }
            d_lambda[t].copy_from_slice(&g);
            carry = [0.0; K];
            if t > 0 {
                let sel = selection(steps[t], use_transition);
                if let (Some(w), Some(gw)) = (
                    self.transitions.select(sel),
                    grads.transitions.select_mut(sel),
                ) {
                    let prev = &probs[t - 1];
                    for i in 0..K {
                        for j in 0..K {
                            gw.data[i * K + j] += prev[i] * g[j];
                        }
                        carry[i] = (0..K).map(|j| w.get(i, j) * g[j]).sum();
                    }
                }
            }
        }

        // Output projection.
        let width = 2 * self.hidden_size;
        let mut d_top = vec![vec![0.0; width]; n];
        for t in 0..n {
            for j in 0..K {
                let d = d_lambda[t][j];
                grads.projection_bias[j] += d;
                let grow = grads.projection.row_mut(j);
                for (gv, ov) in grow.iter_mut().zip(&cache.top[t]) {
                    *gv += d * ov;
                }
            }
            d_top[t] = self.projection.matvec_t(&d_lambda[t]);
        }

        // Stacked bidirectional layers, top down.
        let h = self.hidden_size;
        for (l, (layer, lc)) in self.layers.iter().zip(&cache.layers).enumerate().rev() {
            let dh_fwd: Vec<Vec<f64>> = d_top.iter().map(|d| d[..h].to_vec()).collect();
            let dh_bwd: Vec<Vec<f64>> = d_top.iter().map(|d| d[h..].to_vec()).collect();
            let input_dim = (l > 0).then_some(2 * h);
            let gl = &mut grads.layers[l];
            let dx_f = backward_direction(
                &layer.forward,
                &lc.inputs,
                &lc.fwd,
                &dh_fwd,
                false,
                &mut gl.forward,
                input_dim,
            );
            let dx_b = backward_direction(
                &layer.backward,
                &lc.inputs,
                &lc.bwd,
                &dh_bwd,
                true,
                &mut gl.backward,
                input_dim,
            );
            if let (Some(a), Some(b)) = (dx_f, dx_b) {
                d_top = a
                    .into_iter()
                    .zip(b)
                    .map(|(x, y)| x.iter().zip(&y).map(|(p, q)| p + q).collect())
                    .collect();
            }
        }
        Ok((loss, grads))
    }
}

struct LayerCache {
    inputs: Vec<Vec<(usize, f64)>>,
    fwd: Vec<StepCache>,
    bwd: Vec<StepCache>,
}

struct ForwardCache {
    layers: Vec<LayerCache>,
    top: Vec<Vec<f64>>,
    lambdas: Vec<Vec<f64>>,
}

fn selection(step: StepKind, use_transition: bool) -> Selection {
    if use_transition {
        step.into()
    } else {
        Selection::Zero
    }
}

fn transition_forward(
    matrices: &TransitionMatrices,
    lambdas: &[Vec<f64>],
    steps: &[StepKind],
    use_transition: bool,
) -> Vec<Vec<f64>> {
    let mut probs: Vec<Vec<f64>> = Vec::with_capacity(lambdas.len());
    for (t, lambda) in lambdas.iter().enumerate() {
        let scores = match probs.last() {
            None => lambda.clone(),
            Some(prev) => {
                transition_scores(matrices.select(selection(steps[t], use_transition)), prev, lambda)
            }
        };
        probs.push(softmax(&scores));
    }
    probs
}
