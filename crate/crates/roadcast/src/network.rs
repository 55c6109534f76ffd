//! The full forecasting models: a 5-step LSTM encoder whose inputs are the
//! lagged (volume, speed) pairs concatenated with the shared exogenous
//! vector, followed by either an attention block (the attention variant) or
//! a learned projection of the last hidden state (the plain baseline), and a
//! two-neuron sigmoid output head that emits the normalized next-interval
//! volume and speed.
//!
//! Parameter flattening order (fixed so checkpoints, Adam state, and
//! finite-difference checks index consistently):
//!
//! 1. LSTM: W_f, W_i, W_c, W_o (row-major), b_f, b_i, b_c, b_o
//! 2. attention: W_h, W_s, b_a, v_a, V_out, b_v
//!    -- or plain path: P, b_p
//! 3. head: H (2 x p), b_h (2)
//!
//! Initialization draws each weight tensor elementwise in this same order
//! from uniform [-s, s] with s = sqrt(1/fan_in) (fan_in = the dim the tensor
//! contracts against); biases start at zero.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attention::{attention_backward, attention_forward, AttentionCache, AttentionOut, AttentionParams};
use crate::error::{Error, Result};
use crate::features::EncodingMode;
use crate::linalg::{affine, sigmoid, Matrix, Vector};
use crate::lstm::{lstm_step, lstm_step_backward_into, LstmParams, LstmState, LstmStepTape, TensorMut, TensorRef};

/// Number of lagged (volume, speed) steps per window.
pub const LAG_STEPS: usize = 5;

/// Number of output neurons (volume, speed).
pub const OUTPUTS: usize = 2;

/// Which architecture sits between the encoder and the head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lstm,
    ALstm,
}

impl ModelKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "lstm" => Ok(ModelKind::Lstm),
            "alstm" | "a-lstm" => Ok(ModelKind::ALstm),
            other => Err(Error::InvalidArgument(format!(
                "unknown model '{other}' (expected lstm or alstm)"
            ))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Lstm => "lstm",
            ModelKind::ALstm => "alstm",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// One trainable configuration: architecture, feature encoding, and the
/// temporal aggregation of the series it consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelVariant {
    pub kind: ModelKind,
    pub encoding: EncodingMode,
    pub interval_minutes: u32,
}

impl ModelVariant {
    pub fn new(kind: ModelKind, encoding: EncodingMode, interval_minutes: u32) -> Result<Self> {
        if ![5, 15, 30].contains(&interval_minutes) {
            return Err(Error::InvalidArgument(format!(
                "interval must be 5, 15, or 30 minutes, got {interval_minutes}"
            )));
        }
        Ok(ModelVariant {
            kind,
            encoding,
            interval_minutes,
        })
    }
}

/// Layer widths. Defaults: hidden 20 (the attended output lives in R^20 and
/// the head has two neurons), attention inner width 8, attended output 20.
/// Tests shrink these to keep finite-difference checks fast.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub hidden: usize,
    pub attn_inner: usize,
    pub attn_out: usize,
    pub exo_dim: usize,
}

impl ModelDims {
    pub fn for_encoding(mode: EncodingMode) -> Self {
        ModelDims {
            hidden: 20,
            attn_inner: 8,
            attn_out: 20,
            exo_dim: mode.exo_dim(),
        }
    }

    /// Per-step LSTM input width: one lag pair plus the exo vector.
    pub fn step_input(&self) -> usize {
        2 + self.exo_dim
    }
}

/// Model input: five lagged (volume, speed) pairs, the exogenous vector of
/// the predicted interval, and the normalized target pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceWindow {
    /// Oldest first: lags[0] = Y_{t-5} .. lags[4] = Y_{t-1}; normalized.
    pub lags: [[f64; 2]; LAG_STEPS],
    pub exo: Vector,
    /// Normalized (V_t, S_t).
    pub target: [f64; 2],
}

/// Either the attention block or the baseline projection.
#[derive(Debug, Clone, PartialEq)]
pub enum Mechanism {
    Attention(AttentionParams),
    /// y = tanh(P h_L + b); keeps the head shared between variants so they
    /// differ only in the mechanism under test.
    Projection { w: Matrix, b: Vector },
}

/// All trainable tensors of one model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub dims: ModelDims,
    pub lstm: LstmParams,
    pub mechanism: Mechanism,
    /// 2 x attn_out.
    pub head_w: Matrix,
    pub head_b: Vector,
}

/// Gradients use the same container as the parameters.
pub type ModelGrads = ModelParams;

impl ModelParams {
    pub fn kind(&self) -> ModelKind {
        match self.mechanism {
            Mechanism::Attention(_) => ModelKind::ALstm,
            Mechanism::Projection { .. } => ModelKind::Lstm,
        }
    }

    pub fn zeros(kind: ModelKind, dims: ModelDims) -> Self {
        let mechanism = match kind {
            ModelKind::ALstm => Mechanism::Attention(AttentionParams::zeros(
                dims.attn_inner,
                dims.hidden,
                dims.hidden,
                dims.attn_out,
            )),
            ModelKind::Lstm => Mechanism::Projection {
                w: Matrix::zeros(dims.attn_out, dims.hidden),
                b: Vector::zeros(dims.attn_out),
            },
        };
        ModelParams {
            dims,
            lstm: LstmParams::zeros(dims.hidden, dims.step_input()),
            mechanism,
            head_w: Matrix::zeros(OUTPUTS, dims.attn_out),
            head_b: Vector::zeros(OUTPUTS),
        }
    }

    /// Seeded initialization; bit-identical across runs for the same inputs.
    pub fn init(kind: ModelKind, dims: ModelDims, seed: u64) -> Self {
        let mut p = Self::zeros(kind, dims);
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        for (t, fan_in) in p.weight_tensors_mut() {
            let s = (1.0 / fan_in as f64).sqrt();
            match t {
                TensorMut::Mat(m) => {
                    for v in m.data_mut() {
                        *v = rng.gen_range(-s..=s);
                    }
                }
                TensorMut::Vec(v) => {
                    for x in v.as_mut_slice() {
                        *x = rng.gen_range(-s..=s);
                    }
                }
            }
        }
        p
    }

    /// Weight tensors (not biases) with their fan-in, in flattening order.
    fn weight_tensors_mut(&mut self) -> Vec<(TensorMut<'_>, usize)> {
        let step_in = self.dims.hidden + self.dims.step_input();
        let mut out = vec![
            (TensorMut::Mat(&mut self.lstm.w_f), step_in),
            (TensorMut::Mat(&mut self.lstm.w_i), step_in),
            (TensorMut::Mat(&mut self.lstm.w_c), step_in),
            (TensorMut::Mat(&mut self.lstm.w_o), step_in),
        ];
        match &mut self.mechanism {
            Mechanism::Attention(a) => {
                out.push((TensorMut::Mat(&mut a.w_h), self.dims.hidden));
                out.push((TensorMut::Mat(&mut a.w_s), self.dims.hidden));
                out.push((TensorMut::Vec(&mut a.v_a), self.dims.attn_inner));
                out.push((TensorMut::Mat(&mut a.v_out), self.dims.hidden));
            }
            Mechanism::Projection { w, .. } => {
                out.push((TensorMut::Mat(w), self.dims.hidden));
            }
        }
        out.push((TensorMut::Mat(&mut self.head_w), self.dims.attn_out));
        out
    }

    /// Every tensor in flattening order.
    pub fn tensors(&self) -> Vec<TensorRef<'_>> {
        let mut out: Vec<TensorRef<'_>> = self.lstm.tensors().into_iter().collect();
        match &self.mechanism {
            Mechanism::Attention(a) => out.extend(a.tensors()),
            Mechanism::Projection { w, b } => {
                out.push(TensorRef::Mat(w));
                out.push(TensorRef::Vec(b));
            }
        }
        out.push(TensorRef::Mat(&self.head_w));
        out.push(TensorRef::Vec(&self.head_b));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<TensorMut<'_>> {
        let mut out: Vec<TensorMut<'_>> = self.lstm.tensors_mut().into_iter().collect();
        match &mut self.mechanism {
            Mechanism::Attention(a) => out.extend(a.tensors_mut()),
            Mechanism::Projection { w, b } => {
                out.push(TensorMut::Mat(w));
                out.push(TensorMut::Vec(b));
            }
        }
        out.push(TensorMut::Mat(&mut self.head_w));
        out.push(TensorMut::Vec(&mut self.head_b));
        out
    }

    /// Exact count of trainable scalars; logged at training start.
    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.values().len()).sum()
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for t in self.tensors() {
            out.extend_from_slice(t.values());
        }
        out
    }

    pub fn copy_from_flat(&mut self, flat: &[f64]) -> Result<()> {
        let expected = self.param_count();
        if flat.len() != expected {
            return Err(Error::dims(
                "copy_from_flat",
                format!("expected {expected} values, got {}", flat.len()),
            ));
        }
        let mut offset = 0;
        for mut t in self.tensors_mut() {
            let dst = t.values_mut();
            dst.copy_from_slice(&flat[offset..offset + dst.len()]);
            offset += dst.len();
        }
        Ok(())
    }

    pub fn from_flat(kind: ModelKind, dims: ModelDims, flat: &[f64]) -> Result<Self> {
        let mut p = Self::zeros(kind, dims);
        p.copy_from_flat(flat)?;
        Ok(p)
    }

    /// Adds every gradient tensor of `other` into `self` (accumulation
    /// across a batch, summed in window index order for determinism).
    pub fn accumulate(&mut self, other: &ModelParams) {
        for (mut a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.values_mut().iter_mut().zip(b.values()) {
                *x += y;
            }
        }
    }
}

/// Shorthand used by callers that think in terms of a [`ModelVariant`]:
/// default dims for the variant's encoding, seeded init.
pub fn init_params(variant: ModelVariant, seed: u64) -> ModelParams {
    ModelParams::init(variant.kind, ModelDims::for_encoding(variant.encoding), seed)
}

enum MechanismTape {
    Attention {
        out: AttentionOut,
        cache: AttentionCache,
    },
    Projection,
}

/// Everything backward needs from one forward pass.
pub struct ForwardTape {
    steps: Vec<LstmStepTape>,
    hiddens: Vec<Vector>,
    mech: MechanismTape,
    /// tanh-stage output feeding the head.
    feat: Vector,
    preds: [f64; 2],
    target: [f64; 2],
}

impl ForwardTape {
    pub fn preds(&self) -> [f64; 2] {
        self.preds
    }

    pub fn hiddens(&self) -> &[Vector] {
        &self.hiddens
    }
}

fn check_window(w: &SequenceWindow, dims: &ModelDims) -> Result<()> {
    if w.exo.dim() != dims.exo_dim {
        return Err(Error::dims(
            "forward",
            format!("window exo dim {} but model expects {}", w.exo.dim(), dims.exo_dim),
        ));
    }
    Ok(())
}

/// End-to-end forward pass for one window. Returns the normalized
/// predictions (each in (0,1)) and the tape for [`backward`].
pub fn forward(w: &SequenceWindow, p: &ModelParams) -> Result<([f64; 2], ForwardTape)> {
    check_window(w, &p.dims)?;
    let mut state = LstmState::zeros(p.dims.hidden);
    let mut steps = Vec::with_capacity(LAG_STEPS);
    let mut hiddens = Vec::with_capacity(LAG_STEPS);

    let mut x = vec![0.0; p.dims.step_input()];
    for lag in &w.lags {
        x[0] = lag[0];
        x[1] = lag[1];
        x[2..].copy_from_slice(w.exo.as_slice());
        let (next, tape) = lstm_step(&Vector::from_vec(x.clone()), &state, &p.lstm)?;
        steps.push(tape);
        hiddens.push(next.h.clone());
        state = next;
    }

    let (feat, mech) = match &p.mechanism {
        Mechanism::Attention(a) => {
            // Query: the final encoder hidden state.
            let (out, cache) = attention_forward(&state.h, &hiddens, a)?;
            (out.output.clone(), MechanismTape::Attention { out, cache })
        }
        Mechanism::Projection { w: proj, b } => {
            let mut y = affine(proj, &state.h, b)?;
            for v in y.as_mut_slice() {
                *v = v.tanh();
            }
            (y, MechanismTape::Projection)
        }
    };

    let logits = affine(&p.head_w, &feat, &p.head_b)?;
    let preds = [sigmoid(logits[0]), sigmoid(logits[1])];

    Ok((
        preds,
        ForwardTape {
            steps,
            hiddens,
            mech,
            feat,
            preds,
            target: w.target,
        },
    ))
}

/// Mean over all samples and both output components of squared error.
/// Reported externally as MSE x 1000.
pub fn mse_loss(preds: &[[f64; 2]], targets: &[[f64; 2]]) -> Result<f64> {
    if preds.is_empty() || preds.len() != targets.len() {
        return Err(Error::InvalidArgument(format!(
            "mse_loss: {} predictions vs {} targets",
            preds.len(),
            targets.len()
        )));
    }
    let mut acc = 0.0;
    for (p, t) in preds.iter().zip(targets) {
        let dv = p[0] - t[0];
        let ds = p[1] - t[1];
        acc += dv * dv + ds * ds;
    }
    Ok(acc / (2.0 * preds.len() as f64))
}

/// Gradient of this window's loss contribution,
/// `l = ((V - V*)^2 + (S - S*)^2) / 2`, with respect to every parameter;
/// accumulated into `grads`. The mean of these per-window gradients is the
/// batch-MSE gradient.
pub fn backward_into(tape: &ForwardTape, p: &ModelParams, grads: &mut ModelGrads) -> Result<()> {
    // Head: preds = sigmoid(H feat + b).
    let mut dlogits = Vector::zeros(OUTPUTS);
    for k in 0..OUTPUTS {
        let dpred = tape.preds[k] - tape.target[k];
        dlogits[k] = dpred * tape.preds[k] * (1.0 - tape.preds[k]);
    }
    grads.head_w.add_outer(&dlogits, &tape.feat);
    grads.head_b.add_assign(&dlogits);
    let dfeat = p.head_w.tmul_vec(&dlogits);

    let h = p.dims.hidden;
    let mut dh: Vec<Vector> = (0..LAG_STEPS).map(|_| Vector::zeros(h)).collect();

    match (&p.mechanism, &tape.mech, &mut grads.mechanism) {
        (
            Mechanism::Attention(a),
            MechanismTape::Attention { out, cache },
            Mechanism::Attention(ga),
        ) => {
            let query = &tape.hiddens[LAG_STEPS - 1];
            let (dh_attn, dquery) =
                attention_backward(query, &tape.hiddens, out, cache, a, &dfeat, ga)?;
            for (acc, d) in dh.iter_mut().zip(&dh_attn) {
                acc.add_assign(d);
            }
            dh[LAG_STEPS - 1].add_assign(&dquery);
        }
        (
            Mechanism::Projection { w: proj, .. },
            MechanismTape::Projection,
            Mechanism::Projection { w: gw, b: gb },
        ) => {
            // feat = tanh(P h_L + b).
            let mut dpre = Vector::zeros(tape.feat.dim());
            for j in 0..tape.feat.dim() {
                dpre[j] = dfeat[j] * (1.0 - tape.feat[j] * tape.feat[j]);
            }
            gw.add_outer(&dpre, &tape.hiddens[LAG_STEPS - 1]);
            gb.add_assign(&dpre);
            dh[LAG_STEPS - 1].add_assign(&proj.tmul_vec(&dpre));
        }
        _ => {
            return Err(Error::Internal(
                "mechanism mismatch between tape, params, and gradient container".into(),
            ))
        }
    }

    // Backpropagation through time over the five unrolled steps.
    let mut dh_next = Vector::zeros(h);
    let mut dc_next = Vector::zeros(h);
    for t in (0..LAG_STEPS).rev() {
        let mut dh_t = dh[t].clone();
        dh_t.add_assign(&dh_next);
        let (_dx, dh_prev, dc_prev) =
            lstm_step_backward_into(&tape.steps[t], &dh_t, &dc_next, &p.lstm, &mut grads.lstm)?;
        dh_next = dh_prev;
        dc_next = dc_prev;
    }
    Ok(())
}

/// Flattened gradient of one window's loss, aligned with the parameter
/// flattening order.
pub fn backward(tape: &ForwardTape, p: &ModelParams) -> Result<Vec<f64>> {
    let mut grads = ModelGrads::zeros(p.kind(), p.dims);
    backward_into(tape, p, &mut grads)?;
    Ok(grads.flatten())
}

/// Fixed work-unit size for parallel batch reductions. Partial sums are
/// combined in chunk order, so results do not depend on the thread count.
const BATCH_CHUNK: usize = 16;

/// Mean gradient and mean loss over a batch of windows (referenced through
/// `idx` into `windows`).
pub fn batch_gradient(
    windows: &[SequenceWindow],
    idx: &[usize],
    p: &ModelParams,
) -> Result<(Vec<f64>, f64)> {
    if idx.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let partials: Vec<Result<(ModelGrads, f64)>> = idx
        .par_chunks(BATCH_CHUNK)
        .map(|chunk| {
            let mut grads = ModelGrads::zeros(p.kind(), p.dims);
            let mut loss = 0.0;
            for &i in chunk {
                let w = &windows[i];
                let (preds, tape) = forward(w, p)?;
                let dv = preds[0] - w.target[0];
                let ds = preds[1] - w.target[1];
                loss += (dv * dv + ds * ds) / 2.0;
                backward_into(&tape, p, &mut grads)?;
            }
            Ok((grads, loss))
        })
        .collect();

    let mut total = ModelGrads::zeros(p.kind(), p.dims);
    let mut loss = 0.0;
    for part in partials {
        let (g, l) = part?;
        total.accumulate(&g);
        loss += l;
    }
    let scale = 1.0 / idx.len() as f64;
    let mut flat = total.flatten();
    for v in &mut flat {
        *v *= scale;
    }
    Ok((flat, loss * scale))
}

/// Batch MSE of the model over a window set (forward passes only).
pub fn batch_mse(windows: &[SequenceWindow], p: &ModelParams) -> Result<f64> {
    if windows.is_empty() {
        return Err(Error::InvalidArgument("empty window set".into()));
    }
    let partials: Vec<Result<f64>> = windows
        .par_chunks(BATCH_CHUNK)
        .map(|chunk| {
            let mut acc = 0.0;
            for w in chunk {
                let (preds, _) = forward(w, p)?;
                let dv = preds[0] - w.target[0];
                let ds = preds[1] - w.target[1];
                acc += dv * dv + ds * ds;
            }
            Ok(acc)
        })
        .collect();
    let mut total = 0.0;
    for part in partials {
        total += part?;
    }
    Ok(total / (2.0 * windows.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_dims(exo_dim: usize) -> ModelDims {
        ModelDims {
            hidden: 3,
            attn_inner: 2,
            attn_out: 3,
            exo_dim,
        }
    }

    fn window(exo_dim: usize, fill: f64) -> SequenceWindow {
        SequenceWindow {
            lags: [[0.2, 0.4], [0.3, 0.5], [0.4, 0.6], [0.5, 0.7], [0.6, 0.8]],
            exo: Vector::from_vec((0..exo_dim).map(|i| fill * (i as f64 + 1.0) / exo_dim as f64).collect()),
            target: [0.55, 0.35],
        }
    }

    #[test]
    fn zero_params_predict_half() {
        for kind in [ModelKind::Lstm, ModelKind::ALstm] {
            let p = ModelParams::zeros(kind, tiny_dims(4));
            let (preds, _) = forward(&window(4, 0.5), &p).unwrap();
            assert_eq!(preds, [0.5, 0.5]);
        }
    }

    #[test]
    fn init_is_deterministic_per_seed() {
        let dims = ModelDims::for_encoding(EncodingMode::Cyclic);
        let a = ModelParams::init(ModelKind::ALstm, dims, 7);
        let b = ModelParams::init(ModelKind::ALstm, dims, 7);
        assert_eq!(a.flatten(), b.flatten());
        let c = ModelParams::init(ModelKind::ALstm, dims, 8);
        assert_ne!(a.flatten(), c.flatten());
    }

    #[test]
    fn init_scale_bounds() {
        // fan_in for the gate matrices with cyclic encoding is h + d = 46.
        let dims = ModelDims::for_encoding(EncodingMode::Cyclic);
        assert_eq!(dims.hidden + dims.step_input(), 46);
        let p = ModelParams::init(ModelKind::ALstm, dims, 3);
        let s = (1.0f64 / 46.0).sqrt();
        assert!(p.lstm.w_f.data().iter().all(|v| v.abs() <= s));
        assert!(p.lstm.w_f.data().iter().any(|v| v.abs() > 0.5 * s));
        assert!(p.lstm.b_f.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn param_counts() {
        let dims = ModelDims::for_encoding(EncodingMode::Cyclic);
        let alstm = ModelParams::zeros(ModelKind::ALstm, dims);
        // LSTM cell alone: 4 * (20*46 + 20).
        assert_eq!(alstm.lstm.param_count(), 3760);
        // Head alone: 2*20 + 2.
        assert_eq!(alstm.head_w.len() + alstm.head_b.dim(), 42);
        // Attention block: Wh 8x20 + Ws 8x20 + b_a 8 + v_a 8 + Vout 20x20 + b_v 20.
        assert_eq!(alstm.param_count(), 3760 + 756 + 42);
        let lstm = ModelParams::zeros(ModelKind::Lstm, dims);
        assert_eq!(lstm.param_count(), 3760 + (400 + 20) + 42);
    }

    #[test]
    fn flatten_roundtrip() {
        let dims = tiny_dims(3);
        for kind in [ModelKind::Lstm, ModelKind::ALstm] {
            let p = ModelParams::init(kind, dims, 11);
            let flat = p.flatten();
            assert_eq!(flat.len(), p.param_count());
            let q = ModelParams::from_flat(kind, dims, &flat).unwrap();
            assert_eq!(p, q);
        }
    }

    #[test]
    fn forward_is_deterministic_and_bounded() {
        let dims = tiny_dims(4);
        let p = ModelParams::init(ModelKind::ALstm, dims, 5);
        let w = window(4, 0.8);
        let (a, _) = forward(&w, &p).unwrap();
        let (b, _) = forward(&w, &p).unwrap();
        assert_eq!(a, b);
        for v in a {
            assert!(v > 0.0 && v < 1.0);
        }
    }

    #[test]
    fn uniform_attention_equals_mean_context() {
        // Forcing v_a = 0 makes every score 0, the weights uniform, and the
        // context the arithmetic mean of the hidden states.
        let dims = tiny_dims(4);
        let mut p = ModelParams::init(ModelKind::ALstm, dims, 13);
        if let Mechanism::Attention(a) = &mut p.mechanism {
            a.v_a.fill(0.0);
        }
        let w = window(4, 0.3);
        let (preds, tape) = forward(&w, &p).unwrap();

        let mut mean_h = Vector::zeros(dims.hidden);
        for h in tape.hiddens() {
            mean_h.axpy(1.0 / LAG_STEPS as f64, h);
        }
        let a = match &p.mechanism {
            Mechanism::Attention(a) => a,
            _ => unreachable!(),
        };
        let mut feat = affine(&a.v_out, &mean_h, &a.b_v).unwrap();
        for v in feat.as_mut_slice() {
            *v = v.tanh();
        }
        let logits = affine(&p.head_w, &feat, &p.head_b).unwrap();
        let manual = [sigmoid(logits[0]), sigmoid(logits[1])];
        assert!((preds[0] - manual[0]).abs() < 1e-12);
        assert!((preds[1] - manual[1]).abs() < 1e-12);
    }

    #[test]
    fn mse_loss_examples() {
        let p = [[0.5, 0.5]];
        let t = [[0.0, 1.0]];
        assert_eq!(mse_loss(&p, &t).unwrap(), 0.25);
        assert_eq!(mse_loss(&p, &p).unwrap(), 0.0);
        assert!(mse_loss(&[], &[]).is_err());

        // Order invariance.
        let preds = [[0.1, 0.9], [0.4, 0.2], [0.7, 0.3]];
        let targets = [[0.0, 1.0], [0.5, 0.25], [0.65, 0.4]];
        let a = mse_loss(&preds, &targets).unwrap();
        let preds_r = [preds[2], preds[0], preds[1]];
        let targets_r = [targets[2], targets[0], targets[1]];
        assert!((a - mse_loss(&preds_r, &targets_r).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn zero_error_batch_has_zero_gradient() {
        let dims = tiny_dims(3);
        let p = ModelParams::init(ModelKind::ALstm, dims, 2);
        let mut w = window(3, 0.6);
        let (preds, _) = forward(&w, &p).unwrap();
        w.target = preds;
        let (tape_preds, tape) = forward(&w, &p).unwrap();
        assert_eq!(tape_preds, preds);
        let g = backward(&tape, &p).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn batch_gradient_is_mean_of_sample_gradients() {
        let dims = tiny_dims(3);
        for kind in [ModelKind::Lstm, ModelKind::ALstm] {
            let p = ModelParams::init(kind, dims, 4);
            let w1 = window(3, 0.2);
            let mut w2 = window(3, 0.9);
            w2.target = [0.2, 0.8];
            let windows = vec![w1.clone(), w2.clone()];
            let (batch, _) = batch_gradient(&windows, &[0, 1], &p).unwrap();

            let (_, t1) = forward(&w1, &p).unwrap();
            let (_, t2) = forward(&w2, &p).unwrap();
            let g1 = backward(&t1, &p).unwrap();
            let g2 = backward(&t2, &p).unwrap();
            for i in 0..batch.len() {
                let mean = (g1[i] + g2[i]) / 2.0;
                assert!(
                    (batch[i] - mean).abs() < 1e-10,
                    "{kind:?} grad {i}: {} vs {}",
                    batch[i],
                    mean
                );
            }
        }
    }

    #[test]
    fn window_dim_mismatch_rejected() {
        let p = ModelParams::zeros(ModelKind::Lstm, tiny_dims(4));
        let w = window(6, 0.5);
        assert!(forward(&w, &p).is_err());
    }
}
