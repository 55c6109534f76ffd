//! A single LSTM building block: gated forward step and its exact analytic
//! backward pass.
//!
//! Gate equations, with `z = [h_{t-1}; x_t]` (hidden state first, then the
//! step input — this order is fixed so weight layouts stay reproducible):
//!
//! ```text
//! f_t = sigmoid(W_f z + b_f)          forget gate
//! i_t = sigmoid(W_i z + b_i)          input gate
//! cb_t = tanh(W_c z + b_c)            candidate cell
//! C_t = f_t .* C_{t-1} + i_t .* cb_t
//! o_t = sigmoid(W_o z + b_o)          output gate
//! h_t = o_t .* tanh(C_t)
//! ```
//!
//! The forward step caches an explicit tape instead of recomputing
//! activations during backward.

use crate::error::{Error, Result};
use crate::linalg::{affine, concat, sigmoid, Matrix, Vector};

/// Weights and biases of the four gates. Each matrix is `h x (h + d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub w_f: Matrix,
    pub w_i: Matrix,
    pub w_c: Matrix,
    pub w_o: Matrix,
    pub b_f: Vector,
    pub b_i: Vector,
    pub b_c: Vector,
    pub b_o: Vector,
    hidden: usize,
    input: usize,
}

impl LstmParams {
    pub fn zeros(hidden: usize, input: usize) -> Self {
        let m = || Matrix::zeros(hidden, hidden + input);
        let b = || Vector::zeros(hidden);
        LstmParams {
            w_f: m(),
            w_i: m(),
            w_c: m(),
            w_o: m(),
            b_f: b(),
            b_i: b(),
            b_c: b(),
            b_o: b(),
            hidden,
            input,
        }
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn input(&self) -> usize {
        self.input
    }

    pub fn param_count(&self) -> usize {
        4 * (self.hidden * (self.hidden + self.input) + self.hidden)
    }

    /// Tensors in flattening order: W_f, W_i, W_c, W_o, b_f, b_i, b_c, b_o.
    pub fn tensors(&self) -> [TensorRef<'_>; 8] {
        [
            TensorRef::Mat(&self.w_f),
            TensorRef::Mat(&self.w_i),
            TensorRef::Mat(&self.w_c),
            TensorRef::Mat(&self.w_o),
            TensorRef::Vec(&self.b_f),
            TensorRef::Vec(&self.b_i),
            TensorRef::Vec(&self.b_c),
            TensorRef::Vec(&self.b_o),
        ]
    }

    pub fn tensors_mut(&mut self) -> [TensorMut<'_>; 8] {
        [
            TensorMut::Mat(&mut self.w_f),
            TensorMut::Mat(&mut self.w_i),
            TensorMut::Mat(&mut self.w_c),
            TensorMut::Mat(&mut self.w_o),
            TensorMut::Vec(&mut self.b_f),
            TensorMut::Vec(&mut self.b_i),
            TensorMut::Vec(&mut self.b_c),
            TensorMut::Vec(&mut self.b_o),
        ]
    }
}

/// Borrowed view of a parameter tensor, used by the flatteners.
pub enum TensorRef<'a> {
    Mat(&'a Matrix),
    Vec(&'a Vector),
}

pub enum TensorMut<'a> {
    Mat(&'a mut Matrix),
    Vec(&'a mut Vector),
}

impl TensorRef<'_> {
    pub fn values(&self) -> &[f64] {
        match self {
            TensorRef::Mat(m) => m.data(),
            TensorRef::Vec(v) => v.as_slice(),
        }
    }
}

impl TensorMut<'_> {
    pub fn values_mut(&mut self) -> &mut [f64] {
        match self {
            TensorMut::Mat(m) => m.data_mut(),
            TensorMut::Vec(v) => v.as_mut_slice(),
        }
    }
}

/// Recurrent state carried between steps. Both vectors have dim `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vector,
    pub c: Vector,
}

impl LstmState {
    /// h_0 = C_0 = 0, the conventional initial state.
    pub fn zeros(hidden: usize) -> Self {
        LstmState {
            h: Vector::zeros(hidden),
            c: Vector::zeros(hidden),
        }
    }
}

/// Everything the backward pass needs from one forward step.
#[derive(Debug, Clone)]
pub struct LstmStepTape {
    pub x: Vector,
    pub h_prev: Vector,
    pub c_prev: Vector,
    pub f: Vector,
    pub i: Vector,
    pub c_bar: Vector,
    pub c: Vector,
    pub o: Vector,
}

/// Gradients with respect to every tensor in [`LstmParams`].
pub type LstmGrads = LstmParams;

fn check_step_dims(x: &Vector, prev: &LstmState, p: &LstmParams) -> Result<()> {
    if x.dim() != p.input || prev.h.dim() != p.hidden || prev.c.dim() != p.hidden {
        return Err(Error::dims(
            "lstm_step",
            format!(
                "params expect input {} / hidden {}, got x dim {}, h dim {}, c dim {}",
                p.input,
                p.hidden,
                x.dim(),
                prev.h.dim(),
                prev.c.dim()
            ),
        ));
    }
    Ok(())
}

/// One forward step. Returns the new state and the tape for backward.
pub fn lstm_step(x: &Vector, prev: &LstmState, p: &LstmParams) -> Result<(LstmState, LstmStepTape)> {
    check_step_dims(x, prev, p)?;
    let z = concat(&prev.h, x);

    let f = sig_vec(&affine(&p.w_f, &z, &p.b_f)?);
    let i = sig_vec(&affine(&p.w_i, &z, &p.b_i)?);
    let c_bar = tanh_vec(&affine(&p.w_c, &z, &p.b_c)?);
    let o = sig_vec(&affine(&p.w_o, &z, &p.b_o)?);

    let mut c = Vector::zeros(p.hidden);
    for j in 0..p.hidden {
        c[j] = f[j] * prev.c[j] + i[j] * c_bar[j];
    }
    let mut h = Vector::zeros(p.hidden);
    for j in 0..p.hidden {
        h[j] = o[j] * c[j].tanh();
    }

    let tape = LstmStepTape {
        x: x.clone(),
        h_prev: prev.h.clone(),
        c_prev: prev.c.clone(),
        f,
        i,
        c_bar,
        c: c.clone(),
        o,
    };
    Ok((LstmState { h, c }, tape))
}

fn sig_vec(v: &Vector) -> Vector {
    Vector::from_vec(v.iter().map(|&x| sigmoid(x)).collect())
}

fn tanh_vec(v: &Vector) -> Vector {
    Vector::from_vec(v.iter().map(|&x| x.tanh()).collect())
}

/// Exact gradients of one step.
///
/// `dh` and `dc` are the loss gradients flowing into `h_t` and `C_t`.
/// Returns `(param grads, dL/dx_t, dL/dh_{t-1}, dL/dC_{t-1})`.
pub fn lstm_step_backward(
    tape: &LstmStepTape,
    dh: &Vector,
    dc: &Vector,
    p: &LstmParams,
) -> Result<(LstmGrads, Vector, Vector, Vector)> {
    let mut grads = LstmGrads::zeros(p.hidden, p.input);
    let (dx, dh_prev, dc_prev) = lstm_step_backward_into(tape, dh, dc, p, &mut grads)?;
    Ok((grads, dx, dh_prev, dc_prev))
}

/// Same as [`lstm_step_backward`] but accumulates parameter gradients into
/// `grads`, so BPTT over a sequence reuses one accumulator.
pub fn lstm_step_backward_into(
    tape: &LstmStepTape,
    dh: &Vector,
    dc: &Vector,
    p: &LstmParams,
    grads: &mut LstmGrads,
) -> Result<(Vector, Vector, Vector)> {
    let h = p.hidden;
    if dh.dim() != h || dc.dim() != h || tape.x.dim() != p.input || tape.h_prev.dim() != h {
        return Err(Error::dims(
            "lstm_step_backward",
            format!(
                "expected hidden {} / input {}, got dh {}, dc {}, tape x {}, tape h {}",
                h,
                p.input,
                dh.dim(),
                dc.dim(),
                tape.x.dim(),
                tape.h_prev.dim()
            ),
        ));
    }

    let z = concat(&tape.h_prev, &tape.x);

    // Pre-activation gate gradients.
    let mut df_pre = Vector::zeros(h);
    let mut di_pre = Vector::zeros(h);
    let mut dcb_pre = Vector::zeros(h);
    let mut do_pre = Vector::zeros(h);
    let mut dc_prev = Vector::zeros(h);

    for j in 0..h {
        let tc = tape.c[j].tanh();
        let dct = dc[j] + dh[j] * tape.o[j] * (1.0 - tc * tc);
        do_pre[j] = dh[j] * tc * tape.o[j] * (1.0 - tape.o[j]);
        df_pre[j] = dct * tape.c_prev[j] * tape.f[j] * (1.0 - tape.f[j]);
        di_pre[j] = dct * tape.c_bar[j] * tape.i[j] * (1.0 - tape.i[j]);
        dcb_pre[j] = dct * tape.i[j] * (1.0 - tape.c_bar[j] * tape.c_bar[j]);
        dc_prev[j] = dct * tape.f[j];
    }

    grads.w_f.add_outer(&df_pre, &z);
    grads.w_i.add_outer(&di_pre, &z);
    grads.w_c.add_outer(&dcb_pre, &z);
    grads.w_o.add_outer(&do_pre, &z);
    grads.b_f.add_assign(&df_pre);
    grads.b_i.add_assign(&di_pre);
    grads.b_c.add_assign(&dcb_pre);
    grads.b_o.add_assign(&do_pre);

    let mut dz = p.w_f.tmul_vec(&df_pre);
    dz.add_assign(&p.w_i.tmul_vec(&di_pre));
    dz.add_assign(&p.w_c.tmul_vec(&dcb_pre));
    dz.add_assign(&p.w_o.tmul_vec(&do_pre));

    let dh_prev = Vector::from_vec(dz.as_slice()[..h].to_vec());
    let dx = Vector::from_vec(dz.as_slice()[h..].to_vec());
    Ok((dx, dh_prev, dc_prev))
}
