//! Shared test machinery: scalar brute-force oracles written directly from
//! the layer equations (plain loops and `+=` accumulation, independent of
//! the vectorized implementation path), central finite differences, and a
//! two-pass Pearson correlation.
#![allow(dead_code)]

use roadcast::attention::AttentionParams;
use roadcast::linalg::{Matrix, Vector};
use roadcast::lstm::{LstmParams, TensorMut, TensorRef};

pub fn scalar_sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub struct ScalarLstmOut {
    pub f: Vec<f64>,
    pub i: Vec<f64>,
    pub c_bar: Vec<f64>,
    pub c: Vec<f64>,
    pub o: Vec<f64>,
    pub h: Vec<f64>,
}

/// One LSTM step computed with scalar loops straight from the gate
/// equations, with z = [h_prev; x].
pub fn scalar_lstm_step(x: &[f64], h_prev: &[f64], c_prev: &[f64], p: &LstmParams) -> ScalarLstmOut {
    let h = h_prev.len();
    let d = x.len();
    let mut z = Vec::with_capacity(h + d);
    z.extend_from_slice(h_prev);
    z.extend_from_slice(x);

    let pre = |w: &Matrix, b: &Vector| -> Vec<f64> {
        (0..h)
            .map(|j| {
                let mut acc = b[j];
                for (k, zk) in z.iter().enumerate() {
                    acc += w[(j, k)] * zk;
                }
                acc
            })
            .collect()
    };

    let f: Vec<f64> = pre(&p.w_f, &p.b_f).into_iter().map(scalar_sigmoid).collect();
    let i: Vec<f64> = pre(&p.w_i, &p.b_i).into_iter().map(scalar_sigmoid).collect();
    let c_bar: Vec<f64> = pre(&p.w_c, &p.b_c).into_iter().map(f64::tanh).collect();
    let o: Vec<f64> = pre(&p.w_o, &p.b_o).into_iter().map(scalar_sigmoid).collect();
    let c: Vec<f64> = (0..h).map(|j| f[j] * c_prev[j] + i[j] * c_bar[j]).collect();
    let hh: Vec<f64> = (0..h).map(|j| o[j] * c[j].tanh()).collect();
    ScalarLstmOut { f, i, c_bar, c, o, h: hh }
}

pub struct ScalarAttentionOut {
    pub scores: Vec<f64>,
    pub weights: Vec<f64>,
    pub context: Vec<f64>,
    pub output: Vec<f64>,
}

/// Additive attention computed with scalar loops: score network,
/// plain-summation softmax, weighted sum, tanh projection.
pub fn scalar_attention(query: &[f64], hiddens: &[Vec<f64>], p: &AttentionParams) -> ScalarAttentionOut {
    let l = hiddens.len();
    let m = p.b_a.dim();
    let hdim = hiddens[0].len();

    let mut scores = Vec::with_capacity(l);
    for hi in hiddens {
        let mut e = 0.0;
        for j in 0..m {
            let mut u = p.b_a[j];
            for (k, hv) in hi.iter().enumerate() {
                u += p.w_h[(j, k)] * hv;
            }
            for (k, qv) in query.iter().enumerate() {
                u += p.w_s[(j, k)] * qv;
            }
            e += p.v_a[j] * u.tanh();
        }
        scores.push(e);
    }

    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|e| (e - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    let weights: Vec<f64> = exps.iter().map(|e| e / sum).collect();

    let mut context = vec![0.0; hdim];
    for (w, hi) in weights.iter().zip(hiddens) {
        for (c, hv) in context.iter_mut().zip(hi) {
            *c += w * hv;
        }
    }

    let pdim = p.b_v.dim();
    let mut output = Vec::with_capacity(pdim);
    for j in 0..pdim {
        let mut a = p.b_v[j];
        for (k, cv) in context.iter().enumerate() {
            a += p.v_out[(j, k)] * cv;
        }
        output.push(a.tanh());
    }

    ScalarAttentionOut { scores, weights, context, output }
}

/// Independent scalar Adam recursion for a single parameter.
pub struct ScalarAdam {
    pub m: f64,
    pub v: f64,
    pub t: u32,
    pub lr: f64,
}

impl ScalarAdam {
    pub fn new(lr: f64) -> Self {
        ScalarAdam { m: 0.0, v: 0.0, t: 0, lr }
    }

    pub fn step(&mut self, theta: f64, g: f64) -> f64 {
        let (b1, b2, eps) = (0.9, 0.999, 1e-8);
        self.t += 1;
        self.m = b1 * self.m + (1.0 - b1) * g;
        self.v = b2 * self.v + (1.0 - b2) * g * g;
        let m_hat = self.m / (1.0 - b1.powi(self.t as i32));
        let v_hat = self.v / (1.0 - b2.powi(self.t as i32));
        theta - self.lr * m_hat / (v_hat.sqrt() + eps)
    }
}

/// Central finite differences of `f` at `x`.
pub fn central_diff(f: &mut dyn FnMut(&[f64]) -> f64, x: &[f64], eps: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    let mut buf = x.to_vec();
    for i in 0..x.len() {
        buf[i] = x[i] + eps;
        let up = f(&buf);
        buf[i] = x[i] - eps;
        let down = f(&buf);
        buf[i] = x[i];
        out.push((up - down) / (2.0 * eps));
    }
    out
}

/// Max relative error with denominator max(1, |numeric|).
pub fn max_rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / n.abs().max(1.0))
        .fold(0.0, f64::max)
}

pub fn flatten_tensors(tensors: &[TensorRef<'_>]) -> Vec<f64> {
    tensors.iter().flat_map(|t| t.values().to_vec()).collect()
}

pub fn load_tensors(tensors: &mut [TensorMut<'_>], flat: &[f64]) {
    let mut offset = 0;
    for t in tensors.iter_mut() {
        let dst = t.values_mut();
        dst.copy_from_slice(&flat[offset..offset + dst.len()]);
        offset += dst.len();
    }
    assert_eq!(offset, flat.len());
}

pub fn lstm_flatten(p: &LstmParams) -> Vec<f64> {
    flatten_tensors(&p.tensors())
}

pub fn lstm_from_flat(hidden: usize, input: usize, flat: &[f64]) -> LstmParams {
    let mut p = LstmParams::zeros(hidden, input);
    load_tensors(&mut p.tensors_mut(), flat);
    p
}

pub fn attention_flatten(p: &AttentionParams) -> Vec<f64> {
    flatten_tensors(&p.tensors())
}

pub fn attention_from_flat(inner: usize, hidden: usize, query: usize, out: usize, flat: &[f64]) -> AttentionParams {
    let mut p = AttentionParams::zeros(inner, hidden, query, out);
    load_tensors(&mut p.tensors_mut(), flat);
    p
}

/// Deterministic pseudo-random fill for test fixtures (not a library RNG on
/// purpose; the values just need to be fixed and non-degenerate).
pub fn wobble(seed: u64, k: usize) -> f64 {
    (((seed as f64) * 0.917 + k as f64 * 0.3137).sin() * 43_758.545).fract()
}

pub fn fill_lstm(p: &mut LstmParams, seed: u64, scale: f64) {
    for (ti, t) in p.tensors_mut().iter_mut().enumerate() {
        for (k, v) in t.values_mut().iter_mut().enumerate() {
            *v = (wobble(seed + ti as u64, k) - 0.5) * 2.0 * scale;
        }
    }
}

pub fn fill_attention(p: &mut AttentionParams, seed: u64, scale: f64) {
    for (ti, t) in p.tensors_mut().iter_mut().enumerate() {
        for (k, v) in t.values_mut().iter_mut().enumerate() {
            *v = (wobble(seed + 31 + ti as u64, k) - 0.5) * 2.0 * scale;
        }
    }
}

pub fn wobble_vec(seed: u64, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim).map(|k| (wobble(seed, k) - 0.5) * 2.0 * scale).collect()
}

/// Two-pass Pearson correlation (mean first, then moments).
pub fn pearson_two_pass(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Median of a small sample.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

pub fn vector(values: &[f64]) -> Vector {
    Vector::from_vec(values.to_vec())
}
