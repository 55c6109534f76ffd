//! Additive (Bahdanau-style) attention over a list of encoder hidden states:
//! alignment scores, softmax weights, context vector, and a tanh output
//! projection, with an exact analytic backward pass.
//!
//! ```text
//! e_i   = v_a . tanh(W_h h_i + W_s q + b_a)     alignment score
//! alpha = softmax(e)                            weights
//! r     = sum_i alpha_i h_i                     context vector
//! y     = tanh(V_out r + b_v)                   attended output
//! ```
//!
//! The score network is a single hidden layer of width `m` with bias; the
//! backward pass goes through the full softmax Jacobian, so every hidden
//! state receives gradient through both the value path (alpha_i h_i) and the
//! score path.

use crate::error::{Error, Result};
use crate::linalg::{affine, softmax, Matrix, Vector};
use crate::lstm::{TensorMut, TensorRef};

/// Alignment-network and output-projection weights.
///
/// `W_h` is `m x h`, `W_s` is `m x q`, `b_a` and `v_a` have dim `m`;
/// `V_out` is `p x h`, `b_v` has dim `p`. (`V_out` is a weight matrix, not a
/// traffic volume.)
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams {
    pub w_h: Matrix,
    pub w_s: Matrix,
    pub b_a: Vector,
    pub v_a: Vector,
    pub v_out: Matrix,
    pub b_v: Vector,
}

impl AttentionParams {
    /// `inner` is the score-network width m, `hidden` the encoder state dim,
    /// `query` the query dim, and `out` the attended output dim p.
    pub fn zeros(inner: usize, hidden: usize, query: usize, out: usize) -> Self {
        AttentionParams {
            w_h: Matrix::zeros(inner, hidden),
            w_s: Matrix::zeros(inner, query),
            b_a: Vector::zeros(inner),
            v_a: Vector::zeros(inner),
            v_out: Matrix::zeros(out, hidden),
            b_v: Vector::zeros(out),
        }
    }

    pub fn inner(&self) -> usize {
        self.b_a.dim()
    }

    pub fn out(&self) -> usize {
        self.b_v.dim()
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.values().len()).sum()
    }

    /// Tensors in flattening order: W_h, W_s, b_a, v_a, V_out, b_v.
    pub fn tensors(&self) -> [TensorRef<'_>; 6] {
        [
            TensorRef::Mat(&self.w_h),
            TensorRef::Mat(&self.w_s),
            TensorRef::Vec(&self.b_a),
            TensorRef::Vec(&self.v_a),
            TensorRef::Mat(&self.v_out),
            TensorRef::Vec(&self.b_v),
        ]
    }

    pub fn tensors_mut(&mut self) -> [TensorMut<'_>; 6] {
        [
            TensorMut::Mat(&mut self.w_h),
            TensorMut::Mat(&mut self.w_s),
            TensorMut::Vec(&mut self.b_a),
            TensorMut::Vec(&mut self.v_a),
            TensorMut::Mat(&mut self.v_out),
            TensorMut::Vec(&mut self.b_v),
        ]
    }
}

/// Gradients use the same container as the parameters.
pub type AttentionGrads = AttentionParams;

/// All forward quantities of one attention application.
#[derive(Debug, Clone)]
pub struct AttentionOut {
    /// Alignment scores e, dim L.
    pub scores: Vector,
    /// Softmax weights alpha, dim L; sums to 1.
    pub weights: Vector,
    /// Context vector r, dim h; lies in the convex hull of the hidden states.
    pub context: Vector,
    /// Attended output y = tanh(V_out r + b_v), dim p.
    pub output: Vector,
}

/// Tanh-layer activations cached for the backward pass.
#[derive(Debug, Clone)]
pub struct AttentionCache {
    /// tanh(W_h h_i + W_s q + b_a) for each position i.
    pub inner: Vec<Vector>,
}

fn check_hiddens(op: &'static str, hiddens: &[Vector]) -> Result<()> {
    if hiddens.is_empty() {
        return Err(Error::InvalidArgument(format!("{op}: empty hidden-state list")));
    }
    let h = hiddens[0].dim();
    if hiddens.iter().any(|v| v.dim() != h) {
        return Err(Error::dims(op, "hidden states differ in dim".to_string()));
    }
    Ok(())
}

/// Alignment scores e_i = v_a . tanh(W_h h_i + W_s q + b_a) for i = 1..L.
pub fn align(query: &Vector, hiddens: &[Vector], p: &AttentionParams) -> Result<Vector> {
    Ok(align_cached(query, hiddens, p)?.0)
}

fn align_cached(query: &Vector, hiddens: &[Vector], p: &AttentionParams) -> Result<(Vector, AttentionCache)> {
    check_hiddens("align", hiddens)?;
    let wq = affine(&p.w_s, query, &p.b_a)?;
    let mut scores = Vector::zeros(hiddens.len());
    let mut inner = Vec::with_capacity(hiddens.len());
    for (i, hi) in hiddens.iter().enumerate() {
        let mut u = affine(&p.w_h, hi, &wq)?;
        for v in u.as_mut_slice() {
            *v = v.tanh();
        }
        scores[i] = p.v_a.dot(&u);
        inner.push(u);
    }
    Ok((scores, AttentionCache { inner }))
}

/// Softmax the scores and take the weighted sum of the hidden states.
/// Returns `(weights alpha, context r)`.
pub fn attend(scores: &Vector, hiddens: &[Vector]) -> Result<(Vector, Vector)> {
    check_hiddens("attend", hiddens)?;
    if scores.dim() != hiddens.len() {
        return Err(Error::dims(
            "attend",
            format!("{} scores for {} hidden states", scores.dim(), hiddens.len()),
        ));
    }
    let weights = softmax(scores)?;
    let mut context = Vector::zeros(hiddens[0].dim());
    for (i, hi) in hiddens.iter().enumerate() {
        context.axpy(weights[i], hi);
    }
    Ok((weights, context))
}

/// y = tanh(V_out r + b_v).
pub fn attention_output(context: &Vector, p: &AttentionParams) -> Result<Vector> {
    let mut y = affine(&p.v_out, context, &p.b_v)?;
    for v in y.as_mut_slice() {
        *v = v.tanh();
    }
    Ok(y)
}

/// Full forward pass: scores, weights, context, output, plus the cache
/// needed by [`attention_backward`].
pub fn attention_forward(
    query: &Vector,
    hiddens: &[Vector],
    p: &AttentionParams,
) -> Result<(AttentionOut, AttentionCache)> {
    let (scores, cache) = align_cached(query, hiddens, p)?;
    let (weights, context) = attend(&scores, hiddens)?;
    let output = attention_output(&context, p)?;
    Ok((
        AttentionOut {
            scores,
            weights,
            context,
            output,
        },
        cache,
    ))
}

/// Exact gradients of the attention block.
///
/// `dy` is the loss gradient on the output y. Returns the parameter
/// gradients, the gradient w.r.t. each hidden state, and the gradient
/// w.r.t. the query. Parameter gradients accumulate into `grads`.
pub fn attention_backward(
    query: &Vector,
    hiddens: &[Vector],
    out: &AttentionOut,
    cache: &AttentionCache,
    p: &AttentionParams,
    dy: &Vector,
    grads: &mut AttentionGrads,
) -> Result<(Vec<Vector>, Vector)> {
    check_hiddens("attention_backward", hiddens)?;
    let l = hiddens.len();
    if dy.dim() != p.out() || cache.inner.len() != l || out.weights.dim() != l {
        return Err(Error::dims(
            "attention_backward",
            format!(
                "dy dim {} (out dim {}), cache len {}, weights len {}, hiddens len {}",
                dy.dim(),
                p.out(),
                cache.inner.len(),
                out.weights.dim(),
                l
            ),
        ));
    }

    // Output projection: y = tanh(a), a = V_out r + b_v.
    let mut da = Vector::zeros(dy.dim());
    for j in 0..dy.dim() {
        da[j] = dy[j] * (1.0 - out.output[j] * out.output[j]);
    }
    grads.v_out.add_outer(&da, &out.context);
    grads.b_v.add_assign(&da);
    let dr = p.v_out.tmul_vec(&da);

    // Context r = sum_i alpha_i h_i.
    let mut dh: Vec<Vector> = (0..l).map(|_| Vector::zeros(hiddens[0].dim())).collect();
    let mut dalpha = Vector::zeros(l);
    for i in 0..l {
        dalpha[i] = dr.dot(&hiddens[i]);
        dh[i].axpy(out.weights[i], &dr);
    }

    // Softmax Jacobian: de_i = alpha_i (dalpha_i - sum_j alpha_j dalpha_j).
    let inner_sum: f64 = (0..l).map(|j| out.weights[j] * dalpha[j]).sum();
    let mut de = Vector::zeros(l);
    for i in 0..l {
        de[i] = out.weights[i] * (dalpha[i] - inner_sum);
    }

    // Score network: e_i = v_a . t_i with t_i = tanh(u_i).
    let mut dquery = Vector::zeros(query.dim());
    for i in 0..l {
        let t = &cache.inner[i];
        grads.v_a.axpy(de[i], t);
        let mut du = Vector::zeros(t.dim());
        for j in 0..t.dim() {
            du[j] = de[i] * p.v_a[j] * (1.0 - t[j] * t[j]);
        }
        grads.w_h.add_outer(&du, &hiddens[i]);
        grads.w_s.add_outer(&du, query);
        grads.b_a.add_assign(&du);
        dh[i].add_assign(&p.w_h.tmul_vec(&du));
        dquery.add_assign(&p.w_s.tmul_vec(&du));
    }

    Ok((dh, dquery))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seeded_params(inner: usize, hidden: usize, query: usize, out: usize) -> AttentionParams {
        let mut p = AttentionParams::zeros(inner, hidden, query, out);
        let mut k = 0usize;
        for t in p.tensors_mut().iter_mut() {
            for v in t.values_mut() {
                *v = ((k as f64) * 0.713).sin() * 0.6;
                k += 1;
            }
        }
        p
    }

    fn vecs(rows: &[&[f64]]) -> Vec<Vector> {
        rows.iter().map(|r| Vector::from_vec(r.to_vec())).collect()
    }

    #[test]
    fn zero_score_vector_gives_zero_scores() {
        let mut p = seeded_params(2, 2, 2, 2);
        p.v_a.fill(0.0);
        let hiddens = vecs(&[&[0.3, -0.2], &[1.0, 0.7], &[-0.4, 0.1]]);
        let q = Vector::from_vec(vec![0.5, 0.5]);
        let e = align(&q, &hiddens, &p).unwrap();
        assert!(e.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identical_hiddens_get_identical_scores() {
        let p = seeded_params(3, 2, 2, 2);
        let hiddens = vecs(&[&[0.3, -0.2], &[0.3, -0.2]]);
        let q = Vector::from_vec(vec![-0.1, 0.9]);
        let e = align(&q, &hiddens, &p).unwrap();
        assert_eq!(e[0], e[1]);
    }

    #[test]
    fn empty_hidden_list_rejected() {
        let p = seeded_params(2, 2, 2, 2);
        let q = Vector::zeros(2);
        assert!(align(&q, &[], &p).is_err());
    }

    #[test]
    fn saturated_scores_select_one_hidden() {
        let hiddens = vecs(&[&[0.9, -0.3], &[0.1, 0.2], &[-0.5, 0.8]]);
        let scores = Vector::from_vec(vec![40.0, 0.0, 0.0]);
        let (alpha, r) = attend(&scores, &hiddens).unwrap();
        assert!((alpha[0] - 1.0).abs() < 1e-9);
        for j in 0..2 {
            assert!((r[j] - hiddens[0][j]).abs() < 1e-9);
        }
    }

    #[test]
    fn equal_scores_average_hiddens() {
        let hiddens = vecs(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0], &[2.0, -2.0]]);
        let scores = Vector::from_vec(vec![0.7; 4]);
        let (_, r) = attend(&scores, &hiddens).unwrap();
        assert!((r[0] - 1.0).abs() < 1e-12);
        assert!((r[1] - 0.0).abs() < 1e-12);
    }

    #[test]
    fn single_hidden_state_is_the_context() {
        // Softmax over one element is 1, so the context equals that state.
        let hiddens = vecs(&[&[0.42, -0.9]]);
        let scores = Vector::from_vec(vec![-3.3]);
        let (alpha, r) = attend(&scores, &hiddens).unwrap();
        assert_eq!(alpha[0], 1.0);
        assert_eq!(r.as_slice(), hiddens[0].as_slice());
    }

    #[test]
    fn output_projection_closed_form() {
        let mut p = AttentionParams::zeros(2, 2, 2, 2);
        p.v_out[(0, 0)] = 1.0;
        p.v_out[(1, 1)] = 1.0;
        let r = Vector::from_vec(vec![0.5, -0.5]);
        let y = attention_output(&r, &p).unwrap();
        assert!((y[0] - 0.5f64.tanh()).abs() < 1e-15);
        assert!((y[1] + 0.5f64.tanh()).abs() < 1e-15);
        assert!((y[0] - 0.4621).abs() < 1e-4);

        let zero = AttentionParams::zeros(2, 2, 2, 2);
        let y0 = attention_output(&r, &zero).unwrap();
        assert!(y0.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let p = seeded_params(2, 2, 2, 3);
        let hiddens = vecs(&[&[0.3, -0.2], &[1.0, 0.7]]);
        let q = hiddens[1].clone();
        let (out, cache) = attention_forward(&q, &hiddens, &p).unwrap();
        let mut grads = AttentionGrads::zeros(2, 2, 2, 3);
        let dy = Vector::zeros(3);
        let (dh, dq) = attention_backward(&q, &hiddens, &out, &cache, &p, &dy, &mut grads).unwrap();
        for t in grads.tensors() {
            assert!(t.values().iter().all(|&v| v == 0.0));
        }
        assert!(dh.iter().all(|v| v.iter().all(|&x| x == 0.0)));
        assert!(dq.iter().all(|&x| x == 0.0));
    }

    proptest! {
        #[test]
        fn permutation_equivariance_and_convex_hull(
            flat in proptest::collection::vec(-1.0f64..1.0, 8),
            qv in proptest::collection::vec(-1.0f64..1.0, 2),
            shift in -5.0f64..5.0,
        ) {
            let p = seeded_params(3, 2, 2, 4);
            let hiddens: Vec<Vector> = flat.chunks(2).map(|c| Vector::from_vec(c.to_vec())).collect();
            let q = Vector::from_vec(qv);

            let (out, _) = attention_forward(&q, &hiddens, &p).unwrap();

            // Reversing the hidden states permutes scores/weights identically
            // and leaves context and output unchanged.
            let rev: Vec<Vector> = hiddens.iter().rev().cloned().collect();
            let (out_rev, _) = attention_forward(&q, &rev, &p).unwrap();
            for i in 0..4 {
                prop_assert!((out.scores[i] - out_rev.scores[3 - i]).abs() < 1e-12);
                prop_assert!((out.weights[i] - out_rev.weights[3 - i]).abs() < 1e-12);
            }
            for j in 0..2 {
                prop_assert!((out.context[j] - out_rev.context[j]).abs() < 1e-12);
            }

            // Context coordinates stay inside [min_i h_i[j], max_i h_i[j]].
            for j in 0..2 {
                let lo = hiddens.iter().map(|h| h[j]).fold(f64::INFINITY, f64::min);
                let hi = hiddens.iter().map(|h| h[j]).fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(out.context[j] >= lo - 1e-12 && out.context[j] <= hi + 1e-12);
            }

            // Adding a constant to every score leaves alpha, r (and
            // therefore y) unchanged.
            let shifted = Vector::from_vec(out.scores.iter().map(|v| v + shift).collect());
            let (alpha2, r2) = attend(&shifted, &hiddens).unwrap();
            for i in 0..4 {
                prop_assert!((alpha2[i] - out.weights[i]).abs() < 1e-12);
            }
            for j in 0..2 {
                prop_assert!((r2[j] - out.context[j]).abs() < 1e-12);
            }
            let sum: f64 = out.weights.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
        }
    }
}
