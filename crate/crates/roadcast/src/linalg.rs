//! Minimal dense vector/matrix arithmetic and the elementwise nonlinearities
//! used by the model code.
//!
//! Everything is 64-bit floating point so that finite-difference gradient
//! checks can resolve relative errors down to 1e-5. No BLAS, no sparsity:
//! the largest matrix in the default model is 20x57.

use crate::error::{Error, Result};

/// Dense real vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector {
    data: Vec<f64>,
}

impl Vector {
    pub fn zeros(dim: usize) -> Self {
        Vector {
            data: vec![0.0; dim],
        }
    }

    pub fn from_vec(data: Vec<f64>) -> Self {
        Vector { data }
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.data.iter()
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |acc, (a, b)| acc + a * b)
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: f64, x: &Vector) {
        debug_assert_eq!(self.dim(), x.dim());
        for (s, v) in self.data.iter_mut().zip(&x.data) {
            *s += a * v;
        }
    }

    /// `self += x`
    pub fn add_assign(&mut self, x: &Vector) {
        self.axpy(1.0, x);
    }

    pub fn scale(&mut self, a: f64) {
        for s in &mut self.data {
            *s *= a;
        }
    }

    pub fn fill(&mut self, v: f64) {
        self.data.fill(v);
    }
}

impl std::ops::Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

impl std::ops::IndexMut<usize> for Vector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.data[i]
    }
}

/// `[a; b]` stacked into one vector.
pub fn concat(a: &Vector, b: &Vector) -> Vector {
    let mut data = Vec::with_capacity(a.dim() + b.dim());
    data.extend_from_slice(a.as_slice());
    data.extend_from_slice(b.as_slice());
    Vector::from_vec(data)
}

/// Dense real matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dims(
                "Matrix::from_vec",
                format!("{rows}x{cols} needs {} values, got {}", rows * cols, data.len()),
            ));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Convenience constructor for tests and small literals.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::dims("Matrix::from_rows", "ragged rows".to_string()));
            }
            data.extend_from_slice(row);
        }
        Matrix::from_vec(r, c, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// `W x` (unchecked fast path; use [`affine`] for the validating form).
    pub fn mul_vec(&self, x: &Vector) -> Vector {
        debug_assert_eq!(self.cols, x.dim());
        let xs = x.as_slice();
        let mut out = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let row = self.row(i);
            let mut acc = 0.0;
            for (w, v) in row.iter().zip(xs) {
                acc += w * v;
            }
            out.push(acc);
        }
        Vector::from_vec(out)
    }

    /// `W^T y`, used by the backward passes.
    pub fn tmul_vec(&self, y: &Vector) -> Vector {
        debug_assert_eq!(self.rows, y.dim());
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let yi = y[i];
            if yi == 0.0 {
                continue;
            }
            for (o, w) in out.iter_mut().zip(self.row(i)) {
                *o += w * yi;
            }
        }
        Vector::from_vec(out)
    }

    /// Rank-1 accumulate `self += y x^T` (gradient outer products).
    pub fn add_outer(&mut self, y: &Vector, x: &Vector) {
        debug_assert_eq!(self.rows, y.dim());
        debug_assert_eq!(self.cols, x.dim());
        let xs = x.as_slice();
        for i in 0..self.rows {
            let yi = y[i];
            if yi == 0.0 {
                continue;
            }
            let row = &mut self.data[i * self.cols..(i + 1) * self.cols];
            for (w, v) in row.iter_mut().zip(xs) {
                *w += v * yi;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Elementwise nonlinearity selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Sigmoid,
    Tanh,
}

/// Standard logistic sigmoid, 1/(1+exp(-v)).
#[inline]
pub fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// `W x + b`.
pub fn affine(w: &Matrix, x: &Vector, b: &Vector) -> Result<Vector> {
    if w.cols() != x.dim() || w.rows() != b.dim() {
        return Err(Error::dims(
            "affine",
            format!(
                "W is {}x{}, x has dim {}, b has dim {}",
                w.rows(),
                w.cols(),
                x.dim(),
                b.dim()
            ),
        ));
    }
    let mut out = w.mul_vec(x);
    out.add_assign(b);
    Ok(out)
}

/// Elementwise sigmoid or tanh. Saturates gracefully at extreme inputs.
pub fn activate(x: &Vector, kind: Activation) -> Vector {
    let f = match kind {
        Activation::Sigmoid => sigmoid,
        Activation::Tanh => f64::tanh,
    };
    Vector::from_vec(x.iter().map(|&v| f(v)).collect())
}

/// Softmax with the max-subtraction trick for overflow safety.
pub fn softmax(e: &Vector) -> Result<Vector> {
    if e.dim() == 0 {
        return Err(Error::InvalidArgument("softmax of empty vector".into()));
    }
    let max = e.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = e.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(Vector::from_vec(exps.into_iter().map(|v| v / sum).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn affine_identity() {
        let w = Matrix::from_rows(&[&[1.0, 0.0], &[0.0, 1.0]]).unwrap();
        let x = Vector::from_vec(vec![3.0, -1.0]);
        let b = Vector::zeros(2);
        let y = affine(&w, &x, &b).unwrap();
        assert_eq!(y.as_slice(), &[3.0, -1.0]);
    }

    #[test]
    fn affine_hand_multiplication() {
        let w = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let x = Vector::from_vec(vec![1.0, 1.0]);
        let b = Vector::from_vec(vec![1.0, 1.0]);
        let y = affine(&w, &x, &b).unwrap();
        assert_eq!(y.as_slice(), &[4.0, 8.0]);
    }

    #[test]
    fn affine_zero_matrix() {
        let w = Matrix::zeros(1, 3);
        let x = Vector::from_vec(vec![7.0, -2.0, 0.5]);
        let b = Vector::from_vec(vec![5.0]);
        let y = affine(&w, &x, &b).unwrap();
        assert_eq!(y.as_slice(), &[5.0]);
    }

    #[test]
    fn affine_rejects_mismatched_dims() {
        let w = Matrix::zeros(2, 3);
        let x = Vector::zeros(2);
        let b = Vector::zeros(2);
        let err = affine(&w, &x, &b).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("2x3"), "message should carry dims: {msg}");
    }

    #[test]
    fn activation_fixed_points() {
        assert_eq!(sigmoid(0.0), 0.5);
        let x = Vector::from_vec(vec![0.0]);
        assert_eq!(activate(&x, Activation::Tanh).as_slice(), &[0.0]);
        // sigmoid(ln 3) = 3/(1+3)
        let y = activate(&Vector::from_vec(vec![3.0f64.ln()]), Activation::Sigmoid);
        assert!((y[0] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn sigmoid_saturates_without_nan() {
        assert_eq!(sigmoid(1e6), 1.0);
        assert_eq!(sigmoid(-1e6), 0.0);
    }

    #[test]
    fn softmax_uniform_inputs() {
        for c in [-7.5, 0.0, 1e3] {
            let a = softmax(&Vector::from_vec(vec![c; 4])).unwrap();
            for i in 0..4 {
                assert!((a[i] - 0.25).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn softmax_closed_form() {
        let a = softmax(&Vector::from_vec(vec![0.0, 3.0f64.ln()])).unwrap();
        assert!((a[0] - 0.25).abs() < 1e-15);
        assert!((a[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn softmax_rejects_empty() {
        assert!(softmax(&Vector::zeros(0)).is_err());
    }

    #[test]
    fn tmul_is_transpose_of_mul() {
        let w = Matrix::from_rows(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]).unwrap();
        let y = Vector::from_vec(vec![1.0, -1.0]);
        let out = w.tmul_vec(&y);
        assert_eq!(out.as_slice(), &[-3.0, -3.0, -3.0]);
    }

    proptest! {
        #[test]
        fn softmax_sums_to_one_and_shift_invariant(
            vals in proptest::collection::vec(-30.0f64..30.0, 1..12),
            shift in -10.0f64..10.0,
        ) {
            let e = Vector::from_vec(vals.clone());
            let a = softmax(&e).unwrap();
            let sum: f64 = a.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            for i in 0..a.dim() {
                prop_assert!(a[i] > 0.0 && a[i] <= 1.0);
            }
            let shifted = Vector::from_vec(vals.iter().map(|v| v + shift).collect());
            let b = softmax(&shifted).unwrap();
            for i in 0..a.dim() {
                prop_assert!((a[i] - b[i]).abs() < 1e-12);
            }
        }

        #[test]
        fn sigmoid_strictly_increasing(v1 in -20.0f64..20.0, gap in 1e-6f64..5.0) {
            // Restricted to the range where f64 can resolve the increase;
            // past |v| ~ 36 the function saturates to the nearest float.
            prop_assert!(sigmoid(v1) < sigmoid(v1 + gap));
        }

        #[test]
        fn affine_is_linear(
            seedvals in proptest::collection::vec(-2.0f64..2.0, 6),
            xs in proptest::collection::vec(-3.0f64..3.0, 2),
            ys in proptest::collection::vec(-3.0f64..3.0, 2),
            a in -4.0f64..4.0,
        ) {
            let w = Matrix::from_vec(3, 2, seedvals).unwrap();
            let zero = Vector::zeros(3);
            let x = Vector::from_vec(xs);
            let y = Vector::from_vec(ys);
            let mut combo = Vector::zeros(2);
            combo.axpy(a, &x);
            combo.add_assign(&y);
            let lhs = affine(&w, &combo, &zero).unwrap();
            let mut rhs = affine(&w, &y, &zero).unwrap();
            rhs.axpy(a, &affine(&w, &x, &zero).unwrap());
            for i in 0..3 {
                prop_assert!((lhs[i] - rhs[i]).abs() < 1e-10);
            }
        }
    }
}
