//! Dense complex matrices in row-major order.
//!
//! This is the universal carrier for operators, states, and Kraus elements.
//! Dimensions stay small (at most a few hundred) by construction, so the
//! kernel favors clarity over blocking tricks.

use crate::error::{Error, Result};
use crate::scalar::{Real, C};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

/// Dense complex matrix, entries stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<C<T>>,
}

impl<T: Real> ComplexMatrix<T> {
    /// Human-readable entry grid, for debugging sessions.
    pub fn pretty(&self) -> String {
        use std::fmt::Write;
        let mut s = format!("{}x{} [\n", self.rows, self.cols);
        for i in 0..self.rows.min(12) {
            s.push_str("  ");
            for j in 0..self.cols.min(12) {
                let z = self[(i, j)];
                let _ = write!(s, "{:+.4}{:+.4}i ", z.re, z.im);
            }
            s.push('\n');
        }
        s.push(']');
        s
    }
}

impl<T: Real> ComplexMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        ComplexMatrix {
            rows,
            cols,
            data: vec![C::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Matrix from nested rows; all rows must share a length.
    pub fn from_rows(rows: &[Vec<C<T>>]) -> Self {
        assert!(!rows.is_empty());
        let cols = rows[0].len();
        assert!(rows.iter().all(|r| r.len() == cols));
        ComplexMatrix {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn diag_real(entries: &[T]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &x) in entries.iter().enumerate() {
            m[(i, i)] = C::new(x, T::zero());
        }
        m
    }

    /// |i><j| in an n-dimensional space.
    pub fn basis_matrix(n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m[(i, j)] = C::one();
        m
    }

    /// Column vector |i> as an n x 1 matrix.
    pub fn basis_vector(n: usize, i: usize) -> Self {
        let mut m = Self::zeros(n, 1);
        m[(i, 0)] = C::one();
        m
    }

    pub fn column_vector(entries: &[C<T>]) -> Self {
        ComplexMatrix {
            rows: entries.len(),
            cols: 1,
            data: entries.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C<T>] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<C<T>> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, col: &[C<T>]) {
        assert_eq!(col.len(), self.rows);
        for i in 0..self.rows {
            self[(i, j)] = col[i];
        }
    }

    /// Columns `j0..j0+width` as a new matrix.
    pub fn columns(&self, j0: usize, width: usize) -> Self {
        assert!(j0 + width <= self.cols);
        Self::from_fn(self.rows, width, |i, j| self[(i, j0 + j)])
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn conjugate(&self) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, s: C<T>) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn scale_real(&self, s: T) -> Self {
        self.scale(C::new(s, T::zero()))
    }

    pub fn add_assign_scaled(&mut self, other: &Self, s: C<T>) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(
            self.cols, other.rows,
            "matmul dimension mismatch: {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Self::zeros(self.rows, other.cols);
        // i-k-j order: stream through other's rows.
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                let lhs = i * other.cols;
                let rhs = k * other.cols;
                for j in 0..other.cols {
                    out.data[lhs + j] += a * other.data[rhs + j];
                }
            }
        }
        out
    }

    /// `self * v` for a column vector.
    pub fn matvec(&self, v: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(self.cols, v.len());
        let mut out = vec![C::zero(); self.rows];
        for i in 0..self.rows {
            let mut acc = C::zero();
            let base = i * self.cols;
            for j in 0..self.cols {
                acc += self.data[base + j] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn trace(&self) -> C<T> {
        assert!(self.is_square());
        (0..self.rows).map(|i| self[(i, i)]).fold(C::zero(), |a, b| a + b)
    }

    pub fn frobenius_norm(&self) -> T {
        self.data
            .iter()
            .map(|z| z.norm_sqr())
            .fold(T::zero(), |a, b| a + b)
            .sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .map(|z| z.norm())
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// Hermiticity defect `max |a_ij - conj(a_ji)|`.
    pub fn hermiticity_defect(&self) -> T {
        assert!(self.is_square());
        let mut d = T::zero();
        for i in 0..self.rows {
            for j in i..self.cols {
                d = d.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        d
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        self.is_square() && self.hermiticity_defect() <= tol
    }

    /// Symmetrize a numerically Hermitian matrix: `(A + A^dag)/2`.
    pub fn hermitian_part(&self) -> Self {
        self.add(&self.adjoint()).scale_real(T::of(0.5))
    }

    /// Hilbert-Schmidt inner product `tr(self^dag other)`.
    pub fn hs_inner(&self, other: &Self) -> C<T> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .fold(C::zero(), |x, y| x + y)
    }

    pub fn approx_eq(&self, other: &Self, tol: T) -> bool {
        (self.rows, self.cols) == (other.rows, other.cols)
            && self.sub(other).max_abs() <= tol
    }
}

impl<T> std::ops::Index<(usize, usize)> for ComplexMatrix<T> {
    type Output = C<T>;
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for ComplexMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        &mut self.data[i * self.cols + j]
    }
}

/// Tensor-factor structure of a composite space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsystemShape {
    factors: Vec<usize>,
}

impl SubsystemShape {
    pub fn new(factors: Vec<usize>) -> Self {
        assert!(!factors.is_empty() && factors.iter().all(|&d| d > 0));
        SubsystemShape { factors }
    }

    pub fn uniform(dim: usize, count: usize) -> Self {
        Self::new(vec![dim; count])
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn total_dim(&self) -> usize {
        self.factors.iter().product()
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        if self.total_dim() == dim {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                factors: self.factors.clone(),
                dim,
            })
        }
    }
}

/// Kronecker product; the left factor varies slowest.
pub fn tensor<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    let mut out = ComplexMatrix::zeros(a.rows() * b.rows(), a.cols() * b.cols());
    for ia in 0..a.rows() {
        for ja in 0..a.cols() {
            let x = a[(ia, ja)];
            if x.is_zero() {
                continue;
            }
            for ib in 0..b.rows() {
                for jb in 0..b.cols() {
                    out[(ia * b.rows() + ib, ja * b.cols() + jb)] = x * b[(ib, jb)];
                }
            }
        }
    }
    out
}

/// l-fold Kronecker power.
pub fn tensor_pow<T: Real>(a: &ComplexMatrix<T>, l: usize) -> ComplexMatrix<T> {
    assert!(l >= 1);
    let mut out = a.clone();
    for _ in 1..l {
        out = tensor(&out, a);
    }
    out
}

/// Kronecker product of column vectors.
pub fn tensor_vec<T: Real>(a: &[C<T>], b: &[C<T>]) -> Vec<C<T>> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &x in a {
        for &y in b {
            out.push(x * y);
        }
    }
    out
}

/// Partial trace over the factors *not* listed in `keep`.
///
/// `keep` holds factor indices in ascending order; the result's factor
/// ordering follows `keep`. The full trace is preserved.
pub fn partial_trace<T: Real>(
    m: &ComplexMatrix<T>,
    shape: &SubsystemShape,
    keep: &[usize],
) -> Result<ComplexMatrix<T>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "partial trace needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    shape.check_dim(m.rows())?;
    let f = shape.factors();
    let nf = f.len();
    if keep.windows(2).any(|w| w[0] >= w[1]) || keep.iter().any(|&k| k >= nf) {
        return Err(Error::ParameterRange(format!(
            "keep indices {:?} invalid for {} factors",
            keep, nf
        )));
    }
    // Row-major strides: leftmost factor slowest.
    let mut stride = vec![1usize; nf];
    for i in (0..nf.saturating_sub(1)).rev() {
        stride[i] = stride[i + 1] * f[i + 1];
    }
    let traced: Vec<usize> = (0..nf).filter(|i| !keep.contains(i)).collect();
    let keep_dim: usize = keep.iter().map(|&i| f[i]).product();
    let traced_dim: usize = traced.iter().map(|&i| f[i]).product();

    // Offset of each kept (multi-)index and each traced (multi-)index in the
    // flat index space.
    let offsets = |idxs: &[usize], count: usize| -> Vec<usize> {
        let mut out = vec![0usize; count];
        for (flat, slot) in out.iter_mut().enumerate() {
            let mut rem = flat;
            let mut off = 0;
            for &fi in idxs.iter().rev() {
                off += (rem % f[fi]) * stride[fi];
                rem /= f[fi];
            }
            *slot = off;
        }
        out
    };
    let keep_off = offsets(keep, keep_dim);
    let traced_off = offsets(&traced, traced_dim);

    let mut out = ComplexMatrix::zeros(keep_dim, keep_dim);
    for r in 0..keep_dim {
        for c in 0..keep_dim {
            let mut acc = C::zero();
            for t in &traced_off {
                acc += m[(keep_off[r] + t, keep_off[c] + t)];
            }
            out[(r, c)] = acc;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::C;

    fn c(re: f64, im: f64) -> C<f64> {
        C::new(re, im)
    }

    #[test]
    fn tensor_identities() {
        let i2 = ComplexMatrix::<f64>::identity(2);
        let i4 = ComplexMatrix::<f64>::identity(4);
        assert!(tensor(&i2, &i2).approx_eq(&i4, 0.0));
    }

    #[test]
    fn tensor_diagonal() {
        let a = ComplexMatrix::diag_real(&[1.0, 2.0]);
        let b = ComplexMatrix::diag_real(&[3.0, 4.0]);
        let expect = ComplexMatrix::diag_real(&[3.0, 4.0, 6.0, 8.0]);
        assert!(tensor(&a, &b).approx_eq(&expect, 0.0));
    }

    #[test]
    fn tensor_trace_multiplicative() {
        // tr(A (x) B) = tr(A) tr(B) on fixed 2x2 inputs.
        let a = ComplexMatrix::from_rows(&[
            vec![c(0.3, 0.1), c(-0.2, 0.5)],
            vec![c(0.0, -0.7), c(1.1, 0.0)],
        ]);
        let b = ComplexMatrix::from_rows(&[
            vec![c(-1.0, 0.2), c(0.4, 0.4)],
            vec![c(0.9, 0.0), c(0.3, -0.6)],
        ]);
        let lhs = tensor(&a, &b).trace();
        let rhs = a.trace() * b.trace();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn tensor_left_factor_slowest() {
        // (|0><0|) (x) B places B in the top-left block.
        let p0 = ComplexMatrix::<f64>::basis_matrix(2, 0, 0);
        let b = ComplexMatrix::from_rows(&[vec![c(1.0, 0.0), c(2.0, 0.0)], vec![c(3.0, 0.0), c(4.0, 0.0)]]);
        let t = tensor(&p0, &b);
        assert_eq!(t[(0, 1)], c(2.0, 0.0));
        assert_eq!(t[(2, 2)], c(0.0, 0.0));
    }

    #[test]
    fn partial_trace_product_state() {
        let rho = ComplexMatrix::from_rows(&[
            vec![c(0.7, 0.0), c(0.1, 0.2)],
            vec![c(0.1, -0.2), c(0.3, 0.0)],
        ]);
        let sigma = ComplexMatrix::diag_real(&[0.25, 0.75]);
        let joint = tensor(&rho, &sigma);
        let shape = SubsystemShape::new(vec![2, 2]);
        let back = partial_trace(&joint, &shape, &[0]).unwrap();
        assert!(back.approx_eq(&rho, 1e-14));
        // keep the other side: rho has trace 1 so we recover sigma
        let other = partial_trace(&joint, &shape, &[1]).unwrap();
        assert!(other.approx_eq(&sigma, 1e-14));
    }

    #[test]
    fn partial_trace_bell_state() {
        // |Phi+><Phi+|, either marginal is I/2.
        let mut bell = ComplexMatrix::<f64>::zeros(4, 4);
        for &i in &[0usize, 3] {
            for &j in &[0usize, 3] {
                bell[(i, j)] = c(0.5, 0.0);
            }
        }
        let shape = SubsystemShape::new(vec![2, 2]);
        let half = ComplexMatrix::diag_real(&[0.5, 0.5]);
        assert!(partial_trace(&bell, &shape, &[0]).unwrap().approx_eq(&half, 1e-15));
        assert!(partial_trace(&bell, &shape, &[1]).unwrap().approx_eq(&half, 1e-15));
    }

    #[test]
    fn partial_trace_index_sum() {
        let m = ComplexMatrix::diag_real(&[0.1, 0.2, 0.3, 0.4]);
        let shape = SubsystemShape::new(vec![2, 2]);
        let first = partial_trace(&m, &shape, &[0]).unwrap();
        assert!(first.approx_eq(&ComplexMatrix::diag_real(&[0.3, 0.7]), 1e-15));
    }

    #[test]
    fn partial_trace_shape_mismatch() {
        let m = ComplexMatrix::<f64>::identity(3);
        let shape = SubsystemShape::new(vec![2, 2]);
        assert!(partial_trace(&m, &shape, &[0]).is_err());
    }

    #[test]
    fn partial_trace_three_factors() {
        let a = ComplexMatrix::diag_real(&[0.6, 0.4]);
        let b = ComplexMatrix::diag_real(&[0.5, 0.5]);
        let g = ComplexMatrix::from_rows(&[
            vec![c(0.2, 0.0), c(0.0, 0.1)],
            vec![c(0.0, -0.1), c(0.8, 0.0)],
        ]);
        let joint = tensor(&tensor(&a, &b), &g);
        let shape = SubsystemShape::uniform(2, 3);
        let mid = partial_trace(&joint, &shape, &[2]).unwrap();
        assert!(mid.approx_eq(&g, 1e-14));
        let pair = partial_trace(&joint, &shape, &[0, 2]).unwrap();
        assert!(pair.approx_eq(&tensor(&a, &g), 1e-14));
    }
}
