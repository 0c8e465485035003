//! Householder QR and Haar-distributed random unitaries.

use crate::scalar::{Real, C};
use num_complex::Complex;
use num_traits::{One, Zero};
use rand::Rng;

use super::matrix::ComplexMatrix;

/// QR decomposition by Householder reflections; `q` is square unitary.
pub fn qr<T: Real>(a: &ComplexMatrix<T>) -> (ComplexMatrix<T>, ComplexMatrix<T>) {
    let m = a.rows();
    let n = a.cols();
    let mut r = a.clone();
    // Accumulated reflectors, applied to the identity at the end.
    let mut vs: Vec<Vec<C<T>>> = Vec::new();
    for k in 0..n.min(m.saturating_sub(1)) {
        // Householder vector for column k below the diagonal.
        let mut v: Vec<C<T>> = (k..m).map(|i| r[(i, k)]).collect();
        let norm = v
            .iter()
            .map(|z| z.norm_sqr())
            .fold(T::zero(), |x, y| x + y)
            .sqrt();
        if norm <= T::min_positive_value() {
            vs.push(Vec::new());
            continue;
        }
        let phase = if v[0].norm() > T::zero() {
            v[0] / Complex::new(v[0].norm(), T::zero())
        } else {
            C::one()
        };
        let alpha = -phase * Complex::new(norm, T::zero());
        v[0] -= alpha;
        let vnorm2 = v.iter().map(|z| z.norm_sqr()).fold(T::zero(), |x, y| x + y);
        if vnorm2 <= T::min_positive_value() {
            vs.push(Vec::new());
            continue;
        }
        // Apply H = I - 2 v v^dag / |v|^2 to the trailing block of R.
        let beta = T::of(2.0) / vnorm2;
        for j in k..n {
            let mut dot = C::<T>::zero();
            for i in 0..v.len() {
                dot += v[i].conj() * r[(k + i, j)];
            }
            let dot = dot * Complex::new(beta, T::zero());
            for i in 0..v.len() {
                let upd = v[i] * dot;
                r[(k + i, j)] -= upd;
            }
        }
        vs.push(v);
    }
    // Q = H_0 H_1 ... H_{last}; build by applying reflectors to I in reverse.
    let mut q = ComplexMatrix::<T>::identity(m);
    for (k, v) in vs.iter().enumerate().rev() {
        if v.is_empty() {
            continue;
        }
        let vnorm2 = v.iter().map(|z| z.norm_sqr()).fold(T::zero(), |x, y| x + y);
        let beta = T::of(2.0) / vnorm2;
        for j in 0..m {
            let mut dot = C::<T>::zero();
            for i in 0..v.len() {
                dot += v[i].conj() * q[(k + i, j)];
            }
            let dot = dot * Complex::new(beta, T::zero());
            for i in 0..v.len() {
                let upd = v[i] * dot;
                q[(k + i, j)] -= upd;
            }
        }
    }
    (q, r)
}

/// d x d unitary distributed by the normalized Haar measure.
///
/// Ginibre sample, QR decomposition, then the phases of R's diagonal are
/// normalized to be positive; this makes the distribution exactly Haar.
pub fn haar_unitary<T: Real, R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix<T> {
    assert!(d >= 1, "dimension must be positive");
    let g = ComplexMatrix::from_fn(d, d, |_, _| {
        C::new(
            T::sample_standard_normal(rng),
            T::sample_standard_normal(rng),
        )
    });
    if d == 1 {
        let z = g[(0, 0)];
        let n = z.norm();
        let u = if n > T::zero() {
            z / Complex::new(n, T::zero())
        } else {
            C::one()
        };
        let mut m = ComplexMatrix::<T>::zeros(1, 1);
        m[(0, 0)] = u;
        return m;
    }
    let (q, r) = qr(&g);
    let mut u = q;
    for j in 0..d {
        let rjj = r[(j, j)];
        let n = rjj.norm();
        let phase = if n > T::zero() {
            rjj / Complex::new(n, T::zero())
        } else {
            C::one()
        };
        for i in 0..d {
            let x = u[(i, j)] * phase;
            u[(i, j)] = x;
        }
    }
    u
}

/// Complete an orthonormal d x r basis to a full d x d unitary whose first r
/// columns equal the input exactly.
pub fn complete_unitary<T: Real>(basis: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    let d = basis.rows();
    let r = basis.cols();
    assert!(r <= d);
    if r == d {
        return basis.clone();
    }
    let (q, _) = qr(basis);
    // Q's first r columns span the basis; replace them with the basis itself
    // (same span, so the remaining columns stay orthogonal to it).
    let mut u = q;
    for j in 0..r {
        for i in 0..d {
            u[(i, j)] = basis[(i, j)];
        }
    }
    u
}
