//! Channel representations and transformations: Kraus, Choi, Stinespring,
//! complementary channel, tensor powers, mixtures, reduced operations, the
//! useless channel, diamond-distance bounds, and adapted nets.

use crate::compound::CompoundSet;
use crate::error::{Error, Result};
use crate::information::{gamma_delta, h_prime_block};
use crate::operators::{eig_hermitian, tensor, trace_norm, ComplexMatrix};
use crate::scalar::{Real, Tolerances, C};
use crate::states::{entropy_of_spectrum, DensityOperator};
use num_complex::Complex;
use num_traits::Zero;

/// Hard budget on tensor-power dimensions.
pub const DIMENSION_BUDGET: usize = 256;
/// Hard budget on Kraus-set sizes produced by tensor powers and reductions.
pub const KRAUS_BUDGET: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ChannelKind {
    TracePreserving,
    TraceDecreasing,
}

/// Completely positive map given by Kraus operators; trace-preserving or
/// trace-decreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel<T> {
    kraus: Vec<ComplexMatrix<T>>,
    d_in: usize,
    d_out: usize,
    kind: ChannelKind,
}

impl<T: Real> KrausChannel<T> {
    /// Build from Kraus operators, inferring the kind from `sum A^dag A`.
    /// Completeness is checked at the channel tolerance `1e-9`.
    pub fn new(kraus: Vec<ComplexMatrix<T>>) -> Result<Self> {
        let mut tol = Tolerances::<T>::default();
        tol.trace = tol.trace.max(T::of(1e-9));
        tol.psd = tol.psd.max(T::of(1e-9));
        Self::with_tolerances(kraus, &tol)
    }

    pub fn with_tolerances(kraus: Vec<ComplexMatrix<T>>, tol: &Tolerances<T>) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::InvalidKraus {
                max_eig: f64::NAN,
                tol: tol.trace.to_f64().unwrap_or(f64::NAN),
            });
        }
        let d_out = kraus[0].rows();
        let d_in = kraus[0].cols();
        if kraus.iter().any(|a| a.rows() != d_out || a.cols() != d_in) {
            return Err(Error::DimensionMismatch(
                "Kraus operators must share dimensions".into(),
            ));
        }
        let mut completeness = ComplexMatrix::<T>::zeros(d_in, d_in);
        for a in &kraus {
            completeness = completeness.add(&a.adjoint().matmul(a));
        }
        let kind = if completeness
            .sub(&ComplexMatrix::identity(d_in))
            .max_abs()
            <= tol.trace
        {
            ChannelKind::TracePreserving
        } else {
            let es = eig_hermitian(
                &completeness.hermitian_part(),
                tol.hermiticity.max(T::of(1e-8)),
            )?;
            let max_eig = es.eigenvalues.last().copied().unwrap_or_else(T::zero);
            let min_eig = es.eigenvalues.first().copied().unwrap_or_else(T::zero);
            if max_eig > T::one() + tol.trace || min_eig < -tol.psd {
                return Err(Error::InvalidKraus {
                    max_eig: max_eig.to_f64().unwrap_or(f64::NAN),
                    tol: tol.trace.to_f64().unwrap_or(f64::NAN),
                });
            }
            ChannelKind::TraceDecreasing
        };
        Ok(KrausChannel {
            kraus,
            d_in,
            d_out,
            kind,
        })
    }

    pub fn identity(d: usize) -> Self {
        KrausChannel {
            kraus: vec![ComplexMatrix::identity(d)],
            d_in: d,
            d_out: d,
            kind: ChannelKind::TracePreserving,
        }
    }

    /// Conjugation by a unitary.
    pub fn from_unitary(u: &ComplexMatrix<T>) -> Self {
        assert!(u.is_square());
        KrausChannel {
            kraus: vec![u.clone()],
            d_in: u.cols(),
            d_out: u.rows(),
            kind: ChannelKind::TracePreserving,
        }
    }

    /// The trace-decreasing compression `a -> q a q` for a projector `q`.
    pub fn from_projector(q: &ComplexMatrix<T>) -> Self {
        assert!(q.is_square());
        KrausChannel {
            kraus: vec![q.clone()],
            d_in: q.cols(),
            d_out: q.rows(),
            kind: ChannelKind::TraceDecreasing,
        }
    }

    pub fn kraus(&self) -> &[ComplexMatrix<T>] {
        &self.kraus
    }

    pub fn kraus_count(&self) -> usize {
        self.kraus.len()
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.kind == ChannelKind::TracePreserving
    }

    /// `sum_k A_k X A_k^dag` for an arbitrary operator on the input space.
    pub fn apply_matrix(&self, x: &ComplexMatrix<T>) -> ComplexMatrix<T> {
        assert_eq!(x.rows(), self.d_in);
        assert_eq!(x.cols(), self.d_in);
        let mut out = ComplexMatrix::zeros(self.d_out, self.d_out);
        for a in &self.kraus {
            out = out.add(&a.matmul(x).matmul(&a.adjoint()));
        }
        out
    }

    /// Channel action on a state. The result carries trace 1 for
    /// trace-preserving channels and trace <= 1 otherwise.
    pub fn apply(&self, rho: &DensityOperator<T>) -> Result<ComplexMatrix<T>> {
        if rho.dim() != self.d_in {
            return Err(Error::DimensionMismatch(format!(
                "channel input dimension {} vs state dimension {}",
                self.d_in,
                rho.dim()
            )));
        }
        Ok(self.apply_matrix(rho.matrix()))
    }

    /// Channel output as a state (trace-preserving channels only).
    pub fn apply_state(&self, rho: &DensityOperator<T>) -> Result<DensityOperator<T>> {
        let out = self.apply(rho)?;
        Ok(DensityOperator::from_matrix_unchecked(out))
    }

    /// Heisenberg-picture adjoint `sum_k A_k^dag X A_k`.
    pub fn apply_adjoint(&self, x: &ComplexMatrix<T>) -> ComplexMatrix<T> {
        assert_eq!(x.rows(), self.d_out);
        let mut out = ComplexMatrix::zeros(self.d_in, self.d_in);
        for a in &self.kraus {
            out = out.add(&a.adjoint().matmul(x).matmul(a));
        }
        out
    }

    /// `self` after `before`: Kraus set of all products.
    pub fn compose(&self, before: &KrausChannel<T>) -> Result<KrausChannel<T>> {
        if before.d_out != self.d_in {
            return Err(Error::DimensionMismatch(format!(
                "compose: inner output {} vs outer input {}",
                before.d_out, self.d_in
            )));
        }
        if self.kraus.len() * before.kraus.len() > KRAUS_BUDGET {
            return Err(Error::BudgetExceeded(format!(
                "composition Kraus count {}",
                self.kraus.len() * before.kraus.len()
            )));
        }
        let kraus: Vec<_> = self
            .kraus
            .iter()
            .flat_map(|a| before.kraus.iter().map(move |b| a.matmul(b)))
            .collect();
        let kind = if self.kind == ChannelKind::TracePreserving
            && before.kind == ChannelKind::TracePreserving
        {
            ChannelKind::TracePreserving
        } else {
            ChannelKind::TraceDecreasing
        };
        Ok(KrausChannel {
            kraus,
            d_in: before.d_in,
            d_out: self.d_out,
            kind,
        })
    }

    /// `tr(N(rho))`, the acceptance weight of a trace-decreasing map.
    pub fn output_trace(&self, rho: &DensityOperator<T>) -> Result<T> {
        Ok(self.apply(rho)?.trace().re)
    }

    pub(crate) fn from_parts_unchecked(
        kraus: Vec<ComplexMatrix<T>>,
        d_in: usize,
        d_out: usize,
        kind: ChannelKind,
    ) -> Self {
        KrausChannel {
            kraus,
            d_in,
            d_out,
            kind,
        }
    }
}

/// Stinespring dilation `V = sum_k A_k (x) |k>_env`.
///
/// `V^dag V = I` holds for trace-preserving channels; trace-decreasing maps
/// yield a contraction (the environment-side projection is absorbed into the
/// Kraus set).
#[derive(Debug, Clone)]
pub struct StinespringIsometry<T> {
    pub isometry: ComplexMatrix<T>,
    pub d_in: usize,
    pub d_out: usize,
    pub d_env: usize,
}

pub fn stinespring<T: Real>(ch: &KrausChannel<T>) -> StinespringIsometry<T> {
    let n = ch.kraus_count();
    let (d_in, d_out) = (ch.d_in(), ch.d_out());
    let mut v = ComplexMatrix::zeros(d_out * n, d_in);
    for (k, a) in ch.kraus().iter().enumerate() {
        for row in 0..d_out {
            for col in 0..d_in {
                v[(row * n + k, col)] = a[(row, col)];
            }
        }
    }
    StinespringIsometry {
        isometry: v,
        d_in,
        d_out,
        d_env: n,
    }
}

/// Complementary channel `N'(rho) = tr_K(V rho V^dag)`, mapping into the
/// environment of the canonical Stinespring dilation. Its Kraus elements are
/// indexed by the output basis of K: the a-th element collects row a of every
/// dilation block.
pub fn complementary<T: Real>(ch: &KrausChannel<T>) -> KrausChannel<T> {
    let n = ch.kraus_count();
    let (d_in, d_out) = (ch.d_in(), ch.d_out());
    let kraus: Vec<ComplexMatrix<T>> = (0..d_out)
        .map(|a| ComplexMatrix::from_fn(n, d_in, |k, i| ch.kraus()[k][(a, i)]))
        .collect();
    KrausChannel {
        kraus,
        d_in,
        d_out: n,
        kind: ch.kind(),
    }
}

/// l-fold tensor power; the Kraus set is every l-fold product.
pub fn tensor_power<T: Real>(ch: &KrausChannel<T>, l: usize) -> Result<KrausChannel<T>> {
    assert!(l >= 1);
    let din_l = ch
        .d_in()
        .checked_pow(l as u32)
        .filter(|&d| d <= DIMENSION_BUDGET);
    let dout_l = ch
        .d_out()
        .checked_pow(l as u32)
        .filter(|&d| d <= DIMENSION_BUDGET);
    let count = ch
        .kraus_count()
        .checked_pow(l as u32)
        .filter(|&n| n <= KRAUS_BUDGET);
    let (din_l, dout_l) = match (din_l, dout_l, count) {
        (Some(a), Some(b), Some(_)) => (a, b),
        _ => {
            return Err(Error::BudgetExceeded(format!(
                "tensor power l={l} of a {}->{} channel with {} Kraus operators",
                ch.d_in(),
                ch.d_out(),
                ch.kraus_count()
            )))
        }
    };
    let mut kraus: Vec<ComplexMatrix<T>> = vec![ComplexMatrix::identity(1)];
    for _ in 0..l {
        kraus = kraus
            .iter()
            .flat_map(|acc| ch.kraus().iter().map(move |a| tensor(acc, a)))
            .collect();
    }
    debug_assert!(kraus.iter().all(|a| a.rows() == dout_l && a.cols() == din_l));
    Ok(KrausChannel {
        kraus,
        d_in: din_l,
        d_out: dout_l,
        kind: ch.kind(),
    })
}

/// Convex mixture: Kraus union of `sqrt(w_j) A_{j,i}`.
pub fn mix<T: Real>(channels: &[KrausChannel<T>], weights: &[T]) -> Result<KrausChannel<T>> {
    if channels.is_empty() {
        return Err(Error::EmptySet);
    }
    if channels.len() != weights.len() {
        return Err(Error::DimensionMismatch(
            "one weight per channel required".into(),
        ));
    }
    let (d_in, d_out) = (channels[0].d_in(), channels[0].d_out());
    if channels.iter().any(|c| c.d_in() != d_in || c.d_out() != d_out) {
        return Err(Error::DimensionMismatch(
            "mixed channels must share dimensions".into(),
        ));
    }
    let wsum = weights.iter().fold(T::zero(), |a, &b| a + b);
    if (wsum - T::one()).abs() > Tolerances::<T>::default().trace
        || weights.iter().any(|&w| w < T::zero())
    {
        return Err(Error::ParameterRange(format!(
            "weights must be a probability vector, sum {wsum}"
        )));
    }
    let mut kraus = Vec::new();
    for (ch, &w) in channels.iter().zip(weights) {
        if w.is_zero() {
            continue;
        }
        let s = Complex::new(w.sqrt(), T::zero());
        kraus.extend(ch.kraus().iter().map(|a| a.scale(s)));
    }
    let kind = if channels.iter().all(|c| c.is_trace_preserving()) {
        ChannelKind::TracePreserving
    } else {
        ChannelKind::TraceDecreasing
    };
    Ok(KrausChannel {
        kraus,
        d_in,
        d_out,
        kind,
    })
}

/// The useless channel `T(rho) = tr(rho) I / d_out`.
pub fn useless_channel<T: Real>(d_in: usize, d_out: usize) -> KrausChannel<T> {
    assert!(d_in >= 1 && d_out >= 1);
    let scale = T::one() / T::of_usize(d_out).sqrt();
    let mut kraus = Vec::with_capacity(d_in * d_out);
    for i in 0..d_out {
        for j in 0..d_in {
            let mut a = ComplexMatrix::zeros(d_out, d_in);
            a[(i, j)] = Complex::new(scale, T::zero());
            kraus.push(a);
        }
    }
    KrausChannel {
        kraus,
        d_in,
        d_out,
        kind: ChannelKind::TracePreserving,
    }
}

// ---------------------------------------------------------------------------
// Choi representation
// ---------------------------------------------------------------------------

/// Unnormalized Choi matrix `J(Phi) = sum_ij |i><j| (x) Phi(|i><j|)`.
#[derive(Debug, Clone)]
pub struct ChoiMatrix<T> {
    pub matrix: ComplexMatrix<T>,
    pub d_in: usize,
    pub d_out: usize,
}

pub fn choi<T: Real>(ch: &KrausChannel<T>) -> ChoiMatrix<T> {
    let (d_in, d_out) = (ch.d_in(), ch.d_out());
    let dim = d_in * d_out;
    let mut j = ComplexMatrix::zeros(dim, dim);
    for a in ch.kraus() {
        // w[(i,b)] = A[b,i]; J += w w^dag.
        let mut w = vec![C::<T>::zero(); dim];
        for i in 0..d_in {
            for b in 0..d_out {
                w[i * d_out + b] = a[(b, i)];
            }
        }
        for r in 0..dim {
            if w[r].is_zero() {
                continue;
            }
            for c in 0..dim {
                let upd = w[r] * w[c].conj();
                j[(r, c)] += upd;
            }
        }
    }
    ChoiMatrix {
        matrix: j,
        d_in,
        d_out,
    }
}

/// Kraus set from a Choi matrix via its eigendecomposition.
///
/// Accepts numerically optimized Choi operators, so the completeness window
/// is wider than the constructor default; exactness is restored downstream
/// where needed.
pub fn kraus_from_choi<T: Real>(choi: &ChoiMatrix<T>) -> Result<KrausChannel<T>> {
    let es = eig_hermitian(
        &choi.matrix.hermitian_part(),
        Tolerances::<T>::default().hermiticity.max(T::of(1e-8)),
    )?;
    let dim = choi.d_in * choi.d_out;
    let cutoff = es
        .eigenvalues
        .last()
        .copied()
        .unwrap_or_else(T::zero)
        .max(T::one())
        * T::epsilon()
        * T::of_usize(dim)
        * T::of(16.0);
    let mut kraus = Vec::new();
    for (idx, &w) in es.eigenvalues.iter().enumerate() {
        if w <= cutoff {
            continue;
        }
        let s = Complex::new(w.sqrt(), T::zero());
        let mut a = ComplexMatrix::zeros(choi.d_out, choi.d_in);
        for i in 0..choi.d_in {
            for b in 0..choi.d_out {
                a[(b, i)] = es.eigenvectors[(i * choi.d_out + b, idx)] * s;
            }
        }
        kraus.push(a);
    }
    let mut tol = Tolerances::<T>::default();
    tol.trace = tol.trace.max(T::of(1e-7));
    tol.psd = tol.psd.max(T::of(1e-7));
    KrausChannel::with_tolerances(kraus, &tol)
}

// ---------------------------------------------------------------------------
// Diamond-distance sandwich bounds
// ---------------------------------------------------------------------------

/// Two-sided bounds on the diamond distance.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DiamondBounds<T> {
    /// `(1/d_in) || J(a) - J(b) ||_1`, attained by the maximally entangled
    /// input, hence a true lower bound.
    pub lower: T,
    /// `|| J(a) - J(b) ||_1`, the Choi sandwich upper bound.
    pub upper: T,
}

pub fn diamond_distance_bounds<T: Real>(
    a: &KrausChannel<T>,
    b: &KrausChannel<T>,
) -> Result<DiamondBounds<T>> {
    if a.d_in() != b.d_in() || a.d_out() != b.d_out() {
        return Err(Error::DimensionMismatch(
            "diamond bounds need channels with equal dimensions".into(),
        ));
    }
    let diff = choi(a).matrix.sub(&choi(b).matrix);
    let t1 = trace_norm(&diff);
    Ok(DiamondBounds {
        lower: t1 / T::of_usize(a.d_in()),
        upper: t1,
    })
}

/// Certified upper bound on `||a - b||_diamond` (the Choi trace distance).
pub fn choi_upper_distance<T: Real>(a: &KrausChannel<T>, b: &KrausChannel<T>) -> Result<T> {
    Ok(diamond_distance_bounds(a, b)?.upper)
}

/// Best lower bound found by evaluating the stabilized trace distance on
/// random pure probe inputs; always valid, occasionally better than the
/// maximally entangled one.
pub fn diamond_lower_probe<T: Real, R: rand::Rng + ?Sized>(
    a: &KrausChannel<T>,
    b: &KrausChannel<T>,
    probes: usize,
    rng: &mut R,
) -> Result<T> {
    let bounds = diamond_distance_bounds(a, b)?;
    let d = a.d_in();
    let mut best = bounds.lower;
    for _ in 0..probes {
        let mut v = vec![C::<T>::zero(); d * d];
        let mut norm2 = T::zero();
        for z in &mut v {
            *z = Complex::new(
                T::sample_standard_normal(rng),
                T::sample_standard_normal(rng),
            );
            norm2 += z.norm_sqr();
        }
        let inv = Complex::new(T::one() / norm2.sqrt(), T::zero());
        for z in &mut v {
            *z = *z * inv;
        }
        let proj = ComplexMatrix::from_fn(d * d, d * d, |i, j| v[i] * v[j].conj());
        let out_a = apply_on_right_factor(a, &proj, d);
        let out_b = apply_on_right_factor(b, &proj, d);
        best = best.max(trace_norm(&out_a.sub(&out_b)));
    }
    Ok(best)
}

/// `(id_d (x) ch)(x)` without building the lifted channel.
pub fn apply_on_right_factor<T: Real>(
    ch: &KrausChannel<T>,
    x: &ComplexMatrix<T>,
    id_dim: usize,
) -> ComplexMatrix<T> {
    let mut out = ComplexMatrix::zeros(id_dim * ch.d_out(), id_dim * ch.d_out());
    for a in ch.kraus() {
        let lifted = tensor(&ComplexMatrix::identity(id_dim), a);
        out = out.add(&lifted.matmul(x).matmul(&lifted.adjoint()));
    }
    out
}

// ---------------------------------------------------------------------------
// Reduced operations
// ---------------------------------------------------------------------------

/// Trace-decreasing restriction of `N^{(x) l}` to frequency-typical
/// environment behavior, with the diagnostics the construction certifies.
#[derive(Debug, Clone)]
pub struct ReducedOperation<T> {
    pub channel: KrausChannel<T>,
    /// `tr(N_red(pi_G^{(x) l}))`: the mass of the environment typical set.
    pub mass: T,
    pub kraus_count: usize,
    /// `2^{l (S_e + gamma(delta) + h'(l))}`.
    pub kraus_count_bound: T,
    pub entropy_exchange: T,
    pub gamma_delta: T,
    pub h_prime_l: T,
    /// Spectrum of the environment state `N'(pi_G)` in the canonical basis.
    pub env_spectrum: Vec<T>,
}

/// Reduced operation of `ch` with respect to the maximally mixed state
/// `pi_g`.
///
/// The Kraus set is rotated into the basis diagonalizing the environment
/// state `N'(pi_g)`; the l-fold tensor operators indexed by frequency-typical
/// environment sequences are kept, all others dropped.
pub fn reduced_operation<T: Real>(
    ch: &KrausChannel<T>,
    pi_g: &DensityOperator<T>,
    delta: T,
    l: usize,
) -> Result<ReducedOperation<T>> {
    if delta <= T::zero() || delta >= T::of(0.5) {
        return Err(Error::ParameterRange(format!(
            "delta must lie in (0, 1/2), got {delta}"
        )));
    }
    if pi_g.dim() != ch.d_in() {
        return Err(Error::DimensionMismatch(
            "reference state dimension must match the channel input".into(),
        ));
    }
    let din_l = ch
        .d_in()
        .checked_pow(l as u32)
        .filter(|&d| d <= DIMENSION_BUDGET);
    let dout_l = ch
        .d_out()
        .checked_pow(l as u32)
        .filter(|&d| d <= DIMENSION_BUDGET);
    let (din_l, dout_l) = match (din_l, dout_l) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(Error::BudgetExceeded(format!(
                "reduced operation at l={l} of a {}->{} channel",
                ch.d_in(),
                ch.d_out()
            )))
        }
    };

    // Environment Gram matrix E_{k k'} = tr(A_k pi A_{k'}^dag) = <k|N'(pi)|k'>.
    let n = ch.kraus_count();
    let mut env = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        let ak_pi = ch.kraus()[k].matmul(pi_g.matrix());
        for kp in 0..n {
            env[(k, kp)] = ak_pi.matmul(&ch.kraus()[kp].adjoint()).trace();
        }
    }
    let es = eig_hermitian(
        &env.hermitian_part(),
        Tolerances::<T>::default().hermiticity.max(T::of(1e-8)),
    )?;
    let spectrum: Vec<T> = es.eigenvalues.iter().map(|&w| w.max(T::zero())).collect();
    // Canonical Kraus basis: B_m = sum_k conj(W_{k m}) A_k.
    let canonical: Vec<ComplexMatrix<T>> = (0..n)
        .map(|m| {
            let mut b = ComplexMatrix::zeros(ch.d_out(), ch.d_in());
            for k in 0..n {
                b.add_assign_scaled(&ch.kraus()[k], es.eigenvectors[(k, m)].conj());
            }
            b
        })
        .collect();

    // Keep the tensor operators indexed by typical environment sequences.
    let zero_tol = Tolerances::<T>::default().spectral_zero;
    let lf = T::of_usize(l);
    let mut kraus = Vec::new();
    let mut mass = T::zero();
    let total = n
        .checked_pow(l as u32)
        .filter(|&t| t <= 1_000_000)
        .ok_or_else(|| Error::BudgetExceeded("environment sequence enumeration".into()))?;
    let mut seq = vec![0usize; l];
    for _ in 0..total {
        let mut counts = vec![0usize; n];
        for &s in &seq {
            counts[s] += 1;
        }
        let typical = counts.iter().zip(&spectrum).all(|(&c, &w)| {
            if w <= zero_tol {
                c == 0
            } else {
                (T::of_usize(c) / lf - w).abs() <= delta
            }
        });
        if typical {
            let mut op = ComplexMatrix::identity(1);
            let mut p = T::one();
            for &s in &seq {
                op = tensor(&op, &canonical[s]);
                p = p * spectrum[s];
            }
            kraus.push(op);
            mass = mass + p;
            if kraus.len() > KRAUS_BUDGET {
                return Err(Error::BudgetExceeded(format!(
                    "reduced operation kept more than {KRAUS_BUDGET} Kraus operators"
                )));
            }
        }
        for pos in (0..l).rev() {
            seq[pos] += 1;
            if seq[pos] < n {
                break;
            }
            seq[pos] = 0;
        }
    }
    if kraus.is_empty() {
        return Err(Error::EmptyTypicalProjector);
    }

    let s_e = entropy_of_spectrum(&spectrum);
    let gamma = gamma_delta(delta, ch.d_in(), ch.d_out());
    let hp = h_prime_block(l, ch.d_in(), ch.d_out());
    let bound = (lf * (s_e + gamma + hp)).exp2();
    let kraus_count = kraus.len();
    Ok(ReducedOperation {
        channel: KrausChannel {
            kraus,
            d_in: din_l,
            d_out: dout_l,
            kind: ChannelKind::TraceDecreasing,
        },
        mass,
        kraus_count,
        kraus_count_bound: bound,
        entropy_exchange: s_e,
        gamma_delta: gamma,
        h_prime_l: hp,
        env_spectrum: spectrum,
    })
}

// ---------------------------------------------------------------------------
// Adapted nets
// ---------------------------------------------------------------------------

/// Finite net adapted to a channel set: greedy covering centers mixed with
/// the useless channel.
#[derive(Debug, Clone)]
pub struct AdaptedNet<T> {
    pub net: CompoundSet<T>,
    /// Index of the selected greedy center for each input channel.
    pub assignment: Vec<usize>,
    /// Certified Choi-upper distance from each input to its closest net
    /// element.
    pub certificates: Vec<T>,
    /// Whether every certificate is within `tau`. The Choi upper bound is
    /// loose by up to a dimension factor, so certification can fail even for
    /// true tau-nets; callers decide whether to accept.
    pub covered: bool,
}

/// Greedy covering of the set at Choi-upper radius `tau/2`, with every
/// selected center mixed with the useless channel at weight `tau/2`.
pub fn adapted_net<T: Real>(set: &CompoundSet<T>, tau: T) -> Result<AdaptedNet<T>> {
    if tau <= T::zero() || tau > T::one() / T::of(std::f64::consts::E) {
        return Err(Error::ParameterRange(format!(
            "tau must lie in (0, 1/e], got {tau}"
        )));
    }
    let half = tau / T::of(2.0);
    let mut centers: Vec<usize> = Vec::new();
    let mut assignment = vec![0usize; set.len()];
    for (i, ch) in set.channels().iter().enumerate() {
        let mut best: Option<(usize, T)> = None;
        for (slot, &c) in centers.iter().enumerate() {
            let d = choi_upper_distance(ch, &set.channels()[c])?;
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((slot, d));
            }
        }
        match best {
            Some((slot, d)) if d <= half => assignment[i] = slot,
            _ => {
                centers.push(i);
                assignment[i] = centers.len() - 1;
            }
        }
    }

    let t_channel = useless_channel::<T>(set.d_in(), set.d_out());
    let mut net_channels = Vec::with_capacity(centers.len());
    let mut net_labels = Vec::with_capacity(centers.len());
    for &c in &centers {
        let mixed = mix(
            &[set.channels()[c].clone(), t_channel.clone()],
            &[T::one() - half, half],
        )?;
        net_channels.push(mixed);
        net_labels.push(set.labels()[c].clone());
    }
    let net = CompoundSet::new(net_channels, net_labels)?;

    let mut certificates = Vec::with_capacity(set.len());
    for ch in set.channels() {
        let mut best = T::infinity();
        for m in net.channels() {
            best = best.min(choi_upper_distance(ch, m)?);
        }
        certificates.push(best);
    }
    let slack = T::of(1e-12).max(T::epsilon() * T::of(64.0));
    let covered = certificates.iter().all(|&c| c <= tau + slack);
    Ok(AdaptedNet {
        net,
        assignment,
        certificates,
        covered,
    })
}
