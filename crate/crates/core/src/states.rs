//! Density operators, purification, fidelity, entropy, and frequency-typical
//! projections.

use crate::error::{Error, Result};
use crate::information::{h_block, phi_delta};
use crate::operators::{
    eig_hermitian, tensor_vec, trace_norm, ComplexMatrix, HermitianEigensystem, SubsystemShape,
};
use crate::scalar::{xlog2x, Real, Tolerances, C};
use num_complex::Complex;
use num_traits::{One, Zero};

/// Positive semidefinite, unit-trace operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator<T> {
    matrix: ComplexMatrix<T>,
}

impl<T: Real> DensityOperator<T> {
    /// Validate Hermiticity, positivity, and unit trace against `tol`.
    pub fn with_tolerances(matrix: ComplexMatrix<T>, tol: &Tolerances<T>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidDensity {
                reason: format!("matrix is {}x{}", matrix.rows(), matrix.cols()),
                tol: tol.trace.to_f64().unwrap_or(f64::NAN),
            });
        }
        if !matrix.all_finite() {
            return Err(Error::InvalidDensity {
                reason: "non-finite entries".into(),
                tol: tol.trace.to_f64().unwrap_or(f64::NAN),
            });
        }
        let herm = matrix.hermiticity_defect();
        if herm > tol.hermiticity {
            return Err(Error::InvalidDensity {
                reason: format!("Hermiticity defect {:e}", herm.to_f64().unwrap_or(f64::NAN)),
                tol: tol.hermiticity.to_f64().unwrap_or(f64::NAN),
            });
        }
        let tr = matrix.trace();
        let tr_defect = (tr - C::one()).norm();
        if tr_defect > tol.trace {
            return Err(Error::InvalidDensity {
                reason: format!("trace defect {:e}", tr_defect.to_f64().unwrap_or(f64::NAN)),
                tol: tol.trace.to_f64().unwrap_or(f64::NAN),
            });
        }
        let es = eig_hermitian(&matrix, tol.hermiticity)?;
        let min_eig = es.eigenvalues.first().copied().unwrap_or_else(T::zero);
        if min_eig < -tol.psd {
            return Err(Error::InvalidDensity {
                reason: format!("negative eigenvalue {:e}", min_eig.to_f64().unwrap_or(f64::NAN)),
                tol: tol.psd.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(DensityOperator { matrix })
    }

    pub fn new(matrix: ComplexMatrix<T>) -> Result<Self> {
        Self::with_tolerances(matrix, &Tolerances::default())
    }

    /// `|v><v|` for a unit vector.
    pub fn from_pure(v: &[C<T>]) -> Result<Self> {
        let norm2 = v.iter().map(|z| z.norm_sqr()).fold(T::zero(), |a, b| a + b);
        let defect = (norm2.sqrt() - T::one()).abs();
        let tol = Tolerances::<T>::default();
        if defect > tol.trace {
            return Err(Error::InvalidStateVector {
                defect: defect.to_f64().unwrap_or(f64::NAN),
                tol: tol.trace.to_f64().unwrap_or(f64::NAN),
            });
        }
        let d = v.len();
        let m = ComplexMatrix::from_fn(d, d, |i, j| v[i] * v[j].conj());
        Ok(DensityOperator { matrix: m })
    }

    pub fn maximally_mixed_full(d: usize) -> Self {
        let m = ComplexMatrix::identity(d).scale_real(T::one() / T::of_usize(d));
        DensityOperator { matrix: m }
    }

    /// Diagonal state from a probability vector.
    pub fn from_probabilities(p: &[T]) -> Result<Self> {
        Self::new(ComplexMatrix::diag_real(p))
    }

    /// Trusted constructor for operators produced by internally validated
    /// algebra (channel outputs, convex mixtures).
    pub(crate) fn from_matrix_unchecked(matrix: ComplexMatrix<T>) -> Self {
        DensityOperator { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix<T> {
        self.matrix
    }

    pub fn eig(&self) -> HermitianEigensystem<T> {
        eig_hermitian(
            &self.matrix,
            Tolerances::<T>::default().hermiticity.max(T::of(1e-9)),
        )
        .expect("validated density operator is Hermitian")
    }

    /// Spectrum clamped to [0, 1], ascending.
    pub fn spectrum(&self) -> Vec<T> {
        self.eig()
            .eigenvalues
            .iter()
            .map(|&w| w.max(T::zero()).min(T::one()))
            .collect()
    }

    /// Smallest nonzero eigenvalue.
    pub fn lambda_min_positive(&self, zero_tol: T) -> T {
        self.spectrum()
            .into_iter()
            .filter(|&w| w > zero_tol)
            .fold(T::one(), |a, b| a.min(b))
    }

    /// Positive square root.
    pub fn sqrt_matrix(&self) -> ComplexMatrix<T> {
        self.eig().map_eigenvalues(|w| w.max(T::zero()).sqrt())
    }
}

/// Unit vector on a composite space.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState<T> {
    vector: Vec<C<T>>,
    shape: SubsystemShape,
}

impl<T: Real> PureState<T> {
    pub fn new(vector: Vec<C<T>>, shape: SubsystemShape) -> Result<Self> {
        shape.check_dim(vector.len())?;
        let norm = vector
            .iter()
            .map(|z| z.norm_sqr())
            .fold(T::zero(), |a, b| a + b)
            .sqrt();
        let defect = (norm - T::one()).abs();
        let tol = Tolerances::<T>::default();
        if defect > tol.trace {
            return Err(Error::InvalidStateVector {
                defect: defect.to_f64().unwrap_or(f64::NAN),
                tol: tol.trace.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(PureState { vector, shape })
    }

    pub fn vector(&self) -> &[C<T>] {
        &self.vector
    }

    pub fn shape(&self) -> &SubsystemShape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }

    /// `|psi><psi|`.
    pub fn projector(&self) -> ComplexMatrix<T> {
        let d = self.vector.len();
        ComplexMatrix::from_fn(d, d, |i, j| self.vector[i] * self.vector[j].conj())
    }
}

/// Subspace presented by an orthonormal-column basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace<T> {
    ambient_dim: usize,
    basis: ComplexMatrix<T>,
}

impl<T: Real> Subspace<T> {
    pub fn new(basis: ComplexMatrix<T>) -> Result<Self> {
        let gram = basis.adjoint().matmul(&basis);
        let defect = gram
            .sub(&ComplexMatrix::identity(basis.cols()))
            .max_abs();
        let tol = Tolerances::<T>::default();
        if defect > tol.trace {
            return Err(Error::InvalidSubspace {
                defect: defect.to_f64().unwrap_or(f64::NAN),
                tol: tol.trace.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Subspace {
            ambient_dim: basis.rows(),
            basis,
        })
    }

    /// Whole space with the computational basis.
    pub fn full(d: usize) -> Self {
        Subspace {
            ambient_dim: d,
            basis: ComplexMatrix::identity(d),
        }
    }

    /// Span of the first `r` computational basis vectors.
    pub fn computational(ambient_dim: usize, r: usize) -> Self {
        assert!(r >= 1 && r <= ambient_dim);
        Subspace {
            ambient_dim,
            basis: ComplexMatrix::from_fn(ambient_dim, r, |i, j| {
                if i == j {
                    C::one()
                } else {
                    C::zero()
                }
            }),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn basis(&self) -> &ComplexMatrix<T> {
        &self.basis
    }

    /// Orthogonal projection onto the subspace, `B B^dag`.
    pub fn projector(&self) -> ComplexMatrix<T> {
        self.basis.matmul(&self.basis.adjoint())
    }

    /// First `k` basis columns as a sub-subspace.
    pub fn leading(&self, k: usize) -> Subspace<T> {
        assert!(k >= 1 && k <= self.dim());
        Subspace {
            ambient_dim: self.ambient_dim,
            basis: self.basis.columns(0, k),
        }
    }
}

/// Canonical purification on a doubled space: the ancilla copies the
/// eigenbasis index, `psi = sum_i sqrt(w_i) |i> (x) |v_i>`.
pub fn purify<T: Real>(rho: &DensityOperator<T>) -> PureState<T> {
    let d = rho.dim();
    let es = rho.eig();
    let mut vector = vec![C::zero(); d * d];
    for (i, &w) in es.eigenvalues.iter().enumerate() {
        let amp = Complex::new(w.max(T::zero()).sqrt(), T::zero());
        for a in 0..d {
            vector[i * d + a] += amp * es.eigenvectors[(a, i)];
        }
    }
    // Normalize away clamping residue.
    let norm = vector
        .iter()
        .map(|z| z.norm_sqr())
        .fold(T::zero(), |a, b| a + b)
        .sqrt();
    for z in &mut vector {
        *z = *z / Complex::new(norm, T::zero());
    }
    PureState {
        vector,
        shape: SubsystemShape::new(vec![d, d]),
    }
}

/// Uhlmann fidelity `|| sqrt(rho) sqrt(sigma) ||_1^2`.
pub fn fidelity<T: Real>(rho: &DensityOperator<T>, sigma: &DensityOperator<T>) -> Result<T> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "fidelity of states with dims {} and {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    let a = rho.sqrt_matrix().matmul(sigma.matrix()).matmul(&rho.sqrt_matrix());
    let es = eig_hermitian(&a.hermitian_part(), T::of(1e-8).max(T::epsilon() * T::of(1e4)))
        .expect("product is Hermitian by construction");
    let root_sum = es
        .eigenvalues
        .iter()
        .map(|&w| w.max(T::zero()).sqrt())
        .fold(T::zero(), |x, y| x + y);
    Ok((root_sum * root_sum).min(T::one() + T::of(1e-9)).max(T::zero()))
}

/// Base-2 von Neumann entropy, `0 log 0 = 0`.
pub fn von_neumann_entropy<T: Real>(rho: &DensityOperator<T>) -> T {
    entropy_of_spectrum(&rho.spectrum())
}

/// Entropy of a (possibly sub-normalized) nonnegative spectrum.
pub fn entropy_of_spectrum<T: Real>(spectrum: &[T]) -> T {
    -spectrum
        .iter()
        .map(|&w| xlog2x(w.max(T::zero())))
        .fold(T::zero(), |a, b| a + b)
}

/// Entropy of a Hermitian PSD operator that need not be normalized.
pub fn entropy_of_operator<T: Real>(m: &ComplexMatrix<T>) -> T {
    let es = eig_hermitian(&m.hermitian_part(), T::of(1e-8).max(T::epsilon() * T::of(1e4)))
        .expect("hermitian part");
    entropy_of_spectrum(&es.eigenvalues)
}

/// Maximally mixed state on a subspace: projector / rank.
pub fn maximally_mixed<T: Real>(sub: &Subspace<T>) -> DensityOperator<T> {
    let p = sub.projector();
    DensityOperator::from_matrix_unchecked(p.scale_real(T::one() / T::of_usize(sub.dim())))
}

/// `(1/sqrt k) sum_i |i>|i>` on a k x k composite space.
pub fn maximally_entangled<T: Real>(k: usize) -> PureState<T> {
    assert!(k >= 1);
    let amp = Complex::new(T::one() / T::of_usize(k).sqrt(), T::zero());
    let mut vector = vec![C::zero(); k * k];
    for i in 0..k {
        vector[i * k + i] = amp;
    }
    PureState {
        vector,
        shape: SubsystemShape::new(vec![k, k]),
    }
}

/// Trace distance `||rho - sigma||_1`.
pub fn trace_distance<T: Real>(rho: &DensityOperator<T>, sigma: &DensityOperator<T>) -> T {
    trace_norm(&rho.matrix().sub(sigma.matrix()))
}

// ---------------------------------------------------------------------------
// Frequency-typical projections
// ---------------------------------------------------------------------------

/// Frequency-typical projection of `rho^{(x) l}`.
///
/// The projector keeps exactly the eigenbasis sequences whose empirical
/// frequency of every spectral index stays within `delta` of the eigenvalue,
/// with zero-probability indices excluded.
#[derive(Debug, Clone)]
pub struct TypicalProjection<T> {
    pub projector: ComplexMatrix<T>,
    pub blocklength: usize,
    pub delta: T,
    /// `tr(rho^{(x) l} q)`.
    pub mass: T,
    pub rank: usize,
    /// Blocklength correction `(d/l) log(l+1)`.
    pub h_l: T,
    /// Spectral broadening `-delta log(delta/d)`.
    pub phi_delta: T,
    /// Largest eigenvalue of `q rho^{(x) l} q`.
    pub max_sequence_probability: T,
}

fn check_delta<T: Real>(delta: T) -> Result<()> {
    if delta <= T::zero() || delta >= T::of(0.5) {
        return Err(Error::ParameterRange(format!(
            "delta must lie in (0, 1/2), got {delta}"
        )));
    }
    Ok(())
}

/// Visit every count vector `(c_0..c_{d-1})` with `sum c_i = l`.
fn for_each_count_vector(d: usize, l: usize, mut f: impl FnMut(&[usize])) {
    let mut counts = vec![0usize; d];
    fn rec(counts: &mut Vec<usize>, idx: usize, remaining: usize, f: &mut impl FnMut(&[usize])) {
        if idx == counts.len() - 1 {
            counts[idx] = remaining;
            f(counts);
            return;
        }
        for c in 0..=remaining {
            counts[idx] = c;
            rec(counts, idx + 1, remaining - c, f);
        }
    }
    rec(&mut counts, 0, l, &mut f);
}

fn is_typical_count<T: Real>(counts: &[usize], spectrum: &[T], delta: T, l: usize, zero_tol: T) -> bool {
    let lf = T::of_usize(l);
    counts.iter().zip(spectrum).all(|(&c, &w)| {
        if w <= zero_tol {
            c == 0
        } else {
            (T::of_usize(c) / lf - w).abs() <= delta
        }
    })
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

fn multinomial(l: usize, counts: &[usize]) -> f64 {
    let ln = ln_factorial(l) - counts.iter().map(|&c| ln_factorial(c)).sum::<f64>();
    ln.exp().round()
}

/// Mass, rank, and peak sequence probability of the typical set, computed by
/// enumerating count vectors (types) rather than individual sequences.
pub fn typical_mass_rank<T: Real>(
    spectrum: &[T],
    delta: T,
    l: usize,
) -> Result<(T, usize, T)> {
    check_delta(delta)?;
    let zero_tol = Tolerances::<T>::default().spectral_zero;
    let mut mass = T::zero();
    let mut rank = 0usize;
    let mut max_prob = T::zero();
    for_each_count_vector(spectrum.len(), l, |counts| {
        if !is_typical_count(counts, spectrum, delta, l, zero_tol) {
            return;
        }
        // Probability of one sequence of this type.
        let mut p = T::one();
        for (&c, &w) in counts.iter().zip(spectrum) {
            for _ in 0..c {
                p = p * w;
            }
        }
        let count = multinomial(l, counts);
        mass = mass + p * T::of(count);
        rank += count as usize;
        max_prob = max_prob.max(p);
    });
    Ok((mass, rank, max_prob))
}

/// Typical-set mass alone, accumulated in log space so large blocklengths
/// (hundreds) stay finite. Used for convergence curves on classical spectra
/// where materializing the projector is out of the question.
pub fn typical_mass<T: Real>(spectrum: &[T], delta: T, l: usize) -> Result<T> {
    check_delta(delta)?;
    let zero_tol = Tolerances::<T>::default().spectral_zero;
    let spec_f: Vec<f64> = spectrum.iter().map(|w| w.to_f64().unwrap()).collect();
    let mut mass = 0.0f64;
    for_each_count_vector(spectrum.len(), l, |counts| {
        if !is_typical_count(counts, spectrum, delta, l, zero_tol) {
            return;
        }
        let mut ln_term = ln_factorial(l);
        for (&c, &w) in counts.iter().zip(&spec_f) {
            ln_term -= ln_factorial(c);
            if c > 0 {
                ln_term += c as f64 * w.ln();
            }
        }
        mass += ln_term.exp();
    });
    Ok(T::of(mass.min(1.0)))
}

/// Budget on the materialized projector dimension `d^l`.
pub const TYPICAL_PROJECTOR_DIM_BUDGET: usize = 4096;

/// Frequency-typical projection of `rho^{(x) l}` with the projector
/// materialized (requires `d^l` within the size budget).
pub fn frequency_typical_projection<T: Real>(
    rho: &DensityOperator<T>,
    delta: T,
    l: usize,
) -> Result<TypicalProjection<T>> {
    check_delta(delta)?;
    assert!(l >= 1);
    let d = rho.dim();
    let dim_l = d.checked_pow(l as u32).filter(|&x| x <= TYPICAL_PROJECTOR_DIM_BUDGET);
    let dim_l = dim_l.ok_or_else(|| {
        Error::BudgetExceeded(format!(
            "typical projector dimension {}^{} exceeds {}",
            d, l, TYPICAL_PROJECTOR_DIM_BUDGET
        ))
    })?;

    let es = rho.eig();
    let spectrum: Vec<T> = es
        .eigenvalues
        .iter()
        .map(|&w| w.max(T::zero()))
        .collect();
    let zero_tol = Tolerances::<T>::default().spectral_zero;
    let (mass, rank, max_prob) = typical_mass_rank(&spectrum, delta, l)?;

    // Accumulate |x_1..x_l><x_1..x_l| over typical sequences. Sequences are
    // enumerated as an odometer over eigenbasis indices.
    let mut projector = ComplexMatrix::<T>::zeros(dim_l, dim_l);
    let mut seq = vec![0usize; l];
    loop {
        let mut counts = vec![0usize; d];
        for &s in &seq {
            counts[s] += 1;
        }
        if is_typical_count(&counts, &spectrum, delta, l, zero_tol) {
            let mut v: Vec<C<T>> = vec![C::one()];
            for &s in &seq {
                v = tensor_vec(&v, &es.eigenvectors.column(s));
            }
            for i in 0..dim_l {
                if v[i].is_zero() {
                    continue;
                }
                for j in 0..dim_l {
                    projector[(i, j)] += v[i] * v[j].conj();
                }
            }
        }
        // Advance the odometer.
        let mut pos = l;
        loop {
            if pos == 0 {
                break;
            }
            pos -= 1;
            seq[pos] += 1;
            if seq[pos] < d {
                break;
            }
            seq[pos] = 0;
        }
        if seq.iter().all(|&s| s == 0) {
            break;
        }
    }

    Ok(TypicalProjection {
        projector,
        blocklength: l,
        delta,
        mass,
        rank,
        h_l: h_block(l, d),
        phi_delta: phi_delta(delta, d),
        max_sequence_probability: max_prob,
    })
}

/// Maximally mixed state on the typical subspace, `q / tr(q)`.
pub fn flattened_state<T: Real>(
    rho: &DensityOperator<T>,
    delta: T,
    l: usize,
) -> Result<DensityOperator<T>> {
    let tp = frequency_typical_projection(rho, delta, l)?;
    if tp.rank == 0 {
        return Err(Error::EmptyTypicalProjector);
    }
    Ok(DensityOperator::from_matrix_unchecked(
        tp.projector.scale_real(T::one() / T::of_usize(tp.rank)),
    ))
}
