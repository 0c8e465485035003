//! Information quantities and closed-form bound functions: coherent
//! information, entropy exchange, entanglement fidelity, the entropy
//! continuity estimates, and the flattening corrections.

use crate::channels::KrausChannel;
use crate::compound::CompoundSet;
use crate::error::{Error, Result};
use crate::operators::{ComplexMatrix, SubsystemShape};
use crate::scalar::{binary_entropy, Real, C};
use crate::states::{
    entropy_of_operator, purify, DensityOperator, PureState,
};
use num_traits::Zero;

/// `(id (x) N)(|psi><psi|)` for a bipartite pure state whose right factor
/// feeds the channel.
pub fn channel_on_purification<T: Real>(
    psi: &PureState<T>,
    ch: &KrausChannel<T>,
) -> ComplexMatrix<T> {
    let factors = psi.shape().factors();
    assert_eq!(factors.len(), 2, "purification must be bipartite");
    let (d_a, d_in) = (factors[0], factors[1]);
    assert_eq!(d_in, ch.d_in());
    let d_out = ch.d_out();
    let mut out = ComplexMatrix::zeros(d_a * d_out, d_a * d_out);
    for a in ch.kraus() {
        // chi = (1 (x) A) psi, assembled blockwise.
        let mut chi = vec![C::<T>::zero(); d_a * d_out];
        for blk in 0..d_a {
            let seg = &psi.vector()[blk * d_in..(blk + 1) * d_in];
            let mapped = a.matvec(seg);
            chi[blk * d_out..(blk + 1) * d_out].copy_from_slice(&mapped);
        }
        for r in 0..chi.len() {
            if chi[r].is_zero() {
                continue;
            }
            for c in 0..chi.len() {
                let upd = chi[r] * chi[c].conj();
                out[(r, c)] += upd;
            }
        }
    }
    out
}

/// Entropy exchange `S_e(rho, N) = S((id (x) N)(|psi><psi|))` for any
/// purification `psi` of `rho`; purification-independent. Trace-decreasing
/// channels are evaluated without renormalization.
pub fn entropy_exchange<T: Real>(rho: &DensityOperator<T>, ch: &KrausChannel<T>) -> Result<T> {
    if rho.dim() != ch.d_in() {
        return Err(Error::DimensionMismatch(
            "entropy exchange: state and channel input differ".into(),
        ));
    }
    if ch.output_trace(rho)? <= T::zero() {
        return Err(Error::ZeroTraceOutput);
    }
    let psi = purify(rho);
    let joint = channel_on_purification(&psi, ch);
    Ok(entropy_of_operator(&joint))
}

/// Coherent information `I_c(rho, N) = S(N(rho)) - S_e(rho, N)`.
pub fn coherent_information<T: Real>(rho: &DensityOperator<T>, ch: &KrausChannel<T>) -> Result<T> {
    let out = ch.apply(rho)?;
    let s_out = entropy_of_operator(&out);
    Ok(s_out - entropy_exchange(rho, ch)?)
}

/// Entanglement fidelity by the Kraus trace formula `sum_k |tr(rho A_k)|^2`.
///
/// Defined for channels with equal input and output dimension (the setting in
/// which a purification overlap makes sense). Trace-decreasing maps are
/// evaluated verbatim, so values below `tr(N(rho))` are expected.
pub fn entanglement_fidelity<T: Real>(
    rho: &DensityOperator<T>,
    ch: &KrausChannel<T>,
) -> Result<T> {
    if ch.d_in() != ch.d_out() {
        return Err(Error::DimensionMismatch(
            "entanglement fidelity needs equal input and output dimensions".into(),
        ));
    }
    if rho.dim() != ch.d_in() {
        return Err(Error::DimensionMismatch(
            "entanglement fidelity: state and channel input differ".into(),
        ));
    }
    let mut f = T::zero();
    for a in ch.kraus() {
        let t = rho.matrix().matmul(a).trace();
        f += t.norm_sqr();
    }
    Ok(f)
}

/// `inf_N I_c(rho, N)` over a finite set.
pub fn compound_coherent_information<T: Real>(
    rho: &DensityOperator<T>,
    set: &CompoundSet<T>,
) -> Result<T> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut best = T::infinity();
    for ch in set.channels() {
        best = best.min(coherent_information(rho, ch)?);
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// Closed-form bound functions
// ---------------------------------------------------------------------------

/// Continuity bound `nu(x) = x + 8 x log(d_K) + 4 h(x)`.
pub fn nu<T: Real>(x: T, d_k: usize) -> Result<T> {
    if x < T::zero() || x > T::one() {
        return Err(Error::ParameterRange(format!("nu needs x in [0,1], got {x}")));
    }
    Ok(x + T::of(8.0) * x * T::of_usize(d_k).log2() + T::of(4.0) * binary_entropy(x))
}

/// Entropy difference bound `l (4 eps log d_K + 2 h(eps))` for channels at
/// diamond distance `eps`.
pub fn leung_smith_entropy_bound<T: Real>(eps: T, d_k: usize, l: usize) -> T {
    T::of_usize(l) * (T::of(4.0) * eps * T::of_usize(d_k).log2() + T::of(2.0) * binary_entropy(eps))
}

/// `|Delta S(rho) - Delta S(sigma)| <= 2/e + 4 log(b) sqrt(1-f)` for states
/// at fidelity `f` on a b-dimensional bipartite space.
pub fn devetak_delta_s_bound<T: Real>(f: T, b: usize) -> T {
    let f = f.max(T::zero()).min(T::one());
    T::of(2.0 / std::f64::consts::E) + T::of(4.0) * T::of_usize(b).log2() * (T::one() - f).sqrt()
}

/// `Delta S(x) = S(tr_1 x) - S(x)` on a bipartite state.
pub fn delta_s<T: Real>(
    x: &DensityOperator<T>,
    shape: &SubsystemShape,
) -> Result<T> {
    let reduced = crate::operators::partial_trace(x.matrix(), shape, &[1])?;
    Ok(entropy_of_operator(&reduced) - crate::states::von_neumann_entropy(x))
}

/// `-delta log2(delta / d)`: spectral broadening of the typical projection.
pub fn phi_delta<T: Real>(delta: T, d: usize) -> T {
    -delta * (delta / T::of_usize(d)).log2()
}

/// `(d / l) log2(l + 1)`: blocklength correction of the typical projection.
pub fn h_block<T: Real>(l: usize, d: usize) -> T {
    T::of_usize(d) / T::of_usize(l) * T::of_usize(l + 1).log2()
}

/// `-delta log2(delta / (d kappa))`: broadening of the reduced operation.
pub fn gamma_delta<T: Real>(delta: T, d: usize, kappa: usize) -> T {
    -delta * (delta / T::of_usize(d * kappa)).log2()
}

/// `(d kappa / l) log2(l + 1)`: blocklength correction of the reduced
/// operation.
pub fn h_prime_block<T: Real>(l: usize, d: usize, kappa: usize) -> T {
    T::of_usize(d * kappa) / T::of_usize(l) * T::of_usize(l + 1).log2()
}

/// Inputs to the flattening bounds `theta_l` and `Delta_l`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundFunctionInputs<T> {
    pub delta: T,
    pub t: T,
    pub l: usize,
    pub d_h: usize,
    pub d_k: usize,
    pub d_env: usize,
    pub lambda_min_in: T,
    pub lambda_min_out: T,
}

impl<T: Real> BoundFunctionInputs<T> {
    fn check_dims(&self) -> Result<()> {
        if self.d_h < 1 || self.d_k < 1 || self.d_env < 1 || self.l < 1 {
            return Err(Error::ParameterRange("dimensions must be >= 1".into()));
        }
        Ok(())
    }
}

/// Entropy flattening bound
/// `theta_l = (d_H/l) log(l+1) - d_H delta log delta
///            - d_H delta (log lambda_min_in + log lambda_min_out)`.
pub fn theta_l<T: Real>(inp: &BoundFunctionInputs<T>) -> Result<T> {
    inp.check_dims()?;
    if inp.delta <= T::zero() || inp.delta >= T::one() / (T::of(2.0) * T::of_usize(inp.d_h)) {
        return Err(Error::ParameterRange(format!(
            "theta_l needs delta in (0, 1/(2 d_H)), got {}",
            inp.delta
        )));
    }
    if inp.lambda_min_in <= T::zero() || inp.lambda_min_out <= T::zero() {
        return Err(Error::ParameterRange(
            "theta_l needs positive minimal eigenvalues".into(),
        ));
    }
    let dh = T::of_usize(inp.d_h);
    let lf = T::of_usize(inp.l);
    Ok(dh / lf * T::of_usize(inp.l + 1).log2() - dh * inp.delta * inp.delta.log2()
        - dh * inp.delta * (inp.lambda_min_in.log2() + inp.lambda_min_out.log2()))
}

/// Uniform flattening bound
/// `Delta_l = 2 theta_l(delta, t/d_H, t/d_K) + 2 theta_l(delta, t/d_H, t/d_env)
///            - 4t log(t/(d_K d_env)) - 2lt log(lt/(d_K d_env))`.
pub fn delta_l<T: Real>(inp: &BoundFunctionInputs<T>) -> Result<T> {
    inp.check_dims()?;
    let lf = T::of_usize(inp.l);
    if inp.t <= T::zero() || inp.t >= T::one() / (lf * T::of(std::f64::consts::E)) {
        return Err(Error::ParameterRange(format!(
            "delta_l needs t in (0, 1/(l e)), got {}",
            inp.t
        )));
    }
    let dh = T::of_usize(inp.d_h);
    let dk = T::of_usize(inp.d_k);
    let de = T::of_usize(inp.d_env);
    let theta_out = theta_l(&BoundFunctionInputs {
        lambda_min_in: inp.t / dh,
        lambda_min_out: inp.t / dk,
        ..*inp
    })?;
    let theta_env = theta_l(&BoundFunctionInputs {
        lambda_min_in: inp.t / dh,
        lambda_min_out: inp.t / de,
        ..*inp
    })?;
    let two = T::of(2.0);
    let four = T::of(4.0);
    Ok(two * theta_out + two * theta_env - four * inp.t * (inp.t / (dk * de)).log2()
        - two * lf * inp.t * (lf * inp.t / (dk * de)).log2())
}

/// `rho^{(t)} = (1-t) rho + (t/d) I`.
pub fn perturbed_state<T: Real>(rho: &DensityOperator<T>, t: T) -> Result<DensityOperator<T>> {
    if t < T::zero() || t > T::one() {
        return Err(Error::ParameterRange(format!(
            "perturbation weight must lie in [0,1], got {t}"
        )));
    }
    let d = rho.dim();
    let m = rho
        .matrix()
        .scale_real(T::one() - t)
        .add(&ComplexMatrix::identity(d).scale_real(t / T::of_usize(d)));
    Ok(DensityOperator::from_matrix_unchecked(m))
}

/// `N^{(t)} = (1-t) N + t T`.
pub fn perturbed_channel<T: Real>(ch: &KrausChannel<T>, t: T) -> Result<KrausChannel<T>> {
    if t < T::zero() || t > T::one() {
        return Err(Error::ParameterRange(format!(
            "perturbation weight must lie in [0,1], got {t}"
        )));
    }
    crate::channels::mix(
        &[
            ch.clone(),
            crate::channels::useless_channel(ch.d_in(), ch.d_out()),
        ],
        &[T::one() - t, t],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::tests::{dephasing, random_channel};
    use crate::channels::{complementary, mix, useless_channel};
    use crate::operators::haar_unitary;
    use crate::rng::SeedStream;
    use crate::states::{maximally_entangled, von_neumann_entropy};

    fn mixed_qubit() -> DensityOperator<f64> {
        DensityOperator::maximally_mixed_full(2)
    }

    #[test]
    fn entropy_exchange_identity_is_zero() {
        let rho = crate::states::tests::random_density(2, 1);
        let s = entropy_exchange(&rho, &KrausChannel::identity(2)).unwrap();
        assert!(s.abs() < 1e-9);
    }

    #[test]
    fn entropy_exchange_useless_channel() {
        // Joint output is rho_a (x) I/d, so S_e = S(rho) + log d.
        let rho = mixed_qubit();
        let s = entropy_exchange(&rho, &useless_channel(2, 2)).unwrap();
        assert!((s - 2.0).abs() < 1e-9);
    }

    #[test]
    fn entropy_exchange_matches_complementary_channel() {
        for seed in 0..6 {
            let ch = random_channel(2, 2, 3, 500 + seed);
            let rho = crate::states::tests::random_density(2, 600 + seed);
            let direct = entropy_exchange(&rho, &ch).unwrap();
            let env = complementary(&ch).apply(&rho).unwrap();
            let via_env = entropy_of_operator(&env);
            assert!(
                (direct - via_env).abs() < 1e-9,
                "purification {direct} vs complementary {via_env}"
            );
        }
    }

    #[test]
    fn entropy_exchange_purification_independent() {
        // Canonical purification versus an ancilla-rotated one.
        let ch = random_channel(3, 3, 2, 700);
        let rho = crate::states::tests::random_density(3, 701);
        let psi = purify(&rho);
        let mut rng = SeedStream::new(702).stream(0);
        let w = haar_unitary::<f64, _>(3, &mut rng);
        let mut rotated = vec![C::<f64>::zero(); 9];
        for a in 0..3 {
            for b in 0..3 {
                for i in 0..3 {
                    let upd = w[(a, b)] * psi.vector()[b * 3 + i];
                    rotated[a * 3 + i] += upd;
                }
            }
        }
        let psi2 = PureState::new(rotated, SubsystemShape::new(vec![3, 3])).unwrap();
        let s1 = entropy_of_operator(&channel_on_purification(&psi, &ch));
        let s2 = entropy_of_operator(&channel_on_purification(&psi2, &ch));
        assert!((s1 - s2).abs() < 1e-9);

        // Entanglement fidelity agrees between the Kraus formula and the
        // purification overlaps.
        let f_formula = entanglement_fidelity(&rho, &ch).unwrap();
        for psi_x in [&psi, &psi2] {
            let joint = channel_on_purification(psi_x, &ch);
            let mut overlap = C::<f64>::zero();
            for r in 0..9 {
                for c in 0..9 {
                    overlap += psi_x.vector()[r].conj() * joint[(r, c)] * psi_x.vector()[c];
                }
            }
            assert!((overlap.re - f_formula).abs() < 1e-9);
            assert!(overlap.im.abs() < 1e-10);
        }
    }

    #[test]
    fn coherent_information_identity_and_useless() {
        let rho = crate::states::tests::random_density(2, 10);
        let ic_id = coherent_information(&rho, &KrausChannel::identity(2)).unwrap();
        assert!((ic_id - von_neumann_entropy(&rho)).abs() < 1e-9);

        let ic_t = coherent_information(&mixed_qubit(), &useless_channel(2, 2)).unwrap();
        assert!((ic_t + 1.0).abs() < 1e-9);
    }

    #[test]
    fn coherent_information_depolarizing_oracle() {
        // Kraus weights (0.85, .05, .05, .05) on I/2: the environment state is
        // diagonal with exactly these weights, so I_c = 1 - H(weights).
        let i = ComplexMatrix::<f64>::identity(2);
        let x = ComplexMatrix::from_rows(&[
            vec![C::new(0.0, 0.0), C::new(1.0, 0.0)],
            vec![C::new(1.0, 0.0), C::new(0.0, 0.0)],
        ]);
        let y = ComplexMatrix::from_rows(&[
            vec![C::new(0.0, 0.0), C::new(0.0, -1.0)],
            vec![C::new(0.0, 1.0), C::new(0.0, 0.0)],
        ]);
        let z = ComplexMatrix::diag_real(&[1.0, -1.0]);
        let w = [0.85f64, 0.05, 0.05, 0.05];
        let ch = KrausChannel::new(vec![
            i.scale_real(w[0].sqrt()),
            x.scale_real(w[1].sqrt()),
            y.scale_real(w[2].sqrt()),
            z.scale_real(w[3].sqrt()),
        ])
        .unwrap();
        let h: f64 = -w.iter().map(|&p| p * p.log2()).sum::<f64>();
        let ic = coherent_information(&mixed_qubit(), &ch).unwrap();
        assert!((ic - (1.0 - h)).abs() < 1e-9, "ic {ic} vs {}", 1.0 - h);
        assert!((ic - 0.15241532017542614).abs() < 1e-9);
    }

    #[test]
    fn entanglement_fidelity_cases() {
        let rho = crate::states::tests::random_density(2, 20);
        assert!((entanglement_fidelity(&rho, &KrausChannel::identity(2)).unwrap() - 1.0).abs() < 1e-12);
        let f = entanglement_fidelity(&mixed_qubit(), &useless_channel(2, 2)).unwrap();
        assert!((f - 0.25).abs() < 1e-12);
    }

    #[test]
    fn entanglement_fidelity_affine_in_channel() {
        let a = random_channel(2, 2, 2, 30);
        let b = random_channel(2, 2, 3, 31);
        let rho = crate::states::tests::random_density(2, 32);
        for &w in &[0.2f64, 0.5, 0.9] {
            let m = mix(&[a.clone(), b.clone()], &[w, 1.0 - w]).unwrap();
            let lhs = entanglement_fidelity(&rho, &m).unwrap();
            let rhs = w * entanglement_fidelity(&rho, &a).unwrap()
                + (1.0 - w) * entanglement_fidelity(&rho, &b).unwrap();
            assert!((lhs - rhs).abs() < 1e-10);
        }
    }

    #[test]
    fn compound_minimum() {
        let id = KrausChannel::<f64>::identity(2);
        let t = useless_channel(2, 2);
        let rho = mixed_qubit();
        let set = CompoundSet::new(vec![id.clone(), t], vec!["id".into(), "t".into()]).unwrap();
        let v = compound_coherent_information(&rho, &set).unwrap();
        assert!((v + 1.0).abs() < 1e-9);
        let set2 = CompoundSet::new(vec![id.clone(), id], vec!["a".into(), "b".into()]).unwrap();
        let v2 = compound_coherent_information(&rho, &set2).unwrap();
        assert!((v2 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn nu_values() {
        assert!(nu(0.0f64, 4).unwrap().abs() < 1e-15);
        assert!((nu(1.0f64, 2).unwrap() - 9.0).abs() < 1e-12);
        let v = nu(0.01f64, 2).unwrap();
        let expect = 0.01 + 0.08 + 4.0 * binary_entropy(0.01f64);
        assert!((v - expect).abs() < 1e-15);
        assert!((v - 0.41317254358364475).abs() < 1e-12);
        assert!(nu(1.5f64, 2).is_err());
    }

    #[test]
    fn leung_smith_values() {
        assert!(leung_smith_entropy_bound(0.0f64, 2, 3).abs() < 1e-15);
        assert!((leung_smith_entropy_bound(0.5f64, 2, 1) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn leung_smith_entropy_difference_oracle() {
        // Channels at certified Choi-upper distance eps; entropy difference of
        // lifted outputs on random purifications stays within the bound.
        let seeds = SeedStream::new(40);
        for l in 1..=2usize {
            for trial in 0..4u64 {
                let ch = random_channel(2, 2, 2, 800 + trial);
                let other = random_channel(2, 2, 2, 900 + trial);
                let near = mix(&[ch.clone(), other], &[0.97, 0.03]).unwrap();
                let eps = crate::channels::choi_upper_distance(&ch, &near).unwrap();
                assert!(eps < 0.5);
                let chl = crate::channels::tensor_power(&ch, l).unwrap();
                let nearl = crate::channels::tensor_power(&near, l).unwrap();
                let rho = crate::states::tests::random_density(2usize.pow(l as u32), 77 + trial);
                let psi = purify(&rho);
                let s1 = entropy_of_operator(&channel_on_purification(&psi, &chl));
                let s2 = entropy_of_operator(&channel_on_purification(&psi, &nearl));
                let bound = leung_smith_entropy_bound(eps, 2, l);
                assert!(
                    (s1 - s2).abs() <= bound + 1e-9,
                    "l={l} trial={trial}: |{s1}-{s2}| > {bound}"
                );
                let _ = seeds;
            }
        }
    }

    #[test]
    fn devetak_bound_values_and_oracle() {
        assert!((devetak_delta_s_bound(1.0f64, 4) - 2.0 / std::f64::consts::E).abs() < 1e-15);
        let v = devetak_delta_s_bound(0.75f64, 4);
        assert!((v - (2.0 / std::f64::consts::E + 4.0)).abs() < 1e-12);

        // Direct Delta-S evaluation on random two-qubit pairs.
        let shape = SubsystemShape::new(vec![2, 2]);
        for seed in 0..6 {
            let rho = crate::states::tests::random_density(4, 1000 + seed);
            let sigma = crate::states::tests::random_density(4, 1100 + seed);
            let f = crate::states::fidelity(&rho, &sigma).unwrap();
            let lhs = (delta_s(&rho, &shape).unwrap() - delta_s(&sigma, &shape).unwrap()).abs();
            let bound = devetak_delta_s_bound(f, 4);
            assert!(lhs <= bound + 1e-9, "{lhs} > {bound} at fidelity {f}");
        }
    }

    #[test]
    fn theta_l_arithmetic() {
        let inp = BoundFunctionInputs {
            delta: 0.1f64,
            t: 0.01,
            l: 1,
            d_h: 2,
            d_k: 2,
            d_env: 4,
            lambda_min_in: 0.5,
            lambda_min_out: 0.5,
        };
        let v = theta_l(&inp).unwrap();
        let expect = 2.0 - 0.2 * 0.1f64.log2() + 0.4;
        assert!((v - expect).abs() < 1e-12);
        assert!((v - 3.0643856189774724).abs() < 1e-12);

        // delta -> 0+, large l: the bound vanishes.
        let small = BoundFunctionInputs {
            delta: 1e-9,
            l: 1_000_000,
            ..inp
        };
        assert!(theta_l(&small).unwrap() < 1e-4);
    }

    #[test]
    fn delta_l_nonnegative_and_monotone_spotcheck() {
        let base = BoundFunctionInputs {
            delta: 0.1f64,
            t: 0.01,
            l: 2,
            d_h: 2,
            d_k: 2,
            d_env: 4,
            lambda_min_in: 0.0,
            lambda_min_out: 0.0,
        };
        let v2 = delta_l(&base).unwrap();
        assert!(v2 > 0.0);
        // Scale delta*l and t*l fixed: Delta_l shrinks with l.
        let v4 = delta_l(&BoundFunctionInputs {
            delta: 0.05,
            t: 0.005,
            l: 4,
            ..base
        })
        .unwrap();
        assert!(v4 < v2, "Delta_4 {v4} vs Delta_2 {v2}");
        // Range checks.
        assert!(delta_l(&BoundFunctionInputs { t: 0.5, ..base }).is_err());
        assert!(delta_l(&BoundFunctionInputs { delta: 0.3, ..base }).is_err());
    }

    #[test]
    fn perturbed_state_and_channel() {
        let rho = DensityOperator::<f64>::from_pure(&[C::new(1.0, 0.0), C::new(0.0, 0.0)]).unwrap();
        let p = perturbed_state(&rho, 0.1).unwrap();
        let spec = p.spectrum();
        assert!((spec[0] - 0.05).abs() < 1e-12 && (spec[1] - 0.95).abs() < 1e-12);
        assert!(perturbed_state(&rho, 0.0).unwrap().matrix().approx_eq(rho.matrix(), 0.0));
        let full = perturbed_state(&rho, 1.0).unwrap();
        assert!(full.matrix().approx_eq(DensityOperator::maximally_mixed_full(2).matrix(), 1e-15));

        let ch = dephasing(0.25);
        let t = useless_channel::<f64>(2, 2);
        let p0 = perturbed_channel(&ch, 0.0).unwrap();
        let rho2 = crate::states::tests::random_density(2, 55);
        assert!(p0.apply(&rho2).unwrap().approx_eq(&ch.apply(&rho2).unwrap(), 1e-12));
        let p1 = perturbed_channel(&ch, 1.0).unwrap();
        assert!(p1.apply(&rho2).unwrap().approx_eq(&t.apply(&rho2).unwrap(), 1e-12));

        // Choi distance to ch scales linearly in t.
        let base = crate::channels::choi_upper_distance(&ch, &t).unwrap();
        for &tt in &[0.1f64, 0.2, 0.4] {
            let pt = perturbed_channel(&ch, tt).unwrap();
            let d = crate::channels::choi_upper_distance(&ch, &pt).unwrap();
            assert!((d - tt * base).abs() < 1e-9);
        }
    }

    #[test]
    fn data_processing_inequality() {
        for seed in 0..8 {
            let n = random_channel(2, 2, 2, 2000 + seed);
            let r = random_channel(2, 2, 2, 2100 + seed);
            let rho = crate::states::tests::random_density(2, 2200 + seed);
            let composed = r.compose(&n).unwrap();
            let lhs = coherent_information(&rho, &composed).unwrap();
            let rhs = coherent_information(&rho, &n).unwrap();
            assert!(lhs <= rhs + 1e-9, "data processing violated: {lhs} > {rhs}");
        }
    }

    #[test]
    fn coherent_information_bounded_by_input_entropy() {
        for seed in 0..5 {
            let n = random_channel(2, 2, 3, 2300 + seed);
            let sub = crate::states::Subspace::<f64>::computational(2, 2);
            let pi = crate::states::maximally_mixed(&sub);
            let ic = coherent_information(&pi, &n).unwrap();
            assert!(ic <= von_neumann_entropy(&pi) + 1e-9);
        }
    }

    #[test]
    fn generation_overlap_equals_entanglement_fidelity() {
        // F(psi, (id (x) N)(psi)) with psi maximally entangled on k x k equals
        // F_e(pi_k, N).
        let ch = random_channel(2, 2, 2, 66);
        let psi = maximally_entangled::<f64>(2);
        let joint = channel_on_purification(&psi, &ch);
        let mut overlap = C::<f64>::zero();
        for r in 0..4 {
            for c in 0..4 {
                overlap += psi.vector()[r].conj() * joint[(r, c)] * psi.vector()[c];
            }
        }
        let fe = entanglement_fidelity(&DensityOperator::maximally_mixed_full(2), &ch).unwrap();
        assert!((overlap.re - fe).abs() < 1e-10);
    }
}
