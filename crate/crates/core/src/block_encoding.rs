//! PREP/SEL linear combinations of unitaries and a Riemann-sum block encoding
//! of the truncated creation operator.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{is_hermitian, max_abs, real, CMat, CVec, ZERO};
use crate::pauli::PauliSum;

#[derive(Debug, Clone)]
pub struct LcuEncoding {
    pub betas: Vec<f64>,
    pub unitaries: Vec<CMat>,
    /// PREP|0⟩ = Σ √β_ℓ |ℓ⟩ / √Σβ.
    pub prep: CVec,
    /// Σ |ℓ⟩⟨ℓ| ⊗ U_ℓ.
    pub sel: CMat,
    pub normalization: f64,
}

pub fn lcu_encode(betas: &[f64], unitaries: &[CMat]) -> Result<LcuEncoding> {
    if betas.is_empty() || betas.len() != unitaries.len() {
        return Err(Error::Dimension(format!(
            "{} coefficients for {} unitaries",
            betas.len(),
            unitaries.len()
        )));
    }
    if let Some(b) = betas.iter().find(|&&b| !(b > 0.0)) {
        return Err(Error::Parameter(format!("LCU coefficient {b} is not positive")));
    }
    let d = unitaries[0].nrows();
    for (l, u) in unitaries.iter().enumerate() {
        if u.shape() != (d, d) {
            return Err(Error::Dimension(format!("unitary {l} has shape {:?}", u.shape())));
        }
        let defect = max_abs(&(u.adjoint() * u - CMat::identity(d, d)));
        if defect > 1e-10 {
            return Err(Error::Parameter(format!("U_{l} is not unitary (defect {defect:e})")));
        }
    }
    let norm: f64 = betas.iter().sum();
    let prep = CVec::from_iterator(betas.len(), betas.iter().map(|b| real((b / norm).sqrt())));
    let big = betas.len() * d;
    let mut sel = CMat::zeros(big, big);
    for (l, u) in unitaries.iter().enumerate() {
        sel.view_mut((l * d, l * d), (d, d)).copy_from(u);
    }
    Ok(LcuEncoding {
        betas: betas.to_vec(),
        unitaries: unitaries.to_vec(),
        prep,
        sel,
        normalization: norm,
    })
}

/// Folds each coefficient's phase into its Pauli string so that β_ℓ = |c_ℓ|.
pub fn lcu_from_pauli_sum(h: &PauliSum) -> Result<LcuEncoding> {
    let mut betas = Vec::new();
    let mut us = Vec::new();
    for term in h.terms() {
        let a = term.coeff.norm();
        if a == 0.0 {
            continue;
        }
        betas.push(a);
        let phase = term.coeff / a;
        us.push(crate::pauli::PauliTerm::new(term.letters.clone(), phase).to_matrix()?);
    }
    lcu_encode(&betas, &us)
}

impl LcuEncoding {
    pub fn dim(&self) -> usize {
        self.unitaries[0].nrows()
    }

    /// (⟨0|PREP† ⊗ I) SEL (PREP|0⟩ ⊗ I).
    pub fn block(&self) -> CMat {
        let d = self.dim();
        let mut out = CMat::zeros(d, d);
        let l = self.betas.len();
        for a in 0..l {
            for b in 0..l {
                let w = self.prep[a].conj() * self.prep[b];
                if w == ZERO {
                    continue;
                }
                out += self.sel.view((a * d, b * d), (d, d)) * w;
            }
        }
        out
    }

    /// ⌈Σβ t + ln(1/ε)⌉ queries to PREP and SEL.
    pub fn query_count(&self, t: f64, eps: f64) -> u64 {
        (self.normalization * t + (1.0 / eps).ln()).ceil().max(0.0) as u64
    }
}

/// Pieces of ∫₀^{fmax} dx (−1)^{[2x > fmax + f]} for one value f.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignIntegral {
    pub f: f64,
    /// x above which the integrand is −1.
    pub threshold: f64,
    pub plus_length: f64,
    pub minus_length: f64,
    pub integral: f64,
}

pub fn integral_sign_representation(values: &[f64], fmax: f64) -> Result<Vec<SignIntegral>> {
    values
        .iter()
        .map(|&f| {
            if !(0.0..=fmax).contains(&f) {
                return Err(Error::Domain(format!("f = {f} outside [0, {fmax}]")));
            }
            let threshold = 0.5 * (fmax + f);
            let plus_length = threshold;
            let minus_length = fmax - threshold;
            Ok(SignIntegral {
                f,
                threshold,
                plus_length,
                minus_length,
                integral: plus_length - minus_length,
            })
        })
        .collect()
}

/// Bit-operation counts for one SEL application.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CostModel {
    pub hadamards: u64,
    /// Ripple-carry increment on log Λ bits.
    pub shift_bit_ops: u64,
    /// Comparison 2ξ > Ξ, squaring of 2ξ − Ξ, product with Λ − 1, and the final comparison.
    pub inequality_bit_ops: u64,
    pub total: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BosonBlockEncoding {
    pub lambda: usize,
    pub xi: usize,
    /// Λ × Λ block encoding b†/√(Λ−1).
    #[serde(skip)]
    pub block: CMat,
    /// ‖block − b†/√(Λ−1)‖.
    pub error: f64,
    pub bound: f64,
    pub cost: CostModel,
}

fn log2_exact(n: usize, what: &str) -> Result<u32> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::Parameter(format!("{what} = {n} must be a power of 2 and at least 2")));
    }
    Ok(n.trailing_zeros())
}

/// Sign is −1 exactly when 2ξ > Ξ and (2ξ−Ξ)²(Λ−1) > Ξ²·((λ+1) mod Λ); ties give +1.
pub fn inequality_flips(xi_index: u64, xi: u64, lambda_dim: u64, lambda: u64) -> bool {
    if 2 * xi_index <= xi {
        return false;
    }
    let lhs = (2 * xi_index - xi) as u128;
    let lhs = lhs * lhs * (lambda_dim - 1) as u128;
    let rhs = (xi as u128) * (xi as u128) * ((lambda + 1) % lambda_dim) as u128;
    lhs > rhs
}

/// b† on occupations 0..Λ−1 with the wrap-around entry |0⟩⟨Λ−1| of weight zero.
pub fn truncated_creation(lambda: usize) -> CMat {
    let mut m = CMat::zeros(lambda, lambda);
    for l in 0..lambda {
        let to = (l + 1) % lambda;
        m[(to, l)] = real((to as f64).sqrt());
    }
    m
}

/// U_ξ = (sign flip)·(cyclic shift) for one PREP branch.
pub fn sel_branch(lambda: usize, xi: usize, xi_index: usize) -> CMat {
    let mut u = CMat::zeros(lambda, lambda);
    for l in 0..lambda {
        let s = if inequality_flips(xi_index as u64, xi as u64, lambda as u64, l as u64) {
            -1.0
        } else {
            1.0
        };
        u[((l + 1) % lambda, l)] = real(s);
    }
    u
}

pub fn cost_model(lambda: usize, xi: usize) -> Result<CostModel> {
    let bl = log2_exact(lambda, "Λ")? as u64;
    let bx = log2_exact(xi, "Ξ")? as u64;
    let compare_half = bx + 1;
    let square = (bx + 1) * (bx + 1);
    let times_lambda = 2 * (bx + 1) * bl;
    let compare_final = 2 * (bx + 1) + bl;
    let inequality = compare_half + square + times_lambda + compare_final;
    Ok(CostModel {
        hadamards: bx,
        shift_bit_ops: bl,
        inequality_bit_ops: inequality,
        total: bx + bl + inequality,
    })
}

/// Block of (⟨0|PREP†⊗I) SEL (PREP|0⟩⊗I) with a uniform PREP over Ξ branches.
pub fn boson_block_encode(lambda: usize, xi: usize) -> Result<BosonBlockEncoding> {
    let cost = cost_model(lambda, xi)?;
    let mut block = CMat::zeros(lambda, lambda);
    for l in 0..lambda {
        let flips = (0..xi)
            .filter(|&k| inequality_flips(k as u64, xi as u64, lambda as u64, l as u64))
            .count();
        block[((l + 1) % lambda, l)] = real((xi - 2 * flips) as f64 / xi as f64);
    }
    let target = truncated_creation(lambda) / real(((lambda - 1) as f64).sqrt());
    // the difference is a signed permutation pattern, so its norm is its largest entry
    let error = max_abs(&(&block - target));
    Ok(BosonBlockEncoding {
        lambda,
        xi,
        block,
        error,
        bound: 2.0 / xi as f64,
        cost,
    })
}

impl BosonBlockEncoding {
    /// The adjoint circuit's block, approximating b/√(Λ−1).
    pub fn adjoint_block(&self) -> CMat {
        self.block.adjoint()
    }
}

/// Smallest power of two Ξ ≥ 2 with 2/Ξ ≤ δ.
pub fn choose_xi(delta: f64) -> Result<usize> {
    if !(delta > 0.0) {
        return Err(Error::Parameter(format!("δ = {delta} must be positive")));
    }
    let mut xi: usize = 2;
    while 2.0 / (xi as f64) > delta {
        xi = xi
            .checked_mul(2)
            .ok_or_else(|| Error::Parameter(format!("δ = {delta} needs Ξ beyond usize")))?;
    }
    Ok(xi)
}

/// True when the LCU block equals H/Σβ for Hermitian `h` to `tol`.
pub fn verify_block(enc: &LcuEncoding, h: &CMat, tol: f64) -> bool {
    is_hermitian(h, 1e-10) && max_abs(&(enc.block() - h / real(enc.normalization))) <= tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encodings::BosonEncoding;
    use crate::linalg::{random_unitary, spectral_norm};
    use crate::models::{build_spin_boson, SpinBosonParams};
    use crate::pauli::Pauli;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_term_lcu() {
        let x = Pauli::X.matrix();
        let z = Pauli::Z.matrix();
        let enc = lcu_encode(&[1.0, 1.0], &[x.clone(), z.clone()]).unwrap();
        assert!(max_abs(&(enc.block() - (&x + &z) / real(2.0))) < 1e-15);
        let single = lcu_encode(&[0.3], &[z.clone()]).unwrap();
        assert_eq!(single.block(), z);
        assert!(lcu_encode(&[1.0, -1.0], &[x.clone(), z.clone()]).is_err());
        assert!(lcu_encode(&[1.0], &[x.clone() * real(2.0)]).is_err());
        assert_eq!(enc.query_count(1.0, 1e-3), (2.0 + 1000f64.ln()).ceil() as u64);
    }

    #[test]
    fn spin_boson_lcu_block() {
        let h = build_spin_boson(
            &SpinBosonParams {
                delta: 0.7,
                epsilon: 0.4,
                omegas: vec![1.0, 1.3],
                couplings: vec![0.5, -0.8],
                cutoffs: vec![1, 3],
            },
            BosonEncoding::Binary,
        )
        .unwrap();
        let enc = lcu_from_pauli_sum(&h.pauli).unwrap();
        let dense = h.pauli.to_matrix().unwrap();
        let norm: f64 = h.pauli.terms().iter().map(|t| t.coeff.norm()).sum();
        assert!((enc.normalization - norm).abs() < 1e-12);
        assert!(verify_block(&enc, &dense, 1e-10));
    }

    #[test]
    fn sign_representation_identity() {
        let lambda = 4;
        let f: Vec<f64> = (0..lambda).map(|l| (((l + 1) % lambda) as f64).sqrt()).collect();
        let fmax = 3f64.sqrt();
        for (s, want) in integral_sign_representation(&f, fmax).unwrap().iter().zip(&f) {
            assert!((s.integral - want).abs() < 1e-15);
        }
        let full = integral_sign_representation(&[2.0], 2.0).unwrap()[0];
        assert_eq!((full.minus_length, full.integral), (0.0, 2.0));
        let zero = integral_sign_representation(&[0.0], 2.0).unwrap()[0];
        assert_eq!((zero.plus_length, zero.minus_length, zero.integral), (1.0, 1.0, 0.0));
        assert!(integral_sign_representation(&[2.5], 2.0).is_err());
    }

    /// Riemann sum evaluated with floating-point square roots, independent of the integer test.
    fn float_block(lambda: usize, xi: usize) -> CMat {
        let s = ((lambda - 1) as f64).sqrt();
        let mut m = CMat::zeros(lambda, lambda);
        for l in 0..lambda {
            let f = (((l + 1) % lambda) as f64).sqrt();
            let sum: f64 = (0..xi)
                .map(|k| if 2.0 * k as f64 / xi as f64 * s > s + f { -1.0 } else { 1.0 })
                .sum();
            m[((l + 1) % lambda, l)] = real(sum / xi as f64);
        }
        m
    }

    #[test]
    fn block_matches_float_riemann_sum_away_from_ties() {
        for lambda in [4, 8, 16] {
            for xi in [16, 64, 256] {
                let enc = boson_block_encode(lambda, xi).unwrap();
                assert!(max_abs(&(&enc.block - float_block(lambda, xi))) <= 2.0 / xi as f64 + 1e-15);
            }
        }
    }

    #[test]
    fn block_error_within_bound_on_grid() {
        for lambda in [2, 4, 8, 16] {
            let mut last = f64::INFINITY;
            for k in 4..=12 {
                let xi = 1usize << k;
                let enc = boson_block_encode(lambda, xi).unwrap();
                assert!(enc.error <= enc.bound, "Λ={lambda} Ξ={xi}");
                let target = truncated_creation(lambda) / real(((lambda - 1) as f64).sqrt());
                assert!((spectral_norm(&(&enc.block - target)) - enc.error).abs() < 1e-14);
                assert!(enc.error <= last + 1e-15);
                last = enc.error;
                let adj = truncated_creation(lambda).adjoint() / real(((lambda - 1) as f64).sqrt());
                assert!(spectral_norm(&(enc.adjoint_block() - adj)) <= enc.bound + 1e-15);
            }
        }
        let e = boson_block_encode(8, 4096).unwrap();
        assert!(e.error <= 2.0 / 4096.0);
    }

    #[test]
    fn two_level_block_errs_only_on_wrap_entry() {
        for xi in [2, 8, 64] {
            let enc = boson_block_encode(2, xi).unwrap();
            assert_eq!(enc.block[(1, 0)].re, 1.0);
            assert_eq!(enc.block[(0, 1)].re, 2.0 / xi as f64);
            assert_eq!(enc.error, 2.0 / xi as f64);
        }
    }

    #[test]
    fn block_equals_explicit_prep_sel() {
        let (lambda, xi) = (4, 16);
        let us: Vec<CMat> = (0..xi).map(|k| sel_branch(lambda, xi, k)).collect();
        let enc = lcu_encode(&vec![1.0; xi], &us).unwrap();
        let direct = boson_block_encode(lambda, xi).unwrap();
        assert!(max_abs(&(enc.block() - direct.block)) < 1e-14);
    }

    #[test]
    fn non_power_of_two_rejected() {
        assert!(boson_block_encode(6, 16).is_err());
        assert!(boson_block_encode(4, 12).is_err());
        assert!(boson_block_encode(1, 16).is_err());
    }

    #[test]
    fn choose_xi_boundaries() {
        assert_eq!(choose_xi(0.01).unwrap(), 256);
        assert_eq!(choose_xi(1.0).unwrap(), 2);
        assert_eq!(choose_xi(5.0).unwrap(), 2);
        for k in 1..20 {
            let xi = 1usize << k;
            assert_eq!(choose_xi(2.0 / xi as f64).unwrap(), xi);
        }
        assert!(choose_xi(0.0).is_err());
    }

    #[test]
    fn cost_envelope() {
        let mut ratio_max: f64 = 0.0;
        for lambda in [2usize, 4, 8, 16, 64, 1024] {
            for k in 4..=20 {
                let xi = 1usize << k;
                let c = cost_model(lambda, xi).unwrap();
                let delta = 2.0 / xi as f64;
                let scale = (lambda as f64).log2().max(1.0) * (1.0 / delta).log2().max(1.0).powi(2);
                ratio_max = ratio_max.max(c.total as f64 / scale);
            }
        }
        assert!(ratio_max < 8.0, "{ratio_max}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn random_lcu_block_identity(seed in any::<u64>(), l in 1usize..=8, d in 1usize..=16) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let betas: Vec<f64> = (0..l).map(|_| rng.gen_range(0.05..2.0)).collect();
            let us: Vec<CMat> = (0..l).map(|_| random_unitary(d, &mut rng)).collect();
            let enc = lcu_encode(&betas, &us).unwrap();
            let mut want = CMat::zeros(d, d);
            for (b, u) in betas.iter().zip(&us) {
                want += u * real(*b);
            }
            want /= real(enc.normalization);
            prop_assert!(max_abs(&(enc.block() - want)) <= 1e-10);
        }
    }
}
