//! Certification formulas against brute-force state-level oracles.

use nalgebra::{Matrix4, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tweezer_exchange::qstate::{DensityMatrix, Mat4, PureState, C64};
use tweezer_exchange::witness::{
    certify, concurrence_lower, contrast_bound, fidelity_from_contrast, ppt_min_eigenvalue, s1_density,
    CertificationInput, Measured,
};

/// Random populations with a coherence inside the positivity cone.
fn random_s1(rng: &mut ChaCha8Rng) -> ([f64; 4], f64, f64) {
    let raw: [f64; 4] = std::array::from_fn(|_| -rng.random::<f64>().ln());
    let total: f64 = raw.iter().sum();
    let pops = raw.map(|v| v / total);
    let modulus = rng.random::<f64>() * (pops[1] * pops[2]).sqrt();
    let phase = rng.random::<f64>() * std::f64::consts::TAU;
    (pops, modulus, phase)
}

fn sqrt_psd(m: &Mat4) -> Mat4 {
    let eig = SymmetricEigen::new(*m);
    let d = Matrix4::from_diagonal(&eig.eigenvalues.map(|v| C64::from(v.max(0.0).sqrt())));
    eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/// Wootters concurrence via the spectrum of √(√ρ ρ̃ √ρ).
fn wootters(rho: &Mat4) -> f64 {
    let zero = C64::new(0.0, 0.0);
    let mut yy = Mat4::from_element(zero);
    // σy⊗σy in the {↑↑, ↑↓, ↓↑, ↓↓} basis.
    yy[(0, 3)] = C64::from(-1.0);
    yy[(3, 0)] = C64::from(-1.0);
    yy[(1, 2)] = C64::from(1.0);
    yy[(2, 1)] = C64::from(1.0);
    let tilde = yy * rho.map(|z| z.conj()) * yy;
    let s = sqrt_psd(rho);
    let r = s * tilde * s;
    let r = (r + r.adjoint()).map(|z| z * 0.5);
    let mut lambdas: Vec<f64> = SymmetricEigen::new(r).eigenvalues.iter().map(|v| v.max(0.0).sqrt()).collect();
    lambdas.sort_by(|a, b| b.partial_cmp(a).unwrap());
    (lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0)
}

#[test]
fn bound_is_equivalent_to_partial_transpose() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut disagreements = 0;
    let mut entangled = 0;
    for _ in 0..10_000 {
        let (pops, modulus, phase) = random_s1(&mut rng);
        let rho = s1_density(pops, C64::from_polar(modulus, phase)).unwrap();
        let margin = 4.0 * modulus - contrast_bound(pops[0], pops[3]);
        if margin.abs() < 1e-10 {
            continue;
        }
        let npt = ppt_min_eigenvalue(&rho) < 0.0;
        entangled += npt as usize;
        disagreements += ((margin > 0.0) != npt) as usize;
    }
    assert_eq!(disagreements, 0);
    assert!(entangled > 1000 && entangled < 9000, "{entangled}");
}

#[test]
fn concurrence_matches_wootters() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..1000 {
        let (pops, modulus, phase) = random_s1(&mut rng);
        let rho = s1_density(pops, C64::from_polar(modulus, phase)).unwrap();
        let oracle = wootters(rho.matrix());
        let bound = concurrence_lower(4.0 * modulus, pops[0], pops[3]);
        assert!((bound - oracle).abs() < 1e-7, "{bound} vs {oracle}");
    }
}

#[test]
fn concurrence_of_bell_and_product_states() {
    let bell = tweezer_exchange::qstate::density_from_pure(&PureState::psi_plus());
    assert!((wootters(bell.matrix()) - 1.0).abs() < 1e-7);
    assert!(wootters(DensityMatrix::maximally_mixed().matrix()) < 1e-7);
    assert_eq!(concurrence_lower(0.0, 0.25, 0.25), 0.0);
}

#[test]
fn fidelity_matches_bell_overlap() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let target = PureState::psi_plus();
    for _ in 0..1000 {
        let (pops, modulus, _) = random_s1(&mut rng);
        // Phase aligned with |Ψ+⟩ = (|↑↓⟩ + i|↓↑⟩)/√2.
        let rho = s1_density(pops, C64::new(0.0, -modulus)).unwrap();
        let direct = rho.fidelity_with(&target);
        let formula = fidelity_from_contrast(4.0 * modulus, pops[0], pops[3]).fidelity;
        assert!((direct - formula).abs() < 1e-12, "{direct} vs {formula}");
    }
}

#[test]
fn verdict_is_monotone() {
    let base = |c: f64, p1: f64, p2: f64| CertificationInput {
        contrast: Measured::new(c, 0.04),
        p_upup: Measured::new(p1, 0.014),
        p_dndn: Measured::new(p2, 0.005),
        ap_success_f: None,
    };
    let entangled = |c, p1, p2| certify(&base(c, p1, p2)).unwrap().entangled;
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..2000 {
        let (c, p1, p2) = (rng.random::<f64>(), 0.2 * rng.random::<f64>(), 0.2 * rng.random::<f64>());
        if entangled(c, p1, p2) {
            assert!(entangled((c + 0.05).min(1.0), p1, p2));
            assert!(entangled(c, p1 * 0.9, p2));
            assert!(entangled(c, p1, p2 * 0.9));
        } else {
            assert!(!entangled(c * 0.9, p1, p2));
            assert!(!entangled(c, p1 + 0.01, p2));
            assert!(!entangled(c, p1, p2 + 0.01));
        }
    }
}
