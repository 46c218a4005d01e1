//! Entanglement certification from a parity contrast and aligned-spin
//! populations.
//!
//! For the density-matrix family with populations on the diagonal and a
//! single `↑↓`/`↓↑` coherence ε, the state is entangled iff
//! `C = 4|ε| > 4√(P↑↑·P↓↓)`. The partial-transpose test is provided as an
//! independent check valid for any two-qubit state.

use nalgebra::Matrix4;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qstate::{hermitian_eigenvalues, DensityMatrix, Mat4, StateError, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WitnessError {
    #[error("`{field}` out of range ({value})")]
    InvalidInput { field: &'static str, value: f64 },
    #[error("contrast / f = {0} exceeds 2: inconsistent with |ε| ≤ 1/2")]
    InconsistentContrast(f64),
    #[error(transparent)]
    State(#[from] StateError),
}

/// Value with a one-standard-deviation uncertainty.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    pub value: f64,
    pub sigma: f64,
}

impl Measured {
    pub fn new(value: f64, sigma: f64) -> Self {
        Self { value, sigma }
    }

    pub fn exact(value: f64) -> Self {
        Self { value, sigma: 0.0 }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificationInput {
    pub contrast: Measured,
    pub p_upup: Measured,
    pub p_dndn: Measured,
    pub ap_success_f: Option<Measured>,
}

impl CertificationInput {
    pub fn validate(&self) -> Result<(), WitnessError> {
        let check = |field, v: f64, lo: f64, hi: f64| {
            if v.is_finite() && (lo..=hi).contains(&v) {
                Ok(())
            } else {
                Err(WitnessError::InvalidInput { field, value: v })
            }
        };
        check("contrast", self.contrast.value, 0.0, f64::MAX)?;
        check("contrast_se", self.contrast.sigma, 0.0, f64::MAX)?;
        check("p_upup", self.p_upup.value, 0.0, 1.0)?;
        check("p_upup_se", self.p_upup.sigma, 0.0, f64::MAX)?;
        check("p_dndn", self.p_dndn.value, 0.0, 1.0)?;
        check("p_dndn_se", self.p_dndn.sigma, 0.0, f64::MAX)?;
        if let Some(f) = self.ap_success_f {
            check("ap_success_f", f.value, f64::MIN_POSITIVE, 1.0)?;
            check("ap_success_f_se", f.sigma, 0.0, f64::MAX)?;
        }
        Ok(())
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityWitness {
    pub fidelity: f64,
    pub sigma: f64,
    /// F > 1/2
    pub entangled: bool,
    /// The same test written as C > 2(P↑↑ + P↓↓).
    pub contrast_form: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuccessCorrected {
    /// Fidelity of the success-projected state.
    pub f_succ: FidelityWitness,
    /// Threshold f/2 on the uncorrected fidelity equivalent to F_succ > 1/2.
    pub actual_threshold: f64,
    pub corrected_contrast: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificationResult {
    pub contrast: Measured,
    pub c_bound: Measured,
    pub entangled: bool,
    pub sigma_separation: f64,
    pub fidelity: FidelityWitness,
    pub success_corrected: Option<SuccessCorrected>,
    pub concurrence_lower: f64,
}

/// Modulus and argument of ⟨↑↓|ρ|↓↑⟩.
pub fn epsilon_coherence(rho: &DensityMatrix) -> (f64, f64) {
    let eps = rho.matrix()[(1, 2)];
    (eps.norm(), eps.arg())
}

/// Builds the state with the given spin populations and `↑↓`/`↓↑`
/// coherence, all other coherences zero.
pub fn s1_density(populations: [f64; 4], eps: C64) -> Result<DensityMatrix, StateError> {
    let mut m = Mat4::from_diagonal(&populations.map(C64::from).into());
    m[(1, 2)] = eps;
    m[(2, 1)] = eps.conj();
    DensityMatrix::new(m)
}

/// 4·√(P↑↑·P↓↓)
pub fn contrast_bound(p_upup: f64, p_dndn: f64) -> f64 {
    4.0 * (p_upup * p_dndn).sqrt()
}

/// First-order uncertainty of [`contrast_bound`]. At a zero population the
/// derivative diverges, so the shift of the bound under a one-sigma
/// increase of both populations is used instead.
pub fn contrast_bound_sigma(p_upup: Measured, p_dndn: Measured) -> f64 {
    let (p1, p2) = (p_upup.value, p_dndn.value);
    if p1 > 0.0 && p2 > 0.0 {
        let d1 = 2.0 * (p2 / p1).sqrt() * p_upup.sigma;
        let d2 = 2.0 * (p1 / p2).sqrt() * p_dndn.sigma;
        d1.hypot(d2)
    } else {
        contrast_bound(p1 + p_upup.sigma, p2 + p_dndn.sigma) - contrast_bound(p1, p2)
    }
}

/// F = 1/2 + C/4 − (P↑↑ + P↓↓)/2
pub fn fidelity_from_contrast(contrast: f64, p_upup: f64, p_dndn: f64) -> FidelityWitness {
    let fidelity = 0.5 + 0.25 * contrast - 0.5 * (p_upup + p_dndn);
    FidelityWitness {
        fidelity,
        sigma: 0.0,
        entangled: fidelity > 0.5,
        contrast_form: contrast > 2.0 * (p_upup + p_dndn),
    }
}

fn fidelity_sigma(contrast: Measured, p_upup: Measured, p_dndn: Measured) -> f64 {
    (0.25 * contrast.sigma).hypot(0.5 * p_upup.sigma.hypot(p_dndn.sigma))
}

/// Fidelity of the passage-success component, using 4|ε| = C/f.
pub fn f_succ_correction(contrast: f64, f: f64, p_upup: f64, p_dndn: f64) -> Result<SuccessCorrected, WitnessError> {
    if !(f > 0.0 && f <= 1.0) {
        return Err(WitnessError::InvalidInput { field: "ap_success_f", value: f });
    }
    let corrected = contrast / f;
    if corrected > 2.0 {
        return Err(WitnessError::InconsistentContrast(corrected));
    }
    Ok(SuccessCorrected {
        f_succ: fidelity_from_contrast(corrected, p_upup, p_dndn),
        actual_threshold: 0.5 * f,
        corrected_contrast: corrected,
    })
}

/// max(0, (C − 4√(P↑↑P↓↓))/2)
pub fn concurrence_lower(contrast: f64, p_upup: f64, p_dndn: f64) -> f64 {
    (0.5 * (contrast - contrast_bound(p_upup, p_dndn))).max(0.0)
}

/// Partial transpose over the right atom.
pub fn partial_transpose(rho: &DensityMatrix) -> Mat4 {
    let m = rho.matrix();
    Matrix4::from_fn(|row, col| {
        let (l, r) = (row / 2, row % 2);
        let (lp, rp) = (col / 2, col % 2);
        m[(2 * l + rp, 2 * lp + r)]
    })
}

/// Smallest eigenvalue of the partial transpose; negative iff entangled.
pub fn ppt_min_eigenvalue(rho: &DensityMatrix) -> f64 {
    hermitian_eigenvalues(&partial_transpose(rho))[0]
}

pub fn certify(inp: &CertificationInput) -> Result<CertificationResult, WitnessError> {
    inp.validate()?;
    let c = inp.contrast;
    let bound = Measured::new(
        contrast_bound(inp.p_upup.value, inp.p_dndn.value),
        contrast_bound_sigma(inp.p_upup, inp.p_dndn),
    );
    let margin = c.value - bound.value;
    let sigma = c.sigma.hypot(bound.sigma);
    let sigma_separation = if sigma > 0.0 {
        margin / sigma
    } else if margin == 0.0 {
        0.0
    } else {
        margin.signum() * f64::INFINITY
    };

    let mut fidelity = fidelity_from_contrast(c.value, inp.p_upup.value, inp.p_dndn.value);
    fidelity.sigma = fidelity_sigma(c, inp.p_upup, inp.p_dndn);

    let success_corrected = match inp.ap_success_f {
        Some(f) => {
            let mut sc = f_succ_correction(c.value, f.value, inp.p_upup.value, inp.p_dndn.value)?;
            let dc = Measured::new(sc.corrected_contrast, (c.sigma / f.value).hypot(c.value * f.sigma / (f.value * f.value)));
            sc.f_succ.sigma = fidelity_sigma(dc, inp.p_upup, inp.p_dndn);
            Some(sc)
        }
        None => None,
    };

    Ok(CertificationResult {
        contrast: c,
        c_bound: bound,
        entangled: c.value > bound.value,
        sigma_separation,
        fidelity,
        success_corrected,
        concurrence_lower: concurrence_lower(c.value, inp.p_upup.value, inp.p_dndn.value),
    })
}

/// Resampled distribution of the margin C − C_bnd.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloCheck {
    pub samples: usize,
    pub mean_margin: f64,
    pub sd_margin: f64,
    /// mean / sd of the margin.
    pub separation: f64,
    /// Fraction of samples with C ≤ C_bnd.
    pub separable_fraction: f64,
    /// 0.135th percentile of the margin (the one-sided 3σ point).
    pub margin_p00135: f64,
}

/// Draws Gaussian C and populations (populations clipped to [0, 1]).
pub fn certify_monte_carlo(inp: &CertificationInput, samples: usize, seed: u64) -> Result<MonteCarloCheck, WitnessError> {
    inp.validate()?;
    let n = samples.max(2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let mut margins: Vec<f64> = (0..n)
        .map(|_| {
            let c = inp.contrast.value + inp.contrast.sigma * unit.sample(&mut rng);
            let p1 = (inp.p_upup.value + inp.p_upup.sigma * unit.sample(&mut rng)).clamp(0.0, 1.0);
            let p2 = (inp.p_dndn.value + inp.p_dndn.sigma * unit.sample(&mut rng)).clamp(0.0, 1.0);
            c - contrast_bound(p1, p2)
        })
        .collect();
    let mean = margins.iter().sum::<f64>() / n as f64;
    let var = margins.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let separable = margins.iter().filter(|m| **m <= 0.0).count();
    margins.sort_by(f64::total_cmp);
    let idx = ((0.00135 * n as f64).floor() as usize).min(n - 1);
    let sd = var.sqrt();
    Ok(MonteCarloCheck {
        samples: n,
        mean_margin: mean,
        sd_margin: sd,
        separation: if sd > 0.0 { mean / sd } else { f64::INFINITY },
        separable_fraction: separable as f64 / n as f64,
        margin_p00135: margins[idx],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{density_from_pure, PureState};
    use rand::Rng;

    fn paper_input(f: Option<Measured>) -> CertificationInput {
        CertificationInput {
            contrast: Measured::new(0.49, 0.04),
            p_upup: Measured::new(0.071, 0.014),
            p_dndn: Measured::new(0.016, 0.005),
            ap_success_f: f,
        }
    }

    fn paper_s1(eps: C64) -> DensityMatrix {
        let anti = 0.5 * (1.0 - 0.071 - 0.016);
        s1_density([0.071, anti, anti, 0.016], eps).unwrap()
    }

    #[test]
    fn epsilon_examples() {
        let (m, _) = epsilon_coherence(&density_from_pure(&PureState::psi_plus()));
        assert!((m - 0.5).abs() < 1e-15);
        assert_eq!(epsilon_coherence(&DensityMatrix::diagonal([0.1, 0.2, 0.3, 0.4]).unwrap()).0, 0.0);
        let (m, _) = epsilon_coherence(&paper_s1(C64::new(0.49 / 4.0, 0.0)));
        assert!((m - 0.1225).abs() < 1e-15);
    }

    #[test]
    fn bound_examples() {
        assert!((contrast_bound(0.071, 0.016) - 0.134_818).abs() < 1e-6);
        assert_eq!(contrast_bound(0.0, 0.3), 0.0);
        assert!((contrast_bound(0.25, 0.25) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn certify_examples() {
        let r = certify(&paper_input(None)).unwrap();
        assert!(r.entangled);
        assert!(r.sigma_separation > 7.0 && r.sigma_separation < 8.5, "{}", r.sigma_separation);
        assert!((r.c_bound.sigma - 0.024_908).abs() < 1e-5);

        let b = contrast_bound(0.071, 0.016);
        let at = CertificationInput { contrast: Measured::new(b, 0.04), ..paper_input(None) };
        assert!(!certify(&at).unwrap().entangled);
        let zero = CertificationInput { contrast: Measured::new(0.0, 0.04), ..paper_input(None) };
        assert!(!certify(&zero).unwrap().entangled);
    }

    #[test]
    fn certify_rejects_bad_input() {
        let bad = CertificationInput { p_upup: Measured::new(1.3, 0.0), ..paper_input(None) };
        assert!(matches!(certify(&bad), Err(WitnessError::InvalidInput { field: "p_upup", .. })));
    }

    #[test]
    fn delta_method_fallback_at_zero_population() {
        let s = contrast_bound_sigma(Measured::new(0.0, 0.01), Measured::new(0.05, 0.01));
        assert!((s - 4.0 * (0.01f64 * 0.06).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn fidelity_examples() {
        assert!((fidelity_from_contrast(2.0, 0.0, 0.0).fidelity - 1.0).abs() < 1e-15);
        let f = fidelity_from_contrast(0.49 / 0.69, 0.071, 0.016);
        assert!((f.fidelity - 0.634_036).abs() < 1e-6);
        assert!((fidelity_from_contrast(0.0, 0.25, 0.25).fidelity - 0.25).abs() < 1e-15);
        for (c, p1, p2) in [(0.3, 0.1, 0.05), (0.29, 0.1, 0.05), (1.0, 0.2, 0.2)] {
            let w = fidelity_from_contrast(c, p1, p2);
            assert_eq!(w.entangled, w.contrast_form);
        }
    }

    #[test]
    fn f_succ_examples() {
        let r = f_succ_correction(0.49, 0.69, 0.071, 0.016).unwrap();
        assert!((r.f_succ.fidelity - 0.634).abs() < 0.002);
        let one = f_succ_correction(0.49, 1.0, 0.071, 0.016).unwrap();
        assert_eq!(one.f_succ.fidelity, fidelity_from_contrast(0.49, 0.071, 0.016).fidelity);
        assert!(matches!(f_succ_correction(1.5, 0.7, 0.0, 0.0), Err(WitnessError::InconsistentContrast(_))));
        assert!(f_succ_correction(0.5, 0.0, 0.0, 0.0).is_err());

        let cert = certify(&paper_input(Some(Measured::new(0.69, 0.02)))).unwrap();
        let sc = cert.success_corrected.unwrap();
        assert!((sc.f_succ.sigma - 0.017).abs() < 0.001, "{}", sc.f_succ.sigma);
    }

    #[test]
    fn concurrence_examples() {
        assert!((concurrence_lower(0.49, 0.071, 0.016) - 0.177_591).abs() < 1e-6);
        assert_eq!(concurrence_lower(0.1, 0.071, 0.016), 0.0);
        assert!((concurrence_lower(2.0, 0.0, 0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ppt_examples() {
        let singlet = density_from_pure(&PureState::singlet());
        assert!((ppt_min_eigenvalue(&singlet) + 0.5).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            // Product of two random single-atom pure states.
            let a = [C64::new(rng.random(), rng.random()), C64::new(rng.random(), rng.random())];
            let b = [C64::new(rng.random(), rng.random()), C64::new(rng.random(), rng.random())];
            let psi = PureState::normalized([a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]]).unwrap();
            assert!(ppt_min_eigenvalue(&density_from_pure(&psi)) > -1e-12);
        }

        let boundary = paper_s1(C64::from_polar((0.071f64 * 0.016).sqrt(), 0.4));
        assert!(ppt_min_eigenvalue(&boundary).abs() < 1e-10);
    }

    #[test]
    fn monte_carlo_agrees_with_delta_method() {
        let inp = paper_input(None);
        let mc = certify_monte_carlo(&inp, 200_000, 3).unwrap();
        let delta = certify(&inp).unwrap();
        assert!((mc.separation - delta.sigma_separation).abs() / delta.sigma_separation < 0.05);
        assert_eq!(mc.separable_fraction, 0.0);
        assert!(mc.margin_p00135 > 0.0);
    }
}
