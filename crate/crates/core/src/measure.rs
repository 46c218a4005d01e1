//! Readout: populations, parity, the experimental error model, shot
//! sampling, post-selection and sinusoid fitting.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector, Matrix3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{gradient_unitary, pulse_unitary, GradientParams, PulseParams};
use crate::qstate::{DensityMatrix, SpinBasisState};

/// Tolerance on the branch-weight ledger.
pub const WEIGHT_TOL: f64 = 1e-12;
/// Minimum number of points for a sinusoid fit.
pub const MIN_FIT_POINTS: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("error model field `{field}` out of range ({value})")]
    InvalidErrorModel { field: &'static str, value: f64 },
    #[error("outcome distribution invalid: {0}")]
    InvalidDistribution(String),
    #[error("no shots to estimate from")]
    NoShots,
    #[error("post-selection retained no shots")]
    EmptySelection,
    #[error("fit needs at least {MIN_FIT_POINTS} points, got {0}")]
    InsufficientPoints(usize),
    #[error("scan covers {0:.3} periods; at least one is required")]
    InsufficientSpan(f64),
    #[error("fit design matrix is degenerate")]
    DegenerateDesign,
    #[error("invalid frequency search range [{0}, {1}]")]
    InvalidFrequencyRange(f64, f64),
    #[error("scan input has mismatched lengths")]
    LengthMismatch,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    UpUp,
    UpDn,
    DnUp,
    DnDn,
    Loss,
}

impl Outcome {
    pub const ALL: [Outcome; 5] =
        [Outcome::UpUp, Outcome::UpDn, Outcome::DnUp, Outcome::DnDn, Outcome::Loss];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Outcome::UpUp => "upup",
            Outcome::UpDn => "updn",
            Outcome::DnUp => "dnup",
            Outcome::DnDn => "dndn",
            Outcome::Loss => "loss",
        }
    }

    pub fn from_spin(state: SpinBasisState) -> Self {
        Self::ALL[state.index()]
    }

    /// `Some(true)` for an even number of down spins, `None` for loss.
    pub fn is_even(self) -> Option<bool> {
        match self {
            Outcome::UpUp | Outcome::DnDn => Some(true),
            Outcome::UpDn | Outcome::DnUp => Some(false),
            Outcome::Loss => None,
        }
    }

    pub fn is_antialigned(self) -> bool {
        matches!(self, Outcome::UpDn | Outcome::DnUp)
    }
}

/// Probabilities over {upup, updn, dnup, dndn, loss}.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    probs: [f64; 5],
}

impl OutcomeDistribution {
    pub fn new(probs: [f64; 5]) -> Result<Self, MeasureError> {
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(MeasureError::InvalidDistribution(format!("negative or non-finite entry in {probs:?}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(MeasureError::InvalidDistribution(format!("sums to {sum}")));
        }
        Ok(Self { probs })
    }

    /// Spin-outcome distribution of `rho` without loss.
    pub fn from_density(rho: &DensityMatrix) -> Self {
        let p = spin_populations(rho);
        Self { probs: [p[0], p[1], p[2], p[3], 0.0] }
    }

    pub fn point_mass(outcome: Outcome) -> Self {
        let mut probs = [0.0; 5];
        probs[outcome.index()] = 1.0;
        Self { probs }
    }

    pub fn probability(&self, outcome: Outcome) -> f64 {
        self.probs[outcome.index()]
    }

    pub fn probabilities(&self) -> [f64; 5] {
        self.probs
    }

    /// Expected parity conditioned on no loss.
    pub fn parity(&self, mode: LossMode) -> f64 {
        let [uu, ud, du, dd, loss] = self.probs;
        match mode {
            LossMode::Exclude => {
                let kept = uu + ud + du + dd;
                if kept == 0.0 {
                    0.0
                } else {
                    (uu + dd - ud - du) / kept
                }
            }
            LossMode::CountAsEven => uu + dd + loss - ud - du,
        }
    }

    /// P(updn) normalized over anti-aligned and loss outcomes.
    pub fn antialigned_fraction(&self, norm: PopulationNorm) -> f64 {
        let [_, ud, du, _, loss] = self.probs;
        let denom = match norm {
            PopulationNorm::AntialignedOnly => ud + du,
            PopulationNorm::AntialignedAndLoss => ud + du + loss,
        };
        if denom == 0.0 {
            0.0
        } else {
            ud / denom
        }
    }
}

/// Diagonal of `rho` in the order (↑↑, ↑↓, ↓↑, ↓↓), clipped at zero.
pub fn spin_populations(rho: &DensityMatrix) -> [f64; 4] {
    rho.populations().map(|p| p.max(0.0))
}

/// Tr(ρ · diag(1, −1, −1, 1))
pub fn parity(rho: &DensityMatrix) -> f64 {
    let [uu, ud, du, dd] = rho.populations();
    (uu + dd - ud - du).clamp(-1.0, 1.0)
}

/// Gradient for `t_g`, then the global pulse, then parity.
pub fn parity_after_readout(
    rho: &DensityMatrix,
    g: &GradientParams,
    t_g: f64,
    pulse: &PulseParams,
) -> f64 {
    let u = pulse_unitary(pulse) * gradient_unitary(g, t_g);
    parity(&rho.conjugate_by(&u))
}

/// Operations between the end of the coherent pipeline and detection.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Readout {
    pub gradient: GradientParams,
    pub t_g: f64,
    pub pulse: Option<PulseParams>,
}

impl Readout {
    /// Direct population measurement.
    pub fn populations() -> Self {
        Self { gradient: GradientParams { delta_hz: 0.0 }, t_g: 0.0, pulse: None }
    }

    pub fn parity(gradient: GradientParams, t_g: f64, pulse: PulseParams) -> Self {
        Self { gradient, t_g, pulse: Some(pulse) }
    }

    pub fn apply(&self, rho: &DensityMatrix) -> DensityMatrix {
        let rho = rho.conjugate_by(&gradient_unitary(&self.gradient, self.t_g));
        self.apply_pulse(&rho)
    }

    /// The pulse alone; atoms sharing a tweezer see no gradient.
    pub fn apply_pulse(&self, rho: &DensityMatrix) -> DensityMatrix {
        match &self.pulse {
            Some(p) => rho.conjugate_by(&pulse_unitary(p)),
            None => rho.clone(),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorModel {
    pub p_upup: f64,
    pub p_dndn: f64,
    /// Per-atom probability of the 3D motional ground state.
    pub ground_fraction: f64,
    /// Probability both atoms end in different tweezers after the double
    /// passage.
    pub ap_success_f: f64,
    /// Per-atom survival probability.
    pub survival: f64,
}

impl ErrorModel {
    pub fn ideal() -> Self {
        Self { p_upup: 0.0, p_dndn: 0.0, ground_fraction: 1.0, ap_success_f: 1.0, survival: 1.0 }
    }

    /// Calibration for the exchange-oscillation measurement.
    pub fn paper_exchange() -> Self {
        Self { p_upup: 0.071, p_dndn: 0.016, ground_fraction: 0.90, ap_success_f: 0.81, survival: 0.963 }
    }

    /// Calibration for the parity measurement.
    pub fn paper_parity() -> Self {
        Self { ap_success_f: 0.69, ..Self::paper_exchange() }
    }

    /// Same model with the aligned preparation errors removed.
    pub fn prep_postselected(&self) -> Self {
        Self { p_upup: 0.0, p_dndn: 0.0, ..*self }
    }

    pub fn validate(&self) -> Result<(), MeasureError> {
        let fields = [
            ("p_upup", self.p_upup),
            ("p_dndn", self.p_dndn),
            ("ground_fraction", self.ground_fraction),
            ("ap_success_f", self.ap_success_f),
            ("survival", self.survival),
        ];
        for (field, value) in fields {
            if !(0.0..=1.0).contains(&value) {
                return Err(MeasureError::InvalidErrorModel { field, value });
            }
        }
        let aligned = self.p_upup + self.p_dndn;
        if aligned > 1.0 + WEIGHT_TOL {
            return Err(MeasureError::InvalidErrorModel { field: "p_upup + p_dndn", value: aligned });
        }
        Ok(())
    }

    pub fn branch_weights(&self) -> BranchWeights {
        let s2 = self.survival * self.survival;
        let anti = 1.0 - self.p_upup - self.p_dndn;
        let good = self.ground_fraction * self.ground_fraction * self.ap_success_f;
        BranchWeights {
            success: anti * good * s2,
            aligned_upup: self.p_upup * s2,
            aligned_dndn: self.p_dndn * s2,
            failure: anti * (1.0 - good) * s2,
            loss: 1.0 - s2,
        }
    }
}

/// Weights of the error-model branches.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchWeights {
    /// Correct preparation, both atoms in the ground state, passage success.
    pub success: f64,
    pub aligned_upup: f64,
    pub aligned_dndn: f64,
    /// Motionally excited or failed passage.
    pub failure: f64,
    pub loss: f64,
}

impl BranchWeights {
    pub fn sum(&self) -> f64 {
        self.success + self.aligned_upup + self.aligned_dndn + self.failure + self.loss
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelOutcome {
    pub distribution: OutcomeDistribution,
    pub weights: BranchWeights,
}

/// Mixes the error-model branches and returns the detected distribution.
///
/// `rho` is the success-branch state before `readout`. Aligned branches go
/// through the full readout. The failure branch is an equal anti-aligned
/// mixture that sees only the pulse.
pub fn apply_error_model(
    rho: &DensityMatrix,
    em: &ErrorModel,
    readout: &Readout,
) -> Result<ModelOutcome, MeasureError> {
    em.validate()?;
    let w = em.branch_weights();
    assert!((w.sum() - 1.0).abs() < WEIGHT_TOL, "branch weights sum to {}", w.sum());

    let success = spin_populations(&readout.apply(rho));
    let upup = spin_populations(&readout.apply(&DensityMatrix::basis(SpinBasisState::UP_UP)));
    let dndn = spin_populations(&readout.apply(&DensityMatrix::basis(SpinBasisState::DOWN_DOWN)));
    let failed_state = DensityMatrix::diagonal([0.0, 0.5, 0.5, 0.0]).expect("valid mixture");
    let failure = spin_populations(&readout.apply_pulse(&failed_state));

    let mut probs = [0.0; 5];
    for k in 0..4 {
        probs[k] = w.success * success[k]
            + w.aligned_upup * upup[k]
            + w.aligned_dndn * dndn[k]
            + w.failure * failure[k];
    }
    probs[4] = w.loss;
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    Ok(ModelOutcome { distribution: OutcomeDistribution::new(probs)?, weights: w })
}

/// Peak-to-peak exchange-oscillation contrast of P(↑↓) with aligned
/// preparations removed at branch level. Loss stays in the normalization.
pub fn predicted_exchange_contrast(em: &ErrorModel) -> Result<f64, MeasureError> {
    let em = em.prep_postselected();
    let start = apply_error_model(&DensityMatrix::basis(SpinBasisState::UP_DOWN), &em, &Readout::populations())?;
    let swapped = apply_error_model(&DensityMatrix::basis(SpinBasisState::DOWN_UP), &em, &Readout::populations())?;
    Ok(start.distribution.probability(Outcome::UpDn) - swapped.distribution.probability(Outcome::UpDn))
}

/// Sampled outcomes and the seed that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct ShotRecord {
    pub shots: Vec<Outcome>,
    pub seed: u64,
}

impl ShotRecord {
    pub fn from_counts(counts: [usize; 5], seed: u64) -> Self {
        let shots = Outcome::ALL
            .iter()
            .zip(counts)
            .flat_map(|(&o, n)| std::iter::repeat_n(o, n))
            .collect();
        Self { shots, seed }
    }

    pub fn len(&self) -> usize {
        self.shots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shots.is_empty()
    }

    pub fn counts(&self) -> [usize; 5] {
        let mut c = [0; 5];
        for o in &self.shots {
            c[o.index()] += 1;
        }
        c
    }
}

/// `n` independent draws from `dist` using ChaCha8 seeded with `seed`.
pub fn sample_shots(dist: &OutcomeDistribution, n: usize, seed: u64) -> ShotRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cdf = [0.0; 5];
    let mut acc = 0.0;
    for (c, p) in cdf.iter_mut().zip(dist.probs) {
        acc += p;
        *c = acc;
    }
    let last = (0..5).rev().find(|&k| dist.probs[k] > 0.0).unwrap_or(4);
    let shots = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let k = cdf.iter().position(|&c| u < c).unwrap_or(last).min(last);
            Outcome::ALL[k]
        })
        .collect();
    ShotRecord { shots, seed }
}

/// Anti-aligned shots kept after removing aligned outcomes.
#[derive(Clone, Debug, PartialEq)]
pub struct PostSelected {
    pub record: ShotRecord,
    /// Anti-aligned shots over all shots.
    pub retained_fraction: f64,
    /// Loss shots in the original record, reported separately.
    pub loss_count: usize,
}

impl PostSelected {
    pub fn is_empty(&self) -> bool {
        self.record.is_empty()
    }
}

pub fn postselect_antialigned(record: &ShotRecord) -> PostSelected {
    let shots: Vec<Outcome> = record.shots.iter().copied().filter(|o| o.is_antialigned()).collect();
    let loss_count = record.shots.iter().filter(|o| **o == Outcome::Loss).count();
    let retained_fraction = if record.is_empty() { 0.0 } else { shots.len() as f64 / record.len() as f64 };
    PostSelected { record: ShotRecord { shots, seed: record.seed }, retained_fraction, loss_count }
}

/// Treatment of loss outcomes in the parity estimator.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMode {
    #[default]
    Exclude,
    CountAsEven,
}

/// Normalization of anti-aligned population estimates.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PopulationNorm {
    AntialignedOnly,
    #[default]
    AntialignedAndLoss,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub standard_error: f64,
    pub shots: usize,
}

/// (N_even − N_odd)/N with binomial standard error √((1 − Π²)/N).
pub fn estimate_parity(record: &ShotRecord, mode: LossMode) -> Result<Estimate, MeasureError> {
    let [uu, ud, du, dd, loss] = record.counts();
    let (even, odd) = match mode {
        LossMode::Exclude => (uu + dd, ud + du),
        LossMode::CountAsEven => (uu + dd + loss, ud + du),
    };
    let n = even + odd;
    if n == 0 {
        return Err(MeasureError::NoShots);
    }
    let value = (even as f64 - odd as f64) / n as f64;
    let standard_error = ((1.0 - value * value).max(0.0) / n as f64).sqrt();
    Ok(Estimate { value, standard_error, shots: n })
}

/// Fraction of post-selected shots in ↑↓, with binomial standard error.
/// Loss shots of the original record join the denominator under
/// [`PopulationNorm::AntialignedAndLoss`].
pub fn estimate_updn_fraction(ps: &PostSelected, norm: PopulationNorm) -> Result<Estimate, MeasureError> {
    if ps.is_empty() {
        return Err(MeasureError::EmptySelection);
    }
    let [_, ud, du, _, _] = ps.record.counts();
    let n = match norm {
        PopulationNorm::AntialignedOnly => ud + du,
        PopulationNorm::AntialignedAndLoss => ud + du + ps.loss_count,
    };
    let p = ud as f64 / n as f64;
    Ok(Estimate { value: p, standard_error: (p * (1.0 - p) / n as f64).sqrt(), shots: n })
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParityPoint {
    pub t_g: f64,
    pub parity: f64,
    pub standard_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParityScan {
    pub points: Vec<ParityPoint>,
    pub delta_hz: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContrastFit {
    /// Peak-to-peak amplitude.
    pub contrast: f64,
    pub contrast_se: f64,
    /// φ₀ in (C/2)·cos(2πδt + φ₀) + offset.
    pub phase: f64,
    pub phase_se: f64,
    pub offset: f64,
    pub offset_se: f64,
    /// √Σ(residual²), unweighted.
    pub residual_norm: f64,
}

struct LinearFit {
    /// Coefficients of cos, sin, 1.
    coef: [f64; 3],
    cov: Matrix3<f64>,
    /// Σ w·r²
    chi2: f64,
    residual_norm: f64,
    weighted: bool,
}

fn weights_from(ses: &[f64], n: usize) -> Option<Vec<f64>> {
    if ses.len() == n && ses.iter().all(|s| s.is_finite() && *s > 0.0) {
        Some(ses.iter().map(|s| 1.0 / (s * s)).collect())
    } else {
        None
    }
}

fn linear_fit(xs: &[f64], ys: &[f64], weights: Option<&[f64]>, freq: f64) -> Result<LinearFit, MeasureError> {
    let n = xs.len();
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    let a = DMatrix::from_fn(n, 3, |i, j| {
        let arg = TAU * freq * xs[i];
        let v = match j {
            0 => arg.cos(),
            1 => arg.sin(),
            _ => 1.0,
        };
        v * w(i).sqrt()
    });
    let b = DVector::from_fn(n, |i, _| ys[i] * w(i).sqrt());
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin / smax < 1e-10 {
        return Err(MeasureError::DegenerateDesign);
    }
    let x = svd.solve(&b, 0.0).map_err(|_| MeasureError::DegenerateDesign)?;
    let v_t = svd.v_t.as_ref().expect("requested");
    let mut cov = Matrix3::zeros();
    for k in 0..3 {
        let s2 = svd.singular_values[k].powi(2);
        for i in 0..3 {
            for j in 0..3 {
                cov[(i, j)] += v_t[(k, i)] * v_t[(k, j)] / s2;
            }
        }
    }
    let model = |i: usize| {
        let arg = TAU * freq * xs[i];
        x[0] * arg.cos() + x[1] * arg.sin() + x[2]
    };
    let chi2: f64 = (0..n).map(|i| w(i) * (ys[i] - model(i)).powi(2)).sum();
    let residual_norm = (0..n).map(|i| (ys[i] - model(i)).powi(2)).sum::<f64>().sqrt();
    if weights.is_none() {
        cov *= chi2 / (n as f64 - 3.0);
    }
    Ok(LinearFit { coef: [x[0], x[1], x[2]], cov, chi2, residual_norm, weighted: weights.is_some() })
}

fn contrast_from(fit: &LinearFit) -> ContrastFit {
    let [a, b, c] = fit.coef;
    let r = a.hypot(b);
    let cov = &fit.cov;
    let (contrast_se, phase_se) = if r > 0.0 {
        let (da, db) = (a / r, b / r);
        let var_r = da * da * cov[(0, 0)] + 2.0 * da * db * cov[(0, 1)] + db * db * cov[(1, 1)];
        // φ₀ = atan2(−b, a)
        let (pa, pb) = (b / (r * r), -a / (r * r));
        let var_p = pa * pa * cov[(0, 0)] + 2.0 * pa * pb * cov[(0, 1)] + pb * pb * cov[(1, 1)];
        (2.0 * var_r.max(0.0).sqrt(), var_p.max(0.0).sqrt())
    } else {
        (2.0 * (0.5 * (cov[(0, 0)] + cov[(1, 1)])).max(0.0).sqrt(), std::f64::consts::PI)
    };
    ContrastFit {
        contrast: 2.0 * r,
        contrast_se,
        phase: (-b).atan2(a),
        phase_se,
        offset: c,
        offset_se: cov[(2, 2)].max(0.0).sqrt(),
        residual_norm: fit.residual_norm,
    }
}

/// Least-squares fit of `(C/2)·cos(2πft + φ₀) + offset` at known `f`.
///
/// Points are weighted by 1/σ² when every standard error is positive;
/// otherwise the fit is unweighted and the covariance is scaled by the
/// residual variance.
pub fn fit_sinusoid_fixed(xs: &[f64], ys: &[f64], ses: &[f64], freq: f64) -> Result<ContrastFit, MeasureError> {
    if xs.len() != ys.len() || (!ses.is_empty() && ses.len() != xs.len()) {
        return Err(MeasureError::LengthMismatch);
    }
    if xs.len() < MIN_FIT_POINTS {
        return Err(MeasureError::InsufficientPoints(xs.len()));
    }
    let (lo, hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
    let periods = (hi - lo) * freq.abs();
    if periods < 1.0 - 1e-9 {
        return Err(MeasureError::InsufficientSpan(periods));
    }
    let weights = weights_from(ses, xs.len());
    Ok(contrast_from(&linear_fit(xs, ys, weights.as_deref(), freq)?))
}

pub fn fit_parity_scan(scan: &ParityScan) -> Result<ContrastFit, MeasureError> {
    let xs: Vec<f64> = scan.points.iter().map(|p| p.t_g).collect();
    let ys: Vec<f64> = scan.points.iter().map(|p| p.parity).collect();
    let ses: Vec<f64> = scan.points.iter().map(|p| p.standard_error).collect();
    fit_sinusoid_fixed(&xs, &ys, &ses, scan.delta_hz)
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyFit {
    pub frequency: f64,
    pub frequency_se: f64,
    /// Peak-to-peak amplitude and phase at the fitted frequency.
    pub sinusoid: ContrastFit,
}

/// Sinusoid fit with free frequency searched in `[f_min, f_max]`.
pub fn fit_sinusoid_frequency(
    xs: &[f64],
    ys: &[f64],
    ses: &[f64],
    f_min: f64,
    f_max: f64,
) -> Result<FrequencyFit, MeasureError> {
    if xs.len() != ys.len() || (!ses.is_empty() && ses.len() != xs.len()) {
        return Err(MeasureError::LengthMismatch);
    }
    if xs.len() < MIN_FIT_POINTS + 1 {
        return Err(MeasureError::InsufficientPoints(xs.len()));
    }
    if !(f_min > 0.0 && f_max > f_min && f_max.is_finite()) {
        return Err(MeasureError::InvalidFrequencyRange(f_min, f_max));
    }
    let weights = weights_from(ses, xs.len());
    let w = weights.as_deref();
    let chi2 = |f: f64| linear_fit(xs, ys, w, f).map_or(f64::INFINITY, |fit| fit.chi2);

    const COARSE: usize = 400;
    let step = (f_max - f_min) / COARSE as f64;
    let best = (0..=COARSE)
        .map(|k| f_min + step * k as f64)
        .map(|f| (f, chi2(f)))
        .fold((f_min, f64::INFINITY), |acc, p| if p.1 < acc.1 { p } else { acc });
    let (mut lo, mut hi) = ((best.0 - step).max(f_min), (best.0 + step).min(f_max));
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut c1, mut c2) = (chi2(x1), chi2(x2));
    for _ in 0..100 {
        if c1 < c2 {
            hi = x2;
            x2 = x1;
            c2 = c1;
            x1 = hi - inv_phi * (hi - lo);
            c1 = chi2(x1);
        } else {
            lo = x1;
            x1 = x2;
            c1 = c2;
            x2 = lo + inv_phi * (hi - lo);
            c2 = chi2(x2);
        }
    }
    let freq = 0.5 * (lo + hi);
    let fit = linear_fit(xs, ys, w, freq)?;
    let [a, b, _] = fit.coef;

    // Covariance of (a, b, c, f) from the Jacobian at the optimum.
    let n = xs.len();
    let jac = DMatrix::from_fn(n, 4, |i, j| {
        let arg = TAU * freq * xs[i];
        let v = match j {
            0 => arg.cos(),
            1 => arg.sin(),
            2 => 1.0,
            _ => TAU * xs[i] * (-a * arg.sin() + b * arg.cos()),
        };
        v * w.map_or(1.0, |w| w[i]).sqrt()
    });
    let info = jac.transpose() * &jac;
    let mut cov4 = info.try_inverse().ok_or(MeasureError::DegenerateDesign)?;
    if !fit.weighted {
        cov4 *= fit.chi2 / (n as f64 - 4.0);
    }
    let mut sinusoid = contrast_from(&LinearFit { cov: cov4.fixed_view::<3, 3>(0, 0).into_owned(), ..fit });
    sinusoid.residual_norm = fit.residual_norm;
    Ok(FrequencyFit { frequency: freq, frequency_se: cov4[(3, 3)].max(0.0).sqrt(), sinusoid })
}
