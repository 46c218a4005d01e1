//! Batch pipelines: preparation, passage, exchange, readout and sampling.
//!
//! Grid point `i` samples with seed `seed + i`; rows come back in grid
//! order whatever the evaluation order.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ApMode, ExperimentConfig, Grid};
use super::output::CurveOutput;
use super::CliError;
use crate::dynamics::{
    antialigned_visibility, ap_round_trip, collective_dephase, exchange_evolve, ApState, DephasingParams,
    ExchangeParams,
};
use crate::measure::{
    apply_error_model, estimate_parity, fit_parity_scan, fit_sinusoid_fixed, fit_sinusoid_frequency,
    postselect_antialigned, predicted_exchange_contrast, sample_shots, BranchWeights, ContrastFit, ErrorModel,
    FrequencyFit, ModelOutcome, Outcome, OutcomeDistribution, ParityPoint, ParityScan, PopulationNorm, Readout,
};
use crate::potential::{depth_over_quantum, harmonic_modes, j_ex, j_ex_numeric, u_eg, Axis};
use crate::qstate::{density_from_pure, DensityMatrix, PureState, SpinBasisState};
use crate::witness::{
    certify, certify_monte_carlo, CertificationInput, CertificationResult, Measured, MonteCarloCheck, WitnessError,
};

const WEIGHT_COLUMNS: [&str; 5] = ["w_success", "w_aligned_upup", "w_aligned_dndn", "w_failure", "w_loss"];

fn weight_values(w: &BranchWeights) -> [f64; 5] {
    [w.success, w.aligned_upup, w.aligned_dndn, w.failure, w.loss]
}

fn columns(head: &[&'static str]) -> Vec<&'static str> {
    head.iter().copied().chain(WEIGHT_COLUMNS).collect()
}

fn point_seed(base: u64, index: usize) -> u64 {
    base.wrapping_add(index as u64)
}

/// Relative singlet–triplet phase picked up by the double passage,
/// expressed as extra exchange time.
#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct ApPhase {
    pub mode: ApMode,
    pub phase_rad: f64,
    pub equivalent_time_s: f64,
    /// Probability of returning to one atom per tweezer (simulated mode).
    pub round_trip_success: Option<f64>,
}

pub fn ap_phase(cfg: &ExperimentConfig, j_ex_hz: f64) -> Result<ApPhase, CliError> {
    match cfg.ap_mode {
        ApMode::Ideal => {
            Ok(ApPhase { mode: ApMode::Ideal, phase_rad: 0.0, equivalent_time_s: 0.0, round_trip_success: None })
        }
        ApMode::Simulated => {
            let ramp = cfg.ramp_params(j_ex_hz);
            let trip = ap_round_trip(&ApState::separated_up_down(), &ramp, 0.0, cfg.ramp.steps)?;
            let phase = trip.separated_triplet_phase();
            let splitting = 2.0 * ramp.u_eg_hz;
            let equivalent_time_s =
                if splitting == 0.0 { 0.0 } else { (-phase / (TAU * splitting)).rem_euclid(1.0 / splitting.abs()) };
            Ok(ApPhase {
                mode: ApMode::Simulated,
                phase_rad: phase,
                equivalent_time_s,
                round_trip_success: Some(trip.final_state.separated_probability()),
            })
        }
    }
}

/// |↑↓⟩ after exchange for `t` seconds.
pub fn exchange_state(j_ex_hz: f64, t: f64) -> DensityMatrix {
    let psi = PureState::basis(SpinBasisState::UP_DOWN);
    density_from_pure(&exchange_evolve(&psi, &ExchangeParams { j_ex_hz }, t))
}

fn dephase(cfg: &ExperimentConfig, rho: &DensityMatrix) -> DensityMatrix {
    collective_dephase(rho, &DephasingParams { sigma_rad: cfg.dephasing_sigma_rad })
}

/// Success-branch state entering the readout: exchange, coherence
/// visibility and collective dephasing.
pub fn pipeline_state(cfg: &ExperimentConfig, j_ex_hz: f64, t: f64, ap: &ApPhase, visibility: f64) -> DensityMatrix {
    let rho = exchange_state(j_ex_hz, t + ap.equivalent_time_s);
    dephase(cfg, &antialigned_visibility(&rho, visibility))
}

fn parity_readout(cfg: &ExperimentConfig, t_g: f64) -> Readout {
    Readout::parity(cfg.gradient, t_g, cfg.pulse)
}

/// Noise-free parity contrast of `rho` through the configured readout.
pub fn exact_parity_contrast(cfg: &ExperimentConfig, rho: &DensityMatrix) -> Result<f64, CliError> {
    let period = 1.0 / cfg.gradient.delta_hz.abs();
    let n = 24;
    let xs: Vec<f64> = (0..n).map(|k| period * k as f64 / (n - 1) as f64).collect();
    let ys = xs
        .iter()
        .map(|&t| {
            let out = apply_error_model(rho, &cfg.error_models.parity, &parity_readout(cfg, t))?;
            Ok(out.distribution.parity(cfg.loss_mode))
        })
        .collect::<Result<Vec<f64>, CliError>>()?;
    Ok(fit_sinusoid_fixed(&xs, &ys, &[], cfg.gradient.delta_hz.abs())?.contrast)
}

/// Coherence visibility that makes the noise-free parity contrast equal
/// `target_contrast`; 1 when no target is set.
pub fn matched_visibility(cfg: &ExperimentConfig, j_ex_hz: f64, ap: &ApPhase) -> Result<f64, CliError> {
    let Some(target) = cfg.target_contrast else {
        return Ok(1.0);
    };
    let rho = pipeline_state(cfg, j_ex_hz, cfg.parity_exchange_time(j_ex_hz), ap, 1.0);
    let full = exact_parity_contrast(cfg, &rho)?;
    let v = if full > 0.0 { target / full } else { f64::INFINITY };
    if v > 1.0 + 1e-12 {
        return Err(CliError::Config(format!(
            "target_contrast {target} exceeds the largest contrast {full:.6} reachable with this error model"
        )));
    }
    Ok(v.min(1.0))
}

fn binomial(count: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let p = count as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

fn fractions(dist: &OutcomeDistribution, norm: PopulationNorm) -> (f64, f64, f64) {
    let ud = dist.probability(Outcome::UpDn);
    let du = dist.probability(Outcome::DnUp);
    let loss = match norm {
        PopulationNorm::AntialignedOnly => 0.0,
        PopulationNorm::AntialignedAndLoss => dist.probability(Outcome::Loss),
    };
    let n = ud + du + loss;
    if n == 0.0 {
        (f64::NAN, f64::NAN, f64::NAN)
    } else {
        (ud / n, du / n, loss / n)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExchangeScan {
    #[serde(skip)]
    pub curve: CurveOutput,
    pub j_ex_hz: f64,
    pub ap: ApPhase,
    /// Branch-level prediction with aligned preparations removed.
    pub predicted_contrast: f64,
    /// Peak-to-peak of the sampled ↑↓ curve at the exchange frequency.
    pub fit: Option<ContrastFit>,
}

/// Populations after prep, passage, exchange for `t`, reverse passage and
/// readout, with aligned outcomes removed.
pub fn pipeline_exchange_scan(cfg: &ExperimentConfig) -> Result<ExchangeScan, CliError> {
    cfg.validate()?;
    let j = cfg.j_ex_hz()?;
    let ap = ap_phase(cfg, j)?;
    let em = cfg.error_models.exchange;
    let times = cfg.grids.exchange_times_s.values();
    let rows = times
        .par_iter()
        .enumerate()
        .map(|(i, &t)| {
            let rho = pipeline_state(cfg, j, t, &ap, 1.0);
            let ModelOutcome { distribution, weights } = apply_error_model(&rho, &em, &Readout::populations())?;
            let exact = fractions(&distribution, cfg.population_norm);
            let record = sample_shots(&distribution, cfg.shots_per_point, point_seed(cfg.seed, i));
            let ps = postselect_antialigned(&record);
            let [_, ud, du, _, _] = ps.record.counts();
            let n = match cfg.population_norm {
                PopulationNorm::AntialignedOnly => ud + du,
                PopulationNorm::AntialignedAndLoss => ud + du + ps.loss_count,
            };
            let loss_in_norm = n - ud - du;
            let (p_ud, se_ud) = binomial(ud, n);
            let (p_du, se_du) = binomial(du, n);
            let (p_loss, _) = binomial(loss_in_norm, n);
            let mut row = vec![
                t,
                exact.0,
                exact.1,
                exact.2,
                p_ud,
                se_ud,
                p_du,
                se_du,
                p_loss,
                ps.retained_fraction,
                n as f64,
            ];
            row.extend(weight_values(&weights));
            Ok(row)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut curve = CurveOutput::new(&columns(&[
        "t_s",
        "p_updn_exact",
        "p_dnup_exact",
        "loss_share_exact",
        "p_updn",
        "p_updn_se",
        "p_dnup",
        "p_dnup_se",
        "loss_share",
        "retained_fraction",
        "shots_used",
    ]));
    rows.into_iter().for_each(|r| curve.push(r));
    let fit = fit_sinusoid_fixed(&curve.column("t_s"), &curve.column("p_updn"), &curve.column("p_updn_se"), j).ok();
    Ok(ExchangeScan { curve, j_ex_hz: j, ap, predicted_contrast: predicted_exchange_contrast(&em)?, fit })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DepthSweep {
    #[serde(skip)]
    pub curve: CurveOutput,
    /// Depth-scaling exponent of the harmonic J_ex from a log–log fit.
    pub harmonic_exponent: f64,
}

fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx > 0.0 {
        sxy / sxx
    } else {
        f64::NAN
    }
}

/// Exchange frequency against trap depth, with an optional simulated
/// oscillation fitted for its frequency at each depth.
pub fn pipeline_depth_sweep(cfg: &ExperimentConfig) -> Result<DepthSweep, CliError> {
    cfg.validate()?;
    let depths = cfg.grids.depths_hz.values();
    let settings = &cfg.depth_sweep;
    let shots = cfg.depth_sweep_shots();
    let em = cfg.error_models.exchange;
    let rows = depths
        .par_iter()
        .enumerate()
        .map(|(i, &depth)| {
            let trap = cfg.trap.with_depth(depth);
            trap.validate()?;
            let modes = harmonic_modes(&trap)?;
            let j_h = j_ex(&trap)?;
            let (j_n, numeric_ok) = match j_ex_numeric(&trap, &cfg.numeric_grid) {
                Ok(v) => (v, 1.0),
                Err(_) => (f64::NAN, 0.0),
            };
            let mut fitted = [f64::NAN; 4];
            let mut weights = em.branch_weights();
            if settings.fit_frequency {
                let local = ExperimentConfig {
                    trap,
                    exchange: super::config::ExchangeConfig { j_ex_hz: Some(j_h) },
                    ..cfg.clone()
                };
                let ap = ap_phase(&local, j_h)?;
                let times = Grid::linspace(0.0, settings.periods / j_h, settings.points).values();
                let mut ys = Vec::with_capacity(times.len());
                let mut ses = Vec::with_capacity(times.len());
                for (k, &t) in times.iter().enumerate() {
                    let rho = pipeline_state(&local, j_h, t, &ap, 1.0);
                    let out = apply_error_model(&rho, &em, &Readout::populations())?;
                    weights = out.weights;
                    let seed = point_seed(cfg.seed, i * settings.points + k);
                    let ps = postselect_antialigned(&sample_shots(&out.distribution, shots, seed));
                    let [_, ud, du, _, _] = ps.record.counts();
                    let n = match cfg.population_norm {
                        PopulationNorm::AntialignedOnly => ud + du,
                        PopulationNorm::AntialignedAndLoss => ud + du + ps.loss_count,
                    };
                    let (p, se) = binomial(ud, n);
                    ys.push(p);
                    ses.push(se);
                }
                if let Ok(FrequencyFit { frequency, frequency_se, sinusoid }) =
                    fit_sinusoid_frequency(&times, &ys, &ses, 0.5 * j_h, 1.5 * j_h)
                {
                    fitted = [frequency, frequency_se, sinusoid.contrast, sinusoid.contrast_se];
                }
            }
            let mut row = vec![
                depth,
                depth_over_quantum(&trap),
                modes.frequency_hz(Axis::X),
                modes.frequency_hz(Axis::Z),
                u_eg(&trap, Axis::X)?,
                j_h,
                j_n,
                numeric_ok,
            ];
            row.extend(fitted);
            row.extend(weight_values(&weights));
            Ok(row)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut curve = CurveOutput::new(&columns(&[
        "depth_hz",
        "depth_over_quantum",
        "radial_hz",
        "axial_hz",
        "u_eg_harmonic_hz",
        "j_ex_harmonic_hz",
        "j_ex_numeric_hz",
        "numeric_ok",
        "fitted_freq_hz",
        "fitted_freq_se_hz",
        "fitted_contrast",
        "fitted_contrast_se",
    ]));
    rows.into_iter().for_each(|r| curve.push(r));
    let harmonic_exponent = log_log_slope(&curve.column("depth_hz"), &curve.column("j_ex_harmonic_hz"));
    Ok(DepthSweep { curve, harmonic_exponent })
}

fn parity_row(
    cfg: &ExperimentConfig,
    rho: &DensityMatrix,
    em: &ErrorModel,
    t_g: f64,
    abscissa: f64,
    seed: u64,
) -> Result<Vec<f64>, CliError> {
    let out = apply_error_model(rho, em, &parity_readout(cfg, t_g))?;
    let exact = out.distribution.parity(cfg.loss_mode);
    let record = sample_shots(&out.distribution, cfg.shots_per_point, seed);
    let (value, se, used) = match estimate_parity(&record, cfg.loss_mode) {
        Ok(e) => (e.value, e.standard_error, e.shots as f64),
        Err(_) => (f64::NAN, f64::NAN, 0.0),
    };
    let loss = record.counts()[Outcome::Loss.index()] as f64 / record.len() as f64;
    let mut row = vec![abscissa, exact, value, se, used, loss];
    row.extend(weight_values(&out.weights));
    Ok(row)
}

const PARITY_COLUMNS: [&str; 5] = ["parity_exact", "parity", "parity_se", "shots_used", "loss_fraction"];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParityScanResult {
    #[serde(skip)]
    pub curve: CurveOutput,
    pub j_ex_hz: f64,
    pub exchange_time_s: f64,
    pub ap: ApPhase,
    pub visibility: f64,
    /// Noise-free contrast of the simulated readout.
    pub exact_contrast: f64,
    pub fit: ContrastFit,
    pub certification: CertificationResult,
    pub monte_carlo: Option<MonteCarloCheck>,
}

fn certification_input(cfg: &ExperimentConfig, fit: &ContrastFit, with_f: bool) -> CertificationInput {
    let em = &cfg.error_models.parity;
    let c = &cfg.certification;
    CertificationInput {
        contrast: Measured::new(fit.contrast, fit.contrast_se),
        p_upup: Measured::new(em.p_upup, c.p_upup_se),
        p_dndn: Measured::new(em.p_dndn, c.p_dndn_se),
        ap_success_f: with_f.then(|| Measured::new(em.ap_success_f, c.ap_success_f_se)),
    }
}

/// Parity against gradient time at a fixed exchange time, then a contrast
/// fit and certification against the configured populations.
pub fn pipeline_parity_scan(cfg: &ExperimentConfig) -> Result<ParityScanResult, CliError> {
    cfg.validate()?;
    let j = cfg.j_ex_hz()?;
    let ap = ap_phase(cfg, j)?;
    let visibility = matched_visibility(cfg, j, &ap)?;
    let t_ex = cfg.parity_exchange_time(j);
    let rho = pipeline_state(cfg, j, t_ex, &ap, visibility);
    let em = cfg.error_models.parity;
    let times = cfg.grids.gradient_times_s.values();
    let rows = times
        .par_iter()
        .enumerate()
        .map(|(i, &t_g)| parity_row(cfg, &rho, &em, t_g, t_g, point_seed(cfg.seed, i)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut head = vec!["t_g_s"];
    head.extend(PARITY_COLUMNS);
    let mut curve = CurveOutput::new(&columns(&head));
    rows.into_iter().for_each(|r| curve.push(r));

    let points = curve
        .rows
        .iter()
        .map(|r| ParityPoint { t_g: r[0], parity: r[2], standard_error: r[3] })
        .collect();
    let fit = fit_parity_scan(&ParityScan { points, delta_hz: cfg.gradient.delta_hz.abs() })?;
    let certification = match certify(&certification_input(cfg, &fit, true)) {
        Err(WitnessError::InconsistentContrast(_)) => certify(&certification_input(cfg, &fit, false))?,
        other => other?,
    };
    let monte_carlo = match cfg.certification.monte_carlo_samples {
        0 => None,
        n => Some(certify_monte_carlo(&certification_input(cfg, &fit, false), n, cfg.seed)?),
    };
    Ok(ParityScanResult {
        curve,
        j_ex_hz: j,
        exchange_time_s: t_ex,
        ap,
        visibility,
        exact_contrast: exact_parity_contrast(cfg, &rho)?,
        fit,
        certification,
        monte_carlo,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParityVsExchange {
    #[serde(skip)]
    pub curve: CurveOutput,
    pub j_ex_hz: f64,
    pub gradient_time_s: f64,
    pub ap: ApPhase,
    pub visibility: f64,
    pub fit: Option<FrequencyFit>,
}

/// Parity against exchange time at a fixed gradient time.
pub fn pipeline_parity_vs_exchange(cfg: &ExperimentConfig) -> Result<ParityVsExchange, CliError> {
    cfg.validate()?;
    let j = cfg.j_ex_hz()?;
    let ap = ap_phase(cfg, j)?;
    let visibility = matched_visibility(cfg, j, &ap)?;
    let t_g = cfg.parity_gradient_time();
    let em = cfg.error_models.parity;
    let times = cfg.grids.exchange_times_s.values();
    let rows = times
        .par_iter()
        .enumerate()
        .map(|(i, &t)| {
            let rho = pipeline_state(cfg, j, t, &ap, visibility);
            parity_row(cfg, &rho, &em, t_g, t, point_seed(cfg.seed, i))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut head = vec!["t_s"];
    head.extend(PARITY_COLUMNS);
    let mut curve = CurveOutput::new(&columns(&head));
    rows.into_iter().for_each(|r| curve.push(r));
    let fit =
        fit_sinusoid_frequency(&curve.column("t_s"), &curve.column("parity"), &curve.column("parity_se"), 0.5 * j, 1.5 * j)
            .ok();
    Ok(ParityVsExchange { curve, j_ex_hz: j, gradient_time_s: t_g, ap, visibility, fit })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JexReport {
    pub depth_hz: f64,
    pub radial_hz: f64,
    pub axial_hz: f64,
    pub depth_over_quantum: f64,
    pub u_eg_hz: f64,
    pub j_ex_harmonic_hz: f64,
    pub j_ex_numeric_hz: Option<f64>,
}

pub fn jex_report(cfg: &ExperimentConfig, depth_hz: Option<f64>, numeric: bool) -> Result<JexReport, CliError> {
    let trap = depth_hz.map_or(cfg.trap, |d| cfg.trap.with_depth(d));
    trap.validate()?;
    let modes = harmonic_modes(&trap)?;
    Ok(JexReport {
        depth_hz: trap.depth_hz,
        radial_hz: modes.frequency_hz(Axis::X),
        axial_hz: modes.frequency_hz(Axis::Z),
        depth_over_quantum: depth_over_quantum(&trap),
        u_eg_hz: u_eg(&trap, Axis::X)?,
        j_ex_harmonic_hz: j_ex(&trap)?,
        j_ex_numeric_hz: if numeric { Some(j_ex_numeric(&trap, &cfg.numeric_grid)?) } else { None },
    })
}
