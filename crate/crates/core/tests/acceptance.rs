//! Acceptance checks: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_UNATTAINABLE` still print FAIL. The process
//! exits nonzero when any other criterion fails, or when a listed one starts
//! passing and the list is stale.

use std::f64::consts::{PI, TAU};
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use tweezer_exchange::cli::pipelines::{pipeline_exchange_scan, pipeline_parity_scan, pipeline_parity_vs_exchange};
use tweezer_exchange::cli::ExperimentConfig;
use tweezer_exchange::dynamics::{
    arp_propagate, channel_resonance_bias, collective_dephase, gradient_unitary_for_phase, lz_transfer_probability,
    microwave_pulse, ApRamp, ApState, Channel, DephasingParams, PulseParams,
};
use tweezer_exchange::measure::{apply_error_model, parity, predicted_exchange_contrast, ErrorModel, Readout};
use tweezer_exchange::potential::{depth_over_quantum, j_ex, j_ex_numeric, GridSpec, TweezerParams, RB87_MASS};
use tweezer_exchange::qstate::{density_from_pure, PureState, C64};
use tweezer_exchange::witness::{
    certify, contrast_bound, f_succ_correction, ppt_min_eigenvalue, s1_density, CertificationInput, Measured,
};

/// The closed-form passage probability assumes an infinite bias window; the
/// ±2.2 kHz ramp truncates the sweep at about 13 J_eg and transfers less.
const KNOWN_UNATTAINABLE: [u32; 1] = [6];

#[derive(Default)]
struct Report {
    failed: Vec<u32>,
}

impl Report {
    fn check(&mut self, id: u32, pass: bool, detail: String) {
        let known = if KNOWN_UNATTAINABLE.contains(&id) { " [known unattainable]" } else { "" };
        println!("AC-{id:02} {}{known} {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed.push(id);
        }
    }
}

fn measured_input(contrast: f64, f: Option<f64>) -> CertificationInput {
    CertificationInput {
        contrast: Measured::new(contrast, 0.04),
        p_upup: Measured::new(0.071, 0.014),
        p_dndn: Measured::new(0.016, 0.005),
        ap_success_f: f.map(|f| Measured::new(f, 0.02)),
    }
}

fn ac1(r: &mut Report) {
    let bound = contrast_bound(0.071, 0.016);
    r.check(1, (bound - 0.133).abs() <= 0.002, format!("c_bound = {bound:.6} (reported 0.133)"));
}

fn ac2(r: &mut Report) {
    let sep = certify(&measured_input(0.49, None)).map(|c| c.sigma_separation).unwrap_or(f64::NAN);
    r.check(2, (7.0..=8.5).contains(&sep), format!("sigma_separation = {sep:.4}"));
}

fn ac3(r: &mut Report) {
    let f = f_succ_correction(0.49, 0.69, 0.071, 0.016).map(|s| s.f_succ.fidelity).unwrap_or(f64::NAN);
    r.check(3, (f - 0.634).abs() <= 0.002, format!("F_succ = {f:.6}"));
}

fn ac4(r: &mut Report) {
    let em = ErrorModel { p_upup: 0.071, p_dndn: 0.016, ground_fraction: 0.90, ap_success_f: 0.81, survival: 0.963 };
    let c = predicted_exchange_contrast(&em).unwrap_or(f64::NAN);
    let inside = (0.50..=0.70).contains(&c);
    r.check(4, (c - 0.608).abs() <= 0.01 && inside, format!("predicted contrast = {c:.6}"));
}

fn ac5(r: &mut Report) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut disagree, mut banded) = (0, 0);
    for _ in 0..10_000 {
        let raw: [f64; 4] = std::array::from_fn(|_| -rng.random::<f64>().ln());
        let total: f64 = raw.iter().sum();
        let pops = raw.map(|v| v / total);
        let modulus = rng.random::<f64>() * (pops[1] * pops[2]).sqrt();
        let eps = C64::from_polar(modulus, TAU * rng.random::<f64>());
        let rho = s1_density(pops, eps).expect("positive by construction");
        let margin = 4.0 * modulus - contrast_bound(pops[0], pops[3]);
        if margin.abs() < 1e-10 {
            banded += 1;
            continue;
        }
        disagree += usize::from((margin > 0.0) != (ppt_min_eigenvalue(&rho) < 0.0));
    }
    let secs = start.elapsed().as_secs_f64();
    r.check(5, disagree == 0 && secs < 10.0, format!("disagreements = {disagree}, in band = {banded}, {secs:.2} s"));
}

fn ac6(r: &mut Report) {
    let ramp = ApRamp { delta_start_hz: -2200.0, delta_end_hz: 2200.0, duration_s: 0.012, j_eg_hz: 165.0, u_eg_hz: 0.0 };
    let transfer = |ramp: &ApRamp, dt: f64| {
        arp_propagate(&ApState::separated_up_down(), ramp, dt)
            .map(|s| s.channel_merged_fraction(Channel::Singlet))
            .unwrap_or(f64::NAN)
    };
    let dt = ramp.duration_s / 4000.0;
    let p = transfer(&ramp, dt);
    let halved = transfer(&ramp, 0.5 * dt);
    let lz = lz_transfer_probability(ramp.j_eg_hz, ramp.sweep_rate_hz_per_s());
    let wide = ApRamp { delta_start_hz: -22_000.0, delta_end_hz: 22_000.0, duration_s: 0.12, ..ramp };
    let p_wide = transfer(&wide, 5e-7);
    let pass = (p - lz).abs() <= 0.02 && (p - halved).abs() < 1e-4;
    r.check(
        6,
        pass,
        format!(
            "transfer = {p:.6}, closed form = {lz:.6}, |diff| = {:.4}, dt-halving change = {:.1e}; \
             same rate over ±22 kHz: {p_wide:.6}",
            (p - lz).abs(),
            (p - halved).abs()
        ),
    );
}

fn ac7(r: &mut Report) {
    let u_eg = 0.5 * j_ex(&paper_trap(91e3)).unwrap_or(f64::NAN);
    let ramp = ApRamp { delta_start_hz: -2200.0, delta_end_hz: 2200.0, duration_s: 0.012, j_eg_hz: 165.0, u_eg_hz: u_eg };
    let bias = channel_resonance_bias(&ramp, Channel::Triplet);
    let rel = (bias / (2.0 * u_eg) - 1.0).abs();
    r.check(7, rel < 1e-9, format!("triplet resonance = {bias:.9} Hz, 2U_eg = {:.9} Hz, rel = {rel:.1e}", 2.0 * u_eg));
}

fn paper_trap(depth_hz: f64) -> TweezerParams {
    TweezerParams { depth_hz, waist_m: 710e-9, wavelength_m: 852e-9, mass_kg: RB87_MASS, a_s_m: 5.24e-9 }
}

fn ac8(r: &mut Report) {
    let depths: Vec<f64> = (0..=8).map(|k| 1e5 * 10f64.powf(k as f64 / 8.0)).collect();
    let pts: Vec<(f64, f64)> = depths.iter().map(|&d| (d.ln(), j_ex(&paper_trap(d)).unwrap().ln())).collect();
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();

    let grid = GridSpec::default();
    let deep = paper_trap(2.5e6);
    let deep_ratio = j_ex_numeric(&deep, &grid).unwrap() / j_ex(&deep).unwrap();
    let shallow = paper_trap(23e3);
    let shallow_ratio = j_ex_numeric(&shallow, &grid).unwrap() / j_ex(&shallow).unwrap();
    let pass = (slope - 0.75).abs() <= 1e-3
        && depth_over_quantum(&deep) >= 50.0
        && (deep_ratio - 1.0).abs() < 0.05
        && shallow_ratio < 1.0;
    r.check(
        8,
        pass,
        format!(
            "exponent = {slope:.6}; numeric/harmonic = {deep_ratio:.4} at depth/quantum {:.1}, {shallow_ratio:.4} at {:.1}",
            depth_over_quantum(&deep),
            depth_over_quantum(&shallow)
        ),
    );
}

fn ac9(r: &mut Report) {
    let mut worst: f64 = 0.0;
    let base = ExperimentConfig { shots_per_point: 10, ..ExperimentConfig::paper_defaults() };
    let curves = |sigma: f64| {
        let cfg = ExperimentConfig { dephasing_sigma_rad: sigma, ..base.clone() };
        let ex = pipeline_exchange_scan(&cfg).expect("exchange scan").curve.column("p_updn_exact");
        let par = pipeline_parity_scan(&cfg).expect("parity scan").curve.column("parity_exact");
        (ex, par)
    };
    let (ex0, par0) = curves(0.0);
    let ptp = |v: &[f64]| v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min);
    for sigma in [0.3, 1.0, 3.0] {
        let (ex, par) = curves(sigma);
        worst = worst.max((ptp(&ex) - ptp(&ex0)).abs()).max((ptp(&par) - ptp(&par0)).abs());
    }

    let ghz = density_from_pure(&PureState::normalized([1.0, 0.0, 0.0, 1.0].map(C64::from)).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut oracle_gap: f64 = 0.0;
    for sigma in [0.25, 0.5, 1.0] {
        let normal = Normal::new(0.0, sigma).unwrap();
        let n = 1_000_000;
        let avg = (0..n).map(|_| (2.0 * Distribution::<f64>::sample(&normal, &mut rng)).cos()).sum::<f64>() / n as f64;
        let decay = collective_dephase(&ghz, &DephasingParams { sigma_rad: sigma }).matrix()[(0, 3)].re / 0.5;
        oracle_gap = oracle_gap.max((decay - avg).abs()).max((decay - (-2.0 * sigma * sigma).exp()).abs());
    }
    r.check(
        9,
        worst < 1e-9 && oracle_gap < 1e-3,
        format!("contrast change = {worst:.1e}; coherence vs phase-averaging oracle = {oracle_gap:.1e}"),
    );
}

fn ac10(r: &mut Report) {
    let start = Instant::now();
    let cfg = ExperimentConfig {
        shots_per_point: 10_000,
        error_models: tweezer_exchange::cli::config::ErrorModels {
            parity: ErrorModel::paper_parity(),
            ..ExperimentConfig::paper_defaults().error_models
        },
        ..ExperimentConfig::paper_defaults()
    };
    let target = cfg.target_contrast.unwrap_or(f64::NAN);
    let scan = pipeline_parity_scan(&cfg);
    let vs = pipeline_parity_vs_exchange(&cfg);
    let secs = start.elapsed().as_secs_f64();
    match (scan, vs) {
        (Ok(scan), Ok(vs)) => {
            let c = scan.fit.contrast;
            let freq = vs.fit.map(|f| f.frequency).unwrap_or(f64::NAN);
            let rel = (freq / vs.j_ex_hz - 1.0).abs();
            r.check(
                10,
                (c - target).abs() <= 0.03 && rel < 0.01 && secs < 120.0,
                format!(
                    "C = {c:.4} ± {:.4} (target {target}), fitted frequency = {freq:.3} Hz vs J_ex = {:.3} Hz \
                     (rel {rel:.1e}), {secs:.1} s",
                    scan.fit.contrast_se, vs.j_ex_hz
                ),
            );
        }
        (a, b) => r.check(10, false, format!("pipeline error: {:?} {:?}", a.err(), b.err())),
    }
}

fn ac11(r: &mut Report) {
    let singlet = density_from_pure(&PureState::singlet());
    let triplet = density_from_pure(&PureState::triplet());
    let mut worst: f64 = 0.0;
    for k in 0..16 {
        let pulse = PulseParams::half_pi(k as f64 * PI / 8.0);
        worst = worst.max((parity(&microwave_pulse(&singlet, &pulse)) + 1.0).abs());
    }
    worst = worst.max((parity(&microwave_pulse(&triplet, &PulseParams::half_pi(0.0))) - 1.0).abs());
    let mapped = PureState::psi_plus().evolve(&gradient_unitary_for_phase(PI / 2.0));
    worst = worst.max((mapped.fidelity(&PureState::triplet()) - 1.0).abs());
    // Same chain through the error-model readout with every error switched off.
    let ideal = apply_error_model(
        &singlet,
        &ErrorModel::ideal(),
        &Readout { pulse: Some(PulseParams::half_pi(0.3)), ..Readout::populations() },
    )
    .map(|o| o.distribution.parity(Default::default()))
    .unwrap_or(f64::NAN);
    worst = worst.max((ideal + 1.0).abs());
    r.check(11, worst < 1e-12, format!("max deviation = {worst:.1e}"));
}

fn main() -> ExitCode {
    let mut r = Report::default();
    ac1(&mut r);
    ac2(&mut r);
    ac3(&mut r);
    ac4(&mut r);
    ac5(&mut r);
    ac6(&mut r);
    ac7(&mut r);
    ac8(&mut r);
    ac9(&mut r);
    ac10(&mut r);
    ac11(&mut r);
    let unexpected: Vec<u32> = r.failed.iter().copied().filter(|id| !KNOWN_UNATTAINABLE.contains(id)).collect();
    let stale: Vec<u32> = KNOWN_UNATTAINABLE.iter().copied().filter(|id| !r.failed.contains(id)).collect();
    println!("{} of 11 criteria failed {:?}; unexpected {:?}; stale known entries {:?}", r.failed.len(), r.failed, unexpected, stale);
    if unexpected.is_empty() && stale.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
