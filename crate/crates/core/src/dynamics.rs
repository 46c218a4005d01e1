//! Coherent evolutions and the collective-dephasing channel.
//!
//! Sign conventions:
//! - Exchange: the quarter-period state of `|↑↓⟩` is `(|↑↓⟩ + i|↓↑⟩)/√2`.
//!   The generator is `H = −J_ex (S₁·S₂ + 1/4)`, which differs from
//!   `+J_ex S₁·S₂` by time reversal and a constant; populations and |ε| are
//!   identical under both.
//! - Gradient: a gradient phase φ multiplies the `⟨↑↓|ρ|↓↑⟩` coherence by
//!   `e^{iφ}`, i.e. a positive rotation of the Bloch vector about +z, so
//!   `(|↑↓⟩ + i|↓↑⟩)/√2` reaches the triplet at φ = π/2.
//! - Aligned states pick up no gradient phase.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use nalgebra::{Matrix2, Matrix4, SymmetricEigen, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qstate::{DensityMatrix, Mat4, PureState, C64};

/// Default number of time steps for one adiabatic passage.
pub const DEFAULT_AP_STEPS: usize = 4000;
/// Largest allowed `‖H‖·dt/ħ` per propagation step.
pub const MAX_STEP_PHASE: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("ramp parameter `{name}` is invalid ({value})")]
    InvalidRamp { name: &'static str, value: f64 },
    #[error("time step too large: ‖H‖·dt/ħ = {phase:.3} exceeds {MAX_STEP_PHASE}")]
    StepTooLarge { phase: f64 },
    #[error("time step must be positive (got {0})")]
    NonPositiveStep(f64),
}

/// Exchange coupling J_ex/h (Hz).
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExchangeParams {
    pub j_ex_hz: f64,
}

/// Propagator for exchange time `t` (s).
pub fn exchange_unitary(p: &ExchangeParams, t: f64) -> Mat4 {
    let theta = PI * p.j_ex_hz * t;
    let (s, c) = theta.sin_cos();
    let aligned = C64::from_polar(1.0, theta);
    let mut u = Mat4::zeros();
    u[(0, 0)] = aligned;
    u[(3, 3)] = aligned;
    u[(1, 1)] = c.into();
    u[(2, 2)] = c.into();
    u[(1, 2)] = C64::new(0.0, s);
    u[(2, 1)] = C64::new(0.0, s);
    u
}

/// `(a, b) → (a cos θ + i b sin θ, b cos θ + i a sin θ)` on the anti-aligned
/// amplitudes, θ = π·J_ex·t.
pub fn exchange_evolve(psi: &PureState, p: &ExchangeParams, t: f64) -> PureState {
    psi.evolve(&exchange_unitary(p, t))
}

pub fn exchange_evolve_rho(rho: &DensityMatrix, p: &ExchangeParams, t: f64) -> DensityMatrix {
    rho.conjugate_by(&exchange_unitary(p, t))
}

/// Linear bias sweep through the ground–excited tunneling resonance.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApRamp {
    /// Bias Δ/h at the start of the ramp, measured from resonance (Hz).
    pub delta_start_hz: f64,
    pub delta_end_hz: f64,
    pub duration_s: f64,
    /// Tunneling J_eg/h (Hz).
    pub j_eg_hz: f64,
    /// Interaction U_eg/h (Hz); the triplet same-well level sits at 2U_eg.
    pub u_eg_hz: f64,
}

impl ApRamp {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |name, value: f64| Err(DynamicsError::InvalidRamp { name, value });
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return bad("duration_s", self.duration_s);
        }
        if !(self.j_eg_hz > 0.0 && self.j_eg_hz.is_finite()) {
            return bad("j_eg_hz", self.j_eg_hz);
        }
        if !self.u_eg_hz.is_finite() {
            return bad("u_eg_hz", self.u_eg_hz);
        }
        if !self.delta_start_hz.is_finite() || !self.delta_end_hz.is_finite() {
            return bad("delta_start_hz", self.delta_start_hz);
        }
        if self.delta_start_hz == self.delta_end_hz {
            return bad("delta_end_hz", self.delta_end_hz);
        }
        Ok(())
    }

    /// The same sweep run backwards.
    pub fn reversed(&self) -> Self {
        Self { delta_start_hz: self.delta_end_hz, delta_end_hz: self.delta_start_hz, ..*self }
    }

    /// dΔ/dt (Hz/s).
    pub fn sweep_rate_hz_per_s(&self) -> f64 {
        (self.delta_end_hz - self.delta_start_hz) / self.duration_s
    }

    pub fn delta_at(&self, t: f64) -> f64 {
        self.delta_start_hz + self.sweep_rate_hz_per_s() * t
    }

    /// Landau–Zener adiabaticity Γ = 2π·J_eg²/|dΔ/dt|.
    pub fn adiabaticity(&self) -> f64 {
        TAU * self.j_eg_hz * self.j_eg_hz / self.sweep_rate_hz_per_s().abs()
    }
}

/// Levels of the adiabatic-passage model.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum ApLevel {
    /// Singlet, one atom in each well's ground state.
    SingletSeparated = 0,
    /// Singlet, both atoms in the right well (excited + ground).
    SingletMerged = 1,
    TripletSeparated = 2,
    TripletMerged = 3,
}

/// Spin channel of the adiabatic-passage model.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Channel {
    Singlet,
    Triplet,
}

impl Channel {
    fn levels(self) -> (usize, usize) {
        match self {
            Channel::Singlet => (0, 1),
            Channel::Triplet => (2, 3),
        }
    }
}

/// State over `{|S;L_g,R_g⟩, |S;R_e,R_g⟩, |T;L_g,R_g⟩, |T;R_e,R_g⟩}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ApState {
    amps: Vector4<C64>,
}

impl ApState {
    pub fn new(amps: [C64; 4]) -> Self {
        Self { amps: Vector4::from(amps) }
    }

    pub fn basis(level: ApLevel) -> Self {
        let mut amps = Vector4::zeros();
        amps[level as usize] = C64::new(1.0, 0.0);
        Self { amps }
    }

    /// `|L_g↑, R_g↓⟩ = (|S;L_g,R_g⟩ + |T;L_g,R_g⟩)/√2`
    pub fn separated_up_down() -> Self {
        let a = C64::from(FRAC_1_SQRT_2);
        Self::new([a, 0.0.into(), a, 0.0.into()])
    }

    pub fn amplitude(&self, level: ApLevel) -> C64 {
        self.amps[level as usize]
    }

    pub fn amplitudes(&self) -> &Vector4<C64> {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.norm_squared()
    }

    /// Probability of both atoms in the right well.
    pub fn merged_probability(&self) -> f64 {
        self.amps[1].norm_sqr() + self.amps[3].norm_sqr()
    }

    /// Probability of one atom in each well.
    pub fn separated_probability(&self) -> f64 {
        self.amps[0].norm_sqr() + self.amps[2].norm_sqr()
    }

    /// Fraction of the channel's weight that sits in the merged level.
    pub fn channel_merged_fraction(&self, channel: Channel) -> f64 {
        let (a, b) = channel.levels();
        let total = self.amps[a].norm_sqr() + self.amps[b].norm_sqr();
        if total == 0.0 {
            0.0
        } else {
            self.amps[b].norm_sqr() / total
        }
    }

    /// |⟨self|other⟩|²
    pub fn fidelity(&self, other: &ApState) -> f64 {
        self.amps.dotc(&other.amps).norm_sqr()
    }
}

/// Hamiltonian/h (Hz) at bias `delta_hz`; block-diagonal in singlet and
/// triplet channels.
pub fn arp_hamiltonian(delta_hz: f64, ramp: &ApRamp) -> Matrix4<f64> {
    let j = ramp.j_eg_hz;
    let u2 = 2.0 * ramp.u_eg_hz;
    #[rustfmt::skip]
    let h = Matrix4::new(
        delta_hz, -j,  0.0,      0.0,
        -j,       0.0, 0.0,      0.0,
        0.0,      0.0, delta_hz, -j,
        0.0,      0.0, -j,       u2,
    );
    h
}

fn block(h: &Matrix4<f64>, channel: Channel) -> (f64, f64, f64) {
    let (a, b) = channel.levels();
    (h[(a, a)], h[(a, b)], h[(b, b)])
}

/// exp(−i·2π·τ·[[a, b], [b, d]]) for a real symmetric block in Hz.
fn block_propagator(a: f64, b: f64, d: f64, tau: f64) -> Matrix2<C64> {
    let mean = 0.5 * (a + d);
    let half = 0.5 * (a - d);
    let omega = (half * half + b * b).sqrt();
    let phase = TAU * tau;
    let (s, c) = (phase * omega).sin_cos();
    // sin(φω)/ω, finite as ω → 0.
    let sinc = if omega > 0.0 { s / omega } else { phase };
    let g = C64::from_polar(1.0, -phase * mean);
    let i = C64::new(0.0, 1.0);
    Matrix2::new(
        g * (C64::from(c) - i * sinc * half),
        g * (-i * sinc * b),
        g * (-i * sinc * b),
        g * (C64::from(c) + i * sinc * half),
    )
}

fn apply_propagator(state: &mut Vector4<C64>, h: &Matrix4<f64>, tau: f64) {
    for channel in [Channel::Singlet, Channel::Triplet] {
        let (a, b, d) = block(h, channel);
        let u = block_propagator(a, b, d, tau);
        let (i, j) = channel.levels();
        let (x, y) = (state[i], state[j]);
        state[i] = u[(0, 0)] * x + u[(0, 1)] * y;
        state[j] = u[(1, 0)] * x + u[(1, 1)] * y;
    }
}

/// Spectral norm of the Hamiltonian (Hz).
fn spectral_norm(h: &Matrix4<f64>) -> f64 {
    [Channel::Singlet, Channel::Triplet]
        .into_iter()
        .map(|ch| {
            let (a, b, d) = block(h, ch);
            let half = 0.5 * (a - d);
            0.5 * (a + d).abs() + (half * half + b * b).sqrt()
        })
        .fold(0.0, f64::max)
}

/// Time-ordered propagation through the ramp with uniform steps no longer
/// than `dt`.
pub fn arp_propagate(psi0: &ApState, ramp: &ApRamp, dt: f64) -> Result<ApState, DynamicsError> {
    ramp.validate()?;
    if !(dt > 0.0) {
        return Err(DynamicsError::NonPositiveStep(dt));
    }
    let steps = ((ramp.duration_s / dt) - 1e-9).ceil().max(1.0) as usize;
    arp_propagate_steps(psi0, ramp, steps)
}

pub fn arp_propagate_steps(
    psi0: &ApState,
    ramp: &ApRamp,
    steps: usize,
) -> Result<ApState, DynamicsError> {
    ramp.validate()?;
    let steps = steps.max(1);
    let dt = ramp.duration_s / steps as f64;
    // ‖H(Δ)‖ is convex in Δ, so the ramp endpoints bound it.
    let norm = spectral_norm(&arp_hamiltonian(ramp.delta_start_hz, ramp))
        .max(spectral_norm(&arp_hamiltonian(ramp.delta_end_hz, ramp)));
    let phase = TAU * norm * dt;
    if phase > MAX_STEP_PHASE {
        return Err(DynamicsError::StepTooLarge { phase });
    }
    // Fourth-order commutator-free Magnus step: two exponentials of
    // Gauss-point combinations. H is affine in Δ, so each combination is
    // half the Hamiltonian at an effective bias.
    let root3 = 3f64.sqrt();
    let (a1, a2) = ((3.0 - 2.0 * root3) / 12.0, (3.0 + 2.0 * root3) / 12.0);
    let (c1, c2) = (0.5 - root3 / 6.0, 0.5 + root3 / 6.0);
    let mut amps = psi0.amps;
    for k in 0..steps {
        let t0 = k as f64 * dt;
        let (d1, d2) = (ramp.delta_at(t0 + c1 * dt), ramp.delta_at(t0 + c2 * dt));
        let early = 2.0 * (a2 * d1 + a1 * d2);
        let late = 2.0 * (a1 * d1 + a2 * d2);
        apply_propagator(&mut amps, &arp_hamiltonian(early, ramp), 0.5 * dt);
        apply_propagator(&mut amps, &arp_hamiltonian(late, ramp), 0.5 * dt);
    }
    Ok(ApState { amps })
}

/// Evolution for `t` seconds at fixed bias.
pub fn arp_hold(psi: &ApState, delta_hz: f64, ramp: &ApRamp, t: f64) -> ApState {
    let mut amps = psi.amps;
    apply_propagator(&mut amps, &arp_hamiltonian(delta_hz, ramp), t);
    ApState { amps }
}

/// Forward passage, hold at the final bias, reverse passage.
#[derive(Clone, Debug, PartialEq)]
pub struct ApRoundTrip {
    pub after_forward: ApState,
    pub after_hold: ApState,
    pub final_state: ApState,
}

impl ApRoundTrip {
    /// Relative phase arg(T) − arg(S) of the separated amplitudes at the end.
    pub fn separated_triplet_phase(&self) -> f64 {
        let s = self.final_state.amplitude(ApLevel::SingletSeparated);
        let t = self.final_state.amplitude(ApLevel::TripletSeparated);
        (t * s.conj()).arg()
    }
}

pub fn ap_round_trip(
    psi0: &ApState,
    ramp: &ApRamp,
    hold_s: f64,
    steps: usize,
) -> Result<ApRoundTrip, DynamicsError> {
    let after_forward = arp_propagate_steps(psi0, ramp, steps)?;
    let after_hold = arp_hold(&after_forward, ramp.delta_end_hz, ramp, hold_s);
    let final_state = arp_propagate_steps(&after_hold, &ramp.reversed(), steps)?;
    Ok(ApRoundTrip { after_forward, after_hold, final_state })
}

/// Adiabaticity Γ = 2π·J_eg²/rate.
pub fn lz_adiabaticity(j_eg_hz: f64, sweep_rate_hz_per_s: f64) -> f64 {
    TAU * j_eg_hz * j_eg_hz / sweep_rate_hz_per_s.abs()
}

/// Landau–Zener probability of following the adiabatic state through one
/// avoided crossing of gap 2J_eg: 1 − exp(−2πΓ).
pub fn lz_transfer_probability(j_eg_hz: f64, sweep_rate_hz_per_s: f64) -> f64 {
    -(-TAU * lz_adiabaticity(j_eg_hz, sweep_rate_hz_per_s)).exp_m1()
}

/// Eigenvalue splitting (Hz) of one channel block at bias `delta_hz`.
pub fn channel_gap(delta_hz: f64, ramp: &ApRamp, channel: Channel) -> f64 {
    let (a, b, d) = block(&arp_hamiltonian(delta_hz, ramp), channel);
    let eig = SymmetricEigen::new(Matrix2::new(a, b, b, d)).eigenvalues;
    (eig[0] - eig[1]).abs()
}

/// Bias (Hz) at which the channel's avoided crossing is narrowest.
///
/// Golden-section search brackets the minimum; since the squared gap is a
/// quadratic in the bias, one parabolic step through three samples then
/// lands on the vertex to rounding precision.
pub fn channel_resonance_bias(ramp: &ApRamp, channel: Channel) -> f64 {
    let gap_sqr = |x: f64| channel_gap(x, ramp, channel).powi(2);
    let reach = 20.0 * (ramp.j_eg_hz.abs() + ramp.u_eg_hz.abs()) + 1.0;
    let (mut lo, mut hi) = (-reach, reach);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (gap_sqr(x1), gap_sqr(x2));
    for _ in 0..80 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = gap_sqr(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = gap_sqr(x2);
        }
    }
    let x0 = 0.5 * (lo + hi);
    let h = ramp.j_eg_hz.abs().max(1e-6);
    let (fm, f0, fp) = (gap_sqr(x0 - h), gap_sqr(x0), gap_sqr(x0 + h));
    let curvature = fp - 2.0 * f0 + fm;
    if curvature > 0.0 {
        x0 - h * (fp - fm) / (2.0 * curvature)
    } else {
        x0
    }
}

/// Magnetic-field gradient: differential transition shift δ/2π (Hz).
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientParams {
    pub delta_hz: f64,
}

impl GradientParams {
    /// Accumulated phase 2π·δ·t_g.
    pub fn phase(&self, t_g: f64) -> f64 {
        TAU * self.delta_hz * t_g
    }

    /// Gradient time that rotates the Bloch vector by π/2.
    pub fn quarter_period(&self) -> f64 {
        0.25 / self.delta_hz.abs()
    }
}

pub fn gradient_unitary_for_phase(phi: f64) -> Mat4 {
    let mut u = Mat4::identity();
    u[(2, 2)] = C64::from_polar(1.0, -phi);
    u
}

pub fn gradient_unitary(g: &GradientParams, t_g: f64) -> Mat4 {
    gradient_unitary_for_phase(g.phase(t_g))
}

pub fn gradient_evolve(rho: &DensityMatrix, g: &GradientParams, t_g: f64) -> DensityMatrix {
    rho.conjugate_by(&gradient_unitary(g, t_g))
}

/// Global microwave rotation applied identically to both atoms.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseParams {
    pub area_rad: f64,
    /// Azimuth of the rotation axis in the x–y plane.
    pub phase_rad: f64,
}

impl PulseParams {
    pub fn half_pi(phase_rad: f64) -> Self {
        Self { area_rad: PI / 2.0, phase_rad }
    }
}

/// exp(−i·(area/2)·(cos φ σx + sin φ σy))
pub fn single_atom_pulse(p: &PulseParams) -> Matrix2<C64> {
    let (s, c) = (0.5 * p.area_rad).sin_cos();
    let axis = C64::from_polar(1.0, p.phase_rad);
    let i = C64::new(0.0, 1.0);
    // cos φ σx + sin φ σy = [[0, e^{−iφ}], [e^{iφ}, 0]]
    Matrix2::new(c.into(), -i * s * axis.conj(), -i * s * axis, c.into())
}

pub fn pulse_unitary(p: &PulseParams) -> Mat4 {
    let u = single_atom_pulse(p);
    u.kronecker(&u)
}

pub fn microwave_pulse(rho: &DensityMatrix, p: &PulseParams) -> DensityMatrix {
    rho.conjugate_by(&pulse_unitary(p))
}

/// Collective random phase with standard deviation `sigma_rad`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DephasingParams {
    pub sigma_rad: f64,
}

const TOTAL_SZ: [f64; 4] = [1.0, 0.0, 0.0, -1.0];

/// Gaussian average over a collective z rotation: elements between total-S^z
/// sectors differing by ΔS^z are multiplied by exp(−(ΔS^z)²σ²/2).
pub fn collective_dephase(rho: &DensityMatrix, d: &DephasingParams) -> DensityMatrix {
    let s2 = d.sigma_rad * d.sigma_rad;
    let m = Mat4::from_fn(|i, j| {
        let dm = TOTAL_SZ[i] - TOTAL_SZ[j];
        rho.matrix()[(i, j)] * (-0.5 * dm * dm * s2).exp()
    });
    DensityMatrix::new_unchecked(m)
}

/// Scales the `↑↓`/`↓↑` coherence by `visibility ∈ [0, 1]`, leaving every
/// other element untouched. Positivity is preserved when the state has no
/// coherence between the anti-aligned and aligned sectors.
pub fn antialigned_visibility(rho: &DensityMatrix, visibility: f64) -> DensityMatrix {
    let v = visibility.clamp(0.0, 1.0);
    let mut m = *rho.matrix();
    m[(1, 2)] *= v;
    m[(2, 1)] *= v;
    DensityMatrix::new_unchecked(m)
}
