//! Tweezer trap frequencies, motional overlaps and the exchange energy.
//!
//! Energies are reported as frequencies (E/h, Hz). The potential of a single
//! Gaussian tweezer is `V(r) = −U₀ exp(−2ρ²/w₀²)/(1 + z²/z_R²)` with
//! `U₀ = h·depth`; its minimum sits at `−U₀` and the asymptote at zero.
//!
//! Two interaction routes are offered:
//! - the harmonic approximation, with closed-form oscillator overlaps;
//! - a numeric route that diagonalizes a 1D finite-difference Hamiltonian
//!   for each axis and multiplies the three 1D density overlaps.
//!
//! Both routes treat the 3D integral as a product of 1D factors. The real
//! tweezer is not separable; the residual is not estimated here.

mod tridiag;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use tridiag::SymTridiagonal;

/// Planck constant (J·s).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Reduced Planck constant (J·s).
pub const HBAR: f64 = PLANCK / (2.0 * PI);
/// Unified atomic mass unit (kg).
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// Bohr radius (m).
pub const BOHR_RADIUS: f64 = 5.291_772_109_03e-11;
/// Mass of ⁸⁷Rb (kg).
pub const RB87_MASS: f64 = 86.909_180_527 * ATOMIC_MASS_UNIT;

/// Relative edge amplitude above which the numeric grid is rejected.
pub const EDGE_DECAY_LIMIT: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("parameter `{name}` must be finite and strictly positive (got {value})")]
    NonPositive { name: &'static str, value: f64 },
    #[error("trap depth {depth_hz} Hz is below the radial zero-point energy {zero_point_hz} Hz")]
    NoBoundStateEstimate { depth_hz: f64, zero_point_hz: f64 },
    #[error("only motional indices 0 and 1 are supported (got {0})")]
    UnsupportedMode(usize),
    #[error("grid too small: state {state} has relative edge amplitude {edge_ratio:.3e}")]
    GridTooSmall { state: usize, edge_ratio: f64 },
    #[error("no bound state found")]
    NoBoundState,
    #[error("axis {axis:?} has {found} bound states, need {needed}")]
    InsufficientBoundStates { axis: Axis, found: usize, needed: usize },
    #[error("grid needs at least 3 points and a positive half width")]
    InvalidGrid,
}

fn require_positive(name: &'static str, value: f64) -> Result<(), PotentialError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(PotentialError::NonPositive { name, value })
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

/// Physical description of one tweezer and the trapped species.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TweezerParams {
    /// Trap depth U₀/h (Hz).
    pub depth_hz: f64,
    /// 1/e² intensity radius (m).
    pub waist_m: f64,
    /// Trap light wavelength (m); only enters through the Rayleigh range.
    pub wavelength_m: f64,
    pub mass_kg: f64,
    /// s-wave scattering length (m).
    pub a_s_m: f64,
}

impl TweezerParams {
    pub fn validate(&self) -> Result<(), PotentialError> {
        require_positive("depth_hz", self.depth_hz)?;
        require_positive("waist_m", self.waist_m)?;
        require_positive("wavelength_m", self.wavelength_m)?;
        require_positive("mass_kg", self.mass_kg)?;
        require_positive("a_s_m", self.a_s_m)?;
        let radial = radial_omega(self);
        let zero_point_hz = radial / (4.0 * PI);
        if self.depth_hz <= zero_point_hz {
            return Err(PotentialError::NoBoundStateEstimate {
                depth_hz: self.depth_hz,
                zero_point_hz,
            });
        }
        Ok(())
    }

    pub fn with_depth(&self, depth_hz: f64) -> Self {
        Self { depth_hz, ..*self }
    }

    pub fn rayleigh_range(&self) -> f64 {
        PI * self.waist_m * self.waist_m / self.wavelength_m
    }
}

fn radial_omega(p: &TweezerParams) -> f64 {
    let u0 = PLANCK * p.depth_hz;
    (4.0 * u0 / (p.mass_kg * p.waist_m * p.waist_m)).sqrt()
}

fn axial_omega(p: &TweezerParams) -> f64 {
    let u0 = PLANCK * p.depth_hz;
    let zr = p.rayleigh_range();
    (2.0 * u0 / (p.mass_kg * zr * zr)).sqrt()
}

/// Harmonic expansion of the trap about its minimum.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct HarmonicModes {
    /// Angular frequencies (rad/s) along x, y, z.
    pub omega: [f64; 3],
    /// Oscillator lengths √(ħ/mω) (m) along x, y, z.
    pub r0: [f64; 3],
}

impl HarmonicModes {
    pub fn frequency_hz(&self, axis: Axis) -> f64 {
        self.omega[axis.index()] / (2.0 * PI)
    }

    pub fn oscillator_length(&self, axis: Axis) -> f64 {
        self.r0[axis.index()]
    }
}

pub fn harmonic_modes(p: &TweezerParams) -> Result<HarmonicModes, PotentialError> {
    p.validate()?;
    let wr = radial_omega(p);
    let wz = axial_omega(p);
    let omega = [wr, wr, wz];
    let r0 = omega.map(|w| (HBAR / (p.mass_kg * w)).sqrt());
    Ok(HarmonicModes { omega, r0 })
}

/// ∫|ψ_{n1}(x)|²|ψ_{n2}(x)|² dx for harmonic-oscillator eigenfunctions of
/// length `r0` (units 1/m).
pub fn overlap_1d(n1: usize, n2: usize, r0: f64) -> Result<f64, PotentialError> {
    require_positive("r0", r0)?;
    let ground = 1.0 / ((2.0 * PI).sqrt() * r0);
    match (n1, n2) {
        (0, 0) => Ok(ground),
        (0, 1) | (1, 0) => Ok(0.5 * ground),
        (1, 1) => Ok(0.75 * ground),
        (n, 0 | 1) | (_, n) => Err(PotentialError::UnsupportedMode(n)),
    }
}

/// Contact coupling 4πħ²a_s/m expressed in Hz·m³.
fn contact_coupling_hz(p: &TweezerParams) -> f64 {
    4.0 * PI * HBAR * HBAR * p.a_s_m / p.mass_kg / PLANCK
}

/// Interaction energy U_eg/h (Hz) of one ground-state atom and one atom
/// excited once along `excited`, in the harmonic approximation.
pub fn u_eg(p: &TweezerParams, excited: Axis) -> Result<f64, PotentialError> {
    let modes = harmonic_modes(p)?;
    let mut integral = 1.0;
    for axis in Axis::ALL {
        let n = usize::from(axis == excited);
        integral *= overlap_1d(0, n, modes.oscillator_length(axis))?;
    }
    Ok(contact_coupling_hz(p) * integral)
}

/// Interaction energy U_gg/h (Hz) of two ground-state atoms.
pub fn u_gg(p: &TweezerParams) -> Result<f64, PotentialError> {
    let modes = harmonic_modes(p)?;
    let mut integral = 1.0;
    for axis in Axis::ALL {
        integral *= overlap_1d(0, 0, modes.oscillator_length(axis))?;
    }
    Ok(contact_coupling_hz(p) * integral)
}

/// Spin-exchange frequency J_ex/h = 2U_eg/h (Hz), excitation along x.
pub fn j_ex(p: &TweezerParams) -> Result<f64, PotentialError> {
    Ok(2.0 * u_eg(p, Axis::X)?)
}

/// Uniform finite-difference grid, in units of the waist of the 1D well.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub points: usize,
    /// Half extent of the grid in waists.
    pub half_width_waists: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { points: 2048, half_width_waists: 4.0 }
    }
}

/// Bound states of a 1D well on a uniform grid with hard walls just outside
/// the first and last point.
#[derive(Clone, Debug, PartialEq)]
pub struct NumericSpectrum1D {
    /// Bound-state energies E/h (Hz), ascending, all negative.
    pub energies_hz: Vec<f64>,
    /// Grid-normalized wavefunctions (units m^{-1/2}).
    pub wavefunctions: Vec<Vec<f64>>,
    pub x_min_m: f64,
    pub dx_m: f64,
}

impl NumericSpectrum1D {
    pub fn points(&self) -> usize {
        self.wavefunctions.first().map_or(0, Vec::len)
    }

    pub fn bound_states(&self) -> usize {
        self.energies_hz.len()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min_m + i as f64 * self.dx_m
    }

    /// Harmonic-oscillator states 0 and 1 sampled on a grid, for
    /// cross-checking the numeric overlap route.
    pub fn sampled_harmonic(r0: f64, half_width_m: f64, points: usize) -> Self {
        let dx = 2.0 * half_width_m / (points - 1) as f64;
        let x_min = -half_width_m;
        let norm = 1.0 / (PI.sqrt() * r0).sqrt();
        let psi0: Vec<f64> = (0..points)
            .map(|i| {
                let u = (x_min + i as f64 * dx) / r0;
                norm * (-0.5 * u * u).exp()
            })
            .collect();
        let psi1: Vec<f64> = (0..points)
            .map(|i| {
                let u = (x_min + i as f64 * dx) / r0;
                norm * 2f64.sqrt() * u * (-0.5 * u * u).exp()
            })
            .collect();
        Self {
            energies_hz: vec![f64::NAN, f64::NAN],
            wavefunctions: vec![psi0, psi1],
            x_min_m: x_min,
            dx_m: dx,
        }
    }

    /// ∫|ψ_a|²|ψ_b|² dx on the grid.
    pub fn density_overlap(&self, a: usize, b: usize) -> f64 {
        let (pa, pb) = (&self.wavefunctions[a], &self.wavefunctions[b]);
        pa.iter().zip(pb).map(|(u, v)| u * u * v * v).sum::<f64>() * self.dx_m
    }

    /// Number of sign changes of wavefunction `n`, ignoring the numerically
    /// negligible tails.
    pub fn node_count(&self, n: usize) -> usize {
        let psi = &self.wavefunctions[n];
        let peak = psi.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let floor = 1e-9 * peak;
        let mut last = 0.0f64;
        let mut nodes = 0;
        for &v in psi.iter().filter(|v| v.abs() > floor) {
            if last != 0.0 && v.signum() != last.signum() {
                nodes += 1;
            }
            last = v;
        }
        nodes
    }
}

/// Bound states of `V(x) = −h·depth·exp(−2x²/w²)` from a second-order
/// central finite-difference Hamiltonian.
pub fn eigensolve_gaussian_1d(
    depth_hz: f64,
    waist_m: f64,
    mass_kg: f64,
    grid: &GridSpec,
) -> Result<NumericSpectrum1D, PotentialError> {
    require_positive("depth_hz", depth_hz)?;
    require_positive("waist_m", waist_m)?;
    require_positive("mass_kg", mass_kg)?;
    if grid.points < 3 || !(grid.half_width_waists > 0.0) {
        return Err(PotentialError::InvalidGrid);
    }
    let n = grid.points;
    let half = grid.half_width_waists * waist_m;
    // Walls sit one spacing beyond the outermost points.
    let dx = 2.0 * half / (n + 1) as f64;
    let x_min = -half + dx;
    // ħ²/(2m dx²) in Hz.
    let hop = HBAR / (4.0 * PI * mass_kg * dx * dx);
    let diag: Vec<f64> = (0..n)
        .map(|i| {
            let x = x_min + i as f64 * dx;
            2.0 * hop - depth_hz * (-2.0 * x * x / (waist_m * waist_m)).exp()
        })
        .collect();
    let t = SymTridiagonal::new(diag, vec![-hop; n - 1]);

    let bound = t.count_below(0.0);
    if bound == 0 {
        return Err(PotentialError::NoBoundState);
    }
    let mut energies = Vec::with_capacity(bound);
    let mut wavefunctions = Vec::with_capacity(bound);
    for k in 0..bound {
        let e = t.eigenvalue(k);
        let mut v = t.eigenvector(e);
        let scale = 1.0 / dx.sqrt();
        // Fix the sign so the first significant lobe is positive.
        let peak = v.iter().map(|a| a.abs()).fold(0.0, f64::max);
        let first = v.iter().find(|a| a.abs() > 1e-3 * peak).copied().unwrap_or(1.0);
        let sign = first.signum();
        v.iter_mut().for_each(|a| *a *= sign * scale);
        energies.push(e);
        wavefunctions.push(v);
    }
    for (state, psi) in wavefunctions.iter().enumerate().take(2) {
        let peak = psi.iter().map(|a| a.abs()).fold(0.0, f64::max);
        let edge = psi[0].abs().max(psi[n - 1].abs());
        let edge_ratio = edge / peak;
        if edge_ratio > EDGE_DECAY_LIMIT {
            return Err(PotentialError::GridTooSmall { state, edge_ratio });
        }
    }
    Ok(NumericSpectrum1D { energies_hz: energies, wavefunctions, x_min_m: x_min, dx_m: dx })
}

/// Numeric 1D spectra for the three trap axes.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisSpectra {
    pub x: NumericSpectrum1D,
    pub y: NumericSpectrum1D,
    pub z: NumericSpectrum1D,
}

impl AxisSpectra {
    pub fn axis(&self, axis: Axis) -> &NumericSpectrum1D {
        match axis {
            Axis::X => &self.x,
            Axis::Y => &self.y,
            Axis::Z => &self.z,
        }
    }
}

/// Waist of the Gaussian well whose curvature matches the axial (Lorentzian)
/// profile: √2·z_R.
pub fn axial_equivalent_waist(p: &TweezerParams) -> f64 {
    2f64.sqrt() * p.rayleigh_range()
}

/// Solves the radial and axial 1D wells. The two radial axes are identical.
pub fn numeric_spectra(p: &TweezerParams, grid: &GridSpec) -> Result<AxisSpectra, PotentialError> {
    p.validate()?;
    let x = eigensolve_gaussian_1d(p.depth_hz, p.waist_m, p.mass_kg, grid)?;
    let z = eigensolve_gaussian_1d(p.depth_hz, axial_equivalent_waist(p), p.mass_kg, grid)?;
    Ok(AxisSpectra { y: x.clone(), x, z })
}

/// U_eg/h (Hz) from grid wavefunctions, excitation along x.
pub fn u_eg_numeric(p: &TweezerParams, spectra: &AxisSpectra) -> Result<f64, PotentialError> {
    require_positive("a_s_m", p.a_s_m)?;
    require_positive("mass_kg", p.mass_kg)?;
    let found = spectra.x.bound_states();
    if found < 2 {
        return Err(PotentialError::InsufficientBoundStates { axis: Axis::X, found, needed: 2 });
    }
    for axis in [Axis::Y, Axis::Z] {
        let found = spectra.axis(axis).bound_states();
        if found < 1 {
            return Err(PotentialError::InsufficientBoundStates { axis, found, needed: 1 });
        }
    }
    let integral =
        spectra.x.density_overlap(0, 1) * spectra.y.density_overlap(0, 0) * spectra.z.density_overlap(0, 0);
    Ok(contact_coupling_hz(p) * integral)
}

/// Numeric J_ex/h = 2U_eg/h (Hz).
pub fn j_ex_numeric(p: &TweezerParams, grid: &GridSpec) -> Result<f64, PotentialError> {
    let spectra = numeric_spectra(p, grid)?;
    Ok(2.0 * u_eg_numeric(p, &spectra)?)
}

/// Ratio of trap depth to the radial harmonic quantum, both in Hz.
pub fn depth_over_quantum(p: &TweezerParams) -> f64 {
    p.depth_hz / (radial_omega(p) / (2.0 * PI))
}
