//! Two-atom spin states.
//!
//! Every state lives in the four-dimensional product space of two spin-1/2
//! slots, ordered `{↑↑, ↑↓, ↓↑, ↓↓}` with the left slot as the most
//! significant bit. The slots are opaque labels: they stand for the left and
//! right tweezer after separation, or for the excited and ground motional
//! levels while both atoms share one tweezer.

use std::fmt;

use nalgebra::{Matrix4, SymmetricEigen, Vector4};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

pub type C64 = Complex64;
pub type Mat4 = Matrix4<C64>;
pub type Vec4 = Vector4<C64>;

/// Tolerance for algebraic identities (hermiticity, trace, normalization).
pub const ALGEBRAIC_TOL: f64 = 1e-12;
/// Smallest eigenvalue a density matrix may have before it is rejected.
pub const POSITIVITY_TOL: f64 = 1e-10;
/// Minimum weight of the anti-aligned block for a Bloch vector to exist.
pub const SUBSPACE_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("state is not normalized (norm² = {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },
    #[error("cannot normalize the zero vector")]
    ZeroVector,
    #[error("invalid density matrix: {0}")]
    InvalidDensity(ValidationReport),
    #[error("anti-aligned subspace weight {weight} is too small for a Bloch vector")]
    DegenerateSubspace { weight: f64 },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    fn bit(self) -> usize {
        match self {
            Spin::Up => 0,
            Spin::Down => 1,
        }
    }

    /// Eigenvalue of S^z in units of ħ.
    pub fn sz(self) -> f64 {
        match self {
            Spin::Up => 0.5,
            Spin::Down => -0.5,
        }
    }
}

/// One of the four product basis states.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpinBasisState {
    pub left: Spin,
    pub right: Spin,
}

impl SpinBasisState {
    pub const UP_UP: Self = Self { left: Spin::Up, right: Spin::Up };
    pub const UP_DOWN: Self = Self { left: Spin::Up, right: Spin::Down };
    pub const DOWN_UP: Self = Self { left: Spin::Down, right: Spin::Up };
    pub const DOWN_DOWN: Self = Self { left: Spin::Down, right: Spin::Down };

    /// Canonical ordering.
    pub const ALL: [Self; 4] = [Self::UP_UP, Self::UP_DOWN, Self::DOWN_UP, Self::DOWN_DOWN];

    pub fn index(self) -> usize {
        2 * self.left.bit() + self.right.bit()
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn down_count(self) -> usize {
        self.left.bit() + self.right.bit()
    }

    /// Total S^z in units of ħ.
    pub fn total_sz(self) -> f64 {
        self.left.sz() + self.right.sz()
    }
}

impl fmt::Display for SpinBasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let arrow = |s: Spin| match s {
            Spin::Up => '↑',
            Spin::Down => '↓',
        };
        write!(f, "|{}{}⟩", arrow(self.left), arrow(self.right))
    }
}

/// A normalized two-atom state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amps: Vec4,
}

impl PureState {
    /// Wraps amplitudes that are already normalized.
    pub fn new(amps: [C64; 4]) -> Result<Self, StateError> {
        let amps = Vec4::from(amps);
        let norm_sqr = amps.norm_squared();
        if (norm_sqr - 1.0).abs() > ALGEBRAIC_TOL {
            return Err(StateError::NotNormalized { norm_sqr });
        }
        Ok(Self { amps })
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(amps: [C64; 4]) -> Result<Self, StateError> {
        let amps = Vec4::from(amps);
        let norm = amps.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(StateError::ZeroVector);
        }
        Ok(Self { amps: amps.unscale(norm) })
    }

    pub(crate) fn from_vector_unchecked(amps: Vec4) -> Self {
        Self { amps }
    }

    pub fn basis(state: SpinBasisState) -> Self {
        let mut amps = Vec4::zeros();
        amps[state.index()] = C64::new(1.0, 0.0);
        Self { amps }
    }

    /// (|↑↓⟩ − |↓↑⟩)/√2
    pub fn singlet() -> Self {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        Self::from_vector_unchecked(Vec4::new(0.0.into(), a.into(), (-a).into(), 0.0.into()))
    }

    /// (|↑↓⟩ + |↓↑⟩)/√2
    pub fn triplet() -> Self {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        Self::from_vector_unchecked(Vec4::new(0.0.into(), a.into(), a.into(), 0.0.into()))
    }

    /// (|↑↓⟩ + i|↓↑⟩)/√2, the quarter-period exchange state.
    pub fn psi_plus() -> Self {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        Self::from_vector_unchecked(Vec4::new(
            0.0.into(),
            a.into(),
            C64::new(0.0, a),
            0.0.into(),
        ))
    }

    /// (|↑↓⟩ − i|↓↑⟩)/√2
    pub fn psi_minus() -> Self {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        Self::from_vector_unchecked(Vec4::new(
            0.0.into(),
            a.into(),
            C64::new(0.0, -a),
            0.0.into(),
        ))
    }

    /// cos(θ/2)|↑↓⟩ + e^{iφ} sin(θ/2)|↓↑⟩
    pub fn antialigned(theta: f64, phi: f64) -> Self {
        let (s, c) = (theta / 2.0).sin_cos();
        Self::from_vector_unchecked(Vec4::new(
            0.0.into(),
            c.into(),
            C64::from_polar(s, phi),
            0.0.into(),
        ))
    }

    pub fn amplitudes(&self) -> &Vec4 {
        &self.amps
    }

    pub fn amplitude(&self, state: SpinBasisState) -> C64 {
        self.amps[state.index()]
    }

    /// ⟨self|other⟩
    pub fn overlap(&self, other: &PureState) -> C64 {
        self.amps.dotc(&other.amps)
    }

    /// |⟨self|other⟩|², insensitive to global phase.
    pub fn fidelity(&self, other: &PureState) -> f64 {
        self.overlap(other).norm_sqr()
    }

    /// Applies a unitary. The caller is responsible for unitarity.
    pub fn evolve(&self, unitary: &Mat4) -> PureState {
        Self { amps: unitary * self.amps }
    }
}

/// A validated 4×4 density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    m: Mat4,
}

impl DensityMatrix {
    /// Validates hermiticity, unit trace and positivity.
    pub fn new(m: Mat4) -> Result<Self, StateError> {
        let report = validate(&m);
        if report.is_ok() {
            Ok(Self { m })
        } else {
            Err(StateError::InvalidDensity(report))
        }
    }

    /// Skips validation. Only for matrices produced by channels that preserve
    /// the invariants by construction.
    pub(crate) fn new_unchecked(m: Mat4) -> Self {
        Self { m }
    }

    pub fn diagonal(populations: [f64; 4]) -> Result<Self, StateError> {
        let m = Mat4::from_diagonal(&Vec4::from(populations.map(C64::from)));
        Self::new(m)
    }

    pub fn maximally_mixed() -> Self {
        Self { m: Mat4::identity().scale(0.25) }
    }

    pub fn basis(state: SpinBasisState) -> Self {
        density_from_pure(&PureState::basis(state))
    }

    /// Random full-rank state from the Hilbert–Schmidt (Ginibre) ensemble.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let g = Mat4::from_fn(|_, _| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let m = &g * g.adjoint();
        let tr = m.trace().re;
        let mut m = m.unscale(tr);
        // Symmetrize to remove rounding asymmetry.
        m = (m + m.adjoint()).scale(0.5);
        Self { m }
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.m
    }

    pub fn into_matrix(self) -> Mat4 {
        self.m
    }

    pub fn element(&self, row: SpinBasisState, col: SpinBasisState) -> C64 {
        self.m[(row.index(), col.index())]
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    /// Diagonal entries in canonical order.
    pub fn populations(&self) -> [f64; 4] {
        [self.m[(0, 0)].re, self.m[(1, 1)].re, self.m[(2, 2)].re, self.m[(3, 3)].re]
    }

    /// U ρ U†. Unitarity of `u` is the caller's responsibility.
    pub fn conjugate_by(&self, u: &Mat4) -> DensityMatrix {
        let m = u * self.m * u.adjoint();
        Self { m: (m + m.adjoint()).scale(0.5) }
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 4] {
        hermitian_eigenvalues(&self.m)
    }

    /// ⟨ψ|ρ|ψ⟩
    pub fn fidelity_with(&self, psi: &PureState) -> f64 {
        let a = psi.amplitudes();
        a.dotc(&(self.m * a)).re
    }

    pub fn purity(&self) -> f64 {
        (self.m * self.m).trace().re
    }

    /// Convex combination `Σ wᵢ ρᵢ`. Weights must be non-negative and sum to one.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<DensityMatrix, StateError> {
        let mut m = Mat4::zeros();
        for (w, rho) in parts {
            m += rho.m.scale(*w);
        }
        Self::new(m)
    }
}

pub(crate) fn hermitian_eigenvalues(m: &Mat4) -> [f64; 4] {
    let h = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(h);
    let mut v = [eig.eigenvalues[0], eig.eigenvalues[1], eig.eigenvalues[2], eig.eigenvalues[3]];
    v.sort_by(f64::total_cmp);
    v
}

/// ρ = |ψ⟩⟨ψ|
pub fn density_from_pure(psi: &PureState) -> DensityMatrix {
    let a = psi.amplitudes();
    DensityMatrix::new_unchecked(a * a.adjoint())
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    NonHermitian { max_deviation: f64 },
    Trace { trace: C64 },
    NotPositive { min_eigenvalue: f64 },
    NonFinite,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonHermitian { max_deviation } => {
                write!(f, "not hermitian (max |ρ−ρ†| = {max_deviation:.3e})")
            }
            Violation::Trace { trace } => write!(f, "trace {trace} ≠ 1"),
            Violation::NotPositive { min_eigenvalue } => {
                write!(f, "not positive (min eigenvalue {min_eigenvalue:.3e})")
            }
            Violation::NonFinite => write!(f, "non-finite entries"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks every density-matrix invariant and reports each violation.
pub fn validate(m: &Mat4) -> ValidationReport {
    let mut violations = Vec::new();
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        violations.push(Violation::NonFinite);
        return ValidationReport { violations };
    }
    let max_deviation = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max_deviation > ALGEBRAIC_TOL {
        violations.push(Violation::NonHermitian { max_deviation });
    }
    let trace = m.trace();
    if (trace - C64::new(1.0, 0.0)).norm() > ALGEBRAIC_TOL {
        violations.push(Violation::Trace { trace });
    }
    let min_eigenvalue = hermitian_eigenvalues(m)[0];
    if min_eigenvalue < -POSITIVITY_TOL {
        violations.push(Violation::NotPositive { min_eigenvalue });
    }
    ValidationReport { violations }
}

/// Bloch vector of the effective qubit spanned by `{|↑↓⟩, |↓↑⟩}`.
///
/// North pole is `|↑↓⟩`; `(|↑↓⟩ + i|↓↑⟩)/√2` points along +y and the
/// triplet `(|↑↓⟩ + |↓↑⟩)/√2` along +x.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    /// Coherence angle in the equatorial plane, in (−π, π].
    pub fn azimuth(&self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn length(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

pub fn bloch_vector(rho: &DensityMatrix) -> Result<BlochVector, StateError> {
    let m = rho.matrix();
    let p11 = m[(1, 1)].re;
    let p22 = m[(2, 2)].re;
    let weight = p11 + p22;
    if weight < SUBSPACE_TOL {
        return Err(StateError::DegenerateSubspace { weight });
    }
    let coh = m[(1, 2)];
    Ok(BlochVector {
        x: 2.0 * coh.re / weight,
        y: -2.0 * coh.im / weight,
        z: (p11 - p22) / weight,
    })
}

/// Change of basis taking coordinates over `{↑↑, ↑↓, ↓↑, ↓↓}` to coordinates
/// over `{↑↑, S, T, ↓↓}`.
pub fn singlet_triplet_basis() -> Mat4 {
    let a = C64::from(std::f64::consts::FRAC_1_SQRT_2);
    let o = C64::from(0.0);
    let i = C64::from(1.0);
    Mat4::new(
        i, o, o, o, //
        o, a, -a, o, //
        o, a, a, o, //
        o, o, o, i,
    )
}

/// Re-expresses ρ over `{↑↑, S, T, ↓↓}`.
pub fn singlet_triplet_transform(rho: &DensityMatrix) -> DensityMatrix {
    rho.conjugate_by(&singlet_triplet_basis())
}

/// Inverse of [`singlet_triplet_transform`].
pub fn spin_basis_from_singlet_triplet(rho: &DensityMatrix) -> DensityMatrix {
    rho.conjugate_by(&singlet_triplet_basis().adjoint())
}
