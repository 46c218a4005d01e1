//! Symmetric tridiagonal eigensolver: Sturm-sequence bisection for the
//! eigenvalues, inverse iteration for the eigenvectors.

/// Symmetric tridiagonal matrix with diagonal `diag` and off-diagonal `off`
/// (`off.len() == diag.len() - 1`).
#[derive(Clone, Debug)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert!(!diag.is_empty());
        assert_eq!(off.len() + 1, diag.len());
        Self { diag, off }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    fn scale(&self) -> f64 {
        let d = self.diag.iter().map(|x| x.abs()).fold(0.0, f64::max);
        let e = self.off.iter().map(|x| x.abs()).fold(0.0, f64::max);
        d + 2.0 * e
    }

    fn pivot_floor(&self) -> f64 {
        f64::MIN_POSITIVE.max(self.scale() * f64::EPSILON * f64::EPSILON)
    }

    /// Gershgorin interval containing every eigenvalue.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        let pivmin = self.pivot_floor();
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.len() {
            let e = self.off[i - 1];
            q = self.diag[i] - x - e * e / q;
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `k`-th smallest eigenvalue (0-based), bisected to full precision.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        assert!(k < self.len());
        let (mut lo, mut hi) = self.gershgorin();
        let span = hi - lo;
        lo -= 1e-12 * span.max(1.0);
        hi += 1e-12 * span.max(1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Unit-norm (Euclidean) eigenvector for an accurate eigenvalue.
    pub fn eigenvector(&self, eigenvalue: f64) -> Vec<f64> {
        let n = self.len();
        // Nudge the shift so the factorization is not exactly singular.
        let shift = eigenvalue + 16.0 * f64::EPSILON * self.scale();
        let lu = ShiftedLu::factor(self, shift, self.pivot_floor());
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * ((i * 7919) % 13) as f64).collect();
        for _ in 0..4 {
            lu.solve(&mut x);
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            x.iter_mut().for_each(|v| *v /= norm);
        }
        x
    }
}

/// LU factorization of `T − shift·I` with partial pivoting. `U` carries two
/// superdiagonals after row swaps.
struct ShiftedLu {
    u0: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    mult: Vec<f64>,
    swapped: Vec<bool>,
    pivmin: f64,
}

impl ShiftedLu {
    fn factor(t: &SymTridiagonal, shift: f64, pivmin: f64) -> Self {
        let n = t.len();
        let mut u0: Vec<f64> = t.diag.iter().map(|d| d - shift).collect();
        let mut u1: Vec<f64> = (0..n).map(|i| if i + 1 < n { t.off[i] } else { 0.0 }).collect();
        let mut u2 = vec![0.0; n];
        let mut mult = vec![0.0; n];
        let mut swapped = vec![false; n];
        for i in 0..n.saturating_sub(1) {
            let (a0, a1, a2) = (u0[i], u1[i], u2[i]);
            let (b0, b1, b2) = (t.off[i], u0[i + 1], u1[i + 1]);
            if a0.abs() >= b0.abs() {
                let p = if a0.abs() < pivmin { pivmin } else { a0 };
                let m = b0 / p;
                u0[i] = p;
                u0[i + 1] = b1 - m * a1;
                u1[i + 1] = b2 - m * a2;
                mult[i] = m;
            } else {
                let m = a0 / b0;
                u0[i] = b0;
                u1[i] = b1;
                u2[i] = b2;
                u0[i + 1] = a1 - m * b1;
                u1[i + 1] = a2 - m * b2;
                mult[i] = m;
                swapped[i] = true;
            }
        }
        if u0[n - 1].abs() < pivmin {
            u0[n - 1] = pivmin;
        }
        Self { u0, u1, u2, mult, swapped, pivmin }
    }

    fn solve(&self, x: &mut [f64]) {
        let n = x.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                x.swap(i, i + 1);
            }
            x[i + 1] -= self.mult[i] * x[i];
        }
        for i in (0..n).rev() {
            let mut v = x[i];
            if i + 1 < n {
                v -= self.u1[i] * x[i + 1];
            }
            if i + 2 < n {
                v -= self.u2[i] * x[i + 2];
            }
            let p = if self.u0[i].abs() < self.pivmin { self.pivmin } else { self.u0[i] };
            x[i] = v / p;
        }
    }
}
