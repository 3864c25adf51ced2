//! Dense complex linear algebra sized for link-level work.
//!
//! Every matrix in this crate is at most 8x8, so the kernels favour
//! clarity and exactness over asymptotic speed: a cyclic Jacobi
//! eigensolver for Hermitian matrices, a Cholesky-based base-2
//! log-determinant, and seeded complex Gaussian samplers.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

/// Entries whose pairwise asymmetry stays below this (relative to the matrix
/// scale) still count as Hermitian.
const HERMITIAN_TOL: f64 = 1e-12;

/// Eigenvalues of a nominally positive semidefinite matrix may undershoot
/// zero by at most this much before the matrix is rejected.
const PSD_CLAMP: f64 = 1e-12;

/// Jacobi sweeps stop once the off-diagonal mass falls below this fraction
/// of the Frobenius norm.
const JACOBI_TOL: f64 = 1e-15;

const MAX_JACOBI_SWEEPS: usize = 64;

// ─────────────────────────── Matrix type ───────────────────────────

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    /// All-zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    /// Identity matrix.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Diagonal matrix from real entries.
    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    /// Builds a matrix from a row-major closure.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Column `c` as a vector.
    pub fn column(&self, c: usize) -> Vec<Complex64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    /// Conjugate transpose.
    pub fn hermitian_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    /// Matrix product `self * rhs`.
    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "inner dimensions must agree");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..rhs.cols {
                    out[(r, c)] += a * rhs[(k, c)];
                }
            }
        }
        out
    }

    /// Entry-wise sum `self + rhs`.
    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shapes must agree");
        let mut out = self.clone();
        for (o, r) in out.data.iter_mut().zip(rhs.data.iter()) {
            *o += r;
        }
        out
    }

    /// Scales every entry by a real factor.
    pub fn scale(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for v in out.data.iter_mut() {
            *v *= factor;
        }
        out
    }

    /// Scales column `c` in place by a real factor.
    pub fn scale_column(&mut self, c: usize, factor: f64) {
        for r in 0..self.rows {
            self[(r, c)] *= factor;
        }
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Trace (sum of diagonal entries).
    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square(), "trace requires a square matrix");
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    /// Largest entry magnitude, or 0 for an empty matrix.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// True when `self` equals its conjugate transpose within the shared
    /// symmetry tolerance, scaled by the matrix magnitude.
    pub fn is_hermitian(&self) -> bool {
        if !self.is_square() {
            return false;
        }
        let scale = self.max_abs().max(1.0);
        for r in 0..self.rows {
            if self[(r, r)].im.abs() > HERMITIAN_TOL * scale {
                return false;
            }
            for c in (r + 1)..self.cols {
                if (self[(r, c)] - self[(c, r)].conj()).norm() > HERMITIAN_TOL * scale {
                    return false;
                }
            }
        }
        true
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

// ─────────────────────── Eigendecomposition ────────────────────────

/// Spectral factorization of a Hermitian matrix: `A = U diag(λ) U^H` with
/// eigenvalues sorted in descending order and eigenvectors as the columns
/// of the unitary `U`.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    /// Real eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// Unitary matrix whose column `n` pairs with `eigenvalues[n]`.
    pub vectors: ComplexMatrix,
}

impl HermitianEig {
    /// Rebuilds `U diag(λ) U^H`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let lam = ComplexMatrix::from_real_diagonal(&self.eigenvalues);
        self.vectors.matmul(&lam).matmul(&self.vectors.hermitian_transpose())
    }
}

/// Full eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Rejects non-square or non-Hermitian input. Fails only if the sweep count
/// is exhausted, which does not happen for the matrix sizes used here.
pub fn hermitian_eig(a: &ComplexMatrix) -> Result<HermitianEig> {
    if !a.is_square() {
        return Err(Error::Shape(format!(
            "eigendecomposition requires a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if !a.is_hermitian() {
        return Err(Error::InvalidArgument(
            "eigendecomposition requires a Hermitian matrix".into(),
        ));
    }
    let n = a.rows();
    // Work on the exactly Hermitian average (A + A^H)/2.
    let mut m = a.add(&a.hermitian_transpose()).scale(0.5);
    let mut v = ComplexMatrix::identity(n);
    let scale = m.frobenius_norm().max(1.0);

    for _sweep in 0..MAX_JACOBI_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[(p, q)].norm_sqr();
            }
        }
        if (2.0 * off).sqrt() <= JACOBI_TOL * scale {
            let mut pairs: Vec<(f64, usize)> =
                (0..n).map(|i| (m[(i, i)].re, i)).collect();
            // Descending by eigenvalue; stable on ties.
            pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
            let eigenvalues: Vec<f64> = pairs.iter().map(|&(e, _)| e).collect();
            let vectors = ComplexMatrix::from_fn(n, n, |r, c| v[(r, pairs[c].1)]);
            return Ok(HermitianEig { eigenvalues, vectors });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                jacobi_rotate(&mut m, &mut v, p, q);
            }
        }
    }
    Err(Error::Numeric(format!(
        "Jacobi eigendecomposition did not converge in {MAX_JACOBI_SWEEPS} sweeps"
    )))
}

/// One two-sided unitary rotation that zeros `m[(p, q)]`.
fn jacobi_rotate(m: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let b = m[(p, q)].norm();
    if b == 0.0 {
        return;
    }
    let phase = m[(p, q)] / b;
    let alpha = m[(p, p)].re;
    let delta = m[(q, q)].re;
    let tau = (alpha - delta) / (2.0 * b);
    // Smaller-angle root of t^2 + 2 tau t - 1 = 0.
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    let n = m.rows();
    for i in 0..n {
        if i == p || i == q {
            continue;
        }
        let x = m[(i, p)];
        let y = m[(i, q)];
        let xp = c * x + s * phase.conj() * y;
        let yq = -s * phase * x + c * y;
        m[(i, p)] = xp;
        m[(i, q)] = yq;
        m[(p, i)] = xp.conj();
        m[(q, i)] = yq.conj();
    }
    m[(p, p)] = Complex64::new(c * c * alpha + s * s * delta + 2.0 * b * c * s, 0.0);
    m[(q, q)] = Complex64::new(s * s * alpha + c * c * delta - 2.0 * b * c * s, 0.0);
    m[(p, q)] = Complex64::new(0.0, 0.0);
    m[(q, p)] = Complex64::new(0.0, 0.0);

    for i in 0..n {
        let x = v[(i, p)];
        let y = v[(i, q)];
        v[(i, p)] = c * x + s * phase.conj() * y;
        v[(i, q)] = -s * phase * x + c * y;
    }
}

// ───────────────────── Cholesky and determinants ─────────────────────

/// Lower Cholesky factor `L` with `A = L L^H` and real positive diagonal.
///
/// Fails on non-square or non-Hermitian input, and names the first pivot
/// that is not strictly positive.
pub fn cholesky(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(Error::Shape(format!(
            "Cholesky requires a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if !a.is_hermitian() {
        return Err(Error::InvalidArgument("Cholesky requires a Hermitian matrix".into()));
    }
    let n = a.rows();
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::Numeric(format!(
                "matrix is not positive definite: pivot {j} is {d:.3e}"
            )));
        }
        let djj = d.sqrt();
        l[(j, j)] = Complex64::new(djj, 0.0);
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Base-2 log-determinant of a Hermitian positive definite matrix,
/// computed as `2 Σ log2 L_jj` from the Cholesky factor.
pub fn logdet_hpd(a: &ComplexMatrix) -> Result<f64> {
    let l = cholesky(a)?;
    let mut acc = 0.0;
    for j in 0..a.rows() {
        acc += l[(j, j)].re.log2();
    }
    Ok(2.0 * acc)
}

/// Solves `A x = b` for Hermitian positive definite `A` via Cholesky.
pub fn solve_hpd(a: &ComplexMatrix, b: &[Complex64]) -> Result<Vec<Complex64>> {
    if b.len() != a.rows() {
        return Err(Error::Shape(format!(
            "solve: matrix is {}x{} but rhs has length {}",
            a.rows(),
            a.cols(),
            b.len()
        )));
    }
    let l = cholesky(a)?;
    let n = a.rows();
    // Forward: L y = b.
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            let lik = l[(i, k)];
            y[i] = y[i] - lik * y[k];
        }
        y[i] /= l[(i, i)].re;
    }
    // Backward: L^H x = y.
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            let lki = l[(k, i)].conj();
            y[i] = y[i] - lki * y[k];
        }
        y[i] /= l[(i, i)].re;
    }
    Ok(y)
}

/// Hermitian square root of a positive semidefinite matrix.
///
/// Eigenvalues in `[-1e-12, 0]` are treated as exact zeros; anything more
/// negative is rejected as not positive semidefinite.
pub fn sqrt_psd(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(a)?;
    let mut roots = Vec::with_capacity(eig.eigenvalues.len());
    for (n, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam < -PSD_CLAMP {
            return Err(Error::InvalidArgument(format!(
                "matrix is not positive semidefinite: eigenvalue {n} is {lam:.3e}"
            )));
        }
        roots.push(lam.max(0.0).sqrt());
    }
    let d = ComplexMatrix::from_real_diagonal(&roots);
    Ok(eig.vectors.matmul(&d).matmul(&eig.vectors.hermitian_transpose()))
}

// ─────────────────────────── Sampling ───────────────────────────

/// Matrix of i.i.d. circularly symmetric complex Gaussian entries with unit
/// entry variance: real and imaginary parts are independent `N(0, 1/2)`.
pub fn sample_complex_gaussian(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            m[(r, c)] = Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
        }
    }
    m
}

/// Matrix whose columns are i.i.d. zero-mean complex Gaussian vectors with
/// covariance `r`, built as `r^{1/2} G` for an i.i.d. standard Gaussian `G`.
pub fn correlated_columns(
    r: &ComplexMatrix,
    cols: usize,
    rng: &mut impl Rng,
) -> Result<ComplexMatrix> {
    let root = sqrt_psd(r)?;
    let g = sample_complex_gaussian(r.rows(), cols, rng);
    Ok(root.matmul(&g))
}

// ─────────────────────────────── Tests ───────────────────────────────
