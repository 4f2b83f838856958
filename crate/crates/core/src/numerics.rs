//! Dense complex linear-algebra kernels.
//!
//! Everything here works on small dense matrices (a few hundred rows at
//! most) and carries an explicit accuracy contract, collected in
//! [`Tolerances`]. The eigensolver is a cyclic complex Jacobi method: slow
//! for large `n` but backward stable, simple, and accurate for the tiny
//! interference covariances that the alignment solvers produce.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Contract constants shared by the kernels and their tests.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances;

impl Tolerances {
    /// Allowed `‖A − A†‖_max / (1 + ‖A‖_max)` for Hermitian inputs.
    pub const HERMITIAN: f64 = 1e-12;
    /// Eigenpair residual `‖Av − λv‖₂ / max(1, ‖A‖₂)`.
    pub const EIGEN_RESIDUAL: f64 = 1e-9;
    /// Pairwise orthogonality of returned eigenvectors.
    pub const EIGEN_ORTHOGONALITY: f64 = 1e-10;
    /// `‖GᴴG − I‖_max` after orthonormalization.
    pub const ORTHONORMAL: f64 = 1e-12;
    /// Relative column norm below which a column counts as dependent.
    pub const RANK: f64 = 1e-12;
    /// Relative residual `‖Bx − y‖ / ‖y‖` of positive-definite solves.
    pub const SOLVE_RESIDUAL: f64 = 1e-10;
    /// Relative accuracy of log-determinants for condition numbers up to 1e8.
    pub const LOGDET_RELATIVE: f64 = 1e-9;
}

const MAX_SWEEPS: usize = 100;

/// A square complex matrix known to be Hermitian.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMat);

impl HermitianMatrix {
    /// Checks the Hermitian tolerance and stores the symmetrized matrix
    /// `(A + A†)/2`.
    pub fn new(m: CMat) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::ShapeMismatch(format!(
                "Hermitian matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let deviation = hermitian_deviation(&m);
        let scale = 1.0 + max_abs(&m);
        if !(deviation <= Tolerances::HERMITIAN * scale) {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self::symmetrize(m))
    }

    pub fn identity(n: usize) -> Self {
        Self(CMat::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        Self(CMat::zeros(n, n))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = CMat::zeros(n, n);
        for (i, &x) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(x, 0.0);
        }
        Self(m)
    }

    fn symmetrize(m: CMat) -> Self {
        let adj = m.adjoint();
        let mut s = (m + adj) * Complex64::new(0.5, 0.0);
        for i in 0..s.nrows() {
            s[(i, i)].im = 0.0;
        }
        Self(s)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_matrix(self) -> CMat {
        self.0
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.0[(i, i)].re).sum()
    }

    /// `self + c·I`.
    pub fn shifted(&self, c: f64) -> Self {
        let mut m = self.0.clone();
        for i in 0..m.nrows() {
            m[(i, i)].re += c;
        }
        Self(m)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(&self.0 * Complex64::new(c, 0.0))
    }
}

/// Eigenvalues in ascending order with the matching unit-norm eigenvectors
/// stored as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

fn hermitian_deviation(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

pub(crate) fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Full Hermitian eigendecomposition, eigenvalues ascending.
pub fn eigh(a: &HermitianMatrix) -> EigenPair {
    let n = a.dim();
    let mut work = a.0.clone();
    let mut vecs = CMat::identity(n, n);
    let norm = work.norm();

    if n > 1 && norm > 0.0 {
        let skip = f64::EPSILON * 1e-2 * norm;
        for _ in 0..MAX_SWEEPS {
            let off = off_diagonal_norm(&work);
            if off <= 4.0 * f64::EPSILON * norm {
                break;
            }
            let mut rotated = false;
            for p in 0..n - 1 {
                for q in p + 1..n {
                    if jacobi_rotate(&mut work, &mut vecs, p, q, skip) {
                        rotated = true;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| work[(i, i)].re.total_cmp(&work[(j, j)].re));

    let values = order.iter().map(|&i| work[(i, i)].re).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = vecs.column(src).into_owned();
        fix_phase(&mut col);
        vectors.set_column(dst, &col);
    }
    EigenPair { values, vectors }
}

fn off_diagonal_norm(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += m[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// One two-sided rotation `A ← W†AW`, `V ← VW` annihilating `A[p,q]`.
fn jacobi_rotate(a: &mut CMat, v: &mut CMat, p: usize, q: usize, skip: f64) -> bool {
    let z = a[(p, q)];
    let r = z.norm();
    if r <= skip {
        return false;
    }
    let e = z.conj() / r;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let tau = (aqq - app) / (2.0 * r);
    let t = if tau >= 0.0 { 1.0 / (tau + (1.0 + tau * tau).sqrt()) } else { -1.0 / (-tau + (1.0 + tau * tau).sqrt()) };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let n = a.nrows();

    // W restricted to (p, q): [[c, s], [-s·e, c·e]]
    let w_qp = -e * s;
    let w_qq = e * c;
    for i in 0..n {
        let ap = a[(i, p)];
        let aq = a[(i, q)];
        a[(i, p)] = ap * c + aq * w_qp;
        a[(i, q)] = ap * s + aq * w_qq;
    }
    for j in 0..n {
        let ap = a[(p, j)];
        let aq = a[(q, j)];
        a[(p, j)] = ap * c + aq * w_qp.conj();
        a[(q, j)] = ap * s + aq * w_qq.conj();
    }
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)].im = 0.0;
    a[(q, q)].im = 0.0;

    for i in 0..v.nrows() {
        let vp = v[(i, p)];
        let vq = v[(i, q)];
        v[(i, p)] = vp * c + vq * w_qp;
        v[(i, q)] = vp * s + vq * w_qq;
    }
    true
}

/// Rotates `x` so its largest-magnitude entry (first on ties) is real and
/// positive.
pub fn fix_phase(x: &mut CVec) {
    let mut best = 0;
    let mut best_mag = -1.0;
    for (i, z) in x.iter().enumerate() {
        let m = z.norm();
        if m > best_mag {
            best_mag = m;
            best = i;
        }
    }
    if best_mag > 0.0 {
        let rot = x[best].conj() / best_mag;
        for z in x.iter_mut() {
            *z *= rot;
        }
        x[best].im = 0.0;
    }
}

/// The `d` algebraically smallest eigenpairs of `a`.
pub fn eigh_smallest(a: &HermitianMatrix, d: usize) -> Result<EigenPair> {
    let n = a.dim();
    if d == 0 || d > n {
        return Err(Error::DimensionOutOfRange { requested: d, dim: n });
    }
    let full = eigh(a);
    Ok(EigenPair { values: full.values[..d].to_vec(), vectors: full.vectors.columns(0, d).into_owned() })
}

/// The `d` algebraically largest eigenpairs of `a`, in descending order.
pub fn eigh_largest(a: &HermitianMatrix, d: usize) -> Result<EigenPair> {
    let n = a.dim();
    if d == 0 || d > n {
        return Err(Error::DimensionOutOfRange { requested: d, dim: n });
    }
    let full = eigh(a);
    let mut vectors = CMat::zeros(n, d);
    let mut values = Vec::with_capacity(d);
    for i in 0..d {
        let src = n - 1 - i;
        values.push(full.values[src]);
        vectors.set_column(i, &full.vectors.column(src));
    }
    Ok(EigenPair { values, vectors })
}

/// Orthonormal basis for the column space of `g`, column order preserved
/// (modified Gram-Schmidt with one reorthogonalization pass).
pub fn orthonormalize(g: &CMat) -> Result<CMat> {
    let cols = g.ncols();
    let largest = (0..cols).map(|j| g.column(j).norm()).fold(0.0, f64::max);
    let mut out = CMat::zeros(g.nrows(), cols);
    let mut deficient = 0;
    for j in 0..cols {
        let mut v = g.column(j).into_owned();
        for _ in 0..2 {
            for i in 0..j {
                let qi = out.column(i);
                let proj = qi.dotc(&v);
                v -= qi * proj;
            }
        }
        let nrm = v.norm();
        if largest == 0.0 || nrm <= Tolerances::RANK * largest {
            deficient += 1;
            continue;
        }
        out.set_column(j, &(v / Complex64::new(nrm, 0.0)));
    }
    if deficient > 0 {
        return Err(Error::RankDeficient { deficient, columns: cols });
    }
    Ok(out)
}

/// Lower Cholesky factor `L` with `A = LL†` and a real positive diagonal.
pub fn cholesky(a: &HermitianMatrix) -> Result<CMat> {
    let n = a.dim();
    let m = &a.0;
    let mut l = CMat::zeros(n, n);
    for j in 0..n {
        let mut diag = m[(j, j)].re;
        for k in 0..j {
            diag -= l[(j, k)].norm_sqr();
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return Err(Error::NotPositiveDefinite);
        }
        let ljj = diag.sqrt();
        l[(j, j)] = Complex64::new(ljj, 0.0);
        for i in j + 1..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

fn cholesky_solve(l: &CMat, y: &CVec) -> CVec {
    let n = l.nrows();
    let mut z = y.clone();
    for i in 0..n {
        let mut s = z[i];
        for k in 0..i {
            s -= l[(i, k)] * z[k];
        }
        z[i] = s / l[(i, i)];
    }
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in i + 1..n {
            s -= l[(k, i)].conj() * z[k];
        }
        z[i] = s / l[(i, i)];
    }
    z
}

/// Solves `Bx = y` for positive-definite `B`.
pub fn solve_pd(b: &HermitianMatrix, y: &CVec) -> Result<CVec> {
    if y.len() != b.dim() {
        return Err(Error::ShapeMismatch(format!(
            "right-hand side has length {}, matrix is {}x{}",
            y.len(),
            b.dim(),
            b.dim()
        )));
    }
    let l = cholesky(b)?;
    let mut x = cholesky_solve(&l, y);
    // one step of iterative refinement
    let r = y - b.matrix() * &x;
    x += cholesky_solve(&l, &r);
    Ok(x)
}

/// `log₂ det(A)` for positive-definite `A`.
pub fn logdet_pd(a: &HermitianMatrix) -> Result<f64> {
    let l = cholesky(a)?;
    Ok((0..a.dim()).map(|i| 2.0 * l[(i, i)].re.log2()).sum())
}

/// Principal inverse square root `A^{-1/2}` of a positive-definite matrix.
pub fn inv_sqrt_pd(a: &HermitianMatrix) -> Result<HermitianMatrix> {
    cholesky(a)?;
    let eig = eigh(a);
    if eig.values.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::NotPositiveDefinite);
    }
    let n = a.dim();
    let mut scaled = eig.vectors.clone();
    for (j, &v) in eig.values.iter().enumerate() {
        let f = Complex64::new(1.0 / v.sqrt(), 0.0);
        for i in 0..n {
            scaled[(i, j)] *= f;
        }
    }
    HermitianMatrix::new(&scaled * eig.vectors.adjoint())
}

/// Largest-to-smallest singular value ratio of a full-column-rank matrix,
/// via the eigenvalues of `GᴴG`.
pub fn condition_number(g: &CMat) -> f64 {
    let gram = HermitianMatrix::symmetrize(g.adjoint() * g);
    let vals = eigh(&gram).values;
    let lo = vals.first().copied().unwrap_or(0.0);
    let hi = vals.last().copied().unwrap_or(0.0);
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        (hi / lo).sqrt()
    }
}

/// Smallest singular value of `g` (rows ≥ columns), via `GᴴG`.
pub fn min_singular_value(g: &CMat) -> f64 {
    if g.ncols() == 0 {
        return 0.0;
    }
    let gram = HermitianMatrix::symmetrize(g.adjoint() * g);
    eigh(&gram).values[0].max(0.0).sqrt()
}

/// `G·G†` as a Hermitian matrix.
pub fn gram_outer(g: &CMat) -> HermitianMatrix {
    HermitianMatrix::symmetrize(g * g.adjoint())
}
