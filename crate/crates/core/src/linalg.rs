//! Dense complex linear algebra: the matrix newtype plus the Kronecker
//! product, environment partial trace, Hermitian eigensystem and polar
//! decomposition everything else is built on.
//!
//! Composite spaces are always ordered system ⊗ environment with row-major
//! index `i_s * dim_e + i_e`.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Numerical tolerances used by validating constructors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative tolerance for structural checks (Hermiticity, unitarity,
    /// completeness, trace preservation).
    pub relative: f64,
    /// Absolute threshold below which `|Tr W|` counts as zero.
    pub trace: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            relative: 1e-10,
            trace: 1e-12,
        }
    }
}

/// Dense complex matrix. Entries are always finite.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ComplexMatrix{}", self.0)
    }
}

impl ComplexMatrix {
    /// Builds a matrix from row-major data.
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::BadShape {
                rows,
                cols,
                len: data.len(),
            });
        }
        Self::from_matrix(DMatrix::from_row_slice(rows, cols, &data))
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::BadShape {
                rows: r,
                cols: c,
                len: rows.iter().map(Vec::len).sum(),
            });
        }
        Self::new(r, c, rows.concat())
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|row| row.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("matrix"));
        }
        Ok(Self(m))
    }

    /// Wraps a matrix produced by arithmetic on already-validated inputs.
    pub(crate) fn wrap(m: DMatrix<C64>) -> Self {
        Self(m)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    /// `|a⟩⟨b|`, conjugating `b`.
    pub fn outer(a: &[C64], b: &[C64]) -> Self {
        Self(DMatrix::from_fn(a.len(), b.len(), |i, j| {
            a[i] * b[j].conj()
        }))
    }

    pub fn column(v: &[C64]) -> Self {
        Self(DMatrix::from_column_slice(v.len(), 1, v))
    }

    pub fn pauli_x() -> Self {
        Self(DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]))
    }

    pub fn pauli_y() -> Self {
        Self(DMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]))
    }

    pub fn pauli_z() -> Self {
        Self(DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    /// Side length of a square matrix.
    pub fn dim(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows())
        } else {
            Err(Error::NonSquare {
                rows: self.rows(),
                cols: self.cols(),
            })
        }
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.0
    }

    /// Entries in row-major order.
    pub fn to_row_major(&self) -> Vec<C64> {
        self.0.transpose().iter().copied().collect()
    }

    pub fn column_vec(&self, j: usize) -> Vec<C64> {
        self.0.column(j).iter().copied().collect()
    }

    pub fn dagger(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn conj(&self) -> Self {
        Self(self.0.map(|z| z.conj()))
    }

    pub fn scale(&self, c: C64) -> Self {
        Self(&self.0 * c)
    }

    pub fn trace(&self) -> C64 {
        self.0.diagonal().iter().sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let out = &self.0 * DVector::from_column_slice(v);
        out.iter().copied().collect()
    }

    /// `⟨a|M|b⟩`.
    pub fn sandwich(&self, a: &[C64], b: &[C64]) -> C64 {
        let mb = self.apply(b);
        a.iter().zip(&mb).map(|(x, y)| x.conj() * y).sum()
    }

    /// Frobenius distance ‖self − other‖.
    pub fn distance(&self, other: &Self) -> f64 {
        (&self.0 - &other.0)
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Relative anti-Hermitian residual ‖A − A†‖ / max(‖A‖, 1e-300).
    pub fn hermiticity_residual(&self) -> f64 {
        let norm = self.frobenius_norm();
        if norm == 0.0 {
            return 0.0;
        }
        self.distance(&self.dagger()) / norm
    }

    /// ‖U†U − I‖ for square matrices; infinity otherwise.
    pub fn unitarity_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        Self(self.0.adjoint() * &self.0).distance(&Self::identity(self.rows()))
    }

    pub fn require_unitary(&self, what: &'static str, tol: f64) -> Result<()> {
        let residual = self.unitarity_residual();
        if residual > tol {
            return Err(Error::NonUnitary { what, residual });
        }
        Ok(())
    }

    pub fn require_dim(&self, context: &'static str, expected: usize) -> Result<()> {
        let found = self.dim()?;
        if found != expected {
            return Err(Error::DimensionMismatch {
                context,
                expected,
                found,
            });
        }
        Ok(())
    }
}

impl<'a> Mul<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl<'a> Add<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl<'a> Sub<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

/// Kronecker product `a ⊗ b`; block `(i, j)` of the result is `a[i,j]·b`.
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix(a.0.kronecker(&b.0))
}

/// Traces out the environment factor of a `(dim_s·dim_e)`-square matrix:
/// `result[i,j] = Σ_k m[i·dim_e + k, j·dim_e + k]`.
pub fn partial_trace_env(m: &ComplexMatrix, dim_s: usize, dim_e: usize) -> Result<ComplexMatrix> {
    let dim = m.dim()?;
    if dim_s == 0 || dim_e == 0 || dim != dim_s * dim_e {
        return Err(Error::InvalidFactorization { dim, dim_s, dim_e });
    }
    let out = DMatrix::from_fn(dim_s, dim_s, |i, j| {
        (0..dim_e)
            .map(|k| m.0[(i * dim_e + k, j * dim_e + k)])
            .sum()
    });
    Ok(ComplexMatrix(out))
}

/// Spectral decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigensystem {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, in eigenvalue order.
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEigensystem {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.eigenvectors.column_vec(k)
    }

    /// Σ λ_k v_k v_k†.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let v = &self.eigenvectors.0;
        let d = DMatrix::from_diagonal(&DVector::from_iterator(
            self.len(),
            self.eigenvalues.iter().map(|&x| C64::new(x, 0.0)),
        ));
        ComplexMatrix(v * d * v.adjoint())
    }
}

pub fn eig_hermitian(a: &ComplexMatrix) -> Result<HermitianEigensystem> {
    eig_hermitian_with_tolerance(a, Tolerances::default().relative)
}

/// Eigenvalues ascending; each eigenvector is rephased so its
/// largest-magnitude component is real and positive.
pub fn eig_hermitian_with_tolerance(a: &ComplexMatrix, tol: f64) -> Result<HermitianEigensystem> {
    let n = a.dim()?;
    let residual = a.hermiticity_residual();
    if residual > tol {
        return Err(Error::NonHermitian { residual });
    }
    let sym = (&a.0 + a.0.adjoint()) * C64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        let pivot = v
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, z)| {
                if z.norm() > best.1 + 1e-12 {
                    (i, z.norm())
                } else {
                    best
                }
            })
            .0;
        let phase = v[pivot].conj() / v[pivot].norm();
        vectors.set_column(col, &(v * phase));
    }
    Ok(HermitianEigensystem {
        eigenvalues,
        eigenvectors: ComplexMatrix(vectors),
    })
}

/// Factors `x = sigma · u` with `sigma = √(x x†)` positive semidefinite and
/// `u` unitary.
#[derive(Debug, Clone)]
pub struct PolarFactors {
    pub sigma: ComplexMatrix,
    pub u: ComplexMatrix,
}

/// Full singular value decomposition `x = U diag(s) V†` of a square matrix,
/// singular values descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub v: ComplexMatrix,
}

/// Orthonormal basis of the orthogonal complement of the span of `cols`
/// (which must be orthonormal), in a fixed order.
fn complement_basis(cols: &[DVector<C64>], n: usize) -> Vec<DVector<C64>> {
    let mut proj = DMatrix::<C64>::identity(n, n);
    for c in cols {
        proj -= c * c.adjoint();
    }
    let eig = eig_hermitian_with_tolerance(&ComplexMatrix(proj), f64::INFINITY)
        .expect("projector is square");
    (0..n)
        .rev()
        .take(n - cols.len())
        .map(|k| DVector::from_vec(eig.vector(k)))
        .collect()
}

/// One-sided (Hestenes) Jacobi SVD. Column pairs of `x·V` are rotated until
/// mutually orthogonal; left singular vectors of (numerically) zero singular
/// values are completed from the orthogonal complement.
pub fn svd(x: &ComplexMatrix) -> Result<Svd> {
    let n = x.dim()?;
    let mut a = x.0.clone();
    let mut v = DMatrix::<C64>::identity(n, n);
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = a.column(p).norm_squared();
                let beta: f64 = a.column(q).norm_squared();
                let gamma: C64 = a.column(p).dotc(&a.column(q));
                let g = gamma.norm();
                if g == 0.0 || g <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for m in [&mut a, &mut v] {
                    for i in 0..m.nrows() {
                        let ap = m[(i, p)];
                        let aq = m[(i, q)] * phase.conj();
                        m[(i, p)] = ap * c - aq * s;
                        m[(i, q)] = ap * s + aq * c;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..n).map(|k| a.column(k).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let smax = norms[order[0]];
    let rank = order
        .iter()
        .take_while(|&&k| norms[k] > 0.0 && norms[k] > 1e-13 * smax)
        .count();

    let mut ucols: Vec<DVector<C64>> = order[..rank]
        .iter()
        .map(|&k| a.column(k) / C64::new(norms[k], 0.0))
        .collect();
    let fill = complement_basis(&ucols, n);
    ucols.extend(fill);
    let singular_values = order
        .iter()
        .enumerate()
        .map(|(pos, &k)| if pos < rank { norms[k] } else { 0.0 })
        .collect();
    let v_sorted = DMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(Svd {
        u: ComplexMatrix(DMatrix::from_columns(&ucols)),
        singular_values,
        v: ComplexMatrix(v_sorted),
    })
}

/// Left polar decomposition from the SVD `x = U Σ V†`: `sigma = U Σ U†`,
/// `u = U V†` on the support.
///
/// On the kernel of `sigma` the unitary is completed by the unitary polar
/// factor of the overlap between the two complementary subspaces, so that it
/// acts as the identity whenever range and co-range complements coincide.
pub fn polar_decompose(x: &ComplexMatrix) -> Result<PolarFactors> {
    let n = x.dim()?;
    let Svd {
        u: uu,
        singular_values: s,
        v: vv,
    } = svd(x)?;
    let (uu, vv) = (uu.0, vv.0);
    let rank = s.iter().take_while(|&&v| v > 0.0).count();

    let sdiag = DMatrix::from_diagonal(&DVector::from_iterator(
        n,
        s.iter().map(|&v| C64::new(v, 0.0)),
    ));
    let sigma = &uu * sdiag * uu.adjoint();
    let sigma = (&sigma + sigma.adjoint()) * C64::new(0.5, 0.0);

    let mut u = uu.columns(0, rank) * vv.columns(0, rank).adjoint();
    if rank < n {
        let ku = uu.columns(rank, n - rank);
        let kv = vv.columns(rank, n - rank);
        let overlap = ComplexMatrix(ku.adjoint() * kv);
        let small = svd(&overlap)?;
        u += ku * (small.u.0 * small.v.0.adjoint()) * kv.adjoint();
    }
    Ok(PolarFactors {
        sigma: ComplexMatrix(sigma),
        u: ComplexMatrix(u),
    })
}
