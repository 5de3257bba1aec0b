//! Random test instances: Ginibre matrices, Haar unitaries, kets, channels
//! and dilations. Every function takes the RNG explicitly so seeded runs are
//! reproducible.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::channels::EnvironmentDilation;
use crate::linalg::{ComplexMatrix, C64};
use crate::twostate::{Ket, WOperator};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn complex_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::wrap(DMatrix::from_fn(rows, cols, |_, _| gaussian(rng)))
}

pub fn hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let g = complex_matrix(n, n, rng);
    (&g + &g.dagger()).scale(C64::new(0.5, 0.0))
}

/// Haar-distributed unitary (QR of a Ginibre matrix with the phases of
/// `diag(R)` removed).
pub fn unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let g = complex_matrix(n, n, rng).into_matrix();
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    ComplexMatrix::wrap(q)
}

pub fn ket<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Ket {
    let v: Vec<C64> = (0..n).map(|_| gaussian(rng)).collect();
    Ket::normalize(v).expect("Gaussian vector is nonzero")
}

/// Columns of a Haar unitary.
pub fn orthonormal_basis<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Ket> {
    let u = unitary(n, rng);
    (0..n)
        .map(|j| Ket::new(u.column_vec(j)).expect("finite column"))
        .collect()
}

/// Rank-one `|psi⟩⟨phi|` with random normalized states.
pub fn w_operator<R: Rng + ?Sized>(n: usize, rng: &mut R) -> WOperator {
    let psi = ket(n, rng);
    let phi = ket(n, rng);
    WOperator::from_states(&psi, &phi).expect("matching dimensions")
}

/// `count` trace-preserving Kraus operators on a `dim`-dimensional system,
/// cut from the first `dim` columns of a Haar unitary on `dim·count`.
pub fn kraus_operators<R: Rng + ?Sized>(
    dim: usize,
    count: usize,
    rng: &mut R,
) -> Vec<ComplexMatrix> {
    let u = unitary(dim * count, rng);
    (0..count)
        .map(|m| ComplexMatrix::wrap(DMatrix::from_fn(dim, dim, |i, j| u.get(m * dim + i, j))))
        .collect()
}

/// Random dilation: Haar `U`, `V` on system ⊗ environment, random
/// environment boundary states and a random orthonormal environment basis.
pub fn dilation<R: Rng + ?Sized>(dim_s: usize, dim_e: usize, rng: &mut R) -> EnvironmentDilation {
    let n = dim_s * dim_e;
    EnvironmentDilation::new(
        dim_s,
        dim_e,
        unitary(n, rng),
        unitary(n, rng),
        ket(dim_e, rng),
        ket(dim_e, rng),
        orthonormal_basis(dim_e, rng),
    )
    .expect("random dilation satisfies its invariants")
}
