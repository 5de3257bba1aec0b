//! Pre/post-selected states, W operators and weak values.
//!
//! A W operator `W = U_pre|i⟩⟨f|U_post` carries a whole pre/post-selected
//! history. The weak value of an observable is `Tr(WA)/Tr(W)`, and the
//! normalized `WW†` and `W†W` are the forward- and backward-evolving density
//! operators.

use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, ComplexMatrix, HermitianEigensystem, Tolerances, C64, ZERO};

/// State vector. Pre- and post-selected states are built with
/// [`Ket::normalized`]; intermediate vectors may use [`Ket::new`].
#[derive(Debug, Clone, PartialEq)]
pub struct Ket {
    amplitudes: Vec<C64>,
}

impl Ket {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::BadShape {
                rows: 0,
                cols: 1,
                len: 0,
            });
        }
        if amplitudes
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite("ket"));
        }
        Ok(Self { amplitudes })
    }

    /// Requires unit norm within 1e-12.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let ket = Self::new(amplitudes)?;
        let norm = ket.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized { what: "ket", norm });
        }
        Ok(ket)
    }

    /// Rescales arbitrary amplitudes to unit norm.
    pub fn normalize(amplitudes: Vec<C64>) -> Result<Self> {
        let ket = Self::new(amplitudes)?;
        let norm = ket.norm();
        if norm == 0.0 {
            return Err(Error::ZeroOperator);
        }
        Ok(Self {
            amplitudes: ket.amplitudes.iter().map(|z| z / norm).collect(),
        })
    }

    /// Computational basis vector `|index⟩`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = C64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= 1e-12
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Ket) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scale(&self, c: C64) -> Ket {
        Ket {
            amplitudes: self.amplitudes.iter().map(|z| z * c).collect(),
        }
    }

    pub fn evolve(&self, u: &ComplexMatrix) -> Ket {
        Ket {
            amplitudes: u.apply(&self.amplitudes),
        }
    }

    pub fn bra(&self) -> Bra {
        Bra { ket: self.clone() }
    }

    /// `|self⟩⟨self|`.
    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.amplitudes, &self.amplitudes)
    }
}

/// Dual vector `⟨f|`, stored as the ket it is the adjoint of.
#[derive(Debug, Clone, PartialEq)]
pub struct Bra {
    ket: Ket,
}

impl Bra {
    pub fn ket(&self) -> &Ket {
        &self.ket
    }

    /// `⟨self|k⟩`.
    pub fn apply(&self, k: &Ket) -> C64 {
        self.ket.inner(k)
    }

    /// `⟨self|M`, returned as the ket `M†|self⟩`.
    pub fn evolve(&self, m: &ComplexMatrix) -> Bra {
        self.ket.evolve(&m.dagger()).bra()
    }
}

/// Where a W operator came from. Only reporting code reads this.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Provenance {
    pub pre: Option<Ket>,
    pub post: Option<Ket>,
    pub history: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WOperator {
    matrix: ComplexMatrix,
    provenance: Option<Provenance>,
}

impl WOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        matrix.dim()?;
        Ok(Self {
            matrix,
            provenance: None,
        })
    }

    /// `|psi⟩⟨phi|`.
    pub fn from_states(psi: &Ket, phi: &Ket) -> Result<Self> {
        if psi.dim() != phi.dim() {
            return Err(Error::DimensionMismatch {
                context: "W operator states",
                expected: psi.dim(),
                found: phi.dim(),
            });
        }
        Ok(Self {
            matrix: ComplexMatrix::outer(psi.amplitudes(), phi.amplitudes()),
            provenance: Some(Provenance {
                pre: Some(psi.clone()),
                post: Some(phi.clone()),
                history: Vec::new(),
            }),
        })
    }

    pub fn with_history(mut self, entry: impl Into<String>) -> Self {
        self.provenance
            .get_or_insert_with(Provenance::default)
            .history
            .push(entry.into());
        self
    }

    pub(crate) fn with_provenance(mut self, provenance: Option<Provenance>) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn scale(&self, c: C64) -> WOperator {
        WOperator {
            matrix: self.matrix.scale(c),
            provenance: self.provenance.clone(),
        }
    }
}

/// `W(t) = u_pre |i⟩⟨f| u_post`, the history between the boundary states
/// evolved to the intermediate time.
pub fn w_operator_from_boundary(
    i: &Ket,
    f: &Ket,
    u_pre: &ComplexMatrix,
    u_post: &ComplexMatrix,
) -> Result<WOperator> {
    let d = i.dim();
    for (ket, what) in [(i, "pre-selected state"), (f, "post-selected state")] {
        if !ket.is_normalized() {
            return Err(Error::NotNormalized {
                what,
                norm: ket.norm(),
            });
        }
    }
    if f.dim() != d {
        return Err(Error::DimensionMismatch {
            context: "post-selected state",
            expected: d,
            found: f.dim(),
        });
    }
    u_pre.require_dim("forward evolution", d)?;
    u_post.require_dim("backward evolution", d)?;
    let tol = Tolerances::default().relative;
    u_pre.require_unitary("forward evolution", tol)?;
    u_post.require_unitary("backward evolution", tol)?;

    let psi = i.evolve(u_pre);
    let phi = f.bra().evolve(u_post).ket().clone();
    let mut w = WOperator::from_states(&psi, &phi)?;
    w.provenance = Some(Provenance {
        pre: Some(i.clone()),
        post: Some(f.clone()),
        history: Vec::new(),
    });
    Ok(w)
}

/// Positive semidefinite, unit-trace Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
}

impl DensityOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, Tolerances::default().relative)
    }

    pub fn with_tolerance(matrix: ComplexMatrix, tol: f64) -> Result<Self> {
        matrix.dim()?;
        if matrix.hermiticity_residual() > tol {
            return Err(Error::InvalidDensity("not Hermitian"));
        }
        if (matrix.trace() - C64::new(1.0, 0.0)).norm() > tol {
            return Err(Error::InvalidDensity("trace differs from 1"));
        }
        let eig = eig_hermitian(&matrix)?;
        if eig.eigenvalues[0] < -tol {
            return Err(Error::InvalidDensity("negative eigenvalue"));
        }
        Ok(Self { matrix })
    }

    pub fn pure(psi: &Ket) -> Result<Self> {
        Self::new(psi.projector())
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }
}

/// Hermitian matrix with its eigensystem computed once at construction.
#[derive(Debug, Clone)]
pub struct HermitianObservable {
    matrix: ComplexMatrix,
    eigensystem: HermitianEigensystem,
}

impl HermitianObservable {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let eigensystem = eig_hermitian(&matrix)?;
        Ok(Self {
            matrix,
            eigensystem,
        })
    }

    pub fn projector(k: &Ket) -> Result<Self> {
        let k = Ket::normalize(k.amplitudes().to_vec())?;
        Self::new(k.projector())
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn eigensystem(&self) -> &HermitianEigensystem {
        &self.eigensystem
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// `⟨psi|A|psi⟩`.
    pub fn expectation(&self, psi: &Ket) -> f64 {
        self.matrix.sandwich(psi.amplitudes(), psi.amplitudes()).re
    }
}

/// A weak value together with the conditioning of its denominator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakValue {
    pub value: C64,
    /// `|Tr W| / ‖W‖_F`. Small values flag the anomalous regime where the
    /// weak value is dominated by a nearly vanishing denominator.
    pub conditioning: f64,
}

impl WeakValue {
    pub fn is_ill_conditioned(&self, threshold: f64) -> bool {
        self.conditioning < threshold
    }
}

pub fn weak_value(w: &WOperator, a: &HermitianObservable) -> Result<WeakValue> {
    weak_value_with_tolerance(w, a, Tolerances::default().trace)
}

/// `Tr(WA) / Tr(W)`. Errors with [`Error::OrthogonalPostselection`] when
/// `|Tr W|` is at or below `trace_tol`.
pub fn weak_value_with_tolerance(
    w: &WOperator,
    a: &HermitianObservable,
    trace_tol: f64,
) -> Result<WeakValue> {
    if a.dim() != w.dim() {
        return Err(Error::DimensionMismatch {
            context: "observable",
            expected: w.dim(),
            found: a.dim(),
        });
    }
    let tr = w.trace();
    if tr.norm() <= trace_tol {
        return Err(Error::OrthogonalPostselection { trace: tr.norm() });
    }
    let num = (w.matrix() * a.matrix()).trace();
    Ok(WeakValue {
        value: num / tr,
        conditioning: tr.norm() / w.matrix().frobenius_norm(),
    })
}

fn normalized_density(m: ComplexMatrix) -> Result<DensityOperator> {
    let tr = m.trace().re;
    if tr <= 0.0 {
        return Err(Error::ZeroOperator);
    }
    let m = m.scale(C64::new(1.0 / tr, 0.0));
    // exact Hermitian part; WW† is Hermitian up to rounding
    let m = (&m + &m.dagger()).scale(C64::new(0.5, 0.0));
    DensityOperator::new(m)
}

/// `WW† / Tr(WW†)`.
pub fn density_forward(w: &WOperator) -> Result<DensityOperator> {
    normalized_density(w.matrix() * &w.matrix().dagger())
}

/// `W†W / Tr(W†W)`.
pub fn density_backward(w: &WOperator) -> Result<DensityOperator> {
    normalized_density(&w.matrix().dagger() * w.matrix())
}

/// Linear combination `Σ c_k W_k`. Provenance is replaced by a single
/// history entry recording the number of terms.
pub fn superpose(terms: &[(C64, WOperator)]) -> Result<WOperator> {
    let (_, first) = terms.first().ok_or(Error::EmptySuperposition)?;
    let d = first.dim();
    let mut acc = ComplexMatrix::zeros(d, d);
    for (c, w) in terms {
        if w.dim() != d {
            return Err(Error::DimensionMismatch {
                context: "superposition term",
                expected: d,
                found: w.dim(),
            });
        }
        acc = &acc + &w.matrix().scale(*c);
    }
    let w = WOperator::new(acc)?;
    if terms.len() == 1 {
        return Ok(w.with_provenance(first.provenance.clone()));
    }
    Ok(w.with_history(format!("superposition of {} terms", terms.len())))
}

/// One post-selection outcome in [`expectation_decomposition`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecompositionTerm {
    /// `|⟨f|i⟩|²`.
    pub probability: f64,
    /// `⟨f|A|i⟩/⟨f|i⟩`, or `None` when the outcome has (numerically) zero
    /// probability.
    pub weak_value: Option<C64>,
}

impl DecompositionTerm {
    pub fn contribution(&self) -> C64 {
        self.weak_value.map_or(ZERO, |v| v * self.probability)
    }
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub terms: Vec<DecompositionTerm>,
}

impl Decomposition {
    /// `Σ_f p_f ⟨A⟩_w`, equal to `⟨i|A|i⟩`.
    pub fn total(&self) -> C64 {
        self.terms.iter().map(DecompositionTerm::contribution).sum()
    }
}

/// Checks that `basis` is orthonormal and spans the space: `Σ|f⟩⟨f| = I`
/// and `⟨f_j|f_k⟩ = δ_jk`.
pub fn check_orthonormal_basis(basis: &[Ket], dim: usize, tol: f64) -> Result<()> {
    if let Some(bad) = basis.iter().find(|k| k.dim() != dim) {
        return Err(Error::DimensionMismatch {
            context: "basis vector",
            expected: dim,
            found: bad.dim(),
        });
    }
    let mut completeness = ComplexMatrix::zeros(dim, dim);
    for k in basis {
        completeness = &completeness + &k.projector();
    }
    let mut residual = completeness.distance(&ComplexMatrix::identity(dim));
    for (j, a) in basis.iter().enumerate() {
        for (k, b) in basis.iter().enumerate() {
            let delta = if j == k { 1.0 } else { 0.0 };
            residual = residual.max((a.inner(b) - delta).norm());
        }
    }
    if residual > tol || basis.len() != dim {
        return Err(Error::IncompleteBasis { residual });
    }
    Ok(())
}

/// Splits `⟨i|A|i⟩` over a complete post-selection basis into outcome
/// probabilities and conditioned weak values.
pub fn expectation_decomposition(
    i: &Ket,
    a: &HermitianObservable,
    post_basis: &[Ket],
) -> Result<Decomposition> {
    let tol = Tolerances::default();
    if a.dim() != i.dim() {
        return Err(Error::DimensionMismatch {
            context: "observable",
            expected: i.dim(),
            found: a.dim(),
        });
    }
    check_orthonormal_basis(post_basis, i.dim(), tol.relative)?;
    let a_i = i.evolve(a.matrix());
    let terms = post_basis
        .iter()
        .map(|f| {
            let overlap = f.inner(i);
            let probability = overlap.norm_sqr();
            let weak_value = (probability > tol.trace).then(|| f.inner(&a_i) / overlap);
            DecompositionTerm {
                probability,
                weak_value,
            }
        })
        .collect();
    Ok(Decomposition { terms })
}
