//! Quantum operations on density operators and W operators.
//!
//! A [`WChannel`] is a list of Kraus pairs `(E_m, F_m)` acting as
//! `E(W) = Σ E_m W F_m†`, with `Σ E_m†E_m = Σ F_m†F_m = I`. Channels can be
//! written down directly, read off an environment dilation
//! (`E_m = ⟨e_m|U|e_i⟩`, `F_m† = ⟨e_f|V|e_m⟩`), or reconstructed from an
//! abstract trace-preserving map through its Choi matrix and the polar
//! decomposition of `X = (E ⊗ I)(|α⟩⟨β|)`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{
    eig_hermitian, partial_trace_env, polar_decompose, tensor_product, ComplexMatrix, Tolerances,
    C64, ZERO,
};
use crate::twostate::{check_orthonormal_basis, DensityOperator, Ket, WOperator};

#[derive(Debug, Clone, PartialEq)]
pub struct KrausPair {
    pub e: ComplexMatrix,
    pub f: ComplexMatrix,
}

impl KrausPair {
    pub fn new(e: ComplexMatrix, f: ComplexMatrix) -> Result<Self> {
        let d = e.dim()?;
        f.require_dim("Kraus pair F", d)?;
        Ok(Self { e, f })
    }

    /// Pair with `E = F = k`, the density-operator Kraus operator.
    pub fn symmetric(k: ComplexMatrix) -> Result<Self> {
        Self::new(k.clone(), k)
    }

    pub fn dim(&self) -> usize {
        self.e.rows()
    }
}

/// Trace-preserving channel on W operators.
#[derive(Debug, Clone, PartialEq)]
pub struct WChannel {
    pairs: Vec<KrausPair>,
    label: String,
}

fn completeness_residual<'a>(ops: impl Iterator<Item = &'a ComplexMatrix>, d: usize) -> f64 {
    let mut acc = ComplexMatrix::zeros(d, d);
    for k in ops {
        acc = &acc + &(&k.dagger() * k);
    }
    acc.distance(&ComplexMatrix::identity(d))
}

impl WChannel {
    pub fn new(pairs: Vec<KrausPair>) -> Result<Self> {
        Self::with_tolerance(pairs, Tolerances::default().relative)
    }

    /// Validates `Σ E†E = I` and `Σ F†F = I` within `tol`.
    pub fn with_tolerance(pairs: Vec<KrausPair>, tol: f64) -> Result<Self> {
        let d = pairs.first().ok_or(Error::EmptyChannel)?.dim();
        for p in &pairs {
            p.e.require_dim("Kraus pair E", d)?;
            p.f.require_dim("Kraus pair F", d)?;
        }
        let residual = completeness_residual(pairs.iter().map(|p| &p.e), d);
        if residual > tol {
            return Err(Error::NotTracePreserving {
                which: "sum of E_m^dagger E_m",
                residual,
            });
        }
        let residual = completeness_residual(pairs.iter().map(|p| &p.f), d);
        if residual > tol {
            return Err(Error::NotTracePreserving {
                which: "sum of F_m^dagger F_m",
                residual,
            });
        }
        Ok(Self {
            pairs,
            label: "kraus".to_owned(),
        })
    }

    pub fn identity(d: usize) -> Self {
        let id = ComplexMatrix::identity(d);
        Self {
            pairs: vec![KrausPair {
                e: id.clone(),
                f: id,
            }],
            label: "identity".to_owned(),
        }
    }

    /// Channel with `E_m = F_m = K_m`, i.e. the linear extension of
    /// `ρ ↦ Σ K_m ρ K_m†` to arbitrary operators.
    pub fn from_density_kraus(ops: &[ComplexMatrix]) -> Result<Self> {
        let pairs = ops
            .iter()
            .cloned()
            .map(KrausPair::symmetric)
            .collect::<Result<Vec<_>>>()?;
        Self::new(pairs)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn pairs(&self) -> &[KrausPair] {
        &self.pairs
    }

    pub fn dim(&self) -> usize {
        self.pairs[0].dim()
    }

    /// `Σ F_m† E_m`; for dilation-derived channels this is the S-matrix
    /// element `⟨e_f|VU|e_i⟩`.
    pub fn history_operator(&self) -> ComplexMatrix {
        let d = self.dim();
        self.pairs
            .iter()
            .fold(ComplexMatrix::zeros(d, d), |acc, p| {
                &acc + &(&p.f.dagger() * &p.e)
            })
    }

    fn require_dim(&self, context: &'static str, found: usize) -> Result<()> {
        if found != self.dim() {
            return Err(Error::DimensionMismatch {
                context,
                expected: self.dim(),
                found,
            });
        }
        Ok(())
    }
}

/// `Σ E_m ρ E_m†`.
pub fn apply_to_density(ch: &WChannel, rho: &DensityOperator) -> Result<DensityOperator> {
    ch.require_dim("density operator", rho.dim())?;
    let d = ch.dim();
    let out = ch.pairs.iter().fold(ComplexMatrix::zeros(d, d), |acc, p| {
        &acc + &(&(&p.e * rho.matrix()) * &p.e.dagger())
    });
    let out = (&out + &out.dagger()).scale(C64::new(0.5, 0.0));
    DensityOperator::new(out)
}

/// `Σ E_m W F_m†`.
pub fn apply_to_w(ch: &WChannel, w: &WOperator) -> Result<WOperator> {
    ch.require_dim("W operator", w.dim())?;
    let d = ch.dim();
    let out = ch.pairs.iter().fold(ComplexMatrix::zeros(d, d), |acc, p| {
        &acc + &(&(&p.e * w.matrix()) * &p.f.dagger())
    });
    let history = w.provenance().cloned();
    Ok(WOperator::new(out)?
        .with_provenance(history)
        .with_history(ch.label.clone()))
}

/// System ⊗ environment unitaries `U` (forward) and `V` (backward) with the
/// environment boundary states and an orthonormal environment basis.
#[derive(Debug, Clone)]
pub struct EnvironmentDilation {
    dim_s: usize,
    dim_e: usize,
    u_full: ComplexMatrix,
    v_full: ComplexMatrix,
    e_i: Ket,
    e_f: Ket,
    env_basis: Vec<Ket>,
}

impl EnvironmentDilation {
    pub fn new(
        dim_s: usize,
        dim_e: usize,
        u_full: ComplexMatrix,
        v_full: ComplexMatrix,
        e_i: Ket,
        e_f: Ket,
        env_basis: Vec<Ket>,
    ) -> Result<Self> {
        let tol = Tolerances::default().relative;
        let n = dim_s * dim_e;
        u_full.require_dim("dilation U", n)?;
        v_full.require_dim("dilation V", n)?;
        u_full.require_unitary("dilation U", tol)?;
        v_full.require_unitary("dilation V", tol)?;
        for (k, what) in [
            (&e_i, "initial environment state"),
            (&e_f, "final environment state"),
        ] {
            if k.dim() != dim_e {
                return Err(Error::DimensionMismatch {
                    context: what,
                    expected: dim_e,
                    found: k.dim(),
                });
            }
            if !k.is_normalized() {
                return Err(Error::NotNormalized {
                    what,
                    norm: k.norm(),
                });
            }
        }
        check_orthonormal_basis(&env_basis, dim_e, tol)?;
        Ok(Self {
            dim_s,
            dim_e,
            u_full,
            v_full,
            e_i,
            e_f,
            env_basis,
        })
    }

    /// Same unitaries and basis with different environment boundary states.
    pub fn with_boundary(&self, e_i: Ket, e_f: Ket) -> Result<Self> {
        Self::new(
            self.dim_s,
            self.dim_e,
            self.u_full.clone(),
            self.v_full.clone(),
            e_i,
            e_f,
            self.env_basis.clone(),
        )
    }

    pub fn dim_s(&self) -> usize {
        self.dim_s
    }

    pub fn dim_e(&self) -> usize {
        self.dim_e
    }

    pub fn u_full(&self) -> &ComplexMatrix {
        &self.u_full
    }

    pub fn v_full(&self) -> &ComplexMatrix {
        &self.v_full
    }

    pub fn e_i(&self) -> &Ket {
        &self.e_i
    }

    pub fn e_f(&self) -> &Ket {
        &self.e_f
    }

    pub fn env_basis(&self) -> &[Ket] {
        &self.env_basis
    }

    /// `⟨a|_e M |b⟩_e` as a system operator.
    fn env_sandwich(&self, m: &ComplexMatrix, a: &Ket, b: &Ket) -> ComplexMatrix {
        let de = self.dim_e;
        let (a, b) = (a.amplitudes(), b.amplitudes());
        ComplexMatrix::wrap(DMatrix::from_fn(self.dim_s, self.dim_s, |i, j| {
            let mut acc = ZERO;
            for (x, ax) in a.iter().enumerate() {
                for (y, by) in b.iter().enumerate() {
                    acc += ax.conj() * m.get(i * de + x, j * de + y) * by;
                }
            }
            acc
        }))
    }
}

/// One pair per environment basis vector, in basis order:
/// `E_m = ⟨e_m|U|e_i⟩`, `F_m = (⟨e_f|V|e_m⟩)†`.
pub fn kraus_from_dilation(d: &EnvironmentDilation) -> Result<WChannel> {
    let pairs = d
        .env_basis
        .iter()
        .map(|em| {
            let e = d.env_sandwich(&d.u_full, em, &d.e_i);
            let f_dag = d.env_sandwich(&d.v_full, &d.e_f, em);
            KrausPair::new(e, f_dag.dagger())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WChannel::new(pairs)?.with_label("dilation"))
}

/// `S_fi = ⟨e_f|VU|e_i⟩`.
pub fn s_matrix_element(d: &EnvironmentDilation) -> ComplexMatrix {
    d.env_sandwich(&(&d.v_full * &d.u_full), &d.e_f, &d.e_i)
}

/// `Tr_env[U (W ⊗ |e_i⟩⟨e_f|) V]`.
pub fn apply_via_partial_trace(d: &EnvironmentDilation, w: &WOperator) -> Result<WOperator> {
    if w.dim() != d.dim_s {
        return Err(Error::DimensionMismatch {
            context: "W operator",
            expected: d.dim_s,
            found: w.dim(),
        });
    }
    let env_w = ComplexMatrix::outer(d.e_i.amplitudes(), d.e_f.amplitudes());
    let joint = &(&d.u_full * &tensor_product(w.matrix(), &env_w)) * &d.v_full;
    let reduced = partial_trace_env(&joint, d.dim_s, d.dim_e)?;
    Ok(WOperator::new(reduced)?
        .with_provenance(w.provenance().cloned())
        .with_history("dilation (partial trace)"))
}

/// Choi-type objects of a trace-preserving map, ready for Kraus-pair
/// extraction.
#[derive(Debug, Clone)]
pub struct ChoiData {
    dim: usize,
    /// `(E ⊗ I)(|α⟩⟨α|)`.
    pub sigma: ComplexMatrix,
    /// `(E ⊗ I)(|α⟩⟨β|)`.
    pub x: ComplexMatrix,
    /// Unitary polar factor, `x = sigma_polar · u`.
    pub u: ComplexMatrix,
    alpha_basis: ComplexMatrix,
    beta_basis: ComplexMatrix,
}

impl ChoiData {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Relative residual ‖XX† − σ²‖ / ‖σ²‖.
    pub fn polar_identity_residual(&self) -> f64 {
        let sq = &self.sigma * &self.sigma;
        let xx = &self.x * &self.x.dagger();
        xx.distance(&sq) / sq.frobenius_norm()
    }
}

/// `Σ_m |b_m⟩ ⊗ |b_m⟩` for the columns `b_m` of `basis`.
fn maximally_entangled(basis: &ComplexMatrix) -> Vec<C64> {
    let d = basis.rows();
    let mut v = vec![ZERO; d * d];
    for m in 0..d {
        for i in 0..d {
            for k in 0..d {
                v[i * d + k] += basis.get(i, m) * basis.get(k, m);
            }
        }
    }
    v
}

/// Builds σ and X for the map `ρ ↦ Σ K ρ K†` using the standard
/// maximally entangled vector `|α⟩ = |β⟩ = Σ_m |m⟩|m⟩`.
pub fn choi_objects(kraus: &[ComplexMatrix], dim: usize) -> Result<ChoiData> {
    let id = ComplexMatrix::identity(dim);
    choi_objects_in_bases(kraus, dim, &id, &id)
}

/// As [`choi_objects`], with `|α⟩ = Σ|α_m⟩|α_m⟩` and `|β⟩ = Σ|β_m⟩|β_m⟩`
/// built from the columns of the unitaries `alpha_basis`, `beta_basis`.
pub fn choi_objects_in_bases(
    kraus: &[ComplexMatrix],
    dim: usize,
    alpha_basis: &ComplexMatrix,
    beta_basis: &ComplexMatrix,
) -> Result<ChoiData> {
    let tol = Tolerances::default().relative;
    if kraus.is_empty() {
        return Err(Error::EmptyChannel);
    }
    for k in kraus {
        k.require_dim("Kraus operator", dim)?;
    }
    let residual = completeness_residual(kraus.iter(), dim);
    if residual > tol {
        return Err(Error::NotTracePreserving {
            which: "sum of K_m^dagger K_m",
            residual,
        });
    }
    alpha_basis.require_dim("alpha basis", dim)?;
    beta_basis.require_dim("beta basis", dim)?;
    alpha_basis.require_unitary("alpha basis", tol)?;
    beta_basis.require_unitary("beta basis", tol)?;

    let alpha = maximally_entangled(alpha_basis);
    let beta = maximally_entangled(beta_basis);
    let aa = ComplexMatrix::outer(&alpha, &alpha);
    let ab = ComplexMatrix::outer(&alpha, &beta);
    let id = ComplexMatrix::identity(dim);
    let n = dim * dim;
    let mut sigma = ComplexMatrix::zeros(n, n);
    let mut x = ComplexMatrix::zeros(n, n);
    for k in kraus {
        let kk = tensor_product(k, &id);
        let kk_dag = kk.dagger();
        sigma = &sigma + &(&(&kk * &aa) * &kk_dag);
        x = &x + &(&(&kk * &ab) * &kk_dag);
    }
    let sigma = (&sigma + &sigma.dagger()).scale(C64::new(0.5, 0.0));
    let min_eigenvalue = eig_hermitian(&sigma)?.eigenvalues[0];
    if min_eigenvalue < -tol * sigma.frobenius_norm() {
        return Err(Error::CompletePositivityViolation { min_eigenvalue });
    }
    let u = polar_decompose(&x)?.u;
    Ok(ChoiData {
        dim,
        sigma,
        x,
        u,
        alpha_basis: alpha_basis.clone(),
        beta_basis: beta_basis.clone(),
    })
}

/// Kraus pairs from the spectral decomposition `σ = Σ |s_m⟩⟨s_m|` and
/// `⟨t_m| = ⟨s_m|u`: `E_m|ψ⟩ = ⟨ψ̃|s_m⟩`, `⟨φ|F_m† = ⟨t_m|φ̃⟩`.
///
/// Pairs come in descending eigenvalue order; eigenvalues below
/// `1e-12·max` are dropped.
pub fn kraus_from_map(c: &ChoiData) -> Result<WChannel> {
    let d = c.dim;
    let eig = eig_hermitian(&c.sigma)?;
    let max = eig.eigenvalues.last().copied().unwrap_or(0.0);
    let min_eigenvalue = eig.eigenvalues[0];
    if max <= 0.0 || min_eigenvalue < -Tolerances::default().relative * max {
        return Err(Error::CompletePositivityViolation { min_eigenvalue });
    }
    // E_m = S_m conj(A) A†, F_m = T_m conj(B) B†, with S_m, T_m the
    // row-major reshapes of |s_m⟩ and |t_m⟩ = u†|s_m⟩
    let a_map = &c.alpha_basis.conj() * &c.alpha_basis.dagger();
    let b_map = &c.beta_basis.conj() * &c.beta_basis.dagger();
    let u_dag = c.u.dagger();
    let reshape = |v: &[C64]| ComplexMatrix::wrap(DMatrix::from_fn(d, d, |i, l| v[i * d + l]));

    let pairs = (0..eig.len())
        .rev()
        .filter(|&k| eig.eigenvalues[k] >= 1e-12 * max)
        .map(|k| {
            let scale = C64::new(eig.eigenvalues[k].sqrt(), 0.0);
            let s: Vec<C64> = eig.vector(k).iter().map(|z| z * scale).collect();
            let t = u_dag.apply(&s);
            KrausPair::new(&reshape(&s) * &a_map, &reshape(&t) * &b_map)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WChannel::new(pairs)?.with_label("choi"))
}

/// Bit flip with `E_0 = F_0 = √p·I`, `E_1 = F_1 = √(1−p)·σ_x`; `p` is the
/// probability of no flip.
pub fn bit_flip_channel(p: f64) -> Result<WChannel> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ProbabilityOutOfRange(p));
    }
    let keep = ComplexMatrix::identity(2).scale(C64::new(p.sqrt(), 0.0));
    let flip = ComplexMatrix::pauli_x().scale(C64::new((1.0 - p).sqrt(), 0.0));
    Ok(WChannel::new(vec![
        KrausPair::symmetric(keep)?,
        KrausPair::symmetric(flip)?,
    ])?
    .with_label(format!("bitflip(p={p})")))
}

/// Unitary on system ⊗ qubit environment implementing the bit flip:
/// `U|ψ⟩|0⟩ = √p|ψ⟩|0⟩ + √(1−p) σ_x|ψ⟩|1⟩`.
pub fn bit_flip_dilation_unitary(p: f64) -> Result<ComplexMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ProbabilityOutOfRange(p));
    }
    // -iσ_y maps |0⟩ to |1⟩ on the environment
    let raise = ComplexMatrix::from_real_rows(&[&[0.0, -1.0], &[1.0, 0.0]])?;
    let stay = ComplexMatrix::identity(4).scale(C64::new(p.sqrt(), 0.0));
    let flip =
        tensor_product(&ComplexMatrix::pauli_x(), &raise).scale(C64::new((1.0 - p).sqrt(), 0.0));
    Ok(&stay + &flip)
}

/// Identity-preserving check used by tests and the CLI: `Σ F†E` of the
/// channel is `I` for unital histories such as the bit flip.
pub fn is_history_identity(ch: &WChannel, tol: f64) -> bool {
    ch.history_operator()
        .distance(&ComplexMatrix::identity(ch.dim()))
        <= tol
}
