//! Von Neumann probe for weak measurement.
//!
//! The system couples impulsively to a real Gaussian pointer through
//! `exp(−i g A⊗P)`. After post-selection the pointer wavefunction is, exactly,
//! `ψ(q) = Σ_k c_k ξ(q − g a_k)` with `A = Σ_k a_k Π_k` and
//! `c_k = Tr(E(W) Π_k)`. To first order in `g` its position and momentum
//! means shift by `g·Re⟨A⟩` and `2g·Var(p)·Im⟨A⟩`, where `⟨A⟩` is the weak
//! value under the (possibly noisy) W operator `E(W)`.
//!
//! Units: ħ = 1, probe position standard deviation `s`, so
//! `Var(p) = 1/(4s²)`.

use std::f64::consts::PI;

use crate::channels::{apply_to_w, kraus_from_dilation, EnvironmentDilation};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, Tolerances, C64, ZERO};
use crate::twostate::{weak_value_with_tolerance, HermitianObservable, Ket, WOperator};

/// Half-width of the grid around the outermost shifted center, in units of
/// the probe width.
const GRID_HALF_SPAN: f64 = 8.0;
const MIN_POINTS: usize = 2048;
const DEFAULT_POINTS: usize = 4096;
/// Grid and analytic moments must agree to this absolute tolerance.
const CROSS_CHECK_TOL: f64 = 1e-6;

/// Real Gaussian pointer `ξ(q) = (2πs²)^{−1/4} exp(−q²/4s²)` and the grid it
/// is sampled on.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianProbe {
    width: f64,
    points: usize,
    bounds: Option<(f64, f64)>,
}

impl GaussianProbe {
    pub fn new(width: f64) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::InvalidProbe(format!(
                "width must be positive, got {width}"
            )));
        }
        Ok(Self {
            width,
            points: DEFAULT_POINTS,
            bounds: None,
        })
    }

    pub fn with_points(mut self, points: usize) -> Result<Self> {
        if points < MIN_POINTS {
            return Err(Error::InvalidProbe(format!(
                "grid needs at least {MIN_POINTS} points, got {points}"
            )));
        }
        self.points = points;
        Ok(self)
    }

    /// Fixes the grid instead of fitting it to the shifted centers. It must
    /// still cover every center ± 8s when used.
    pub fn with_bounds(mut self, q_min: f64, q_max: f64) -> Result<Self> {
        if !(q_min.is_finite() && q_max.is_finite() && q_min < q_max) {
            return Err(Error::InvalidProbe(format!(
                "bad grid bounds [{q_min}, {q_max}]"
            )));
        }
        self.bounds = Some((q_min, q_max));
        Ok(self)
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// Momentum variance of the unshifted pointer, `1/(4s²)`.
    pub fn var_p(&self) -> f64 {
        1.0 / (4.0 * self.width * self.width)
    }

    pub fn amplitude(&self, q: f64) -> f64 {
        let s2 = self.width * self.width;
        (2.0 * PI * s2).powf(-0.25) * (-q * q / (4.0 * s2)).exp()
    }

    /// `⟨ξ(· − x1)|ξ(· − x2)⟩ = exp(−(x1 − x2)²/8s²)`.
    pub fn overlap(&self, x1: f64, x2: f64) -> f64 {
        let d = x1 - x2;
        (-d * d / (8.0 * self.width * self.width)).exp()
    }

    /// Uniform grid covering `[min_center − 8s, max_center + 8s]`.
    pub fn grid_for(&self, centers: &[f64]) -> Result<Vec<f64>> {
        let lo = centers.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = centers.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let need = (
            lo - GRID_HALF_SPAN * self.width,
            hi + GRID_HALF_SPAN * self.width,
        );
        let (a, b) = match self.bounds {
            Some((a, b)) if a > need.0 || b < need.1 => {
                return Err(Error::InvalidProbe(format!(
                    "grid [{a}, {b}] does not cover [{}, {}]",
                    need.0, need.1
                )))
            }
            Some(bounds) => bounds,
            None => need,
        };
        let n = self.points;
        let h = (b - a) / (n - 1) as f64;
        Ok((0..n).map(|j| a + h * j as f64).collect())
    }
}

#[derive(Debug, Clone)]
pub struct CouplingSpec {
    pub g: f64,
    pub observable: HermitianObservable,
}

impl CouplingSpec {
    pub fn new(g: f64, observable: HermitianObservable) -> Result<Self> {
        if !g.is_finite() {
            return Err(Error::NonFinite("coupling strength"));
        }
        Ok(Self { g, observable })
    }
}

/// Mean shifts of the pointer and the post-selection weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeReadout {
    pub delta_q: f64,
    pub delta_p: f64,
    pub norm: f64,
}

/// One eigenvalue of the coupled observable and the amplitude of the pointer
/// copy shifted by `g·eigenvalue`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointerComponent {
    pub eigenvalue: f64,
    pub coefficient: C64,
}

/// Post-selected pointer wavefunction (unnormalized) sampled on a grid,
/// together with its closed-form superposition coefficients.
#[derive(Debug, Clone)]
pub struct PointerState {
    pub g: f64,
    pub grid: Vec<f64>,
    pub psi: Vec<C64>,
    pub components: Vec<PointerComponent>,
}

/// Distinct eigenvalues of `A` with their spectral projectors.
fn spectral_projectors(a: &HermitianObservable) -> Vec<(f64, ComplexMatrix)> {
    let eig = a.eigensystem();
    let scale = eig.eigenvalues.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let d = a.dim();
    let mut groups: Vec<(f64, ComplexMatrix)> = Vec::new();
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        let v = eig.vector(k);
        let proj = ComplexMatrix::outer(&v, &v);
        match groups.last_mut() {
            Some((mu, p)) if (lambda - *mu).abs() <= 1e-10 * scale => {
                *p = &*p + &proj;
            }
            _ => groups.push((lambda, proj)),
        }
    }
    debug_assert!(groups.iter().all(|(_, p)| p.rows() == d));
    groups
}

/// Exact post-selected pointer state for the history `w` (typically
/// `E(|i⟩⟨f|)`), with no weak-coupling expansion.
pub fn postselected_wavefunction(
    w: &WOperator,
    c: &CouplingSpec,
    probe: &GaussianProbe,
) -> Result<PointerState> {
    if c.observable.dim() != w.dim() {
        return Err(Error::DimensionMismatch {
            context: "coupled observable",
            expected: w.dim(),
            found: c.observable.dim(),
        });
    }
    let components: Vec<PointerComponent> = spectral_projectors(&c.observable)
        .into_iter()
        .map(|(eigenvalue, proj)| PointerComponent {
            eigenvalue,
            coefficient: (w.matrix() * &proj).trace(),
        })
        .collect();
    if components.iter().all(|k| k.coefficient.norm() < 1e-14) {
        return Err(Error::PostselectionImpossible);
    }
    let centers: Vec<f64> = components.iter().map(|k| c.g * k.eigenvalue).collect();
    let grid = probe.grid_for(&centers)?;
    let psi = grid
        .iter()
        .map(|&q| {
            components
                .iter()
                .zip(&centers)
                .map(|(k, &x)| k.coefficient * probe.amplitude(q - x))
                .sum()
        })
        .collect();
    Ok(PointerState {
        g: c.g,
        grid,
        psi,
        components,
    })
}

/// First three momentum/position moments of a pointer state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub norm: f64,
    pub mean_q: f64,
    pub mean_p: f64,
    pub var_p: f64,
}

/// Five-point central differences, falling back to shorter stencils at the
/// grid ends.
fn derivative(psi: &[C64], h: f64) -> Vec<C64> {
    let n = psi.len();
    (0..n)
        .map(|j| {
            if j >= 2 && j + 2 < n {
                (psi[j - 2] - psi[j - 1] * 8.0 + psi[j + 1] * 8.0 - psi[j + 2]) / (12.0 * h)
            } else if j >= 1 && j + 1 < n {
                (psi[j + 1] - psi[j - 1]) / (2.0 * h)
            } else if j == 0 {
                (psi[1] - psi[0]) / h
            } else {
                (psi[j] - psi[j - 1]) / h
            }
        })
        .collect()
}

fn trapezoid(values: impl Iterator<Item = f64>, n: usize, h: f64) -> f64 {
    values
        .enumerate()
        .map(|(j, v)| if j == 0 || j + 1 == n { 0.5 * v } else { v })
        .sum::<f64>()
        * h
}

/// Moments by quadrature on the grid: `⟨q⟩ = ∫q|ψ|²/‖ψ‖²`,
/// `⟨p⟩ = ∫Im(ψ*∂ψ)/‖ψ‖²`, `⟨p²⟩ = ∫|∂ψ|²/‖ψ‖²`.
pub fn probe_moments(state: &PointerState) -> Result<Moments> {
    let n = state.grid.len();
    if n < 3 {
        return Err(Error::ZeroNorm);
    }
    let h = state.grid[1] - state.grid[0];
    let psi = &state.psi;
    let dpsi = derivative(psi, h);
    let norm = trapezoid(psi.iter().map(|z| z.norm_sqr()), n, h);
    if norm.is_nan() || norm <= 0.0 {
        return Err(Error::ZeroNorm);
    }
    let mean_q = trapezoid(
        state.grid.iter().zip(psi).map(|(q, z)| q * z.norm_sqr()),
        n,
        h,
    ) / norm;
    let mean_p = trapezoid(psi.iter().zip(&dpsi).map(|(z, d)| (z.conj() * d).im), n, h) / norm;
    let p2 = trapezoid(dpsi.iter().map(|d| d.norm_sqr()), n, h) / norm;
    Ok(Moments {
        norm,
        mean_q,
        mean_p,
        var_p: p2 - mean_p * mean_p,
    })
}

/// Moments of `Σ_k c_k ξ(q − x_k)` from the Gaussian overlap formulas,
/// exact to machine precision.
pub fn analytic_moments(state: &PointerState, probe: &GaussianProbe) -> Result<Moments> {
    let s2 = probe.width * probe.width;
    let mut norm = ZERO;
    let mut q = ZERO;
    let mut p = ZERO;
    let mut p2 = ZERO;
    for l in &state.components {
        for k in &state.components {
            let (xl, xk) = (state.g * l.eigenvalue, state.g * k.eigenvalue);
            let weight = l.coefficient.conj() * k.coefficient * probe.overlap(xl, xk);
            let delta = xl - xk;
            norm += weight;
            q += weight * (0.5 * (xl + xk));
            p += weight * C64::new(0.0, delta / (4.0 * s2));
            p2 += weight * ((s2 - 0.25 * delta * delta) / (4.0 * s2 * s2));
        }
    }
    let norm = norm.re;
    if norm.is_nan() || norm <= 0.0 {
        return Err(Error::ZeroNorm);
    }
    let mean_p = p.re / norm;
    Ok(Moments {
        norm,
        mean_q: q.re / norm,
        mean_p,
        var_p: p2.re / norm - mean_p * mean_p,
    })
}

/// `δq = g·Re⟨A⟩`, `δp = 2g·Var(p)·Im⟨A⟩`, `norm = |Tr W|²`.
pub fn first_order_shifts(
    w: &WOperator,
    c: &CouplingSpec,
    probe: &GaussianProbe,
) -> Result<ProbeReadout> {
    first_order_shifts_with_tolerance(w, c, probe, Tolerances::default().trace)
}

pub fn first_order_shifts_with_tolerance(
    w: &WOperator,
    c: &CouplingSpec,
    probe: &GaussianProbe,
    trace_tol: f64,
) -> Result<ProbeReadout> {
    let wv = weak_value_with_tolerance(w, &c.observable, trace_tol)?.value;
    Ok(ProbeReadout {
        delta_q: c.g * wv.re,
        delta_p: 2.0 * c.g * probe.var_p() * wv.im,
        norm: w.trace().norm_sqr(),
    })
}

/// Shifts of the exact pointer state, to all orders in `g`. Grid quadrature
/// is cross-checked against the analytic overlap formulas; a disagreement
/// above 1e-6 is reported as [`Error::DiscretizationMismatch`].
pub fn exact_shifts(
    w: &WOperator,
    c: &CouplingSpec,
    probe: &GaussianProbe,
) -> Result<ProbeReadout> {
    let state = postselected_wavefunction(w, c, probe)?;
    let grid = probe_moments(&state)?;
    let exact = analytic_moments(&state, probe)?;
    let difference = (grid.mean_q - exact.mean_q)
        .abs()
        .max((grid.mean_p - exact.mean_p).abs());
    if difference.is_nan() || difference > CROSS_CHECK_TOL {
        return Err(Error::DiscretizationMismatch { difference });
    }
    Ok(ProbeReadout {
        delta_q: grid.mean_q,
        delta_p: grid.mean_p,
        norm: grid.norm,
    })
}

/// Statistical weights over uncontrolled environment boundary states.
#[derive(Debug, Clone)]
pub struct WeightedEnvEnsemble {
    entries: Vec<EnsembleEntry>,
}

#[derive(Debug, Clone)]
pub struct EnsembleEntry {
    pub e_i: Ket,
    pub e_f: Ket,
    pub weight: f64,
}

impl WeightedEnvEnsemble {
    pub fn new(entries: Vec<EnsembleEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidEnsemble("no entries"));
        }
        if entries
            .iter()
            .any(|e| !(e.weight.is_finite() && e.weight >= 0.0))
        {
            return Err(Error::InvalidEnsemble(
                "weights must be finite and nonnegative",
            ));
        }
        if !entries.iter().any(|e| e.weight > 0.0) {
            return Err(Error::InvalidEnsemble(
                "at least one weight must be positive",
            ));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[EnsembleEntry] {
        &self.entries
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.entries
                .iter()
                .map(|e| EnsembleEntry {
                    weight: e.weight * factor,
                    ..e.clone()
                })
                .collect(),
        )
    }
}

/// Weighted sums `Ave(Tr[E(W)A])` and `Ave(Tr E(W))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleTraces {
    pub numerator: C64,
    pub denominator: C64,
}

/// Averages numerator and denominator separately over the ensemble; each
/// entry's channel comes from `template` with that entry's environment
/// boundary states.
pub fn ensemble_traces(
    ens: &WeightedEnvEnsemble,
    template: &EnvironmentDilation,
    i: &Ket,
    f: &Ket,
    a: &HermitianObservable,
) -> Result<EnsembleTraces> {
    let w = WOperator::from_states(i, f)?;
    if a.dim() != w.dim() {
        return Err(Error::DimensionMismatch {
            context: "coupled observable",
            expected: w.dim(),
            found: a.dim(),
        });
    }
    let mut numerator = ZERO;
    let mut denominator = ZERO;
    for entry in &ens.entries {
        let dilation = template.with_boundary(entry.e_i.clone(), entry.e_f.clone())?;
        let ew = apply_to_w(&kraus_from_dilation(&dilation)?, &w)?;
        numerator += (ew.matrix() * a.matrix()).trace() * entry.weight;
        denominator += ew.trace() * entry.weight;
    }
    Ok(EnsembleTraces {
        numerator,
        denominator,
    })
}

/// First-order shifts for uncontrolled environments:
/// `δq = Re[g·Ave(Tr[E(W)A]) / Ave(Tr E(W))]`, and the matching `Im` form for
/// `δp`. `norm` is `|Ave(Tr E(W))|²`.
pub fn averaged_shifts(
    ens: &WeightedEnvEnsemble,
    template: &EnvironmentDilation,
    i: &Ket,
    f: &Ket,
    c: &CouplingSpec,
    probe: &GaussianProbe,
) -> Result<ProbeReadout> {
    let t = ensemble_traces(ens, template, i, f, &c.observable)?;
    let total_weight: f64 = ens.entries.iter().map(|e| e.weight).sum();
    let magnitude = t.denominator.norm();
    if magnitude <= Tolerances::default().trace * total_weight {
        return Err(Error::UndefinedAverage { magnitude });
    }
    let ratio = t.numerator / t.denominator;
    Ok(ProbeReadout {
        delta_q: c.g * ratio.re,
        delta_p: 2.0 * c.g * probe.var_p() * ratio.im,
        norm: t.denominator.norm_sqr(),
    })
}
