//! Geometric phase of the three-vertex path `|ĩ⟩ → |P⟩ → |f̃⟩`, read off as
//! the argument of the weak value of `|P⟩⟨P|`, with and without noise.
//!
//! All angles are radians on the principal branch `(−π, π]`. The complex
//! ratio is formed first and its argument taken once, so no arctan branch
//! bookkeeping is needed.

use std::f64::consts::PI;

use crate::channels::WChannel;
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, Tolerances, C64, ZERO};
use crate::twostate::Ket;

const OVERLAP_TOL: f64 = 1e-12;

/// Pre-selected `|ĩ⟩`, post-selected `|f̃⟩` and intermediate `|P⟩`.
#[derive(Debug, Clone)]
pub struct PathSpec {
    i: Ket,
    f: Ket,
    p: Ket,
}

impl PathSpec {
    pub fn new(i: Ket, f: Ket, p: Ket) -> Result<Self> {
        for (what, k) in [
            ("pre-selected state", &i),
            ("post-selected state", &f),
            ("intermediate state", &p),
        ] {
            if !k.is_normalized() {
                return Err(Error::NotNormalized {
                    what,
                    norm: k.norm(),
                });
            }
        }
        for (what, k) in [("post-selected state", &f), ("intermediate state", &p)] {
            if k.dim() != i.dim() {
                return Err(Error::DimensionMismatch {
                    context: what,
                    expected: i.dim(),
                    found: k.dim(),
                });
            }
        }
        if i.inner(&p).norm() <= OVERLAP_TOL {
            return Err(Error::DegeneratePath("⟨P|ĩ⟩ vanishes"));
        }
        if p.inner(&f).norm() <= OVERLAP_TOL {
            return Err(Error::DegeneratePath("⟨f̃|P⟩ vanishes"));
        }
        if i.inner(&f).norm() <= OVERLAP_TOL {
            return Err(Error::DegeneratePath("⟨f̃|ĩ⟩ vanishes"));
        }
        Ok(Self { i, f, p })
    }

    pub fn pre(&self) -> &Ket {
        &self.i
    }

    pub fn post(&self) -> &Ket {
        &self.f
    }

    pub fn intermediate(&self) -> &Ket {
        &self.p
    }
}

/// `arg z` on `(−π, π]`.
pub fn principal_arg(z: C64) -> f64 {
    let a = z.arg();
    if a <= -PI {
        PI
    } else {
        a
    }
}

/// `arg[⟨f̃|P⟩⟨P|ĩ⟩ / ⟨f̃|ĩ⟩]`, the argument of the weak value of `|P⟩⟨P|`
/// under `W = |ĩ⟩⟨f̃|`.
pub fn geometric_phase_pure(path: &PathSpec) -> Result<f64> {
    phase_of_pairs(path, std::iter::once((None, None)))
}

/// `arg[Σ⟨f̃|F_m†|P⟩⟨P|E_m|ĩ⟩ / Σ⟨f̃|F_m†E_m|ĩ⟩]`, equal to the argument of
/// the weak value of `|P⟩⟨P|` under `E(|ĩ⟩⟨f̃|)`.
pub fn geometric_phase_channel(path: &PathSpec, ch: &WChannel) -> Result<f64> {
    if ch.dim() != path.i.dim() {
        return Err(Error::DimensionMismatch {
            context: "channel",
            expected: path.i.dim(),
            found: ch.dim(),
        });
    }
    phase_of_pairs(
        path,
        ch.pairs().iter().map(|pair| (Some(&pair.e), Some(&pair.f))),
    )
}

fn phase_of_pairs<'a>(
    path: &PathSpec,
    pairs: impl Iterator<Item = (Option<&'a ComplexMatrix>, Option<&'a ComplexMatrix>)>,
) -> Result<f64> {
    let mut numerator = ZERO;
    let mut denominator = ZERO;
    for (e, f) in pairs {
        // E_m|ĩ⟩ and F_m|f̃⟩, so that ⟨f̃|F_m†|x⟩ = ⟨F_m f̃|x⟩
        let ei = match e {
            Some(e) => path.i.evolve(e),
            None => path.i.clone(),
        };
        let ff = match f {
            Some(f) => path.f.evolve(f),
            None => path.f.clone(),
        };
        numerator += ff.inner(&path.p) * path.p.inner(&ei);
        denominator += ff.inner(&ei);
    }
    if denominator.norm() <= Tolerances::default().trace {
        return Err(Error::OrthogonalPostselection {
            trace: denominator.norm(),
        });
    }
    let weak_value = numerator / denominator;
    if weak_value.norm() <= OVERLAP_TOL {
        return Err(Error::UndefinedPhase);
    }
    Ok(principal_arg(weak_value))
}

/// Closed form for the bit-flip channel on the path `|ĩ⟩ = (|0⟩ − |1⟩)/√2`,
/// `|P⟩ = |0⟩`, `|f̃⟩ = (|0⟩ − e^{−iφ}|1⟩)/√2`:
/// `arctan[(1 − 2p)·tan(φ/2)]`.
///
/// With `|P⟩ = |0⟩` the weak value is `(p + (1−p)e^{iφ})/(1 + e^{iφ})`, whose
/// real part is exactly ½ for |φ| < π, so its argument is this arctan with no
/// branch correction. At `p = 1` it reduces to `−φ/2`, and it vanishes at
/// `p = ½`.
pub fn bit_flip_phase_closed_form(p: f64, phi: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ProbabilityOutOfRange(p));
    }
    if !phi.is_finite() {
        return Err(Error::NonFinite("phi"));
    }
    if (phi.abs() - PI).abs() <= 1e-12 || phi.abs() > PI {
        return Err(Error::SingularPath { phi });
    }
    Ok(((1.0 - 2.0 * p) * (phi / 2.0).tan()).atan())
}

/// The bit-flip example path for a given `φ`.
pub fn bit_flip_example_path(phi: f64) -> Result<PathSpec> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let i = Ket::normalized(vec![C64::new(h, 0.0), C64::new(-h, 0.0)])?;
    let f = Ket::normalized(vec![C64::new(h, 0.0), -C64::from_polar(h, -phi)])?;
    PathSpec::new(i, f, Ket::basis(2, 0))
}
