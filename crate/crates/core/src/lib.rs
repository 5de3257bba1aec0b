//! Weak values of pre/post-selected quantum systems under decoherence.
//!
//! The crate is organized bottom-up:
//!
//! - [`linalg`]: dense complex matrices, Kronecker products, partial traces,
//!   Hermitian eigensystems and polar decompositions.
//! - [`twostate`]: kets, W operators `|ψ⟩⟨φ|`, weak values and the forward /
//!   backward density operators.
//! - [`channels`]: Kraus pairs `(E_m, F_m)` acting as `E(W) = Σ E_m W F_m†`,
//!   built directly, from an environment dilation, or from a Choi matrix.
//! - [`weakmeas`]: the von Neumann probe, exact and first-order pointer shifts,
//!   and ensemble-averaged shifts.
//! - [`geomphase`]: geometric phases of pre/post-selected paths, with and
//!   without noise.
//!
//! ```
//! use wvkit::channels::{apply_to_w, bit_flip_channel};
//! use wvkit::geomphase::{bit_flip_example_path, geometric_phase_channel};
//! use wvkit::twostate::weak_value;
//! use wvkit::weakmeas::{exact_shifts, first_order_shifts, CouplingSpec, GaussianProbe};
//! use wvkit::{HermitianObservable, Ket, WOperator};
//!
//! # fn main() -> wvkit::Result<()> {
//! let i = Ket::normalize(vec![1.0.into(), (-1.0).into()])?;
//! let f = Ket::basis(2, 0);
//! let w = WOperator::from_states(&i, &f)?;
//! let p0 = HermitianObservable::projector(&Ket::basis(2, 0))?;
//!
//! let noisy = apply_to_w(&bit_flip_channel(0.3)?, &w)?;
//! let wv = weak_value(&noisy, &p0)?;
//!
//! let probe = GaussianProbe::new(1.0)?;
//! let c = CouplingSpec::new(0.01, p0)?;
//! let linear = first_order_shifts(&noisy, &c, &probe)?;
//! let exact = exact_shifts(&noisy, &c, &probe)?;
//! assert!((linear.delta_q - exact.delta_q).abs() < 1e-5);
//! assert!((linear.delta_q - 0.01 * wv.value.re).abs() < 1e-15);
//!
//! let path = bit_flip_example_path(std::f64::consts::FRAC_PI_2)?;
//! let gamma = geometric_phase_channel(&path, &bit_flip_channel(0.25)?)?;
//! assert!((gamma - 0.5f64.atan()).abs() < 1e-12);
//! # Ok(())
//! # }
//! ```

pub mod channels;
pub mod error;
pub mod geomphase;
pub mod linalg;
pub mod random;
pub mod twostate;
pub mod weakmeas;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, Tolerances, C64};
pub use twostate::{HermitianObservable, Ket, WOperator};
