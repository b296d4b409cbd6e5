//! Numerical toolkit for double-phase variational energies
//! `∫ |∇u|^p + a(x)|∇u|^q dx`.
//!
//! The crate certifies the decay class of weights (`a(x) ≤ C(a(y) + |x−y|^κ)`),
//! implements the shrinking mollifier together with checks of its quantitative
//! bounds, evaluates double-phase energies and their Musielak–Orlicz structure,
//! and rebuilds the cone counterexample in which smooth competitors cannot reach
//! the infimum over the energy space.
//!
//! Layout:
//!
//! * [`domain_grid`] – disk meshes, P1 calculus, triangle/product quadrature.
//! * [`weights`] – weights, `Z^κ`/`Z^ω` constant estimates and refinement studies.
//! * [`mollify`] – the shrinking convolution `S_δ` and its structural checks.
//! * [`energy`] – integrands, energies, modulars, Luxemburg norm, regime classifier.
//! * [`counterexample`] – cone weight, `u*`, constants `r₁, r₂, r₃, t₀` and the gap chain.
//! * [`minimize`] – Newton solver for the discrete problem and the gap/no-gap experiments.

#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::excessive_precision,
    clippy::manual_clamp
)]

pub mod counterexample;
pub mod domain_grid;
pub mod energy;
mod error;
pub mod minimize;
pub mod mollify;
pub mod tolerances;
pub mod weights;

pub use error::{Error, Result};

/// Version string embedded into every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
