//! Default tolerances and thresholds, collected in one place.
//!
//! | constant | value | used by |
//! |----------|-------|---------|
//! | [`QUADRATURE_RTOL`] | 1e-6 | product/spherical quadrature |
//! | [`R1_AGREEMENT`] | 1e-4 | two-method check of `r₁` |
//! | [`R2_AGREEMENT`] | 1e-2 | reduced vs mesh value of `r₂` |
//! | [`STABLE_EXPONENT`] | 0.1 | membership verdict on fitted growth |
//! | [`PAIR_BUDGET`] | 2e6 | pair sampling in constant estimates |
//! | [`LUXEMBURG_RTOL`] | 1e-8 | Luxemburg bisection |
//! | [`BOUND_SLACK`] | 5e-2 | measured ≤ bound·(1+slack) in mollifier checks |
//! | [`COMPETITOR_SLACK`] | 2e-2 | competitor ≥ lower·(1−slack) |
//! | [`CHAIN_SLACK`] | 1e-2 | inequality-chain checks on competitors |
//! | [`STRICT_GAP_RTOL`] | 1e-9 | lower > upper·(1+rtol) for a strict gap |
//! | [`SOLVER_EPS`] | 1e-8 | gradient regularization inside the Newton solver |
//! | [`ZERO_Q_PART`] | 1e-10 | q-part of `F[t·u*]` |

pub const QUADRATURE_RTOL: f64 = 1e-6;
pub const R1_AGREEMENT: f64 = 1e-4;
pub const R2_AGREEMENT: f64 = 1e-2;
pub const STABLE_EXPONENT: f64 = 0.1;
pub const PAIR_BUDGET: usize = 2_000_000;
pub const LUXEMBURG_RTOL: f64 = 1e-8;
pub const LUXEMBURG_BRACKET: (f64, f64) = (1e-12, 1e12);
pub const BOUND_SLACK: f64 = 5e-2;
pub const COMPETITOR_SLACK: f64 = 2e-2;
pub const CHAIN_SLACK: f64 = 1e-2;
pub const STRICT_GAP_RTOL: f64 = 1e-9;
pub const SOLVER_EPS: f64 = 1e-8;
pub const ZERO_Q_PART: f64 = 1e-10;
/// Upper limit on mesh nodes accepted by [`crate::domain_grid::build_disk_mesh`].
pub const NODE_BUDGET: usize = 2_000_000;
/// Default safety factor putting `t₀` strictly above its threshold.
pub const SAFETY_FACTOR: f64 = 1.1;
