//! Radially symmetric finite-volume solver for the flux-limited
//! repulsion-consumption chemotaxis system
//!
//! ```text
//!   u_t = Δu + ∇·(u f(|∇v|²) ∇v),     τ v_t = Δv − u v     in B_R(0),
//!   (∇u + u f(|∇v|²) ∇v)·ν = 0,        v = M               on ∂B_R(0),
//! ```
//!
//! with the prototype sensitivity `f(ξ) = κ (1 + ξ)^(−α)`, together with the
//! diagnostics used to study finite-time blow-up in two dimensions: the mass
//! distribution `w(s) = ∫₀^√s ρ u dρ`, the moment functionals `φ` and `ψ`,
//! and the explicit constants of the moment-growth argument.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: parameters, sensitivity, radial grid, quadrature, initial data.
//! * [`signal`]: elliptic and backward-Euler solves for `v`, face gradients.
//! * [`cells`]: Scharfetter–Gummel transport step for `u`.
//! * [`integrator`]: coupled stepping, adaptive `dt`, blow-up verdicts.
//! * [`diagnostics`]: norms, `w`, `φ`, `ψ`, constants and inequality checks.
//! * [`convergence`]: refinement studies and observed orders.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Stencil loops read several arrays at the same index.
#![allow(clippy::needless_range_loop)]

pub mod cells;
pub mod convergence;
pub mod diagnostics;
mod error;
pub mod integrator;
pub mod model;
pub mod signal;
pub mod special;
pub mod tridiag;

pub use error::{Error, Result};
pub use model::{Fields, InitCells, InitSignal, Params, RadialGrid, SensitivityFn};
