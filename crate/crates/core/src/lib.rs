//! # `steadytube`: steady states of viscous shock-tube problems and their stability
//!
//! This library computes steady solutions of one-dimensional hyperbolic–parabolic
//! conservation laws
//!
//! ```text
//!     ∂_t f⁰(U) + ∂_x f(U) = ∂_x ( B(U) ∂_x U ),     0 < x < 1,
//! ```
//!
//! with inflow/outflow ("shock tube") boundary conditions: full Dirichlet data
//! `U(0) = U₀` at the left endpoint and partial data `U_II(1) = U₁ᵢᵢ` on the
//! parabolic components at the right. The viscosity matrix `B` acts only on the
//! last `n − r` components (`B₂₂` block), so the first `r` components are purely
//! hyperbolic.
//!
//! Main capabilities:
//! - [`system`]: system definitions (built-in gas-dynamical and linear examples),
//!   Jacobian block extraction, and structural assumption checks.
//! - [`ode`]: adaptive embedded Runge–Kutta integration with dense output, for
//!   real and complex states, including renormalized propagation of linear
//!   solution bases.
//! - [`steady`]: the shooting map Φ for the steady boundary-value problem, its
//!   Jacobian, Newton solvers, the linear closed-form solution, entropy
//!   dissipation diagnostics, and a Brouwer-degree root probe.
//! - [`evans`]: the Evans function of the linearization along a steady profile,
//!   the stability index, winding-number zero counts, and the standing-shock
//!   family experiment.
//! - [`limits`]: small-viscosity structure of isentropic gas dynamics
//!   (configuration classifier, shock location, convergence-rate studies) and
//!   large-viscosity asymptotics for full gas dynamics.
//! - [`cli`]: the `steadytube` command-line front end emitting CSV/JSON artifacts.

pub mod cli;
pub mod error;
pub mod evans;
pub mod limits;
pub mod ode;
pub mod steady;
pub mod system;

pub use error::Error;

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
