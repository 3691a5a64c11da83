//! Numerics for the singular second order oscillator
//!
//! ```text
//! (|u'|^l u')' + c |u'|^alpha u' + d |u|^beta u = 0,      l >= 0, alpha, beta, c, d > 0
//! ```
//!
//! The leading term degenerates wherever u' = 0: at such points u'' blows up
//! for any non-trivial solution, while the flux p = |u'|^l u' stays C^1.
//! Everything here works in the (u, p) variables so the right-hand side is
//! continuous through the singular layer.
//!
//! Module map:
//!
//! - [`model`] — parameter validation and the closed-form quantities of the
//!   theory: critical exponent alpha* = (beta(l+1)+l)/(beta+2), critical
//!   damping constant c0, energy, exact asymptotic constants, and the
//!   comparison (super-solution) bound.
//! - [`integrator`] — adaptive Dormand-Prince 5(4) integration of the flux
//!   system and of the epsilon-regularized system, with dense output, zero
//!   localization for u and u', and an energy floor near the non-Lipschitz
//!   equilibrium.
//! - [`analysis`] — energy-law audits, log-log decay-rate fits, empirical
//!   oscillation classification, and the polar (r, theta) diagnostics.
//! - [`constructor`] — the fast-solution construction: iteration of the
//!   integral operator K(v)(t) = (∫_t^∞ v^{1/(l+1)})^{beta+1} against the
//!   scalar forced equation v' + v^{(alpha+1)/(l+1)} = f, and reconstruction
//!   of u from the fixed point.
//! - [`regions`] — the (z, w) phase-plane field, sign certification of the
//!   invariant sector S_{eps,M} = {z < 0, z^2 + w^2 < eps^2, 0 < w/|z| < M},
//!   and direct invariance simulation.
//!
//! The crate is `no_std` (with `alloc`); scalar math goes through `libm`.

#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` guards reject NaN along with the out-of-range values;
// `x <= 0.0` would silently accept NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod constructor;
pub mod error;
pub mod integrator;
pub mod math;
pub mod model;
pub mod regions;
mod rk;

pub use error::Error;
pub use integrator::{Sample, State, Status, Trajectory};
pub use model::{Params, Regime};
