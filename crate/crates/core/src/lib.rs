//! Numerical laboratory for the semilinear wave equation `□_g u = |u|^p` on
//! the exterior of a Schwarzschild black hole.
//!
//! After the substitution `u = v / r` and the passage to the Regge–Wheeler
//! (tortoise) coordinate `s = r + 2M log(r − 2M)`, the radial problem becomes
//!
//! ```text
//! ∂²_t v − ∂²_s v + W(s) v = f(s) |v|^p,    W = 2MF/r³,  f = F r^{1−p}
//! ```
//!
//! The crate is organised bottom-up:
//!
//! * [`background`]: the coordinate map, its inverse and the coefficient functions.
//! * [`auxode`]: the auxiliary weights `φ₀`, `ψ₀ = φ₀ − D` and `φ₁`.
//! * [`wavesolver`]: leapfrog integration of the reduced problem with blow-up detection.
//! * [`diagnostics`]: the functionals `F₀`, `F₁`, `U` and the identity / inequality checks.
//! * [`kato`]: exponent bookkeeping, thresholds, schedules and the comparison ODE.
//!
//! Data-parallel inner loops (coefficient tabulation, stencil updates on wide
//! grids, trial-function batches, parameter lattices) go through [`par::Exec`];
//! with the `parallel` feature disabled every path runs sequentially and
//! produces bit-identical output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod auxode;
pub mod background;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod kato;
pub mod par;
pub mod quad;
pub mod wavesolver;

pub use error::{Error, Result};
