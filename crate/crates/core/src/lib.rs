//! Monotone wide-stencil solver for gradient-degenerate Pucci equations
//! whose right-hand side depends on the measure of the solution's own
//! superlevel sets.
//!
//! The equation solved on a bounded domain in the plane, with Dirichlet
//! data g, is
//!
//! ```text
//! |Du|^gamma M+(D^2 u) = f(|{u >= u(x)}|)
//! ```
//!
//! where M+ is the maximal Pucci operator with ellipticity bounds
//! (lambda, Lambda), gamma >= 0, and f is non-negative and non-decreasing.
//! The solver regularizes the operator with a vanishing viscosity term,
//! mollifies the measure coupling, resolves each frozen-right-hand-side
//! problem with a monotone pseudo-time scheme, and drives the coupling by
//! damped fixed-point iteration while the regularization parameters are
//! relaxed on a geometric ladder.
//!
//! Module map:
//! * [`domain`], [`grid`]: geometry, boundary-fitted 8-arm lattice stencils;
//! * [`pucci`]: exact and discrete maximal Pucci operators;
//! * [`levelset`]: superlevel measures, mollified couplings, rearrangements;
//! * [`radial`]: lattice-independent radial reference solutions;
//! * [`inner`]: pseudo-time solver for a frozen right-hand side;
//! * [`outer`]: regularization ladder and fixed-point driver;
//! * [`properties`]: randomized structural self-checks;
//! * [`config`], [`report`], [`run`]: TOML-driven CLI plumbing.

pub mod config;
pub mod domain;
pub mod error;
pub mod grid;
pub mod inner;
pub mod levelset;
pub mod outer;
pub mod properties;
pub mod pucci;
pub mod radial;
pub mod report;
pub mod run;

pub use error::{Error, Result};
