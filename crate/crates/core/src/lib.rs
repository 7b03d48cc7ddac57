//! Numerical laboratory for the operator `-Δ + b·∇` with singular drift `b`.
//!
//! The resolvent is assembled from fractional resolvent powers of the
//! Laplacian, pointwise weights built from `|b|`, and a Neumann series for
//! the inverse of `1 + T_p`. Everything lives on a periodic grid that stands
//! in for `ℝ^d`; continuum kernel inequalities are checked separately by
//! one-dimensional quadrature, and the induced diffusion is simulated by
//! Monte Carlo.
//!
//! Module map:
//!
//! * [`grid`], [`fft`], [`spectral`]: periodic grids, transforms, Fourier
//!   multipliers, discrete norms.
//! * [`constants`]: closed-form constants and admissibility intervals.
//! * [`fields`]: drift catalog, truncation, mollification, class estimators.
//! * [`theta`]: the resolvent assembly, Neumann inversion, identities and
//!   norm bounds.
//! * [`semigroup`]: backward-Euler semigroup and its properties.
//! * [`kernel`]: quadrature checks of pointwise kernel estimates.
//! * [`regularity`]: Hölder, Bessel-smoothing and weak-identity probes.
//! * [`feller`]: Euler–Maruyama simulation of the associated diffusion.
//! * [`acceptance`]: the end-to-end acceptance criteria.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod constants;
pub mod error;
pub mod exec;
pub mod feller;
pub mod fft;
pub mod fit;
pub mod fields;
pub mod grid;
pub mod io;
pub mod kernel;
pub mod linop;
pub mod quadrature;
pub mod regularity;
pub mod semigroup;
pub mod spectral;
pub mod theta;

pub use error::{Error, Result};
pub use grid::{Grid, GridFunction, GridVectorField};
pub use num_complex::Complex64;
