//! Special functions, reproducing kernels and zero processes of Gaussian
//! analytic functions (GAFs) on the annulus `𝔸_q = {q < |z| < 1}`.
//!
//! The crate is organised bottom-up:
//!
//! * [`theta`] — q-Pochhammer products, `θ(z; p)` and its logarithmic
//!   derivatives;
//! * [`elliptic`] — Weierstrass `℘`, `ζ`, the special values `e₁, e₂, e₃`,
//!   `℘⁻¹`, Ramanujan's `ρ₁` and the conformal map `H_q`;
//! * [`kernels`] — the Jordan–Kronecker function, weighted Szegő and Bergman
//!   kernels, slit and Ahlfors maps, conditional kernels;
//! * [`pointprocess`] — permanents, determinants, hyperdeterminants,
//!   correlation functions of the zero process, the unfolded two-point
//!   function, `κ(r)` and the critical curve `r₀(q)`;
//! * [`gaf`] — sampling random Laurent series, locating their zeros and Monte
//!   Carlo estimators;
//! * [`identities`] — the randomized identity suite shared by the CLI and
//!   the test-suite.
//!
//! All complex numbers are [`Complex`] (`num_complex::Complex64`).
//!
//! ```
//! use annulus_gaf::{kernels, Complex};
//! let s = kernels::szego_annulus(Complex::new(0.5, 0.0), Complex::new(0.4, 0.3), 0.7, 0.35).unwrap();
//! assert!(s.re > 0.0);
//! ```

// `!(x > 0.0)` style guards are deliberate: they reject NaN along with the
// out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod elliptic;
pub mod error;
pub mod gaf;
pub mod identities;
pub mod kernels;
pub mod pointprocess;
pub mod quadrature;
pub mod roots;
pub mod theta;

pub use error::{Error, Result};
pub use num_complex::Complex64 as Complex;

pub use elliptic::{LatticeParams, SpecialValues};
pub use identities::{SuiteConfig, SuiteReport};
pub use gaf::{EstimateWithError, LaurentSample, ZeroSet};
pub use kernels::KernelQuery;
pub use pointprocess::{CriticalCurvePoint, PointConfig};
pub use theta::Nome;
