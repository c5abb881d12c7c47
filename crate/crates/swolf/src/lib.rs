//! Analysis toolkit for Slepian-Wolf coding of two finite-alphabet correlated
//! sources.
//!
//! The crate is organized around the joint probability table of a generic
//! source pair ([`source_model::JointPmf`]) and answers rate-region questions
//! at two resolutions:
//!
//! * **First order** — the classical Slepian-Wolf polygon cut out by
//!   `R1 >= H(X1|X2)`, `R2 >= H(X2|X1)`, `R1+R2 >= H(X1 X2)`.
//! * **Second order** — rates of the form `a + L/sqrt(n)` anchored at a
//!   boundary point `(a1, a2)` of the polygon. The achievable `(L1, L2)` set
//!   at target error `eps` is governed by marginals of a centered trivariate
//!   normal law whose covariance is the dispersion matrix of the
//!   self-information triple ([`region`]).
//!
//! Around that core sit:
//!
//! * [`gaussian`] — deterministic one/two/three-dimensional centered normal
//!   CDFs and the univariate quantile,
//! * [`bounds`] — the Gallager-type (Koshelev) exponential error bound with
//!   independently optimized exponents and its Gaussian asymptotics,
//! * [`spectrum`] — exact (type-enumeration) and Monte-Carlo evaluation of the
//!   finite-`n` information-spectrum tail functionals plus the matching
//!   finite-blocklength achievability/converse bounds,
//! * [`simulator`] — a random-binning code ensemble with exact
//!   maximum-likelihood decoding at small blocklengths.
//!
//! All internal rate/entropy arithmetic is in nats; conversion to bits is a
//! display concern (see [`units`]).

// Symbol indices (x1, x2) address the joint table and the marginal vectors
// side by side; plain range loops read better than enumerate chains here.
#![allow(clippy::needless_range_loop)]

pub mod bounds;
pub mod gaussian;
mod linalg;
pub mod region;
pub mod simulator;
pub mod source_model;
pub mod spectrum;
pub mod units;

pub use source_model::{JointPmf, MixedSource, SourceStats};
