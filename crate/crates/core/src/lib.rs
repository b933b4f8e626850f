//! Numerical laboratory for the Kähler-Ricci flow written as a parabolic
//! Monge-Ampère equation for a Kähler potential.
//!
//! The crate integrates the flow on product models built from flat complex
//! tori (discretized pseudospectrally) and exact homothety factors
//! (Ricci-flat and negative Kähler-Einstein), and evaluates along the way
//! every quantity that the a priori estimates of the flow control: the
//! potential and its time derivative, the trace of the canonical form, the
//! gradient and Laplacian of the Ricci potential `u = φ̇ + φ`, the scalar
//! curvature and the maximum-principle functionals built from them.
//!
//! Module map:
//!
//! * [`geometry`]: torus grids, spectral operators, Hermitian metric fields
//!   and curvature.
//! * [`maflow`]: model description, the potential flow, time integrators and
//!   frame rescaling.
//! * [`elliptic`]: Newton-Krylov solver for the comparison Monge-Ampère family
//!   and the time interpolant built from it.
//! * [`estimates`]: monitor records and the functionals evaluated on them.
//! * [`homothety`]: closed-form reductions of exact factors.
//! * [`harness`]: configuration, persistence, decay fits, SVG plots and the
//!   verification suite.

// `!(x > 0.0)` rejects NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod elliptic;
pub mod error;
pub mod estimates;
pub mod geometry;
pub mod harness;
pub mod homothety;
pub mod linsolve;
pub mod maflow;
pub mod reduce;

pub use error::{Error, Result};
