//! Numerics for hyperbolic representation learning in binary64.
//!
//! The crate implements the two standard charts of hyperbolic space (the
//! Poincaré ball and the Lorentz hyperboloid) together with an unconstrained
//! Euclidean parametrization through the exponential map at the origin, and
//! uses them to study what IEEE 754 double precision can and cannot
//! represent:
//!
//! - [`geometry`]: closed-form distances, chart conversions, exponential maps,
//!   Möbius addition and parallel transport.
//! - [`optim`]: Riemannian gradients, one-step gradient descent in every chart,
//!   Jacobian of the parametrization and a finite-difference oracle.
//! - [`stability`]: representation-capacity probes and one-step optimizer
//!   comparisons against closed-form expansions.
//! - [`treeembed`]: synthetic trees, distortion-minimizing embeddings and
//!   distortion metrics.
//! - [`svm`]: Euclidean and Lorentz SVMs, the reparametrized Lorentz SVM,
//!   Platt calibration and one-vs-all prediction.
//! - [`io`]: CSV formats for points, labelled datasets and trees.

pub mod error;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod optim;
pub mod rng;
pub mod stability;
pub mod svm;
pub mod treeembed;

pub use error::{Error, Result};
pub use geometry::{Chart, EuclideanParam, LorentzPoint, PoincarePoint, TangentVector};
