//! Robust moment closure for chemical master equations on bounded state boxes.
//!
//! The pipeline runs bottom-up:
//!
//! * [`poly`] holds sparse multivariate polynomials (propensities, monomials).
//! * [`model`] describes a reaction network and checks that it conserves
//!   probability on its box.
//! * [`statespace`] enumerates the box and builds the generator `G` and the
//!   moment matrices `V` (moments up to order `n`) and `H` (the moments the
//!   closure has to predict).
//! * [`momenteq`] derives `dE/dt = A E + b H P + r` symbolically.
//! * [`lp`] is a dense two-phase simplex solver.
//! * [`closure`] finds the optimal affine closure and its worst-case error
//!   through three independent linear programs.
//! * [`dynamics`] propagates the exact CME and the closed moment system and
//!   certifies the trajectory error.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! `*F64` aliases below are what most callers want.

pub mod closure;
pub mod dynamics;
pub mod gallery;
pub mod linalg;
pub mod lp;
pub mod model;
pub mod momenteq;
pub mod poly;
pub mod scalar;
pub mod statespace;

mod error;

pub use error::Error;
pub use scalar::Scalar;

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub type PolynomialF64 = poly::Polynomial<f64>;
pub type ReactionF64 = model::Reaction<f64>;
pub type ReactionNetworkF64 = model::ReactionNetwork<f64>;
pub type GeneratorF64 = statespace::Generator<f64>;
pub type MomentMatricesF64 = statespace::MomentMatrices<f64>;
pub type MomentSystemF64 = momenteq::MomentSystem<f64>;
pub type LinearProgramF64 = lp::LinearProgram<f64>;
pub type LpSolutionF64 = lp::LpSolution<f64>;
pub type ClosureResultF64 = closure::ClosureResult<f64>;
pub type TrajectoryF64 = dynamics::Trajectory<f64>;
pub type ErrorCertificateF64 = dynamics::ErrorCertificate<f64>;

pub type PolynomialF32 = poly::Polynomial<f32>;
pub type ReactionNetworkF32 = model::ReactionNetwork<f32>;
pub type MomentMatricesF32 = statespace::MomentMatrices<f32>;
pub type ClosureResultF32 = closure::ClosureResult<f32>;
