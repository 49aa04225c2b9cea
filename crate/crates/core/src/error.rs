use thiserror::Error;

use crate::{closure, dynamics, linalg, lp, model, momenteq, poly, statespace};

/// Umbrella error for callers that run the whole pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Poly(#[from] poly::PolyError),
    #[error(transparent)]
    Model(#[from] model::ModelError),
    #[error(transparent)]
    StateSpace(#[from] statespace::StateSpaceError),
    #[error(transparent)]
    Moment(#[from] momenteq::MomentError),
    #[error(transparent)]
    Lp(#[from] lp::LpError),
    #[error(transparent)]
    Closure(#[from] closure::ClosureError),
    #[error(transparent)]
    Dynamics(#[from] dynamics::DynamicsError),
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
}
