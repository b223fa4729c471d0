use thiserror::Error;

use crate::kernel::SingularityKind;
use crate::numerics::{QuadError, RootError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Root(#[from] RootError),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no critical point: dR/dz > 0 for every z when omega_lambda = 1")]
    NoCriticalPoint,
    #[error("{kind} at z = {z}: {detail}")]
    Singular {
        kind: SingularityKind,
        z: f64,
        detail: String,
    },
    #[error("quotient not removable here: c = {c} differs from c_lambda = {c_lambda}")]
    NotRemovable { c: f64, c_lambda: f64 },
    #[error("integration stopped at z = {z}: {message}")]
    Integration { z: f64, message: String },
}
