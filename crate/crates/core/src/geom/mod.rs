//! Charts, exterior forms, decomposable multivectors and coordinate maps.

mod chart;
mod checks;
mod coordmap;
mod form;
mod multivec;

use thiserror::Error;

use crate::symexpr::{ExprError, Sym};

pub use chart::{Chart, ChartKind};
pub use checks::{
    check_involutive, check_transverse, InvolutivityReport, PairFailure, TransverseReport, INVOLUTIVITY_POINTS,
    RANK_REL_TOL,
};
pub use coordmap::CoordMap;
pub use form::DiffForm;
pub use multivec::{MultiVec, VectorField};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("chart mismatch: {left} vs {right}")]
    ChartMismatch { left: String, right: String },
    #[error("degree mismatch: {left} vs {right}")]
    DegreeMismatch { left: usize, right: usize },
    #[error("degree {degree} exceeds chart dimension {dim}")]
    DegreeTooLarge { degree: usize, dim: usize },
    #[error("symbol {sym} is not a coordinate of {chart}")]
    NotInChart { sym: Sym, chart: String },
    #[error("expected {expected} entries, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Expr(#[from] ExprError),
}
