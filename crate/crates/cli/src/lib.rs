//! Batch front-end: model files in, derivations and check reports out.

pub mod derive;
pub mod integrate;
pub mod model;
pub mod report;
pub mod verify;

use multisym_core::hamiltonian::{hamiltonian_from_legendre, HamiltonianError};
use multisym_core::symexpr::DEFAULT_SEED;
use multisym_core::{HamiltonianSystem, LagrangianSystem, NumIntError, ZeroTest};

pub use derive::{cmd_classify, cmd_derive};
pub use integrate::{cmd_integrate, IntegrateOptions};
pub use model::{Model, Numeric};
pub use report::{Check, EvidenceKind, Report, Status};
pub use verify::{cmd_verify, VerifyOptions};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("model line {line}: {msg}")]
    Model { line: usize, msg: String },
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Input(String),
    #[error("numeric failure: {0}")]
    Numeric(#[from] NumIntError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numeric(_) => 3,
            _ => 2,
        }
    }
}

pub fn zero_test(seed: u64, samples: Option<usize>) -> ZeroTest {
    let mut zt = ZeroTest::with_seed(seed);
    if let Some(k) = samples {
        zt.samples = k;
    }
    zt
}

pub fn model_seed(model: &Model) -> u64 {
    model.numeric.as_ref().and_then(|n| n.seed).unwrap_or(DEFAULT_SEED)
}

pub fn lagrangian(model: &Model) -> Result<LagrangianSystem, CliError> {
    LagrangianSystem::parse(model.m, model.n, &model.lagrangian)
        .map_err(|e| CliError::Input(format!("[lagrangian] {e}")))
}

/// The model's Hamiltonian: user-supplied, or from inverting the Legendre
/// map. `Err` carries the reason none is available.
pub fn hamiltonian(
    model: &Model,
    sys: &LagrangianSystem,
    zt: &ZeroTest,
) -> Result<Result<HamiltonianSystem, String>, CliError> {
    if let Some(src) = &model.hamiltonian {
        return HamiltonianSystem::parse_user(model.m, model.n, src)
            .map(Ok)
            .map_err(|e| CliError::Input(format!("[hamiltonian] {e}")));
    }
    match hamiltonian_from_legendre(sys, model.inverse_legendre.as_deref(), zt) {
        Ok(h) => Ok(Ok(h)),
        Err(HamiltonianError::NotInvertible(label)) => Ok(Err(format!(
            "Legendre map not invertible ({label}); no [hamiltonian] given"
        ))),
        Err(HamiltonianError::InverseRequired) => Ok(Err(
            "momenta are not affine in the velocities; no [inverse_legendre] given".into(),
        )),
        Err(HamiltonianError::InverseRoundTrip(msg)) => {
            Ok(Err(format!("[inverse_legendre] is not the inverse: {msg}")))
        }
        Err(e) => Err(CliError::Input(e.to_string())),
    }
}
