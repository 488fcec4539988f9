//! Error type shared by all modules of the crate.

use alloc::string::String;
use core::fmt;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

/// Failure modes of the index computations.
///
/// Variants mirror the failure conditions of the individual operations;
/// the pipeline wraps them with the stage name via [`Error::Stage`].
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A symplectic matrix must have even dimension.
    OddDimension { dim: usize },
    /// `‖MᵀJM − J‖∞` exceeded the admission tolerance.
    NotSymplectic { residual: f64 },
    /// A symmetric matrix input had asymmetry beyond tolerance.
    AsymmetricInput { residual: f64 },
    /// A Lagrangian frame was rank deficient.
    RankDeficientFrame { rank: usize, expected: usize },
    /// A Lagrangian frame failed the isotropy test.
    NotIsotropic { residual: f64 },
    /// Mismatched dimensions between operands.
    DimensionMismatch { detail: String },
    /// A crossing form stayed degenerate after the refinement budget.
    IrregularCrossing { t: f64 },
    /// No admissible rotation parameter above the floor.
    EpsExhausted,
    /// The path handed to the block-triangular index formula had a
    /// non-vanishing upper-right block.
    NotBlockTriangular { residual: f64 },
    /// Input matrix is not linearly stable (spectrum off the unit circle
    /// or non-semisimple).
    NotLinearlyStable,
    /// The `A` block of a perturbation family must be invertible.
    SingularA { smin: f64 },
    /// The fiber Hessian `P(t)` is singular at `t`.
    SingularP { t: f64 },
    /// Euler–Lagrange validation needs scenario callbacks.
    MissingCallbacks,
    /// The scenario exposes no energy family `h ↦ T(h)`.
    FamilyUnavailable,
    /// The orbit is not non-null: `κ(t)` changes sign or touches zero.
    NotNonNull,
    /// The orbit data carries no period slope `T'(h)`.
    MissingTprime,
    /// The non-degeneracy threshold search ran out of budget.
    S0Exhausted,
    /// The generalized eigenvalue-one space of the monodromy is too small
    /// to carry an orbit cylinder.
    NoCylinderBlock { found_dim: usize },
    /// The conjugated path did not block-diagonalize within tolerance.
    SplitResidualTooLarge { residual: f64 },
    /// The parity ledger failed to balance; an upstream index is wrong.
    LedgerMismatch { detail: String },
    /// The homotopy-leg decomposition failed its internal consistency check.
    DecompositionMismatch { detail: String },
    /// Orbit data violated a structural invariant.
    InvalidOrbitData { detail: String },
    /// An upstream error wrapped with the pipeline stage name.
    Stage { stage: &'static str, source: alloc::boxed::Box<Error> },
}

impl Error {
    /// Wraps an error with the name of the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage { stage, source: alloc::boxed::Box::new(self) }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::OddDimension { dim } => write!(f, "matrix dimension {dim} is odd"),
            Error::NotSymplectic { residual } => {
                write!(f, "matrix is not symplectic (residual {residual:.3e})")
            }
            Error::AsymmetricInput { residual } => {
                write!(f, "matrix is not symmetric (residual {residual:.3e})")
            }
            Error::RankDeficientFrame { rank, expected } => {
                write!(f, "frame has rank {rank}, expected {expected}")
            }
            Error::NotIsotropic { residual } => {
                write!(f, "frame is not isotropic (residual {residual:.3e})")
            }
            Error::DimensionMismatch { detail } => write!(f, "dimension mismatch: {detail}"),
            Error::IrregularCrossing { t } => {
                write!(f, "irregular crossing at t = {t} after refinement budget")
            }
            Error::EpsExhausted => write!(f, "no admissible rotation parameter above 1e-12"),
            Error::NotBlockTriangular { residual } => {
                write!(f, "path is not lower block-triangular (residual {residual:.3e})")
            }
            Error::NotLinearlyStable => write!(f, "matrix is not linearly stable"),
            Error::SingularA { smin } => {
                write!(f, "block A is singular (smallest singular value {smin:.3e})")
            }
            Error::SingularP { t } => write!(f, "fiber Hessian P(t) singular at t = {t}"),
            Error::MissingCallbacks => write!(f, "no Lagrangian callbacks supplied"),
            Error::FamilyUnavailable => write!(f, "no orbit family available"),
            Error::NotNonNull => write!(f, "orbit is not non-null"),
            Error::MissingTprime => write!(f, "orbit data carries no T'(h)"),
            Error::S0Exhausted => write!(f, "threshold search exhausted beyond 2^20"),
            Error::NoCylinderBlock { found_dim } => {
                write!(f, "eigenvalue-1 generalized eigenspace has dimension {found_dim} < 2")
            }
            Error::SplitResidualTooLarge { residual } => {
                write!(f, "splitting off-block residual {residual:.3e} too large")
            }
            Error::LedgerMismatch { detail } => write!(f, "parity ledger mismatch: {detail}"),
            Error::DecompositionMismatch { detail } => {
                write!(f, "index-difference decomposition mismatch: {detail}")
            }
            Error::InvalidOrbitData { detail } => write!(f, "invalid orbit data: {detail}"),
            Error::Stage { stage, source } => write!(f, "{stage}: {source}"),
        }
    }
}

impl core::error::Error for Error {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        match self {
            Error::Stage { source, .. } => Some(source.as_ref()),
            _ => None,
        }
    }
}
