use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("chain of length {length} needs {required} basis states, budget is {budget}")]
    LengthTooLarge {
        length: usize,
        required: String,
        budget: u64,
    },
    #[error("chain length must be at least {min}, got {length}")]
    LengthTooSmall { length: usize, min: usize },
    #[error("operation requires an even chain length, got {0}")]
    OddLength(usize),
    #[error("operation requires periodic boundary conditions")]
    RequiresPbc,
    #[error("momentum index {k} out of range for L = {length}")]
    InvalidMomentum { k: usize, length: usize },
    #[error("inversion can only be resolved at k = 0 or k = L/2 (got k = {k}, L = {length})")]
    InversionIncompatible { k: usize, length: usize },
    #[error("sector k = {k} has a complex Hamiltonian (real sectors are k = 0 and k = L/2)")]
    RequiresRealSector { k: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("flipping site {site} maps configuration {config} outside the constrained basis")]
    FlipLeavesBasis { site: usize, config: String },
    #[error("unsupported model: {0}")]
    UnsupportedModel(String),
    #[error("energy {energy} outside the accessible window ({min}, {max})")]
    EnergyOutOfRange { energy: f64, min: f64, max: f64 },
    #[error("dimension {dim} exceeds the dense limit {limit}; use a symmetry sector or fragment blocks")]
    TooLargeForFullSpectrum { dim: usize, limit: usize },
    #[error("spectral evolution needs a dense block of dimension {dim}, limit is {limit}")]
    MethodInfeasible { dim: usize, limit: usize },
    #[error("the Z2 product state is not contained in the basis")]
    Z2NotInBasis,
    #[error("forward scattering annihilated the state at step {step} (expected {expected} steps)")]
    PrematureAnnihilation { step: usize, expected: usize },
    #[error("FSA vectors were not retained for this run")]
    VectorsNotRetained,
    #[error("configuration {0} is not in the basis")]
    NotInBasis(String),
    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),
    #[error("invalid spin string: {0}")]
    InvalidSpinString(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("eigensolver failed: {0}")]
    Eigen(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
