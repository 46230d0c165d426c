use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QemError {
    #[error("qubit count mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("dimension overflow: {n} qubits exceeds the limit of {max}")]
    DimensionOverflow { n: usize, max: usize },
    #[error("operator is not Hermitian")]
    NotHermitian,
    #[error("channel arity {arity} does not match {sites} target sites")]
    ArityMismatch { arity: usize, sites: usize },
    #[error("site {site} out of range for {n} qubits")]
    SiteOutOfRange { site: usize, n: usize },
    #[error("duplicate site {0} in gate")]
    DuplicateSite(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("pauli string has empty support")]
    EmptySupport,
    #[error("unsupported lattice size L = {0}")]
    UnsupportedLattice(usize),
    #[error("excitation operator has complex coefficients")]
    ComplexExcitation,
    #[error("product formula order {0} is not supported (use 1 or an even order)")]
    UnsupportedOrder(usize),
    #[error("odd product-formula order cannot be reversed")]
    OddOrderReversal,
    #[error("hamiltonian contains an identity term; shift it first")]
    IdentityTerm,
    #[error("no reversal gate found for term group")]
    GroupingFailure,
    #[error("echo verification circuits need an even number of Trotter steps")]
    OddStepCount,
    #[error("estimate undefined: {0}")]
    UndefinedEstimate(String),
    #[error("singular confusion matrix on qubit {0}")]
    SingularConfusion(usize),
    #[error("gate {0} cannot be twirled")]
    NotTwirlable(String),
    #[error("missing moment part ({0}, {1})")]
    MissingPart(usize, usize),
    #[error("aliasing bound {0:e} exceeds tolerance")]
    Aliasing(f64),
    #[error("zero sigma at index {0}")]
    ZeroSigma(usize),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for QemError {
    fn from(e: std::io::Error) -> Self {
        QemError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, QemError>;
