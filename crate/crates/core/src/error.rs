use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("duplicate basis label `{0}`")]
    DuplicateLabel(String),
    #[error("basis value for `{0}` is not a finite real")]
    NonFiniteValue(String),
    #[error("invalid basis declaration: {0}")]
    InvalidBasis(String),
    #[error(
        "frequency comparison unresolvable at the precision ceiling of {bits} bits (basis may be rationally dependent)"
    )]
    Unresolvable { bits: u32 },
    #[error("operands use different frequency bases")]
    BasisMismatch,
    #[error("frequency {0} is negative")]
    NegativeFrequency(String),
    #[error("parameter `{name}` = {value} is out of range")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("point has negative imaginary part {0}")]
    LowerHalfPlane(f64),
    #[error("non-finite sample at x = {0}")]
    NonFiniteSample(f64),
    #[error("generator {0} is not strictly positive")]
    NonPositiveGenerator(String),
    #[error("generator {0} is repeated")]
    DuplicateGenerator(String),
    #[error("semigroup has an irrational generator; no integer model")]
    IrrationalGenerator,
    #[error("membership search exceeded {nodes} nodes")]
    SearchLimit { nodes: u64 },
    #[error("frequency {0} is not in the semigroup")]
    NotInSemigroup(String),
    #[error("test polynomial uses untracked coordinate {0}")]
    UntrackedCoordinate(String),
    #[error("spectrum element {0} lies outside the semigroup")]
    SpectrumViolation(String),
    #[error("all constant terms vanish: the infimum over the half-plane is 0")]
    InfimumZero,
    #[error("corona condition not certified (lower bound {lower_bound})")]
    CoronaNotCertified { lower_bound: f64 },
    #[error("insufficient degree: best pre-correction residual bound {residual} is not below 1")]
    InsufficientDegree { residual: f64 },
    #[error("tolerance {tol} not reached; best residual bound {achieved}")]
    ToleranceNotReached { achieved: f64, tol: f64 },
    #[error("polynomial has zero constant term and is not invertible")]
    NotInvertible,
    #[error("contraction schedule exceeded {cap} stages")]
    StageCapExceeded { cap: usize },
    #[error("series tail bound {tail} exceeds tolerance; increase order")]
    IncreaseOrder { tail: f64 },
    #[error("unsupported matrix shape {rows}x{cols}: only n x (n-1) is constructive")]
    UnsupportedShape { rows: usize, cols: usize },
    #[error("matrix shape mismatch: {0}")]
    ShapeMismatch(String),
}

impl Error {
    /// Stable machine-readable identifier.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DuplicateLabel(_) => "duplicate-label",
            Error::NonFiniteValue(_) => "non-finite-value",
            Error::InvalidBasis(_) => "invalid-basis",
            Error::Unresolvable { .. } => "unresolvable",
            Error::BasisMismatch => "basis-mismatch",
            Error::NegativeFrequency(_) => "negative-frequency",
            Error::OutOfRange { .. } => "out-of-range",
            Error::LowerHalfPlane(_) => "lower-half-plane",
            Error::NonFiniteSample(_) => "non-finite-sample",
            Error::NonPositiveGenerator(_) => "non-positive-generator",
            Error::DuplicateGenerator(_) => "duplicate-generator",
            Error::IrrationalGenerator => "irrational-generator",
            Error::SearchLimit { .. } => "search-limit",
            Error::NotInSemigroup(_) => "not-in-semigroup",
            Error::UntrackedCoordinate(_) => "untracked-coordinate",
            Error::SpectrumViolation(_) => "spectrum-violation",
            Error::InfimumZero => "infimum-zero",
            Error::CoronaNotCertified { .. } => "corona-not-certified",
            Error::InsufficientDegree { .. } => "insufficient-degree",
            Error::ToleranceNotReached { .. } => "tolerance-not-reached",
            Error::NotInvertible => "not-invertible",
            Error::StageCapExceeded { .. } => "stage-cap",
            Error::IncreaseOrder { .. } => "increase-order",
            Error::UnsupportedShape { .. } => "unsupported-shape",
            Error::ShapeMismatch(_) => "shape-mismatch",
        }
    }
}
