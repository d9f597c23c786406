use thiserror::Error;

/// Errors shared by the expression kernel and the higher layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,

    #[error("denominator vanishes under substitution: {0}")]
    DenominatorVanishes(String),

    #[error("denominator vanishes identically on the cross-section: {0}")]
    DenominatorVanishesOnSection(String),

    #[error("jet order {0} exceeds the configured bound {1}")]
    JetOrderExceeded(u32, u32),

    #[error("duplicate radical name `{0}`")]
    DuplicateRadical(String),

    #[error("radical base for `{0}` is invalid: {1}")]
    BadRadicalBase(String, String),

    #[error("value {0} is inconsistent with radical `{1}` at the given point")]
    InconsistentRadical(String, String),

    #[error("no exact {1}-th root for radical `{0}` at the given point")]
    NoExactRoot(String, u32),

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("cannot differentiate with respect to radical `{0}`")]
    PartialByRadical(String),

    #[error("expression is not polynomial in the requested sense: {0}")]
    NotPolynomial(String),

    #[error("linear system is singular: {0}")]
    SingularSystem(String),

    #[error("symbol matrix is degenerate: {0}")]
    DegenerateSymbolMatrix(String),

    #[error("collect_operator left a nonzero remainder: {0}")]
    RemainderNonzero(String),

    #[error("expression is not invariant: generator {0} at sample {1}")]
    NotInvariant(usize, String),

    #[error("section dictionary is incomplete: {0}")]
    DictionaryIncomplete(String),

    #[error("geometry `{0}` not found")]
    GeometryNotFound(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("sample generation exhausted after {0} attempts")]
    SamplesExhausted(usize),

    #[error("verification failed: {0}")]
    VerificationFailed(String),

    #[error("radical-valued result where a rational one is required: {0}")]
    IrrationalResidue(String),

    #[error("equation is not linear in its top derivative: {0}")]
    NotSolvable(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
