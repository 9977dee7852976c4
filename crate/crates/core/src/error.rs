use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("signature mismatch: Cl(0,{left}) vs Cl(0,{right})")]
    SignatureMismatch { left: usize, right: usize },

    #[error("unsupported number of generators m = {m} (allowed 1..={max})")]
    UnsupportedSignature { m: usize, max: usize },

    #[error("paravector has zero modulus")]
    ZeroParavector,

    #[error("value is not a paravector (off-subspace mass {residual:e})")]
    NotParavector { residual: f64 },

    #[error("denominator cz+d is singular at the evaluation point (|cz+d| = {modulus:e})")]
    SingularDenominator { modulus: f64 },

    #[error("multivector is not invertible through its Clifford conjugate (non-scalar norm {residual:e})")]
    NotInvertible { residual: f64 },

    #[error("finite-difference step {h:e} outside the admissible range [1e-6, 1e-2]")]
    StepOutOfRange { h: f64 },

    #[error("evaluation point {point:?} lies outside the admissible region")]
    OutsideDomain { point: Vec<f64> },

    #[error("evaluation at the pole {pole:?}")]
    Pole { pole: Vec<f64> },

    #[error("nearest boundary point is not unique (distance {distance:e})")]
    NonUniqueMinimizer { distance: f64 },

    #[error("rank deficiency: {dropped} generators dropped, budget {budget}")]
    RankDeficient { dropped: usize, budget: usize },

    #[error("Clifford-valued norm has a non-scalar part {residual:e}")]
    NonScalarNorm { residual: f64 },

    #[error("candidate family is empty")]
    EmptyFamily,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("kernel cache format: {0}")]
    CacheFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
