use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid precision context: {0}")]
    InvalidPrecision(String),

    #[error(
        "value not recognized: residual 2^{residual_log2:.1} exceeds threshold 2^-{guard_bits}"
    )]
    NotRecognized { residual_log2: f64, guard_bits: u32 },

    #[error("precision exhausted at {max_bits} bits")]
    PrecisionExhausted { max_bits: u32 },

    #[error("recognition failed: {0}")]
    RecognitionFailed(String),

    #[error("discriminant {0} is not fundamental")]
    NotFundamental(i64),

    #[error("bad discriminant {0}: must be negative and congruent to 0 or 1 mod 4")]
    BadDiscriminant(i64),

    #[error(
        "relation denominator vanishes at this point (j = 0 or 1728); use the weierstrass route"
    )]
    SingularRelation,

    #[error("unsupported level {level} for {group}")]
    UnsupportedLevel { group: &'static str, level: u64 },

    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),

    #[error("kernel matrix {0:?} is not in W_(N,K)")]
    KernelNotInGroup([i64; 4]),

    #[error("matrix {0:?} is not unimodular modulo {1}")]
    NotUnimodular([i64; 4], i64),

    #[error("class number of {disc} is {class_number}, orbit computations need class number 1")]
    ClassNumberNotOne { disc: i64, class_number: usize },

    #[error("hypothesis failed: {0}")]
    HypothesisFailed(String),

    #[error("verification failed: {0}")]
    VerificationFailed(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
