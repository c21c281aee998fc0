use thiserror::Error;

/// Errors surfaced by the arithmetic and experiment layers.
///
/// Everything here is a boundary condition or malformed input; internal
/// invariant violations panic instead of returning a variant.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not an odd prime below 2^31")]
    NotPrime(u64),

    #[error("extension degree {0} outside supported range 1..=24")]
    DegreeOutOfRange(usize),

    #[error("element of F_{{{actual}}} used where F_{{{expected}}} was required")]
    FieldMismatch { expected: String, actual: String },

    #[error("F_{{p^{small}}} does not embed in F_{{p^{large}}}")]
    NoEmbedding { small: usize, large: usize },

    #[error("field order {0} exceeds the exhaustive-enumeration bound 10^7")]
    FieldTooLarge(String),

    #[error("curve is singular: 4a^3 + 27b^2 = 0")]
    SingularCurve,

    #[error("characteristic {0} below 5 is not supported for curves")]
    SmallCharacteristic(u64),

    #[error("points lie on different curves")]
    MixedCurves,

    #[error("point is not on the curve")]
    PointOffCurve,

    #[error("torsion level {0} must be at least 2")]
    LevelTooSmall(u64),

    #[error("torsion level {n} is divisible by the characteristic {p}")]
    LevelDivisibleByP { n: u64, p: u64 },

    #[error("torsion field for level {n} needs absolute degree beyond {bound}")]
    TorsionFieldTooLarge { n: u64, bound: usize },

    #[error("kernel order {0} is divisible by the characteristic")]
    KernelOrderDivisibleByP(u64),

    #[error("kernel generator does not have prime order (order {0})")]
    KernelNotPrimeOrder(u64),

    #[error("denominator vanished at a point outside the kernel")]
    DenominatorOffKernel,

    #[error("isogeny codomain is not defined over the requested subfield F_{{p^{0}}}")]
    CodomainNotRational(usize),

    #[error("field-of-definition oracles disagree at level {level}: coefficient test {coeff}, commutation test {commutation}")]
    OracleMismatch { level: u64, coeff: bool, commutation: bool },

    #[error("no probe level available for commutation testing (degree {degree}, p = {p})")]
    NoProbeLevel { degree: u64, p: u64 },

    #[error("quaternion parameter p = {0} must be a prime congruent to 3 mod 4")]
    BadQuaternionPrime(u64),

    #[error("quaternion has non-integral coordinates; torsion reduction needs integral ones")]
    NonIntegralQuaternion,

    #[error("instance is malformed: {0}")]
    BadInstance(String),

    #[error("unsupported instance shape: {0}")]
    Unsupported(String),

    #[error("sweep configuration invalid: {0}")]
    BadConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
