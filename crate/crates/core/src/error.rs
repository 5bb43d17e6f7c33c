use thiserror::Error;

/// Errors raised by the library. Verified property failures are not errors:
/// they are reported as findings inside the respective report types.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("column {column} out of range at level {level} (width 2^{level})")]
    ColumnOutOfRange { level: u32, column: u64 },

    #[error("horizon {horizon} exceeds the supported maximum {max}")]
    HorizonTooLarge { horizon: u32, max: u32 },

    #[error("level {level} is outside horizon {horizon}")]
    LevelOutsideHorizon { level: u32, horizon: u32 },

    #[error("invalid tail rule: {0}")]
    InvalidTail(String),

    #[error("level {level} is saturated")]
    Saturated { level: u32 },

    #[error("path value {value} at level {level} is not below 2^{level}")]
    PathOutOfRange { level: u32, value: u64 },

    #[error("natural number {0} has no preimage under the level enumeration")]
    NoPreimage(u64),

    #[error("depth {depth} exceeds the configured cap {cap}")]
    DepthCap { depth: u32, cap: u32 },

    #[error("generator slalom has a rule tail; exact decision needs an empty tail")]
    RuleTail,

    #[error("malformed window: {0}")]
    MalformedWindow(String),

    #[error("meet is not infinite")]
    FiniteMeet,

    #[error("too many negated literals: {count} (cap {cap})")]
    TooManyNegatives { count: usize, cap: usize },

    #[error("level factor is undefined at level 0")]
    LevelZero,

    #[error("slalom is not in W: {0}")]
    NotInW(String),

    #[error("slalom is not in Z: {0}")]
    NotInZ(String),

    #[error("budget violation at level {level}: {detail}")]
    Budget { level: u32, detail: String },

    #[error("term is zero in the quotient: {0}")]
    ZeroTerm(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("non-canonical condition: {0}")]
    NonCanonical(String),

    #[error("decidedness shortcut disagrees with the extension oracle at level {level}: {detail}")]
    ShortcutMismatch { level: u32, detail: String },

    #[error("search space too large: {0}")]
    SearchTooLarge(String),

    #[error("universe of size {size} is too small: {detail}")]
    UniverseTooSmall { size: u64, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;
