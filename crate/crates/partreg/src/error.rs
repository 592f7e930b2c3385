//! Crate-wide error type.
//!
//! Everything that can go wrong across the crate is a variant of [`Error`].
//! Two kinds of "failure" are deliberately *not* errors:
//!
//! * an operation that ran out of search room without refuting anything
//!   reports an `Inconclusive` outcome variant on its result type, and
//! * a property that is simply false (e.g. "this matrix has no columns-property
//!   certificate") is an `Ok(None)` / `Ok(false)`-style answer.
//!
//! Errors are reserved for violated preconditions, malformed input, exceeded
//! resource caps and internal invariant breaks.

use thiserror::Error;

/// Crate-wide error enumeration.
#[derive(Debug, Error)]
pub enum Error {
    /// A vector or matrix dimension did not match its context.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A rational was constructed with denominator zero.
    #[error("zero denominator in rational")]
    ZeroDenominator,

    /// Division by an exact zero.
    #[error("division by zero")]
    DivisionByZero,

    /// Text could not be parsed; positions are 1-based.
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    /// A system must contain at least one equation.
    #[error("empty system: no equations")]
    EmptySystem,

    /// Equations must mention at least one variable with nonzero coefficient.
    #[error("equation {row} has no nonzero coefficient")]
    ZeroRow { row: usize },

    /// Every declared variable must appear with a nonzero coefficient somewhere.
    #[error("variable {var} has zero coefficient in every equation")]
    ZeroColumn { var: String },

    /// Systems are homogeneous; constant terms must cancel to zero.
    #[error("equation {row} has nonzero constant term {value}")]
    NonHomogeneous { row: usize, value: String },

    /// Variable names within one system must be unique.
    #[error("duplicate variable {var}")]
    DuplicateVariable { var: String },

    /// Solutions range over nonzero values only.
    #[error("assignment gives {var} the value zero; solutions use nonzero values")]
    ZeroValue { var: String },

    /// An assignment did not cover a variable the system mentions.
    #[error("assignment is missing variable {var}")]
    MissingVariable { var: String },

    /// Coefficient sequences must be nonzero at every index used.
    #[error("coefficient c({n}) is zero")]
    ZeroCoefficient { n: usize },

    /// A custom coefficient sequence was asked for an index beyond its length.
    #[error("coefficient index {n} out of range: sequence has {len} entries")]
    CoefficientOutOfRange { n: usize, len: usize },

    /// Generated families need at least one equation.
    #[error("family size n must be at least 1")]
    EmptyFamily,

    /// Window sets at different scales cannot be combined directly.
    #[error("scale mismatch: 2^-{a} vs 2^-{b}")]
    ScaleMismatch { a: u32, b: u32 },

    /// Window bounds must satisfy lo <= hi (and fit the operation's needs).
    #[error("invalid window [{lo}, {hi}]")]
    BadWindow { lo: i64, hi: i64 },

    /// An element fell outside a window it was required to be inside.
    #[error("element {t} outside window [{lo}, {hi}]")]
    OutOfWindow { t: i64, lo: i64, hi: i64 },

    /// The operation needs a nonempty positive part of the window.
    #[error("window has no positive part, or the set is empty on it")]
    EmptyWindow,

    /// The certified region shrank to nothing; the window was too small.
    #[error("certified region is empty after {context}; rerun with a larger window")]
    CertifiedEmpty { context: String },

    /// A named precondition of an operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A resource/search cap was exceeded; the message names the cap.
    #[error("cap exceeded: {0}")]
    CapExceeded(String),

    /// A column index referenced a column that does not exist.
    #[error("column index {idx} out of range for {cols} columns")]
    ColumnOutOfRange { idx: usize, cols: usize },

    /// A verification found a specific violated invariant; the message names it.
    #[error("invariant violated: {0}")]
    Invariant(String),

    /// Fixed-width arithmetic would have overflowed; the message names the site.
    #[error("arithmetic overflow in {0}")]
    Overflow(String),

    /// The solver recursed deeper than the colour count permits.
    #[error("recursion depth {depth} exceeds colour count {r}")]
    RecursionDepth { depth: u32, r: u8 },

    /// An artifact was structurally valid JSON but not a recognized artifact.
    #[error("malformed artifact: {0}")]
    Artifact(String),

    /// Underlying I/O failure (file-based colourings, artifact files).
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Underlying JSON (de)serialization failure.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
