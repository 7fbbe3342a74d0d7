use thiserror::Error;

/// Every failure mode of the library.
///
/// Variants carry just enough context to explain *why* an evaluation was
/// refused; none of them are recoverable by retrying with the same input.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("modulus q = {q} is outside the supported range [{min}, {max}]")]
    UnsupportedModulus { q: f64, min: f64, max: f64 },

    #[error("product or series does not converge (nome p = {p})")]
    NonConvergent { p: f64 },

    #[error("theta function evaluated at z = 0")]
    ZeroArgument,

    #[error("argument {re}+{im}i is a zero of theta; logarithmic derivative has a pole")]
    PoleAtZero { re: f64, im: f64 },

    #[error("argument {re}+{im}i lies on a pole of the Weierstrass function")]
    PoleAtLattice { re: f64, im: f64 },

    #[error("argument {re}+{im}i hits an integer power of q (pole of the kernel)")]
    PoleAtPowerOfQ { re: f64, im: f64 },

    #[error("x = {x} is outside the branch interval [{lo}, {hi}]")]
    OutOfBranch { x: f64, lo: f64, hi: f64 },

    #[error("point with modulus {modulus} is outside the annulus ({inner}, {outer})")]
    OutOfAnnulus { modulus: f64, inner: f64, outer: f64 },

    #[error("point with modulus {modulus} is outside the unit disk")]
    OutOfDisk { modulus: f64 },

    #[error("argument {value} is outside the admissible range ({lo}, {hi})")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("anchor {index} is degenerate: conditional variance {variance:e}")]
    DegenerateAnchor { index: usize, variance: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("truncation at {modes} modes leaves a tail of {tail:e} at radius {radius}")]
    TruncationInsufficient { modes: usize, tail: f64, radius: f64 },

    #[error("root near {re}+{im}i did not converge (residual {residual:e})")]
    NonConvergedRoot { re: f64, im: f64, residual: f64 },

    #[error("only {events} joint events observed; at least {required} required")]
    InsufficientStatistics { events: u64, required: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
