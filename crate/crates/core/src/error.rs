use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("gamma pole at or too close to z = {re} + {im}i")]
    Pole { re: f64, im: f64 },

    #[error("nome outside the unit disk: |{which}| = {modulus}")]
    NomeDomain { which: char, modulus: f64 },

    #[error("argument outside the strip of the series representation: |Im z| = {im_z} >= {eta}")]
    Strip { im_z: f64, eta: f64 },

    #[error("contour evaluation unreliable here: {0}")]
    Contour(String),

    #[error("series/quadrature failed to converge: {0}")]
    Convergence(String),

    #[error("budget exhausted: best value {value:e} with error estimate {error_estimate:e}")]
    BudgetExhausted { value: f64, error_estimate: f64 },

    #[error("tail increments are not decaying (last increment {last:e} vs previous {previous:e})")]
    TailNotDecaying { last: f64, previous: f64 },

    #[error("spin kind does not match the model ({0})")]
    KindMismatch(String),

    #[error("weight acquired a spurious imaginary part: |Im log W| = {im_log:e} (tolerance {tol:e})")]
    RealityViolation { im_log: f64, tol: f64 },

    #[error("too many internal sites for exact contraction: {0} (max 4)")]
    TooManyInternalSites(usize),

    #[error("ergodicity warning: {0}")]
    Ergodicity(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
