use thiserror::Error;

/// Errors produced by the kernels, Orlicz, signal, operator and analysis layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown {kind} name `{name}`")]
    UnknownName { kind: &'static str, name: String },

    #[error("kernel `{kernel}` declares neither a support nor a decay order; lattice suprema cannot be truncated")]
    MissingDecayInfo { kernel: String },

    #[error("kernel `{kernel}` is not admissible on this domain (lower-bound constant {a_chi:e})")]
    InadmissibleKernel { kernel: String, a_chi: f64 },

    #[error("index set J_n is empty for n = {n} on [{a}, {b}]")]
    EmptyIndexSet { n: u64, a: f64, b: f64 },

    #[error("signal `{signal}` has no compact support; the real-line operator needs one")]
    UnboundedSupport { signal: String },

    #[error("x = {x} lies outside the domain")]
    OutsideDomain { x: f64 },

    #[error("operator denominator {value:e} at x = {x} is not positive")]
    DegenerateDenominator { x: f64, value: f64 },

    #[error("signal `{signal}` is not declared non-negative; use the shift wrapper")]
    NegativeSignal { signal: String },

    #[error("lower bound of signal `{signal}` is unknown")]
    UnknownLowerBound { signal: String },

    #[error("quadrature did not converge: estimate {estimate:e}, error estimate {error:e}")]
    QuadratureNotConverged { estimate: f64, error: f64 },

    #[error("modular is infinite for every tested scale; the function is not in the Orlicz space on this window")]
    NotInOrliczSpace,

    #[error("an explicit integration window is required for signal `{signal}`")]
    WindowRequired { signal: String },

    #[error("signals live on different domains")]
    DomainMismatch,

    #[error("linear series does not converge: {0}")]
    NonConvergentSeries(String),

    #[error("moment of order {beta} diverges for kernel `{kernel}`")]
    DivergentMoment { kernel: String, beta: f64 },

    #[error("CSV error at record {record}: {message}")]
    Csv { record: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
