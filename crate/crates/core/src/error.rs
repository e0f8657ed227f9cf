use thiserror::Error;

/// Failures raised by the numerical pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not in U(2,1): membership residual {residual:e} exceeds {tol:e}")]
    NotUnitary { residual: f64, tol: f64 },

    #[error("matrix is singular")]
    Singular,

    #[error("matrix is not traceless: |trace| = {trace:e}")]
    NotTraceless { trace: f64 },

    #[error("eigenspace index {0} out of range 0..=5")]
    EigenIndex(usize),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("solution blew up in cell ({i}, {j}) at (u, v) = ({u}, {v})")]
    BlowUp { i: usize, j: usize, u: f64, v: f64 },

    #[error("spectral parameter must be nonzero")]
    ZeroLambda,

    #[error("spectral parameter {re}+{im}i must be real")]
    NonRealLambda { re: f64, im: f64 },

    #[error("mean curvature form is not closed: residual {residual:e} exceeds {tol:e}")]
    NotClosed { residual: f64, tol: f64 },

    #[error("frame drift {drift:e} exceeds {bound:e} at node ({i}, {j}), (u, v) = ({u}, {v})")]
    DriftExceeded { i: usize, j: usize, u: f64, v: f64, drift: f64, bound: f64 },

    #[error("singular locus: {0}")]
    SingularLocus(String),

    #[error("vector is not negative: <f, f> = {0}")]
    NotNegative(f64),

    #[error("induced metric is not positive: e^omega = {value} at node ({i}, {j})")]
    NonPositiveMetric { i: usize, j: usize, value: f64 },

    #[error("i/o failure: {0}")]
    Io(String),

    #[error("malformed input: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
